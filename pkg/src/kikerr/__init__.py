"""Design and analysis toolkit for nanowire kinetic-inductance Kerr resonators."""

__version__ = "0.1.0"
