"""Physical constants and lab-unit conversions.

Everything inside the package is SI. The helpers here convert the units
that show up in lab notebooks and tables (MA/cm^2, pH/sq, 1/(eV um^3), kHz)
at the boundary.
"""

import math

from scipy import constants as _c

hbar = _c.hbar
h = _c.h
k_B = _c.k
e = _c.e
epsilon_0 = _c.epsilon_0
c = _c.c

TWO_PI = 2.0 * math.pi

# multiplicative factors: value_in_lab_units * FACTOR -> SI
NM = 1e-9
UM = 1e-6
UM3 = 1e-18
FF = 1e-15
PF = 1e-12
PH = 1e-12
NH = 1e-9
KHZ = 1e3
MHZ = 1e6
GHZ = 1e9
MA_PER_CM2 = 1e6 / 1e-4  # 1 MA/cm^2 = 1e10 A/m^2
UOHM_CM = 1e-8  # 1 uOhm cm = 1e-8 Ohm m
PER_EV_UM3 = 1.0 / (_c.e * 1e-18)  # 1/(eV um^3) -> 1/(J m^3)
EV = _c.e
MEV = 1e-3 * _c.e


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def linear_to_db(x):
    return 10.0 * math.log10(x)


def dbm_to_watt(dbm):
    return 1e-3 * 10.0 ** (dbm / 10.0)


def watt_to_dbm(p):
    return 10.0 * math.log10(p / 1e-3)
