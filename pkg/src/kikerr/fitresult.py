"""Generic container for parameter estimates."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class FitResult:
    """Parameter estimates with one-sigma uncertainties.

    ``params`` and ``errors`` share keys. ``residual_norm`` is the 2-norm of
    the residual vector in the space the fit was performed in. ``extras``
    holds model-specific diagnostics and flags.
    """

    params: dict
    errors: dict
    residual_norm: float
    dof: int
    extras: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.params[key]

    def error(self, key):
        return self.errors.get(key, float("nan"))

    def to_dict(self):
        out = {
            "parameters": {
                k: {"value": _plain(v), "uncertainty": _plain(self.errors.get(k, float("nan")))}
                for k, v in self.params.items()
            },
            "residual_norm": _plain(self.residual_norm),
            "dof": int(self.dof),
        }
        if self.extras:
            out["extras"] = {k: _plain(v) for k, v in self.extras.items()}
        return out


def _plain(v):
    """Make numpy scalars/arrays JSON-friendly."""
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def covariance_from_jacobian(jac, residuals, n_params):
    """Scaled covariance matrix ``s^2 (J^T J)^-1`` from a least-squares solution."""
    jac = np.asarray(jac, dtype=float)
    dof = max(len(residuals) - n_params, 1)
    s2 = float(np.sum(np.asarray(residuals) ** 2)) / dof
    try:
        cov = np.linalg.pinv(jac.T @ jac) * s2
    except np.linalg.LinAlgError:
        cov = np.full((n_params, n_params), np.nan)
    return cov
