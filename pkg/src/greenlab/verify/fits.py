"""Least-squares power-law fits in log-log coordinates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateDataError, PreconditionError


@dataclass(frozen=True)
class FitResult:
    exponent: float
    intercept: float
    r_squared: float
    window: tuple
    points: int
    data: tuple = ()

    def predict(self, s):
        return np.exp(self.intercept) * np.asarray(s, dtype=float) ** self.exponent


def fit_power_law(points):
    """Fit ``v = exp(intercept) * s**exponent`` to ``(s, v)`` pairs.

    ``r_squared`` is one when the residuals vanish, including the constant
    case where the total sum of squares is zero.
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) < 3:
        raise DegenerateDataError("need at least 3 (s, v) points")
    s, v = arr[:, 0], arr[:, 1]
    if np.any(s <= 0) or np.any(v <= 0) or not np.all(np.isfinite(arr)):
        raise PreconditionError("power-law fit needs positive finite data")
    if len(np.unique(s)) < len(s):
        raise DegenerateDataError("abscissae must be distinct")
    x, y = np.log(s), np.log(v)
    X = np.stack([x, np.ones_like(x)], axis=1)
    (slope, icept), *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - (slope * x + icept)
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot <= 1e-300:
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    order = np.argsort(s)
    return FitResult(exponent=float(slope), intercept=float(icept), r_squared=float(r2),
                     window=(float(s.min()), float(s.max())), points=len(s),
                     data=tuple((float(a), float(b)) for a, b in arr[order]))
