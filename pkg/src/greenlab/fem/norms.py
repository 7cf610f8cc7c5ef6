"""Discrete norms, distribution functions and boundary inequality ratios.

All integrals use cell-midpoint quadrature: one sample per cell, at the
centre, weighted by the cell volume (or by the part of it inside a ball).
Vector-valued quantities are measured with the Euclidean norm over
components (Frobenius norm for gradients).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConditionSViolatedError, DomainError, PreconditionError
from ..grid import ball_cell_weights, outside_fraction
from .field import CellSamples, DiscreteField


def as_samples(obj, region=None, gradients=True):
    if isinstance(obj, CellSamples):
        if region is None:
            return obj
        return obj.restrict(np.asarray(region(obj.points), dtype=bool))
    if isinstance(obj, DiscreteField):
        return obj.cell_samples(region, gradients=gradients)
    raise TypeError(f"expected DiscreteField or CellSamples, got {type(obj).__name__}")


def _nonempty(s):
    if len(s.volumes) == 0 or s.volumes.sum() <= 0:
        raise DomainError("empty region")
    return s


def magnitudes(s, kind="value"):
    if kind == "value":
        return np.sqrt(np.sum(s.values ** 2, axis=1))
    if kind == "gradient":
        if s.grads is None:
            raise PreconditionError("samples carry no gradients")
        return np.sqrt(np.sum(s.grads ** 2, axis=(1, 2)))
    raise ValueError(f"unknown kind {kind!r}")


def lp_norm(obj, p, region=None):
    if not 1 <= p < np.inf:
        raise PreconditionError("p must lie in [1, inf)")
    s = _nonempty(as_samples(obj, region, gradients=False))
    return float(np.sum(s.volumes * magnitudes(s) ** p) ** (1.0 / p))


def grad_l2(obj, region=None):
    s = _nonempty(as_samples(obj, region))
    return float(np.sqrt(np.sum(s.volumes * magnitudes(s, "gradient") ** 2)))


def grad_lp(obj, p, region=None):
    s = _nonempty(as_samples(obj, region))
    return float(np.sum(s.volumes * magnitudes(s, "gradient") ** p) ** (1.0 / p))


def y12_norm(obj, region=None):
    """``||u||_{L^6} + ||Du||_{L^2}`` (the critical Sobolev exponent for n = 3)."""
    return lp_norm(obj, 6, region) + grad_l2(obj, region)


def holder_seminorm(f, mu, region=None, max_pairs=2_000_000, seed=0):
    """``max |u(x) - u(z)| / |x - z|^mu`` over node pairs of the region.

    All pairs are used when there are at most ``max_pairs`` of them;
    otherwise a seeded uniform sample of ``max_pairs`` pairs.
    """
    if not 0 < mu <= 1:
        raise PreconditionError("mu must lie in (0, 1]")
    pts = f.grid.node_points()
    keep = f.mask.closure_nodes.copy()
    if region is not None:
        keep &= np.asarray(region(pts), dtype=bool)
    x = pts[keep]
    u = f.values[keep]
    m = len(x)
    if m < 2:
        raise DomainError("region has fewer than two nodes")
    if m * (m - 1) // 2 <= max_pairs:
        i, j = np.triu_indices(m, k=1)
    else:
        rng = np.random.default_rng(seed)
        i = rng.integers(0, m, max_pairs)
        j = rng.integers(0, m, max_pairs)
        ok = i != j
        i, j = i[ok], j[ok]
    best = 0.0
    for start in range(0, len(i), 500_000):
        a, b = i[start:start + 500_000], j[start:start + 500_000]
        du = np.sqrt(np.sum((u[a] - u[b]) ** 2, axis=1))
        dx = np.sqrt(np.sum((x[a] - x[b]) ** 2, axis=1))
        best = max(best, float(np.max(du / dx ** mu)))
    return best


@dataclass(frozen=True)
class DistributionFunction:
    thresholds: np.ndarray
    measures: np.ndarray
    region_measure: float


def distribution_function(obj, thresholds, region=None, kind="value"):
    """``t -> |{x in region : |f(x)| > t}|`` by cell quadrature."""
    t = np.asarray(thresholds, dtype=float)
    if t.ndim != 1 or t.size == 0 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise PreconditionError("thresholds must be positive and strictly increasing")
    s = _nonempty(as_samples(obj, region, gradients=(kind == "gradient")))
    mag = magnitudes(s, kind)
    order = np.argsort(mag)
    sorted_mag = mag[order]
    tail = np.concatenate([np.cumsum(s.volumes[order][::-1])[::-1], [0.0]])
    total = float(s.volumes.sum())
    tail = np.minimum(tail, total)
    pos = np.searchsorted(sorted_mag, t, side="right")
    return DistributionFunction(thresholds=t, measures=tail[pos], region_measure=total)


def ball_samples(f, center, R, sub=4):
    """Cell samples of ``f`` over ``Omega_R(center)`` with partial-cell volumes."""
    idx, vol = ball_cell_weights(f.mask, center, R, sub)
    if len(idx) == 0:
        raise DomainError("Omega_R(center) is empty")
    vals = f.cell_values()[idx[:, 0], idx[:, 1], idx[:, 2]]
    grads = f.cell_gradients()[idx[:, 0], idx[:, 1], idx[:, 2]]
    pts = np.asarray(f.grid.lo) + (idx + 0.5) * f.grid.h
    return CellSamples(pts, vol, vals, grads)


def exterior_density(mask, center, R, n=24):
    """Deterministic ``|B_R(center) minus Omega| / |B_R|`` on a midpoint lattice."""
    t = (np.arange(n) + 0.5) / n * 2 - 1
    p = np.stack(np.meshgrid(t, t, t, indexing="ij"), axis=-1).reshape(-1, 3)
    p = p[np.sum(p ** 2, axis=1) < 1.0]
    return float(np.mean(outside_fraction(mask, np.asarray(center) + R * p)))


def boundary_poincare_ratio(f, center, R):
    """``||u||_{L2(Omega_R)} / (R ||Du||_{L2(Omega_R)})`` for ``u`` vanishing on the boundary part.

    Raises :class:`ConditionSViolatedError` when the ball sees no exterior.
    """
    theta = exterior_density(f.mask, center, R)
    if theta <= 0:
        raise ConditionSViolatedError(f"B_{R:g}({tuple(center)}) has no exterior part (theta = 0)", theta=0.0)
    s = ball_samples(f, center, R)
    du = np.sqrt(np.sum(s.volumes * magnitudes(s, "gradient") ** 2))
    if du <= 0:
        raise PreconditionError("field has zero gradient on Omega_R")
    u = np.sqrt(np.sum(s.volumes * magnitudes(s) ** 2))
    return float(u / (R * du))


def caccioppoli_ratio(f, center, r, R):
    """``(R - r) ||Du||_{L2(Omega_r)} / ||u||_{L2(Omega_R)}``."""
    if not 0 < r < R:
        raise PreconditionError("need 0 < r < R")
    inner = ball_samples(f, center, r)
    outer = ball_samples(f, center, R)
    du = np.sqrt(np.sum(inner.volumes * magnitudes(inner, "gradient") ** 2))
    u = np.sqrt(np.sum(outer.volumes * magnitudes(outer) ** 2))
    if u <= 0:
        raise PreconditionError("field vanishes on Omega_R")
    return float((R - r) * du / u)
