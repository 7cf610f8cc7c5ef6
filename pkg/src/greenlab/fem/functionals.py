"""Linear functionals on discrete fields, stored as nodal weight arrays."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, PreconditionError
from ..grid import ball_cell_weights
from .element import CORNERS, GAUSS_POINTS, GAUSS_WEIGHTS, shape_values


@dataclass(frozen=True, eq=False)
class LinearFunctional:
    """``phi -> sum(weights * phi.values)``; ``weights`` has the nodal field shape."""

    mask: object
    weights: np.ndarray
    info: dict = field(default_factory=dict)

    def __call__(self, f):
        return float(np.sum(self.weights * f.values))

    def vector(self):
        return self.weights.ravel()

    @property
    def N(self):
        return self.weights.shape[-1]


def _scatter_corners(mask, N, k, idx, cw):
    w = np.zeros(mask.grid.node_shape + (N,))
    for a, (ax, ay, az) in enumerate(CORNERS):
        np.add.at(w, (idx[:, 0] + ax, idx[:, 1] + ay, idx[:, 2] + az, k), cw[:, a])
    return w


def averaged_indicator_rhs(mask, y, rho, k, N=1, sub=8, floor_cells=2.0):
    """``phi -> mean of phi^k over Omega_rho(y)``.

    Cells wholly inside the ball use exact Q1 integrals; straddling cells use
    ``sub**3`` midpoint subsamples.  The same weights give ``|Omega_rho(y)|``,
    so constants are reproduced exactly.
    """
    g = mask.grid
    if rho < floor_cells * float(np.max(g.h)) * (1 - 1e-12):
        raise PreconditionError(f"rho={rho:g} below the resolvability floor {floor_cells:g}h")
    if not 0 <= k < N:
        raise PreconditionError(f"component k={k} out of range for N={N}")
    if not mask.in_closure(np.asarray(y, dtype=float)):
        raise DomainError(f"pole {tuple(y)} outside the domain")
    idx, vol, cw = ball_cell_weights(mask, y, rho, sub, corners=True)
    total = float(cw.sum())
    if total <= 0:
        raise DomainError("Omega_rho(y) is empty")
    w = _scatter_corners(mask, N, k, idx, cw / total)
    return LinearFunctional(mask, w, {"kind": "average", "y": tuple(map(float, y)), "rho": rho,
                                      "k": k, "measure": total})


def ball_average(mask, values, center, radius, sub=8):
    """Mean of a nodal array ``nodes... + (N,)`` over ``Omega_radius(center)``.

    Same weights as :func:`averaged_indicator_rhs` without forming a dense
    functional, for use in tight loops.
    """
    idx, _, cw = ball_cell_weights(mask, center, radius, sub, corners=True)
    total = float(cw.sum())
    if total <= 0:
        raise DomainError("Omega_r(center) is empty")
    acc = np.zeros(values.shape[-1])
    for a, (ax, ay, az) in enumerate(CORNERS):
        acc += cw[:, a] @ values[idx[:, 0] + ax, idx[:, 1] + ay, idx[:, 2] + az]
    return acc / total


def load_rhs(mask, f, N=1):
    """``phi -> int_Omega f . phi`` with 2x2x2 Gauss quadrature per inside cell.

    ``f`` maps points ``(..., 3)`` to ``(..., N)`` (or ``(...)`` when N = 1).
    """
    g = mask.grid
    idx = np.argwhere(mask.inside)
    cell_lo = np.asarray(g.lo) + idx * g.h
    phi = shape_values(GAUSS_POINTS)  # (gauss, corner)
    cw = np.zeros((len(idx), 8, N))
    for q, wq in zip(range(len(GAUSS_POINTS)), GAUSS_WEIGHTS):
        vals = np.asarray(f(cell_lo + GAUSS_POINTS[q] * g.h), dtype=float).reshape(len(idx), N)
        cw += (wq * g.cell_volume) * phi[q][None, :, None] * vals[:, None, :]
    w = np.zeros(g.node_shape + (N,))
    for a, (ax, ay, az) in enumerate(CORNERS):
        np.add.at(w, (idx[:, 0] + ax, idx[:, 1] + ay, idx[:, 2] + az), cw[:, a])
    return LinearFunctional(mask, w, {"kind": "load"})


def point_functional(mask, x, k, N=1):
    """``phi -> phi^k(x)`` by trilinear interpolation."""
    g = mask.grid
    x = np.asarray(x, dtype=float)
    if not mask.in_closure(x):
        raise DomainError(f"point {tuple(x)} outside the domain")
    t = (x - g.lo) / g.h
    i = np.clip(np.floor(t).astype(int), 0, np.asarray(g.cells) - 1)
    wts = shape_values(np.clip(t - i, 0.0, 1.0))
    w = np.zeros(g.node_shape + (N,))
    for a, (ax, ay, az) in enumerate(CORNERS):
        w[i[0] + ax, i[1] + ay, i[2] + az, k] += wts[a]
    return LinearFunctional(mask, w, {"kind": "point", "x": tuple(map(float, x)), "k": k})


def stack_vectors(functionals):
    return np.stack([f.vector() for f in functionals], axis=1)
