"""Nodal Q1 fields on a masked grid and cell-level samples of them."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, GridError
from .element import CORNERS, GAUSS_POINTS, shape_gradients, shape_values


@dataclass(frozen=True, eq=False)
class CellSamples:
    """Cell-centre values (and optionally gradients) with quadrature volumes.

    A flat stand-in for a field restricted to a region; fields that live on
    several nested grids are merged into one of these.
    """

    points: np.ndarray
    volumes: np.ndarray
    values: np.ndarray
    grads: np.ndarray | None = None

    def restrict(self, keep):
        keep = np.asarray(keep, dtype=bool)
        return CellSamples(self.points[keep], self.volumes[keep], self.values[keep],
                           None if self.grads is None else self.grads[keep])

    def reweighted(self, volumes):
        keep = volumes > 0
        return CellSamples(self.points[keep], np.asarray(volumes)[keep], self.values[keep],
                           None if self.grads is None else self.grads[keep])

    @staticmethod
    def concat(parts):
        parts = list(parts)
        grads = None
        if all(p.grads is not None for p in parts):
            grads = np.concatenate([p.grads for p in parts])
        return CellSamples(np.concatenate([p.points for p in parts]),
                           np.concatenate([p.volumes for p in parts]),
                           np.concatenate([p.values for p in parts]), grads)


def _corner_views(values, cells):
    cx, cy, cz = cells
    return [values[ax:ax + cx, ay:ay + cy, az:az + cz] for ax, ay, az in CORNERS]


@dataclass(frozen=True, eq=False)
class DiscreteField:
    """N-component nodal values on ``mask.grid``; array shape ``node_shape + (N,)``."""

    mask: object
    values: np.ndarray
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 3:
            v = v[..., None]
        if v.shape[:3] != self.mask.grid.node_shape:
            raise GridError(f"field shape {v.shape} does not match grid nodes {self.mask.grid.node_shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field has non-finite values")
        v = np.array(v)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def N(self):
        return self.values.shape[-1]

    @property
    def grid(self):
        return self.mask.grid

    def evaluate(self, x):
        """Trilinear interpolation at points ``(M, 3)`` (or one point) -> ``(M, N)``."""
        g = self.grid
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        if not np.all(g.in_box(pts, tol=1e-9 * float(np.max(g.extent)))):
            raise DomainError("evaluation point outside the grid box")
        t = (pts - g.lo) / g.h
        idx = np.clip(np.floor(t).astype(np.int64), 0, np.asarray(g.cells) - 1)
        w = shape_values(np.clip(t - idx, 0.0, 1.0))
        out = np.zeros((len(pts), self.N))
        for a, (ax, ay, az) in enumerate(CORNERS):
            out += w[:, a, None] * self.values[idx[:, 0] + ax, idx[:, 1] + ay, idx[:, 2] + az]
        return out if np.ndim(x) > 1 else out[0]

    def cell_values(self):
        """Values at cell centres (mean of the 8 corners): ``cells + (N,)``."""
        return sum(_corner_views(self.values, self.grid.cells)) / 8.0

    def gradients_at(self, q):
        """Gradients at local point ``q`` of every cell: ``cells + (3, N)``."""
        g = self.grid
        grads = shape_gradients(np.asarray(q, dtype=float), g.h)  # (8, 3)
        out = np.zeros(g.cells + (3, self.N))
        for a, corner in enumerate(_corner_views(self.values, g.cells)):
            out += grads[a][:, None] * corner[..., None, :]
        return out

    def cell_gradients(self):
        return self.gradients_at((0.5, 0.5, 0.5))

    def gauss_gradients(self):
        """Gradients at the 8 Gauss points: ``(8,) + cells + (3, N)``."""
        return np.stack([self.gradients_at(q) for q in GAUSS_POINTS])

    def cell_samples(self, region=None, gradients=True):
        """Samples over inside cells, optionally restricted by a point predicate."""
        keep = np.array(self.mask.inside)
        centers = self.grid.cell_centers()
        if region is not None:
            keep &= np.asarray(region(centers), dtype=bool)
        vals = self.cell_values()[keep]
        grads = self.cell_gradients()[keep] if gradients else None
        vol = np.full(int(keep.sum()), self.grid.cell_volume)
        return CellSamples(centers[keep], vol, vals, grads)

    def scaled(self, c):
        return DiscreteField(self.mask, c * self.values, dict(self.info))


def export_field(f, stem):
    """Write ``stem.f64`` (node-major, component fastest) and ``stem.json``."""
    g = f.grid
    np.ascontiguousarray(f.values, dtype="<f8").tofile(f"{stem}.f64")
    meta = {"dims": list(g.node_shape), "box": [list(g.lo), list(g.hi)], "N": f.N,
            "mask_hash": f.mask.mask_id}
    with open(f"{stem}.json", "w") as fh:
        json.dump(meta, fh, sort_keys=True, indent=1)
    return meta


def read_field(stem, mask):
    with open(f"{stem}.json") as fh:
        meta = json.load(fh)
    if meta["mask_hash"] != mask.mask_id:
        raise GridError(f"{stem}: field was written for a different mask")
    values = np.fromfile(f"{stem}.f64", dtype="<f8").reshape(tuple(meta["dims"]) + (meta["N"],))
    return DiscreteField(mask, values)
