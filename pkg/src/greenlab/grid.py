"""Uniform hexahedral grids, staircase domain masks and their geometry.

Nodes and cells are indexed lexicographically in C order: ``(ix, iy, iz)``
with ``iz`` fastest.  A domain is a set of grid cells; its boundary is the
union of faces separating an inside cell from an outside cell or from the
exterior of the box.
"""

from __future__ import annotations

import hashlib
import itertools
import struct
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import ndimage

from .errors import DomainError, GridError, PreconditionError

MASK_MAGIC = b"GLMK"
_HEADER = struct.Struct("<4s3i6d")
_CORNERS = np.array(list(itertools.product((0, 1), repeat=3)))


@dataclass(frozen=True)
class Grid:
    lo: tuple
    hi: tuple
    cells: tuple

    @property
    def h(self):
        return (np.asarray(self.hi) - np.asarray(self.lo)) / np.asarray(self.cells)

    @property
    def node_shape(self):
        return tuple(c + 1 for c in self.cells)

    @property
    def n_nodes(self):
        return int(np.prod(self.node_shape))

    @property
    def n_cells(self):
        return int(np.prod(self.cells))

    @property
    def cell_volume(self):
        return float(np.prod(self.h))

    @property
    def extent(self):
        return np.asarray(self.hi) - np.asarray(self.lo)

    def axis_nodes(self, axis):
        return np.linspace(self.lo[axis], self.hi[axis], self.cells[axis] + 1)

    def axis_centers(self, axis):
        return self.lo[axis] + (np.arange(self.cells[axis]) + 0.5) * self.h[axis]

    def node_points(self):
        return np.stack(np.meshgrid(*(self.axis_nodes(a) for a in range(3)), indexing="ij"), axis=-1)

    def cell_centers(self):
        return np.stack(np.meshgrid(*(self.axis_centers(a) for a in range(3)), indexing="ij"), axis=-1)

    def nearest_node(self, x):
        """Index triple of the grid node closest to ``x`` (clipped to the box)."""
        t = np.rint((np.asarray(x, dtype=float) - self.lo) / self.h).astype(int)
        return tuple(int(v) for v in np.clip(t, 0, self.cells))

    def node_point(self, idx):
        return np.asarray(self.lo) + np.asarray(idx) * self.h

    def in_box(self, x, tol=0.0):
        x = np.asarray(x, dtype=float)
        return np.all((x >= np.asarray(self.lo) - tol) & (x <= np.asarray(self.hi) + tol), axis=-1)


def build_grid(box, cells):
    """Grid over an axis-aligned box.

    ``box`` is ``((x0, x1), (y0, y1), (z0, z1))`` or a single ``(a, b)`` for a
    cube; ``cells`` is an integer or a triple.
    """
    b = np.asarray(box, dtype=float)
    if b.shape == (2,):
        b = np.tile(b, (3, 1))
    if b.shape != (3, 2):
        raise GridError(f"box must be (3, 2) bounds, got shape {b.shape}")
    c = np.broadcast_to(np.asarray(cells), (3,))
    if np.any(c != np.floor(c)) or np.any(c < 1):
        raise GridError(f"cells per axis must be positive integers, got {tuple(c)}")
    if np.any(b[:, 1] <= b[:, 0]) or not np.all(np.isfinite(b)):
        raise GridError("box extents must be positive and finite")
    return Grid(lo=tuple(map(float, b[:, 0])), hi=tuple(map(float, b[:, 1])),
                cells=tuple(int(v) for v in c))


def _pad(inside):
    return np.pad(inside, 1, constant_values=False)


@dataclass(frozen=True, eq=False)
class DomainMask:
    """Cell-inclusion mask defining a connected staircase domain.

    ``predicate`` (optional) is the continuum description of the domain; it
    lets the mask be rebuilt on dilated boxes and lets Monte Carlo volume
    estimates look past the box faces.
    """

    grid: Grid
    inside: np.ndarray
    predicate: Callable | None = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.inside.setflags(write=False)

    @cached_property
    def incident_inside(self):
        """Per node, the number of inside cells among its 8 incident cells."""
        p = _pad(self.inside).astype(np.int8)
        cx, cy, cz = self.grid.cells
        count = np.zeros(self.grid.node_shape, dtype=np.int8)
        for dx, dy, dz in itertools.product((0, 1), repeat=3):
            count += p[dx:dx + cx + 1, dy:dy + cy + 1, dz:dz + cz + 1]
        count.setflags(write=False)
        return count

    @property
    def free_nodes(self):
        """Nodes carrying unknowns: all incident cells inside."""
        return self.incident_inside == 8

    @property
    def boundary_nodes(self):
        """Nodes on the staircase boundary, where Dirichlet data is imposed."""
        c = self.incident_inside
        return (c > 0) & (c < 8)

    @property
    def closure_nodes(self):
        return self.incident_inside > 0

    @cached_property
    def mask_id(self):
        return hashlib.sha256(mask_bytes(self)).hexdigest()[:16]

    @property
    def volume(self):
        return float(self.inside.sum()) * self.grid.cell_volume

    # -- point classification -------------------------------------------------

    def _candidate_cells(self, x, tol):
        """For each point, the (up to 8) cells whose closure contains it.

        Returns ``(inside_flags, valid_flags)`` of shape ``(M, 8)``; invalid
        candidates lie outside the box.
        """
        g = self.grid
        x = np.atleast_2d(np.asarray(x, dtype=float))
        t = (x - g.lo) / g.h
        r = np.rint(t)
        on_face = np.abs(t - r) < tol
        i1 = np.where(on_face, r, np.floor(t)).astype(np.int64)
        i0 = np.where(on_face, r - 1, i1).astype(np.int64)
        flags, valid = [], []
        for pick in itertools.product((0, 1), repeat=3):
            idx = np.stack([i1[:, a] if pick[a] else i0[:, a] for a in range(3)], axis=1)
            ok = np.all((idx >= 0) & (idx < np.asarray(g.cells)), axis=1)
            safe = np.where(ok[:, None], idx, 0)
            flags.append(ok & self.inside[safe[:, 0], safe[:, 1], safe[:, 2]])
            valid.append(ok)
        return np.stack(flags, axis=1), np.stack(valid, axis=1)

    def contains(self, x, tol=1e-9):
        """True for points of the open domain (interior of the union of inside cells)."""
        flags, _ = self._candidate_cells(x, tol)
        out = np.all(flags, axis=1)
        return out if np.ndim(x) > 1 else bool(out[0])

    def in_closure(self, x, tol=1e-9):
        flags, _ = self._candidate_cells(x, tol)
        out = np.any(flags, axis=1)
        return out if np.ndim(x) > 1 else bool(out[0])

    def on_boundary(self, x, tol=1e-9):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        out = self.in_closure(pts, tol) & ~self.contains(pts, tol)
        return out if np.ndim(x) > 1 else bool(out[0])

    def cell_inside_at(self, x):
        """Cell-mask lookup for points inside the box (no face disambiguation)."""
        g = self.grid
        idx = np.floor((np.asarray(x, dtype=float) - g.lo) / g.h).astype(np.int64)
        idx = np.clip(idx, 0, np.asarray(g.cells) - 1)
        return self.inside[idx[..., 0], idx[..., 1], idx[..., 2]]

    def dilated(self, factor, anchor):
        """Same cell counts on the box scaled by ``factor`` about ``anchor``."""
        if self.predicate is None:
            raise PreconditionError("dilation needs a continuum predicate")
        g = self.grid
        a = np.asarray(anchor, dtype=float)
        lo = a + factor * (np.asarray(g.lo) - a)
        hi = a + factor * (np.asarray(g.hi) - a)
        grid = build_grid(np.stack([lo, hi], axis=1), g.cells)
        return mask_from_predicate(grid, self.predicate, name=self.name, params=self.params)

    @cached_property
    def boundary_faces(self):
        """Boundary faces as ``(axis, coordinate, lo_other(2), hi_other(2))`` arrays."""
        g = self.grid
        p = _pad(self.inside)
        axes, coords, los, his = [], [], [], []
        for a in range(3):
            lo_slice = [slice(1, -1)] * 3
            hi_slice = [slice(1, -1)] * 3
            lo_slice[a] = slice(0, -1)
            hi_slice[a] = slice(1, None)
            left, right = p[tuple(lo_slice)], p[tuple(hi_slice)]
            idx = np.argwhere(left != right)
            if idx.size == 0:
                continue
            others = [b for b in range(3) if b != a]
            axes.append(np.full(len(idx), a))
            coords.append(g.lo[a] + idx[:, a] * g.h[a])
            los.append(np.stack([g.lo[b] + idx[:, b] * g.h[b] for b in others], axis=1))
            his.append(np.stack([g.lo[b] + (idx[:, b] + 1) * g.h[b] for b in others], axis=1))
        return (np.concatenate(axes), np.concatenate(coords),
                np.concatenate(los), np.concatenate(his))


def mask_from_predicate(grid, predicate, name="custom", params=None):
    """Mask with cell inside iff ``predicate(cell_center)``; validates connectivity."""
    inside = np.asarray(predicate(grid.cell_centers()), dtype=bool)
    if inside.shape != grid.cells:
        raise GridError(f"predicate returned shape {inside.shape}, expected {grid.cells}")
    return mask_from_array(grid, inside, predicate=predicate, name=name, params=params)


def mask_from_array(grid, inside, predicate=None, name="custom", params=None):
    inside = np.array(inside, dtype=bool)
    if not inside.any():
        raise DomainError("domain is empty")
    _, ncomp = ndimage.label(inside)
    if ncomp != 1:
        raise DomainError(f"domain is disconnected ({ncomp} face-connected components)")
    return DomainMask(grid=grid, inside=inside, predicate=predicate, name=name,
                      params=dict(params or {}))


# -- builtins ---------------------------------------------------------------------

def _all_inside(x):
    return np.ones(np.shape(x)[:-1], dtype=bool)


def full_box(grid):
    return mask_from_predicate(grid, _all_inside, name="full-box")


def half_space(grid, axis=2, offset=0.0):
    def pred(x):
        return np.asarray(x)[..., axis] > offset
    return mask_from_predicate(grid, pred, name="half-space", params={"axis": axis, "offset": offset})


def notched_cube(grid, corner=(0.0, 0.0, 0.0)):
    """Box with the octant ``{x > corner componentwise}`` removed."""
    c = np.asarray(corner, dtype=float)

    def pred(x):
        return ~np.all(np.asarray(x) > c, axis=-1)
    return mask_from_predicate(grid, pred, name="notched-cube", params={"corner": list(map(float, c))})


def slab(grid, axis=2, lower=-0.5, upper=0.5):
    def pred(x):
        t = np.asarray(x)[..., axis]
        return (t > lower) & (t < upper)
    return mask_from_predicate(grid, pred, name="slab", params={"axis": axis, "lower": lower, "upper": upper})


def ball(grid, center=(0.0, 0.0, 0.0), radius=1.0):
    c = np.asarray(center, dtype=float)

    def pred(x):
        return np.sum((np.asarray(x) - c) ** 2, axis=-1) < radius ** 2
    return mask_from_predicate(grid, pred, name="ball", params={"center": list(map(float, c)), "radius": radius})


MASKS = {
    "full-box": full_box,
    "half-space": half_space,
    "notched-cube": notched_cube,
    "slab": slab,
    "ball": ball,
}


def builtin_mask(grid, name, **params):
    try:
        factory = MASKS[name]
    except KeyError:
        raise DomainError(f"unknown mask builtin {name!r}") from None
    return factory(grid, **params)


# -- export ---------------------------------------------------------------------------

def mask_bytes(mask):
    g = mask.grid
    header = _HEADER.pack(MASK_MAGIC, *g.cells, *g.lo, *g.hi)
    return header + np.ascontiguousarray(mask.inside, dtype=np.uint8).tobytes()


def write_mask(mask, path):
    with open(path, "wb") as fh:
        fh.write(mask_bytes(mask))


def read_mask(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    magic, cx, cy, cz, x0, y0, z0, x1, y1, z1 = _HEADER.unpack_from(blob)
    if magic != MASK_MAGIC:
        raise GridError(f"{path}: not a mask file")
    grid = build_grid(((x0, x1), (y0, y1), (z0, z1)), (cx, cy, cz))
    inside = np.frombuffer(blob, dtype=np.uint8, offset=_HEADER.size).reshape(cx, cy, cz)
    return mask_from_array(grid, inside.astype(bool))


# -- geometry ------------------------------------------------------------------------

def boundary_distance(mask, x):
    """Exact Euclidean distance from ``x`` (in the closure of the domain) to its boundary faces."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if not np.all(mask.in_closure(pts)):
        raise DomainError("point lies outside the domain")
    axes, coords, los, his = mask.boundary_faces
    others = np.array([[1, 2], [0, 2], [0, 1]])[axes]
    out = np.empty(len(pts))
    for m, p in enumerate(pts):
        normal = p[axes] - coords
        q = p[others]
        tangential = np.maximum(0.0, np.maximum(los - q, q - his))
        out[m] = np.sqrt(np.min(normal ** 2 + np.sum(tangential ** 2, axis=1)))
    return out if np.ndim(x) > 1 else float(out[0])


def _fraction_grid(sub):
    return (np.arange(sub) + 0.5) / sub


def ball_cell_weights(mask, center, radius, sub=8, corners=False):
    """Volume of ``B_radius(center)`` inside each domain cell.

    Cells wholly inside the ball get their full volume; cells straddling the
    sphere use ``sub**3`` midpoint subsamples.  Returns ``(index, volume)``
    with ``index`` an ``(M, 3)`` array of cell indices.  With ``corners`` a
    third array ``(M, 8)`` holds the integrals of the 8 trilinear corner
    functions over the same part of each cell.
    """
    g = mask.grid
    c = np.asarray(center, dtype=float)
    h = g.h
    lo_idx = np.maximum(np.floor((c - radius - np.asarray(g.lo)) / h).astype(int), 0)
    hi_idx = np.minimum(np.ceil((c + radius - np.asarray(g.lo)) / h).astype(int), np.asarray(g.cells))
    if np.any(hi_idx <= lo_idx):
        empty = (np.zeros((0, 3), dtype=int), np.zeros(0))
        return empty + (np.zeros((0, 8)),) if corners else empty
    rng = [np.arange(lo_idx[a], hi_idx[a]) for a in range(3)]
    idx = np.stack(np.meshgrid(*rng, indexing="ij"), axis=-1).reshape(-1, 3)
    idx = idx[mask.inside[idx[:, 0], idx[:, 1], idx[:, 2]]]
    cell_lo = np.asarray(g.lo) + idx * h
    near = np.sqrt(np.sum(np.maximum(0.0, np.maximum(cell_lo - c, c - cell_lo - h)) ** 2, axis=1))
    far = np.sqrt(np.sum(np.maximum(np.abs(cell_lo - c), np.abs(cell_lo + h - c)) ** 2, axis=1))
    keep = near < radius
    idx, cell_lo, far = idx[keep], cell_lo[keep], far[keep]
    vol = np.full(len(idx), g.cell_volume)
    cw = np.full((len(idx), 8), g.cell_volume / 8.0)
    straddle = far > radius
    if np.any(straddle):
        f = _fraction_grid(sub)
        local = np.stack(np.meshgrid(f, f, f, indexing="ij"), axis=-1).reshape(-1, 3)
        pts = cell_lo[straddle][:, None, :] + (local * h)[None, :, :]
        hit = np.sum((pts - c) ** 2, axis=2) < radius ** 2
        vol[straddle] *= np.mean(hit, axis=1)
        if corners:
            shape = np.prod(np.where(_CORNERS[None] == 1, local[:, None, :], 1.0 - local[:, None, :]), axis=2)
            cw[straddle] = g.cell_volume * (hit @ shape) / len(local)
    keep = vol > 0
    if corners:
        return idx[keep], vol[keep], cw[keep]
    return idx[keep], vol[keep]


def ball_measure(mask, center, radius, sub=8):
    """``|Omega_r(center)|`` by per-cell volume fractions."""
    return float(ball_cell_weights(mask, center, radius, sub)[1].sum())


@dataclass(frozen=True)
class ConditionSReport:
    point: tuple
    radii: list
    theta_hat: list
    std_error: list
    theta_inf: float
    theta: float
    R_a: float
    R_a_capped: bool
    sample_count: int
    seed: int


def _uniform_ball(rng, count):
    v = rng.standard_normal((count, 3))
    v /= np.linalg.norm(v, axis=1)[:, None]
    return v * rng.random(count)[:, None] ** (1.0 / 3.0)


def outside_fraction(mask, points):
    """Boolean "outside the domain" for sample points, past the box via the predicate."""
    in_box = mask.grid.in_box(points)
    outside = np.ones(len(points), dtype=bool)
    outside[in_box] = ~mask.cell_inside_at(points[in_box])
    if mask.predicate is not None and np.any(~in_box):
        outside[~in_box] = ~np.asarray(mask.predicate(points[~in_box]), dtype=bool)
    return outside


def condition_s_estimate(mask, point, radii, sample_count=100_000, seed=0, theta=None):
    """Monte Carlo exterior density ``|B_R(point) minus Omega| / |B_R|`` per radius.

    ``R_a`` is the largest radius of the leading run with ``theta_hat >= theta``
    (``theta`` defaults to the smallest estimate).  When every tested radius
    passes, the true scale may be larger; ``R_a_capped`` flags this.
    """
    p = np.asarray(point, dtype=float)
    radii = [float(r) for r in radii]
    if not radii or min(radii) <= 0:
        raise PreconditionError("radii must be positive")
    if not mask.on_boundary(p):
        raise DomainError(f"point {tuple(p)} is not on the domain boundary")
    rng = np.random.default_rng(seed)
    unit = _uniform_ball(rng, sample_count)
    hats, errs = [], []
    for r in radii:
        frac = float(np.mean(outside_fraction(mask, p + r * unit)))
        hats.append(frac)
        errs.append(float(np.sqrt(max(frac * (1 - frac), 1e-300) / sample_count)))
    th = min(hats) if theta is None else float(theta)
    r_a, capped = 0.0, True
    for r, t in sorted(zip(radii, hats)):
        if t >= th:
            r_a = r
        else:
            capped = False
            break
    return ConditionSReport(point=tuple(map(float, p)), radii=radii, theta_hat=hats,
                            std_error=errs, theta_inf=min(hats), theta=th, R_a=r_a,
                            R_a_capped=capped, sample_count=sample_count, seed=seed)
