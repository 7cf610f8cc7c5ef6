"""Averaged Green matrices and the discrete identities they satisfy.

Column ``k`` of the averaged Green matrix with pole ``y`` and radius ``rho``
is the field ``v`` with ``B(v, phi) = mean of phi^k over Omega_rho(y)`` for all
test fields ``phi``.  Entry ``(j, k)`` of the evaluated matrix at ``x`` is
component ``j`` of column ``k`` at ``x``.

Whole space is approximated by a box.  With ``exterior_levels = L`` the box
is embedded in ``L`` concentric boxes, each twice as large as the previous
one and with the same number of cells; the coarsest carries zero Dirichlet
data and each finer box takes its boundary values from the next coarser
solution.  This pushes the truncation wall far away at little cost.
"""

from __future__ import annotations

import json
import os
import threading
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PreconditionError, WindowError
from .fem import (CellSamples, DiscreteField, SolverSettings, assemble, averaged_indicator_rhs,
                  ball_average, load_rhs, point_functional, solve_dirichlet, solve_many,
                  stack_vectors)
from .fem.assembly import cell_coefficients
from .fem.element import CORNERS, GAUSS_POINTS, GAUSS_WEIGHTS, shape_values
from .fem.field import export_field, read_field
from .grid import boundary_distance
from .operator import transpose_operator

# -- assembled-system cache --------------------------------------------------------

_CACHE_SIZE = 8
_cache: OrderedDict = OrderedDict()
_cache_lock = threading.Lock()


def set_cache_size(n):
    global _CACHE_SIZE
    _CACHE_SIZE = int(n)
    with _cache_lock:
        while len(_cache) > _CACHE_SIZE:
            _cache.popitem(last=False)


def clear_cache():
    with _cache_lock:
        _cache.clear()


def get_system(spec, mask):
    """Assembled system for ``(spec, mask)``, memoised for named operators."""
    if spec.name == "custom":
        return assemble(spec, mask)
    key = (spec.spec_id, spec.lam, spec.Lam, mask.mask_id)
    with _cache_lock:
        if key in _cache:
            _cache.move_to_end(key)
            return _cache[key]
    system = assemble(spec, mask)
    with _cache_lock:
        _cache[key] = system
        while len(_cache) > _CACHE_SIZE:
            _cache.popitem(last=False)
    return system


# -- interpolation helpers -----------------------------------------------------------

def _interp_weights(grid, pts):
    t = (pts - grid.lo) / grid.h
    idx = np.clip(np.floor(t).astype(np.int64), 0, np.asarray(grid.cells) - 1)
    w = shape_values(np.clip(t - idx, 0.0, 1.0))
    return idx, w


def _interp(values, grid, pts):
    """Trilinear interpolation of stacked fields ``(C, nodes..., N)`` at ``pts`` -> ``(C, M, N)``."""
    idx, w = _interp_weights(grid, pts)
    out = np.zeros((values.shape[0], len(pts), values.shape[-1]))
    for a, (ax, ay, az) in enumerate(CORNERS):
        out += w[None, :, a, None] * values[:, idx[:, 0] + ax, idx[:, 1] + ay, idx[:, 2] + az]
    return out


def _box_face_nodes(grid):
    f = np.zeros(grid.node_shape, dtype=bool)
    f[0], f[-1], f[:, 0], f[:, -1], f[:, :, 0], f[:, :, -1] = (True,) * 6
    return f


# -- construction ------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GreenLevel:
    mask: object
    columns: np.ndarray  # (N, nodes..., N): columns[k, ..., j]
    rho: float


@dataclass(frozen=True, eq=False)
class AveragedGreenMatrix:
    pole: tuple
    rho: float
    N: int
    levels: list
    spec_id: str
    mask_id: str
    transposed: bool = False
    info: dict = field(default_factory=dict)

    @property
    def mask(self):
        return self.levels[0].mask

    @property
    def grid(self):
        return self.levels[0].mask.grid

    @property
    def columns(self):
        lv = self.levels[0]
        return [DiscreteField(lv.mask, lv.columns[k]) for k in range(self.N)]

    def _level_for(self, pts):
        lvl = np.full(len(pts), -1)
        for i in reversed(range(len(self.levels))):
            g = self.levels[i].mask.grid
            lvl[g.in_box(pts, tol=1e-12 * float(np.max(g.extent)))] = i
        return lvl

    def evaluate(self, x):
        """``(N, N)`` matrix at ``x`` (or ``(M, N, N)`` for ``M`` points)."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        lvl = self._level_for(pts)
        out = np.zeros((len(pts), self.N, self.N))
        for i in np.unique(lvl):
            sel = lvl == i
            if i < 0 or not np.all(self.levels[i].mask.in_closure(pts[sel])):
                raise DomainError("evaluation point outside the domain")
            lv = self.levels[i]
            vals = _interp(lv.columns, lv.mask.grid, pts[sel])  # (k, M, j)
            out[sel] = vals.transpose(1, 2, 0)
        return out if np.ndim(x) > 1 else out[0]

    def cell_samples(self, region=None, gradients=True):
        """Composite cell samples; coarse levels only contribute outside the finer boxes.

        Values are the flattened matrices ``G[j, k]`` at index ``j * N + k``.
        """
        parts = []
        inner = None
        for lv in self.levels:
            g = lv.mask.grid
            centers = g.cell_centers()
            keep = np.array(lv.mask.inside)
            if inner is not None:
                keep &= ~inner.in_box(centers)
            if region is not None:
                keep &= np.asarray(region(centers), dtype=bool)
            fields = [DiscreteField(lv.mask, lv.columns[k]) for k in range(self.N)]
            vals = np.stack([f.cell_values()[keep] for f in fields], axis=-1)  # (M, j, k)
            grads = None
            if gradients:
                grads = np.stack([f.cell_gradients()[keep] for f in fields], axis=-1)  # (M, 3, j, k)
                grads = grads.reshape(len(grads), 3, self.N * self.N)
            parts.append(CellSamples(centers[keep], np.full(int(keep.sum()), g.cell_volume),
                                     vals.reshape(len(vals), self.N * self.N), grads))
            inner = g
        return CellSamples.concat(parts)


def _snap_pole(mask, y):
    g = mask.grid
    idx = g.nearest_node(y)
    if not mask.free_nodes[idx]:
        raise DomainError(f"pole {tuple(float(v) for v in np.asarray(y, dtype=float))} "
                          "does not snap to an interior node")
    return tuple(float(v) for v in g.node_point(idx))


def level_masks(mask, exterior_levels=0, anchor=None):
    if exterior_levels == 0:
        return [mask]
    g = mask.grid
    anchor = 0.5 * (np.asarray(g.lo) + np.asarray(g.hi)) if anchor is None else anchor
    return [mask] + [mask.dilated(2.0 ** l, anchor) for l in range(1, exterior_levels + 1)]


def build_green_batch(spec, mask, poles, rho=None, settings=SolverSettings(), exterior_levels=0,
                      anchor=None, transpose=False, snap=True, floor_cells=2.0):
    """Averaged Green matrices for several poles, solved level by level as one block."""
    if transpose:
        spec = transpose_operator(spec)
    N = spec.N
    h = float(np.max(mask.grid.h))
    rho = 2 * h if rho is None else float(rho)
    if exterior_levels and anchor is None:
        anchor = 0.5 * (np.asarray(mask.grid.lo) + np.asarray(mask.grid.hi))
    masks = level_masks(mask, exterior_levels, anchor)
    poles = [_snap_pole(mask, y) if snap else tuple(map(float, y)) for y in poles]
    P = len(poles)
    per_level = [None] * len(masks)
    rhos = [None] * len(masks)
    infos = []
    coarse = None
    for lvl in reversed(range(len(masks))):
        m = masks[lvl]
        g = m.grid
        rho_l = rho if lvl == 0 else max(rho, 2 * float(np.max(g.h)))
        funcs = [averaged_indicator_rhs(m, y, rho_l, k, N, floor_cells=floor_cells if lvl == 0 else 2.0)
                 for y in poles for k in range(N)]
        W = stack_vectors(funcs)
        bvals = None
        if coarse is not None:
            cmask, cvals = coarse
            faces = _box_face_nodes(g) & m.boundary_nodes
            data = np.zeros((P * N,) + g.node_shape + (N,))
            data[:, faces] = _interp(cvals, cmask.grid, g.node_points()[faces])
            bvals = data.reshape(P * N, -1).T
        system = get_system(spec, m)
        vals, info = solve_many(system, W, settings, bvals)
        infos.append({"level": lvl, "method": info.method, "iterations": info.iterations,
                      "residuals": info.residuals})
        per_level[lvl] = vals
        rhos[lvl] = rho_l
        coarse = (m, vals)
    out = []
    for p, y in enumerate(poles):
        levels = [GreenLevel(masks[l], per_level[l][p * N:(p + 1) * N], rhos[l]) for l in range(len(masks))]
        out.append(AveragedGreenMatrix(pole=y, rho=rho, N=N, levels=levels, spec_id=spec.spec_id,
                                       mask_id=mask.mask_id, transposed=spec.transposed,
                                       info={"solves": infos, "exterior_levels": exterior_levels,
                                             "anchor": None if anchor is None else [float(a) for a in anchor]}))
    return out


def build_averaged_green(spec, mask, y, rho=None, settings=SolverSettings(), exterior_levels=0,
                         anchor=None, transpose=False):
    """Averaged Green matrix with pole ``y`` (snapped to the nearest interior node)."""
    G = build_green_batch(spec, mask, [y], rho, settings, exterior_levels, anchor, transpose)[0]
    f = averaged_indicator_rhs(mask, G.pole, G.rho, 0, G.N)
    energy = [float(np.sqrt(np.sum(_energy_density(G, k)))) for k in range(G.N)]
    G.info["omega_rho_measure"] = f.info["measure"]
    G.info["energy"] = energy
    # ||D v|| <= C |Omega_rho|^{(2-n)/(2n)} with n = 3
    G.info["energy_constant"] = max(energy) * f.info["measure"] ** (1.0 / 6.0)
    return G


def _energy_density(G, k):
    s = G.cell_samples()
    N = G.N
    grads = s.grads.reshape(len(s.volumes), 3, N, N)[:, :, :, k]
    return s.volumes * np.sum(grads ** 2, axis=(1, 2))


def energy_norm(G, k=None):
    """``||D v_k||_{L2}`` over all levels (max over columns when ``k`` is None)."""
    ks = range(G.N) if k is None else [k]
    return max(float(np.sqrt(np.sum(_energy_density(G, j)))) for j in ks)


# -- dump / reload -------------------------------------------------------------------------

def save_green(G, directory):
    """Write every level's columns as ``green_L{l}_k{k}.f64`` plus ``green.json``."""
    os.makedirs(directory, exist_ok=True)
    for l, lv in enumerate(G.levels):
        for k in range(G.N):
            export_field(DiscreteField(lv.mask, lv.columns[k]), os.path.join(directory, f"green_L{l}_k{k}"))
    meta = {"pole": list(G.pole), "rho": G.rho, "N": G.N, "spec_id": G.spec_id, "mask_id": G.mask_id,
            "transposed": G.transposed, "level_rhos": [lv.rho for lv in G.levels],
            "exterior_levels": len(G.levels) - 1, "anchor": G.info.get("anchor"),
            "solves": G.info.get("solves", [])}
    path = os.path.join(directory, "green.json")
    with open(path, "w") as fh:
        json.dump(meta, fh, sort_keys=True, indent=2)
    return path


def load_green(directory, spec, mask):
    """Inverse of :func:`save_green`; refuses dumps made for another operator or mask."""
    with open(os.path.join(directory, "green.json")) as fh:
        meta = json.load(fh)
    want = transpose_operator(spec).spec_id if meta["transposed"] else spec.spec_id
    if meta["spec_id"] != want or meta["mask_id"] != mask.mask_id:
        raise PreconditionError(f"{directory}: Green dump belongs to a different operator or mask")
    masks = level_masks(mask, meta["exterior_levels"], meta["anchor"])
    levels = []
    for l, (m, r) in enumerate(zip(masks, meta["level_rhos"])):
        cols = np.stack([read_field(os.path.join(directory, f"green_L{l}_k{k}"), m).values
                         for k in range(meta["N"])])
        levels.append(GreenLevel(m, cols, r))
    return AveragedGreenMatrix(pole=tuple(meta["pole"]), rho=meta["rho"], N=meta["N"], levels=levels,
                               spec_id=meta["spec_id"], mask_id=meta["mask_id"],
                               transposed=meta["transposed"],
                               info={"exterior_levels": meta["exterior_levels"], "anchor": meta["anchor"],
                                     "solves": meta.get("solves", []), "loaded_from": directory})


# -- sampler ---------------------------------------------------------------------------------

class GreenSampler:
    """Lazily built averaged Green matrices with a thread-safe evaluation cache."""

    def __init__(self, spec, mask, rho=None, settings=SolverSettings(), exterior_levels=0, anchor=None):
        self.spec, self.mask, self.settings = spec, mask, settings
        self.rho = 2 * float(np.max(mask.grid.h)) if rho is None else rho
        self.exterior_levels, self.anchor = exterior_levels, anchor
        self._matrices = {}
        self._values = {}
        self._lock = threading.Lock()

    def matrix(self, y, rho=None):
        rho = self.rho if rho is None else rho
        key = (_snap_pole(self.mask, y), float(rho))
        with self._lock:
            if key in self._matrices:
                return self._matrices[key]
        G = build_averaged_green(self.spec, self.mask, y, rho, self.settings,
                                 self.exterior_levels, self.anchor)
        with self._lock:
            return self._matrices.setdefault(key, G)

    def __call__(self, x, y, rho=None):
        rho = self.rho if rho is None else rho
        key = (tuple(map(float, x)), tuple(map(float, y)), float(rho))
        with self._lock:
            if key in self._values:
                return self._values[key]
        val = self.matrix(y, rho).evaluate(x)
        with self._lock:
            return self._values.setdefault(key, val)

    def dbar(self, x, y):
        """``min(d_x, d_y, |x - y|)``."""
        dx = boundary_distance(self.mask, x)
        dy = boundary_distance(self.mask, y)
        return float(min(dx, dy, np.linalg.norm(np.subtract(x, y))))


# -- identities ----------------------------------------------------------------------------

def _check_resolvable(mask, rho, floor_cells=2.0):
    if rho < floor_cells * float(np.max(mask.grid.h)) * (1 - 1e-12):
        raise PreconditionError(f"radius {rho:g} below {floor_cells:g}h")


def symmetry_residual(spec, mask, x, y, rho=None, sigma=None, settings=SolverSettings()):
    """Relative mismatch of ``mean_{Omega_sigma(x)} G^rho(., y)`` and ``mean_{Omega_rho(y)} tG^sigma(., x)``.

    Entry ``(l, k)``: left side averages component ``l`` of column ``k`` of the
    forward matrix, right side averages component ``k`` of column ``l`` of the
    transpose matrix.  Discretely the two agree up to solver error.
    """
    h = float(np.max(mask.grid.h))
    rho = 2 * h if rho is None else rho
    sigma = rho if sigma is None else sigma
    _check_resolvable(mask, rho)
    _check_resolvable(mask, sigma)
    xs, ys = _snap_pole(mask, x), _snap_pole(mask, y)
    if xs == ys:
        raise PreconditionError("x and y must be distinct")
    N = spec.N
    Gy = build_green_batch(spec, mask, [ys], rho, settings)[0]
    Gx = build_green_batch(spec, mask, [xs], sigma, settings, transpose=True)[0]
    ax = [averaged_indicator_rhs(mask, xs, sigma, l, N) for l in range(N)]
    ay = [averaged_indicator_rhs(mask, ys, rho, k, N) for k in range(N)]
    fy, fx = Gy.columns, Gx.columns
    left = np.array([[ax[l](fy[k]) for k in range(N)] for l in range(N)])
    right = np.array([[ay[k](fx[l]) for k in range(N)] for l in range(N)])
    scale = max(np.max(np.abs(left)), np.max(np.abs(right)))
    return float(np.max(np.abs(left - right)) / scale)


def averaging_consistency(spec, mask, x, y, rho, settings=SolverSettings(), method="adjoint"):
    """Max-entry relative gap between ``G^rho(x, y)`` and the node average of ``G^{rho/2}(x, z)``.

    ``z`` runs over interior grid nodes in ``B_rho(y)``.  The adjoint method
    gets every ``G^{rho/2}(x, z)`` from ``N`` transpose solves with a point
    functional at ``x``; ``method="direct"`` solves once per ``z``.
    """
    g = mask.grid
    h = float(np.max(g.h))
    ys = _snap_pole(mask, y)
    x = np.asarray(x, dtype=float)
    if np.linalg.norm(x - np.asarray(ys)) < 4 * rho * (1 - 1e-12):
        raise PreconditionError("need |x - y| >= 4 rho")
    if rho / 2 < h * (1 - 1e-12):
        raise PreconditionError(f"ball of radius rho/2 = {rho / 2:g} not resolvable (h = {h:g})")
    N = spec.N
    G = build_green_batch(spec, mask, [ys], rho, settings)[0]
    target = G.evaluate(x)

    pts = g.node_points()
    inball = mask.free_nodes & (np.sum((pts - np.asarray(ys)) ** 2, axis=-1) < rho ** 2)
    zs = pts[inball]
    if method == "direct":
        samples = []
        for start in range(0, len(zs), 32):
            Gz = build_green_batch(spec, mask, zs[start:start + 32], rho / 2, settings, snap=False,
                                   floor_cells=1.0)
            samples.extend(Gi.evaluate(x) for Gi in Gz)
        samples = np.stack(samples)
    elif method == "adjoint":
        system = get_system(transpose_operator(spec), mask)
        W = stack_vectors([point_functional(mask, x, j, N) for j in range(N)])
        w, _ = solve_many(system, W, settings)  # w[j] = tG(., x) column j
        samples = np.zeros((len(zs), N, N))
        for i, z in enumerate(zs):
            for j in range(N):
                samples[i, j, :] = ball_average(mask, w[j], z, rho / 2)
    else:
        raise ValueError(f"unknown method {method!r}")
    avg = samples.mean(axis=0)
    return float(np.max(np.abs(target - avg)) / np.max(np.abs(target)))


@dataclass(frozen=True, eq=False)
class Representation:
    points: np.ndarray
    u_repr: np.ndarray
    u_direct: np.ndarray
    direct: DiscreteField
    omitted_volume: float
    omitted_estimate: float

    @property
    def relative_error(self):
        num = np.sqrt(np.sum((self.u_repr - self.u_direct) ** 2))
        den = np.sqrt(np.sum(self.u_direct ** 2))
        return float(num / den) if den > 0 else float(num)


def _pole_cells(grid, node, face_neighbors=False):
    """Cells touching a node, optionally with their face neighbours."""
    base = {tuple(np.asarray(node) - 1 + c) for c in CORNERS}
    if face_neighbors:
        extra = set()
        for c in base:
            for ax in range(3):
                for s in (-1, 1):
                    d = list(c)
                    d[ax] += s
                    extra.add(tuple(d))
        base |= extra
    cells = np.array(sorted(base))
    ok = np.all((cells >= 0) & (cells < np.asarray(grid.cells)), axis=1)
    return cells[ok]


def represent_solution(spec, mask, f, points, rho=None, settings=SolverSettings(), face_neighbors=False):
    """Compare ``u(x) = int G(x, y) f(y) dy`` (cell-centre quadrature) with the direct solve.

    ``f`` maps points ``(..., 3)`` to ``(..., N)``.  One transpose solve per
    sample point supplies ``G(x, .)``; cells touching the pole are left out
    and their share is reported.
    """
    N = spec.N
    g = mask.grid
    centers = g.cell_centers()
    fc = np.asarray(f(centers), dtype=float).reshape(g.cells + (N,))
    if np.any(fc[~mask.inside] != 0):
        raise DomainError("source support leaks outside the domain")
    direct = solve_dirichlet(get_system(spec, mask), load_rhs(mask, f, N), settings)
    poles = [_snap_pole(mask, x) for x in points]
    Gt = build_green_batch(spec, mask, poles, rho, settings, transpose=True)
    vol = g.cell_volume
    u_repr = np.zeros((len(poles), N))
    omitted_vol = 0.0
    omitted_est = 0.0
    fmax = float(np.max(np.abs(fc)))
    for i, (p, G) in enumerate(zip(poles, Gt)):
        weight = np.where(mask.inside, vol, 0.0)
        skip = _pole_cells(g, g.nearest_node(p), face_neighbors)
        weight[skip[:, 0], skip[:, 1], skip[:, 2]] = 0.0
        omitted_vol = max(omitted_vol, len(skip) * vol)
        r_skip = (len(skip) * vol * 3 / (4 * np.pi)) ** (1 / 3)
        # int_{B_r} |z|^{-1} / (4 pi lambda) = r^2 / (2 lambda)
        omitted_est = max(omitted_est, fmax * r_skip ** 2 / (2 * spec.lam))
        for k in range(N):
            wk = G.columns[k].cell_values()  # component j of tG(., x) column k
            u_repr[i, k] = float(np.sum(weight[..., None] * wk * fc))
    u_direct = direct.evaluate(np.array(poles))
    return Representation(np.array(poles), u_repr, u_direct, direct, omitted_vol, omitted_est)


def _profile_field(mask, f, N):
    vals = np.asarray(f(mask.grid.node_points()), dtype=float).reshape(mask.grid.node_shape + (N,))
    return DiscreteField(mask, np.where(mask.free_nodes[..., None], vals, 0.0))


def gradient_representation_residual(spec, mask, f, x, rho=None, settings=SolverSettings(),
                                     floor=1e-12, margin_cells=2):
    """``max_k |int D_alpha G_{ki}(x, .) A D_beta f^j - f^k(x)| / max(||f||_inf, floor)``.

    ``f`` is a smooth profile (callable on points), interpolated on the grid
    and zeroed on the boundary.  Gradients are taken at cell centres.
    """
    N = spec.N
    g = mask.grid
    h = float(np.max(g.h))
    rho = 2 * h if rho is None else rho
    ff = _profile_field(mask, f, N)
    fmax = float(np.max(np.abs(ff.values)))
    if fmax == 0:
        return 0.0
    xs = _snap_pole(mask, x)
    pts = g.node_points()
    near = np.sum((pts - np.asarray(xs)) ** 2, axis=-1) <= (rho + margin_cells * h) ** 2
    if not np.all(np.linalg.norm(ff.values[near], axis=-1) > 0):
        raise WindowError("x is too close to the edge of the support of f")
    if boundary_distance(mask, xs) < rho + margin_cells * h:
        raise WindowError("x is too close to the domain boundary")
    G = build_green_batch(spec, mask, [xs], rho, settings, transpose=True)[0]
    coeff, _, _ = cell_coefficients(spec, mask)
    df = ff.cell_gradients()  # (cells, 3, N)
    vol = np.where(mask.inside, g.cell_volume, 0.0)
    fx = ff.evaluate(np.asarray(xs))
    res = 0.0
    for k in range(N):
        dw = G.columns[k].cell_gradients()  # D_alpha of component i
        if coeff.ndim == 4:
            integrand = np.einsum("...ai,abij,...bj->...", dw, coeff, df)
        else:
            integrand = np.einsum("...ai,...abij,...bj->...", dw, coeff, df)
        rhs = float(np.sum(vol * integrand))
        res = max(res, abs(rhs - fx[k]))
    return res / max(fmax, floor)


def _gauss_coupling(coeff, w, v, weight):
    """``sum_cells weight * int D_alpha w^i C[alpha, beta, i, j] D_beta v^j`` with 2x2x2 Gauss."""
    total = 0.0
    for q, wq in zip(GAUSS_POINTS, GAUSS_WEIGHTS):
        dw = w.gradients_at(q)
        dv = v.gradients_at(q)
        total += wq * float(np.sum(weight * np.einsum("...ai,...abij,...bj->...", dw, coeff, dv)))
    return total


def perturbation_residual(spec_a, spec_b, mask, x, y, rho=None, settings=SolverSettings()):
    """Residual of ``tilde G = G + int DG(x, .) (A - tilde A) D tilde G(., y)`` for averaged matrices.

    ``spec_a`` plays ``A`` and ``spec_b`` plays ``tilde A``; the coupling is
    integrated with Gauss quadrature over all cells except those touching the
    two poles.  Returns the max-entry gap relative to ``max |tilde G|``.
    """
    if (spec_a.n, spec_a.N) != (spec_b.n, spec_b.N):
        raise PreconditionError("operators must share (n, N)")
    N = spec_a.N
    g = mask.grid
    rho = 2 * float(np.max(g.h)) if rho is None else rho
    xs, ys = _snap_pole(mask, x), _snap_pole(mask, y)
    if xs == ys:
        raise PreconditionError("x and y must be distinct")
    G = build_green_batch(spec_a, mask, [ys], rho, settings)[0]
    Gt = build_green_batch(spec_b, mask, [ys], rho, settings)[0]
    W = build_green_batch(spec_a, mask, [xs], rho, settings, transpose=True)[0]
    ax = [averaged_indicator_rhs(mask, xs, rho, j, N) for j in range(N)]
    lhs = np.array([[ax[j](Gt.columns[k]) for k in range(N)] for j in range(N)])
    base = np.array([[ax[j](G.columns[k]) for k in range(N)] for j in range(N)])

    ca, _, _ = cell_coefficients(spec_a, mask)
    cb, _, _ = cell_coefficients(spec_b, mask)
    shape = g.cells + (3, 3, N, N)
    diff = np.broadcast_to(ca, shape) - np.broadcast_to(cb, shape)
    weight = np.where(mask.inside, g.cell_volume, 0.0)
    for node in (g.nearest_node(xs), g.nearest_node(ys)):
        c = _pole_cells(g, node)
        weight[c[:, 0], c[:, 1], c[:, 2]] = 0.0
    coupling = np.zeros((N, N))
    if np.any(diff != 0):
        for j in range(N):
            for k in range(N):
                coupling[j, k] = _gauss_coupling(diff, W.columns[j], Gt.columns[k], weight)
    rhs = base + coupling
    return float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(lhs)))
