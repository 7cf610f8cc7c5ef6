"""Pointwise, weak-type and integral scaling estimates of averaged Green matrices.

Every fit respects the window rule: separations at least ``8h`` (below that
the averaging radius and the mesh dominate) and at most a quarter of the
box side (beyond that the truncation wall does).
"""

from __future__ import annotations

import itertools

import numpy as np

from ..errors import DegenerateDataError, NotApplicableError, PreconditionError, WindowError
from ..fem import SolverSettings, distribution_function
from ..fem.norms import magnitudes
from ..grid import boundary_distance
from ..green import build_averaged_green, energy_norm
from .fits import fit_power_law

DIRECTIONS = np.array([d for d in itertools.product((-1, 0, 1), repeat=3) if any(d)], dtype=float)
DIRECTIONS /= np.linalg.norm(DIRECTIONS, axis=1)[:, None]


def fit_window(G):
    """Admissible separation window ``(8h, L/4)`` on the finest level."""
    g = G.grid
    lo, hi = 8 * float(np.max(g.h)), float(np.min(g.extent)) / 4
    if hi <= lo * (1 + 1e-9):
        raise WindowError(f"empty fit window: 8h = {lo:.4g} >= L/4 = {hi:.4g}; refine the grid")
    return lo, hi


def _check_window(values, lo, hi, what="separation"):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise WindowError(f"empty {what} window")
    eps = 1e-9 * hi
    if np.any(values < lo - eps) or np.any(values > hi + eps):
        raise WindowError(f"{what}s must lie in [{lo:.6g}, {hi:.6g}]")


def default_separations(G, count=6):
    lo, hi = fit_window(G)
    return np.geomspace(lo, hi, count)


def max_entry(G, pts):
    return np.max(np.abs(G.evaluate(pts)), axis=(1, 2))


def decay_profile(G, separations=None, directions=DIRECTIONS):
    """Direction-averaged max-entry ``|G(x, y)|`` against ``r = |x - y|``, fitted as a power law."""
    seps = default_separations(G) if separations is None else np.asarray(separations, dtype=float)
    lo, hi = fit_window(G)
    _check_window(seps, lo, hi)
    y = np.asarray(G.pole)
    vals = [float(np.mean(max_entry(G, y + r * directions))) for r in seps]
    return fit_power_law(list(zip(seps, vals)))


def _pole_distance(samples, y):
    return np.linalg.norm(samples.points - np.asarray(y), axis=1)


def _shell_level(mag, dist, r, h):
    sel = np.abs(dist - r) <= max(0.05 * r, h)
    if not np.any(sel):
        raise DegenerateDataError(f"no samples near r = {r:.4g}")
    return float(np.median(mag[sel]))


def weak_tail_fit(G, kind="value", n_thresholds=12, r_min=None, exclude=None):
    """Distribution-function exponent of ``|G|`` (``kind="value"``) or ``|DG|``.

    The threshold decade is pinned by geometry: its top is the typical level
    on the sphere of radius ``r_min`` (default ``8h``) around the pole, its
    bottom ten times smaller; the superlevel set at the bottom must still
    stay inside the computed region.  Cells within ``exclude`` (default
    ``rho + 2h``) of the pole are removed from the sampling and their volume
    is added back, since they sit above every threshold of the decade.
    """
    h = float(np.max(G.grid.h))
    r_min = 8 * h if r_min is None else r_min
    exclude = G.rho + 2 * h if exclude is None else exclude
    y = np.asarray(G.pole)
    samples = G.cell_samples(gradients=(kind == "gradient"))
    dist = _pole_distance(samples, y)
    mag = magnitudes(samples, kind)
    if np.ptp(mag) <= 1e-14 * max(1.0, float(np.max(np.abs(mag)))):
        raise DegenerateDataError("field is constant; no tail to fit")
    cluster = dist < exclude
    t_hi = _shell_level(mag, dist, r_min, h)
    t_lo = t_hi / 10.0
    outer = G.levels[-1].mask.grid
    reach = float(np.min(np.minimum(np.asarray(y) - outer.lo, np.asarray(outer.hi) - y)))
    if np.any(mag[~cluster & (dist >= 0.9 * reach)] > t_lo) or t_lo <= 0:
        raise DegenerateDataError("threshold decade reaches the truncation boundary")
    if np.any(mag[cluster] <= t_hi):
        cluster = cluster & (mag > t_hi)
    kept = samples.restrict(~cluster)
    ts = np.geomspace(t_lo, t_hi, n_thresholds)
    df = distribution_function(kept, ts, kind=kind)
    measures = df.measures + float(samples.volumes[cluster].sum())
    if np.any(measures <= 0):
        raise DegenerateDataError("empty superlevel set inside the decade")
    return fit_power_law(list(zip(ts, measures)))


def _ball_integral(samples, y, r, quantity):
    d = _pole_distance(samples, y)
    return float(np.sum(samples.volumes[d < r] * quantity[d < r]))


def default_radii(G, count=5):
    lo, hi = fit_window(G)
    return np.geomspace(lo, hi, count)


def norm_scaling_suite(G, radii=None):
    """Fits of ``||G||_{L1(B_r)}``, ``||DG||_{L1(B_r)}`` and the Y^{1,2} norm outside ``B_r``.

    Returns a dict of :class:`FitResult` keyed ``l1_mass``, ``grad_l1`` and
    ``y12_tail``.
    """
    radii = default_radii(G) if radii is None else np.asarray(radii, dtype=float)
    if len(radii) < 3:
        raise WindowError("need at least 3 radii")
    lo, hi = fit_window(G)
    _check_window(radii, lo, hi, "radius")
    y = np.asarray(G.pole)
    if G.mask.name != "full-box":
        dy = boundary_distance(G.mask, y)
        if np.any(radii >= dy):
            raise WindowError("radii must stay below the boundary distance of the pole")
    s = G.cell_samples()
    val = magnitudes(s)
    grad = magnitudes(s, "gradient")
    d = _pole_distance(s, y)
    mass, gmass, tail = [], [], []
    for r in radii:
        inside = d < r
        mass.append(float(np.sum(s.volumes[inside] * val[inside])))
        gmass.append(float(np.sum(s.volumes[inside] * grad[inside])))
        out = ~inside
        l6 = float(np.sum(s.volumes[out] * val[out] ** 6) ** (1 / 6))
        l2 = float(np.sqrt(np.sum(s.volumes[out] * grad[out] ** 2)))
        tail.append(l6 + l2)
    return {
        "l1_mass": fit_power_law(list(zip(radii, mass))),
        "grad_l1": fit_power_law(list(zip(radii, gmass))),
        "y12_tail": fit_power_law(list(zip(radii, tail))),
    }


def energy_scaling(spec, mask, y, rhos, settings=SolverSettings(), exterior_levels=0, anchor=None):
    """Fit of ``||D v_rho||_{L2}`` against ``rho``; returns ``(fit, matrices)``."""
    if len(rhos) < 3:
        raise WindowError("need at least 3 radii")
    mats = [build_averaged_green(spec, mask, y, r, settings, exterior_levels, anchor) for r in rhos]
    pts = [(float(r), energy_norm(G)) for r, G in zip(rhos, mats)]
    return fit_power_law(pts), mats


def holder_continuity_check(G, x, distances=None, directions=DIRECTIONS):
    """Fit of direction-averaged ``|G(x, y) - G(z, y)|`` against ``|x - z|``.

    The window is ``8h <= |x - z| <= |x - y| / 2`` and every ``z`` must also
    satisfy ``|x - z| < dbar / 2`` with ``dbar = min(d_x, d_y, |x - y|)``.
    """
    h = float(np.max(G.grid.h))
    x = np.asarray(x, dtype=float)
    y = np.asarray(G.pole)
    sep = float(np.linalg.norm(x - y))
    if G.mask.name == "full-box" and len(G.levels) > 1:
        dbar = sep
    else:
        dbar = min(boundary_distance(G.mask, x), boundary_distance(G.mask, y), sep)
    hi = min(sep / 2, dbar / 2)
    lo = 8 * h
    if hi <= lo:
        raise WindowError("no admissible |x - z| window")
    dists = np.geomspace(lo, hi * 0.999, 5) if distances is None else np.asarray(distances, dtype=float)
    dists = dists[dists > 0]
    _check_window(dists, lo, hi, "|x - z| value")
    gx = G.evaluate(x)
    vals = []
    for t in dists:
        diff = np.abs(G.evaluate(x + t * directions) - gx).max(axis=(1, 2))
        vals.append(float(np.mean(diff)))
    return fit_power_law(list(zip(dists, vals)))


def inward_normal(mask, point):
    h = float(np.min(mask.grid.h))
    p = np.asarray(point, dtype=float)
    for axis, sign in itertools.product(range(3), (1, -1)):
        n = np.zeros(3)
        n[axis] = sign
        if mask.contains(p + 0.5 * h * n) and not mask.contains(p - 0.5 * h * n):
            return n
    raise PreconditionError("could not determine an inward normal at the boundary point")


def boundary_decay_fit(G, boundary_point, offsets=None, normal=None):
    """Fit of max-entry ``|G(x, y)|`` against ``d_x`` along the inward normal at ``boundary_point``.

    Requires ``d_x <= |x - y| / 8`` for every sample.
    """
    mask = G.mask
    xb = np.asarray(boundary_point, dtype=float)
    if not mask.on_boundary(xb):
        raise PreconditionError("point is not on the domain boundary")
    n = inward_normal(mask, xb) if normal is None else np.asarray(normal, dtype=float)
    h = float(np.max(G.grid.h))
    offsets = np.arange(2, 7) * h if offsets is None else np.asarray(offsets, dtype=float)
    y = np.asarray(G.pole)
    pts = xb + offsets[:, None] * n
    d = boundary_distance(mask, pts)
    sep = np.linalg.norm(pts - y, axis=1)
    if np.any(d > sep / 8 + 1e-12):
        raise WindowError("pole too close: need d_x <= |x - y| / 8")
    vals = max_entry(G, pts)
    return fit_power_law(list(zip(d, vals)))


def scalar_bounds_check(G, points, tol=1e-8):
    """Positivity and ``G(x, y) |x - y|`` bound over sample points; scalar operators only.

    Returns ``(min_value, C)`` with ``C = max G(x, y) |x - y|``.
    """
    if G.N != 1:
        raise NotApplicableError("scalar bounds apply to N = 1 only")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    vals = G.evaluate(pts)[:, 0, 0]
    r = np.linalg.norm(pts - np.asarray(G.pole), axis=1)
    if np.any(r <= 0):
        raise PreconditionError("sample points must differ from the pole")
    return float(vals.min()), float(np.max(vals * r))
