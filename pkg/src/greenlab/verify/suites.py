"""Named verification suites: each turns a configured experiment into check results.

Geometry is derived from the configured box: ``c`` is its centre, ``L`` the
shortest side and ``h`` the mesh width.  Every check is wrapped so that a
failure (solver breakdown, window violation, ...) is recorded as a failed
check and the remaining checks still run.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from ..errors import NotApplicableError, WindowError
from ..fem import DiscreteField, SolverSettings, caccioppoli_ratio
from ..fem.norms import boundary_poincare_ratio
from ..grid import build_grid, builtin_mask, condition_s_estimate, half_space
from ..green import (averaging_consistency, build_averaged_green, gradient_representation_residual,
                     perturbation_residual, represent_solution, symmetry_residual)
from ..operator import bump, perturbed, transpose_operator
from .estimates import (DIRECTIONS, boundary_decay_fit, decay_profile, energy_scaling,
                        fit_window, holder_continuity_check, norm_scaling_suite,
                        scalar_bounds_check, weak_tail_fit)
from .fits import fit_power_law
from .report import CheckResult, bound_check, failed_check, fit_check, within

SUITE_NAMES = ("calibrate", "decay", "tails", "scalings", "symmetry", "representation",
               "perturbation", "boundary", "regularity")


@dataclass
class SuiteContext:
    """Everything a suite needs; expensive intermediates are memoised per run."""

    spec: object
    mask: object
    settings: SolverSettings = field(default_factory=SolverSettings)
    rho_cells: float = 2.0
    exterior_levels: int = 4
    pole: tuple | None = None
    seed: int = 0
    sampling_seed: int = 0
    ensemble_size: int = 16
    regularity_cells: int = 48
    sample_count: int = 100_000
    mask_name: str = "full-box"
    mask_params: dict = field(default_factory=dict)
    _memo: dict = field(default_factory=dict, repr=False)
    _locks: dict = field(default_factory=dict, repr=False)
    _guard_lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def grid(self):
        return self.mask.grid

    @property
    def h(self):
        return float(np.max(self.grid.h))

    @property
    def L(self):
        return float(np.min(self.grid.extent))

    @property
    def center(self):
        if self.pole is not None:
            return np.asarray(self.pole, dtype=float)
        return 0.5 * (np.asarray(self.grid.lo) + np.asarray(self.grid.hi))

    @property
    def rho(self):
        return self.rho_cells * self.h

    @property
    def is_identity(self):
        return self.spec.name == "identity"

    def memo(self, key, fn):
        """Compute ``fn()`` once per key, also when suites run in parallel threads."""
        with self._guard_lock:
            lock = self._locks.setdefault(key, threading.Lock())
        with lock:
            if key not in self._memo:
                self._memo[key] = fn()
            return self._memo[key]

    def green(self, transpose=False):
        spec = transpose_operator(self.spec) if transpose else self.spec
        return self.memo(("green", transpose), lambda: build_averaged_green(
            spec, self.mask, self.center, self.rho, self.settings, self.exterior_levels))

    def rebuilt_mask(self, cells):
        g = build_grid(np.stack([self.grid.lo, self.grid.hi], axis=1), cells)
        return builtin_mask(g, self.mask_name, **self.mask_params)


def _guard(check_id, reference, fn):
    try:
        out = fn()
    except Exception as exc:  # a failing check must not abort the suite
        return [failed_check(check_id, reference, exc)]
    return out if isinstance(out, list) else [out]


# -- calibrate ---------------------------------------------------------------------------------

def _oracle_error(G, oracle, seps):
    y = np.asarray(G.pole)
    worst = 0.0
    for r in seps:
        pts = y + r * DIRECTIONS
        vals = G.evaluate(pts)
        diag = np.stack([vals[:, k, k] for k in range(G.N)], axis=1)
        ref = oracle(pts)[:, None]
        worst = max(worst, float(np.max(np.abs(diag / ref - 1))))
    return worst


def _kernel(y):
    return lambda x: 1.0 / (4 * np.pi * np.linalg.norm(x - y, axis=-1))


def _image_kernel(y, axis, offset):
    ys = np.array(y, dtype=float)
    ys[axis] = 2 * offset - ys[axis]
    return lambda x: (1.0 / np.linalg.norm(x - y, axis=-1) - 1.0 / np.linalg.norm(x - ys, axis=-1)) / (4 * np.pi)


def suite_calibrate(ctx):
    out = _guard("calibrate.decay_exponent", "pointwise bound |G(x,y)| <= C|x-y|^(2-n), slope 2-n = -1",
                 lambda: fit_check("calibrate.decay_exponent",
                                   "pointwise bound |G(x,y)| <= C|x-y|^(2-n), slope 2-n = -1",
                                   decay_profile(ctx.green()), -1.0, 0.15, r2_min=0.98))
    if not ctx.is_identity:
        return out
    if ctx.mask.name == "full-box":
        ref = "scalar Laplacian kernel oracle 1/(4 pi |x-y|)"

        def run():
            G = ctx.green()
            seps = np.geomspace(*fit_window(G), 8)
            err = _oracle_error(G, _kernel(np.asarray(G.pole)), seps)
            return bound_check("calibrate.kernel", ref, err, 0.10, details={"separations": list(seps)})
        out += _guard("calibrate.kernel", ref, run)
    elif ctx.mask.name == "half-space":
        ref = "half-space image formula (1/4pi)(1/|x-y| - 1/|x-y*|)"

        def run():
            G = ctx.green()
            axis, offset = ctx.mask.params["axis"], ctx.mask.params["offset"]
            lo, hi = fit_window(G)
            hi = min(hi, float(G.pole[axis]) - offset - ctx.h)
            seps = np.geomspace(lo, hi, 8)
            err = _oracle_error(G, _image_kernel(np.asarray(G.pole), axis, offset), seps)
            return bound_check("calibrate.image", ref, err, 0.10, details={"separations": list(seps)})
        out += _guard("calibrate.image", ref, run)
    return out


# -- decay -----------------------------------------------------------------------------------

def suite_decay(ctx):
    ref = "pointwise bound |G(x,y)| <= C|x-y|^(2-n), slope 2-n = -1"
    out = _guard("decay.exponent", ref, lambda: fit_check(
        "decay.exponent", ref, decay_profile(ctx.green()), -1.0, 0.15, r2_min=0.98))

    ref_t = "transpose duality G^t(x,y) = G(y,x)^T: decay exponents of L and L^t agree"

    def duality():
        a = decay_profile(ctx.green()).exponent
        b = decay_profile(ctx.green(transpose=True)).exponent
        return CheckResult("decay.transpose_duality", ref_t, abs(a - b), abs(a - b) <= 0.05, 0.0, 0.05,
                           "difference", details={"exponent": a, "transpose_exponent": b})
    out += _guard("decay.transpose_duality", ref_t, duality)

    if ctx.spec.N == 1:
        ref_s = "scalar case: maximum principle gives 0 <= G(x,y) <= C|x-y|^(2-n)"

        def bounds():
            G = ctx.green()
            seps = np.geomspace(*fit_window(G), 6)
            pts = np.concatenate([np.asarray(G.pole) + r * DIRECTIONS for r in seps])
            lo, C = scalar_bounds_check(G, pts)
            ok = lo >= -1e-8
            if ctx.is_identity:
                ok = ok and C <= 1.1 / (4 * np.pi)
            return CheckResult("decay.scalar_bounds", ref_s, C, ok, 1.1 / (4 * np.pi) if ctx.is_identity else None,
                               None, "upper-bound", details={"min_value": lo})
        out += _guard("decay.scalar_bounds", ref_s, bounds)
    return out


# -- tails ------------------------------------------------------------------------------------

def suite_tails(ctx):
    out = []
    for kind, target, ref in (
            ("value", -3.0, "uniform weak-L^{n/(n-2)} bound on G: distribution slope -n/(n-2) = -3"),
            ("gradient", -1.5, "uniform weak-L^{n/(n-1)} bound on DG: distribution slope -n/(n-1) = -1.5")):
        cid = f"tails.{kind}"
        out += _guard(cid, ref, lambda kind=kind, target=target, cid=cid, ref=ref: fit_check(
            cid, ref, weak_tail_fit(ctx.green(), kind), target, 0.3))
    return out


# -- scalings ---------------------------------------------------------------------------------

_SCALINGS = {
    "l1_mass": (2.0, 0.2, "L^1(B_r) mass of G scales like r^(2-n+n/p), p = 1: slope 2"),
    "grad_l1": (1.0, 0.2, "L^1(B_r) mass of DG scales like r^(1-n+n/p), p = 1: slope 1"),
    "y12_tail": (-0.5, 0.15, "Y^{1,2} norm of G outside B_r scales like r^(1-n/2): slope -0.5"),
}


def suite_scalings(ctx):
    out = []
    try:
        fits = norm_scaling_suite(ctx.green())
    except Exception as exc:
        fits = None
        out += [failed_check(f"scalings.{k}", v[2], exc) for k, v in _SCALINGS.items()]
    if fits is not None:
        for k, (target, tol, ref) in _SCALINGS.items():
            out.append(fit_check(f"scalings.{k}", ref, fits[k], target, tol))

    ref_e = "energy of the averaged matrix ||D G^rho|| <= C rho^((2-n)/2): slope -0.5"

    def energy():
        rhos = [2 * ctx.h, 4 * ctx.h, 8 * ctx.h, 16 * ctx.h]
        fit, _ = energy_scaling(ctx.spec, ctx.mask, ctx.center, rhos, ctx.settings, ctx.exterior_levels)
        return fit_check("scalings.energy_rho", ref_e, fit, -0.5, 0.1)
    out += _guard("scalings.energy_rho", ref_e, energy)
    return out


# -- symmetry and averaging ------------------------------------------------------------------

def check_symmetry_residual(ctx):
    c, L = ctx.center, ctx.L
    e = np.array([1.0, 0.0, 0.0])
    tol = 1e-3 if ctx.spec.self_adjoint else 1e-2
    ref = "symmetry identity between averaged matrices of L and its transpose"

    def sym():
        r = symmetry_residual(ctx.spec, ctx.mask, c + L / 8 * e, c - L / 8 * e, ctx.rho, ctx.rho, ctx.settings)
        return bound_check("symmetry.residual", ref, r, tol,
                           details={"self_adjoint": bool(ctx.spec.self_adjoint)})
    return _guard("symmetry.residual", ref, sym)


def check_averaging(ctx):
    c, L = ctx.center, ctx.L
    e = np.array([1.0, 0.0, 0.0])
    ref_a = "averaging identity G^rho(x,y) = mean over B_rho(y) of G^{rho/2}(x,.)"

    def avg():
        x, y = c + L / 4 * e, c - L / 4 * e
        rhos = [8 * ctx.h, 4 * ctx.h, 2 * ctx.h]
        devs = [averaging_consistency(ctx.spec, ctx.mask, x, y, r, ctx.settings) for r in rhos]
        ok = devs[1] <= 0.05 and devs[0] > devs[1] > devs[2]
        return CheckResult("symmetry.averaging", ref_a, devs[1], ok, 0.0, 0.05, "upper-bound",
                           details={"rhos": rhos, "deviations": devs, "monotone": devs[0] > devs[1] > devs[2]})
    return _guard("symmetry.averaging", ref_a, avg)


def suite_symmetry(ctx):
    return check_symmetry_residual(ctx) + check_averaging(ctx)


# -- representation ----------------------------------------------------------------------------

def _sample_points(c, L):
    offs = np.array([(0, 0, 0), (0.1, 0, 0), (0, 0.15, 0.05), (-0.125, 0.05, -0.1),
                     (0.2, 0.2, 0), (0.05, -0.25, 0.1)])
    return [tuple(c + L * o) for o in offs]


def suite_representation(ctx):
    c, L = ctx.center, ctx.L
    N = ctx.spec.N
    width = 0.15 * L
    ref = "representation u(x) = int G(x,y) f(y) dy of the Dirichlet solution"

    def rep():
        def f(p):
            return np.repeat(bump(p, c, width)[..., None], N, axis=-1)
        r = represent_solution(ctx.spec, ctx.mask, f, _sample_points(c, L), ctx.rho, ctx.settings)
        return bound_check("representation.solution", ref, r.relative_error, 0.05,
                           details={"omitted_volume": r.omitted_volume, "omitted_estimate": r.omitted_estimate})
    out = _guard("representation.solution", ref, rep)

    ref_g = "gradient representation int A DG(x,.) Df = f(x) for test profiles"

    def grad():
        def f(p):
            v = np.exp(-np.sum((np.asarray(p) - c) ** 2, axis=-1) / width ** 2)
            return np.repeat(v[..., None], N, axis=-1)
        cells = ctx.grid.cells
        coarse = ctx.rebuilt_mask(tuple(max(2, n // 2) for n in cells))
        fine = gradient_representation_residual(ctx.spec, ctx.mask, f, c, None, ctx.settings)
        rough = gradient_representation_residual(ctx.spec, coarse, f, c, None, ctx.settings)
        ok = fine <= 0.10 and fine < rough
        return CheckResult("representation.gradient", ref_g, fine, ok, 0.0, 0.10, "upper-bound",
                           details={"coarse_residual": rough, "decreasing": fine < rough})
    out += _guard("representation.gradient", ref_g, grad)
    return out


# -- perturbation ----------------------------------------------------------------------------

def suite_perturbation(ctx):
    c, L = ctx.center, ctx.L
    e = np.array([1.0, 0.0, 0.0])
    x, y = c + L / 8 * e, c - L / 8 * e
    ref = "perturbation identity G~ = G + int DG (A - A~) DG~ for a 5% smooth scalar bump"
    ref_same = "perturbation identity with coinciding operators"

    def bumpy():
        other = perturbed(ctx.spec, 0.05, tuple(c), 0.15 * L)
        r = perturbation_residual(ctx.spec, other, ctx.mask, x, y, ctx.rho, ctx.settings)
        return bound_check("perturbation.bump", ref, r, 0.10)

    def same():
        r = perturbation_residual(ctx.spec, ctx.spec, ctx.mask, x, y, ctx.rho, ctx.settings)
        return bound_check("perturbation.identical", ref_same, r, 1e-3)
    return _guard("perturbation.bump", ref, bumpy) + _guard("perturbation.identical", ref_same, same)


# -- boundary ----------------------------------------------------------------------------------

def boundary_setup(ctx):
    """``(mask, boundary point, inward direction)`` for the boundary checks.

    A full box has no boundary in the computed sense (its walls only truncate
    whole space), so the boundary checks then use the half-space bounded by
    the bottom face of the box.
    """
    return ctx.memo("boundary_setup", lambda: _boundary_setup(ctx))


def _boundary_setup(ctx):
    m, g = ctx.mask, ctx.grid
    c = 0.5 * (np.asarray(g.lo) + np.asarray(g.hi))
    name, p = m.name, m.params
    if name == "full-box":
        m = half_space(g, 2, float(g.lo[2]))
        name, p = m.name, m.params
    if name == "half-space":
        a = p["axis"]
        xb = c.copy()
        xb[a] = p["offset"]
        n = np.zeros(3)
        n[a] = 1.0
    elif name == "slab":
        a = p["axis"]
        xb = c.copy()
        xb[a] = p["lower"]
        n = np.zeros(3)
        n[a] = 1.0
    elif name == "notched-cube":
        xb = np.asarray(p["corner"], dtype=float)
        n = -np.ones(3) / math.sqrt(3)
    elif name == "ball":
        n = np.array([-1.0, 0.0, 0.0])
        xb = np.asarray(p["center"], dtype=float) - p["radius"] * n
    else:
        raise NotApplicableError(f"no boundary point known for mask {name!r}")
    return m, xb, n


def _snap_to_boundary(mask, xb):
    g = mask.grid
    return g.node_point(g.nearest_node(xb))


def _boundary_green(ctx):
    def build():
        m, xb, n = boundary_setup(ctx)
        xb = _snap_to_boundary(m, xb)
        # offsets reach 6h and need d_x <= |x - y| / 8
        y = xb + (56 * ctx.h) * n
        if not m.grid.in_box(y[None])[0] or not m.contains(y):
            raise WindowError("the boundary decay window needs 56h of domain along the inward normal")
        G = build_averaged_green(ctx.spec, m, y, ctx.rho, ctx.settings, ctx.exterior_levels, anchor=xb)
        return G, xb, n
    return ctx.memo("boundary_green", build)


def _boundary_decay(ctx):
    def run():
        G, xb, n = _boundary_green(ctx)
        return boundary_decay_fit(G, xb, normal=n)
    return ctx.memo("boundary_decay", run)


def _condition_s(ctx):
    def run():
        m, xb, _ = boundary_setup(ctx)
        radii = [ctx.L / 16, ctx.L / 8, ctx.L / 4]
        return condition_s_estimate(m, _snap_to_boundary(m, xb), radii, ctx.sample_count, ctx.sampling_seed)
    return ctx.memo("condition_s", run)


def suite_boundary(ctx):
    out = []
    ref_s = "condition (S): |B_R(x) minus Omega| >= theta |B_R(x)| at boundary points"

    def cond_s():
        rep = _condition_s(ctx)
        m, _, _ = boundary_setup(ctx)
        det = {"theta_hat": rep.theta_hat, "radii": rep.radii, "R_a": rep.R_a, "R_a_capped": rep.R_a_capped,
               "seed": rep.seed, "mask": m.name}
        if m.name == "half-space":
            ok = within(rep.theta_inf, 0.5, 0.02)
            return CheckResult("boundary.condition_s", ref_s, rep.theta_inf, ok, 0.5, 0.02, "ratio", details=det)
        return bound_check("boundary.condition_s", ref_s, rep.theta_inf, 0.01, upper=False, details=det)
    out += _guard("boundary.condition_s", ref_s, cond_s)

    ref_d = "boundary decay |G(x,y)| <= C d_x^mu near the boundary"

    def decay():
        fit = _boundary_decay(ctx)
        m, _, _ = boundary_setup(ctx)
        if ctx.is_identity and m.name == "half-space":
            G, xb, n = _boundary_green(ctx)
            y = np.asarray(G.pole)
            axis, offset = m.params["axis"], m.params["offset"]
            img = _image_kernel(y, axis, offset)
            pts = [xb + s * n for s, _ in fit.data]
            oracle = fit_power_law([(s, float(img(p[None])[0])) for (s, _), p in zip(fit.data, pts)])
            return fit_check("boundary.decay", ref_d + "; half-space image oracle slope 1", fit, 1.0, 0.2,
                             details={"oracle_exponent": oracle.exponent})
        ok = fit.exponent >= 0.1 and fit.r_squared >= 0.95
        return CheckResult("boundary.decay", ref_d + "; positive slope", fit.exponent, ok, 0.1, None,
                           "exponent-lower-bound", fit.window, fit.r_squared, fit.data, {"r2_min": 0.95})
    out += _guard("boundary.decay", ref_d, decay)

    ref_p = "boundary Poincare inequality ||u||_{L2(Omega_R)} <= C R ||Du||_{L2(Omega_R)}, C <= 1/theta"

    def poincare():
        rep = _condition_s(ctx)
        G, xb, n = _boundary_green(ctx)
        fields = G.columns + _random_boundary_fields(G.mask, ctx.spec.N, ctx.sampling_seed)
        radii = [ctx.L / 8, ctx.L / 4]
        ratios = [boundary_poincare_ratio(f, xb, R) for f in fields for R in radii]
        cacc = [caccioppoli_ratio(f, xb, R / 2, R) for f in fields for R in radii]
        limit = 1.0 / rep.theta_inf if rep.theta_inf > 0 else math.inf
        return bound_check("boundary.poincare", ref_p, max(ratios), limit,
                           details={"ratios": ratios, "fields": len(fields), "caccioppoli_ratios": cacc})
    out += _guard("boundary.poincare", ref_p, poincare)
    return out


def _random_boundary_fields(mask, N, seed, count=4):
    """Smooth random trigonometric fields, zero on the boundary nodes of ``mask``."""
    rng = np.random.default_rng(seed)
    g = mask.grid
    pts = (g.node_points() - np.asarray(g.lo)) / np.asarray(g.extent)
    out = []
    for _ in range(count):
        freq = rng.integers(1, 4, size=(N, 3))
        phase = rng.uniform(0, 2 * np.pi, size=(N, 3))
        vals = np.ones(g.node_shape + (N,))
        for j in range(N):
            for a in range(3):
                vals[..., j] *= np.cos(np.pi * freq[j, a] * pts[..., a] + phase[j, a])
        vals[~mask.free_nodes] = 0.0
        out.append(DiscreteField(mask, vals))
    return out


# -- regularity --------------------------------------------------------------------------------

def _property_h(ctx):
    from .regularity import property_h_estimate
    return ctx.memo("property_h", lambda: property_h_estimate(
        ctx.spec, ctx.center, ctx.L / 2, ctx.ensemble_size, ctx.seed, ctx.regularity_cells,
        settings=ctx.settings))


def _property_bh(ctx):
    from .regularity import property_bh_estimate

    def run():
        m, xb, _ = boundary_setup(ctx)
        return property_bh_estimate(ctx.spec, m, _snap_to_boundary(m, xb), ctx.L / 4, ctx.ensemble_size,
                                    ctx.seed, ctx.regularity_cells, settings=ctx.settings,
                                    s_samples=ctx.sample_count)
    return ctx.memo("property_bh", run)


def _h_details(rep):
    return {"empirical": True, "ensemble_size": rep.ensemble_size, "radii": list(rep.radii),
            "exponents": list(rep.exponents), "median_r_squared": rep.median_r_squared,
            "H_hat": rep.H_hat, "seed": rep.seed}


def suite_regularity(ctx):
    out = []
    ref_h = "property (H): interior energy decay int_{B_r}|Du|^2 <= H (r/R)^(n-2+2mu) int_{B_R}|Du|^2"

    def prop_h():
        rep = _property_h(ctx)
        if rep.mu_hat is None:
            raise WindowError(f"median r^2 {rep.median_r_squared:.4f} below 0.98")
        if ctx.is_identity:
            ok = within(rep.mu_hat, 1.0, 0.1)
            return CheckResult("regularity.property_h", ref_h + "; harmonic oracle mu = 1", rep.mu_hat, ok,
                               1.0, 0.1, "exponent", r_squared=rep.median_r_squared, details=_h_details(rep))
        return CheckResult("regularity.property_h", ref_h, rep.mu_hat, rep.mu_hat > 0, 0.0, None,
                           "exponent-lower-bound", r_squared=rep.median_r_squared, details=_h_details(rep))
    out += _guard("regularity.property_h", ref_h, prop_h)

    ref_bh = "property (BH): boundary energy decay for solutions vanishing on the boundary patch"

    def prop_bh():
        rep = _property_bh(ctx)
        if rep.mu_hat is None:
            raise WindowError(f"median r^2 {rep.median_r_squared:.4f} below 0.98")
        return CheckResult("regularity.property_bh", ref_bh, rep.mu_hat, rep.mu_hat > 0, 0.0, None,
                           "exponent-lower-bound", r_squared=rep.median_r_squared, details=_h_details(rep))
    out += _guard("regularity.property_bh", ref_bh, prop_bh)

    ref_c = "Holder continuity |G(x,y)-G(z,y)| <= C|x-z|^mu0 |x-y|^(2-n-mu0)"

    def holder():
        rep = _property_h(ctx)
        if rep.mu_hat is None:
            raise WindowError("no reliable mu0 estimate")
        G = ctx.green()
        x = np.asarray(G.pole) + np.array([0.35 * ctx.L, 0.0, 0.0])
        fit = holder_continuity_check(G, x)
        lim = rep.mu_hat - 0.15
        return CheckResult("regularity.holder", ref_c, fit.exponent, fit.exponent >= lim and fit.r_squared >= 0.95,
                           lim, None, "exponent-lower-bound", fit.window, fit.r_squared, fit.data,
                           {"mu0_hat": rep.mu_hat})
    out += _guard("regularity.holder", ref_c, holder)

    ref_b = "boundary decay exponent at least min(mu0, mu1)"

    def bdecay():
        h, bh = _property_h(ctx), _property_bh(ctx)
        if h.mu_hat is None or bh.mu_hat is None:
            raise WindowError("no reliable mu0 / mu1 estimate")
        fit = _boundary_decay(ctx)
        lim = min(h.mu_hat, bh.mu_hat) - 0.15
        return CheckResult("regularity.boundary_decay", ref_b, fit.exponent, fit.exponent >= lim, lim, None,
                           "exponent-lower-bound", fit.window, fit.r_squared, fit.data,
                           {"mu0_hat": h.mu_hat, "mu1_hat": bh.mu_hat})
    out += _guard("regularity.boundary_decay", ref_b, bdecay)
    return out


SUITES = {
    "calibrate": suite_calibrate,
    "decay": suite_decay,
    "tails": suite_tails,
    "scalings": suite_scalings,
    "symmetry": suite_symmetry,
    "representation": suite_representation,
    "perturbation": suite_perturbation,
    "boundary": suite_boundary,
    "regularity": suite_regularity,
}


def suite_members(name):
    if name == "all":
        return list(SUITE_NAMES)
    if name not in SUITES:
        raise KeyError(name)
    return [name]


def run_suite(ctx, name):
    """Check results of suite ``name`` (``"all"`` runs every suite in a fixed order)."""
    out = []
    for member in suite_members(name):
        out.extend(SUITES[member](ctx))
    return out
