"""Empirical energy-decay exponents of solutions (interior and at the boundary).

For a solution ``u`` of ``L u = 0`` in ``B_R`` the energy ``E(r)`` on
concentric balls decays like ``r**(n - 2 + 2 mu)``.  An ensemble of
solutions with random boundary data gives per-solution exponents; the
reported ``mu`` is their minimum, which is an optimistic (upper) estimate of
the true exponent since only finitely many solutions are tried.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConditionSViolatedError, PreconditionError
from ..fem import SolverSettings, solve_many
from ..fem.field import DiscreteField
from ..grid import ball_cell_weights, build_grid, condition_s_estimate, mask_from_array
from ..green import get_system
from .fits import fit_power_law


@dataclass(frozen=True)
class PropertyHReport:
    mu_hat: float | None
    H_hat: float | None
    ensemble_size: int
    radii: tuple
    exponents: tuple
    r_squared: tuple
    median_r_squared: float
    reliable: bool
    seed: int
    label: str = "empirical"


def _energy_ladder(field, center, radii):
    grads = field.cell_gradients()
    dens = np.sum(grads ** 2, axis=(-2, -1))
    out = []
    for r in radii:
        idx, vol = ball_cell_weights(field.mask, center, r, sub=4)
        out.append(float(np.sum(vol * dens[idx[:, 0], idx[:, 1], idx[:, 2]])))
    return np.array(out)


def _ensemble(system, data_nodes, ensemble_size, seed, settings):
    """Solve with i.i.d. Gaussian nodal data on ``data_nodes``; member ``i`` depends only on ``(seed, i)``."""
    mask = system.mask
    N = system.N
    nb = int(data_nodes.sum()) * N
    rng = np.random.default_rng(seed)
    G = np.zeros((system.n_dofs, ensemble_size))
    flat = np.repeat(data_nodes.ravel(), N)
    for i in range(ensemble_size):
        G[flat, i] = rng.standard_normal(nb)
    vals, info = solve_many(system, np.zeros_like(G), settings, G)
    return [DiscreteField(mask, v) for v in vals], info


def _summarise(energies, radii, ensemble_size, seed, n=3):
    exps, r2s = [], []
    for E in energies:
        fit = fit_power_law(list(zip(radii, E)))
        exps.append((fit.exponent - (n - 2)) / 2)
        r2s.append(fit.r_squared)
    med = float(np.median(r2s))
    reliable = med >= 0.98
    mu = float(min(exps))
    R = radii[-1]
    H = max(float(np.max(E / (E[-1] * (radii / R) ** (n - 2 + 2 * mu)))) for E in energies)
    return PropertyHReport(mu_hat=mu if reliable else None, H_hat=H if reliable else None,
                           ensemble_size=ensemble_size, radii=tuple(map(float, radii)),
                           exponents=tuple(exps), r_squared=tuple(r2s), median_r_squared=med,
                           reliable=reliable, seed=seed)


def default_ladder(R, h, count=6):
    """Radii ``2h .. R/4``: small enough that the lowest harmonic dominates the energy."""
    return np.geomspace(max(2 * h, R / 16), R / 4, count)


def property_h_estimate(spec, center=(0.0, 0.0, 0.0), R=1.0, ensemble_size=16, seed=0, cells=48,
                        radii=None, settings=SolverSettings()):
    """Interior exponent ``mu_0`` and constant ``H_0`` from harmonic-type solutions in ``B_R``."""
    if ensemble_size < 16:
        raise PreconditionError("ensemble_size must be at least 16")
    c = np.asarray(center, dtype=float)
    grid = build_grid(np.stack([c - R, c + R], axis=1), cells)
    inside = np.sum((grid.cell_centers() - c) ** 2, axis=-1) < R ** 2
    mask = mask_from_array(grid, inside, name="ball")
    system = get_system(spec, mask) if spec.name != "custom" else None
    if system is None:
        from ..fem import assemble
        system = assemble(spec, mask)
    fields, _ = _ensemble(system, mask.boundary_nodes, ensemble_size, seed, settings)
    h = float(np.max(grid.h))
    radii = default_ladder(R, h) if radii is None else np.asarray(radii, dtype=float)
    energies = [_energy_ladder(f, c, radii) for f in fields]
    return _summarise(energies, radii, ensemble_size, seed)


def local_boundary_mask(mask, point, R, cells):
    """``Omega cap B_R(point)`` on a fresh grid, with the boundary nodes split into ``Sigma_R`` and the cap.

    Returns ``(local_mask, sigma_nodes, cap_nodes)``.
    """
    p = np.asarray(point, dtype=float)
    grid = build_grid(np.stack([p - R, p + R], axis=1), cells)
    centers = grid.cell_centers()
    in_ball = np.sum((centers - p) ** 2, axis=-1) < R ** 2
    if mask.predicate is not None:
        in_omega = np.asarray(mask.predicate(centers), dtype=bool)
    else:
        in_box = mask.grid.in_box(centers)
        in_omega = np.zeros(grid.cells, dtype=bool)
        in_omega[in_box] = mask.cell_inside_at(centers[in_box])
    local = mask_from_array(grid, in_ball & in_omega, name="local-boundary")
    exterior = np.pad(in_ball & ~in_omega, 1).astype(np.int8)
    cx, cy, cz = grid.cells
    touch = np.zeros(grid.node_shape, dtype=np.int8)
    for dx in (0, 1):
        for dy in (0, 1):
            for dz in (0, 1):
                touch += exterior[dx:dx + cx + 1, dy:dy + cy + 1, dz:dz + cz + 1]
    bnd = local.boundary_nodes
    sigma = bnd & (touch > 0)
    return local, sigma, bnd & ~sigma


def property_bh_estimate(spec, mask, point, R=0.5, ensemble_size=16, seed=0, cells=48, radii=None,
                         settings=SolverSettings(), s_samples=20_000):
    """Boundary exponent ``mu_1`` from solutions vanishing on ``Sigma_R`` near ``point``.

    Condition (S) is checked first; a vanishing exterior density raises
    :class:`ConditionSViolatedError`.
    """
    if ensemble_size < 16:
        raise PreconditionError("ensemble_size must be at least 16")
    if mask.name == "full-box" or not mask.on_boundary(np.asarray(point, dtype=float)):
        # the full box stands for the whole space: nothing lies outside it
        raise ConditionSViolatedError(f"no exterior near {tuple(point)} (theta = 0); boundary estimates do not apply",
                                      theta=0.0)
    rep = condition_s_estimate(mask, point, [R / 4, R / 2, R], sample_count=s_samples, seed=seed)
    if rep.theta_inf <= 0:
        raise ConditionSViolatedError(
            f"exterior density vanishes at {tuple(point)} (theta = 0); boundary estimates do not apply",
            theta=0.0)
    local, sigma, cap = local_boundary_mask(mask, point, R, cells)
    system = get_system(spec, local) if spec.name != "custom" else None
    if system is None:
        from ..fem import assemble
        system = assemble(spec, local)
    fields, _ = _ensemble(system, cap, ensemble_size, seed, settings)
    h = float(np.max(local.grid.h))
    radii = default_ladder(R, h) if radii is None else np.asarray(radii, dtype=float)
    energies = [_energy_ladder(f, point, radii) for f in fields]
    return _summarise(energies, radii, ensemble_size, seed)
