import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from greenlab import grid as G
from greenlab import operator as op
from greenlab.errors import (ConditionSViolatedError, DomainError, GridError, IterationLimitError,
                             PreconditionError)
from greenlab.fem import (CellSamples, DiscreteField, SolverSettings, assemble, averaged_indicator_rhs,
                          ball_average, boundary_poincare_ratio, caccioppoli_ratio, check_coercivity,
                          dirichlet_form, distribution_function, export_field, grad_l2, holder_seminorm,
                          load_rhs, lp_norm, point_functional, read_field, solve_dirichlet, solve_many,
                          y12_norm)
from greenlab.fem.element import GAUSS_WEIGHTS, local_gradient_products, shape_gradients, shape_values
from greenlab.fem.solve import component_order


def nodal(mask, fn, N=1, zero_boundary=False):
    vals = np.asarray(fn(mask.grid.node_points()), dtype=float).reshape(mask.grid.node_shape + (N,))
    if zero_boundary:
        vals = np.where(mask.free_nodes[..., None], vals, 0.0)
    return DiscreteField(mask, vals)


class TestElement:
    def test_partition_of_unity(self, rng):
        q = rng.random((10, 3))
        assert np.allclose(shape_values(q).sum(axis=-1), 1.0)
        assert np.allclose(shape_gradients(q, np.array([0.5, 0.5, 0.5])).sum(axis=-2), 0.0)

    def test_gauss_weights(self):
        assert sum(GAUSS_WEIGHTS) == pytest.approx(1.0)

    def test_laplacian_local_matrix(self):
        # classic Q1 unit-cube stiffness: diagonal 1/3, face -0 (0), edge -1/12, corner -1/12
        S = local_gradient_products(np.ones(3))
        K = np.einsum("aaxy->xy", S)
        assert K[0, 0] == pytest.approx(1 / 3)
        assert np.allclose(K.sum(axis=1), 0.0)


class TestAssembly:
    def test_laplacian_stencil(self):
        g = G.build_grid((0.0, 1.0), 4)
        sys_ = assemble(op.identity(1), G.full_box(g))
        h = 0.25
        K = sys_.K_ff.toarray()
        assert np.allclose(np.diag(K), 8 * h / 3)
        assert abs(K - K.T).max() <= 1e-14
        # rows of the full operator annihilate constants
        full = sys_.K_fc @ np.ones(sys_.n_dofs) + sys_.K_ff @ np.ones(sys_.K_ff.shape[0])
        assert np.abs(full).max() <= 1e-14

    def test_identity_is_dirichlet_form(self, rng):
        m = G.full_box(G.build_grid((0.0, 1.0), 6))
        sys_ = assemble(op.identity(2), m)
        ref = dirichlet_form(m, 2).K_ff
        u = rng.standard_normal(ref.shape[0])
        assert sys_.quadratic_form(u) == pytest.approx(float(u @ (ref @ u)), rel=1e-12)

    def test_transpose_assembles_transpose(self):
        m = G.notched_cube(G.build_grid((-1.0, 1.0), 6))
        spec = op.coupling(0.2)
        a = assemble(spec, m).K_ff
        b = assemble(op.transpose_operator(spec), m).K_ff
        assert abs(a - b.T).max() <= 1e-14
        assert abs(a - a.T).max() > 1e-3

    @pytest.mark.parametrize("spec", [op.identity(1), op.coupling(0.1), op.scalar_variable(0.3),
                                      op.checkerboard(1.0, 4.0, 0.5)])
    def test_coercivity(self, spec):
        m = G.half_space(G.build_grid((-1.0, 1.0), 8), 2, -0.5)
        chk = check_coercivity(assemble(spec, m), samples=64, seed=0)
        assert chk.passed

    def test_symmetry_flag(self, cube16):
        assert assemble(op.identity(1), cube16).symmetric
        assert not assemble(op.coupling(0.1), cube16).symmetric


class TestSolve:
    def test_zero_rhs(self, cube16):
        u = solve_dirichlet(assemble(op.identity(1), cube16))
        assert np.all(u.values == 0)

    def test_sine_eigenfunction(self):
        m = G.full_box(G.build_grid((0.0, 1.0), 32))

        def exact(p):
            return np.prod(np.sin(np.pi * p), axis=-1)

        u = solve_dirichlet(assemble(op.identity(1), m), load_rhs(m, lambda p: 3 * np.pi ** 2 * exact(p)))
        ref = nodal(m, exact)
        err = lp_norm(CellSamples(*_diff(u, ref)), 2) / lp_norm(ref, 2)
        assert err <= 0.02
        assert u.info["residual"] <= 1e-8

    def test_linear_boundary_data_exact(self):
        m = G.notched_cube(G.build_grid((-1.0, 1.0), 8))
        u = solve_dirichlet(assemble(op.identity(1), m), boundary=lambda p: p[..., 0],
                            settings=SolverSettings(rel_tol=1e-12))
        pts = m.grid.node_points()[m.closure_nodes]
        assert np.abs(u.values[m.closure_nodes][:, 0] - pts[:, 0]).max() <= 1e-9

    def test_gmres_path(self):
        m = G.full_box(G.build_grid((-1.0, 1.0), 10))
        sys_ = assemble(op.coupling(0.1), m)
        f = averaged_indicator_rhs(m, (0, 0, 0), 0.4, 1, 2)
        u = solve_dirichlet(sys_, f, settings=SolverSettings(method="gmres"))
        assert u.info["method"] == "gmres" and u.info["residual"] <= 1e-8

    def test_block_triangular_matches_gmres(self):
        m = G.full_box(G.build_grid((-1.0, 1.0), 10))
        sys_ = assemble(op.coupling(0.1), m)
        assert component_order(sys_.K_ff, 2) == [1, 0]
        f = averaged_indicator_rhs(m, (0, 0, 0), 0.4, 1, 2)
        a = solve_dirichlet(sys_, f)
        b = solve_dirichlet(sys_, f, settings=SolverSettings(method="gmres", rel_tol=1e-12))
        assert a.info["method"] == "block" and a.info["residual"] <= 1e-8
        assert np.abs(a.values - b.values).max() <= 1e-6 * np.abs(b.values).max()

    def test_block_rejects_cycles(self):
        m = G.full_box(G.build_grid((-1.0, 1.0), 6))
        sys_ = assemble(op.coupling(0.1, kind="complex"), m)
        assert component_order(sys_.K_ff, 2) is None
        with pytest.raises(PreconditionError):
            solve_dirichlet(sys_, averaged_indicator_rhs(m, (0, 0, 0), 0.5, 0, 2),
                            settings=SolverSettings(method="block"))

    def test_iteration_limit(self, cube16):
        sys_ = assemble(op.identity(1), cube16)
        f = averaged_indicator_rhs(cube16, (0, 0, 0), 0.25, 0)
        with pytest.raises(IterationLimitError) as exc:
            solve_dirichlet(sys_, f, SolverSettings(max_iter=2))
        assert len(exc.value.residual_history) >= 1

    def test_deterministic(self, cube16):
        sys_ = assemble(op.coupling(0.1), cube16)
        f = averaged_indicator_rhs(cube16, (0, 0, 0), 0.25, 0, 2)
        a, b = solve_dirichlet(sys_, f), solve_dirichlet(sys_, f)
        assert np.array_equal(a.values, b.values)

    @given(st.floats(-50, 50, allow_nan=False).filter(lambda c: abs(c) > 1e-3))
    def test_linear_in_rhs(self, c):
        m = G.full_box(G.build_grid((-1.0, 1.0), 8))
        sys_ = assemble(op.identity(1), m)
        w = averaged_indicator_rhs(m, (0, 0, 0), 0.5, 0).vector()
        base, _ = solve_many(sys_, w)
        scaled, _ = solve_many(sys_, c * w)
        assert np.allclose(scaled, c * base, rtol=1e-6, atol=1e-6 * abs(c) * np.abs(base).max())

    def test_multi_rhs_matches_single(self, cube16):
        sys_ = assemble(op.identity(1), cube16)
        fs = [averaged_indicator_rhs(cube16, y, 0.25, 0) for y in [(0, 0, 0), (0.25, 0, 0)]]
        block, _ = solve_many(sys_, np.stack([f.vector() for f in fs], axis=1))
        for i, f in enumerate(fs):
            single = solve_dirichlet(sys_, f).values
            assert np.abs(block[i] - single).max() <= 1e-10 * np.abs(single).max()


def _diff(u, ref):
    s = u.cell_samples(gradients=False)
    r = ref.cell_samples(gradients=False)
    return s.points, s.volumes, s.values - r.values


class TestFunctionals:
    def test_constant(self, cube16):
        f = averaged_indicator_rhs(cube16, (0, 0, 0), 0.3, 1, N=2)
        c = DiscreteField(cube16, np.full(cube16.grid.node_shape + (2,), 2.5))
        assert f(c) == pytest.approx(2.5)

    def test_other_component_ignored(self, cube16):
        f = averaged_indicator_rhs(cube16, (0, 0, 0), 0.3, 0, N=2)
        vals = np.zeros(cube16.grid.node_shape + (2,))
        vals[..., 1] = 7.0
        assert f(DiscreteField(cube16, vals)) == 0.0

    def test_centroid(self, cube16):
        y = (0.13, -0.2, 0.05)
        f = averaged_indicator_rhs(cube16, y, 0.4, 0)
        assert f(nodal(cube16, lambda p: p[..., 0])) == pytest.approx(y[0], abs=1e-3)

    def test_ball_average_agrees(self, cube16):
        u = nodal(cube16, lambda p: np.sin(p[..., 0]) + p[..., 2] ** 2)
        f = averaged_indicator_rhs(cube16, (0.1, 0, 0), 0.35, 0)
        assert ball_average(cube16, u.values, (0.1, 0, 0), 0.35)[0] == pytest.approx(f(u), rel=1e-12)

    def test_rho_floor(self, cube16):
        with pytest.raises(PreconditionError):
            averaged_indicator_rhs(cube16, (0, 0, 0), 0.1, 0)

    def test_outside_pole(self):
        m = G.half_space(G.build_grid((-1.0, 1.0), 16), 2, 0.0)
        with pytest.raises(DomainError):
            averaged_indicator_rhs(m, (0, 0, -0.5), 0.25, 0)

    def test_point_functional_interpolates(self, cube16):
        u = nodal(cube16, lambda p: 1 + p[..., 0] + 2 * p[..., 1] - p[..., 2])
        x = (0.11, -0.37, 0.52)
        assert point_functional(cube16, x, 0)(u) == pytest.approx(1 + 0.11 - 0.74 - 0.52)


class TestNorms:
    def test_lp_of_constant(self, unit_grid):
        m = G.full_box(unit_grid)
        u = nodal(m, lambda p: np.ones(p.shape[:-1]))
        for p in (1, 2, 6):
            assert lp_norm(u, p) == pytest.approx(1.0)
        region = lambda x: x[..., 0] < 0.5  # noqa: E731
        assert lp_norm(u, 2, region) == pytest.approx(0.5 ** 0.5)

    def test_grad_of_linear(self, unit_grid):
        u = nodal(G.full_box(unit_grid), lambda p: p[..., 0])
        assert grad_l2(u) == pytest.approx(1.0)

    def test_empty_region(self, unit_grid):
        u = nodal(G.full_box(unit_grid), lambda p: p[..., 0])
        with pytest.raises(DomainError):
            lp_norm(u, 2, lambda x: x[..., 0] > 5)

    def test_sobolev_ratio_stable(self):
        ratios = []
        for n in (32, 64):
            m = G.full_box(G.build_grid((-1.0, 1.0), n))
            u = nodal(m, lambda p: np.exp(-np.sum(p ** 2, axis=-1) / 0.09), zero_boundary=True)
            ratios.append(lp_norm(u, 6) / grad_l2(u))
        assert ratios[1] == pytest.approx(ratios[0], rel=0.02)
        # sharp Sobolev constant for n = 3 is about 0.4347
        assert ratios[1] <= 0.44
        assert y12_norm(u) > 0

    def test_holder_linear(self, unit_grid):
        u = nodal(G.full_box(unit_grid), lambda p: p[..., 0])
        assert holder_seminorm(u, 1.0) == pytest.approx(1.0)

    def test_holder_constant(self, unit_grid):
        u = nodal(G.full_box(unit_grid), lambda p: np.full(p.shape[:-1], 3.0))
        assert holder_seminorm(u, 0.5) == 0.0

    def test_holder_sqrt(self):
        m = G.full_box(G.build_grid((-1.0, 1.0), 16))
        u = nodal(m, lambda p: np.linalg.norm(p, axis=-1) ** 0.5)
        val = holder_seminorm(u, 0.5, region=lambda x: np.linalg.norm(x, axis=-1) < 0.5)
        assert val == pytest.approx(1.0, rel=0.10)

    def test_holder_sampling_deterministic(self):
        m = G.full_box(G.build_grid((-1.0, 1.0), 16))
        u = nodal(m, lambda p: np.sin(3 * p[..., 0]))
        a = holder_seminorm(u, 0.5, max_pairs=1000, seed=4)
        assert a == holder_seminorm(u, 0.5, max_pairs=1000, seed=4)

    def test_distribution_constant(self, unit_grid):
        u = nodal(G.full_box(unit_grid), lambda p: np.full(p.shape[:-1], 2.0))
        df = distribution_function(u, [1.0, 1.999, 2.0, 3.0])
        assert np.allclose(df.measures, [1, 1, 0, 0])

    def test_distribution_kernel(self):
        g = G.build_grid((-1.0, 1.0), 64)
        c = g.cell_centers().reshape(-1, 3)
        r = np.linalg.norm(c, axis=1)
        keep = r < 1.0
        s = CellSamples(c[keep], np.full(keep.sum(), g.cell_volume), (1 / (4 * np.pi * r[keep]))[:, None])
        radii = np.array([0.25, 0.4, 0.6])
        t = np.sort(1 / (4 * np.pi * radii))
        df = distribution_function(s, t)
        exact = 4 / 3 * np.pi * (4 * np.pi * t) ** -3.0
        assert np.allclose(df.measures, exact, rtol=0.05)

    def test_distribution_rejects_order(self, unit_grid):
        u = nodal(G.full_box(unit_grid), lambda p: p[..., 0])
        with pytest.raises(PreconditionError):
            distribution_function(u, [0.5, 0.2])

    @given(st.lists(st.floats(1e-3, 10.0), min_size=2, max_size=8, unique=True))
    def test_distribution_nonincreasing(self, ts):
        m = G.full_box(G.build_grid((-1.0, 1.0), 6))
        u = nodal(m, lambda p: np.exp(np.sum(p, axis=-1)))
        df = distribution_function(u, sorted(ts))
        assert np.all(np.diff(df.measures) <= 0)
        assert df.measures[0] <= df.region_measure


class TestBoundaryInequalities:
    def test_poincare_half_space(self):
        m = G.half_space(G.build_grid((-1.0, 1.0), 32), 2, 0.0)
        u = nodal(m, lambda p: np.clip(p[..., 2], 0.0, 0.5), zero_boundary=True)
        for R in (0.25, 0.5, 0.9):
            assert boundary_poincare_ratio(u, (0, 0, 0), R) <= 2.0

    def test_poincare_full_box_violates_s(self, cube16):
        u = nodal(cube16, lambda p: p[..., 0], zero_boundary=True)
        with pytest.raises(ConditionSViolatedError) as exc:
            boundary_poincare_ratio(u, (0, 0, 0), 0.5)
        assert exc.value.theta == 0.0

    def test_caccioppoli_bounded_and_stable(self):
        from greenlab.verify.regularity import _ensemble, local_boundary_mask

        worst = []
        for cells in (16, 32):
            m = G.half_space(G.build_grid((-1.0, 1.0), 8), 2, 0.0)
            local, _, cap = local_boundary_mask(m, (0, 0, 0), 0.5, cells)
            fields, _ = _ensemble(assemble(op.identity(1), local), cap, 16, 0, SolverSettings())
            worst.append(max(caccioppoli_ratio(f, (0, 0, 0), 0.2, 0.4) for f in fields))
        assert all(np.isfinite(worst))
        assert worst[1] == pytest.approx(worst[0], rel=0.25)

    def test_caccioppoli_radii(self, cube16):
        u = nodal(cube16, lambda p: p[..., 0])
        with pytest.raises(PreconditionError):
            caccioppoli_ratio(u, (0, 0, 0), 0.5, 0.5)


class TestExport:
    def test_roundtrip(self, tmp_path, cube16):
        u = nodal(cube16, lambda p: np.stack([p[..., 0], p[..., 1] ** 2], axis=-1), N=2)
        meta = export_field(u, tmp_path / "u")
        assert meta["dims"] == [17, 17, 17] and meta["N"] == 2
        back = read_field(tmp_path / "u", cube16)
        assert np.array_equal(back.values, u.values)
        raw = np.fromfile(tmp_path / "u.f64", dtype="<f8")
        assert raw[1] == u.values[0, 0, 0, 1]

    def test_wrong_mask(self, tmp_path, cube16):
        u = nodal(cube16, lambda p: p[..., 0])
        export_field(u, tmp_path / "u")
        other = G.half_space(cube16.grid, 2, 0.0)
        with pytest.raises(GridError):
            read_field(tmp_path / "u", other)

    def test_evaluate_outside(self, cube16):
        u = nodal(cube16, lambda p: p[..., 0])
        with pytest.raises(DomainError):
            u.evaluate((2.0, 0, 0))
