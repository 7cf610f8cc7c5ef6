import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from greenlab import grid as G
from greenlab.errors import DomainError, GridError


class TestGrid:
    def test_unit_cube(self):
        g = G.build_grid((0.0, 1.0), 4)
        assert np.allclose(g.h, 0.25)
        assert g.n_nodes == 125
        assert g.n_cells == 64

    def test_big_cube(self):
        assert np.allclose(G.build_grid((-1.0, 1.0), 64).h, 1 / 32)

    @pytest.mark.parametrize("cells", [(0, 4, 4), (4, -1, 4)])
    def test_bad_cells(self, cells):
        with pytest.raises(GridError):
            G.build_grid((0.0, 1.0), cells)

    def test_bad_extent(self):
        with pytest.raises(GridError):
            G.build_grid(((0, 1), (1, 1), (0, 1)), 4)

    def test_lexicographic_order(self):
        g = G.build_grid(((0, 1), (0, 2), (0, 3)), (1, 2, 3))
        pts = g.node_points().reshape(-1, 3)
        # z runs fastest
        assert np.allclose(pts[1] - pts[0], [0, 0, 1])
        assert pts.shape == (g.n_nodes, 3)

    def test_nearest_node_roundtrip(self):
        g = G.build_grid((-1.0, 1.0), 8)
        idx = (3, 5, 7)
        assert g.nearest_node(g.node_point(idx) + 0.01) == idx


class TestMasks:
    def test_full_box(self, unit_grid):
        m = G.full_box(unit_grid)
        assert m.inside.all()
        faces = np.zeros(unit_grid.node_shape, dtype=bool)
        faces[[0, -1]] = faces[:, [0, -1]] = faces[:, :, [0, -1]] = True
        assert np.array_equal(m.boundary_nodes, faces)
        assert np.array_equal(m.free_nodes, ~faces)

    def test_half_space_half_the_cells(self):
        g = G.build_grid((-1.0, 1.0), 8)
        m = G.half_space(g, 2, 0.0)
        assert m.inside.sum() * 2 == g.n_cells

    def test_disconnected(self, unit_grid):
        with pytest.raises(DomainError):
            G.mask_from_predicate(unit_grid, lambda x: np.abs(x[..., 0] - 0.5) > 0.3)

    def test_empty(self, unit_grid):
        with pytest.raises(DomainError):
            G.mask_from_predicate(unit_grid, lambda x: x[..., 0] > 2)

    def test_notched_volume(self):
        g = G.build_grid((-1.0, 1.0), 8)
        assert G.notched_cube(g).volume == pytest.approx(7.0)

    def test_builtin_lookup(self, unit_grid):
        assert G.builtin_mask(unit_grid, "slab", axis=0, lower=0.2, upper=0.8).name == "slab"
        with pytest.raises(DomainError):
            G.builtin_mask(unit_grid, "torus")

    def test_point_classification(self):
        g = G.build_grid((-1.0, 1.0), 8)
        m = G.half_space(g, 2, 0.0)
        assert m.contains((0.1, 0.1, 0.5))
        assert not m.contains((0.1, 0.1, -0.5))
        assert m.on_boundary((0.1, 0.1, 0.0))
        assert m.on_boundary((0.3, 0.2, 1.0))
        assert not m.on_boundary((0.3, 0.2, 0.5))

    def test_export_roundtrip(self, tmp_path):
        g = G.build_grid(((0, 1), (0, 2), (-1, 1)), (4, 6, 8))
        m = G.ball(g, (0.5, 1.0, 0.0), 0.7)
        path = tmp_path / "m.bin"
        G.write_mask(m, path)
        back = G.read_mask(path)
        assert np.array_equal(back.inside, m.inside)
        assert back.mask_id == m.mask_id
        blob = path.read_bytes()
        assert blob[:4] == b"GLMK" and len(blob) == G._HEADER.size + g.n_cells

    def test_dilated_keeps_cells(self):
        g = G.build_grid((-1.0, 1.0), 8)
        d = G.half_space(g, 2, 0.0).dilated(2.0, (0, 0, 0))
        assert d.grid.cells == g.cells and np.allclose(d.grid.lo, -2)
        assert d.inside.sum() * 2 == g.n_cells


class TestBoundaryDistance:
    def test_full_box_centre(self):
        m = G.full_box(G.build_grid((0.0, 1.0), 4))
        assert G.boundary_distance(m, (0.5, 0.5, 0.5)) == pytest.approx(0.5)

    def test_half_space(self):
        m = G.half_space(G.build_grid((-1.0, 1.0), 8), 2, 0.0)
        assert G.boundary_distance(m, (0.0, 0.0, 0.25)) == pytest.approx(0.25)

    def test_on_face(self):
        m = G.full_box(G.build_grid((0.0, 1.0), 4))
        assert G.boundary_distance(m, (0.5, 0.5, 0.0)) == 0.0

    def test_outside(self):
        m = G.half_space(G.build_grid((-1.0, 1.0), 8), 2, 0.0)
        with pytest.raises(DomainError):
            G.boundary_distance(m, (0.0, 0.0, -0.5))

    def test_reentrant_corner(self):
        m = G.notched_cube(G.build_grid((-1.0, 1.0), 8))
        # nearest boundary point is the notch edge (0, 0, z)
        assert G.boundary_distance(m, (-0.3, -0.4, 0.5)) == pytest.approx(0.5)

    @given(st.lists(st.floats(-0.95, 0.95), min_size=6, max_size=6))
    def test_lipschitz(self, c):
        m = G.notched_cube(G.build_grid((-1.0, 1.0), 8))
        x, z = np.array(c[:3]), np.array(c[3:])
        if not (m.in_closure(x) and m.in_closure(z)):
            return
        dx, dz = G.boundary_distance(m, x), G.boundary_distance(m, z)
        assert abs(dx - dz) <= np.linalg.norm(x - z) + 1e-12


class TestBallMeasure:
    def test_interior_ball(self):
        m = G.full_box(G.build_grid((-1.0, 1.0), 32))
        assert G.ball_measure(m, (0, 0, 0), 0.5) == pytest.approx(4 / 3 * np.pi * 0.125, rel=2e-3)

    def test_half_ball(self):
        m = G.half_space(G.build_grid((-1.0, 1.0), 32), 2, 0.0)
        assert G.ball_measure(m, (0, 0, 0), 0.5) == pytest.approx(2 / 3 * np.pi * 0.125, rel=2e-3)

    def test_agrees_with_monte_carlo(self):
        m = G.notched_cube(G.build_grid((-1.0, 1.0), 16))
        c, r = np.array([0.1, -0.05, 0.2]), 0.6
        rng = np.random.default_rng(7)
        n = 200_000
        u = G._uniform_ball(rng, n)
        p = np.mean(~G.outside_fraction(m, c + r * u))
        vol = 4 / 3 * np.pi * r ** 3
        se = vol * np.sqrt(p * (1 - p) / n)
        assert abs(G.ball_measure(m, c, r) - vol * p) <= 3 * se + 1e-3 * vol

    def test_corner_weights_sum_to_volume(self):
        m = G.full_box(G.build_grid((-1.0, 1.0), 8))
        idx, vol, cw = G.ball_cell_weights(m, (0.1, 0, 0), 0.45, corners=True)
        assert np.allclose(cw.sum(axis=1), vol)


class TestConditionS:
    def test_half_space(self):
        m = G.half_space(G.build_grid((-1.0, 1.0), 16), 2, 0.0)
        rep = G.condition_s_estimate(m, (0, 0, 0), [0.25, 0.5, 1.0], 100_000, seed=3)
        assert all(abs(t - 0.5) <= 0.02 for t in rep.theta_hat)
        assert rep.R_a_capped and rep.R_a == 1.0
        assert all(e <= 1 / np.sqrt(100_000) for e in rep.std_error)

    def test_notched_corner(self):
        m = G.notched_cube(G.build_grid((-1.0, 1.0), 16))
        rep = G.condition_s_estimate(m, (0, 0, 0), [0.25, 0.5], 100_000, seed=0)
        assert all(abs(t - 1 / 8) <= 0.02 for t in rep.theta_hat)

    def test_interior_point(self):
        m = G.full_box(G.build_grid((-1.0, 1.0), 8))
        with pytest.raises(DomainError):
            G.condition_s_estimate(m, (0, 0, 0), [0.5])

    def test_deterministic(self):
        m = G.half_space(G.build_grid((-1.0, 1.0), 8), 2, 0.0)
        a = G.condition_s_estimate(m, (0, 0, 0), [0.5], 5000, seed=11)
        b = G.condition_s_estimate(m, (0, 0, 0), [0.5], 5000, seed=11)
        assert a == b

    def test_converges_with_samples(self):
        m = G.half_space(G.build_grid((-1.0, 1.0), 8), 2, 0.0)
        coarse = G.condition_s_estimate(m, (0, 0, 0), [0.5], 10_000, seed=5).theta_inf
        fine = G.condition_s_estimate(m, (0, 0, 0), [0.5], 1_000_000, seed=5).theta_inf
        assert abs(fine - 0.5) <= 3 * 0.5 / np.sqrt(1e6)
        assert abs(coarse - 0.5) <= 3 * 0.5 / np.sqrt(1e4)

    def test_prefix_rule(self):
        # slab of half-width 0.25: exterior fraction grows with R past the far face
        m = G.slab(G.build_grid((-1.0, 1.0), 16), 2, -0.25, 0.25)
        rep = G.condition_s_estimate(m, (0, 0, -0.25), [0.1, 0.4, 0.8], 50_000, seed=1, theta=0.5)
        assert rep.theta_hat[0] == pytest.approx(0.5, abs=0.02)
        assert rep.theta_hat[1] > 0.5 and rep.R_a_capped

    @given(st.floats(0.05, 0.9))
    def test_theta_in_unit_interval(self, r):
        m = G.notched_cube(G.build_grid((-1.0, 1.0), 8))
        rep = G.condition_s_estimate(m, (0, 0, 0), [r], 2000, seed=0)
        assert 0.0 <= rep.theta_hat[0] <= 1.0
