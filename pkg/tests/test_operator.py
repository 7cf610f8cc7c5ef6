import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from greenlab import operator as op
from greenlab.errors import DimensionMismatchError, InvalidCoefficientError, PreconditionError

finite = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)


def tensors(N):
    return arrays(np.float64, (3, 3, N, N), elements=finite)


def dense_legendre_min(a):
    """Independent oracle: build M[(i,alpha),(j,beta)] by explicit loops and call eigvalsh."""
    n, N = a.shape[0], a.shape[2]
    M = np.zeros((N * n, N * n))
    for i in range(N):
        for al in range(n):
            for j in range(N):
                for be in range(n):
                    M[i * n + al, j * n + be] = 0.5 * (a[al, be, i, j] + a[be, al, j, i])
    return np.linalg.eigvalsh(M)[0]


class TestEllipticity:
    def test_identity_system(self):
        lam, frob = op.check_ellipticity(op.identity_tensor(2))
        assert lam == pytest.approx(1.0)
        assert frob == pytest.approx(np.sqrt(6.0))

    def test_scalar_laplacian(self):
        lam, frob = op.check_ellipticity(op.identity_tensor(1))
        assert lam == pytest.approx(1.0)
        assert frob == pytest.approx(np.sqrt(3.0))

    def test_coupled_matches_dense_eigensolver(self):
        a = op.identity_tensor(2) + 0.1 * op.coupling_tensor("mixed")
        lam, _ = op.check_ellipticity(a)
        assert abs(lam - dense_legendre_min(a)) <= 1e-12
        assert lam == pytest.approx(0.95, abs=1e-12)

    def test_nonfinite_rejected(self):
        a = op.identity_tensor(1)
        a[0, 0, 0, 0] = np.nan
        with pytest.raises(InvalidCoefficientError):
            op.check_ellipticity(a)

    def test_bad_shape_rejected(self):
        with pytest.raises(InvalidCoefficientError):
            op.check_ellipticity(np.zeros((3, 2, 1, 1)))

    @given(tensors(2))
    def test_matches_oracle(self, a):
        lam, _ = op.check_ellipticity(a)
        assert lam == pytest.approx(dense_legendre_min(a), abs=1e-10)

    @given(tensors(2))
    def test_transpose_invariant(self, a):
        lam, frob = op.check_ellipticity(a)
        lam_t, frob_t = op.check_ellipticity(op.transpose_tensor(a))
        assert lam_t == pytest.approx(lam, abs=1e-12)
        assert frob_t == pytest.approx(frob)

    def test_batched(self):
        a = np.stack([op.identity_tensor(1), 2 * op.identity_tensor(1)])
        lam, frob = op.check_ellipticity(a)
        assert np.allclose(lam, [1.0, 2.0])
        assert np.allclose(frob, [np.sqrt(3), 2 * np.sqrt(3)])


class TestTranspose:
    def test_symmetric_unchanged(self):
        spec = op.identity(2)
        pts = np.random.default_rng(0).uniform(-1, 1, (5, 3))
        assert np.array_equal(op.transpose_operator(spec).sample(pts), spec.sample(pts))

    def test_involution(self):
        spec = op.coupling(0.1)
        tt = op.transpose_operator(op.transpose_operator(spec))
        pts = np.zeros((2, 3))
        assert np.array_equal(tt.sample(pts), spec.sample(pts))
        assert tt.spec_id == spec.spec_id
        assert tt.coeff is spec.coeff

    def test_index_swap(self):
        a = np.zeros((3, 3, 1, 1))
        a[0, 0] = a[1, 1] = a[2, 2] = 2.0
        a[0, 1, 0, 0] = 1.0
        spec = op.OperatorSpec(N=1, coeff=lambda p: np.broadcast_to(a, np.shape(p)[:-1] + a.shape),
                               lam=1.0, Lam=10.0)
        t = op.transpose_operator(spec).sample(np.zeros(3))
        assert t[0, 1, 0, 0] == 0.0 and t[1, 0, 0, 0] == 1.0

    def test_constants_preserved(self):
        spec = op.coupling(0.2)
        t = op.transpose_operator(spec)
        assert (t.lam, t.Lam) == (spec.lam, spec.Lam)
        assert t.transposed and not spec.transposed


class TestSpecs:
    def test_coupling_is_nonsymmetric(self):
        assert op.coupling(0.1).self_adjoint is False
        assert op.coupling(0.1, "complex").self_adjoint is False

    def test_coupling_too_strong(self):
        with pytest.raises(InvalidCoefficientError):
            op.coupling(5.0)

    def test_validate_catches_false_claim(self):
        spec = op.OperatorSpec(N=1, coeff=op.identity(1).coeff, lam=1.5, Lam=2.0)
        with pytest.raises(InvalidCoefficientError):
            op.validate_spec(spec, np.zeros((1, 3)))

    def test_validate_returns_observed(self):
        spec = op.scalar_variable(0.3)
        pts = np.random.default_rng(3).uniform(-1, 1, (200, 3))
        lam, Lam = op.validate_spec(spec, pts)
        assert spec.lam <= lam <= 1.3 and Lam <= spec.Lam

    def test_only_three_dimensions(self):
        with pytest.raises(DimensionMismatchError):
            op.OperatorSpec(N=1, coeff=op.identity(1).coeff, lam=1, Lam=1, n=2)

    def test_builtin_lookup(self):
        assert op.builtin("coupling", kappa=0.05).params["kappa"] == 0.05
        with pytest.raises(InvalidCoefficientError):
            op.builtin("nope")

    def test_spec_id_depends_on_params(self):
        assert op.coupling(0.1).spec_id != op.coupling(0.2).spec_id
        assert op.coupling(0.1).spec_id == op.coupling(0.1).spec_id

    def test_checkerboard_values(self):
        spec = op.checkerboard(1.0, 3.0, 0.5)
        a = spec.sample(np.array([[0.25, 0.25, 0.25], [0.75, 0.25, 0.25]]))
        assert a[0, 0, 0, 0, 0] == 1.0 and a[1, 0, 0, 0, 0] == 3.0

    def test_perturbed_bounds(self):
        spec = op.perturbed(op.identity(1), 0.05)
        assert spec.lam == 1.0 and spec.Lam == pytest.approx(1.05 * np.sqrt(3))
        assert spec.sample(np.zeros(3))[0, 0, 0, 0] == pytest.approx(1.05)


class TestDiagonalDistance:
    @staticmethod
    def scalar_one(p):
        return np.broadcast_to(np.eye(3), np.shape(p)[:-1] + (3, 3))

    def test_exact_diagonal(self):
        r = op.diagonal_distance(op.identity(2), self.scalar_one, np.zeros((4, 3)))
        assert r.eps_sup == 0.0

    def test_constant_kappa(self):
        r = op.diagonal_distance(op.coupling(0.3), self.scalar_one, np.zeros((2, 3)))
        assert r.eps_sup == pytest.approx(0.3)

    def test_varying_kappa_cell_centres(self):
        e = op.coupling_tensor("mixed")

        def coeff(p):
            p = np.asarray(p)
            return op.identity_tensor(2) + p[..., 0, None, None, None, None] * e

        spec = op.OperatorSpec(N=2, coeff=coeff, lam=0.5, Lam=5.0)
        t = (np.arange(4) + 0.5) / 4
        pts = np.stack(np.meshgrid(t, t, t, indexing="ij"), axis=-1).reshape(-1, 3)
        assert op.diagonal_distance(spec, self.scalar_one, pts).eps_sup == pytest.approx(7 / 8)

    @given(st.floats(-3, 3, allow_nan=False))
    def test_homogeneous(self, c):
        e = op.coupling_tensor("complex")

        def make(k):
            def coeff(p):
                return np.broadcast_to(op.identity_tensor(2) + k * e, np.shape(p)[:-1] + e.shape)
            return op.OperatorSpec(N=2, coeff=coeff, lam=0.1, Lam=10.0)

        base = op.diagonal_distance(make(0.2), self.scalar_one, np.zeros((1, 3))).eps_sup
        scaled = op.diagonal_distance(make(0.2 * c), self.scalar_one, np.zeros((1, 3))).eps_sup
        assert scaled == pytest.approx(abs(c) * base, abs=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            op.diagonal_distance(op.identity(1), lambda p: np.ones(len(p)), np.zeros((1, 3)))


class TestVmo:
    centers = np.zeros((1, 3))

    def test_constant(self):
        r = op.vmo_modulus(lambda p: np.full(np.shape(p)[:-1], 4.0), 0.5, self.centers, [0.25, 0.5])
        assert r.value == 0.0

    def test_linear(self):
        # mean over B_r of |x1| is 3r/8
        delta = 0.4
        r = op.vmo_modulus(lambda p: p[..., 0], delta, self.centers, [delta / 2, delta], h=delta / 8)
        assert r.value == pytest.approx(3 * delta / 8, rel=0.05)

    def test_halfspace_indicator_not_vmo(self):
        f = lambda p: (p[..., 0] > 0).astype(float)  # noqa: E731
        vals = [op.vmo_modulus(f, d, self.centers, [d]).value for d in (0.4, 0.1, 0.025)]
        assert min(vals) >= 0.45

    @given(st.floats(-100, 100, allow_nan=False))
    def test_shift_invariant(self, c):
        f = lambda p: np.sin(3 * p[..., 0]) * p[..., 1]  # noqa: E731
        a = op.vmo_modulus(f, 0.3, self.centers + 0.1, [0.3]).value
        b = op.vmo_modulus(lambda p: f(p) + c, 0.3, self.centers + 0.1, [0.3]).value
        assert b == pytest.approx(a, abs=1e-9 * (1 + abs(c)))

    def test_monotone_in_delta(self):
        f = lambda p: np.tanh(5 * p[..., 0])  # noqa: E731
        small = op.vmo_modulus(f, 0.2, self.centers, [0.1, 0.2], h=0.02).value
        large = op.vmo_modulus(f, 0.4, self.centers, [0.1, 0.2, 0.4], h=0.02).value
        assert large >= small

    def test_errors(self):
        with pytest.raises(PreconditionError):
            op.vmo_modulus(lambda p: p[..., 0], 0.1, self.centers, [0.2])
        with pytest.raises(PreconditionError):
            op.vmo_modulus(lambda p: p[..., 0], 0.1, np.zeros((0, 3)), [0.1])
