"""Coefficient fields of divergence-form elliptic systems and their diagnostics.

A coefficient tensor is stored as a real array indexed ``A[alpha, beta, i, j]``
with spatial indices ``alpha, beta`` in ``0..n-1`` and component indices
``i, j`` in ``0..N-1``.  The associated operator acts on ``u = (u^1..u^N)`` as
``(Lu)^i = -D_alpha (A[alpha, beta, i, j] D_beta u^j)``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import DimensionMismatchError, InvalidCoefficientError, PreconditionError

SPACE_DIM = 3


def as_tensor(a, n=SPACE_DIM, N=None):
    """Validate a coefficient tensor (or a batch of them) and return it as float array."""
    a = np.asarray(a, dtype=float)
    if a.ndim < 4 or a.shape[-4:-2] != (n, n) or a.shape[-2] != a.shape[-1]:
        raise InvalidCoefficientError(f"coefficient tensor must have shape (...,{n},{n},N,N), got {a.shape}")
    if N is not None and a.shape[-1] != N:
        raise InvalidCoefficientError(f"expected N={N} components, got {a.shape[-1]}")
    if not np.all(np.isfinite(a)):
        raise InvalidCoefficientError("coefficient tensor has non-finite entries")
    return a


def legendre_matrix(a):
    """Symmetrized (Nn)x(Nn) matrix of the Legendre form, rows indexed by (i, alpha)."""
    a = np.asarray(a, dtype=float)
    n, N = a.shape[-4], a.shape[-1]
    x = np.moveaxis(a, (-4, -3, -2, -1), (-3, -1, -4, -2)).reshape(a.shape[:-4] + (N * n, N * n))
    return 0.5 * (x + np.swapaxes(x, -1, -2))


def check_ellipticity(tensor):
    """Return ``(lambda_min, Lambda_frob)`` of a coefficient tensor.

    ``lambda_min`` is the smallest eigenvalue of the symmetrized Legendre
    matrix, i.e. the best constant in ``A xi.xi >= lambda |xi|^2`` over all
    ``N x n`` matrices ``xi``; ``Lambda_frob`` is the Frobenius norm.  Batched
    input of shape ``(..., n, n, N, N)`` gives arrays of shape ``(...)``.
    """
    a = as_tensor(tensor)
    lam = np.linalg.eigvalsh(legendre_matrix(a))[..., 0]
    frob = np.sqrt(np.sum(a * a, axis=(-4, -3, -2, -1)))
    if a.ndim == 4:
        return float(lam), float(frob)
    return lam, frob


def transpose_tensor(a):
    """``tA[alpha, beta, i, j] = A[beta, alpha, j, i]``."""
    a = np.asarray(a)
    return np.swapaxes(np.swapaxes(a, -4, -3), -2, -1)


class _Transposed:
    """Coefficient callable of the transpose operator; transposing twice unwraps."""

    def __init__(self, inner):
        self.inner = inner

    def __call__(self, points):
        return transpose_tensor(self.inner(points))


@dataclass(frozen=True)
class OperatorSpec:
    """Coefficient field together with its claimed ellipticity constants.

    ``coeff`` maps points of shape ``(..., 3)`` to tensors ``(..., 3, 3, N, N)``.
    The claims ``lam`` and ``Lam`` are checked against every sampled tensor by
    :func:`validate_spec` (assembly calls it on all cell centres).
    """

    N: int
    coeff: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    lam: float
    Lam: float
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=False)
    n: int = SPACE_DIM
    constant: bool = False
    self_adjoint: bool | None = None
    transposed: bool = False

    def __post_init__(self):
        if self.n != SPACE_DIM:
            raise DimensionMismatchError("only n = 3 is supported")
        if self.N < 1:
            raise DimensionMismatchError("system size N must be >= 1")
        if not (self.lam > 0 and self.Lam > 0):
            raise InvalidCoefficientError("ellipticity constants must be positive")

    def sample(self, points):
        points = np.asarray(points, dtype=float)
        a = np.asarray(self.coeff(points), dtype=float)
        want = points.shape[:-1] + (self.n, self.n, self.N, self.N)
        if a.shape != want:
            a = np.broadcast_to(a, want)
        return as_tensor(a, self.n, self.N)

    @property
    def spec_id(self):
        payload = {"name": self.name, "N": self.N, "params": _jsonable(self.params),
                   "transposed": self.transposed}
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def validate_spec(spec, points, rtol=1e-12):
    """Check the claimed constants against tensors sampled at ``points``.

    Returns the observed ``(lambda_min, Lambda_max)`` over the samples.
    """
    a = spec.sample(points).reshape((-1, spec.n, spec.n, spec.N, spec.N))
    if spec.constant:
        a = a[:1]
    lam, frob = check_ellipticity(a)
    lam_min, frob_max = float(np.min(lam)), float(np.max(frob))
    if lam_min < spec.lam * (1 - rtol):
        raise InvalidCoefficientError(
            f"{spec.name}: sampled ellipticity {lam_min:.6g} below claimed lambda={spec.lam:.6g}")
    if frob_max > spec.Lam * (1 + rtol):
        raise InvalidCoefficientError(
            f"{spec.name}: sampled bound {frob_max:.6g} above claimed Lambda={spec.Lam:.6g}")
    return lam_min, frob_max


def transpose_operator(spec):
    """Operator with coefficients ``A[beta, alpha, j, i]``; same constants."""
    coeff = spec.coeff.inner if isinstance(spec.coeff, _Transposed) else _Transposed(spec.coeff)
    return replace(spec, coeff=coeff, transposed=not spec.transposed)


# -- builtin coefficient fields ------------------------------------------------

def _const_field(tensor):
    tensor = np.asarray(tensor, dtype=float)

    def coeff(points):
        points = np.asarray(points)
        return np.broadcast_to(tensor, points.shape[:-1] + tensor.shape)

    return coeff


def identity_tensor(N=1, n=SPACE_DIM):
    return np.einsum("ab,ij->abij", np.eye(n), np.eye(N))


def identity(N=1):
    """``A = delta^{alpha beta} delta_{ij}``: N decoupled Laplacians."""
    return OperatorSpec(N=N, coeff=_const_field(identity_tensor(N)), lam=1.0,
                        Lam=float(np.sqrt(SPACE_DIM * N)), name="identity",
                        params={"N": N}, constant=True, self_adjoint=True)


def coupling_tensor(kind="mixed"):
    """Unit-Frobenius, non-self-adjoint coupling perturbation for N = 2.

    ``mixed`` puts a single entry at ``A[0, 1, 0, 1]`` (a mixed-derivative
    coupling of u^2 into the first equation).  ``complex`` is the real form of
    multiplying the Laplacian by ``i``: ``delta^{alpha beta} J / sqrt(6)`` with
    ``J`` the rotation by 90 degrees.
    """
    e = np.zeros((SPACE_DIM, SPACE_DIM, 2, 2))
    if kind == "mixed":
        e[0, 1, 0, 1] = 1.0
    elif kind == "complex":
        j = np.array([[0.0, -1.0], [1.0, 0.0]])
        e = np.einsum("ab,ij->abij", np.eye(SPACE_DIM), j) / np.sqrt(6.0)
    else:
        raise ValueError(f"unknown coupling kind {kind!r}")
    return e


def coupling(kappa=0.1, kind="mixed"):
    """Diagonal system ``I`` plus ``kappa`` times a unit coupling tensor (N = 2)."""
    a = identity_tensor(2) + kappa * coupling_tensor(kind)
    lam, frob = check_ellipticity(a)
    if lam <= 0:
        raise InvalidCoefficientError(f"coupling strength kappa={kappa} destroys ellipticity")
    return OperatorSpec(N=2, coeff=_const_field(a), lam=lam, Lam=frob, name="coupling",
                        params={"kappa": kappa, "kind": kind}, constant=True,
                        self_adjoint=bool(np.allclose(a, transpose_tensor(a))))


def _scalar_times_identity(a_fn, N):
    eye = identity_tensor(N)

    def coeff(points):
        a = np.asarray(a_fn(np.asarray(points, dtype=float)), dtype=float)
        return a[..., None, None, None, None] * eye

    return coeff


def bump(points, center, width):
    d2 = np.sum((np.asarray(points, dtype=float) - np.asarray(center, dtype=float)) ** 2, axis=-1)
    return np.exp(-d2 / width ** 2)


def scalar_variable(amplitude=0.3, kind="bump", center=(0.0, 0.0, 0.0), width=0.5,
                    wavelength=0.25, N=1):
    """``a(x) I`` with ``a = 1 + amplitude * profile(x)``.

    ``bump`` uses a Gaussian of the given width around ``center``; ``wave``
    uses ``prod_i sin(2 pi x_i / wavelength)``.
    """
    if kind == "bump":
        def a_fn(p):
            return 1.0 + amplitude * bump(p, center, width)
        lo, hi = min(1.0, 1.0 + amplitude), max(1.0, 1.0 + amplitude)
    elif kind == "wave":
        def a_fn(p):
            return 1.0 + amplitude * np.prod(np.sin(2 * np.pi * p / wavelength), axis=-1)
        lo, hi = 1.0 - abs(amplitude), 1.0 + abs(amplitude)
    else:
        raise ValueError(f"unknown scalar-variable kind {kind!r}")
    if lo <= 0:
        raise InvalidCoefficientError("scalar coefficient must stay positive")
    return OperatorSpec(N=N, coeff=_scalar_times_identity(a_fn, N), lam=lo,
                        Lam=hi * np.sqrt(SPACE_DIM * N), name="scalar-variable",
                        params={"amplitude": amplitude, "kind": kind, "center": list(center),
                                "width": width, "wavelength": wavelength, "N": N},
                        self_adjoint=True)


def checkerboard(low=1.0, high=2.0, period=0.25, N=1):
    """Piecewise-constant ``a(x) I`` alternating between two values on cubes of side ``period``."""
    if min(low, high) <= 0:
        raise InvalidCoefficientError("checkerboard values must be positive")

    def a_fn(p):
        parity = np.sum(np.floor(p / period).astype(np.int64), axis=-1) % 2
        return np.where(parity == 0, low, high)

    return OperatorSpec(N=N, coeff=_scalar_times_identity(a_fn, N), lam=min(low, high),
                        Lam=max(low, high) * np.sqrt(SPACE_DIM * N), name="checkerboard",
                        params={"low": low, "high": high, "period": period, "N": N},
                        self_adjoint=True)


def perturbed(spec, amplitude=0.05, center=(0.0, 0.0, 0.0), width=0.25):
    """Multiply the coefficients by ``1 + amplitude * bump``; a smooth scalar perturbation."""
    inner = spec.coeff

    def coeff(points):
        points = np.asarray(points, dtype=float)
        factor = 1.0 + amplitude * bump(points, center, width)
        return np.asarray(inner(points)) * factor[..., None, None, None, None]

    lo, hi = min(1.0, 1.0 + amplitude), max(1.0, 1.0 + amplitude)
    params = {"base": spec.spec_id, "amplitude": amplitude, "center": list(center), "width": width}
    return replace(spec, coeff=coeff, lam=spec.lam * lo, Lam=spec.Lam * hi,
                   name=f"{spec.name}+bump", params=params, constant=False)


BUILTINS = {
    "identity": identity,
    "scalar-variable": scalar_variable,
    "coupling": coupling,
    "checkerboard": checkerboard,
}


def builtin(name, **params):
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise InvalidCoefficientError(f"unknown operator builtin {name!r}") from None
    return factory(**params)


# -- diagnostics -----------------------------------------------------------------

@dataclass(frozen=True)
class PerturbationReport:
    eps_sup: float
    per_point: list


def diagonal_distance(spec, scalar, points):
    """Pointwise distance of ``A`` from the diagonal system ``a^{alpha beta} delta_{ij}``.

    ``scalar`` maps points ``(..., 3)`` to ``(..., 3, 3)`` matrices.  It must be
    elliptic itself; this is checked with the N = 1 Legendre test.
    """
    points = np.asarray(points, dtype=float).reshape(-1, spec.n)
    a = spec.sample(points)
    s = np.asarray(scalar(points), dtype=float)
    if s.shape != (len(points), spec.n, spec.n):
        raise DimensionMismatchError(f"scalar field must return (M,{spec.n},{spec.n}), got {s.shape}")
    lam0, _ = check_ellipticity(s[..., None, None])
    if np.any(lam0 <= 0):
        raise InvalidCoefficientError("scalar comparison field is not elliptic")
    diff = a - s[..., None, None] * np.eye(spec.N)
    eps = np.sqrt(np.sum(diff ** 2, axis=(1, 2, 3, 4)))
    per_point = [(tuple(map(float, p)), float(e)) for p, e in zip(points, eps)]
    return PerturbationReport(eps_sup=float(eps.max()), per_point=per_point)


@dataclass(frozen=True)
class VmoModulus:
    delta: float
    value: float
    samples: int


def _ball_lattice(h, r):
    m = int(np.ceil(r / h))
    t = (np.arange(-m, m) + 0.5) * h
    pts = np.stack(np.meshgrid(t, t, t, indexing="ij"), axis=-1).reshape(-1, 3)
    return pts[np.sum(pts ** 2, axis=1) < r * r]


def vmo_modulus(f, delta, centers, radii, h=None):
    """Mean-oscillation modulus ``M_delta(f)`` estimated on a sample of balls.

    Each ball mean uses midpoint quadrature on a lattice of spacing ``h``
    (default ``delta / 16``) centred on the ball.  ``f`` is vectorised over
    points of shape ``(..., 3)``; tensor values are compared in the Frobenius norm.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    if delta <= 0:
        raise PreconditionError("delta must be positive")
    if centers.size == 0 or radii.size == 0:
        raise PreconditionError("empty sample set")
    if np.any(radii > delta * (1 + 1e-12)) or np.any(radii <= 0):
        raise PreconditionError("sample radii must lie in (0, delta]")
    h = delta / 16 if h is None else h
    best = 0.0
    for r in radii:
        offsets = _ball_lattice(min(h, r / 2), r)
        for c in centers:
            vals = np.asarray(f(c + offsets), dtype=float).reshape(len(offsets), -1)
            osc = np.linalg.norm(vals - vals.mean(axis=0), axis=1)
            best = max(best, float(np.mean(osc)))
    return VmoModulus(delta=float(delta), value=best, samples=len(centers) * len(radii))
