"""Stiffness assembly of the bilinear form for Q1 elements on a masked grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..errors import InvalidCoefficientError, PreconditionError
from ..operator import identity, validate_spec
from .element import CORNERS, local_gradient_products

# the 27 node offsets in lexicographic order; stencil slot of offset (ox, oy, oz)
OFFSETS = np.array([(ox, oy, oz) for ox in (-1, 0, 1) for oy in (-1, 0, 1) for oz in (-1, 0, 1)])


def _slot(off):
    return (off[0] + 1) * 9 + (off[1] + 1) * 3 + off[2] + 1


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """Stiffness operator restricted to the free degrees of freedom.

    Degrees of freedom are numbered ``node * N + i`` over all grid nodes.
    ``K_ff`` couples free rows to free columns, ``K_fc`` couples free rows to
    the constrained (boundary and exterior) columns, indexed by full dof.
    """

    mask: object
    spec: object
    N: int
    K_ff: sp.csr_matrix
    K_fc: sp.csr_matrix
    free_dofs: np.ndarray
    symmetric: bool
    lam_observed: float
    Lam_observed: float

    @property
    def n_dofs(self):
        return self.mask.grid.n_nodes * self.N

    def quadratic_form(self, u_free):
        return float(u_free @ (self.K_ff @ u_free))


def cell_coefficients(spec, mask):
    """Cell-centre coefficient tensors, validated on inside cells, zero outside."""
    g = mask.grid
    centers = g.cell_centers()
    inside = mask.inside
    if spec.constant:
        lam, Lam = validate_spec(spec, centers[inside][:1])
        return spec.sample(centers[inside][0]), lam, Lam
    a = np.zeros(g.cells + (spec.n, spec.n, spec.N, spec.N))
    a[inside] = spec.sample(centers[inside])
    lam, Lam = validate_spec(spec, centers[inside])
    return a, lam, Lam


def _stencils(coeff, h, cells, N):
    """Per-node stencil ``ST[slot, i, j, node]`` for all 27 neighbour offsets."""
    S = local_gradient_products(h)
    cx, cy, cz = cells
    nn = (cx + 1, cy + 1, cz + 1)
    st = np.zeros((27, N, N) + nn)
    for a in range(8):
        ax, ay, az = CORNERS[a]
        for b in range(8):
            slot = _slot(CORNERS[b] - CORNERS[a])
            if coeff.ndim == 4:
                v = np.einsum("xyij,xy->ij", coeff, S[:, :, a, b])[:, :, None, None, None]
            else:
                v = np.einsum("...xyij,xy->ij...", coeff, S[:, :, a, b])
            # row a of the cell gathers B(phi_b e_j, phi_a e_i)
            st[slot, :, :, ax:ax + cx, ay:ay + cy, az:az + cz] += v
    return st


def assemble(spec, mask):
    """Assemble ``B(u, v) = int A[alpha, beta, i, j] D_beta u^j D_alpha v^i`` on ``mask``.

    Coefficients are cell-centre constants; each cell uses 2x2x2 Gauss
    quadrature.  Accumulation order is fixed, so the result is bitwise
    reproducible.
    """
    if spec.n != 3:
        raise InvalidCoefficientError("only n = 3 is supported")
    g = mask.grid
    N = spec.N
    coeff, lam, Lam = cell_coefficients(spec, mask)
    if coeff.ndim == 4 and not mask.inside.all():
        coeff = np.where(mask.inside[..., None, None, None, None], coeff, 0.0)
    st = _stencils(coeff, g.h, g.cells, N)

    free_nodes = np.flatnonzero(mask.free_nodes.ravel())
    if free_nodes.size == 0:
        raise PreconditionError("domain has no interior nodes at this resolution")
    ny, nz = g.node_shape[1], g.node_shape[2]
    node_off = OFFSETS[:, 0] * ny * nz + OFFSETS[:, 1] * nz + OFFSETS[:, 2]

    # rows ordered (free node, i); within a row columns ordered (slot, j) = increasing dof
    data = st.reshape(27, N, N, -1)[:, :, :, free_nodes]          # (27, i, j, f)
    data = np.ascontiguousarray(data.transpose(3, 1, 0, 2)).ravel()  # (f, i, 27, j)
    col_nodes = free_nodes[:, None] + node_off[None, :]             # (f, 27)
    cols = (col_nodes[:, None, :, None] * N + np.arange(N)[None, None, None, :])
    cols = np.broadcast_to(cols, (free_nodes.size, N, 27, N)).ravel()

    n_dofs = g.n_nodes * N
    free_dofs = (free_nodes[:, None] * N + np.arange(N)).ravel()
    fmap = np.full(n_dofs, -1, dtype=np.int64)
    fmap[free_dofs] = np.arange(free_dofs.size)
    n_rows = free_dofs.size
    width = 27 * N

    def build(select, colidx, n_cols):
        counts = select.reshape(n_rows, width).sum(axis=1)
        indptr = np.concatenate([[0], np.cumsum(counts)])
        m = sp.csr_matrix((data[select], colidx[select], indptr), shape=(n_rows, n_cols))
        m.eliminate_zeros()
        return m

    colmap = fmap[cols]
    is_free = colmap >= 0
    K_ff = build(is_free, colmap, n_rows)
    K_fc = build(~is_free, cols, n_dofs)
    del data, cols, colmap

    diff = abs(K_ff - K_ff.T)
    scale = abs(K_ff).max()
    symmetric = bool(diff.nnz == 0 or diff.max() <= 1e-13 * scale)
    return LinearSystem(mask=mask, spec=spec, N=N, K_ff=K_ff, K_fc=K_fc, free_dofs=free_dofs,
                        symmetric=symmetric, lam_observed=lam, Lam_observed=Lam)


def dirichlet_form(mask, N):
    """Stiffness of the identity tensor: ``u . K u = ||Du||^2`` with Gauss quadrature."""
    return assemble(identity(N), mask)


@dataclass(frozen=True)
class CoercivityCheck:
    ratio_min: float
    lam: float
    samples: int
    passed: bool


def check_coercivity(system, samples=64, seed=0, slack=1e-10):
    """Compare ``q(u)`` with ``lambda ||Du||^2`` on random free vectors."""
    ref = dirichlet_form(system.mask, system.N).K_ff
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((system.K_ff.shape[0], samples))
    q = np.einsum("ij,ij->j", u, system.K_ff @ u)
    d = np.einsum("ij,ij->j", u, ref @ u)
    ratio = float(np.min(q / d))
    lam = system.lam_observed
    return CoercivityCheck(ratio_min=ratio, lam=lam, samples=samples,
                           passed=ratio >= lam * (1 - slack))
