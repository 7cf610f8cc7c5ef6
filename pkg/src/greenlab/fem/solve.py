"""Dirichlet solves: Jacobi-preconditioned CG, block back-substitution, or GMRES."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from ..errors import IterationLimitError, PreconditionError
from .field import DiscreteField


METHODS = ("auto", "cg", "gmres", "block")


@dataclass(frozen=True)
class SolverSettings:
    rel_tol: float = 1e-8
    max_iter: int = 20_000
    seed: int = 0
    method: str = "auto"
    restart: int = 30

    def __post_init__(self):
        if not 0 < self.rel_tol < 1:
            raise PreconditionError("rel_tol must lie in (0, 1)")
        if self.max_iter < 1:
            raise PreconditionError("max_iter must be positive")
        if self.method not in METHODS:
            raise PreconditionError(f"unknown solver method {self.method!r}")


@dataclass(frozen=True)
class SolveInfo:
    method: str
    iterations: list
    residuals: list


def pcg(K, B, rel_tol=1e-8, max_iter=20_000):
    """Jacobi-preconditioned CG for several right-hand sides at once.

    Columns that reach ``||b - K x|| <= rel_tol ||b||`` are frozen and drop
    out of the active block, so each column follows exactly the iteration it
    would follow on its own.  Returns ``(X, iterations, history)`` where
    ``history`` is the worst active relative residual per sweep.
    """
    B = np.asarray(B, dtype=float)
    single = B.ndim == 1
    if single:
        B = B[:, None]
    dinv = 1.0 / K.diagonal()
    X = np.zeros_like(B)
    bnorm = np.linalg.norm(B, axis=0)
    its = np.zeros(B.shape[1], dtype=int)
    active = np.flatnonzero(bnorm > 0)
    history = []
    if active.size:
        R = B[:, active].copy()
        Z = dinv[:, None] * R
        P = Z.copy()
        rz = np.einsum("ij,ij->j", R, Z)
        Xa = np.zeros_like(R)
        for it in range(1, max_iter + 1):
            Q = K @ P
            alpha = rz / np.einsum("ij,ij->j", P, Q)
            Xa += alpha * P
            R -= alpha * Q
            rel = np.linalg.norm(R, axis=0) / bnorm[active]
            history.append(float(rel.max()))
            done = rel <= rel_tol
            if done.any():
                X[:, active[done]] = Xa[:, done]
                its[active[done]] = it
                keep = ~done
                active, R, Xa, P, rz = active[keep], R[:, keep], Xa[:, keep], P[:, keep], rz[keep]
                if active.size == 0:
                    break
            Z = dinv[:, None] * R
            rz_new = np.einsum("ij,ij->j", R, Z)
            P = Z + (rz_new / rz) * P
            rz = rz_new
        else:
            raise IterationLimitError(
                f"CG did not reach rel_tol={rel_tol:g} in {max_iter} iterations", history)
    return (X[:, 0] if single else X), its, history


def gmres_jacobi(K, B, rel_tol=1e-8, max_iter=20_000, restart=30):
    """Restarted GMRES with a Jacobi preconditioner, column by column.

    The true residual is re-checked after each GMRES call; a warm restart
    follows if preconditioning left it above the target.
    """
    B = np.asarray(B, dtype=float)
    single = B.ndim == 1
    if single:
        B = B[:, None]
    dinv = 1.0 / K.diagonal()
    M = spla.LinearOperator(K.shape, matvec=lambda r: dinv * r, dtype=float)
    X = np.zeros_like(B)
    its = np.zeros(B.shape[1], dtype=int)
    history = []
    for c in range(B.shape[1]):
        b = B[:, c]
        bnorm = np.linalg.norm(b)
        if bnorm == 0:
            continue
        x = np.zeros_like(b)
        used = 0
        while True:
            count = [0]

            def cb(_, count=count):
                count[0] += 1

            budget = max(1, (max_iter - used) // restart + 1)
            x, _ = spla.gmres(K, b, x0=x, rtol=0.5 * rel_tol, atol=0.0, restart=restart,
                              maxiter=budget, M=M, callback=cb, callback_type="pr_norm")
            used += count[0]
            rel = float(np.linalg.norm(b - K @ x) / bnorm)
            history.append(rel)
            if rel <= rel_tol:
                break
            if used >= max_iter:
                raise IterationLimitError(
                    f"GMRES did not reach rel_tol={rel_tol:g} in {max_iter} iterations", history)
        X[:, c] = x
        its[c] = used
    return (X[:, 0] if single else X), its, history


def _symmetric(K):
    d = K - K.T
    return d.nnz == 0 or abs(d).max() <= 1e-12 * abs(K).max()


def component_order(K, N):
    """Order in which the components of a block-triangular system can be solved.

    Free dofs are interleaved ``(node, component)``.  Returns ``None`` when
    the component coupling graph has a cycle or a diagonal block is not
    symmetric; otherwise every component comes after those it depends on.
    """
    if N == 1:
        return None
    idx = [np.arange(c, K.shape[0], N) for c in range(N)]
    deps = {i: {j for j in range(N) if j != i and K[idx[i]][:, idx[j]].count_nonzero()} for i in range(N)}
    if not any(deps.values()) or not all(_symmetric(K[idx[i]][:, idx[i]]) for i in range(N)):
        return None
    order = []
    while len(order) < N:
        ready = [i for i in range(N) if i not in order and deps[i] <= set(order)]
        if not ready:
            return None
        order.append(ready[0])
    return order


def block_substitution(K, B, N, order, rel_tol=1e-8, max_iter=20_000):
    """Solve a block-triangular system component by component with CG.

    Each diagonal block is tightened so the full relative residual stays
    below ``rel_tol``.
    """
    B = np.asarray(B, dtype=float)
    idx = [np.arange(c, K.shape[0], N) for c in range(N)]
    X = np.zeros_like(B)
    bnorm = np.linalg.norm(B, axis=0)
    its = np.zeros(B.shape[1], dtype=int)
    history = []
    for i in order:
        rhs = B[idx[i]] - K[idx[i]] @ X
        rn = np.linalg.norm(rhs, axis=0)
        live = rn > 0
        if not live.any():
            continue
        tol = rel_tol * min(1.0, float(np.min(bnorm[live] / (np.sqrt(N) * rn[live]))))
        Xi, it, hist = pcg(K[idx[i]][:, idx[i]].tocsr(), rhs, tol, max_iter)
        X[idx[i]] = Xi
        its += it
        history += hist
    return X, its, history


def _solver_for(system, settings):
    method = settings.method
    if method == "auto":
        if system.symmetric:
            return "cg", None
        order = component_order(system.K_ff, system.N)
        return ("gmres", None) if order is None else ("block", order)
    if method == "block":
        order = component_order(system.K_ff, system.N)
        if order is None:
            raise PreconditionError("system is not block triangular with symmetric diagonal blocks")
        return method, order
    return method, None


def boundary_vector(mask, N, boundary):
    """Full-dof vector of Dirichlet data on constrained nodes (zero on free nodes).

    ``boundary`` is a callable on points ``(..., 3)`` returning ``(..., N)``
    (or ``(...)`` for N = 1), or an array of nodal values.
    """
    g = mask.grid
    if callable(boundary):
        vals = np.asarray(boundary(g.node_points()), dtype=float)
    else:
        vals = np.asarray(boundary, dtype=float)
    vals = vals.reshape(g.node_shape + (N,))
    out = np.where(mask.boundary_nodes[..., None], vals, 0.0)
    return out.ravel()


def solve_many(system, rhs, settings=SolverSettings(), boundary=None):
    """Solve for several right-hand sides.

    ``rhs`` is an array ``(n_dofs, m)`` of functional weights over all dofs
    (see :class:`LinearFunctional`); ``boundary`` is an optional array
    ``(n_dofs, m)`` of Dirichlet data.  Returns ``(values, info)`` with
    ``values`` of shape ``(m, nx+1, ny+1, nz+1, N)``.
    """
    W = np.asarray(rhs, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    if W.shape[0] != system.n_dofs:
        raise PreconditionError(f"rhs has {W.shape[0]} rows, expected {system.n_dofs}")
    B = W[system.free_dofs]
    full = np.zeros_like(W)
    if boundary is not None:
        G = np.asarray(boundary, dtype=float).reshape(W.shape)
        B = B - system.K_fc @ G
        full += G
    method, order = _solver_for(system, settings)
    if method == "cg":
        X, its, hist = pcg(system.K_ff, B, settings.rel_tol, settings.max_iter)
    elif method == "block":
        X, its, hist = block_substitution(system.K_ff, B, system.N, order, settings.rel_tol, settings.max_iter)
    else:
        X, its, hist = gmres_jacobi(system.K_ff, B, settings.rel_tol, settings.max_iter, settings.restart)
    full[system.free_dofs] = X
    bn = np.linalg.norm(B, axis=0)
    res = np.linalg.norm(B - system.K_ff @ X, axis=0) / np.where(bn > 0, bn, 1.0)
    info = SolveInfo(method=method, iterations=[int(i) for i in its],
                     residuals=[float(r) for r in res])
    shape = (W.shape[1],) + system.mask.grid.node_shape + (system.N,)
    return full.T.reshape(shape), info


def solve_dirichlet(system, rhs=None, settings=SolverSettings(), boundary=None):
    """Find ``u`` with ``B(u, phi) = rhs(phi)`` for all free test fields, ``u = boundary`` on the rest."""
    n = system.n_dofs
    w = np.zeros(n) if rhs is None else rhs.vector()
    g = None
    if boundary is not None:
        g = boundary_vector(system.mask, system.N, boundary)
    values, info = solve_many(system, w, settings, None if g is None else g[:, None])
    return DiscreteField(system.mask, values[0],
                         info={"method": info.method, "iterations": info.iterations[0],
                               "residual": info.residuals[0]})
