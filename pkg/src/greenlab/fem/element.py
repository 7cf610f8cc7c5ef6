"""Trilinear (Q1) reference element on the unit cube with 2x2x2 Gauss quadrature."""

import itertools

import numpy as np

# corner a has local offset CORNERS[a]; z fastest, matching lexicographic node order
CORNERS = np.array(list(itertools.product((0, 1), repeat=3)))

_g = 0.5 * (1.0 + np.array([-1.0, 1.0]) / np.sqrt(3.0))
GAUSS_POINTS = np.array(list(itertools.product(_g, repeat=3)))
GAUSS_WEIGHTS = np.full(8, 1.0 / 8.0)


def shape_values(q):
    """Values of the 8 shape functions at local points ``q`` of shape (..., 3) -> (..., 8)."""
    q = np.asarray(q, dtype=float)[..., None, :]
    f = np.where(CORNERS == 1, q, 1.0 - q)
    return np.prod(f, axis=-1)


def shape_gradients(q, h):
    """Physical gradients of the shape functions at local points: (..., 8, 3)."""
    q = np.asarray(q, dtype=float)[..., None, :]
    f = np.where(CORNERS == 1, q, 1.0 - q)
    s = np.where(CORNERS == 1, 1.0, -1.0)
    out = np.empty(np.broadcast_shapes(f.shape, s.shape))
    for d in range(3):
        others = [e for e in range(3) if e != d]
        out[..., d] = s[..., d] / h[d] * f[..., others[0]] * f[..., others[1]]
    return out


def local_gradient_products(h):
    """``S[alpha, beta, a, b] = int_cell D_alpha phi_a D_beta phi_b`` by Gauss quadrature."""
    grads = shape_gradients(GAUSS_POINTS, h)  # (8 gauss, 8 shapes, 3)
    w = GAUSS_WEIGHTS * float(np.prod(h))
    return np.einsum("g,gad,gbe->deab", w, grads, grads)
