"""Minimising ``tr_xi A`` over families of planes.

Three families are covered: the full grassmannian G(p, R^n), the Lagrangian
planes of C^n (realised on R^{2n} with interleaved coordinates
x1, y1, x2, y2, ...) and the associative 3-planes of Im O = R^7.  All of them
are sampled, then refined by Riemannian gradient descent.  The results are
upper bounds on the true minimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import sym_mat


@dataclass
class PlaneMin:
    value: float
    basis: np.ndarray
    grad_norm: float


def _orthonormal_frames(rng, n, p, count):
    G = rng.standard_normal((count, n, p))
    Q, R = np.linalg.qr(G)
    return Q


def _grassmann_descent(A, E, steps=500, gtol=1e-8):
    # descend f(E) = tr(E^T A E) along the grassmannian, QR retraction
    f = np.trace(E.T @ A @ E)
    gnorm = np.inf
    lr = 0.5 / (1.0 + np.max(np.abs(A)))
    for _ in range(steps):
        AE = A @ E
        G = 2.0 * (AE - E @ (E.T @ AE))
        gnorm = np.linalg.norm(G)
        if gnorm <= gtol:
            break
        step = lr
        while step > 1e-16:
            Q, _ = np.linalg.qr(E - step * G)
            fn = np.trace(Q.T @ A @ Q)
            if fn <= f - 0.25 * step * gnorm ** 2:
                E, f = Q, fn
                lr = step * 2.0
                break
            step *= 0.5
        else:
            break
    return PlaneMin(float(f), E, float(gnorm))


def grassmann_min_trace(A, p, samples=10000, seed=0, refine=4):
    """Sampled minimum of ``tr_xi A`` over p-planes, then local refinement."""
    A = sym_mat(A)
    n = A.shape[0]
    rng = np.random.default_rng(seed)
    E = _orthonormal_frames(rng, n, p, samples)
    vals = np.einsum("kip,ij,kjp->k", E, A, E)
    best = np.argsort(vals)[:refine]
    out = min((_grassmann_descent(A, E[k].copy()) for k in best), key=lambda r: r.value)
    return out


# ---------------------------------------------------------- Lagrangian planes

def _interleave(n):
    # column order mapping (x1..xn, y1..yn) -> (x1, y1, x2, y2, ...)
    perm = np.empty(2 * n, dtype=int)
    perm[0::2] = np.arange(n)
    perm[1::2] = n + np.arange(n)
    return perm


def lagrangian_basis(U):
    """Real orthonormal basis (2n x n) of the Lagrangian plane ``U R^n``."""
    n = U.shape[0]
    E = np.vstack([U.real, U.imag])
    return E[_interleave(n)]


def _random_unitary(rng, n):
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def _lag_value_grad(A, U):
    E = lagrangian_basis(U)
    n = U.shape[0]
    JE = lagrangian_basis(1j * U)  # J applied to the columns
    f = np.trace(E.T @ A @ E)
    M = E.T @ A @ JE
    G = M + M.T  # derivative of f(U exp(i eps S)) is tr(G S)
    return f, G


def _expi(S):
    w, V = np.linalg.eigh(S)
    return (V * np.exp(1j * w)) @ V.T


def _lag_descent(A, U, steps=2000, gtol=1e-8):
    f, G = _lag_value_grad(A, U)
    lr = 0.5 / (1.0 + np.max(np.abs(A)))
    gnorm = np.linalg.norm(G)
    for _ in range(steps):
        if gnorm <= gtol:
            break
        step = lr
        while step > 1e-16:
            Un = U @ _expi(-step * G)
            fn, Gn = _lag_value_grad(A, Un)
            if fn <= f - 0.25 * step * gnorm ** 2:
                U, f, G = Un, fn, Gn
                gnorm = np.linalg.norm(G)
                lr = step * 2.0
                break
            step *= 0.5
        else:
            break
    return PlaneMin(float(f), lagrangian_basis(U), float(gnorm)), U


def lag_min_trace(A, starts=64, seed=0, coarse_steps=40, keep=4, gtol=1e-8):
    """Minimum of ``tr_xi A`` over Lagrangian n-planes in C^n = R^{2n}."""
    A = sym_mat(A)
    if A.shape[0] % 2:
        raise ValueError("Lagrangian planes need even real dimension")
    n = A.shape[0] // 2
    rng = np.random.default_rng(seed)
    coarse = []
    for _ in range(starts):
        res, U = _lag_descent(A, _random_unitary(rng, n), steps=coarse_steps, gtol=gtol)
        coarse.append((res.value, U))
    coarse.sort(key=lambda t: t[0])
    results = [_lag_descent(A, U, gtol=gtol)[0] for _, U in coarse[:keep]]
    return min(results, key=lambda r: r.value)


def lag_net_min_trace_diag(a, b, spacing=1e-2, chunk=64):
    """Brute-force minimum over a net of Lagrangian planes of C^2, diagonal ``A``.

    ``A = diag(a1, b1, a2, b2)`` in interleaved coordinates.  Every Lagrangian
    plane of C^2 is ``O diag(e^{i t1}, e^{i t2}) R^2`` for a rotation ``O`` of
    angle ``beta`` and ``t1, t2`` in [0, pi); the net is uniform in those angles.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    grid = np.arange(0.0, np.pi, spacing)
    c1, s1 = np.cos(grid), np.sin(grid)
    best = np.inf
    for i0 in range(0, len(grid), chunk):
        beta = grid[i0:i0 + chunk]
        cb, sb = np.cos(beta)[:, None, None], np.sin(beta)[:, None, None]
        t1c, t1s = c1[None, :, None], s1[None, :, None]
        t2c, t2s = c1[None, None, :], s1[None, None, :]
        # U = O diag(e^{it1}, e^{it2}); column j has entries O[k, j] e^{i t_j}
        # f = sum_j sum_k O_kj^2 (a_k cos^2 t_j + b_k sin^2 t_j)
        col1 = cb ** 2 * (a[0] * t1c ** 2 + b[0] * t1s ** 2) + sb ** 2 * (a[1] * t1c ** 2 + b[1] * t1s ** 2)
        col2 = sb ** 2 * (a[0] * t2c ** 2 + b[0] * t2s ** 2) + cb ** 2 * (a[1] * t2c ** 2 + b[1] * t2s ** 2)
        best = min(best, float(np.min(col1 + col2)))
    return best


# ------------------------------------------------------- associative planes

# G2 3-form phi = e123 + e145 + e167 + e246 - e257 - e347 - e356
_PHI_TERMS = [((0, 1, 2), 1), ((0, 3, 4), 1), ((0, 5, 6), 1), ((1, 3, 5), 1),
              ((1, 4, 6), -1), ((2, 3, 6), -1), ((2, 4, 5), -1)]


def _phi_tensor():
    T = np.zeros((7, 7, 7))
    for (i, j, k), s in _PHI_TERMS:
        for (a, b, c), sg in [((i, j, k), 1), ((j, k, i), 1), ((k, i, j), 1),
                              ((j, i, k), -1), ((i, k, j), -1), ((k, j, i), -1)]:
            T[a, b, c] = s * sg
    return T


PHI = _phi_tensor()


def cross7(x, y):
    """Octonionic cross product on R^7: ``<x * y, z> = phi(x, y, z)``."""
    return np.einsum("i,j,ijk->k", x, y, PHI)


def associative_frame(x, y):
    """Orthonormal basis (x, y', x*y') of the associative plane through x, y."""
    x = x / np.linalg.norm(x)
    y = y - (y @ x) * x
    y = y / np.linalg.norm(y)
    return np.column_stack([x, y, cross7(x, y)])


def _assoc_frames(X, Y):
    X = X / np.linalg.norm(X, axis=1, keepdims=True)
    Y = Y - np.sum(Y * X, axis=1, keepdims=True) * X
    Y = Y / np.linalg.norm(Y, axis=1, keepdims=True)
    Z = np.einsum("ki,kj,ijl->kl", X, Y, PHI)
    return np.stack([X, Y, Z], axis=2)


def _assoc_value(A, xy):
    E = associative_frame(xy[:7], xy[7:])
    return float(np.trace(E.T @ A @ E))


def associative_min_trace(A, samples=10000, seed=0, keep=4):
    """Minimum of ``tr_xi A`` over associative 3-planes (sampled + refined)."""
    from scipy.optimize import minimize

    A = sym_mat(A)
    if A.shape[0] != 7:
        raise ValueError("associative planes live in R^7")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((samples, 7))
    Y = rng.standard_normal((samples, 7))
    E = _assoc_frames(X, Y)
    vals = np.einsum("kip,ij,kjp->k", E, A, E)
    best = np.argsort(vals)[:keep]
    out = None
    for k in best:
        res = minimize(lambda v: _assoc_value(A, v), np.concatenate([X[k], Y[k]]),
                       method="BFGS", options={"gtol": 1e-10})
        val = min(res.fun, vals[k])
        v = res.x if res.fun <= vals[k] else np.concatenate([X[k], Y[k]])
        if out is None or val < out.value:
            out = PlaneMin(float(val), associative_frame(v[:7], v[7:]), float(np.linalg.norm(res.jac)))
    return out
