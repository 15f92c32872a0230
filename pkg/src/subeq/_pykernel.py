"""Pure-Python sweep kernel.

Mirrors the compiled kernel operation for operation (same stencil, same
bracketing and root finder); eigenvalues come from LAPACK instead of the
Jacobi routine, so results agree to rounding, not bitwise.
"""

from __future__ import annotations

import math

import numpy as np

OK, FLAT, OVERFLOW = 0, 1, 2
MAXIT = 200



def _exp(t):
    # saturates like C exp, so bracketing probes far out stay finite-signed
    return math.exp(t) if t < 709.0 else math.inf

def jacobi_eigvalsh(A, max_sweeps=100):
    """Cyclic Jacobi eigenvalues, ascending.  Reference for the compiled routine."""
    a = np.array(A, dtype=float)
    n = a.shape[0]
    for _ in range(max_sweeps):
        off = float(np.sum(np.triu(a, 1) ** 2))
        fro = float(np.sum(a * a))
        if off == 0.0 or off <= 1e-36 * fro:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                R = np.eye(n)
                R[p, p] = R[q, q] = c
                R[p, q] = s
                R[q, p] = -s
                a = R.T @ a @ R
                a[p, q] = a[q, p] = 0.0
    return np.sort(np.diag(a))


def _half_root(p):
    r = math.sqrt(float(p @ p))
    n = len(p)
    if r == 0.0:
        return np.zeros((n, n))
    return 0.5 * math.sqrt(r) * (np.eye(n) + np.outer(p, p) / (r * r))


def margin_code(code, prm, r, p, A):
    """Margin of kernel ``code`` at the jet ``(r, p, A)``; see ``catalog`` for codes."""
    n = len(p)
    if code == 0:
        return float(np.trace(A))
    if code in (5, 6, 7):
        pp = float(p @ p)
        pAp = float(p @ A @ p)
        if code == 5:
            return (1.0 + pp) * float(np.trace(A)) - pAp
        if code == 6:
            return pp * float(np.trace(A)) + (prm[0] - 2.0) * pAp
        if pp == 0.0:
            return float(np.linalg.eigvalsh(A)[-1])
        return pAp / pp
    if code in (8, 9):
        lam = np.linalg.eigvalsh(A + prm[0] * _half_root(p))
        return float(lam[0] if code == 8 else lam[-1])
    lam = np.linalg.eigvalsh(A)
    if code == 1:
        return float(lam[int(prm[0]) - 1])
    if code == 2:
        return float(np.sum(lam[:int(prm[0])]))
    if code == 3:
        return float(np.sum(lam[n - int(prm[0]):]))
    if code == 4:
        return float(np.sum(np.arctan(lam))) - prm[0] * math.pi / 2
    if code == 10:
        return min(float(lam[0]), float(np.prod(np.maximum(lam, 0.0))) - _exp(r))
    if code == 11:
        return max(float(lam[-1]), _exp(-r) - float(np.prod(np.maximum(-lam, 0.0))))
    raise ValueError(f"unknown kernel code {code}")


def stencil(u, k, nbr, hs, gam, frm):
    """``(p, A0, D)``: framed jet with the center value removed, and its center coefficient."""
    n = len(hs)
    row = nbr[k]
    p = np.empty(n)
    A = np.empty((n, n))
    col = 2 * n
    for i in range(n):
        up, um = u[row[2 * i]], u[row[2 * i + 1]]
        p[i] = (up - um) / (2.0 * hs[i])
        A[i, i] = (up + um) / (hs[i] * hs[i])
    for i in range(n):
        for j in range(i + 1, n):
            v = (u[row[col]] - u[row[col + 1]] - u[row[col + 2]] + u[row[col + 3]]) / (4.0 * hs[i] * hs[j])
            A[i, j] = A[j, i] = v
            col += 4
    D = np.diag(-2.0 / (hs * hs))
    if gam.shape[0]:
        A = A - np.einsum("kij,k->ij", gam[k].reshape(n, n, n), p)
    if frm.shape[0]:
        H = frm[k].reshape(n, n)
        p = H @ p
        A = H @ A @ H.T
        D = H @ D @ H.T
    return p, A, D


def _jet_fn(margin, u, k, nbr, hs, gam, frm, off):
    n = len(hs)
    p, A0, D = stencil(u, k, nbr, hs, gam, frm)
    if off.shape[0]:
        o = off[k]
        r0, p = -o[0], p - o[1:1 + n]
        A0 = A0 - o[1 + n:].reshape(n, n)
    else:
        r0 = 0.0

    def f(t):
        return margin(k, t + r0, p, A0 + t * D)
    return f


def largest_root(f, t0, step, cap, xtol):
    """Largest ``t`` with ``f(t) >= 0`` for nonincreasing ``f``; ``None`` on overflow."""
    m0 = f(t0)
    if m0 >= 0:
        lo, mlo = t0, m0
        while True:
            t = lo + step
            if t > cap:
                return None
            m = f(t)
            if m < 0:
                hi, mhi = t, m
                break
            lo, mlo = t, m
            step *= 2.0
    else:
        hi, mhi = t0, m0
        while True:
            t = hi - step
            if t < -cap:
                return None
            m = f(t)
            if m >= 0:
                lo, mlo = t, m
                break
            hi, mhi = t, m
            step *= 2.0
    side = 0
    for it in range(MAXIT):
        if hi - lo <= xtol:
            break
        if it % 4 == 3 or mlo - mhi <= 0.0:
            t = 0.5 * (lo + hi)
        else:
            t = hi - mhi * (hi - lo) / (mhi - mlo)
            if not (lo < t < hi):
                t = 0.5 * (lo + hi)
        # keep probes xtol/2 inside the bracket so an exact secant hit terminates
        t = min(max(t, lo + 0.5 * xtol), hi - 0.5 * xtol)
        if t <= lo or t >= hi:
            break
        m = f(t)
        if m >= 0:
            lo, mlo = t, m
            if side == 1:
                mhi *= 0.5
            side = 1
        else:
            hi, mhi = t, m
            if side == -1:
                mlo *= 0.5
            side = -1
    return lo


def sweep_callable(u, nodes, nbr, hs, margin, gam, frm, off, dlast, cap, xtol,
                   check_flat, parallel):
    """One Gauss-Seidel (or Jacobi when ``parallel``) sweep.  Returns ``(max_update, status, node)``."""
    src = u.copy() if parallel else u
    new = np.empty(len(nodes)) if parallel else None
    worst = 0.0
    for k in range(len(nodes)):
        f = _jet_fn(margin, src, k, nbr, hs, gam, frm, off)
        if check_flat and not (f(cap) < 0 < f(-cap)):
            return worst, FLAT, k
        t0 = src[nodes[k]]
        step = max(dlast[k], 1e-12 * (1.0 + abs(t0)))
        t = largest_root(f, t0, step, cap, xtol)
        if t is None:
            return worst, OVERFLOW, k
        d = abs(t - t0)
        dlast[k] = d
        worst = max(worst, d)
        if parallel:
            new[k] = t
        else:
            u[nodes[k]] = t
    if parallel:
        u[nodes] = new
    return worst, OK, -1


def residuals_callable(u, nodes, nbr, hs, margin, gam, frm, off):
    out = np.empty(len(nodes))
    for k in range(len(nodes)):
        out[k] = _jet_fn(margin, u, k, nbr, hs, gam, frm, off)(u[nodes[k]])
    return out


def _code_margin(code, prm):
    return lambda k, r, p, A: margin_code(code, prm, r, p, A)


def sweep(u, nodes, nbr, hs, code, prm, gam, frm, off, dlast, cap, xtol, check_flat, parallel,
          threads=0):
    return sweep_callable(u, nodes, nbr, hs, _code_margin(code, prm), gam, frm, off, dlast,
                          cap, xtol, check_flat, parallel)


def residuals(u, nodes, nbr, hs, code, prm, gam, frm, off):
    return residuals_callable(u, nodes, nbr, hs, _code_margin(code, prm), gam, frm, off)
