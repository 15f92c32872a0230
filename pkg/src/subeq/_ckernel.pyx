# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled nodal update for the Gauss-Seidel Perron sweep.

Operation-for-operation mirror of ``_pykernel``; eigenvalues come from a
cyclic Jacobi routine so the kernel needs no LAPACK calls.
"""

import numpy as np
from cython.parallel cimport prange
from libc.math cimport sqrt, fabs, atan, exp, M_PI, NAN

cdef enum:
    NMAX = 16
    MAXIT = 200

cdef enum:
    OK = 0
    FLAT = 1
    OVERFLOW = 2


cdef void jacobi_eig(double* a, int n, double* w) noexcept nogil:
    # a (n x n, row-major) is destroyed; w receives ascending eigenvalues
    cdef int sweep, p, q, k, i
    cdef double off, fro, apq, theta, t, c, s, akp, akq, app, aqq, tmp
    if n == 2:
        # closed form; the symmetric 2x2 case is the solver's hot path
        t = 0.5 * (a[0] + a[3])
        s = 0.5 * (a[0] - a[3])
        c = sqrt(s * s + a[1] * a[1])
        w[0] = t - c
        w[1] = t + c
        return
    for sweep in range(100):
        off = 0.0
        fro = 0.0
        for p in range(n):
            for q in range(n):
                fro += a[p * n + q] * a[p * n + q]
                if q > p:
                    off += a[p * n + q] * a[p * n + q]
        if off == 0.0 or off <= 1e-36 * fro:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p * n + q]
                if apq == 0.0:
                    continue
                app = a[p * n + p]
                aqq = a[q * n + q]
                theta = (aqq - app) / (2.0 * apq)
                if theta >= 0:
                    t = 1.0 / (theta + sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k * n + p]
                    akq = a[k * n + q]
                    a[k * n + p] = c * akp - s * akq
                    a[k * n + q] = s * akp + c * akq
                for k in range(n):
                    akp = a[p * n + k]
                    akq = a[q * n + k]
                    a[p * n + k] = c * akp - s * akq
                    a[q * n + k] = s * akp + c * akq
                a[p * n + q] = 0.0
                a[q * n + p] = 0.0
    for i in range(n):
        w[i] = a[i * n + i]
    for i in range(1, n):
        tmp = w[i]
        k = i - 1
        while k >= 0 and w[k] > tmp:
            w[k + 1] = w[k]
            k -= 1
        w[k + 1] = tmp


cdef double eval_margin(int code, double* prm, double r, double* p, double* A, int n) noexcept nogil:
    cdef double work[NMAX * NMAX]
    cdef double lam[NMAX]
    cdef double pp = 0.0, pAp = 0.0, tr = 0.0, acc, rr, sc, prod
    cdef int i, j, q
    for i in range(n):
        tr += A[i * n + i]
    if code == 0:
        return tr
    if code == 5 or code == 6 or code == 7:
        for i in range(n):
            pp += p[i] * p[i]
            for j in range(n):
                pAp += p[i] * A[i * n + j] * p[j]
        if code == 5:
            return (1.0 + pp) * tr - pAp
        if code == 6:
            return pp * tr + (prm[0] - 2.0) * pAp
        if pp == 0.0:
            for i in range(n * n):
                work[i] = A[i]
            jacobi_eig(work, n, lam)
            return lam[n - 1]
        return pAp / pp
    for i in range(n * n):
        work[i] = A[i]
    if code == 8 or code == 9:
        for i in range(n):
            pp += p[i] * p[i]
        if pp > 0.0:
            rr = sqrt(pp)
            sc = prm[0] * 0.5 * sqrt(rr)
            for i in range(n):
                for j in range(n):
                    work[i * n + j] += sc * p[i] * p[j] / pp
                work[i * n + i] += sc
        jacobi_eig(work, n, lam)
        return lam[0] if code == 8 else lam[n - 1]
    jacobi_eig(work, n, lam)
    if code == 1:
        return lam[<int>prm[0] - 1]
    if code == 2:
        acc = 0.0
        for i in range(<int>prm[0]):
            acc += lam[i]
        return acc
    if code == 3:
        acc = 0.0
        for i in range(n - <int>prm[0], n):
            acc += lam[i]
        return acc
    if code == 4:
        acc = 0.0
        for i in range(n):
            acc += atan(lam[i])
        return acc - prm[0] * M_PI / 2
    if code == 10:
        prod = 1.0
        for i in range(n):
            prod *= lam[i] if lam[i] > 0.0 else 0.0
        acc = prod - exp(r)
        return lam[0] if lam[0] < acc else acc
    if code == 11:
        prod = 1.0
        for i in range(n):
            prod *= -lam[i] if lam[i] < 0.0 else 0.0
        acc = exp(-r) - prod
        return lam[n - 1] if lam[n - 1] > acc else acc
    return NAN


cdef struct NodeJet:
    int n
    double r0
    double p[NMAX]
    double A0[NMAX * NMAX]
    double D[NMAX * NMAX]


cdef void build_jet(NodeJet* J, const double* u, Py_ssize_t k, const long long[:, ::1] nbr,
                    const double[::1] hs, const double[:, ::1] gam, const double[:, ::1] frm,
                    const double[:, ::1] off, int n) noexcept nogil:
    cdef double pc[NMAX]
    cdef double T[NMAX * NMAX]
    cdef double B[NMAX * NMAX]
    cdef double up, um, v, acc
    cdef int i, j, l, col = 2 * n
    J.n = n
    for i in range(n * n):
        J.A0[i] = 0.0
        J.D[i] = 0.0
    for i in range(n):
        up = u[nbr[k, 2 * i]]
        um = u[nbr[k, 2 * i + 1]]
        pc[i] = (up - um) / (2.0 * hs[i])
        J.A0[i * n + i] = (up + um) / (hs[i] * hs[i])
        J.D[i * n + i] = -2.0 / (hs[i] * hs[i])
    for i in range(n):
        for j in range(i + 1, n):
            v = (u[nbr[k, col]] - u[nbr[k, col + 1]] - u[nbr[k, col + 2]] + u[nbr[k, col + 3]]) / (4.0 * hs[i] * hs[j])
            J.A0[i * n + j] = v
            J.A0[j * n + i] = v
            col += 4
    if gam.shape[0] > 0:
        for i in range(n):
            for j in range(n):
                acc = 0.0
                for l in range(n):
                    acc = acc + gam[k, (l * n + i) * n + j] * pc[l]
                J.A0[i * n + j] -= acc
    if frm.shape[0] > 0:
        # p <- H p, A <- H A H^T, D <- H D H^T
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc = acc + frm[k, i * n + j] * pc[j]
            J.p[i] = acc
        for i in range(n):
            for j in range(n):
                acc = 0.0
                for l in range(n):
                    acc = acc + frm[k, i * n + l] * J.A0[l * n + j]
                T[i * n + j] = acc
                acc = 0.0
                for l in range(n):
                    acc = acc + frm[k, i * n + l] * J.D[l * n + j]
                B[i * n + j] = acc
        for i in range(n):
            for j in range(n):
                acc = 0.0
                for l in range(n):
                    acc = acc + T[i * n + l] * frm[k, j * n + l]
                J.A0[i * n + j] = acc
                acc = 0.0
                for l in range(n):
                    acc = acc + B[i * n + l] * frm[k, j * n + l]
                J.D[i * n + j] = acc
    else:
        for i in range(n):
            J.p[i] = pc[i]
    J.r0 = 0.0
    if off.shape[0] > 0:
        J.r0 = -off[k, 0]
        for i in range(n):
            J.p[i] -= off[k, 1 + i]
        for i in range(n * n):
            J.A0[i] -= off[k, 1 + n + i]


cdef double jet_margin(NodeJet* J, int code, double* prm, double t) noexcept nogil:
    cdef double A[NMAX * NMAX]
    cdef int i, n = J.n
    for i in range(n * n):
        A[i] = J.A0[i] + t * J.D[i]
    return eval_margin(code, prm, t + J.r0, J.p, A, n)


cdef int largest_root(NodeJet* J, int code, double* prm, double t0, double step,
                      double cap, double xtol, double* out) noexcept nogil:
    cdef double lo, hi, mlo, mhi, m, t
    cdef int it, side = 0
    m = jet_margin(J, code, prm, t0)
    if m >= 0:
        lo = t0
        mlo = m
        while True:
            t = lo + step
            if t > cap:
                return OVERFLOW
            m = jet_margin(J, code, prm, t)
            if m < 0:
                hi = t
                mhi = m
                break
            lo = t
            mlo = m
            step *= 2.0
    else:
        hi = t0
        mhi = m
        while True:
            t = hi - step
            if t < -cap:
                return OVERFLOW
            m = jet_margin(J, code, prm, t)
            if m >= 0:
                lo = t
                mlo = m
                break
            hi = t
            mhi = m
            step *= 2.0
    for it in range(MAXIT):
        if hi - lo <= xtol:
            break
        if it % 4 == 3 or mlo - mhi <= 0.0:
            t = 0.5 * (lo + hi)
        else:
            t = hi - mhi * (hi - lo) / (mhi - mlo)
            if not (lo < t and t < hi):
                t = 0.5 * (lo + hi)
        if t < lo + 0.5 * xtol:
            t = lo + 0.5 * xtol
        if t > hi - 0.5 * xtol:
            t = hi - 0.5 * xtol
        if t <= lo or t >= hi:
            break
        m = jet_margin(J, code, prm, t)
        if m >= 0:
            lo = t
            mlo = m
            if side == 1:
                mhi *= 0.5
            side = 1
        else:
            hi = t
            mhi = m
            if side == -1:
                mlo *= 0.5
            side = -1
    out[0] = lo
    return OK


cdef int update_node(double* u_src, Py_ssize_t k, const long long[::1] nodes,
                     const long long[:, ::1] nbr, const double[::1] hs, int code, double* prm,
                     const double[:, ::1] gam, const double[:, ::1] frm, const double[:, ::1] off,
                     double[::1] dlast, double cap, double xtol, int check_flat, int n,
                     double* tnew) noexcept nogil:
    cdef NodeJet J
    cdef double t0, step, a, b
    cdef int st
    build_jet(&J, u_src, k, nbr, hs, gam, frm, off, n)
    if check_flat:
        a = jet_margin(&J, code, prm, cap)
        b = jet_margin(&J, code, prm, -cap)
        if not (a < 0 and 0 < b):
            return FLAT
    t0 = u_src[nodes[k]]
    step = dlast[k]
    if step < 1e-12 * (1.0 + fabs(t0)):
        step = 1e-12 * (1.0 + fabs(t0))
    st = largest_root(&J, code, prm, t0, step, cap, xtol, tnew)
    if st != OK:
        return st
    dlast[k] = fabs(tnew[0] - t0)
    return OK


def sweep(double[::1] u, const long long[::1] nodes, const long long[:, ::1] nbr,
          const double[::1] hs, int code, double[::1] prm, const double[:, ::1] gam,
          const double[:, ::1] frm, const double[:, ::1] off, double[::1] dlast,
          double cap, double xtol, bint check_flat, bint parallel, int threads=0):
    """One sweep; returns ``(max_update, status, node)`` like the Python kernel."""
    cdef Py_ssize_t k, m = nodes.shape[0]
    cdef int n = hs.shape[0], st
    cdef double worst = 0.0, t
    cdef double[::1] src
    cdef double[::1] fresh
    cdef int[::1] status
    if n > NMAX:
        raise ValueError("dimension above 16")
    if not parallel:
        for k in range(m):
            st = update_node(&u[0], k, nodes, nbr, hs, code, &prm[0], gam, frm, off, dlast,
                             cap, xtol, check_flat, n, &t)
            if st != OK:
                return worst, st, k
            if dlast[k] > worst:
                worst = dlast[k]
            u[nodes[k]] = t
        return worst, OK, -1
    src = np.array(u, copy=True)
    fresh = np.empty(m)
    status = np.zeros(m, dtype=np.intc)
    if threads <= 0:
        for k in prange(m, nogil=True, schedule="static"):
            status[k] = update_node(&src[0], k, nodes, nbr, hs, code, &prm[0], gam, frm, off,
                                    dlast, cap, xtol, check_flat, n, &fresh[k])
    else:
        for k in prange(m, nogil=True, schedule="static", num_threads=threads):
            status[k] = update_node(&src[0], k, nodes, nbr, hs, code, &prm[0], gam, frm, off,
                                    dlast, cap, xtol, check_flat, n, &fresh[k])
    for k in range(m):
        if status[k] != OK:
            return worst, status[k], k
        if dlast[k] > worst:
            worst = dlast[k]
        u[nodes[k]] = fresh[k]
    return worst, OK, -1


def residuals(const double[::1] u, const long long[::1] nodes, const long long[:, ::1] nbr,
              const double[::1] hs, int code, double[::1] prm, const double[:, ::1] gam,
              const double[:, ::1] frm, const double[:, ::1] off):
    cdef Py_ssize_t k, m = nodes.shape[0]
    cdef int n = hs.shape[0]
    cdef NodeJet J
    out = np.empty(m)
    cdef double[::1] o = out
    for k in range(m):
        build_jet(&J, &u[0], k, nbr, hs, gam, frm, off, n)
        o[k] = jet_margin(&J, code, &prm[0], u[nodes[k]])
    return out


def margin_code(int code, prm, double r, p, A):
    """Kernel margin at one jet (used to check the kernel against the catalog)."""
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef double[::1] Av = np.ascontiguousarray(A, dtype=np.float64).reshape(-1)
    cdef double[::1] pr = np.ascontiguousarray(np.concatenate([np.atleast_1d(np.asarray(prm, dtype=np.float64)), [0.0]]))
    cdef int n = pv.shape[0]
    if n > NMAX:
        raise ValueError("dimension above 16")
    return eval_margin(code, &pr[0], r, &pv[0], &Av[0], n)


def jacobi_eigvalsh(A):
    cdef double[::1] a = np.array(A, dtype=np.float64).reshape(-1)
    cdef int n = int(round(len(a) ** 0.5))
    out = np.empty(n)
    cdef double[::1] w = out
    if n > NMAX:
        raise ValueError("dimension above 16")
    jacobi_eig(&a[0], n, &w[0])
    return out
