"""Closed-form witnesses: failure of comparison on S^3 x S^3, and non-uniqueness.

Tube pair
    On the product of two S^3 tube charts, ``u_k = -delta_k^2 / 2`` where
    ``delta_k`` is the distance to a core circle.  Both are subharmonic for
    the branch "at least three of six eigenvalues nonnegative" (``lambda_3 >=
    0``), both sit on the boundary of the next branch (``lambda_4 = 0``) and
    ``u_1 + u_2 + c = c - rho`` vanishes on ``rho = c`` while reaching ``c``
    on the core torus: the zero maximum principle fails.

Root-gradient shift
    For ``F = {lambda_1(A - s(p)) >= 0}`` with ``s(p) = |p|^{1/2}(I + P_p)/2``,
    the function ``V = (R^3 - |x|^3)/12`` satisfies ``A + s(p) = 0``.  Both
    ``U = 0`` and ``-V`` have zero margin and vanish on ``|x| = R``.
"""

from __future__ import annotations

import math
import time

import numpy as np

from .catalog import Pq, half_root_shift, root_gradient_shift
from .geometry import BAND, tube_pair_fields
from .grid import Grid, GridFunction
from .jets import Jet2
from .solver import sums_probe_points, zmp_check
from .subequations import dual

ZERO_BAND = 1e-6


class HarnessError(ValueError):
    pass


def _sample_omega(rng, c, count):
    """Points of Omega_c = {rho < c} with both deltas inside the tube band."""
    pts = []
    lo, hi = BAND
    while len(pts) < count:
        d1, d2 = rng.uniform(lo, min(hi, math.sqrt(2 * c)), size=2)
        if 0.5 * (d1 * d1 + d2 * d2) >= c:
            continue
        th = rng.uniform(0, 2 * math.pi, size=4)
        pts.append(np.array([d1, th[0], th[1], d2, th[2], th[3]]))
    return pts


def _boundary_points(rng, c, count):
    """Points of rho = c with both deltas in the band."""
    pts = []
    R = math.sqrt(2 * c)
    lo, hi = BAND
    while len(pts) < count:
        a = rng.uniform(0, math.pi / 2)
        d1, d2 = R * math.cos(a), R * math.sin(a)
        if not (lo <= d1 <= hi and lo <= d2 <= hi):
            continue
        th = rng.uniform(0, 2 * math.pi, size=4)
        pts.append(np.array([d1, th[0], th[1], d2, th[2], th[3]]))
    return pts


def signature(lam, band=ZERO_BAND):
    lam = np.asarray(lam)
    return (int(np.sum(lam < -band)), int(np.sum(np.abs(lam) <= band)), int(np.sum(lam > band)))


def slice_grid(c, h):
    """Grid on the geodesic slice through the core: signed ``(s_1, s_2)`` with ``delta_k = |s_k|``.

    The slice passes through the core torus (``s = 0``), where the tube chart
    itself is singular, so ``u_1 + u_2 + c`` is sampled here by its closed
    form ``c - (s_1^2 + s_2^2)/2``.
    """
    R = math.sqrt(2 * c)
    m = int(math.ceil(R / h)) + 2
    counts = [2 * m + 1] * 2
    dom = _SliceDomain(c)
    g = Grid([-m * h] * 2, [m * h] * 2, counts, dom)
    return g


class _SliceDomain:
    def __init__(self, c):
        self.c = c

    def __call__(self, s):
        return 0.5 * float(s @ s) - self.c


def tube_pair_harness(c=0.5, h=2e-2, samples=100, seed=0, sums_points=None):
    """Structured report on the S^3 x S^3 comparison counterexample."""
    if not 0 < c < math.pi ** 2 / 8:
        raise HarnessError("need 0 < c < pi^2 / 8")
    if h <= 0 or h > math.sqrt(2 * c) / 4:
        raise HarnessError(f"grid spacing {h} too coarse for Omega_c with c = {c}")
    t0 = time.perf_counter()
    T = tube_pair_fields()
    rng = np.random.default_rng(seed)
    F = Pq(6, 3)          # at least three eigenvalues nonnegative
    Fd = dual(F)          # lambda_4 >= 0

    # (i) eigenvalue signature of Hess u_1 from exact jets
    counts = {}
    lam4_u1 = lam4_v = 0.0
    min_u1 = min_v2 = math.inf
    for x in _sample_omega(rng, c, samples):
        J1 = T.framed(x, T.u_jet(1, x))
        lam = np.linalg.eigvalsh(J1.A)
        sig = signature(lam)
        counts[sig] = counts.get(sig, 0) + 1
        # (iii) P_3-harmonicity of u_1 and of -c - u_2: lambda_4 vanishes
        Jv = T.framed(x, -T.u_jet(2, x))
        lam4_u1 = max(lam4_u1, abs(lam[3]))
        lam4_v = max(lam4_v, abs(np.linalg.eigvalsh(Jv.A)[3]))
        min_u1 = min(min_u1, F.margin(x, J1))
        min_v2 = min(min_v2, Fd.margin(x, T.framed(x, T.u_jet(2, x))))

    # (ii) zero maximum principle for u_1 + u_2 + c on the slice grid
    g = slice_grid(c, h)
    w = GridFunction.from_callable(g, lambda s: c - 0.5 * float(s @ s))
    z = zmp_check(w)

    # (iv) boundary agreement of u_1 and -c - u_2 on rho = c, gap on the core band
    bd = max(abs(T.u(1, x) - (-c - T.u(2, x))) for x in _boundary_points(rng, c, samples))
    xc = np.array([BAND[0], 0.0, 0.0, BAND[0], 0.0, 0.0])
    gap = T.u(1, xc) - (-c - T.u(2, xc))

    report = {
        "c": c,
        "h": h,
        "samples": samples,
        "signature_counts": {f"{a},{b},{d}": k for (a, b, d), k in sorted(counts.items())},
        "signature_ok": counts.get((2, 3, 1), 0) == samples,
        "u1_in_F_min_margin": float(min_u1),
        "u2_in_dual_min_margin": float(min_v2),
        "zmp": {"status": z.status, "magnitude": z.magnitude, "witness": z.witness,
                "boundary_max": z.boundary_max},
        "violation": z.magnitude if z.status == "violation" else 0.0,
        "lambda4_residual_u1": float(lam4_u1),
        "lambda4_residual_pair": float(lam4_v),
        "boundary_agreement": float(bd),
        "core_gap": float(gap),
        "pair": "u1 and -c - u2",
    }
    if sums_points:
        report["sums_probe"] = _tube_sums(c, sums_points).to_dict()
    report["wall_time"] = time.perf_counter() - t0
    return report


def _tube_sums(c, points_per_axis):
    """Sums probe on a coarse signed slice grid (at most ~10^4 points)."""
    R = math.sqrt(2 * c)
    ax = np.linspace(-R, R, points_per_axis)
    S = np.array([[a, b] for a in ax for b in ax])
    rho = 0.5 * np.sum(S * S, axis=1)
    K = rho <= c + 1e-12
    P = S[K]
    u = -0.5 * P[:, 0] ** 2
    v = -0.5 * P[:, 1] ** 2 + c
    # boundary of K: grid points of K with a neighbour outside
    hstep = ax[1] - ax[0]
    bd = np.array([0.5 * (np.hypot(abs(a) + hstep, abs(b)) ** 2) > c or
                   0.5 * (np.hypot(abs(a), abs(b) + hstep) ** 2) > c for a, b in P])
    # nonpositive on the boundary by construction up to the grid offset from rho = c
    v = v - max(0.0, float(np.max((u + v)[bd])))
    return sums_probe_points(P, u, v, bd, h=np.array([hstep, hstep]))


# ------------------------------------------------------------ root shift

def V_jet(x, R=1.0):
    """Exact jet of ``V = (R^3 - |x|^3) / 12``."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        return Jet2(R ** 3 / 12, np.zeros(n), np.zeros((n, n)))
    P = np.outer(x, x) / (r * r)
    return Jet2((R ** 3 - r ** 3) / 12, -(r / 4) * x, -(r / 4) * (np.eye(n) + P))


def root_shift_identity_defect(radii, n=2, seed=0, R=1.0):
    """``max |A + s(p)|`` over jets of V at the given radii (random directions)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for rad in radii:
        d = rng.standard_normal(n)
        x = rad * d / np.linalg.norm(d)
        J = V_jet(x, R)
        worst = max(worst, float(np.max(np.abs(J.A + half_root_shift(J.p)))))
    return worst


def root_shift_harness(n=2, R=1.0, samples=1000, seed=0):
    """Two distinct F-harmonics with the same boundary values."""
    rng = np.random.default_rng(seed)
    F = root_gradient_shift("-", n)
    radii = rng.uniform(0, R, samples)
    defect = root_shift_identity_defect(radii, n, seed, R)
    m_U = m_V = d_U = d_V = 0.0
    for rad in radii:
        d = rng.standard_normal(n)
        x = rad * d / np.linalg.norm(d)
        JU = Jet2.zero(n)
        JV = -V_jet(x, R)
        m_U = max(m_U, abs(F.margin(x, JU)))
        m_V = max(m_V, abs(F.margin(x, JV)))
        # -u in the dual as well: harmonic, not just subharmonic
        d_U = max(d_U, abs(F.dual_margin(x, -JU)))
        d_V = max(d_V, abs(F.dual_margin(x, -JV)))
    bd = rng.standard_normal((samples, n))
    bd = R * bd / np.linalg.norm(bd, axis=1, keepdims=True)
    boundary_gap = max(abs(V_jet(y, R).r) for y in bd)
    return {
        "identity_defect": defect,
        "U_margin": m_U, "U_dual_margin": d_U,
        "minus_V_margin": m_V, "minus_V_dual_margin": d_V,
        "boundary_values_gap": boundary_gap,
        "distinct": R ** 3 / 12,
    }
