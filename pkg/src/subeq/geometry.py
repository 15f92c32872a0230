"""Chart-level riemannian data: Christoffel maps, riemannian hessians, boundary tests.

Jets handed to subequations are expressed in the g-orthonormal frame
``h = g^{-1/2}``, so eigenvalue conditions read the eigenvalues of the
riemannian hessian relative to ``g``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .jets import Jet2, sym_mat
from .subequations import (T_LADDER, AsymptoticVerdict, MissingLipschitzBound,
                           asymptotic_interior_contains, c_strict_contains)

H_FD = 1e-4
BAND = (1e-2, math.pi / 2 - 1e-2)


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class ChristoffelMap:
    """``G[k, i, j] = Gamma^k_ij``; ``apply(p)`` is the matrix ``sum_k Gamma^k_ij p_k``."""

    G: np.ndarray

    def apply(self, p):
        return np.einsum("kij,k->ij", self.G, p)

    def symmetry_defect(self):
        return float(np.max(np.abs(self.G - self.G.transpose(0, 2, 1))))


@dataclass
class MetricChart:
    """Coordinate metric ``g(x)`` on a box, optionally with analytic Christoffels."""

    n: int
    g: Callable
    lo: np.ndarray
    hi: np.ndarray
    analytic_christoffel: Optional[Callable] = None
    name: str = "chart"
    periodic: tuple = ()

    def metric(self, x):
        G = sym_mat(np.atleast_2d(self.g(np.asarray(x, dtype=float))), tol=1e-10)
        return G

    def in_box(self, x, pad=0.0):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo + pad) and np.all(x <= self.hi - pad))

    def frame(self, x):
        """``g(x)^{-1/2}``, columns are a g-orthonormal frame."""
        w, V = np.linalg.eigh(self.metric(x))
        if w[0] < 1e-8:
            raise GeometryError(f"metric not positive definite at {x}")
        return (V / np.sqrt(w)) @ V.T

    def is_flat(self):
        return self.name.startswith("euclidean")


def _metric_derivatives(metric, x, h=H_FD):
    n = metric.n
    dg = np.empty((n, n, n))  # dg[l, i, j] = d_l g_ij
    for l in range(n):
        e = np.zeros(n)
        e[l] = h
        dg[l] = (metric.metric(x + e) - metric.metric(x - e)) / (2 * h)
    return dg


def christoffel_fd(metric, x, h=H_FD):
    x = np.asarray(x, dtype=float)
    dg = _metric_derivatives(metric, x, h)
    try:
        ginv = np.linalg.inv(metric.metric(x))
    except np.linalg.LinAlgError as exc:
        raise GeometryError("singular metric") from exc
    # first kind: [ij, l] = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    first = 0.5 * (np.einsum("ijl->ijl", dg) + np.einsum("jil->ijl", dg)
                   - np.einsum("lij->ijl", dg))
    G = np.einsum("kl,ijl->kij", ginv, first)
    return ChristoffelMap(0.5 * (G + G.transpose(0, 2, 1)))


def christoffel(metric, x, h=H_FD):
    """Christoffel symbols at ``x``; analytic when the chart supplies them."""
    x = np.asarray(x, dtype=float)
    if metric.is_flat():
        return ChristoffelMap(np.zeros((metric.n,) * 3))
    if metric.analytic_christoffel is not None:
        return ChristoffelMap(np.asarray(metric.analytic_christoffel(x), dtype=float))
    return christoffel_fd(metric, x, h)


def metric_compatibility_residual(metric, x, h=H_FD):
    """``max |d_k g_ij - Gamma^l_ki g_lj - Gamma^l_kj g_il|``."""
    x = np.asarray(x, dtype=float)
    dg = _metric_derivatives(metric, x, h)
    G = christoffel(metric, x).G
    g = metric.metric(x)
    res = dg - np.einsum("lki,lj->kij", G, g) - np.einsum("lkj,il->kij", G, g)
    return float(np.max(np.abs(res)))


def riemannian_hessian(metric, x, J):
    """``(r, p, A) -> (r, p, A - Gamma_x(p))``."""
    Gam = christoffel(metric, x)
    return Jet2(J.r, J.p, J.A - Gam.apply(J.p))


def frame_transform_jet(J, h):
    """``(r, p, A) -> (r, h p, h A h^T)``."""
    h = np.asarray(h, dtype=float)
    if np.linalg.cond(h) > 1e12:
        raise GeometryError("singular frame")
    return Jet2(J.r, h @ J.p, h @ J.A @ h.T)


def framed_jet(metric, x, J):
    """Riemannian 2-jet in the orthonormal frame ``g^{-1/2}``."""
    R = riemannian_hessian(metric, x, J)
    if metric.is_flat():
        return R
    return frame_transform_jet(R, metric.frame(x))


# ------------------------------------------------------------------ domains

def fd_jet(f, x, h=H_FD):
    """Coordinate 2-jet of ``f`` at ``x`` by centered differences."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    f0 = f(x)
    p = np.empty(n)
    A = np.empty((n, n))
    E = np.eye(n) * h
    fp = [f(x + E[i]) for i in range(n)]
    fm = [f(x - E[i]) for i in range(n)]
    for i in range(n):
        p[i] = (fp[i] - fm[i]) / (2 * h)
        A[i, i] = (fp[i] - 2 * f0 + fm[i]) / (h * h)
        for j in range(i):
            v = (f(x + E[i] + E[j]) - f(x + E[i] - E[j])
                 - f(x - E[i] + E[j]) + f(x - E[i] - E[j])) / (4 * h * h)
            A[i, j] = A[j, i] = v
    return Jet2(float(f0), p, A)


@dataclass
class DomainSpec:
    """``{rho < 0}``; ``jet`` may supply exact derivatives of ``rho``."""

    rho: Callable
    jet: Optional[Callable] = None
    h_fd: float = H_FD
    name: str = "domain"

    def __call__(self, x):
        return float(self.rho(np.asarray(x, dtype=float)))

    def jet_at(self, x):
        x = np.asarray(x, dtype=float)
        if self.jet is not None:
            return self.jet(x)
        return fd_jet(self.rho, x, self.h_fd)

    def project_to_boundary(self, x, iters=50):
        """Newton steps along the gradient onto ``rho = 0``."""
        x = np.asarray(x, dtype=float).copy()
        for _ in range(iters):
            J = self.jet_at(x)
            gg = float(J.p @ J.p)
            if gg < 1e-24:
                raise GeometryError("degenerate gradient of rho")
            dx = J.r / gg * J.p
            x -= dx
            if np.linalg.norm(dx) < 1e-14:
                break
        return x


def ball(n, R=1.0, center=None):
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)

    def jet(x):
        d = x - c
        return Jet2(float(d @ d - R * R), 2 * d, 2 * np.eye(n))
    return DomainSpec(lambda x: float((x - c) @ (x - c) - R * R), jet, name=f"ball(R={R})")


@dataclass
class BoundaryData:
    normal: np.ndarray          # outward, g-unit, coordinate components
    tangent: np.ndarray         # coordinate vectors, g-orthonormal columns
    projector: np.ndarray       # framed projector onto the tangent space
    II: np.ndarray              # second fundamental form on the tangent basis
    grad_norm: float

    def orthogonality_defect(self, metric, x):
        g = metric.metric(x)
        return float(np.max(np.abs(self.normal @ g @ self.tangent))) if self.tangent.size else 0.0


def second_fundamental_form(metric, domain, x):
    """II of ``{rho = 0}`` at ``x``; the ball of radius R gets ``I / R``."""
    x = np.asarray(x, dtype=float)
    J = domain.jet_at(x)
    g = metric.metric(x)
    ginv = np.linalg.inv(g)
    gn = math.sqrt(float(J.p @ ginv @ J.p))
    if gn < 1e-6:
        raise GeometryError(f"|grad rho|_g = {gn:g} is degenerate")
    Jf = framed_jet(metric, x, J * (1.0 / gn))
    nu = Jf.p / np.linalg.norm(Jf.p)
    # orthonormal complement of nu in the frame
    Q, _ = np.linalg.qr(np.column_stack([nu, np.eye(metric.n)]))
    T = Q[:, 1:metric.n]
    II = T.T @ Jf.A @ T
    h = np.eye(metric.n) if metric.is_flat() else metric.frame(x)
    return BoundaryData(normal=ginv @ J.p / gn, tangent=h @ T,
                        projector=np.eye(metric.n) - np.outer(nu, nu),
                        II=0.5 * (II + II.T), grad_norm=gn)


# -------------------------------------------------------- convexity / barrier

@dataclass
class ConvexityResult:
    verdicts: dict            # lambda -> "Yes" | "No" | "Undetermined"
    t_used: dict              # lambda -> t (or None)

    @property
    def strict(self):
        return all(v == "Yes" for v in self.verdicts.values())

    @property
    def all_no(self):
        return all(v == "No" for v in self.verdicts.values())


def boundary_convexity_test(F, metric, domain, x, lam_list=(-1.0, 0.0, 1.0), seed=0,
                            t_ladder=T_LADDER, neighbors=128):
    """Is ``J^2 rho + t d rho o d rho`` in the asymptotic interior of ``F_lam`` for some t?"""
    x = np.asarray(x, dtype=float)
    J = framed_jet(metric, x, domain.jet_at(x))
    D = Jet2(0.0, np.zeros(metric.n), np.outer(J.p, J.p))
    verdicts, used = {}, {}
    for lam in lam_list:
        kinds = []
        hit = None
        for t in (0.0,) + tuple(t_ladder):
            v = asymptotic_interior_contains(F, lam, J + D * t, x, seed=seed,
                                             neighbors=neighbors, t_ladder=t_ladder)
            kinds.append(v.kind)
            if v.yes:
                hit = t
                break
        if hit is not None:
            verdicts[lam], used[lam] = "Yes", hit
        elif all(k == "No" for k in kinds):
            verdicts[lam], used[lam] = "No", None
        else:
            verdicts[lam], used[lam] = "Undetermined", None
    return ConvexityResult(verdicts, used)


def _strict_at(F, x, J, c, seed):
    try:
        return bool(c_strict_contains(F, x, J, c, seed=seed))
    except MissingLipschitzBound:
        # no certificate: require the center and a probe sphere of radius c inside
        if F.margin(x, J) < 0:
            return False
        rng = np.random.default_rng(seed)
        for _ in range(64):
            d = Jet2(rng.standard_normal(), rng.standard_normal(J.n),
                     _rand_sym(rng, J.n))
            if F.margin(x, J + d * (c / d.norm())) < 0:
                return False
        return True


def _rand_sym(rng, n):
    M = rng.standard_normal((n, n))
    return 0.5 * (M + M.T)


@dataclass
class BarrierParams:
    C: float
    eps: float
    r0: float


@dataclass
class BarrierResult:
    ok: bool
    params: Optional[BarrierParams] = None
    diagnostics: dict = field(default_factory=dict)


def barrier_jet(metric, domain, x0, lam, prm, x):
    """Framed riemannian jet of ``lam + C (rho - eps |x - x0|^2 / 2)`` at ``x``."""
    J = domain.jet_at(x)
    d = x - x0
    q = Jet2(0.5 * float(d @ d), d, np.eye(len(x)))
    B = (J - q * prm.eps) * prm.C
    return framed_jet(metric, x, B.with_r(B.r + lam))


def _ball_samples(rng, x0, r0, count):
    n = len(x0)
    v = rng.standard_normal((count, n))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return x0 + v * (r0 * rng.uniform(size=(count, 1)) ** (1.0 / n))


def verify_barrier(F, metric, domain, x0, lam, prm, samples=1000, seed=0, c=1e-6):
    """Check c-strictness of the barrier at ``samples`` points of ``B(x0, r0)``."""
    rng = np.random.default_rng(seed)
    x0 = np.asarray(x0, dtype=float)
    for i, x in enumerate(_ball_samples(rng, x0, prm.r0, samples)):
        if not _strict_at(F, x, barrier_jet(metric, domain, x0, lam, prm, x), c, seed + i):
            return False, x
    return True, None


def make_barrier(F, metric, domain, x0, lam, seed=0, c=1e-6, samples=1000,
                 kmax=6, cmax=30, lam_margin=1.0):
    """Search ``eps, r0 in 0.1 * 2^-k`` and ``C = 2^k`` for a c-strict barrier at ``x0``."""
    x0 = np.asarray(x0, dtype=float)
    pre = boundary_convexity_test(F, metric, domain, x0, (lam + lam_margin,), seed=seed)
    if not pre.strict:
        return BarrierResult(False, diagnostics={"reason": "boundary not strictly convex",
                                                 "verdicts": {str(k): v for k, v in pre.verdicts.items()}})
    tried = 0
    for ke in range(kmax + 1):
        eps = 0.1 * 2.0 ** -ke
        for kr in range(kmax + 1):
            r0 = 0.1 * 2.0 ** -kr
            for kc in range(cmax):
                tried += 1
                p1 = BarrierParams(2.0 ** kc, eps, r0)
                p2 = BarrierParams(2.0 ** (kc + 1), eps, r0)
                ok1, _ = verify_barrier(F, metric, domain, x0, lam, p1, samples, seed, c)
                if ok1 and verify_barrier(F, metric, domain, x0, lam, p2, samples, seed, c)[0]:
                    return BarrierResult(True, p1, {"tried": tried})
    return BarrierResult(False, diagnostics={"reason": "search exhausted", "tried": tried})


# ---------------------------------------------------------- builtin metrics

def _euclidean(n):
    return MetricChart(n, lambda x: np.eye(n), np.full(n, -np.inf), np.full(n, np.inf),
                       name=f"euclidean({n})")


def _tube_g(x):
    d = x[0]
    return np.diag([1.0, math.cos(d) ** 2, math.sin(d) ** 2])


def _tube_gamma(x):
    d = x[0]
    c, s = math.cos(d), math.sin(d)
    G = np.zeros((3, 3, 3))
    G[0, 1, 1] = c * s
    G[0, 2, 2] = -s * c
    G[1, 0, 1] = G[1, 1, 0] = -s / c
    G[2, 0, 2] = G[2, 2, 0] = c / s
    return G


def _s3_tube():
    lo = np.array([BAND[0], 0.0, 0.0])
    hi = np.array([BAND[1], 2 * math.pi, 2 * math.pi])
    return MetricChart(3, _tube_g, lo, hi, _tube_gamma, "s3_tube", periodic=(1, 2))


def _s3xs3_g(x):
    G = np.zeros((6, 6))
    G[:3, :3] = _tube_g(x[:3])
    G[3:, 3:] = _tube_g(x[3:])
    return G


def _s3xs3_gamma(x):
    G = np.zeros((6, 6, 6))
    G[:3, :3, :3] = _tube_gamma(x[:3])
    G[3:, 3:, 3:] = _tube_gamma(x[3:])
    return G


def _s3xs3_tube():
    lo = np.array([BAND[0], 0.0, 0.0] * 2)
    hi = np.array([BAND[1], 2 * math.pi, 2 * math.pi] * 2)
    return MetricChart(6, _s3xs3_g, lo, hi, _s3xs3_gamma, "s3xs3_tube", periodic=(1, 2, 4, 5))


def builtin_metric(name):
    """``euclidean(n)`` (also ``euclidean:n=3``), ``s3_tube`` or ``s3xs3_tube``."""
    name = name.strip()
    m = re.fullmatch(r"euclidean(?:\((\d+)\)|:n=(\d+))?", name)
    if m:
        n = int(m.group(1) or m.group(2) or 2)
        return _euclidean(n)
    if name == "s3_tube":
        return _s3_tube()
    if name == "s3xs3_tube":
        return _s3xs3_tube()
    raise GeometryError(f"unknown metric {name!r}")


# ------------------------------------------------------ S^3 x S^3 tube fields

class TubePairFields:
    """Distance-to-core fields on the S^3 x S^3 tube chart, with exact jets.

    ``delta_k`` is coordinate ``3(k-1)``; ``u_k = -delta_k^2 / 2`` and
    ``rho = (delta_1^2 + delta_2^2) / 2 = -(u_1 + u_2)``.
    """

    def __init__(self):
        self.metric = _s3xs3_tube()

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        for d in (x[0], x[3]):
            if not BAND[0] - 1e-15 <= d <= BAND[1] + 1e-15:
                raise GeometryError(f"delta = {d:g} outside the tube band {BAND}")
        return x

    def delta(self, k, x):
        return float(self._check(x)[3 * (k - 1)])

    def u(self, k, x):
        return -0.5 * self.delta(k, x) ** 2

    def rho(self, x):
        x = self._check(x)
        return 0.5 * (x[0] ** 2 + x[3] ** 2)

    def u_jet(self, k, x):
        x = self._check(x)
        i = 3 * (k - 1)
        p = np.zeros(6)
        p[i] = -x[i]
        A = np.zeros((6, 6))
        A[i, i] = -1.0
        return Jet2(-0.5 * x[i] ** 2, p, A)

    def rho_jet(self, x):
        J = self.u_jet(1, x) + self.u_jet(2, x)
        return -J

    def framed(self, x, J):
        return framed_jet(self.metric, np.asarray(x, dtype=float), J)

    def domain(self, c):
        return DomainSpec(lambda x: self.rho(x) - c,
                          lambda x: self.rho_jet(x) - Jet2(c, np.zeros(6), np.zeros((6, 6))),
                          name=f"Omega_c(c={c})")


def tube_pair_fields():
    return TubePairFields()
