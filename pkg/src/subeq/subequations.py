"""Subequations represented by margin functions on the 2-jet fibre.

A subequation ``F`` is carried by a continuous margin ``m(x, J)`` with
``J in F_x  <=>  m(x, J) >= 0`` and ``m > 0`` on the interior.  Each entry
also carries a hand-derived margin for its Dirichlet dual; the generic rule
``-m(x, -J)`` is only a cross-check because it misreads the interior on
degenerate strata.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .jets import Jet2, random_jet, random_psd

Margin = Callable[[Optional[np.ndarray], Jet2], float]

T_LADDER = tuple(2.0 ** k for k in range(21))


@dataclass(frozen=True)
class KernelSpec:
    """Description of a margin the compiled sweep kernel knows how to evaluate.

    ``offset`` is an optional map ``x -> Jet2`` subtracted from the discrete
    jet before evaluation (translated subequations).
    """

    code: int
    params: tuple = ()
    offset: Optional[Callable] = None


@dataclass(frozen=True)
class DualInfo:
    name: str
    spectral: Optional[Callable] = None
    kernel: Optional[KernelSpec] = None


@dataclass(frozen=True, eq=False)
class Subequation:
    name: str
    dim: int
    margin: Margin
    dual_margin: Margin
    reduced: bool = False
    pure_second_order: bool = False
    cone: bool = False
    constant_coefficient: bool = True
    lipschitz_bound: Optional[float] = None
    invariance_note: str = ""
    approximate: bool = False
    is_subequation: bool = True
    spectral: Optional[Callable] = None
    kernel: Optional[KernelSpec] = None
    dual_info: Optional[DualInfo] = None
    formula: str = ""

    def __call__(self, x, J):
        return self.margin(x, J)

    def negation_margin(self, x, J):
        """Generic duality rule ``-m(x, -J)``, valid on the generic stratum."""
        return -self.margin(x, -J)

    def flags(self):
        return {"reduced": self.reduced, "pure_second_order": self.pure_second_order,
                "cone": self.cone, "constant_coefficient": self.constant_coefficient}


class Membership(enum.Enum):
    INSIDE = "Inside"
    BOUNDARY = "Boundary"
    OUTSIDE = "Outside"


def contains(F, x, J, tol=1e-9):
    m = F.margin(x, J)
    if m > tol:
        return Membership.INSIDE
    if m < -tol:
        return Membership.OUTSIDE
    return Membership.BOUNDARY


def dual(F):
    """Dirichlet dual.  ``dual(dual(F))`` hands back the original margin objects."""
    info = F.dual_info or DualInfo(f"dual({F.name})")
    return replace(
        F,
        name=info.name,
        margin=F.dual_margin,
        dual_margin=F.margin,
        spectral=info.spectral,
        kernel=info.kernel,
        dual_info=DualInfo(F.name, F.spectral, F.kernel),
    )


def _as_jet_map(J0):
    if J0 is None:
        return None
    if isinstance(J0, Jet2):
        return lambda x, _J0=J0: _J0
    return J0


def translate(F, J0):
    """``F + J0``: margin ``m(x, J - J0(x))``; the dual is ``dual(F) - J0``."""
    J0 = _as_jet_map(J0)
    m, md = F.margin, F.dual_margin

    def margin(x, J):
        return m(x, J - J0(x))

    def dual_margin(x, J):
        return md(x, J + J0(x))

    def _shift_kernel(k, sign):
        if k is None:
            return None
        prev = k.offset

        def offset(x, prev=prev):
            j = J0(x) * sign
            return j if prev is None else prev(x) + j
        return replace(k, offset=offset)

    info = F.dual_info or DualInfo(f"dual({F.name})")
    return replace(
        F,
        name=f"{F.name}+J0",
        margin=margin,
        dual_margin=dual_margin,
        reduced=False,
        pure_second_order=False,
        cone=False,
        constant_coefficient=False,
        spectral=None,
        kernel=_shift_kernel(F.kernel, 1.0),
        dual_info=DualInfo(f"{info.name}-J0", None, _shift_kernel(info.kernel, -1.0)),
    )


class SingularMapError(ValueError):
    pass


def _const_or_call(v, x):
    return v(x) if callable(v) else v


class AffineJetMap:
    """Affine automorphism ``(r, p, A) -> (r, g p, h A h^T + L(p)) + J0``.

    Each of ``g``, ``h``, ``L`` and ``J0`` may be a constant or a function of
    the base point ``x``.  ``L`` maps a gradient to a symmetric matrix.
    """

    def __init__(self, n, g=None, h=None, L=None, J0=None):
        self.n = n
        self.g = np.eye(n) if g is None else g
        self.h = np.eye(n) if h is None else h
        self.L = L
        self.J0 = J0
        if not callable(self.g):
            self._check(self.g, "g")
        if not callable(self.h):
            self._check(self.h, "h")

    def _check(self, M, name):
        M = np.asarray(M, dtype=float)
        if np.linalg.cond(M) > 1e12:
            raise SingularMapError(f"{name} is singular")
        return M

    def parts(self, x):
        g = self._check(_const_or_call(self.g, x), "g")
        h = self._check(_const_or_call(self.h, x), "h")
        J0 = _const_or_call(self.J0, x) if self.J0 is not None else Jet2.zero(self.n)
        return g, h, J0

    def _L(self, x, p):
        if self.L is None:
            return np.zeros((self.n, self.n))
        return np.asarray(self.L(x, p) if callable(self.L) else np.tensordot(self.L, p, axes=(0, 0)))

    def linear(self, x, J):
        g, h, _ = self.parts(x)
        return Jet2(J.r, g @ J.p, h @ J.A @ h.T + self._L(x, J.p))

    def __call__(self, x, J):
        return self.linear(x, J) + self.parts(x)[2]

    def inverse(self, x, J):
        g, h, J0 = self.parts(x)
        K = J - J0
        p = np.linalg.solve(g, K.p)
        B = K.A - self._L(x, p)
        hinv = np.linalg.inv(h)
        return Jet2(K.r, p, hinv @ B @ hinv.T)


def affine_transform(F, phi):
    """Pull back ``F`` along ``phi``: margin ``m(x, phi_x(J))``.

    The dual margin evaluates the dual of ``F`` at ``phi`` with the offset
    negated, i.e. at ``phi_lin(J) - J0``.
    """
    m, md = F.margin, F.dual_margin

    def margin(x, J):
        return m(x, phi(x, J))

    def dual_margin(x, J):
        return md(x, phi.linear(x, J) - phi.parts(x)[2])

    info = F.dual_info or DualInfo(f"dual({F.name})")
    return replace(
        F,
        name=f"phi*{F.name}",
        margin=margin,
        dual_margin=dual_margin,
        cone=False,
        constant_coefficient=False,
        lipschitz_bound=None,
        spectral=None,
        kernel=None,
        dual_info=DualInfo(f"phi*{info.name}"),
    )


def intersection(F1, F2):
    m1, m2, d1, d2 = F1.margin, F2.margin, F1.dual_margin, F2.dual_margin
    L = None
    if F1.lipschitz_bound is not None and F2.lipschitz_bound is not None:
        # min(m1, m2) is max(L1, L2)-Lipschitz; the smaller bound would over-certify
        L = max(F1.lipschitz_bound, F2.lipschitz_bound)
    return Subequation(
        name=f"intersection({F1.name},{F2.name})",
        dim=F1.dim,
        margin=lambda x, J: min(m1(x, J), m2(x, J)),
        dual_margin=lambda x, J: max(d1(x, J), d2(x, J)),
        reduced=F1.reduced and F2.reduced,
        pure_second_order=F1.pure_second_order and F2.pure_second_order,
        cone=F1.cone and F2.cone,
        constant_coefficient=F1.constant_coefficient and F2.constant_coefficient,
        lipschitz_bound=L,
        approximate=F1.approximate or F2.approximate,
        dual_info=DualInfo(f"union(dual({F1.name}),dual({F2.name}))"),
        formula="min(m1, m2) >= 0",
    )


# ---------------------------------------------------------- monotone sets

@dataclass(frozen=True, eq=False)
class MonotoneSet:
    name: str
    dim: int
    margin: Margin
    convex_cone: bool = True
    sampler: Optional[Callable] = None

    def sample(self, rng):
        if self.sampler is not None:
            return self.sampler(rng)
        for _ in range(10000):
            J = random_jet(rng, self.dim)
            if self.margin(None, J) >= 0:
                return J
        raise RuntimeError(f"could not sample from {self.name}")


def psd_cone(n):
    """The pure second-order positive cone ``{(0, 0, P) : P >= 0}``."""
    def margin(x, J):
        if abs(J.r) > 0 or np.any(J.p != 0):
            return -max(abs(J.r), float(np.max(np.abs(J.p))))
        return float(np.linalg.eigvalsh(J.A)[0])
    return MonotoneSet("P", n, margin, True,
                       sampler=lambda rng: Jet2.hessian(random_psd(rng, n)))


def monotone_from_subequation(F, sampler=None):
    return MonotoneSet(F.name, F.dim, F.margin, F.cone, sampler)


@dataclass
class MonotonicityReport:
    min_margin: float
    passed: bool
    samples: int
    witness: Optional[tuple] = None


def sample_boundary_jet(F, rng, x=None, scale=1.0):
    """A jet of ``F`` near its boundary.

    Pushes a random jet along the direction ``(-1, 0, I)``, which never
    decreases any margin, and bisects to the crossing.  Falls back to
    rejection sampling when the margin is flat along that direction.
    """
    n = F.dim
    J = random_jet(rng, n, scale)
    D = Jet2(-1.0, np.zeros(n), np.eye(n))

    def f(t):
        return F.margin(x, J + D * t)

    lo, hi = -1.0, 1.0
    for _ in range(40):
        if f(lo) < 0:
            break
        lo *= 2
    for _ in range(40):
        if f(hi) >= 0:
            break
        hi *= 2
    if f(lo) < 0 <= f(hi):
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if f(mid) >= 0:
                hi = mid
            else:
                lo = mid
        return J + D * hi
    for _ in range(100000):
        K = random_jet(rng, n, scale)
        if F.margin(x, K) >= 0:
            return K
    raise RuntimeError(f"could not sample a point of {F.name}")


def monotonicity_check(F, M, samples=1000, seed=0, x=None, tol=1e-8):
    """Sample ``J`` on the boundary of ``F`` and ``J_M`` in ``M``; check ``J + J_M`` in ``F``."""
    rng = np.random.default_rng(seed)
    worst = np.inf
    witness = None
    for _ in range(samples):
        J = sample_boundary_jet(F, rng, x)
        JM = M.sample(rng)
        v = F.margin(x, J + JM)
        if v < worst:
            worst, witness = v, (J, JM)
    return MonotonicityReport(float(worst), bool(worst >= -tol), samples, witness)


# --------------------------------------------------------------- strictness

class MissingLipschitzBound(ValueError):
    pass


@dataclass
class CStrictResult:
    holds: bool
    certified: bool
    witness: Optional[Jet2] = None

    def __bool__(self):
        return self.holds


def _random_direction(rng, n):
    J = random_jet(rng, n)
    return J * (1.0 / J.norm())


def c_strict_contains(F, x, J, c, seed=0, directions=64):
    """Is the fibre ball ``B(J, c)`` inside ``F_x``?

    ``margin / L >= c`` is a certificate.  Otherwise a probe of ``directions``
    points on the sphere of radius ``c`` looks for an explicit outside point.
    """
    L = F.lipschitz_bound
    if L is None:
        raise MissingLipschitzBound(f"{F.name} carries no Lipschitz bound")
    m = F.margin(x, J)
    if m / L >= c:
        return CStrictResult(True, True)
    rng = np.random.default_rng(seed)
    for _ in range(directions):
        K = J + _random_direction(rng, J.n) * c
        if F.margin(x, K) < 0:
            return CStrictResult(False, False, K)
    return CStrictResult(False, False, None)


# ---------------------------------------------------- asymptotic interior

@dataclass
class AsymptoticVerdict:
    kind: str  # "Yes", "No" or "Undetermined"
    t0: Optional[float] = None
    witness: Optional[Jet2] = None

    @property
    def yes(self):
        return self.kind == "Yes"

    def __repr__(self):
        return f"Yes({self.t0:g})" if self.yes else self.kind


def asymptotic_interior_contains(F, lam, J_red, x=None, seed=0, neighbors=128,
                                 t_ladder=T_LADDER, eta=None):
    """Decide whether the reduced jet ``J_red`` lies in the asymptotic interior of ``F_lam``.

    ``F_lam`` freezes the value slot at ``lam``.  Cones reduce to an exact
    sign test of the margin.  Otherwise every rung ``t`` of the ladder is
    tested on ``neighbors`` random points of a fibre ball of radius ``eta``
    around ``J_red``; the verdict is ``Yes(t0)`` for the smallest rung from
    which every higher rung passes.
    """
    J_red = J_red.reduced()

    def m(K):
        return F.margin(x, K.with_r(lam))

    if F.cone and F.reduced:
        if m(J_red) > 0:
            return AsymptoticVerdict("Yes", 1.0)
        return AsymptoticVerdict("No", witness=J_red)

    if eta is None:
        eta = 1e-2 * (1.0 + J_red.norm())
    rng = np.random.default_rng(seed)
    pts = [J_red]
    for _ in range(neighbors):
        d = _random_direction(rng, J_red.n).reduced()
        d = d * (1.0 / max(d.norm(), 1e-300))
        pts.append(J_red + d * (eta * rng.uniform() ** (1.0 / 8)))
    ok = []
    witness = None
    for t in t_ladder:
        passed = True
        for K in pts:
            if m(K * t) < 0:
                passed = False
                witness = K
                break
        ok.append(passed)
    if ok[-1]:
        k = len(ok) - 1
        while k > 0 and ok[k - 1]:
            k -= 1
        return AsymptoticVerdict("Yes", t_ladder[k])
    if len(ok) >= 2 and not ok[-2]:
        return AsymptoticVerdict("No", witness=witness)
    return AsymptoticVerdict("Undetermined", witness=witness)


# ------------------------------------------------------ eigenvalue graphs

class UnboundedMarginError(ValueError):
    pass


def eigen_boundary_graph(F, mu, tol=1e-10):
    """``f(mu) = inf{t : diag(mu) + tI in F}`` for a pure-eigenvalue entry."""
    mu = np.asarray(mu, dtype=float)
    if not F.pure_second_order:
        raise ValueError(f"{F.name} is not pure second order")
    n = mu.shape[0]

    def g(t):
        return F.margin(None, Jet2(0.0, np.zeros(n), np.diag(mu + t)))

    lo, hi = -1.0, 1.0
    for _ in range(60):
        if g(lo) < 0:
            break
        lo *= 2.0
    else:
        raise UnboundedMarginError(f"{F.name}: margin nonnegative along the whole -I ray")
    for _ in range(60):
        if g(hi) >= 0:
            break
        hi *= 2.0
    else:
        raise UnboundedMarginError(f"{F.name}: margin negative along the whole +I ray")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return hi


def t_probe(F, x, J, radius=1e-3, seed=0, tries=64):
    """Heuristic check of condition (T) at a boundary jet: is there an interior point nearby?"""
    rng = np.random.default_rng(seed)
    for _ in range(tries):
        K = J + _random_direction(rng, J.n) * radius
        if F.margin(x, K) > 0:
            return True
    return False


# ------------------------------------------------------------ invariant suite

@dataclass
class InvariantSuiteReport:
    samples: int
    double_dual_defect: float
    dual_sign_mismatches: int
    dual_sign_tested: int
    positivity_min: float
    negativity_min: float
    dual_positivity_min: float
    dual_negativity_min: float
    passed: bool

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def invariant_suite(F, samples=1000, seed=0, x=None, tol=1e-9, scale=1.0):
    """Sampled duality and monotonicity checks for ``F`` and its dual.

    * ``dual(dual(F))`` reproduces the margin of ``F``;
    * away from both boundaries, ``J`` lies in the dual iff ``-J`` is not in
      the interior of ``F``;
    * (P) and (N) for both margins: adding a psd matrix or lowering the value
      never decreases the margin (the ``*_min`` fields are the worst changes).
    """
    rng = np.random.default_rng(seed)
    n = F.dim
    x = np.zeros(n) if x is None else np.asarray(x, dtype=float)
    DD = dual(dual(F))
    Fd = dual(F)
    dd = 0.0
    mism = tested = 0
    pos = neg = dpos = dneg = math.inf
    for _ in range(samples):
        J = random_jet(rng, n, scale)
        m = F.margin(x, J)
        dd = max(dd, abs(DD.margin(x, J) - m))
        mneg = F.margin(x, -J)
        md = Fd.margin(x, J)
        if abs(mneg) > tol and abs(md) > tol:
            tested += 1
            if (md >= 0) != (not mneg > 0):
                mism += 1
        P = Jet2(0.0, np.zeros(n), random_psd(rng, n, scale))
        N = Jet2(-abs(rng.standard_normal()) * scale, np.zeros(n), np.zeros((n, n)))
        pos = min(pos, F.margin(x, J + P) - m)
        neg = min(neg, F.margin(x, J + N) - m)
        dpos = min(dpos, Fd.margin(x, J + P) - md)
        dneg = min(dneg, Fd.margin(x, J + N) - md)
    ok = (dd == 0.0 and mism == 0 and min(pos, neg, dpos, dneg) >= -tol)
    return InvariantSuiteReport(samples, float(dd), mism, tested, float(pos), float(neg),
                                float(dpos), float(dneg), bool(ok))
