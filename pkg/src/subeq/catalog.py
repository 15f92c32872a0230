"""Named subequations with hand-derived duals.

Entries are addressed by ``name(:key=value(,key=value)*)?`` strings, e.g.
``Pq:n=3,q=2``.  The canonical form lists keys alphabetically.
"""

from __future__ import annotations

import math
import re
from functools import partial

import numpy as np

from .jets import (hermitian_part_complex, hermitian_part_quaternionic,
                   garding_roots_sigma_k, Jet2)
from .planes import associative_min_trace, lag_min_trace
from .subequations import (DualInfo, KernelSpec, MonotoneSet, Subequation,
                           intersection)

# kernel codes understood by the compiled sweep (see _ckernel.pyx)
K_TRACE = 0
K_EIG_Q = 1
K_LOW_SUM = 2
K_HIGH_SUM = 3
K_ARCTAN = 4
K_MINIMAL = 5
K_PLAP = 6
K_INF_LAP = 7
K_SHIFT_LOW = 8
K_SHIFT_HIGH = 9
K_MA_EXP = 10
K_MA_EXP_DUAL = 11


class CatalogError(ValueError):
    pass



def _exp(t):
    # saturates like C exp, so bracketing probes far out stay finite-signed
    return math.exp(t) if t < 709.0 else math.inf

def _eig(A):
    return np.linalg.eigvalsh(A)


# ----------------------------------------------------------- spectral entries

def _spectral_entry(name, n, f, fdual, dual_name, *, cone, L, kernel=None,
                    dual_kernel=None, formula="", note="O_n"):
    return Subequation(
        name=name, dim=n,
        margin=lambda x, J: f(_eig(J.A)),
        dual_margin=lambda x, J: fdual(_eig(J.A)),
        reduced=True, pure_second_order=True, cone=cone,
        lipschitz_bound=L, invariance_note=note,
        spectral=f, kernel=kernel,
        dual_info=DualInfo(dual_name, fdual, dual_kernel),
        formula=formula,
    )


def laplace(n=2):
    return _spectral_entry(
        f"laplace:n={n}", n, np.sum, np.sum, f"laplace:n={n}", cone=True,
        L=math.sqrt(n), kernel=KernelSpec(K_TRACE), dual_kernel=KernelSpec(K_TRACE),
        formula="trace(A) >= 0")


def Pq(n, q):
    if not 1 <= q <= n:
        raise CatalogError(f"Pq needs 1 <= q <= n, got q={q}, n={n}")
    qd = n - q + 1
    return _spectral_entry(
        f"Pq:n={n},q={q}", n, lambda lam: lam[q - 1], lambda lam: lam[qd - 1],
        f"Pq:n={n},q={qd}", cone=True, L=1.0,
        kernel=KernelSpec(K_EIG_Q, (q,)), dual_kernel=KernelSpec(K_EIG_Q, (qd,)),
        formula="lambda_q(A) >= 0")


def grassmann_p(n, p):
    if not 1 <= p <= n:
        raise CatalogError(f"grassmann_p needs 1 <= p <= n, got p={p}, n={n}")
    return _spectral_entry(
        f"grassmann_p:n={n},p={p}", n, lambda lam: float(np.sum(lam[:p])),
        lambda lam: float(np.sum(lam[n - p:])), f"dual(grassmann_p:n={n},p={p})",
        cone=True, L=math.sqrt(p),
        kernel=KernelSpec(K_LOW_SUM, (p,)), dual_kernel=KernelSpec(K_HIGH_SUM, (p,)),
        formula="lambda_1 + ... + lambda_p >= 0")


def special_lagrangian(n, c):
    if not -n < c < n:
        raise CatalogError(f"special_lagrangian needs -n < c < n, got c={c}")

    def f(lam, c=c):
        return float(np.sum(np.arctan(lam))) - c * math.pi / 2

    return _spectral_entry(
        f"special_lagrangian:c={_fmt(c)},n={n}", n, f, partial(f, c=-c),
        f"special_lagrangian:c={_fmt(-c)},n={n}", cone=False, L=math.sqrt(n),
        kernel=KernelSpec(K_ARCTAN, (c,)), dual_kernel=KernelSpec(K_ARCTAN, (-c,)),
        formula="tr arctan A >= c pi / 2")


def sigma_branch(n, k, j):
    if not 1 <= k <= n or not 1 <= j <= k:
        raise CatalogError(f"sigma_branch needs 1 <= j <= k <= n, got n={n}, k={k}, j={j}")
    jd = k - j + 1
    return Subequation(
        name=f"sigma_branch:j={j},k={k},n={n}", dim=n,
        margin=lambda x, J: float(garding_roots_sigma_k(J.A, k)[j - 1]),
        dual_margin=lambda x, J: float(garding_roots_sigma_k(J.A, k)[jd - 1]),
        reduced=True, pure_second_order=True, cone=True, invariance_note="O_n",
        spectral=lambda lam: float(garding_roots_sigma_k(np.diag(lam), k)[j - 1]),
        dual_info=DualInfo(f"sigma_branch:j={jd},k={k},n={n}",
                           lambda lam: float(garding_roots_sigma_k(np.diag(lam), k)[jd - 1])),
        formula="branches of sigma_k = 0",
    )


def Pq_complex(n, q):
    """Branches of the complex Monge-Ampere equation on C^n = R^{2n}."""
    if not 1 <= q <= n:
        raise CatalogError(f"Pq_complex needs 1 <= q <= n, got q={q}, n={n}")
    qd = n - q + 1

    def lam_c(A):
        return _eig(hermitian_part_complex(A))[0::2]

    return Subequation(
        name=f"Pq_complex:n={n},q={q}", dim=2 * n,
        margin=lambda x, J: float(lam_c(J.A)[q - 1]),
        dual_margin=lambda x, J: float(lam_c(J.A)[qd - 1]),
        reduced=True, pure_second_order=True, cone=True, lipschitz_bound=1.0,
        invariance_note="U_n", dual_info=DualInfo(f"Pq_complex:n={n},q={qd}"),
        formula="complex hermitian part",
    )


def Pq_quaternionic(n, q):
    if not 1 <= q <= n:
        raise CatalogError(f"Pq_quaternionic needs 1 <= q <= n, got q={q}, n={n}")
    qd = n - q + 1

    def lam_h(A):
        return _eig(hermitian_part_quaternionic(A))[0::4]

    return Subequation(
        name=f"Pq_quaternionic:n={n},q={q}", dim=4 * n,
        margin=lambda x, J: float(lam_h(J.A)[q - 1]),
        dual_margin=lambda x, J: float(lam_h(J.A)[qd - 1]),
        reduced=True, pure_second_order=True, cone=True, lipschitz_bound=1.0,
        invariance_note="Sp_1 Sp_n", dual_info=DualInfo(f"Pq_quaternionic:n={n},q={qd}"),
        formula="quaternionic hermitian part",
    )


def lag(n, starts=64, seed=0):
    """Lagrangian plurisubharmonicity on C^n; margin is a numerical minimum."""
    return Subequation(
        name=f"lag:n={n}", dim=2 * n,
        margin=lambda x, J: lag_min_trace(J.A, starts=starts, seed=seed).value,
        dual_margin=lambda x, J: -lag_min_trace(-J.A, starts=starts, seed=seed).value,
        reduced=True, pure_second_order=True, cone=True, lipschitz_bound=math.sqrt(n),
        invariance_note="U_n", approximate=True,
        dual_info=DualInfo(f"dual(lag:n={n})"),
        formula="Lagrangian n-planes",
    )


def calibration_associative(samples=10000, seed=0):
    return Subequation(
        name="calibration_associative", dim=7,
        margin=lambda x, J: associative_min_trace(J.A, samples=samples, seed=seed).value,
        dual_margin=lambda x, J: -associative_min_trace(-J.A, samples=samples, seed=seed).value,
        reduced=True, pure_second_order=True, cone=True, lipschitz_bound=math.sqrt(3),
        invariance_note="G_2", approximate=True,
        dual_info=DualInfo("dual(calibration_associative)"),
        formula="associative calibration phi(x, y, z) = <x y, z>",
    )


# ----------------------------------------------------- gradient-dependent

def eikonal(n=2):
    return Subequation(
        name=f"eikonal:n={n}", dim=n,
        margin=lambda x, J: 1.0 - float(np.linalg.norm(J.p)),
        dual_margin=lambda x, J: float(np.linalg.norm(J.p)) - 1.0,
        reduced=True, lipschitz_bound=1.0, invariance_note="O_n",
        dual_info=DualInfo(f"dual(eikonal:n={n})"),
        formula="|Du| <= 1",
    )


def _inf_lap(J):
    pp = float(J.p @ J.p)
    if pp == 0.0:
        return float(_eig(J.A)[-1])
    return float(J.p @ J.A @ J.p) / pp


def inf_laplace(n=2):
    return Subequation(
        name=f"inf_laplace:n={n}", dim=n,
        margin=lambda x, J: _inf_lap(J),
        dual_margin=lambda x, J: _inf_lap(J),
        reduced=True, cone=True, invariance_note="O_n",
        kernel=KernelSpec(K_INF_LAP), dual_info=DualInfo(f"inf_laplace:n={n}", None, KernelSpec(K_INF_LAP)),
        formula="closure of <Ap, p> > 0, self-dual",
    )


def p_laplace(k, n=2):
    if k < 1:
        raise CatalogError("p_laplace needs k >= 1 for positivity")

    def m(x, J):
        pp = float(J.p @ J.p)
        return pp * float(np.trace(J.A)) + (k - 2) * float(J.p @ J.A @ J.p)

    ks = KernelSpec(K_PLAP, (k,))
    return Subequation(
        name=f"p_laplace:k={_fmt(k)},n={n}", dim=n, margin=m, dual_margin=m,
        reduced=True, cone=True, invariance_note="O_n", kernel=ks,
        dual_info=DualInfo(f"p_laplace:k={_fmt(k)},n={n}", None, ks),
        formula="|Du|^2 Lap u + (p - 2) <Hess u Du, Du>",
    )


def minimal_surface(n=2):
    def m(x, J):
        pp = float(J.p @ J.p)
        return (1.0 + pp) * float(np.trace(J.A)) - float(J.p @ J.A @ J.p)

    ks = KernelSpec(K_MINIMAL)
    return Subequation(
        name=f"minimal_surface:n={n}", dim=n, margin=m, dual_margin=m,
        reduced=True, invariance_note="O_n", kernel=ks,
        dual_info=DualInfo(f"minimal_surface:n={n}", None, ks),
        formula="(1 + |Du|^2) Lap u - <Hess u Du, Du>",
    )


def graph_matrix(p, A):
    """``(1/nu) E A E`` whose eigenvalues are the principal curvatures of the graph."""
    nu = math.sqrt(1.0 + float(p @ p))
    E = np.eye(len(p)) - np.outer(p, p) / (nu * (1.0 + nu))
    return E @ A @ E / nu


def graph_curvature(S):
    """Principal curvatures of the graph constrained by a pure-eigenvalue entry ``S``."""
    if not S.pure_second_order:
        raise CatalogError("graph_curvature needs a pure second-order entry")
    sm, sd = S.margin, S.dual_margin
    n = S.dim

    def lift(f):
        return lambda x, J: f(x, Jet2(0.0, np.zeros(n), graph_matrix(J.p, J.A)))

    return Subequation(
        name=f"graph_curvature({S.name})", dim=n,
        margin=lift(sm), dual_margin=lift(sd), reduced=True,
        invariance_note=S.invariance_note,
        dual_info=DualInfo(f"graph_curvature(dual({S.name}))"),
        formula="principal curvatures of the graph lie in S",
    )


def half_root_shift(p):
    """``s(p) = (1/2)|p|^{1/2} (I + P_[p])``, with ``P_[0] = 0``."""
    p = np.asarray(p, dtype=float)
    n = len(p)
    r = float(np.linalg.norm(p))
    if r == 0.0:
        return np.zeros((n, n))
    P = np.outer(p, p) / (r * r)
    return 0.5 * math.sqrt(r) * (np.eye(n) + P)


def root_gradient_shift(sign="-", n=2):
    """``lambda_1(A -+ s(p)) >= 0`` with ``s`` from :func:`half_root_shift`.

    ``sign='-'`` is the primary set.  Its exact dual is the weaker
    ``lambda_n(A + s(p)) >= 0``; the stronger ``lambda_1(A + s(p)) >= 0`` is
    available separately as ``sign='+'``.  Both agree along ``A + s(p) = 0``.
    """
    if sign not in "+-" or len(sign) != 1:
        raise CatalogError("sign must be '+' or '-'")
    s = -1.0 if sign == "-" else 1.0

    def m(x, J):
        return float(_eig(J.A + s * half_root_shift(J.p))[0])

    def md(x, J):
        return float(_eig(J.A - s * half_root_shift(J.p))[-1])

    return Subequation(
        name=f"root_gradient_shift:n={n},sign={sign}", dim=n, margin=m, dual_margin=md,
        reduced=True, invariance_note="O_n",
        kernel=KernelSpec(K_SHIFT_LOW, (s,)),
        dual_info=DualInfo(f"dual(root_gradient_shift:n={n},sign={sign})", None,
                           KernelSpec(K_SHIFT_HIGH, (-s,))),
        formula="A - (1/2)|p|^{1/2}(I + P_[p]) >= 0",
    )


# --------------------------------------------------------- value-dependent

def _det_plus(lam):
    return float(np.prod(np.maximum(lam, 0.0)))


def monge_ampere_exp(n=2):
    """``A >= 0`` and ``det A >= e^r``.

    The determinant is taken over positive parts, which keeps the margin
    monotone in ``A`` without changing the set.
    """
    def m(x, J):
        lam = _eig(J.A)
        return min(float(lam[0]), _det_plus(lam) - _exp(J.r))

    def md(x, J):
        lam = _eig(J.A)
        return max(float(lam[-1]), _exp(-J.r) - _det_plus(-lam))

    return Subequation(
        name=f"monge_ampere_exp:n={n}", dim=n, margin=m, dual_margin=md,
        invariance_note="O_n", kernel=KernelSpec(K_MA_EXP),
        dual_info=DualInfo(f"dual(monge_ampere_exp:n={n})", None, KernelSpec(K_MA_EXP_DUAL)),
        formula="det A - e^r >= 0 on A >= 0",
    )


MONOTONE_FUNCTIONS = {"exp": _exp, "one": lambda r: 1.0}


def calabi_yau(n, f=1.0, Fmono="exp"):
    """``Hess_C u + I >= 0`` and ``det_C(Hess_C u + I) >= F(u) f(x)`` on C^n."""
    Fm = MONOTONE_FUNCTIONS[Fmono] if isinstance(Fmono, str) else Fmono
    fx = f if callable(f) else (lambda x, c=float(f): c)

    def lam_c(A):
        return _eig(hermitian_part_complex(A))[0::2]

    def m(x, J):
        mu = lam_c(J.A) + 1.0
        return min(float(mu[0]), _det_plus(mu) - Fm(J.r) * fx(x))

    def md(x, J):
        mu = lam_c(J.A)
        return max(float(mu[-1]) - 1.0, Fm(-J.r) * fx(x) - _det_plus(1.0 - mu))

    fname = _fmt(f) if not callable(f) else "f(x)"
    gname = Fmono if isinstance(Fmono, str) else "F"
    return Subequation(
        name=f"calabi_yau:F={gname},f={fname},n={n}", dim=2 * n, margin=m, dual_margin=md,
        constant_coefficient=not callable(f), invariance_note="U_n",
        dual_info=DualInfo(f"dual(calabi_yau:F={gname},f={fname},n={n})"),
        formula="det_C(Hess_C u + I) >= F(u) f(x)",
    )


# ------------------------------------------------------------ circular cones

def _jet_inner(J, K):
    return J.r * K.r + float(J.p @ K.p) + float(np.sum(J.A * K.A))


def circular_cone(Jc, gamma):
    """Convex circular cone about ``Jc`` with cross-section radius ``1/gamma``.

    The margin is ``t sin(theta) - |X_perp| cos(theta)`` with ``t`` the axial
    coordinate and ``tan(theta) = 1/(gamma |Jc|)``; it is 1-Lipschitz.  This
    is a monotone set, not a subequation: positivity fails in general.
    """
    norm = Jc.norm()
    if norm == 0 or gamma <= 0:
        raise CatalogError("circular_cone needs a nonzero axis and gamma > 0")
    theta = math.atan2(1.0, gamma * norm)
    st, ct = math.sin(theta), math.cos(theta)

    def m(x, X):
        t = _jet_inner(X, Jc) / norm
        perp = X - Jc * (t / norm)
        return t * st - perp.norm() * ct

    return Subequation(
        name=f"circular_cone(gamma={_fmt(gamma)})", dim=Jc.n, margin=m,
        dual_margin=lambda x, X: -m(x, -X), cone=True, lipschitz_bound=1.0,
        is_subequation=False,
        formula="circular cone C_gamma(J)",
    )


def circular_cone_monotone(Jc, gamma):
    F = circular_cone(Jc, gamma)
    return MonotoneSet(F.name, F.dim, F.margin, True)


# ------------------------------------------------------------- name grammar

_NAME_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)(?::(.*))?$")
_KV_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)=([^,=]+)$")


def parse_spec(text):
    """Split ``name:key=value,...`` into ``(name, {key: value})``."""
    m = _NAME_RE.match(text.strip())
    if not m:
        raise CatalogError(f"bad subequation spec {text!r}")
    name, rest = m.group(1), m.group(2)
    params = {}
    if rest is not None:
        if rest == "":
            raise CatalogError(f"empty parameter list in {text!r}")
        for item in rest.split(","):
            kv = _KV_RE.match(item.strip())
            if not kv:
                raise CatalogError(f"bad parameter {item!r} in {text!r}")
            if kv.group(1) in params:
                raise CatalogError(f"duplicate key {kv.group(1)!r}")
            params[kv.group(1)] = kv.group(2).strip()
    return name, params


def canonical_spec(name, params):
    if not params:
        return name
    return name + ":" + ",".join(f"{k}={params[k]}" for k in sorted(params))


def _fmt(v):
    if isinstance(v, str):
        return v
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


def _int(v):
    f = float(v)
    if not f.is_integer():
        raise CatalogError(f"expected an integer, got {v!r}")
    return int(f)


_BUILDERS = {
    "laplace": (laplace, {"n": _int}, "trace(A) >= 0"),
    "Pq": (Pq, {"n": _int, "q": _int}, "lambda_q(A) >= 0"),
    "Pq_complex": (Pq_complex, {"n": _int, "q": _int}, "complex branches"),
    "Pq_quaternionic": (Pq_quaternionic, {"n": _int, "q": _int}, "quaternionic branches"),
    "sigma_branch": (sigma_branch, {"n": _int, "k": _int, "j": _int}, "sigma_k branches"),
    "special_lagrangian": (special_lagrangian, {"n": _int, "c": float}, "tr arctan A"),
    "grassmann_p": (grassmann_p, {"n": _int, "p": _int}, "p-plurisubharmonic"),
    "lag": (lag, {"n": _int, "starts": _int, "seed": _int}, "Lagrangian planes"),
    "calibration_associative": (calibration_associative, {"samples": _int, "seed": _int},
                                "associative calibration"),
    "eikonal": (eikonal, {"n": _int}, "|Du| <= 1"),
    "inf_laplace": (inf_laplace, {"n": _int}, "infinity Laplacian"),
    "p_laplace": (p_laplace, {"k": float, "n": _int}, "p-Laplacian"),
    "minimal_surface": (minimal_surface, {"n": _int}, "minimal surface equation"),
    "root_gradient_shift": (root_gradient_shift, {"sign": str, "n": _int}, "existence without uniqueness"),
    "monge_ampere_exp": (monge_ampere_exp, {"n": _int}, "det A >= e^r"),
    "calabi_yau": (calabi_yau, {"n": _int, "f": float, "F": str}, "Calabi-Yau type, det_C >= F(u) f"),
}


def catalog_names():
    return sorted(list(_BUILDERS) + ["graph_curvature"])


def catalog_listing():
    """``[(name, parameter keys, reference)]`` for every constructible entry."""
    rows = [(k, sorted(v[1]), v[2]) for k, v in _BUILDERS.items()]
    rows.append(("graph_curvature", ["S", "...keys of S"], "graph curvatures"))
    return sorted(rows)


def catalog_construct(name, params=None):
    """Build a catalog entry from its name and a parameter mapping.

    ``catalog_construct("Pq:n=3,q=2")`` parses the string form.
    """
    if params is None and ":" in name:
        name, params = parse_spec(name)
    params = dict(params or {})
    if name == "graph_curvature":
        inner = params.pop("S", None)
        if inner is None:
            raise CatalogError("graph_curvature needs S=<entry name>")
        return graph_curvature(catalog_construct(inner, params))
    if name not in _BUILDERS:
        raise CatalogError(f"unknown subequation {name!r}")
    fn, types, _ = _BUILDERS[name]
    kwargs = {}
    for k, v in params.items():
        if k not in types:
            raise CatalogError(f"{name} has no parameter {k!r}")
        try:
            kwargs["Fmono" if (name == "calabi_yau" and k == "F") else k] = types[k](v)
        except (TypeError, ValueError) as exc:
            raise CatalogError(f"bad value for {k!r}: {v!r}") from exc
    try:
        return fn(**kwargs)
    except TypeError as exc:
        raise CatalogError(f"{name}: {exc}") from exc


__all__ = [
    "CatalogError", "catalog_construct", "catalog_names", "catalog_listing",
    "parse_spec", "canonical_spec", "laplace", "Pq", "Pq_complex", "Pq_quaternionic",
    "sigma_branch", "special_lagrangian", "grassmann_p", "lag", "calibration_associative",
    "eikonal", "inf_laplace", "p_laplace", "minimal_surface", "graph_curvature",
    "graph_matrix", "root_gradient_shift", "half_root_shift", "monge_ampere_exp", "calabi_yau",
    "circular_cone", "circular_cone_monotone", "intersection",
]
