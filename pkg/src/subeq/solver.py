"""Perron-style Dirichlet solver on grids, subharmonicity and maximum-principle checks."""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import _pykernel, kernels
from .geometry import framed_jet
from .grid import GridFunction, coordinate_jet
from .jets import Jet2
from .subequations import dual


class FlatUpdate(RuntimeError):
    """The margin does not change sign as the center value sweeps ``[-cap, cap]``."""


class ValueCapExceeded(RuntimeError):
    pass


class NonConvergence(RuntimeError):
    def __init__(self, msg, u=None, report=None):
        super().__init__(msg)
        self.u = u
        self.report = report


@dataclass
class SolveConfig:
    tol_iter: float = 1e-10
    tol_residual: float = 1e-8
    max_sweeps: int = 100_000
    cap: float = 1e8
    parallel: bool = False
    threads: int = 0
    backend: str = "auto"      # "auto", "compiled", "python" or "generic"
    debug: bool = False

    def __post_init__(self):
        if self.tol_iter <= 0 or self.tol_residual <= 0 or self.cap <= 0:
            raise ValueError("tolerances and cap must be positive")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")


@dataclass
class SolveReport:
    sweeps: int
    max_update: float
    max_margin_residual: float
    witness: Optional[list]
    verdicts: dict = field(default_factory=dict)
    wall_time: float = 0.0
    backend: str = ""

    def to_json(self, **kw):
        return json.dumps(asdict(self), **kw)


# -------------------------------------------------------------- assembly

@dataclass
class _Problem:
    nodes: np.ndarray
    nbr: np.ndarray
    hs: np.ndarray
    gam: np.ndarray
    frm: np.ndarray
    off: np.ndarray
    X: np.ndarray
    code: int = -1
    prm: Optional[np.ndarray] = None
    margin: Optional[object] = None


def _empty():
    return np.zeros((0, 0))


def _assemble(F, metric, grid, backend):
    nodes = grid.interior_nodes()
    nbr = grid.neighbor_table(nodes)
    X = grid.coords().reshape(-1, grid.n)[nodes]
    n = grid.n
    if metric is None or metric.is_flat():
        gam = frm = _empty()
    else:
        from .geometry import christoffel
        gam = np.ascontiguousarray([christoffel(metric, x).G.reshape(-1) for x in X])
        frm = np.ascontiguousarray([metric.frame(x).reshape(-1) for x in X])
    use_kernel = F.kernel is not None and backend != "generic"
    off = _empty()
    if use_kernel and F.kernel.offset is not None:
        off = np.ascontiguousarray([F.kernel.offset(x).as_vector() for x in X])
    prob = _Problem(nodes, nbr, np.ascontiguousarray(grid.h, dtype=float), gam, frm, off, X)
    if use_kernel:
        prob.code = F.kernel.code
        prm = list(F.kernel.params) + [0.0]
        prob.prm = np.ascontiguousarray(prm, dtype=float)
    else:
        margin = F.margin

        def m(k, r, p, A):
            return margin(X[k], Jet2(r, p, 0.5 * (A + A.T)))
        prob.margin = m
    return prob


def _kernel_module(cfg, prob):
    if prob.margin is not None:
        return None
    if cfg.backend in ("compiled", "python"):
        return kernels.get(cfg.backend)
    return kernels._impl


def _sweep(mod, u, prob, dlast, cfg, check_flat, xtol):
    if mod is None:
        return _pykernel.sweep_callable(u, prob.nodes, prob.nbr, prob.hs, prob.margin, prob.gam,
                                        prob.frm, prob.off, dlast, cfg.cap, xtol, check_flat,
                                        cfg.parallel)
    return mod.sweep(u, prob.nodes, prob.nbr, prob.hs, prob.code, prob.prm, prob.gam, prob.frm,
                     prob.off, dlast, cfg.cap, xtol, check_flat, cfg.parallel, cfg.threads)


def _residuals(mod, u, prob):
    if mod is None:
        return _pykernel.residuals_callable(u, prob.nodes, prob.nbr, prob.hs, prob.margin,
                                            prob.gam, prob.frm, prob.off)
    return mod.residuals(u, prob.nodes, prob.nbr, prob.hs, prob.code, prob.prm, prob.gam,
                         prob.frm, prob.off)


def _monotone_probe(u, prob, mod, samples=8):
    # debug aid: margin must be nonincreasing in the center value at every node
    for k in range(len(prob.nodes)):
        if mod is None:
            fk = _pykernel._jet_fn(prob.margin, u, k, prob.nbr, prob.hs, prob.gam, prob.frm, prob.off)
        else:
            fk = _pykernel._jet_fn(lambda kk, r, p, A: _pykernel.margin_code(prob.code, prob.prm, r, p, A),
                                   u, k, prob.nbr, prob.hs, prob.gam, prob.frm, prob.off)
        c = u[prob.nodes[k]]
        ts = c + np.linspace(-1.0, 1.0, samples)
        ms = [fk(t) for t in ts]
        if any(b > a + 1e-9 * (1 + abs(a)) for a, b in zip(ms, ms[1:])):
            raise AssertionError(f"margin increases with the center value at node {k}")


# ---------------------------------------------------------------- solving

def initial_guess(phi):
    """Boundary data on boundary nodes, ``min(phi) - 1`` elsewhere."""
    g = phi.grid
    vals = np.array(phi.values, dtype=float)
    low = float(np.min(vals[g.boundary])) - 1.0 if g.boundary.any() else -1.0
    vals[g.interior] = low
    return vals


def perron_solve(F, metric, grid, phi, cfg=None, u0=None):
    """Nonlinear Gauss-Seidel for the largest nodal values with nonnegative margin.

    Every interior update holds the neighbours fixed and finds the largest
    center value whose discrete jet lies in ``F``.  Sweeps stop once the
    largest update is at most ``tol_iter`` and every interior margin is
    within ``tol_residual`` of zero.

    Returns ``(GridFunction, SolveReport)``.  Raises ``FlatUpdate`` when some
    nodal margin does not change sign (e.g. the eikonal equation),
    ``ValueCapExceeded`` when an update leaves ``[-cap, cap]`` and
    ``NonConvergence`` (carrying the partial result) after ``max_sweeps``.
    """
    cfg = cfg or SolveConfig()
    t_start = time.perf_counter()
    if phi.grid is not grid:
        phi = GridFunction(grid, phi.values)
    u = initial_guess(phi).reshape(-1) if u0 is None else np.array(u0.values, dtype=float).reshape(-1)
    u[grid.boundary.reshape(-1)] = phi.flat[grid.boundary.reshape(-1)]
    u = np.ascontiguousarray(u)
    prob = _assemble(F, metric, grid, cfg.backend)
    mod = _kernel_module(cfg, prob)
    backend = "generic" if mod is None else ("compiled" if mod is not _pykernel else "python")
    dlast = np.ones(len(prob.nodes))
    xtol = 1e-3 * cfg.tol_iter
    sweeps, mu, res = 0, math.inf, None
    converged = False
    if len(prob.nodes) == 0:
        converged, mu, res = True, 0.0, np.zeros(0)
    while not converged and sweeps < cfg.max_sweeps:
        mu, status, k = _sweep(mod, u, prob, dlast, cfg, sweeps == 0, xtol)
        sweeps += 1
        if status == _pykernel.FLAT:
            raise FlatUpdate(f"{F.name}: margin does not cross zero at node {prob.X[k].tolist()}")
        if status == _pykernel.OVERFLOW:
            raise ValueCapExceeded(f"update left [-{cfg.cap:g}, {cfg.cap:g}] at node {prob.X[k].tolist()}")
        if cfg.debug:
            _monotone_probe(u, prob, mod)
        if mu <= cfg.tol_iter:
            res = _residuals(mod, u, prob)
            converged = bool(np.max(np.abs(res), initial=0.0) <= cfg.tol_residual)
    if res is None:
        res = _residuals(mod, u, prob)
    worst = int(np.argmax(np.abs(res))) if len(res) else -1
    report = SolveReport(
        sweeps=sweeps,
        max_update=float(mu),
        max_margin_residual=float(np.max(np.abs(res), initial=0.0)),
        witness=prob.X[worst].tolist() if worst >= 0 else None,
        verdicts={"converged": converged, "residual_ok": bool(np.max(np.abs(res), initial=0.0) <= cfg.tol_residual)},
        wall_time=time.perf_counter() - t_start,
        backend=backend,
    )
    out = GridFunction(grid, u.reshape(grid.counts))
    if not converged:
        raise NonConvergence(f"no convergence after {sweeps} sweeps", out, report)
    return out, report


# ------------------------------------------------------------- checkers

@dataclass
class SubharmonicReport:
    min_margin: float
    witness: Optional[list]
    passed: bool
    nodes: int


def node_margins(u, F, metric, backend="auto"):
    """Margin of the discrete jet at every interior node (lexicographic order)."""
    grid = u.grid
    prob = _assemble(F, metric, grid, "generic" if backend == "generic" else "auto")
    mod = _kernel_module(SolveConfig(backend=backend if backend != "generic" else "auto"), prob)
    return _residuals(mod, np.ascontiguousarray(u.flat, dtype=float), prob), prob.X


def f_subharmonic_test(u, F, metric, tol=1e-8, mask=None, backend="auto"):
    """Does the discrete jet of ``u`` lie in ``F`` at every interior node?

    ``mask`` (boolean array on the grid) restricts the test to a subset of the
    interior nodes.
    """
    m, X = node_margins(u, F, metric, backend)
    if mask is not None:
        keep = np.asarray(mask).reshape(-1)[u.grid.interior_nodes()]
        m, X = m[keep], X[keep]
    if len(m) == 0:
        return SubharmonicReport(math.inf, None, True, 0)
    k = int(np.argmin(m))
    return SubharmonicReport(float(m[k]), X[k].tolist(), bool(m[k] >= -tol), len(m))


@dataclass
class ZMPResult:
    status: str                 # "pass", "violation" or "not_applicable"
    magnitude: float            # max of w over K
    witness: Optional[list] = None
    boundary_max: float = 0.0

    @property
    def passed(self):
        return self.status == "pass"


def zmp_check(w, interior=None, boundary=None, points=None, tol=1e-9):
    """Zero maximum principle on ``K = interior + boundary``.

    With ``w <= 0`` on the boundary, reports a violation when ``w`` exceeds
    ``tol`` somewhere inside.  If the boundary hypothesis fails the result is
    ``not_applicable``.
    """
    if isinstance(w, GridFunction):
        g = w.grid
        interior = g.interior if interior is None else interior
        boundary = g.boundary if boundary is None else boundary
        points = g.coords().reshape(-1, g.n) if points is None else points
        w = w.values
    w = np.asarray(w, dtype=float).reshape(-1)
    interior = np.asarray(interior, dtype=bool).reshape(-1)
    boundary = np.asarray(boundary, dtype=bool).reshape(-1)
    bmax = float(np.max(w[boundary], initial=-math.inf))
    K = interior | boundary
    idx = np.flatnonzero(K)
    k = idx[int(np.argmax(w[idx]))]
    mag = float(w[k])
    wit = points[k].tolist() if points is not None else int(k)
    if bmax > tol:
        return ZMPResult("not_applicable", mag, wit, bmax)
    imax = float(np.max(w[interior], initial=-math.inf))
    return ZMPResult("violation" if imax > tol else "pass", mag, wit, bmax)


@dataclass
class ComparisonReport:
    u_subharmonic: SubharmonicReport
    v_dual_subharmonic: SubharmonicReport
    zmp: ZMPResult

    @property
    def verdicts(self):
        return {"u_in_F": self.u_subharmonic.passed,
                "v_in_dual": self.v_dual_subharmonic.passed,
                "zmp": self.zmp.status}


def comparison_check(u, v, F, metric, tol=1e-8):
    """``u`` F-subharmonic, ``v`` dual-subharmonic, then the ZMP for ``u + v``."""
    ru = f_subharmonic_test(u, F, metric, tol)
    rv = f_subharmonic_test(v, dual(F), metric, tol)
    return ComparisonReport(ru, rv, zmp_check(u + v))


# ------------------------------------------------------------ sums probe

@dataclass
class SumsRecord:
    eps: float
    x: list
    y: list
    M: float
    p: list
    penalty: float


@dataclass
class SumsProbeResult:
    status: str                 # "ok" or "not_applicable"
    M0: float
    records: list
    monotone: bool = True
    penalty_trend: bool = True

    def to_dict(self):
        return {"status": self.status, "M0": self.M0, "monotone": self.monotone,
                "penalty_trend": self.penalty_trend,
                "records": [asdict(r) for r in self.records]}


MAX_PAIRS = 10 ** 8


def sums_probe_points(P, uv, vv, boundary, eps_ladder=(1e-1, 1e-2, 1e-3), Q=None, h=None, tol=1e-9):
    """Maximise ``u(x) + v(y) - |x - y|^2 / (2 eps)`` over point pairs.

    ``P`` holds the points of ``K`` (rows), ``uv`` and ``vv`` the values,
    ``boundary`` flags the points of the boundary of K.  Only meaningful when
    ``u + v`` violates the zero maximum principle on K.
    """
    P = np.asarray(P, dtype=float)
    Q = P if Q is None else np.asarray(Q, dtype=float)
    uv, vv = np.asarray(uv, dtype=float), np.asarray(vv, dtype=float)
    if len(P) * len(Q) > MAX_PAIRS:
        raise ValueError(f"{len(P) * len(Q)} pairs exceed the desk-scale limit {MAX_PAIRS}")
    diag = uv + vv if Q is P else None
    if diag is None:
        raise ValueError("u and v must live on the same point set")
    boundary = np.asarray(boundary, dtype=bool)
    M0 = float(np.max(diag))
    if not (np.max(diag[boundary], initial=-math.inf) <= tol and M0 > tol):
        return SumsProbeResult("not_applicable", M0, [])
    recs = []
    sq = np.sum(P * P, axis=1)
    for eps in sorted(eps_ladder, reverse=True):
        best, bi, bj = -math.inf, 0, 0
        for a in range(0, len(P), 2048):
            D = sq[a:a + 2048, None] + sq[None, :] - 2.0 * P[a:a + 2048] @ P.T
            np.maximum(D, 0.0, out=D)
            S = uv[a:a + 2048, None] + vv[None, :] - D / (2 * eps)
            k = int(np.argmax(S))
            i, j = divmod(k, S.shape[1])
            if S[i, j] > best:
                best, bi, bj = float(S[i, j]), a + i, j
        d = P[bi] - P[bj]
        recs.append(SumsRecord(eps, P[bi].tolist(), P[bj].tolist(), best,
                               (d / eps).tolist(), float(d @ d) / eps))
    monotone = all(b.M <= a.M + 1e-12 for a, b in zip(recs, recs[1:]))
    hmax = 0.0 if h is None else float(np.max(h))
    trend = recs[-1].penalty <= recs[0].penalty + hmax ** 2 / recs[-1].eps + 1e-12
    return SumsProbeResult("ok", M0, recs, monotone, trend)


def sums_probe(u, v, eps_ladder=(1e-1, 1e-2, 1e-3)):
    """Theorem-on-sums probe for grid functions on the same grid."""
    g = u.grid
    K = g.active.reshape(-1)
    P = g.coords().reshape(-1, g.n)[K]
    return sums_probe_points(P, u.flat[K], v.flat[K], g.boundary.reshape(-1)[K], eps_ladder, h=g.h)


def max_function(u, v):
    return GridFunction(u.grid, np.maximum(u.values, v.values))
