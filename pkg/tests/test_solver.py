import json

import numpy as np
import pytest

from oracles import discrete_laplace_residual
from subeq.catalog import Pq, eikonal, laplace, special_lagrangian
from subeq.geometry import ball, builtin_metric
from subeq.grid import Grid, GridFunction
from subeq.solver import (FlatUpdate, NonConvergence, SolveConfig,
                          comparison_check, f_subharmonic_test, max_function, perron_solve,
                          sums_probe, sums_probe_points, zmp_check)

E1 = builtin_metric("euclidean(1)")
E2 = builtin_metric("euclidean(2)")


def _saddle(counts):
    g = Grid([-1, -1], [1, 1], counts)
    return g, GridFunction.from_callable(g, lambda x: x[0] ** 2 - x[1] ** 2)


@pytest.mark.parametrize("F", [laplace(2), special_lagrangian(2, 0.0)], ids=["laplace", "slag"])
def test_harmonic_quadratic_reproduced(F):
    g, phi = _saddle([17, 17])
    u, rep = perron_solve(F, E2, g, phi, SolveConfig(tol_iter=1e-12))
    assert rep.verdicts == {"converged": True, "residual_ok": True}
    assert np.max(np.abs(u.values - phi.values)[g.active]) <= 1e-8
    assert rep.max_margin_residual <= 1e-8


def test_laplace_solution_satisfies_five_point_scheme():
    g = Grid([0, 0], [1, 1], [13, 13])
    phi = GridFunction.from_callable(g, lambda x: np.sin(3 * x[0]) * np.exp(x[1]))
    u, _ = perron_solve(laplace(2), E2, g, phi, SolveConfig(tol_iter=1e-12))
    assert np.max(np.abs(discrete_laplace_residual(u.values, g.h))) <= 1e-7


def test_one_dimensional_dirichlet_gives_affine_interpolant():
    g = Grid([0], [1], [21])
    vals = np.zeros(21)
    vals[0], vals[-1] = 0.3, 2.0
    phi = GridFunction(g, vals)
    u, _ = perron_solve(Pq(1, 1), E1, g, phi, SolveConfig(tol_iter=1e-13, tol_residual=1e-10))
    exact = 0.3 + 1.7 * np.linspace(0, 1, 21)
    assert np.max(np.abs(u.values - exact)) <= 1e-10


def test_eikonal_raises_flat_update():
    g, phi = _saddle([9, 9])
    with pytest.raises(FlatUpdate):
        perron_solve(eikonal(2), E2, g, phi)


def test_small_cap_and_nonconvergence():
    g, phi = _saddle([9, 9])
    # data outside [-cap, cap]: no sign change inside the bracket
    with pytest.raises(FlatUpdate):
        perron_solve(laplace(2), E2, g, phi + 10.0, SolveConfig(cap=5.0))
    with pytest.raises(NonConvergence) as info:
        perron_solve(laplace(2), E2, g, phi, SolveConfig(max_sweeps=3))
    assert info.value.u is not None and info.value.report.sweeps == 3


def test_solve_is_bitwise_deterministic():
    g, phi = _saddle([13, 13])
    a, ra = perron_solve(special_lagrangian(2, 0.3), E2, g, phi)
    b, rb = perron_solve(special_lagrangian(2, 0.3), E2, g, phi)
    assert a.values.tobytes() == b.values.tobytes()
    assert ra.sweeps == rb.sweeps


@pytest.mark.parametrize("F", [laplace(2), special_lagrangian(2, 0.5), Pq(2, 1)],
                         ids=lambda F: F.name)
def test_parallel_agrees_with_sequential(F):
    g, phi = _saddle([13, 13])
    cfg = SolveConfig(tol_iter=1e-12)
    a, _ = perron_solve(F, E2, g, phi, cfg)
    b, rb = perron_solve(F, E2, g, phi, SolveConfig(tol_iter=1e-12, parallel=True))
    assert rb.verdicts["converged"]
    assert np.max(np.abs(a.values - b.values)) <= 10 * cfg.tol_residual


def test_backends_agree_on_small_grid():
    g, phi = _saddle([7, 7])
    F = special_lagrangian(2, 0.4)
    out = {}
    for be in ("compiled", "python", "generic"):
        u, rep = perron_solve(F, E2, g, phi, SolveConfig(tol_iter=1e-12, backend=be))
        out[be] = u.values
        assert rep.backend == be
    assert np.max(np.abs(out["compiled"] - out["python"])) <= 1e-10
    assert np.max(np.abs(out["compiled"] - out["generic"])) <= 1e-10


def test_debug_monotone_probe_runs():
    g, phi = _saddle([5, 5])
    u, rep = perron_solve(Pq(2, 2), E2, g, phi, SolveConfig(debug=True))
    assert rep.verdicts["converged"]


def test_report_serializes():
    g, phi = _saddle([7, 7])
    _, rep = perron_solve(laplace(2), E2, g, phi)
    d = json.loads(rep.to_json())
    assert set(d) >= {"sweeps", "max_update", "max_margin_residual", "witness", "verdicts"}


def test_subharmonic_test_margin_and_witness():
    g, _ = _saddle([17, 17])
    s = GridFunction.from_callable(g, lambda x: x @ x)
    good = f_subharmonic_test(s, laplace(2), E2)
    assert good.passed and good.min_margin == pytest.approx(4.0, abs=1e-9)
    bad = f_subharmonic_test(-s, laplace(2), E2)
    assert not bad.passed and bad.min_margin == pytest.approx(-4.0, abs=1e-9)
    assert bad.witness is not None and len(bad.witness) == 2


def test_subharmonic_mask_restricts_nodes():
    g, _ = _saddle([9, 9])
    s = GridFunction.from_callable(g, lambda x: x[0] ** 2 - 3 * x[1] ** 2 * (x[1] > 0))
    mask = np.zeros(g.counts, dtype=bool)
    mask[:, :4] = True
    rep = f_subharmonic_test(s, laplace(2), E2, mask=mask)
    assert rep.passed and rep.nodes == 7 * 3


def test_zmp_examples():
    g = Grid([-1.2, -1.2], [1.2, 1.2], [25, 25], ball(2))
    ok = zmp_check(GridFunction.from_callable(g, lambda x: -1.0))
    assert ok.status == "pass"
    bad = zmp_check(GridFunction.from_callable(g, lambda x: 1 - x @ x))
    assert bad.status == "violation"
    assert bad.magnitude == pytest.approx(1.0)
    assert bad.witness == [0.0, 0.0]
    na = zmp_check(GridFunction.from_callable(g, lambda x: 1.0))
    assert na.status == "not_applicable"


def test_comparison_check_for_harmonic_pair():
    g, phi = _saddle([13, 13])
    u, _ = perron_solve(laplace(2), E2, g, phi)
    rep = comparison_check(u, -u, laplace(2), E2)
    assert rep.verdicts == {"u_in_F": True, "v_in_dual": True, "zmp": "pass"}


def test_sums_probe_toy():
    g = Grid([-1], [1], [41])
    u = GridFunction.from_callable(g, lambda x: 1 - x[0] ** 2)
    zero = GridFunction.from_callable(g, lambda x: 0.0)
    r = sums_probe(u, zero)
    assert r.status == "ok" and r.M0 == pytest.approx(1.0)
    for rec in r.records:
        assert rec.x == [0.0] and rec.y == [0.0] and rec.M == pytest.approx(1.0)
    assert r.monotone and r.penalty_trend
    assert sums_probe(zero, zero).status == "not_applicable"


def test_sums_probe_values_decrease_along_ladder(seed):
    rng = np.random.default_rng(seed)
    P = rng.uniform(-1, 1, (300, 2))
    u = 1 - np.sum(P * P, axis=1) + 0.1 * rng.standard_normal(300)
    v = -0.2 * rng.random(300)
    bd = np.sum(P * P, axis=1) > 0.9
    u[bd] = -1.0
    r = sums_probe_points(P, u, v, bd, eps_ladder=(1.0, 0.1, 0.01, 0.001))
    assert r.status == "ok" and r.monotone
    Ms = [rec.M for rec in r.records]
    assert Ms[-1] >= r.M0 - 1e-12
    assert all(b <= a + 1e-12 for a, b in zip(Ms, Ms[1:]))


def test_max_of_subharmonics_is_subharmonic():
    g, _ = _saddle([17, 17])
    a = GridFunction.from_callable(g, lambda x: x[0] ** 2)
    b = GridFunction.from_callable(g, lambda x: x[1] ** 2)
    F = Pq(2, 2)
    assert f_subharmonic_test(a, F, E2).passed and f_subharmonic_test(b, F, E2).passed
    m = max_function(a, b)
    assert np.array_equal(m.values, np.maximum(a.values, b.values))
    assert f_subharmonic_test(m, F, E2).passed
