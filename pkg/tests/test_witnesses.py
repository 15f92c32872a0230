import math

import numpy as np
import pytest

from oracles import s3_half_dist2_hessian
from subeq.catalog import Pq, half_root_shift, root_gradient_shift
from subeq.geometry import tube_pair_fields
from subeq.jets import Jet2
from subeq.subequations import dual
from subeq.witnesses import (HarnessError, V_jet, root_shift_harness, root_shift_identity_defect,
                             signature, slice_grid, tube_pair_harness)


@pytest.fixture(scope="module")
def tube_report():
    return tube_pair_harness(c=0.5, h=2e-2, samples=100, seed=0, sums_points=41)


def test_tube_signature_counts(tube_report):
    assert tube_report["signature_counts"] == {"2,3,1": 100}
    assert tube_report["signature_ok"]


def test_tube_zmp_violation_equals_c(tube_report):
    assert tube_report["zmp"]["status"] == "violation"
    assert abs(tube_report["violation"] - 0.5) <= 2e-2
    assert tube_report["zmp"]["boundary_max"] <= 1e-9


def test_tube_harmonicity_residuals(tube_report):
    assert tube_report["lambda4_residual_u1"] <= 1e-6
    assert tube_report["lambda4_residual_pair"] <= 1e-6
    assert tube_report["u1_in_F_min_margin"] >= -1e-12
    assert tube_report["u2_in_dual_min_margin"] >= -1e-12


def test_tube_uniqueness_pair(tube_report):
    assert tube_report["boundary_agreement"] <= 1e-15
    assert tube_report["core_gap"] > 0.4


def test_tube_sums_probe(tube_report):
    sp = tube_report["sums_probe"]
    assert sp["status"] == "ok" and sp["monotone"]


@pytest.mark.parametrize("s", [0.2, 0.5, 1.0])
def test_tube_jet_matches_sphere_geometry(s):
    # framed Hess(u_1) is minus the round-sphere Hess(delta^2 / 2) in the first factor
    T = tube_pair_fields()
    x = np.array([s, 0.3, 1.1, 0.6, 0.2, 0.4])
    H = T.framed(x, T.u_jet(1, x)).A
    ref = np.concatenate([np.linalg.eigvalsh(-s3_half_dist2_hessian(s)), np.zeros(3)])
    np.testing.assert_allclose(np.linalg.eigvalsh(H), np.sort(ref), atol=1e-3)


def test_tube_fields_satisfy_pair_identity(seed):
    T = tube_pair_fields()
    rng = np.random.default_rng(seed)
    for _ in range(50):
        x = np.array([rng.uniform(0.05, 1.4), *rng.uniform(0, 6, 2),
                      rng.uniform(0.05, 1.4), *rng.uniform(0, 6, 2)])
        assert T.rho(x) == pytest.approx(-(T.u(1, x) + T.u(2, x)))
        F, Fd = Pq(6, 3), dual(Pq(6, 3))
        J1 = T.framed(x, T.u_jet(1, x))
        assert F.margin(x, J1) >= -1e-12
        assert abs(np.linalg.eigvalsh(J1.A)[3]) <= 1e-6
        assert Fd.margin(x, T.framed(x, T.u_jet(2, x))) >= -1e-12


def test_signature_band():
    assert signature([-1, -1e-7, 0, 2e-7, 3]) == (1, 3, 1)


def test_slice_grid_covers_omega():
    g = slice_grid(0.5, 0.05)
    assert g.interior.any() and g.boundary.any()
    X = g.coords().reshape(-1, 2)
    rho = 0.5 * np.sum(X * X, axis=1)
    assert np.all(rho[g.interior.reshape(-1)] < 0.5)


def test_harness_rejects_bad_parameters():
    with pytest.raises(HarnessError):
        tube_pair_harness(c=2.0)
    with pytest.raises(HarnessError):
        tube_pair_harness(c=0.5, h=0.5)


def test_harness_is_seed_deterministic():
    a = tube_pair_harness(samples=20, seed=7)
    b = tube_pair_harness(samples=20, seed=7)
    a.pop("wall_time"), b.pop("wall_time")
    assert a == b


def test_root_shift_identity():
    radii = np.random.default_rng(0).uniform(0, 1, 1000)
    assert root_shift_identity_defect(radii, n=2) <= 1e-12
    assert root_shift_identity_defect(radii, n=4, seed=3) <= 1e-12


def test_v_jet_against_finite_differences():
    R = 1.3
    x0 = np.array([0.4, -0.3, 0.2])

    def V(x):
        return (R ** 3 - np.linalg.norm(x) ** 3) / 12

    J = V_jet(x0, R)
    h = 1e-4
    E = np.eye(3)
    g = np.array([(V(x0 + h * e) - V(x0 - h * e)) / (2 * h) for e in E])
    H = np.array([[(V(x0 + h * a + h * b) - V(x0 + h * a - h * b)
                    - V(x0 - h * a + h * b) + V(x0 - h * a - h * b)) / (4 * h * h) for b in E]
                  for a in E])
    assert J.r == pytest.approx(V(x0))
    np.testing.assert_allclose(J.p, g, atol=1e-8)
    np.testing.assert_allclose(J.A, H, atol=1e-6)


def test_root_shift_uniqueness_failure():
    rep = root_shift_harness(n=2, samples=1000, seed=0)
    assert rep["identity_defect"] <= 1e-12
    for k in ("U_margin", "U_dual_margin", "minus_V_margin", "minus_V_dual_margin"):
        assert rep[k] <= 1e-12
    assert rep["boundary_values_gap"] <= 1e-15
    assert rep["distinct"] == pytest.approx(1 / 12)


def test_minus_v_is_not_strict():
    # -V lies on the boundary of F: pushing r up or A down leaves F
    F = root_gradient_shift("-", 2)
    x = np.array([0.3, 0.4])
    J = -V_jet(x)
    assert F.margin(x, Jet2(J.r, J.p, J.A - 1e-3 * np.eye(2))) < 0
    assert np.allclose(J.A, half_root_shift(J.p))
    assert math.isclose(F.margin(x, J), 0.0, abs_tol=1e-12)
