import numpy as np
import pytest

from subeq.geometry import ball, builtin_metric
from subeq.grid import Grid, GridError, GridFunction, coordinate_jet, discrete_jet


def _quadratic(rng, n):
    A = rng.standard_normal((n, n))
    A = 0.5 * (A + A.T)
    b = rng.standard_normal(n)
    c = float(rng.standard_normal())
    return (lambda x: c + b @ x + 0.5 * x @ A @ x), c, b, A


@pytest.mark.parametrize("n", [1, 2, 3])
def test_centered_jet_exact_on_quadratics(n, seed):
    rng = np.random.default_rng(seed)
    f, c, b, A = _quadratic(rng, n)
    g = Grid([-1.0] * n, [1.0] * n, [7] * n)
    u = GridFunction.from_callable(g, f)
    for k in g.interior_nodes()[:20]:
        x = g.point(int(k))
        J = coordinate_jet(u, int(k))
        assert J.r == pytest.approx(f(x), abs=1e-12)
        np.testing.assert_allclose(J.p, b + A @ x, atol=1e-11)
        np.testing.assert_allclose(J.A, A, atol=1e-10)


def test_discrete_jet_affine_has_zero_hessian():
    g = Grid([0, 0], [1, 1], [9, 9])
    u = GridFunction.from_callable(g, lambda x: 3 * x[0] - 2 * x[1] + 1)
    J = discrete_jet(u, builtin_metric("euclidean(2)"), (4, 4))
    np.testing.assert_allclose(J.p, [3, -2], atol=1e-12)
    np.testing.assert_allclose(J.A, 0, atol=1e-10)


def test_discrete_jet_rejects_boundary_nodes():
    g = Grid([0, 0], [1, 1], [5, 5])
    u = GridFunction.from_callable(g, lambda x: 0.0)
    with pytest.raises(GridError):
        discrete_jet(u, builtin_metric("euclidean(2)"), (0, 2))


def test_masks_partition_active_nodes():
    g = Grid([-1.2, -1.2], [1.2, 1.2], [25, 25], ball(2))
    assert not np.any(g.interior & g.boundary)
    assert np.array_equal(g.active, g.interior | g.boundary)
    rho = np.array([g.domain(x) for x in g.coords().reshape(-1, 2)]).reshape(g.counts)
    assert np.all(rho[g.interior] < 0)
    # each boundary node touches the interior through its 3^n stencil
    pad = np.pad(g.interior, 1)
    for i, j in zip(*np.nonzero(g.boundary)):
        assert pad[i:i + 3, j:j + 3].any()


def test_box_edge_is_never_interior():
    g = Grid([0, 0, 0], [1, 1, 1], [4, 5, 6])
    assert g.interior.sum() == 2 * 3 * 4
    assert g.interior[1:-1, 1:-1, 1:-1].all()


def test_neighbor_table_layout():
    g = Grid([0, 0], [1, 1], [5, 6])
    nodes = g.interior_nodes()
    T = g.neighbor_table(nodes)
    assert T.shape == (len(nodes), 2 * 2 + 4)
    sx, sy = g.strides
    k = nodes[3]
    assert list(T[3]) == [k + sx, k - sx, k + sy, k - sy,
                          k + sx + sy, k + sx - sy, k - sx + sy, k - sx - sy]
    assert np.all(np.diff(nodes) > 0)


def test_csv_round_trip(tmp_path, seed):
    rng = np.random.default_rng(seed)
    g = Grid([-0.5, 0.25], [1.5, 2.0], [6, 8])
    u = GridFunction(g, rng.standard_normal(g.counts))
    p = tmp_path / "u.csv"
    text = u.to_csv(str(p))
    assert text.splitlines()[0] == "dims,h,origin"
    v = GridFunction.from_csv(str(p))
    assert np.array_equal(v.values, u.values)
    assert v.grid.counts == g.counts
    np.testing.assert_array_equal(v.grid.lo, g.lo)
    assert v.to_csv() == text


def test_csv_rejects_bad_input():
    with pytest.raises(GridError):
        GridFunction.from_csv("nope\n1\n")
    with pytest.raises(GridError):
        GridFunction.from_csv("dims,h,origin\n3 3,0.5 0.5,0 0\n1.0\n")


def test_grid_rejects_bad_boxes():
    with pytest.raises(GridError):
        Grid([0, 0], [1, 1], [2, 5])
    with pytest.raises(GridError):
        Grid([0, 1], [1, 1], [5, 5])
    with pytest.raises(GridError):
        Grid([0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [5, 5, 5], metric=builtin_metric("s3_tube"))


def test_nonfinite_values_rejected():
    g = Grid([0, 0], [1, 1], [4, 4])
    vals = np.zeros(g.counts)
    vals[1, 1] = np.nan
    with pytest.raises(GridError):
        GridFunction(g, vals)


def test_grid_function_arithmetic():
    g = Grid([0], [1], [5])
    u = GridFunction.from_callable(g, lambda x: x[0])
    v = GridFunction.from_callable(g, lambda x: 1 - x[0])
    np.testing.assert_allclose((u + v).values, 1.0)
    np.testing.assert_allclose((u - u).values, 0.0)
    np.testing.assert_allclose((-u + 2).values, 2 - u.values)
