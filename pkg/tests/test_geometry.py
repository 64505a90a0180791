import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geoflow.errors import (
    DegenerateMetricError,
    DegeneratePlaneError,
    DomainError,
    NormalizationError,
    ToleranceError,
)
from geoflow.geometry import (
    ChartPoint,
    MetricChart,
    christoffel,
    curvature_operator_matrix,
    curvature_tensor,
    finite_difference_jet,
    metric_inverse,
    sectional_curvature,
)
from geoflow.models import (
    SymmetricModel,
    euclidean_chart,
    hyperbolic_plane_chart,
    symmetric_chart,
)

CH2 = symmetric_chart(SymmetricModel(4, 1))
HH2 = symmetric_chart(SymmetricModel(8, 3))

coord = st.floats(-0.3, 0.3)


def _diag_chart():
    def metric(q):
        g = np.eye(3)
        g[0, 0] = 1.0 + q[1] ** 2
        return g

    return MetricChart(dim=3, period=1.0, radius=1.0, metric=metric)


def test_euclidean_christoffel_and_curvature_vanish():
    chart = euclidean_chart(3)
    data = curvature_tensor(chart, ChartPoint(0.3, [0.1, -0.2]))
    assert np.all(data.upper == 0)
    assert np.all(data.curvature == 0)
    v, w = np.array([1.0, 0, 0]), np.array([0, 1.0, 1.0])
    assert sectional_curvature(chart, ChartPoint(0, [0, 0]), v, w) == 0.0
    assert np.all(curvature_operator_matrix(chart, ChartPoint(0, [0, 0]), v) == 0)


def test_diagonal_metric_lowered_symbols():
    # hand differentiation: only d_1 g_00 = 2 x_1 is nonzero
    data = christoffel(_diag_chart(), ChartPoint(0.0, [0.1, 0.0]))
    assert data.lower[1, 0, 0] == pytest.approx(-0.1, abs=1e-8)
    assert data.lower[0, 0, 1] == pytest.approx(0.1, abs=1e-8)
    assert data.lower[0, 1, 0] == pytest.approx(0.1, abs=1e-8)
    mask = np.ones_like(data.lower, dtype=bool)
    mask[1, 0, 0] = mask[0, 0, 1] = mask[0, 1, 0] = False
    assert np.max(np.abs(data.lower[mask])) < 1e-8


@pytest.mark.parametrize("chart", [CH2, HH2], ids=["CH2", "HH2"])
def test_on_axis_christoffel_vanish(chart):
    for t in np.linspace(0, chart.period, 7):
        data = christoffel(chart, ChartPoint(t, np.zeros(chart.dim - 1)))
        assert np.max(np.abs(data.upper)) < 1e-10


@given(st.lists(coord, min_size=3, max_size=3), st.floats(0, 6.0))
def test_curvature_symmetries(x, t):
    R = curvature_tensor(CH2, ChartPoint(t, x)).curvature
    scale = np.max(np.abs(R))
    tol = 1e-9 * scale
    assert np.max(np.abs(R + R.transpose(1, 0, 2, 3))) <= tol
    assert np.max(np.abs(R + R.transpose(0, 1, 3, 2))) <= tol
    assert np.max(np.abs(R - R.transpose(2, 3, 0, 1))) <= tol


@given(st.lists(coord, min_size=3, max_size=3))
def test_christoffel_symmetric(x):
    data = christoffel(CH2, ChartPoint(0.0, x))
    assert np.allclose(data.upper, data.upper.transpose(0, 2, 1), atol=1e-14)


def test_metric_periodic():
    x = [0.1, -0.2, 0.05]
    g0 = CH2.evaluate(ChartPoint(0.4, x))
    g1 = CH2.evaluate(ChartPoint(0.4 + CH2.period, x))
    assert np.array_equal(g0, g1)


def test_exact_hyperbolic_plane_curvature():
    # g = diag(cosh^2(x/L), 1) has constant curvature -1/L^2
    L = 0.7
    chart = hyperbolic_plane_chart(radius=1.0, scale=L)
    for x in (-0.4, 0.0, 0.3):
        K = sectional_curvature(chart, ChartPoint(0.2, [x]), [1.0, 0.0], [0.0, 1.0])
        assert K == pytest.approx(-1 / L**2, rel=1e-12)


def test_sectional_curvature_ch2_axis():
    p = ChartPoint(0.0, np.zeros(3))
    e = np.eye(4)
    assert sectional_curvature(CH2, p, e[0], e[1]) == pytest.approx(-1.0, abs=1e-12)
    assert sectional_curvature(CH2, p, e[0], e[2]) == pytest.approx(-0.25, abs=1e-12)
    assert sectional_curvature(CH2, p, 2 * e[0], e[0] + e[3]) == pytest.approx(-0.25, abs=1e-12)


@pytest.mark.parametrize(
    "n,r,diag",
    [(2, 1, [-1.0]), (4, 1, [-1, -0.25, -0.25]), (8, 3, [-1, -1, -1] + [-0.25] * 4)],
)
def test_axis_curvature_operator(n, r, diag):
    chart = symmetric_chart(SymmetricModel(n, r))
    for t in np.linspace(0, chart.period, 64, endpoint=False):
        K = curvature_operator_matrix(chart, ChartPoint(t, np.zeros(n - 1)), np.eye(n)[0])
        assert np.max(np.abs(K - np.diag(diag))) < 1e-8


def test_curvature_operator_symmetric_off_axis():
    p = ChartPoint(0.3, [0.1, 0.2, -0.1])
    g = CH2.evaluate(p)
    v = np.array([1.0, 0.2, 0.1, 0.0])
    v /= np.sqrt(v @ g @ v)
    K = curvature_operator_matrix(CH2, p, v)
    assert np.allclose(K, K.T, atol=1e-14)


def test_finite_difference_order():
    # exact curvature of cosh^2(x/L); L small so the truncation error dominates roundoff
    L = 0.05
    chart = hyperbolic_plane_chart(radius=1.0, scale=L)
    q = np.array([0.1, 0.02])
    errs = []
    for h in (1e-2, 1e-3, 1e-4):
        g, dg, d2g = finite_difference_jet(chart.metric, q, h, order=2, richardson=False)
        ga, dga, d2ga = chart.jet(q, 2)
        errs.append(np.max(np.abs(d2g - d2ga)))
    orders = np.log10(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.8)


def test_fd_curvature_matches_analytic():
    fd_chart = MetricChart(dim=4, period=CH2.period, radius=CH2.radius, metric=CH2.metric)
    p = ChartPoint(0.2, [0.1, -0.05, 0.08])
    Ra = curvature_tensor(CH2, p).curvature
    Rf = curvature_tensor(fd_chart, p).curvature
    assert np.max(np.abs(Ra - Rf)) < 1e-7


def test_errors():
    with pytest.raises(DomainError):
        christoffel(CH2, ChartPoint(0.0, [0.6, 0, 0]))
    with pytest.raises(DegenerateMetricError):
        metric_inverse(np.diag([1.0, 0.0]))
    bad = MetricChart(dim=2, period=1.0, radius=1.0, metric=lambda q: np.diag([1.0, -1.0]))
    with pytest.raises(DegenerateMetricError):
        christoffel(bad, ChartPoint(0.0, [0.0]))
    p = ChartPoint(0.0, np.zeros(3))
    with pytest.raises(DegeneratePlaneError):
        sectional_curvature(CH2, p, [1.0, 0, 0, 0], [2.0, 0, 0, 0])
    with pytest.raises(NormalizationError):
        curvature_operator_matrix(CH2, p, [2.0, 0, 0, 0])
    with pytest.raises(ToleranceError):
        finite_difference_jet(CH2.metric, np.zeros(4), 1e-300, order=2)
