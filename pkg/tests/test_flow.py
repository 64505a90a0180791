import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoflow.deformation import DeformationSpec, deformed_chart
from geoflow.errors import ConfigurationError, DomainError, IntegrationError
from geoflow.flow import (
    ChartJacobiSystem,
    CompositeSystem,
    ConstantJacobiSystem,
    JacobiState,
    PhasePoint,
    ReversedSystem,
    integrate_geodesic,
    parallel_frame,
    propagate_jacobi,
    symplectic_defect,
    transition_matrices,
    unit_velocity,
)
from geoflow.geometry import christoffel
from geoflow.models import SymmetricModel, closed_form_jacobi, euclidean_chart, symmetric_chart

MODEL = SymmetricModel(4, 1)
BASE = symmetric_chart(MODEL)
DEFORMED = deformed_chart(BASE, DeformationSpec(0.1, 4, 1, 0.01))


def _axis_segment(chart=BASE, t_end=10.0):
    return integrate_geodesic(chart, PhasePoint(np.zeros(4), np.eye(4)[0]), t_end, 1e-11)


def test_euclidean_straight_line():
    chart = euclidean_chart(3)
    v = unit_velocity(chart, np.zeros(3), [1.0, 0.3, -0.2])
    seg = integrate_geodesic(chart, PhasePoint(np.array([0.0, 0.1, 0.0]), v), 2.0, 1e-10)
    expected = np.array([0.0, 0.1, 0.0]) + seg.times[:, None] * v
    assert np.max(np.abs(seg.positions - expected)) < 1e-9


def test_axis_orbit_stays_on_axis():
    seg = _axis_segment()
    assert np.max(np.abs(seg.positions[:, 1:])) < 1e-12
    assert seg.positions[-1, 0] == pytest.approx(10.0, abs=1e-9)
    assert seg.exit_reason == "end"


def test_energy_and_frame_conservation():
    v = unit_velocity(DEFORMED, np.array([0.0, 0.01, 0.002, 0.0]), [1.0, 0.2, 0.05, -0.1])
    seg = integrate_geodesic(DEFORMED, PhasePoint([0.0, 0.01, 0.002, 0.0], v), 3.0, 1e-10)
    assert seg.energy_drift < 1e-8
    assert seg.frame_defect < 1e-8


def test_frame_after_one_period_on_axis():
    seg = _axis_segment(t_end=2 * np.pi)
    U0 = seg.state(0.0)[2]
    U1 = seg.state(2 * np.pi)[2]
    assert np.max(np.abs(U1 - U0)) < 1e-9


def test_parallel_frame_without_stored_frame():
    v = unit_velocity(BASE, np.array([0.0, 0.05, 0.0, 0.0]), [1.0, 0.1, 0.2, 0.0])
    start = PhasePoint([0.0, 0.05, 0.0, 0.0], v)
    with_f = integrate_geodesic(BASE, start, 1.5, 1e-11)
    without = integrate_geodesic(BASE, start, 1.5, 1e-11, with_frame=False)
    F = parallel_frame(BASE, without, [0.5, 1.5], tol=1e-11)
    for k, t in enumerate([0.5, 1.5]):
        assert np.max(np.abs(F[k] - with_f.state(t)[2])) < 1e-7


def test_reversibility():
    q0 = np.array([0.1, 0.02, -0.01, 0.03])
    v = unit_velocity(DEFORMED, q0, [1.0, -0.1, 0.2, 0.05])
    fwd = integrate_geodesic(DEFORMED, PhasePoint(q0, v), 2.0, 1e-11, with_frame=False)
    q1, v1, _ = fwd.state(2.0)
    back = integrate_geodesic(DEFORMED, PhasePoint(q1, -v1), 2.0, 1e-11, with_frame=False)
    q2, v2, _ = back.state(2.0)
    assert np.max(np.abs(q2 - q0)) < 1e-8
    assert np.max(np.abs(v2 + v)) < 1e-8


def test_tube_exit_event():
    v = unit_velocity(BASE, np.zeros(4), [1.0, 0.5, 0.0, 0.0])
    seg = integrate_geodesic(BASE, PhasePoint(np.zeros(4), v), 10.0, 1e-10, exit_radius=0.02)
    assert seg.exit_reason == "tube"
    assert seg.exit_index == 1
    assert abs(abs(seg.state(seg.t1)[0][1]) - 0.02) < 1e-9
    assert seg.t1 == pytest.approx(0.02 / np.abs(v[1]), rel=0.01)


def test_chart_exit_event():
    v = unit_velocity(BASE, np.zeros(4), [0.2, 1.0, 0.0, 0.0])
    seg = integrate_geodesic(BASE, PhasePoint(np.zeros(4), v), 10.0, 1e-10)
    assert seg.exit_reason == "chart"


def test_integration_errors():
    with pytest.raises(IntegrationError):
        integrate_geodesic(BASE, PhasePoint(np.zeros(4), np.eye(4)[0]), 1.0, 0.0)
    with pytest.raises(DomainError):
        integrate_geodesic(BASE, PhasePoint([0, 0.9, 0, 0], np.eye(4)[0]), 1.0)


@pytest.mark.parametrize("k,rho", [(0, -1.0), (1, -0.25), (2, -0.25)])
def test_axis_jacobi_closed_form(k, rho):
    seg = _axis_segment()
    sys_ = ChartJacobiSystem(BASE, seg)
    times = np.linspace(0, 10, 21)
    for a, b in [(1.0, 0.0), (0.0, 1.0), (1.0, -np.sqrt(-rho))]:
        y0 = np.zeros(6)
        y0[k], y0[3 + k] = a, b
        Y = sys_.trajectory(y0, times, 1e-11)
        f, df = closed_form_jacobi(rho, a, b, times)
        scale = np.maximum(1.0, np.abs(f))
        assert np.max(np.abs(Y[:, k] - f) / scale) < 1e-6
        assert np.max(np.abs(Y[:, 3 + k] - df) / np.maximum(1.0, np.abs(df))) < 1e-6
        others = np.delete(np.arange(6), [k, 3 + k])
        assert np.max(np.abs(Y[:, others])) < 1e-8 * np.max(scale)


def test_weak_direction_cosh():
    seg = _axis_segment()
    s = propagate_jacobi(BASE, seg, JacobiState([0, 1, 0], [0, 0, 0]), 4.0, 1e-11)
    assert s.xi[1] == pytest.approx(np.cosh(2.0), rel=1e-7)
    assert s.eta[1] == pytest.approx(0.5 * np.sinh(2.0), rel=1e-7)


def _variation_field(chart, q0, v0, w, t, h=1e-5):
    """Jacobi field by central differences of nearby geodesics.

    Smaller steps amplify adaptive-step noise across the deformation core.
    """
    up = christoffel(chart, q0).upper
    out = []
    for s in (h, -h):
        q = q0 + s * w
        v = v0 - s * np.einsum("kij,i,j->k", up, w, v0)
        seg = integrate_geodesic(chart, PhasePoint(q, v), t, 1e-12, with_frame=False)
        out.append(seg.state(t)[0])
    return (out[0] - out[1]) / (2 * h)


@settings(max_examples=6)
@given(st.integers(0, 2), st.floats(0.3, 1.5))
def test_jacobi_matches_geodesic_variation(k, t):
    q0 = np.array([0.0, 0.03, 0.004, -0.01])
    v0 = unit_velocity(DEFORMED, q0, [1.0, 0.15, -0.05, 0.1])
    seg = integrate_geodesic(DEFORMED, PhasePoint(q0, v0), t, 1e-12)
    U0 = seg.state(0.0)[2]
    xi0 = np.eye(3)[k]
    J_fd = _variation_field(DEFORMED, q0, v0, U0 @ xi0, t)
    s = ChartJacobiSystem(DEFORMED, seg).propagate(np.concatenate([xi0, np.zeros(3)]), 0.0, t, 1e-11)
    J = seg.state(t)[2] @ s[:3]
    assert np.max(np.abs(J - J_fd)) < 2e-5 * max(1.0, np.max(np.abs(J)))


def test_symplectic_transition():
    q0 = np.array([0.0, 0.05, 0.005, 0.0])
    v0 = unit_velocity(DEFORMED, q0, [1.0, 0.2, 0.05, -0.1])
    seg = integrate_geodesic(DEFORMED, PhasePoint(q0, v0), 2.0, 1e-11)
    Phi = ChartJacobiSystem(DEFORMED, seg).transition(0.0, seg.t1, 1e-11)
    assert symplectic_defect(Phi) < 1e-7


def test_constant_system_transitions():
    K = np.diag([-1.0, -0.25, -0.25])
    sys_ = ConstantJacobiSystem(K, 5.0)
    Ts = transition_matrices(sys_, [0.0, 1.0, 3.0])
    assert Ts.shape == (2, 6, 6)
    assert symplectic_defect(Ts[1]) < 1e-10
    assert Ts[0][0, 0] == pytest.approx(np.cosh(1.0), rel=1e-12)
    assert Ts[1][1, 1] == pytest.approx(np.cosh(1.0), rel=1e-12)


def test_reversed_system_inverts():
    seg = _axis_segment(DEFORMED, 3.0)
    fwd = ChartJacobiSystem(DEFORMED, seg)
    rev = ReversedSystem(fwd)
    y0 = np.array([0.3, -0.2, 1.0, 0.5, 0.1, -0.4])
    y1 = fwd.propagate(y0, 0.0, 3.0, 1e-11)
    assert np.allclose(rev.propagate(y1, 0.0, 3.0, 1e-11), y0, atol=1e-8)
    with pytest.raises(ConfigurationError):
        ReversedSystem(ConstantJacobiSystem(np.eye(2)))


def test_composite_junction_rotation():
    K = np.diag([-1.0, -0.25])
    Q = np.array([[0.0, 1.0], [1.0, 0.0]])
    comp = CompositeSystem([ConstantJacobiSystem(K, 1.0), ConstantJacobiSystem(K, 1.0)], [Q])
    y = comp.propagate(np.array([1.0, 0.0, 0.0, 0.0]), 0.0, 2.0)
    # the strong field enters the second part along its weak direction
    assert y[1] == pytest.approx(np.cosh(1.0) * np.cosh(0.5) + 2 * np.sinh(1.0) * np.sinh(0.5), rel=1e-10)
    assert abs(y[0]) < 1e-12
    back = comp.propagate(y, 2.0, 0.0)
    assert np.allclose(back, [1.0, 0.0, 0.0, 0.0], atol=1e-10)
    assert comp.operator(1.5)[0, 0] == -1.0
    with pytest.raises(ConfigurationError):
        CompositeSystem([ConstantJacobiSystem(K, 1.0), ConstantJacobiSystem(np.eye(3), 1.0)], [None])
    with pytest.raises(DomainError):
        comp.propagate(np.zeros(4), 0.0, 3.0)


def test_state_shape_errors():
    with pytest.raises(ConfigurationError):
        JacobiState([1.0, 2.0], [1.0])
    with pytest.raises(ConfigurationError):
        ConstantJacobiSystem(np.eye(2), 1.0).propagate(np.zeros(3), 0.0, 1.0)
