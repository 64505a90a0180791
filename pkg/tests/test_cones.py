import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoflow.cones import (
    ConeSpec,
    OrbitPlan,
    detect_splitting,
    growth_fits,
    loglog_slope,
    lyapunov_spectrum,
    rng_for,
    sample_boundary_states,
    strong_growth_rate,
    theta,
    theta_batch,
    theta_derivative_numeric,
    theta_derivative_symmetric,
    theta_rate,
)
from geoflow.errors import ConfigurationError, DomainError, NormalizationError, ParameterError
from geoflow.flow import ConstantJacobiSystem, JacobiState, ReversedSystem

SPEC = ConeSpec((0,), 1.5)
K_SYM = np.diag([-1.0, -0.25, -0.25])


def _exact_flow(X, curv, t):
    """Flow of a diagonal Jacobi system written out with cosh and sinh."""
    X = np.atleast_2d(X)
    m = len(curv)
    k = np.sqrt(-np.asarray(curv))
    xi, eta = X[:, :m], X[:, m:]
    c, s = np.cosh(k * t), np.sinh(k * t)
    return np.hstack([xi * c + eta * s / k, xi * k * s + eta * c])


def _oracle_derivative(X, spec, curv, h=1e-5):
    return (theta_batch(_exact_flow(X, curv, h), spec) - theta_batch(_exact_flow(X, curv, -h), spec)) / (2 * h)


def test_theta_examples():
    assert theta(JacobiState([1, 0, 0], [1, 0, 0]), SPEC) == pytest.approx(2.0)
    assert theta(JacobiState([1, 0, 0], [-1, 0, 0]), SPEC) == pytest.approx(0.0)
    assert theta(JacobiState([0, 1, 0], [0, 0, 1]), SPEC) == 0.0
    assert theta(JacobiState([1, 0, 0], [0, 0, 0]), SPEC) == pytest.approx(1.0)
    stable = SPEC.with_(side="stable")
    assert theta(JacobiState([1, 0, 0], [-1, 0, 0]), stable) == pytest.approx(2.0)


@given(st.lists(st.floats(-10, 10), min_size=6, max_size=6), st.floats(0.01, 100))
def test_theta_scale_invariant_and_bounded(x, lam):
    x = np.array(x)
    if np.linalg.norm(x) < 1e-3:
        x[0] = 1.0
    a, b = theta(x, SPEC), theta(lam * x, SPEC)
    assert a == pytest.approx(b, rel=1e-10, abs=1e-12)
    assert -1e-12 <= a <= 2 + 1e-12


def test_theta_zero_state():
    with pytest.raises(DomainError):
        theta(np.zeros(6), SPEC)


@pytest.mark.parametrize("side", ["unstable", "stable"])
@pytest.mark.parametrize("block,m", [((0,), 3), ((0, 1, 2), 7), ((0,), 1)])
def test_boundary_samples(side, block, m):
    spec = ConeSpec(block, 1.3, side)
    X = sample_boundary_states(spec, m, 200, rng_for(7, 3))
    assert np.allclose(np.einsum("ij,ij->i", X, X), 1.0, atol=1e-12)
    assert np.allclose(theta_batch(X, spec), 1.3, atol=1e-12)


def test_rng_streams_deterministic_and_distinct():
    a = sample_boundary_states(SPEC, 3, 5, rng_for(1, 2))
    b = sample_boundary_states(SPEC, 3, 5, rng_for(1, 2))
    c = sample_boundary_states(SPEC, 3, 5, rng_for(1, 3))
    d = sample_boundary_states(SPEC, 3, 5, rng_for(2, 2))
    assert np.array_equal(a, b)
    assert not np.allclose(a, c) and not np.allclose(a, d)


def test_closed_form_examples():
    # xi_A = eta_A = 1/2 and xi_B = 1/sqrt(2): P = 1, Q = 1/2
    s = np.array([0.5, 1 / np.sqrt(2), 0, 0.5, 0, 0])
    assert theta_derivative_symmetric(s, SPEC) == pytest.approx(1.0, abs=1e-12)
    # pure eta_B: P = 0
    assert theta_derivative_symmetric(np.array([0, 0, 0, 0, 1, 0.0]), SPEC) == 0.0
    # pure xi_A: P = Q = 1
    assert theta_derivative_symmetric(np.array([1.0, 0, 0, 0, 0, 0]), SPEC) == pytest.approx(2.0)
    assert theta_derivative_symmetric(np.array([1.0, 0, 0, 0, 0, 0]), SPEC.with_(side="stable")) == pytest.approx(-2.0)


def test_closed_form_normalization():
    with pytest.raises(NormalizationError):
        theta_derivative_symmetric(np.array([2.0, 0, 0, 0, 0, 0]), SPEC)
    with pytest.raises(ParameterError):
        theta_derivative_symmetric(np.array([1.0, 0, 0, 0, 0, 0]), SPEC.with_(slopes=(2.0,)))


@pytest.mark.parametrize("side", ["unstable", "stable"])
@pytest.mark.parametrize("c", [1.1, 1.5, 1.9])
def test_closed_form_matches_exact_flow(side, c):
    spec = ConeSpec((0,), c, side)
    X = sample_boundary_states(spec, 3, 1000, rng_for(0, 11))
    closed = theta_derivative_symmetric(X, spec)
    assert np.max(np.abs(closed - _oracle_derivative(X, spec, [-1, -0.25, -0.25]))) < 1e-6
    sys_ = ConstantJacobiSystem(K_SYM)
    assert np.max(np.abs(closed - theta_rate(sys_, 0.0, X, spec))) < 1e-12
    assert np.max(np.abs(closed - theta_derivative_numeric(sys_, X, spec, 1e-4, t=1.0))) < 1e-6


def test_closed_form_general_weak_curvature():
    X = sample_boundary_states(SPEC, 3, 200, rng_for(0, 12))
    closed = theta_derivative_symmetric(X, SPEC, weak_curvature=-0.5)
    assert np.max(np.abs(closed - _oracle_derivative(X, SPEC, [-1, -0.5, -0.5]))) < 1e-6


@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6))
def test_symmetric_derivative_positive_inside_unit_sphere(x):
    x = np.array(x)
    n = np.linalg.norm(x)
    if n < 1e-3:
        return
    x = x / n
    th = theta(x, SPEC)
    if 1e-6 < th < 2 - 1e-6:
        assert theta_derivative_symmetric(x, SPEC) > 0
        assert theta_derivative_symmetric(x * np.r_[1, 1, 1, -1, -1, -1], SPEC.with_(side="stable")) < 0


def test_reversal_duality():
    fwd = ConstantJacobiSystem(K_SYM, 3.0)
    rev = ReversedSystem(fwd)
    S = np.r_[np.ones(3), -np.ones(3)]
    X = sample_boundary_states(SPEC, 3, 20, rng_for(0, 5))
    a = theta_batch(fwd.propagate(X.T, 0.0, 2.0).T, SPEC)
    b = theta_batch(rev.propagate((X * S).T, 0.0, 2.0).T, SPEC.with_(side="stable"))
    assert np.allclose(a, b, atol=1e-10)


def test_growth_rates_constant_system():
    sys_ = ConstantJacobiSystem(K_SYM)
    on_axis = np.array([1.0, 0, 0, 1.0, 0, 0]) / np.sqrt(2)
    assert strong_growth_rate(sys_, on_axis, SPEC).rate == pytest.approx(1.0, abs=1e-9)
    X = sample_boundary_states(SPEC, 3, 5, rng_for(0, 1))
    fits = growth_fits(sys_, X, SPEC)
    for x, f in zip(X, fits):
        assert f.rate == pytest.approx(strong_growth_rate(sys_, x, SPEC).rate, abs=1e-8)
        assert 0.9 < f.rate <= 1.0 + 1e-9
    with pytest.raises(ParameterError):
        strong_growth_rate(sys_, on_axis, SPEC, samples=2)


def test_loglog_flat():
    sys_ = ConstantJacobiSystem(np.zeros((1, 1)))
    fit = loglog_slope(sys_, np.array([0.0, 1.0]), 10.0, 100.0)
    assert fit.rate == pytest.approx(1.0, abs=0.01)
    with pytest.raises(ParameterError):
        loglog_slope(sys_, np.array([1.0, 1.0]), 0.0, 1.0)


def test_lyapunov_constant():
    lam = lyapunov_spectrum(ConstantJacobiSystem(K_SYM), 100.0)
    assert np.allclose(lam, [1, 0.5, 0.5, -0.5, -0.5, -1], atol=0.01)
    assert abs(lam.sum()) < 1e-8


def _plan(K, T=20.0, kind="outside"):
    return [OrbitPlan(ConstantJacobiSystem(K, T), kind, spectrum_time=T)]


def test_detector_labels():
    v = detect_splitting(_plan(K_SYM), SPEC, samples=20)
    assert v.invariance_pass and v.label == "anosov-like"
    assert v.min_gap == pytest.approx(0.5, abs=0.05)
    assert v.min_boundary_rate > 0
    v = detect_splitting(_plan(np.diag([-1.0, 0.0, 0.0])), SPEC, samples=20)
    assert v.label == "partially-hyperbolic"
    v = detect_splitting(_plan(np.diag([-1.0, -1.0, -0.25])), SPEC, samples=20)
    assert v.label == "no-domination"


def test_detector_errors():
    with pytest.raises(ConfigurationError):
        detect_splitting([], SPEC)
    with pytest.raises(ConfigurationError):
        detect_splitting(_plan(K_SYM, T=1.0), SPEC)
    with pytest.raises(ConfigurationError):
        detect_splitting(_plan(K_SYM), ConeSpec((5,)))


def test_cone_spec_errors():
    for kw in [dict(c=2.0), dict(c=1.0), dict(side="up"), dict(slopes=(1.0, 2.0)), dict(slopes=(-1.0,))]:
        with pytest.raises(ParameterError):
            SPEC.with_(**kw)
    with pytest.raises(ParameterError):
        ConeSpec((0, 0))
