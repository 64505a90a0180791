"""Geodesics, parallel frames and Jacobi propagation.

Jacobi states are stored in the coordinates of a parallel orthonormal frame
of the orthogonal complement of the geodesic, so the Jacobi equation becomes
the linear system ``xi' = eta``, ``eta' = -K(t) xi`` with
``K_ij = R(v, u_i, v, u_j)``.

All linear propagation works on stacked vectors ``(xi, eta)`` of length
``2m``; several states are propagated at once as the columns of a
``(2m, p)`` array.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import ConfigurationError, DomainError, IntegrationError, NormalizationError
from .geometry import (
    ChartPoint,
    MetricChart,
    _christoffel_from_jet,
    _curvature_from_jet,
    jacobi_operator,
    orthonormal_complement,
)

__all__ = [
    "PhasePoint",
    "JacobiState",
    "OrbitSegment",
    "integrate_geodesic",
    "parallel_frame",
    "JacobiSystem",
    "ConstantJacobiSystem",
    "ChartJacobiSystem",
    "CompositeSystem",
    "ReversedSystem",
    "propagate_jacobi",
    "transition_matrices",
    "symplectic_form",
    "symplectic_defect",
    "unit_velocity",
]


@dataclass(frozen=True, eq=False)
class PhasePoint:
    """Point of the unit tangent bundle in chart coordinates."""

    position: ChartPoint
    velocity: np.ndarray

    def __post_init__(self):
        if not isinstance(self.position, ChartPoint):
            object.__setattr__(self, "position", ChartPoint.from_coords(self.position))
        v = np.array(self.velocity, dtype=float).reshape(-1)
        v.setflags(write=False)
        object.__setattr__(self, "velocity", v)


@dataclass(frozen=True, eq=False)
class JacobiState:
    """Frame components ``xi`` of a Jacobi field and ``eta`` of its derivative."""

    xi: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        xi = np.array(self.xi, dtype=float).reshape(-1)
        eta = np.array(self.eta, dtype=float).reshape(-1)
        if xi.shape != eta.shape:
            raise ConfigurationError("xi and eta must have the same length")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "eta", eta)

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.xi, self.eta])

    @classmethod
    def from_vector(cls, y) -> "JacobiState":
        y = np.asarray(y, dtype=float)
        m = y.size // 2
        return cls(y[:m], y[m:])


def unit_velocity(chart: MetricChart, q, v) -> np.ndarray:
    """Rescale ``v`` to unit length for the metric at ``q``."""
    g = chart.evaluate(q)
    v = np.asarray(v, dtype=float)
    return v / np.sqrt(v @ g @ v)


@dataclass(eq=False)
class OrbitSegment:
    """Dense geodesic (with optional parallel frame) on ``[t0, t1]``.

    ``exit_reason`` is ``"end"`` when the requested time was reached,
    ``"tube"`` when the orbit left the box ``|x_i| < exit_radius`` and
    ``"chart"`` when it left the chart.
    """

    chart: MetricChart
    t0: float
    t1: float
    times: np.ndarray
    states: np.ndarray
    sol: object
    n: int
    with_frame: bool
    exit_reason: str = "end"
    exit_time: Optional[float] = None
    exit_index: Optional[int] = None
    energy_drift: float = 0.0
    frame_defect: float = 0.0

    def state(self, t):
        y = self.sol(t)
        n = self.n
        q, v = y[:n], y[n : 2 * n]
        U = y[2 * n :].reshape(n, n - 1) if self.with_frame else None
        return q, v, U

    @property
    def positions(self) -> np.ndarray:
        return self.states[:, : self.n]

    @property
    def velocities(self) -> np.ndarray:
        return self.states[:, self.n : 2 * self.n]

    @property
    def duration(self) -> float:
        return self.t1 - self.t0


def _geodesic_rhs(chart: MetricChart, n: int, with_frame: bool):
    m = n - 1

    def rhs(t, y):
        q, v = y[:n], y[n : 2 * n]
        g, dg, _ = chart.jet_raw(q, order=1)
        _, _, up = _christoffel_from_jet(g, dg)
        Gv = up @ v  # Gv[k, i] = Gamma^k_{ij} v^j
        out = np.empty_like(y)
        out[:n] = v
        out[n : 2 * n] = -Gv @ v
        if with_frame:
            U = y[2 * n :].reshape(n, m)
            out[2 * n :] = (-Gv @ U).ravel()
        return out

    return rhs


def integrate_geodesic(
    chart: MetricChart,
    start: PhasePoint,
    t_end: float,
    tol: float = 1e-9,
    *,
    frame0=None,
    with_frame: bool = True,
    exit_radius: Optional[float] = None,
    samples: int = 101,
    max_step: float = np.inf,
    t_start: float = 0.0,
) -> OrbitSegment:
    """Integrate the geodesic equation from ``start`` until ``t_end``.

    Parameters
    ----------
    chart : MetricChart
    start : PhasePoint
        Initial point; the velocity is used as given (expected unit length).
    t_end : float
        Final time.
    tol : float
        Relative and absolute tolerance of the RK45 integrator.
    frame0 : array, optional
        ``(n, n-1)`` initial frame; default completes ``v`` with the
        coordinate vectors by Gram-Schmidt.
    with_frame : bool
        Transport the frame along the geodesic.
    exit_radius : float, optional
        Stop when some ``|x_i|`` reaches this value.  The chart radius is
        always an exit.
    samples : int
        Number of stored sample times.
    """
    if not tol > 0:
        raise IntegrationError(f"tolerance must be positive, got {tol}")
    n = chart.dim
    q0 = start.position.coords
    v0 = np.asarray(start.velocity, dtype=float)
    if not chart.contains(q0):
        raise DomainError(f"start point {q0} outside chart")
    y0 = [q0, v0]
    if with_frame:
        if frame0 is None:
            frame0 = orthonormal_complement(chart.evaluate(q0), v0)
        frame0 = np.asarray(frame0, dtype=float)
        y0.append(frame0.ravel())
    y0 = np.concatenate(y0)

    events = []
    radii = [("chart", chart.radius * (1 - 1e-12))]
    if exit_radius is not None:
        radii.insert(0, ("tube", float(exit_radius)))
    labels = []
    for reason, rad in radii:
        for i in range(1, n):
            def ev(t, y, i=i, rad=rad):
                return rad - abs(y[i])
            ev.terminal = True
            ev.direction = -1
            events.append(ev)
            labels.append((reason, i))

    res = solve_ivp(
        _geodesic_rhs(chart, n, with_frame),
        (t_start, t_end),
        y0,
        method="RK45",
        rtol=tol,
        atol=tol,
        dense_output=True,
        events=events,
        max_step=max_step,
    )
    if res.status == -1:
        raise IntegrationError(res.message)
    t1 = float(res.t[-1])
    reason, exit_time, exit_index = "end", None, None
    if res.status == 1:
        hits = [(float(te[0]), k) for k, te in enumerate(res.t_events) if te.size]
        exit_time, k = min(hits)
        reason, exit_index = labels[k]
        t1 = exit_time
    times = np.linspace(t_start, t1, max(int(samples), 2))
    states = res.sol(times).T
    seg = OrbitSegment(
        chart=chart,
        t0=float(t_start),
        t1=t1,
        times=times,
        states=states,
        sol=res.sol,
        n=n,
        with_frame=with_frame,
        exit_reason=reason,
        exit_time=exit_time,
        exit_index=exit_index,
    )
    drift = 0.0
    defect = 0.0
    for y in states:
        q, v = y[:n], y[n : 2 * n]
        g = chart.metric(q) if chart.contains(q) else None
        if g is None:
            continue
        drift = max(drift, abs(v @ g @ v - 1.0))
        if with_frame:
            U = y[2 * n :].reshape(n, n - 1)
            W = np.column_stack([v, U])
            defect = max(defect, float(np.max(np.abs(W.T @ g @ W - np.eye(n)))))
    seg.energy_drift = drift
    seg.frame_defect = defect
    return seg


def parallel_frame(chart: MetricChart, segment: OrbitSegment, times=None, tol: float = 1e-10) -> np.ndarray:
    """Parallel frames at ``times`` (default: the segment samples).

    Returns an array of shape ``(len(times), n, n-1)``.  Segments integrated
    without a frame get one transported along their dense geodesic.
    """
    times = segment.times if times is None else np.asarray(times, dtype=float)
    n = segment.n
    m = n - 1
    if segment.with_frame:
        return np.stack([segment.state(t)[2] for t in times])
    q0, v0, _ = segment.state(segment.t0)
    U0 = orthonormal_complement(chart.evaluate(q0), v0)

    def rhs(t, y):
        q, v, _ = segment.state(t)
        g, dg, _ = chart.jet_raw(q, order=1)
        _, _, up = _christoffel_from_jet(g, dg)
        return (-(up @ v) @ y.reshape(n, m)).ravel()

    res = solve_ivp(rhs, (segment.t0, segment.t1), U0.ravel(), rtol=tol, atol=tol, dense_output=True)
    if res.status == -1:
        raise IntegrationError(res.message)
    return np.stack([res.sol(t).reshape(n, m) for t in times])


def symplectic_form(m: int) -> np.ndarray:
    """Matrix of the pairing ``xi . eta~ - eta . xi~`` on stacked states."""
    J = np.zeros((2 * m, 2 * m))
    J[:m, m:] = np.eye(m)
    J[m:, :m] = -np.eye(m)
    return J


def symplectic_defect(Phi: np.ndarray) -> float:
    m = Phi.shape[0] // 2
    J = symplectic_form(m)
    return float(np.max(np.abs(Phi.T @ J @ Phi - J)))


class JacobiSystem:
    """Linear system ``y' = A(t) y`` on stacked Jacobi states over ``[t0, t1]``."""

    dim: int
    t0: float = 0.0
    t1: float = np.inf

    def operator(self, t: float) -> np.ndarray:
        """Curvature operator ``K(t)``."""
        raise NotImplementedError

    def generator(self, t: float) -> np.ndarray:
        m = self.dim
        A = np.zeros((2 * m, 2 * m))
        A[:m, m:] = np.eye(m)
        A[m:, :m] = -self.operator(t)
        return A

    def _check_times(self, *ts):
        slack = 1e-9 * max(1.0, abs(self.t0), abs(self.t1) if np.isfinite(self.t1) else 1.0)
        for t in ts:
            if t < self.t0 - slack or t > self.t1 + slack:
                raise DomainError(f"time {t} outside system range [{self.t0}, {self.t1}]")

    def propagate(self, Y, ta: float, tb: float, tol: float = 1e-10):
        """Propagate states ``Y`` (``(2m,)`` or ``(2m, p)``) from ``ta`` to ``tb``."""
        return self.trajectory(Y, np.array([ta, tb]), tol)[-1]

    def trajectory(self, Y, times, tol: float = 1e-10):
        """States at each of ``times`` starting from ``Y`` at ``times[0]``."""
        Y = np.asarray(Y, dtype=float)
        times = np.asarray(times, dtype=float)
        self._check_times(times[0], times[-1])
        shape = Y.shape
        m = self.dim
        if shape[0] != 2 * m:
            raise ConfigurationError(f"state length {shape[0]} does not match system dimension {2 * m}")
        if times[0] == times[-1]:
            return np.repeat(Y[None], times.size, axis=0)
        p = 1 if Y.ndim == 1 else shape[1]

        def rhs(t, y):
            Z = y.reshape(2 * m, p)
            out = np.empty_like(Z)
            out[:m] = Z[m:]
            out[m:] = -self.operator(t) @ Z[:m]
            return out.ravel()

        res = solve_ivp(
            rhs,
            (times[0], times[-1]),
            Y.ravel(),
            method="RK45",
            t_eval=times,
            rtol=tol,
            atol=tol * 1e-2,
        )
        if res.status == -1:
            raise IntegrationError(res.message)
        return res.y.T.reshape((times.size,) + shape)

    def transition(self, ta: float, tb: float, tol: float = 1e-10) -> np.ndarray:
        return self.propagate(np.eye(2 * self.dim), ta, tb, tol)


class ConstantJacobiSystem(JacobiSystem):
    """Jacobi system with a constant curvature operator, solved by matrix exponentials."""

    def __init__(self, K, duration: float = np.inf, t0: float = 0.0):
        K = np.atleast_2d(np.asarray(K, dtype=float))
        self.K = 0.5 * (K + K.T)
        self.dim = K.shape[0]
        self.t0 = float(t0)
        self.t1 = float(t0 + duration)

    def operator(self, t):
        return self.K

    def trajectory(self, Y, times, tol: float = 1e-10):
        Y = np.asarray(Y, dtype=float)
        times = np.asarray(times, dtype=float)
        self._check_times(times[0], times[-1])
        if Y.shape[0] != 2 * self.dim:
            raise ConfigurationError(f"state length {Y.shape[0]} does not match system dimension {2 * self.dim}")
        A = self.generator(0.0)
        return np.stack([expm(A * (t - times[0])) @ Y for t in times])


class ChartJacobiSystem(JacobiSystem):
    """Jacobi system along an orbit segment of a chart, in its parallel frame.

    ``rotation`` is an optional orthogonal ``(m, m)`` matrix whose columns
    express the working frame in terms of the transported frame; the A-block
    of the working frame is its first columns.
    """

    def __init__(self, chart: MetricChart, segment: OrbitSegment, rotation=None):
        if not segment.with_frame:
            raise ConfigurationError("Jacobi propagation needs a segment integrated with its frame")
        self.chart = chart
        self.segment = segment
        self.dim = chart.dim - 1
        self.t0 = segment.t0
        self.t1 = segment.t1
        self.rotation = None if rotation is None else np.asarray(rotation, dtype=float)

    def frame(self, t):
        _, _, U = self.segment.state(t)
        return U if self.rotation is None else U @ self.rotation

    def operator(self, t):
        q, v, U = self.segment.state(t)
        if self.rotation is not None:
            U = U @ self.rotation
        g, dg, d2g = self.chart.jet_raw(q, order=2)
        _, low, up = _christoffel_from_jet(g, dg)
        R = _curvature_from_jet(d2g, low, up)
        return jacobi_operator(R, v, U)


class ReversedSystem(JacobiSystem):
    """Time reversal ``s -> Phi(t0 + t1 - tau)`` of a finite-time system."""

    def __init__(self, base: JacobiSystem):
        if not np.isfinite(base.t1):
            raise ConfigurationError("only finite-time systems can be reversed")
        self.base = base
        self.dim = base.dim
        self.t0, self.t1 = base.t0, base.t1

    def generator(self, t):
        return -self.base.generator(self.t0 + self.t1 - t)

    def trajectory(self, Y, times, tol: float = 1e-10):
        times = np.asarray(times, dtype=float)
        return self.base.trajectory(Y, self.t0 + self.t1 - times, tol)


class CompositeSystem(JacobiSystem):
    """Concatenation of systems with frame changes at the junctions.

    Part ``i`` runs for ``parts[i].t1 - parts[i].t0`` time units; global time
    starts at 0.  ``junctions[i]`` is the ``(m, m)`` orthogonal matrix whose
    columns give the frame of part ``i+1`` in the coordinates of part ``i``.
    """

    def __init__(self, parts: Sequence[JacobiSystem], junctions: Sequence = ()):
        parts = list(parts)
        if not parts:
            raise ConfigurationError("composite system needs at least one part")
        dims = {p.dim for p in parts}
        if len(dims) != 1:
            raise ConfigurationError(f"inconsistent frame dimensions {sorted(dims)}")
        if len(junctions) != len(parts) - 1:
            raise ConfigurationError("need one junction per pair of consecutive parts")
        self.parts = parts
        self.dim = parts[0].dim
        m = self.dim
        self.junctions = []
        for Q in junctions:
            Q = np.eye(m) if Q is None else np.asarray(Q, dtype=float)
            M = np.zeros((2 * m, 2 * m))
            M[:m, :m] = Q.T
            M[m:, m:] = Q.T
            self.junctions.append(M)
        durations = [p.t1 - p.t0 for p in parts]
        self.breaks = np.concatenate(([0.0], np.cumsum(durations)))
        self.t0, self.t1 = 0.0, float(self.breaks[-1])

    def _locate(self, t):
        i = int(np.searchsorted(self.breaks, t, side="right") - 1)
        return min(max(i, 0), len(self.parts) - 1)

    def generator(self, t):
        i = self._locate(t)
        p = self.parts[i]
        return p.generator(p.t0 + t - self.breaks[i])

    def operator(self, t):
        i = self._locate(t)
        p = self.parts[i]
        return p.operator(p.t0 + t - self.breaks[i])

    def trajectory(self, Y, times, tol: float = 1e-10):
        Y = np.asarray(Y, dtype=float)
        times = np.asarray(times, dtype=float)
        self._check_times(times.min(), times.max())
        out = []
        cur, tcur = Y, times[0]
        for t in times:
            cur = self._advance(cur, tcur, t, tol)
            tcur = t
            out.append(cur)
        return np.stack(out)

    def _advance(self, Y, ta, tb, tol):
        if ta == tb:
            return Y
        sign = 1 if tb > ta else -1
        t = ta
        while (tb - t) * sign > 0:
            i = self._locate(t) if sign > 0 else self._locate_left(t)
            lo, hi = self.breaks[i], self.breaks[i + 1]
            target = min(tb, hi) if sign > 0 else max(tb, lo)
            p = self.parts[i]
            Y = p.propagate(Y, p.t0 + t - lo, p.t0 + target - lo, tol)
            t = target
            if sign > 0 and t == hi and t < tb and i + 1 < len(self.parts):
                Y = self.junctions[i] @ Y
            if sign < 0 and t == lo and t > tb and i > 0:
                Y = self.junctions[i - 1].T @ Y
        return Y

    def _locate_left(self, t):
        i = int(np.searchsorted(self.breaks, t, side="left") - 1)
        return min(max(i, 0), len(self.parts) - 1)


def propagate_jacobi(
    chart: MetricChart,
    segment: OrbitSegment,
    s: JacobiState,
    t_end: Optional[float] = None,
    tol: float = 1e-10,
) -> JacobiState:
    """Propagate a Jacobi state along ``segment`` from its start to ``t_end``."""
    system = ChartJacobiSystem(chart, segment)
    t_end = segment.t1 if t_end is None else t_end
    y = system.propagate(s.vector, segment.t0, t_end, tol)
    return JacobiState.from_vector(y)


def transition_matrices(system: JacobiSystem, times, tol: float = 1e-10) -> np.ndarray:
    """Transition matrices between consecutive ``times``; shape ``(len-1, 2m, 2m)``."""
    times = np.asarray(times, dtype=float)
    Ys = system.trajectory(np.eye(2 * system.dim), times, tol)
    J = symplectic_form(system.dim)
    out = []
    for a, b in zip(Ys[:-1], Ys[1:]):
        inv_a = -J @ a.T @ J
        out.append(b @ inv_a)
    return np.stack(out)
