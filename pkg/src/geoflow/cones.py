"""Cone quantities, growth rates and a dominated-splitting detector.

For a Jacobi state ``(xi, eta)`` in frame coordinates and an A-block index
set, the unstable cone quantity is

    Theta = 2 |P (xi, eta)|^2 / (|xi|^2 + |eta|^2)

where ``P`` projects each A-coordinate pair ``(xi_i, eta_i)`` onto the axis
line spanned by ``(1, s_i)``.  With unit slopes this is
``|Pr_A(xi + eta)|^2 / (|xi|^2 + |eta|^2)``; the stable side uses the axis
``(1, -s_i)``.  Theta is twice the squared cosine of the angle between the
state and the axis subspace, so it lies in ``[0, 2]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, NormalizationError, ParameterError
from .flow import JacobiState, JacobiSystem

__all__ = [
    "ConeSpec",
    "theta",
    "theta_batch",
    "theta_rate",
    "theta_derivative_numeric",
    "theta_derivative_symmetric",
    "sample_boundary_states",
    "rng_for",
    "GrowthFit",
    "strong_growth_rate",
    "growth_fits",
    "loglog_slope",
    "lyapunov_spectrum",
    "OrbitPlan",
    "SplittingVerdict",
    "detect_splitting",
]

SIDES = ("unstable", "stable")


@dataclass(frozen=True)
class ConeSpec:
    """Cone of opening ``c`` around the A-block axis on one side."""

    a_block: tuple
    c: float = 1.5
    side: str = "unstable"
    slopes: Optional[tuple] = None

    def __post_init__(self):
        block = tuple(int(i) for i in self.a_block)
        if not block or len(set(block)) != len(block) or min(block) < 0:
            raise ParameterError(f"invalid A-block {self.a_block}")
        object.__setattr__(self, "a_block", block)
        if not 1.0 < self.c < 2.0:
            raise ParameterError(f"cone opening must satisfy 1 < c < 2, got {self.c}")
        if self.side not in SIDES:
            raise ParameterError(f"side must be one of {SIDES}, got {self.side!r}")
        if self.slopes is not None:
            slopes = tuple(float(s) for s in self.slopes)
            if len(slopes) != len(block) or min(slopes) <= 0:
                raise ParameterError("need one positive slope per A-block index")
            object.__setattr__(self, "slopes", slopes)

    def with_(self, **kw) -> "ConeSpec":
        args = dict(a_block=self.a_block, c=self.c, side=self.side, slopes=self.slopes)
        args.update(kw)
        return ConeSpec(**args)

    def axis(self):
        """Unit axis components ``(a_i, b_i)`` so the projection is ``a xi_i + b eta_i``."""
        s = np.ones(len(self.a_block)) if self.slopes is None else np.asarray(self.slopes)
        sign = 1.0 if self.side == "unstable" else -1.0
        norm = np.sqrt(1.0 + s**2)
        return 1.0 / norm, sign * s / norm

    def check_dim(self, m: int):
        if max(self.a_block) >= m:
            raise ConfigurationError(f"A-block {self.a_block} does not fit a frame of dimension {m}")


def _as_batch(states):
    if isinstance(states, JacobiState):
        return states.vector[None, :], True
    X = np.asarray(states, dtype=float)
    if X.ndim == 1:
        return X[None, :], True
    return X, False


def _projection(X, spec: ConeSpec):
    m = X.shape[1] // 2
    spec.check_dim(m)
    a, b = spec.axis()
    idx = np.asarray(spec.a_block)
    return a * X[:, idx] + b * X[:, m + idx]


def theta_batch(X, spec: ConeSpec) -> np.ndarray:
    """Theta for each row of ``X`` (shape ``(N, 2m)``)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    N = np.einsum("ij,ij->i", X, X)
    if np.any(N == 0):
        raise DomainError("theta is undefined for the zero state")
    p = _projection(X, spec)
    return 2.0 * np.einsum("ij,ij->i", p, p) / N


def theta(s, spec: ConeSpec) -> float:
    """Cone quantity of a single state (JacobiState or stacked vector)."""
    X, _ = _as_batch(s)
    return float(theta_batch(X, spec)[0])


def theta_rate(system: JacobiSystem, t: float, X, spec: ConeSpec) -> np.ndarray:
    """Exact time derivative of Theta at time ``t`` from the system generator."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    dX = X @ system.generator(t).T
    N = np.einsum("ij,ij->i", X, X)
    dN = 2.0 * np.einsum("ij,ij->i", X, dX)
    p = _projection(X, spec)
    dp = _projection(dX, spec)
    P = np.einsum("ij,ij->i", p, p)
    dP = 2.0 * np.einsum("ij,ij->i", p, dp)
    return 2.0 * (dP * N - P * dN) / N**2


def theta_derivative_numeric(system: JacobiSystem, s, spec: ConeSpec, h: float = 1e-4, t: Optional[float] = None, tol: float = 1e-12):
    """Central-difference derivative of Theta along the flow.

    ``s`` is the state at time ``t`` (default ``system.t0 + h``); it may be a
    batch of stacked states, in which case an array is returned.
    """
    X, single = _as_batch(s)
    t = system.t0 + h if t is None else t
    fwd = system.transition(t, t + h, tol)
    bwd = system.transition(t, t - h, tol)
    d = (theta_batch(X @ fwd.T, spec) - theta_batch(X @ bwd.T, spec)) / (2 * h)
    return float(d[0]) if single else d


def theta_derivative_symmetric(s, spec: ConeSpec, weak_curvature: float = -0.25, tol: float = 1e-9):
    """Closed-form derivative of Theta for the rank-one symmetric model.

    With ``N = 1`` and unit slopes the unstable-side value is
    ``2 |xiA + etaA|^2 (|xiA - etaA|^2 + |xiB - 5/8 etaB|^2 + 39/64 |etaB|^2)``
    for weak curvature ``-1/4``; other weak curvatures ``k`` replace the
    bracket by ``|xiA - etaA|^2 + |xiB|^2 + |etaB|^2 - (1 - k) xiB . etaB``.
    The stable side follows from time reversal ``eta -> -eta``.
    """
    X, single = _as_batch(s)
    if spec.slopes is not None and not np.allclose(spec.slopes, 1.0):
        raise ParameterError("closed form needs unit axis slopes")
    m = X.shape[1] // 2
    spec.check_dim(m)
    N = np.einsum("ij,ij->i", X, X)
    if np.any(np.abs(N - 1.0) > tol):
        raise NormalizationError("closed-form derivative needs |xi|^2 + |eta|^2 = 1")
    sign = 1.0 if spec.side == "unstable" else -1.0
    xi, eta = X[:, :m], sign * X[:, m:]
    a = np.zeros(m, dtype=bool)
    a[list(spec.a_block)] = True
    xa, ea, xb, eb = xi[:, a], eta[:, a], xi[:, ~a], eta[:, ~a]
    P = np.sum((xa + ea) ** 2, axis=1)
    if weak_curvature == -0.25:
        Q = (
            np.sum((xa - ea) ** 2, axis=1)
            + np.sum((xb - 0.625 * eb) ** 2, axis=1)
            + (39.0 / 64.0) * np.sum(eb**2, axis=1)
        )
    else:
        Q = (
            np.sum((xa - ea) ** 2, axis=1)
            + np.sum(xb**2, axis=1)
            + np.sum(eb**2, axis=1)
            - (1.0 - weak_curvature) * np.sum(xb * eb, axis=1)
        )
    d = sign * 2.0 * P * Q / N**2
    return float(d[0]) if single else d


def rng_for(seed: int, task_id: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, task_id)``."""
    key = (int(task_id) << 64) | (int(seed) & ((1 << 64) - 1))
    return np.random.Generator(np.random.Philox(key=key))


def sample_boundary_states(spec: ConeSpec, m: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Unit states with ``Theta = c`` exactly, as rows of a ``(count, 2m)`` array.

    The axis part of the A-block is uniform on a sphere of squared radius
    ``c/2``; the remaining components (the A-block part orthogonal to the
    axis and both B-block halves) are uniform on a sphere of squared radius
    ``1 - c/2``.  The stable-side samples are the unstable ones with ``eta``
    negated.
    """
    spec.check_dim(m)
    idx = np.asarray(spec.a_block)
    r = idx.size
    rest_b = np.setdiff1d(np.arange(m), idx)
    axis = rng.standard_normal((count, r))
    axis *= np.sqrt(spec.c / 2.0) / np.linalg.norm(axis, axis=1, keepdims=True)
    rest_dim = r + 2 * rest_b.size
    rest = rng.standard_normal((count, rest_dim))
    rest *= np.sqrt(1.0 - spec.c / 2.0) / np.linalg.norm(rest, axis=1, keepdims=True)
    ortho = rest[:, :r]
    a, b = spec.with_(side="unstable").axis()
    X = np.zeros((count, 2 * m))
    # rotate (axis, ortho) back to (xi_i, eta_i); axis = (a, b), ortho = (b, -a)
    X[:, idx] = a * axis + b * ortho
    X[:, m + idx] = b * axis - a * ortho
    X[:, rest_b] = rest[:, r : r + rest_b.size]
    X[:, m + rest_b] = rest[:, r + rest_b.size :]
    if spec.side == "stable":
        X[:, m:] *= -1.0
    return X


@dataclass(frozen=True)
class GrowthFit:
    rate: float
    r_squared: float
    times: np.ndarray = field(repr=False)
    logs: np.ndarray = field(repr=False)


def _linear_fit(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), float(r2)


def strong_growth_rate(
    system: JacobiSystem,
    s,
    spec: Optional[ConeSpec] = None,
    t_end: float = 10.0,
    samples: int = 201,
    t0: Optional[float] = None,
    tol: float = 1e-10,
) -> GrowthFit:
    """Least-squares slope of ``log |P(xi, eta)|`` over ``[t0, t0 + t_end]``.

    With ``spec=None`` the full state norm is fitted instead.
    """
    t0 = system.t0 if t0 is None else t0
    if samples < 3 or not t_end > 0:
        raise ParameterError("growth fit needs at least three samples over a positive window")
    X, _ = _as_batch(s)
    times = np.linspace(t0, t0 + t_end, samples)
    traj = system.trajectory(X[0], times, tol)
    if spec is None:
        norms = np.linalg.norm(traj, axis=1)
    else:
        norms = np.linalg.norm(_projection(traj, spec), axis=1)
    if np.any(norms <= 0) or not np.all(np.isfinite(norms)):
        raise ParameterError("projected norm vanishes inside the fit window")
    logs = np.log(norms)
    rate, r2 = _linear_fit(times, logs)
    return GrowthFit(rate, r2, times, logs)


def growth_fits(
    system: JacobiSystem,
    X,
    spec: Optional[ConeSpec] = None,
    t_end: float = 10.0,
    samples: int = 201,
    t0: Optional[float] = None,
    tol: float = 1e-10,
) -> list:
    """Growth fits for every row of ``X`` from one propagated fundamental matrix.

    Same fit as :func:`strong_growth_rate`; preferable for many states on
    one orbit.
    """
    t0 = system.t0 if t0 is None else t0
    if samples < 3 or not t_end > 0:
        raise ParameterError("growth fit needs at least three samples over a positive window")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    times = np.linspace(t0, t0 + t_end, samples)
    Ys = system.trajectory(np.eye(2 * system.dim), times, tol)
    fits = []
    for x in X:
        traj = Ys @ x
        if spec is None:
            norms = np.linalg.norm(traj, axis=1)
        else:
            norms = np.linalg.norm(_projection(traj, spec), axis=1)
        if np.any(norms <= 0) or not np.all(np.isfinite(norms)):
            raise ParameterError("projected norm vanishes inside the fit window")
        logs = np.log(norms)
        rate, r2 = _linear_fit(times, logs)
        fits.append(GrowthFit(rate, r2, times, logs))
    return fits


def loglog_slope(system: JacobiSystem, s, t_start: float, t_end: float, samples: int = 101, tol: float = 1e-10) -> GrowthFit:
    """Slope of ``log |state|`` against ``log t`` over ``[t_start, t_end]`` (``t_start > 0``)."""
    if not 0 < t_start < t_end:
        raise ParameterError("log-log fit needs 0 < t_start < t_end")
    X, _ = _as_batch(s)
    times = np.concatenate(([system.t0], np.geomspace(t_start, t_end, samples)))
    traj = system.trajectory(X[0], times, tol)[1:]
    logs = np.log(np.linalg.norm(traj, axis=1))
    rate, r2 = _linear_fit(np.log(times[1:]), logs)
    return GrowthFit(rate, r2, times[1:], logs)


def lyapunov_spectrum(system: JacobiSystem, t_end: float, period: float = 0.5, t0: Optional[float] = None, tol: float = 1e-10) -> np.ndarray:
    """Finite-time exponents by periodic QR reorthonormalization, sorted descending."""
    t0 = system.t0 if t0 is None else t0
    if not period > 0 or not t_end > 0:
        raise ParameterError("exponent estimation needs positive period and duration")
    m2 = 2 * system.dim
    Q = np.eye(m2)
    logs = np.zeros(m2)
    steps = max(1, int(round(t_end / period)))
    dt = t_end / steps
    t = t0
    for _ in range(steps):
        Y = system.propagate(Q, t, t + dt, tol)
        Q, Rm = np.linalg.qr(Y)
        d = np.diag(Rm)
        logs += np.log(np.abs(d))
        Q = Q * np.sign(d)
        t += dt
    return np.sort(logs / t_end)[::-1]


@dataclass
class OrbitPlan:
    """One orbit of a detector sample plan.

    ``kind`` labels the start class (for instance parallel, theta-parallel,
    theta-transversal or outside).  ``spectrum_time`` > 0 requests exponent
    estimation over that duration from the start of the system.
    """

    system: JacobiSystem
    kind: str
    label: str = ""
    spectrum_time: float = 0.0


@dataclass
class SplittingVerdict:
    invariance_pass: bool
    min_margin: float
    min_boundary_rate: float
    unstable_rates: np.ndarray
    stable_rates: np.ndarray
    spectra: list
    min_gap: float
    central_min_abs: float
    label: str
    coverage: tuple
    margins: dict = field(default_factory=dict, repr=False)


def detect_splitting(
    plan: Sequence[OrbitPlan],
    spec: ConeSpec,
    openings: Sequence[float] = (1.1, 1.3, 1.5, 1.7, 1.9),
    window: float = 2.0,
    samples: int = 50,
    seed: int = 0,
    gap_tol: float = 0.05,
    central_tol: float = 0.1,
    period: float = 0.5,
    tol: float = 1e-10,
) -> SplittingVerdict:
    """Cone invariance, growth rates and exponent gaps over a sample plan.

    For every orbit and opening, boundary states at the orbit start must see
    Theta increase over ``window``.  Exponents come from QR iteration.  The
    label is ``no-domination`` if invariance fails or the gap between the
    ``|A|``-th and next exponent is at most ``gap_tol``; ``anosov-like`` if
    all remaining exponents stay beyond ``central_tol`` in absolute value;
    otherwise ``partially-hyperbolic``.
    """
    plan = list(plan)
    if not plan:
        raise ConfigurationError("empty sample plan")
    dims = {p.system.dim for p in plan}
    if len(dims) != 1:
        raise ConfigurationError(f"inconsistent frame dimensions {sorted(dims)}")
    m = dims.pop()
    spec.check_dim(m)
    r = len(spec.a_block)
    margins = {}
    min_margin = np.inf
    min_rate = np.inf
    urates, srates = [], []
    task = 0
    for oi, entry in enumerate(plan):
        sysm = entry.system
        t0 = sysm.t0
        if sysm.t1 - t0 < window - 1e-12:
            raise ConfigurationError(f"orbit {oi} is shorter than the invariance window")
        Phi = sysm.transition(t0, t0 + window, tol)
        for ci, c in enumerate(openings):
            for side in SIDES:
                cs = spec.with_(c=float(c), side=side)
                X = sample_boundary_states(cs, m, samples, rng_for(seed, task))
                task += 1
                if side == "unstable":
                    Y = X @ Phi.T
                    th0 = theta_batch(X, cs)
                    th1 = theta_batch(Y, cs)
                    rate0 = theta_rate(sysm, t0, X, cs)
                    min_rate = min(min_rate, float(rate0.min()))
                else:
                    # stable cones are forward invariant for the reversed flow
                    Y = np.linalg.solve(Phi, X.T).T
                    th0 = theta_batch(X, cs)
                    th1 = theta_batch(Y, cs)
                margin = th1 - th0
                margins[(oi, float(c), side)] = margin
                min_margin = min(min_margin, float(margin.min()))
        X = sample_boundary_states(spec.with_(side="unstable"), m, 1, rng_for(seed, task))
        task += 1
        urates.append(strong_growth_rate(sysm, X[0], spec.with_(side="unstable"), t_end=window, samples=21, tol=tol).rate)
        X = sample_boundary_states(spec.with_(side="stable"), m, 1, rng_for(seed, task))
        task += 1
        srates.append(strong_growth_rate(sysm, X[0], spec.with_(side="stable"), t_end=window, samples=21, tol=tol).rate)
    spectra = []
    gaps, central = [], []
    for entry in plan:
        if entry.spectrum_time > 0:
            lam = lyapunov_spectrum(entry.system, entry.spectrum_time, period, tol=tol)
            spectra.append(lam)
            gaps.append(min(lam[r - 1] - lam[r], lam[2 * m - r - 1] - lam[2 * m - r]))
            inner = lam[r : 2 * m - r]
            central.append(float(np.min(np.abs(inner))) if inner.size else np.inf)
    invariance = bool(min_margin > 0)
    min_gap = float(min(gaps)) if gaps else np.nan
    central_min = float(min(central)) if central else np.nan
    if not invariance or (gaps and min_gap <= gap_tol):
        label = "no-domination"
    elif central and central_min > central_tol:
        label = "anosov-like"
    else:
        label = "partially-hyperbolic"
    coverage = tuple(sorted({p.kind for p in plan}))
    return SplittingVerdict(
        invariance,
        float(min_margin),
        float(min_rate),
        np.asarray(urates),
        np.asarray(srates),
        spectra,
        min_gap,
        central_min,
        label,
        coverage,
        margins,
    )
