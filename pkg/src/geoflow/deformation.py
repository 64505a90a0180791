"""Bump profiles and the deformation of the tube metric.

The slope profile on ``[0, 1]`` rises linearly from 0 to ``h`` on ``(0, tau)``,
stays at ``h``, falls linearly to ``-h`` across ``1/2``, stays at ``-h`` and
returns to 0 on ``(1 - tau, 1)``.  Its double integral
``phi(u) = -int_u^1 int_0^s slope`` is the profile used to build the
deformation; ``phi'' = slope`` and ``phi(0) = -(h/4)(1 - 2 tau)``.

The deformation adds ``alpha(x) = sum_k x_k^2 Phi_k(x)`` to ``g00`` where
``k`` runs over the B-block and ``Phi_k`` is a product of rescaled profiles:
scale ``eps`` in the directions ``j != k`` and scale ``eps^2`` in direction
``k``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.interpolate import BPoly, PPoly

from .errors import DeformationTooLargeError, ParameterError
from .geometry import MetricChart

__all__ = [
    "solve_h_tau",
    "slope_profile",
    "BumpProfile",
    "profile_eval",
    "FBoundReport",
    "check_F_bound",
    "DeformationSpec",
    "alpha_eval",
    "alpha_jet",
    "EstimatesReport",
    "check_estimates",
    "DeformedChart",
    "deformed_chart",
]

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(40)


def solve_h_tau(tau: float) -> float:
    """Plateau height making the integrated profile equal -1/2 at the origin."""
    if not 0.0 <= tau < 0.5:
        raise ParameterError(f"ramp width must satisfy 0 <= tau < 1/2, got {tau}")
    return 2.0 / (1.0 - 2.0 * tau)


def slope_profile(h: float, tau: float) -> PPoly:
    """Piecewise-linear slope profile on ``[0, 1]`` as a PPoly."""
    if not 0.0 <= tau <= 0.25:
        raise ParameterError(f"slope profile needs 0 <= tau <= 1/4, got {tau}")
    if tau == 0.0:
        return PPoly(np.array([[h, -h]]), np.array([0.0, 0.5, 1.0]))
    knots = [0.0, tau, 0.5 - tau, 0.5 + tau, 1.0 - tau, 1.0]
    # (slope, left value) per piece
    pieces = [(h / tau, 0.0), (0.0, h), (-h / tau, h), (0.0, -h), (h / tau, -h)]
    xs, cs = [0.0], []
    for (a, b), (s, v) in zip(zip(knots[:-1], knots[1:]), pieces):
        if b - a <= 1e-15:
            continue
        xs.append(b)
        cs.append((s, v))
    c = np.array(cs).T
    return PPoly(c, np.array(xs))


def _exact_profile(h: float, tau: float):
    slope = slope_profile(h, tau)
    first = slope.antiderivative()
    second = first.antiderivative()
    total = float(second(1.0))
    phi = PPoly(second.c.copy(), second.x.copy())
    phi.c[-1] -= total
    return phi, first, slope


def _mollifier(z):
    out = np.zeros_like(z)
    inside = np.abs(z) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - z[inside] ** 2))
    return out


class _UnitProfile:
    """Profile on ``[0, 1]`` with value and two derivatives as PPolys.

    The profile is evaluated on ``|u|`` for an even extension and vanishes
    for ``|u| >= 1``.
    """

    def __init__(self, h: float, tau: float, s: float, cells: int = 4000):
        self.h, self.tau, self.s = h, tau, s
        exact = _exact_profile(h, tau)
        self.exact_origin = float(exact[0](0.0))
        if s == 0.0:
            self.pp = exact
            self.scale = 1.0
            self.smoothing_distance = 0.0
            return
        cells = max(cells, int(np.ceil(16.0 / s)))
        w = np.linspace(0.0, 1.0, cells + 1)
        y = (1.0 + s) * w
        vals = self._mollified(exact, y, s)
        scale = self.exact_origin / vals[0, 0]
        vals[0] *= scale
        vals[1] *= scale * (1.0 + s)
        vals[2] *= scale * (1.0 + s) ** 2
        vals[1, 0] = 0.0
        vals[:, -1] = 0.0
        bp = BPoly.from_derivatives(w, vals.T)
        phi = PPoly.from_bernstein_basis(bp)
        self.pp = (phi, phi.derivative(), phi.derivative(2))
        self.scale = scale
        grid = np.linspace(0.0, 1.0, 20001)
        self.smoothing_distance = float(
            max(np.max(np.abs(self.pp[k](grid) - exact[k](grid))) for k in range(3))
        )

    @staticmethod
    def _mollified(exact, y, s):
        knots = np.unique(np.concatenate([exact[0].x, -exact[0].x]))
        out = np.empty((3, y.size))
        for idx, yi in enumerate(y):
            cuts = yi - knots
            cuts = cuts[(cuts > -s) & (cuts < s)]
            edges = np.concatenate(([-s], np.sort(cuts), [s]))
            a, b = edges[:-1, None], edges[1:, None]
            z = (0.5 * (b - a) * _GAUSS_NODES + 0.5 * (a + b)).ravel()
            wts = (0.5 * (b - a) * _GAUSS_WEIGHTS).ravel() * _mollifier(z / s)
            wts /= wts.sum()
            arg = yi - z
            u = np.abs(arg)
            inside = u < 1.0
            sign = np.sign(arg)
            for k in range(3):
                vals = np.where(inside, exact[k](np.minimum(u, 1.0)), 0.0)
                if k == 1:
                    vals = vals * sign
                out[k, idx] = wts @ vals
        return out

    def __call__(self, u):
        """Value, first and second derivative at unit-scale arguments ``u``."""
        u = np.asarray(u, dtype=float)
        a = np.abs(u)
        inside = a < 1.0
        ac = np.minimum(a, 1.0)
        v0 = np.where(inside, self.pp[0](ac), 0.0)
        v1 = np.where(inside, self.pp[1](ac) * np.sign(u), 0.0)
        v2 = np.where(inside, self.pp[2](ac), 0.0)
        return v0, v1, v2


@lru_cache(maxsize=64)
def _unit_profile(h: float, tau: float, s: float) -> _UnitProfile:
    return _UnitProfile(h, tau, s)


def default_smoothing(tau: float) -> float:
    """Mollifier radius relative to the support scale."""
    return tau / 4.0 if tau > 0 else 0.01


@dataclass(frozen=True)
class BumpProfile:
    """Calibrated profile ``x -> phi(x / lam)`` with optional mollification.

    Parameters
    ----------
    tau : float
        Ramp width of the slope profile, ``0 <= tau <= 1/4``.
    lam : float
        Support scale.
    sigma : float, optional
        Mollifier radius in the units of ``x``; default ``tau * lam / 4``
        (``lam / 100`` when ``tau = 0``).  Zero gives the piecewise profile.
    h : float, optional
        Plateau height; default is the calibrated value from :func:`solve_h_tau`.
    """

    tau: float
    lam: float = 1.0
    sigma: Optional[float] = None
    h: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.tau <= 0.25:
            raise ParameterError(f"profile ramp width must satisfy 0 <= tau <= 1/4, got {self.tau}")
        if not self.lam > 0:
            raise ParameterError(f"support scale must be positive, got {self.lam}")
        if self.h is None:
            object.__setattr__(self, "h", solve_h_tau(self.tau))
        if self.sigma is None:
            object.__setattr__(self, "sigma", default_smoothing(self.tau) * self.lam)
        if self.sigma < 0 or self.sigma >= 0.5 * self.lam:
            raise ParameterError(f"smoothing radius must lie in [0, lam/2), got {self.sigma}")

    @property
    def unit(self) -> _UnitProfile:
        return _unit_profile(float(self.h), float(self.tau), float(self.sigma) / float(self.lam))

    @property
    def smoothing_distance(self) -> float:
        """Max C^2 distance (unit scale) between smoothed and piecewise profile."""
        return self.unit.smoothing_distance


def profile_eval(p: BumpProfile, x):
    """Profile value and first two derivatives at ``x`` (zero outside ``|x| < lam``)."""
    v0, v1, v2 = p.unit(np.asarray(x, dtype=float) / p.lam)
    v1 = v1 / p.lam
    v2 = v2 / p.lam**2
    if np.ndim(x) == 0:
        return float(v0), float(v1), float(v2)
    return v0, v1, v2


@dataclass(frozen=True)
class FBoundReport:
    tau: float
    sigma: float
    f_origin: float
    max_ratio: float
    bound: float
    argmax: float
    passed: bool


def check_F_bound(p: BumpProfile, delta: float, grid: int = 10000) -> FBoundReport:
    """Check ``max |F| <= 2 (1 + delta) |F(0)|`` with ``F = u^2 phi'' + 4 u phi' + 2 phi``.

    ``F`` is invariant under rescaling of the argument, so it is evaluated at
    unit scale on ``grid`` equispaced points of ``[0, 1]``.
    """
    if grid < 1000:
        raise ParameterError(f"F-bound grid needs at least 1000 points, got {grid}")
    if delta < 0:
        raise ParameterError(f"slack must be non-negative, got {delta}")
    u = np.linspace(0.0, 1.0, int(grid))
    v0, v1, v2 = p.unit(u)
    F = u**2 * v2 + 4 * u * v1 + 2 * v0
    f0 = float(F[0])
    ratio = np.abs(F) / abs(f0)
    i = int(np.argmax(ratio))
    bound = 2.0 * (1.0 + delta)
    passed = bool(ratio[i] <= bound * (1 + 1e-12) and abs(f0 + 1.0) <= 1e-9)
    return FBoundReport(p.tau, float(p.sigma), f0, float(ratio[i]), bound, float(u[i]), passed)


@dataclass(frozen=True)
class DeformationSpec:
    """Parameters of the deformation ``alpha``.

    ``smoothing`` is the mollifier radius relative to each profile's support
    scale (None selects the default).  ``amplitude`` multiplies every
    ``Phi_k``; with the factor normalization used here ``Phi_k(0) = -amplitude``.
    """

    epsilon: float
    n: int = 4
    r: int = 1
    tau: float = 0.01
    amplitude: float = 0.25
    smoothing: Optional[float] = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ParameterError(f"tube scale must be positive, got {self.epsilon}")
        if not 1 <= self.r <= self.n - 1:
            raise ParameterError(f"A-block size must satisfy 1 <= r <= n-1, got {self.r}")
        if self.epsilon >= 1.0:
            raise ParameterError("tube scale must be < 1 so that eps^2 < eps")

    @property
    def relative_smoothing(self) -> float:
        return default_smoothing(self.tau) if self.smoothing is None else float(self.smoothing)

    @property
    def transverse_profile(self) -> BumpProfile:
        e = self.epsilon
        return BumpProfile(self.tau, e, self.relative_smoothing * e)

    @property
    def own_profile(self) -> BumpProfile:
        e2 = self.epsilon**2
        return BumpProfile(self.tau, e2, self.relative_smoothing * e2)

    @property
    def b_block(self) -> range:
        """Transverse (0-based) indices of the B-block."""
        return range(self.r, self.n - 1)


def _product_jet(f0, f1, f2):
    """Product of per-coordinate factors with its gradient and Hessian."""
    N, m = f0.shape
    j = np.arange(m)
    P = np.prod(f0, axis=1)
    F = np.broadcast_to(f0, (m, N, m)).copy()
    F[j, :, j] = f1.T
    dP = np.prod(F, axis=2).T
    G = np.broadcast_to(f0, (m, m, N, m)).copy()
    G[j, :, :, j] = f1.T[:, None, :]
    G[:, j, :, j] = f1.T[:, None, :]
    G[j, j, :, j] = f2.T
    d2P = np.moveaxis(np.prod(G, axis=3), 2, 0)
    return P, dP, d2P


def alpha_jet(spec: DeformationSpec, X):
    """Value, gradient and Hessian of alpha in the transverse coordinates.

    Parameters
    ----------
    spec : DeformationSpec
    X : array_like, shape (N, n-1) or (n-1,)

    Returns
    -------
    a : (N,) array
    grad : (N, n-1) array
    hess : (N, n-1, n-1) array
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    N, m = X.shape
    e = spec.epsilon
    unit_t = spec.transverse_profile.unit
    unit_o = spec.own_profile.unit
    t0, t1, t2 = unit_t(X / e)
    t0, t1, t2 = -2 * t0, -2 * t1 / e, -2 * t2 / e**2
    o0, o1, o2 = unit_o(X / e**2)
    o0, o1, o2 = 2 * o0, 2 * o1 / e**2, 2 * o2 / e**4
    a = np.zeros(N)
    grad = np.zeros((N, m))
    hess = np.zeros((N, m, m))
    inside = np.abs(X) < e
    for k in spec.b_block:
        # the k-th term is supported where |x_k| < eps^2 and |x_j| < eps otherwise
        if not np.any(np.all(inside, axis=1) & (np.abs(X[:, k]) < e**2)):
            continue
        f0, f1, f2 = t0.copy(), t1.copy(), t2.copy()
        f0[:, k], f1[:, k], f2[:, k] = o0[:, k], o1[:, k], o2[:, k]
        P, dP, d2P = _product_jet(f0, f1, f2)
        xk = X[:, k]
        q = xk**2
        amp = spec.amplitude
        a += amp * q * P
        grad += amp * q[:, None] * dP
        grad[:, k] += amp * 2 * xk * P
        hess += amp * q[:, None, None] * d2P
        hess[:, k, :] += amp * 2 * xk[:, None] * dP
        hess[:, :, k] += amp * 2 * xk[:, None] * dP
        hess[:, k, k] += amp * 2 * P
    return a, grad, hess


def alpha_eval(spec: DeformationSpec, p):
    """``(alpha, gradient, Hessian)`` at a chart point in full ``(t, x)`` coordinates.

    The t-components vanish because alpha does not depend on ``t``.
    """
    q = p.coords if hasattr(p, "coords") else np.asarray(p, dtype=float)
    n = q.size
    a, g, H = alpha_jet(spec, q[1:][None, :])
    grad = np.zeros(n)
    grad[1:] = g[0]
    hess = np.zeros((n, n))
    hess[1:, 1:] = H[0]
    return float(a[0]), grad, hess


@dataclass
class EstimatesReport:
    """Scaling of alpha and its derivatives over a list of tube scales."""

    epsilons: np.ndarray
    maxima: dict
    exponents: dict
    predicted: dict
    constant: float
    weak_ratio: float

    quantities = ("alpha", "gradient", "mixed", "weak")


def _estimate_grid(eps: float, m: int, nodes: int):
    axis = np.unique(np.concatenate([np.linspace(0, eps, nodes), np.linspace(0, eps**2, nodes)]))
    axis = axis[axis < eps]
    mesh = np.meshgrid(*([axis] * m), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def check_estimates(spec: DeformationSpec, eps_list, nodes: Optional[int] = None) -> EstimatesReport:
    """Fit the power laws of max |alpha|, |d alpha|, mixed and weak second derivatives.

    The maxima are taken over a product grid adapted to both support scales;
    alpha is even in every coordinate so only the non-negative orthant is
    sampled.  Predicted exponents are 4, 2, 1 and 0.
    """
    eps_list = np.asarray(sorted(eps_list, reverse=True), dtype=float)
    if eps_list.size < 3:
        raise ParameterError("estimates need at least three tube scales")
    m = spec.n - 1
    if nodes is None:
        nodes = max(6, int(round(60000 ** (1.0 / m) / 2)))
    mixed_mask = np.ones((m, m), dtype=bool)
    for k in spec.b_block:
        mixed_mask[k, k] = False
    weak = list(spec.b_block)
    maxima = {q: [] for q in EstimatesReport.quantities}
    for eps in eps_list:
        sp = replace(spec, epsilon=float(eps))
        X = _estimate_grid(float(eps), m, nodes)
        a, g, H = alpha_jet(sp, X)
        maxima["alpha"].append(np.max(np.abs(a)))
        maxima["gradient"].append(np.max(np.abs(g)))
        maxima["mixed"].append(np.max(np.abs(H[:, mixed_mask])))
        maxima["weak"].append(np.max(np.abs(H[:, weak, weak])))
    predicted = {"alpha": 4.0, "gradient": 2.0, "mixed": 1.0, "weak": 0.0}
    exponents = {}
    constant = 0.0
    for name in EstimatesReport.quantities:
        vals = np.asarray(maxima[name])
        maxima[name] = vals
        exponents[name] = float(np.polyfit(np.log(eps_list), np.log(vals), 1)[0])
        constant = max(constant, float(np.max(vals / eps_list ** predicted[name])))
    w = maxima["weak"]
    return EstimatesReport(eps_list, maxima, exponents, predicted, constant, float(w.max() / w.min()))


@dataclass(frozen=True, eq=False)
class DeformedChart(MetricChart):
    """Tube chart whose ``g00`` component carries the deformation alpha."""

    base: Optional[MetricChart] = None
    spec: Optional[DeformationSpec] = None

    @property
    def model(self):
        return getattr(self.base, "model", None)


class _DeformedJet:
    def __init__(self, base: MetricChart, spec: DeformationSpec):
        self.base, self.spec = base, spec

    def metric(self, q):
        g = np.array(self.base.metric(q), dtype=float)
        a, _, _ = alpha_jet(self.spec, q[1:][None, :])
        g[0, 0] += a[0]
        return g

    def __call__(self, q, order=2):
        g, dg, d2g = self.base.jet_raw(q, order)
        g = np.array(g, dtype=float)
        dg = np.array(dg, dtype=float)
        a, grad, hess = alpha_jet(self.spec, q[1:][None, :])
        g[0, 0] += a[0]
        dg[1:, 0, 0] += grad[0]
        if order >= 2:
            d2g = np.array(d2g, dtype=float)
            d2g[1:, 1:, 0, 0] += hess[0]
        return g, dg, d2g


def deformed_chart(base: MetricChart, spec: DeformationSpec) -> DeformedChart:
    """Tube chart with ``g*00 = g00 + alpha`` and all other components unchanged."""
    if spec.n != base.dim:
        raise ParameterError(f"deformation dimension {spec.n} does not match chart dimension {base.dim}")
    model = getattr(base, "model", None)
    if model is not None and model.r != spec.r:
        raise ParameterError(f"deformation A-block size {spec.r} differs from model's {model.r}")
    if not spec.epsilon < base.radius:
        raise ParameterError(f"tube scale {spec.epsilon} must be below chart radius {base.radius}")
    jet = _DeformedJet(base, spec)
    e = spec.epsilon
    axis = np.array([0.0, 0.5 * e**2, 0.999 * e**2, 0.5 * e, 0.999 * e])
    axis = np.concatenate([-axis[1:], axis])
    m = base.dim - 1
    mesh = np.meshgrid(*([axis] * m), indexing="ij")
    X = np.stack([g.ravel() for g in mesh], axis=1)
    a, _, _ = alpha_jet(spec, X)
    for x, ax in zip(X, a):
        g = np.array(base.metric(np.concatenate(([0.0], x))), dtype=float)
        g[0, 0] += ax
        if np.linalg.eigvalsh(g)[0] <= 0:
            raise DeformationTooLargeError(
                f"deformed metric is not positive definite at x = {x}"
            )
    return DeformedChart(
        dim=base.dim,
        period=base.period,
        radius=base.radius,
        metric=jet.metric,
        jet=jet,
        name=f"deformed-{base.name}-eps{e:g}",
        base=base,
        spec=spec,
    )
