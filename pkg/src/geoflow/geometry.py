"""Metric charts and pointwise tensor calculus.

A chart is a map from points ``q = (t, x_1, ..., x_{n-1})`` to symmetric
positive definite matrices.  The axis coordinate ``t`` is periodic and the
transverse coordinates are valid for ``|x_i| < radius``.

Index conventions
-----------------
``dg[a, i, j]``      first derivative  d_a g_ij
``d2g[a, b, i, j]``  second derivative d_a d_b g_ij
``lower[m, i, j]``   Christoffel symbol of the first kind  Gamma_{m, ij}
``upper[k, i, j]``   Christoffel symbol of the second kind Gamma^k_{ij}
``R[i, j, k, l]``    fully lowered curvature tensor, with sectional curvature
                     ``K(v, w) = R(v, w, v, w) / |v ^ w|^2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    DegenerateMetricError,
    DegeneratePlaneError,
    DomainError,
    NormalizationError,
    ParameterError,
    ToleranceError,
)

__all__ = [
    "ChartPoint",
    "MetricChart",
    "CurvatureData",
    "christoffel",
    "curvature_tensor",
    "sectional_curvature",
    "curvature_operator_matrix",
    "orthonormal_complement",
    "finite_difference_jet",
    "metric_inverse",
]

JetFunction = Callable[[np.ndarray, int], tuple]


@dataclass(frozen=True, eq=False)
class ChartPoint:
    """Point ``(t, x)`` of a tube chart."""

    t: float
    x: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float, copy=True).reshape(-1)
        x.setflags(write=False)
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", x)

    @property
    def coords(self) -> np.ndarray:
        """Concatenated coordinates ``(t, x_1, ..., x_{n-1})``."""
        return np.concatenate(([self.t], self.x))

    @classmethod
    def from_coords(cls, q) -> "ChartPoint":
        q = np.asarray(q, dtype=float)
        return cls(q[0], q[1:])


@dataclass(frozen=True, eq=False)
class MetricChart:
    """Coordinate chart carrying a Riemannian metric.

    Parameters
    ----------
    dim : int
        Manifold dimension ``n``.
    period : float
        Period ``T`` of the axis coordinate.
    radius : float
        Chart radius; transverse coordinates must satisfy ``|x_i| < radius``.
    metric : callable
        ``metric(q) -> (n, n)`` array for coordinates ``q`` of length ``n``.
    jet : callable, optional
        ``jet(q, order) -> (g, dg, d2g)`` with analytic derivatives up to
        ``order`` (entries beyond ``order`` may be None).  When absent,
        derivatives come from Richardson-extrapolated central differences.
    fd_step : float, optional
        Finite-difference step, default ``radius * 1e-3``.
    """

    dim: int
    period: float
    radius: float
    metric: Callable[[np.ndarray], np.ndarray]
    jet: Optional[JetFunction] = None
    name: str = "chart"
    fd_step: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 2:
            raise ParameterError(f"chart dimension must be >= 2, got {self.dim}")
        if not self.period > 0:
            raise ParameterError(f"period must be positive, got {self.period}")
        if not self.radius > 0:
            raise ParameterError(f"chart radius must be positive, got {self.radius}")

    @property
    def has_analytic_derivatives(self) -> bool:
        return self.jet is not None

    def contains(self, q) -> bool:
        q = np.asarray(q, dtype=float)
        return bool(np.all(np.abs(q[1:]) < self.radius))

    def _coords(self, p) -> np.ndarray:
        q = p.coords if isinstance(p, ChartPoint) else np.asarray(p, dtype=float)
        if q.shape != (self.dim,):
            raise DomainError(f"expected {self.dim} coordinates, got shape {q.shape}")
        if not np.all(np.isfinite(q)):
            raise DomainError("non-finite chart coordinates")
        if not self.contains(q):
            raise DomainError(
                f"point {q} outside chart radius {self.radius}"
            )
        q = q.copy()
        q[0] = q[0] % self.period
        return q

    def evaluate(self, p) -> np.ndarray:
        """Metric matrix at ``p`` (a ChartPoint or coordinate array)."""
        return np.asarray(self.metric(self._coords(p)), dtype=float)

    def jet_at(self, p, order: int = 2):
        """Return ``(g, dg, d2g)`` at ``p``; ``d2g`` is None when ``order < 2``."""
        return self.jet_raw(self._coords(p), order)

    def jet_raw(self, q, order: int = 2):
        """Like :meth:`jet_at` without the domain check (used inside integrators)."""
        if self.jet is not None:
            out = self.jet(q, order)
            g, dg = out[0], out[1]
            d2g = out[2] if order >= 2 else None
            return g, dg, d2g
        step = self.fd_step if self.fd_step is not None else self.radius * 1e-3
        return finite_difference_jet(self.metric, q, step, order=order)


@dataclass(frozen=True, eq=False)
class CurvatureData:
    """Christoffel symbols and (optionally) the curvature tensor at a point."""

    point: np.ndarray
    metric: np.ndarray
    metric_inv: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    curvature: Optional[np.ndarray] = None

    @property
    def christoffel(self) -> np.ndarray:
        """Christoffel symbols of the second kind ``upper[k, i, j]``."""
        return self.upper


def metric_inverse(g: np.ndarray) -> np.ndarray:
    """Invert a symmetric positive definite matrix through its Cholesky factor."""
    try:
        L = np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMetricError("metric is not positive definite") from exc
    Linv = np.linalg.inv(L)
    return Linv.T @ Linv


def finite_difference_jet(metric, q, h: float, order: int = 2, richardson: bool = True):
    """Central-difference derivatives of ``metric`` at ``q``.

    Parameters
    ----------
    metric : callable
        ``metric(q) -> (n, n)`` array.
    q : array_like
        Base point coordinates.
    h : float
        Step size.
    order : int
        1 for first derivatives only, 2 for first and second.
    richardson : bool
        Combine steps ``h`` and ``h/2`` to cancel the leading error term.

    Returns
    -------
    g, dg, d2g
    """
    q = np.asarray(q, dtype=float)
    n = q.size
    scale = max(1.0, float(np.max(np.abs(q))))
    if not h > 1e3 * np.finfo(float).eps * scale:
        raise ToleranceError(f"finite-difference step {h} underflows at this point")
    g0 = np.asarray(metric(q), dtype=float)
    eye = np.eye(n)

    def first(step):
        out = np.empty((n, n, n))
        for a in range(n):
            out[a] = (metric(q + step * eye[a]) - metric(q - step * eye[a])) / (2 * step)
        return out

    def second(step):
        out = np.empty((n, n, n, n))
        for a in range(n):
            ea = step * eye[a]
            out[a, a] = (metric(q + ea) - 2 * g0 + metric(q - ea)) / step**2
            for b in range(a + 1, n):
                eb = step * eye[b]
                val = (
                    metric(q + ea + eb)
                    - metric(q + ea - eb)
                    - metric(q - ea + eb)
                    + metric(q - ea - eb)
                ) / (4 * step**2)
                out[a, b] = val
                out[b, a] = val
        return out

    if richardson:
        dg = (4 * first(h / 2) - first(h)) / 3
    else:
        dg = first(h)
    d2g = None
    if order >= 2:
        d2g = (4 * second(h / 2) - second(h)) / 3 if richardson else second(h)
    return g0, dg, d2g


def _christoffel_from_jet(g, dg):
    ginv = metric_inverse(g)
    # lower[m, i, k] = 1/2 (d_i g_mk + d_k g_im - d_m g_ik)
    lower = 0.5 * (dg.transpose(1, 0, 2) + dg.transpose(2, 1, 0) - dg)
    upper = np.tensordot(ginv, lower, axes=(1, 0))
    return ginv, lower, upper


def _curvature_from_jet(d2g, lower, upper):
    second = (
        np.einsum("ikjl->ijkl", d2g)
        + np.einsum("jlik->ijkl", d2g)
        - np.einsum("iljk->ijkl", d2g)
        - np.einsum("jkil->ijkl", d2g)
    )
    quad = np.einsum("mik,mjl->ijkl", lower, upper)
    # quad[i, j, k, l] = Gamma_ik . g^-1 Gamma_jl; swapping k and l gives the second product
    return -0.5 * second - quad + quad.transpose(0, 1, 3, 2)


def christoffel(chart: MetricChart, p) -> CurvatureData:
    """Christoffel symbols of both kinds at ``p``."""
    g, dg, _ = chart.jet_at(p, order=1)
    ginv, lower, upper = _christoffel_from_jet(g, dg)
    q = p.coords if isinstance(p, ChartPoint) else np.asarray(p, dtype=float)
    return CurvatureData(q, g, ginv, lower, upper)


def curvature_tensor(chart: MetricChart, p) -> CurvatureData:
    """Christoffel symbols and the lowered curvature tensor at ``p``."""
    g, dg, d2g = chart.jet_at(p, order=2)
    ginv, lower, upper = _christoffel_from_jet(g, dg)
    R = _curvature_from_jet(d2g, lower, upper)
    q = p.coords if isinstance(p, ChartPoint) else np.asarray(p, dtype=float)
    return CurvatureData(q, g, ginv, lower, upper, R)


def sectional_curvature(chart: MetricChart, p, v, w) -> float:
    """Sectional curvature of the plane spanned by ``v`` and ``w``."""
    data = curvature_tensor(chart, p)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    g = data.metric
    gvv, gww, gvw = v @ g @ v, w @ g @ w, v @ g @ w
    area = gvv * gww - gvw**2
    if area <= 1e-14 * gvv * gww or gvv == 0 or gww == 0:
        raise DegeneratePlaneError("tangent vectors are linearly dependent")
    return float(np.einsum("ijkl,i,j,k,l->", data.curvature, v, w, v, w) / area)


def orthonormal_complement(g: np.ndarray, v: np.ndarray) -> np.ndarray:
    """g-orthonormal basis of the g-orthogonal complement of ``v``.

    Gram-Schmidt on the coordinate vectors ``e_1, ..., e_{n-1}`` after ``v``;
    returns an ``(n, n-1)`` array whose columns are the basis vectors.
    """
    n = g.shape[0]
    basis = [v / np.sqrt(v @ g @ v)]
    for i in range(1, n):
        u = np.zeros(n)
        u[i] = 1.0
        for b in basis:
            u = u - (b @ g @ u) * b
        norm2 = u @ g @ u
        if norm2 < 1e-20:
            raise DegeneratePlaneError("coordinate vectors do not complete the frame")
        basis.append(u / np.sqrt(norm2))
    return np.column_stack(basis[1:])


def jacobi_operator(R: np.ndarray, v: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """Matrix ``K_ij = R(v, u_i, v, u_j)`` for frame columns ``u_i``, symmetrized."""
    Rv = np.einsum("ijkl,i,k->jl", R, v, v)
    K = frame.T @ Rv @ frame
    return 0.5 * (K + K.T)


def curvature_operator_matrix(chart: MetricChart, p, v, frame=None, tol: float = 1e-8) -> np.ndarray:
    """Jacobi curvature operator along the unit vector ``v`` in a frame of ``v``-perp.

    Parameters
    ----------
    chart : MetricChart
    p : ChartPoint or array
    v : array_like
        Unit tangent vector (length ``n``).
    frame : array_like, optional
        ``(n, n-1)`` orthonormal frame of the complement of ``v``.  Defaults
        to :func:`orthonormal_complement` of the coordinate basis.
    tol : float
        Allowed deviation of ``g(v, v)`` from one.

    Returns
    -------
    K : (n-1, n-1) ndarray
        Symmetric matrix with ``K_ij = R(v, u_i, v, u_j)``.
    """
    data = curvature_tensor(chart, p)
    v = np.asarray(v, dtype=float)
    g = data.metric
    if abs(v @ g @ v - 1.0) > tol:
        raise NormalizationError(f"g(v, v) = {v @ g @ v!r} is not 1")
    if frame is None:
        frame = orthonormal_complement(g, v)
    return jacobi_operator(data.curvature, v, np.asarray(frame, dtype=float))
