"""Model metrics: rank-one symmetric models, Fermi tube charts and products.

The orthonormal frame along the axis is ordered ``(e0, A-block, B-block)``
where ``e0`` is the axis direction, the A-block spans the curvature -1
directions and the B-block the curvature -1/4 directions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ParameterError
from .geometry import MetricChart

__all__ = [
    "SymmetricModel",
    "FermiTubeChart",
    "ProductModel",
    "model_curvature_tensor",
    "symmetric_chart",
    "euclidean_chart",
    "hyperbolic_plane_chart",
    "closed_form_jacobi",
    "product_jacobi_matrix",
]

STRONG_CURVATURE = -1.0
WEAK_CURVATURE = -0.25


@dataclass(frozen=True)
class SymmetricModel:
    """Rank-one symmetric model of dimension ``n`` with an A-block of size ``r``."""

    n: int
    r: int

    def __post_init__(self):
        if self.n < 2:
            raise ParameterError(f"model dimension must be >= 2, got {self.n}")
        if not 1 <= self.r <= self.n - 1:
            raise ParameterError(f"A-block size must satisfy 1 <= r <= n-1, got r={self.r}")

    @property
    def transverse_dim(self) -> int:
        return self.n - 1

    @property
    def eigenvalues(self) -> np.ndarray:
        """Jacobi operator eigenvalues along any unit geodesic, A-block first."""
        m = self.n - 1
        return np.where(np.arange(m) < self.r, STRONG_CURVATURE, WEAK_CURVATURE)

    def jacobi_matrix(self) -> np.ndarray:
        return np.diag(self.eigenvalues)

    @property
    def kind(self) -> str:
        if self.r == self.n - 1:
            return "real"
        if self.r == 1 and self.n % 2 == 0:
            return "complex"
        if self.r == 3 and self.n % 4 == 0:
            return "quaternionic"
        return "block"


def _kulkarni_nomizu(h, k):
    return (
        np.einsum("ik,jl->ijkl", h, k)
        + np.einsum("jl,ik->ijkl", h, k)
        - np.einsum("il,jk->ijkl", h, k)
        - np.einsum("jk,il->ijkl", h, k)
    )


def _complex_structures(model: SymmetricModel):
    n = model.n
    if model.kind == "complex":
        J = np.zeros((n, n))
        for p in range(0, n, 2):
            J[p + 1, p] = 1.0
            J[p, p + 1] = -1.0
        return [J]
    # left multiplication by i, j, k on quaternion blocks ordered (1, i, j, k)
    units = [
        np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], float),
        np.array([[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, -1, 0, 0]], float),
        np.array([[0, 0, 0, -1], [0, 0, -1, 0], [0, 1, 0, 0], [1, 0, 0, 0]], float),
    ]
    blocks = n // 4
    return [np.kron(np.eye(blocks), u) for u in units]


def model_curvature_tensor(model: SymmetricModel) -> np.ndarray:
    """Lowered curvature tensor of the model in the frame ``(e0, A, B)``.

    Real, complex and quaternionic models use the standard space-form tensors
    with maximal sectional curvature -1/4 and minimal -1.  Any other ``(n, r)``
    uses ``-g.g/8 - 3 g.P/4`` (Kulkarni-Nomizu products) with ``P`` the
    projector onto the A-block, which has the same Jacobi operator along ``e0``.
    """
    n = model.n
    g = np.eye(n)
    if model.kind == "real":
        return -0.5 * _kulkarni_nomizu(g, g)
    if model.kind == "block":
        P = np.zeros((n, n))
        P[1 : model.r + 1, 1 : model.r + 1] = np.eye(model.r)
        return -0.125 * _kulkarni_nomizu(g, g) - 0.75 * _kulkarni_nomizu(g, P)
    R = np.einsum("ik,jl->ijkl", g, g) - np.einsum("il,jk->ijkl", g, g)
    for J in _complex_structures(model):
        # entries <e_a, J e_b> = J[a, b]
        R = R + (
            np.einsum("ik,jl->ijkl", J, J)
            - np.einsum("il,jk->ijkl", J, J)
            + 2 * np.einsum("ij,kl->ijkl", J, J)
        )
    return -0.25 * R


@dataclass(frozen=True, eq=False)
class FermiTubeChart(MetricChart):
    """Second-order Fermi expansion of a model metric around a closed geodesic."""

    model: Optional[SymmetricModel] = None
    tensor: Optional[np.ndarray] = None


class _FermiJet:
    """Quadratic metric ``g(x) = I + C[a, b, k, l] x_k x_l`` and its derivatives."""

    def __init__(self, R: np.ndarray):
        n = R.shape[0]
        m = n - 1
        C = np.zeros((n, n, m, m))
        Rt = R[:, 1:, :, 1:]  # R[a, k, b, l] with transverse k, l
        C[0, 0] = -Rt[0, :, 0, :]
        for i in range(1, n):
            C[0, i] = C[i, 0] = -(2.0 / 3.0) * Rt[0, :, i, :]
            for j in range(1, n):
                C[i, j] = -(1.0 / 3.0) * Rt[i, :, j, :]
        C = 0.5 * (C + C.transpose(0, 1, 3, 2))
        self.n, self.m = n, m
        self.C = C
        self.flat = C.reshape(n * n, m, m)
        d2 = np.zeros((n, n, n, n))
        d2[1:, 1:] = 2.0 * C.transpose(2, 3, 0, 1)
        self.d2 = d2

    def metric(self, q):
        x = q[1:]
        return np.eye(self.n) + (self.flat @ x @ x).reshape(self.n, self.n)

    def __call__(self, q, order=2):
        x = q[1:]
        n = self.n
        Cx = self.flat @ x  # (n*n, m)
        g = np.eye(n) + (Cx @ x).reshape(n, n)
        dg = np.zeros((n, n, n))
        dg[1:] = 2.0 * Cx.T.reshape(self.m, n, n)
        return g, dg, (self.d2 if order >= 2 else None)


def symmetric_chart(model: SymmetricModel, T: float = 2 * np.pi, eps0: float = 0.5) -> FermiTubeChart:
    """Fermi tube chart of ``model`` around a closed geodesic of period ``T``.

    Components are the second-order Fermi expansion
    ``g00 = 1 - R_0k0l x_k x_l``, ``g0i = -2/3 R_0kil x_k x_l`` and
    ``gij = delta_ij - 1/3 R_ikjl x_k x_l``; they are exact on the axis up to
    second order and independent of ``t``.
    """
    if not eps0 > 0:
        raise ParameterError(f"chart radius must be positive, got {eps0}")
    if not T > 0:
        raise ParameterError(f"period must be positive, got {T}")
    R = model_curvature_tensor(model)
    jet = _FermiJet(R)
    return FermiTubeChart(
        dim=model.n,
        period=float(T),
        radius=float(eps0),
        metric=jet.metric,
        jet=jet,
        name=f"fermi-{model.kind}-n{model.n}-r{model.r}",
        model=model,
        tensor=R,
    )


def euclidean_chart(n: int, T: float = 2 * np.pi, radius: float = 1.0) -> MetricChart:
    """Flat chart with ``g = I``."""
    eye = np.eye(n)
    zeros1 = np.zeros((n, n, n))
    zeros2 = np.zeros((n, n, n, n))

    def metric(q):
        return eye.copy()

    def jet(q, order=2):
        return eye.copy(), zeros1, (zeros2 if order >= 2 else None)

    return MetricChart(n, float(T), float(radius), metric, jet, name=f"euclidean-n{n}")


def hyperbolic_plane_chart(T: float = 2 * np.pi, radius: float = 1.0, scale: float = 1.0) -> MetricChart:
    """Exact Fermi chart ``g = diag(cosh^2(x/L), 1)`` of curvature ``-1/L^2``."""
    L = float(scale)

    def metric(q):
        return np.diag([np.cosh(q[1] / L) ** 2, 1.0])

    def jet(q, order=2):
        u = q[1] / L
        g = np.diag([np.cosh(u) ** 2, 1.0])
        dg = np.zeros((2, 2, 2))
        dg[1, 0, 0] = np.sinh(2 * u) / L
        d2g = None
        if order >= 2:
            d2g = np.zeros((2, 2, 2, 2))
            d2g[1, 1, 0, 0] = 2 * np.cosh(2 * u) / L**2
        return g, dg, d2g

    return MetricChart(2, float(T), float(radius), metric, jet, name="hyperbolic-plane")


def closed_form_jacobi(rho: float, a: float, b: float, t):
    """Solution of ``f'' + rho f = 0`` with ``f(0) = a``, ``f'(0) = b``.

    Returns ``(value, derivative)`` at ``t`` (scalar or array).
    """
    t = np.asarray(t, dtype=float)
    if rho < 0:
        k = np.sqrt(-rho)
        c, s = np.cosh(k * t), np.sinh(k * t) / k
        dc, ds = k * np.sinh(k * t), np.cosh(k * t)
    elif rho == 0:
        c, s = np.ones_like(t), t
        dc, ds = np.zeros_like(t), np.ones_like(t)
    else:
        k = np.sqrt(rho)
        c, s = np.cos(k * t), np.sin(k * t) / k
        dc, ds = -k * np.sin(k * t), np.cos(k * t)
    value = a * c + b * s
    deriv = a * dc + b * ds
    if value.ndim == 0:
        return float(value), float(deriv)
    return value, deriv


@dataclass(frozen=True, eq=False)
class ProductModel:
    """Weighted product of two along-geodesic Jacobi systems.

    A unit geodesic of the product moves with speed ``alpha`` in the first
    factor and ``beta`` in the second, so the curvature operator in the
    factor frames is ``diag(alpha^2 K1, beta^2 K2)``.  With
    ``include_mixing`` the flat direction orthogonal to the geodesic inside
    the plane of the two factor velocities is appended as a last frame vector.
    """

    k1: np.ndarray
    k2: np.ndarray
    alpha: float
    beta: float
    include_mixing: bool = False
    a_block1: tuple = field(default=(0,))
    a_block2: tuple = field(default=(0,))

    def __post_init__(self):
        k1 = np.atleast_2d(np.asarray(self.k1, dtype=float))
        k2 = np.atleast_2d(np.asarray(self.k2, dtype=float))
        object.__setattr__(self, "k1", k1)
        object.__setattr__(self, "k2", k2)
        if abs(self.alpha**2 + self.beta**2 - 1.0) > 1e-12:
            raise ParameterError(
                f"weights must satisfy alpha^2 + beta^2 = 1, got {self.alpha**2 + self.beta**2!r}"
            )
        if k1.shape[0] != k1.shape[1] or k2.shape[0] != k2.shape[1]:
            raise ParameterError("factor Jacobi matrices must be square")

    @classmethod
    def of_models(cls, m1: SymmetricModel, m2: SymmetricModel, alpha: float, beta: float, **kw):
        return cls(
            m1.jacobi_matrix(),
            m2.jacobi_matrix(),
            alpha,
            beta,
            a_block1=tuple(range(m1.r)),
            a_block2=tuple(range(m2.r)),
            **kw,
        )

    @property
    def sizes(self):
        return self.k1.shape[0], self.k2.shape[0]

    @property
    def transverse_dim(self) -> int:
        m1, m2 = self.sizes
        return m1 + m2 + (1 if self.include_mixing else 0)

    def curvature_operator(self) -> np.ndarray:
        """Curvature operator in the frame ``(factor 1, factor 2[, mixing])``."""
        m1, m2 = self.sizes
        K = np.zeros((self.transverse_dim,) * 2)
        K[:m1, :m1] = self.alpha**2 * self.k1
        K[m1 : m1 + m2, m1 : m1 + m2] = self.beta**2 * self.k2
        return K

    def a_block(self) -> tuple:
        """Frame indices of the strong directions of both factors."""
        m1, _ = self.sizes
        return tuple(self.a_block1) + tuple(m1 + i for i in self.a_block2)

    def a_slopes(self) -> np.ndarray:
        """Unstable slopes ``eta/xi`` of the strong directions of both factors."""
        d1 = np.sqrt(np.maximum(-np.diag(self.k1), 0.0)) * abs(self.alpha)
        d2 = np.sqrt(np.maximum(-np.diag(self.k2), 0.0)) * abs(self.beta)
        return np.concatenate([d1[list(self.a_block1)], d2[list(self.a_block2)]])


def product_jacobi_matrix(p: ProductModel, t: float = 0.0) -> np.ndarray:
    """Generator of the product Jacobi system in the order ``(f1, f1', f2, f2')``.

    The system is autonomous, so ``t`` only documents the evaluation time.
    With ``include_mixing`` a trailing flat block ``(f3, f3')`` is appended.
    """
    m1, m2 = p.sizes
    blocks = [(m1, p.alpha**2 * p.k1), (m2, p.beta**2 * p.k2)]
    if p.include_mixing:
        blocks.append((1, np.zeros((1, 1))))
    size = 2 * sum(m for m, _ in blocks)
    M = np.zeros((size, size))
    off = 0
    for m, K in blocks:
        M[off : off + m, off + m : off + 2 * m] = np.eye(m)
        M[off + m : off + 2 * m, off : off + m] = -K
        off += 2 * m
    return M
