"""Orbit ensembles for tube experiments.

Starts are drawn in the box ``|x_i| < eps`` around the axis.  A start is
theta-transversal when some transverse velocity component has modulus at
least ``theta`` and theta-parallel when all are below ``theta``.  Tube
orbits are followed until they leave the box and are then continued by an
arc of the symmetric model, with the Jacobi frame re-aligned to the
curvature eigenspaces of the undeformed metric at the exit point.
"""
from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .errors import DomainError
from .flow import (
    ChartJacobiSystem,
    CompositeSystem,
    ConstantJacobiSystem,
    OrbitSegment,
    PhasePoint,
    integrate_geodesic,
)
from .geometry import (
    MetricChart,
    _christoffel_from_jet,
    _curvature_from_jet,
    jacobi_operator,
    orthonormal_complement,
)
from .models import SymmetricModel

__all__ = [
    "complete_velocity",
    "transversal_starts",
    "parallel_starts",
    "eigenframe_rotation",
    "TubeOrbit",
    "tube_orbit",
]


def complete_velocity(chart: MetricChart, q, vx) -> np.ndarray:
    """Unit velocity with transverse part ``vx`` and positive axis component."""
    g = chart.evaluate(q)
    vx = np.asarray(vx, dtype=float)
    a = g[0, 0]
    b = 2.0 * g[0, 1:] @ vx
    c = vx @ g[1:, 1:] @ vx - 1.0
    disc = b * b - 4 * a * c
    if disc < 0:
        raise DomainError("transverse velocity too large for a unit vector")
    v0 = (-b + np.sqrt(disc)) / (2 * a)
    return np.concatenate(([v0], vx))


def transversal_starts(n: int, r: int, eps: float, theta: float, count: int, rng, at_face: bool = False, offset: int = 0):
    """Theta-transversal starts ``(q, v_transverse)`` in the box of half-width ``eps``.

    The crossing coordinate alternates between the first A and first B
    direction; its velocity has modulus exactly ``theta`` and the other
    transverse velocities are below ``theta / 2``.  Even-numbered starts put
    the remaining B coordinates inside the deformation core ``|x_k| < eps^2``
    with small velocities.  With ``at_face`` the start sits on the face
    ``x_j = -sign(v_j) eps`` so that the orbit crosses the whole box.
    ``offset`` shifts the start numbering used for the alternation.
    """
    m = n - 1
    starts = []
    for i in range(offset, offset + count):
        j = 0 if (i // 2) % 2 == 0 or r == m else r
        x = rng.uniform(-0.95, 0.95, m) * eps
        vx = rng.uniform(-0.5, 0.5, m) * theta
        if i % 2 == 0:
            core = [k for k in range(r, m) if k != j]
            x[core] = rng.uniform(-0.9, 0.9, len(core)) * eps**2
            vx[core] = rng.uniform(-1.0, 1.0, len(core)) * eps * theta
        sign = 1.0 if rng.uniform() < 0.5 else -1.0
        vx[j] = sign * theta
        if at_face:
            x[j] = -sign * eps * (1.0 - 1e-9)
        q = np.concatenate(([rng.uniform(0.0, 1.0)], x))
        starts.append((q, vx))
    return starts


def parallel_starts(n: int, r: int, eps: float, theta: float, count: int, rng, offset: int = 0):
    """Theta-parallel starts: every transverse velocity is below ``theta``.

    Even-numbered starts put the B coordinates inside the deformation core.
    """
    m = n - 1
    starts = []
    for i in range(offset, offset + count):
        x = rng.uniform(-0.9, 0.9, m) * eps
        if i % 2 == 0:
            x[r:] = rng.uniform(-0.9, 0.9, m - r) * eps**2
        vx = rng.uniform(-1.0, 1.0, m) * theta
        q = np.concatenate(([rng.uniform(0.0, 1.0)], x))
        starts.append((q, vx))
    return starts


def eigenframe_rotation(chart: MetricChart, q, v, U) -> tuple:
    """Rotation aligning frame ``U`` with the eigenvectors of the Jacobi operator.

    Returns ``(Q, eigenvalues)`` with eigenvalues ascending, so the strongest
    negative curvature directions come first.
    """
    g, dg, d2g = chart.jet_raw(np.asarray(q, dtype=float), order=2)
    _, low, up = _christoffel_from_jet(g, dg)
    R = _curvature_from_jet(d2g, low, up)
    K = jacobi_operator(R, np.asarray(v, dtype=float), U)
    w, Q = np.linalg.eigh(K)
    return Q, w


@dataclass
class TubeOrbit:
    system: CompositeSystem
    segment: OrbitSegment
    exit_time: float
    exit_reason: str
    entry_eigenvalues: np.ndarray
    exit_eigenvalues: np.ndarray
    inside: ChartJacobiSystem


def tube_orbit(
    chart: MetricChart,
    base: MetricChart,
    model: SymmetricModel,
    q0,
    v0,
    exit_radius: float,
    outside_time: float,
    tol: float = 1e-9,
    max_inside: float = 50.0,
) -> TubeOrbit:
    """Tube crossing in ``chart`` followed by a model arc of length ``outside_time``.

    The Jacobi frame inside the tube is the parallel transport of the base
    metric's curvature eigenframe at the start; at the exit the frame is
    rotated onto the base eigenframe there, which matches the model's
    ``(A, B)`` ordering for the outside arc.
    """
    q0 = np.asarray(q0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    U0 = orthonormal_complement(chart.evaluate(q0), v0)
    Q0, w0 = eigenframe_rotation(base, q0, v0, U0)
    seg = integrate_geodesic(
        chart,
        PhasePoint(q0, v0),
        max_inside,
        tol,
        frame0=U0 @ Q0,
        exit_radius=exit_radius,
    )
    inside = ChartJacobiSystem(chart, seg)
    q1, v1, U1 = seg.state(seg.t1)
    Q1, w1 = eigenframe_rotation(base, q1, v1, U1)
    parts = [inside]
    junctions = []
    if outside_time > 0:
        parts.append(ConstantJacobiSystem(model.jacobi_matrix(), outside_time))
        junctions.append(Q1)
    system = CompositeSystem(parts, junctions)
    return TubeOrbit(system, seg, seg.t1 - seg.t0, seg.exit_reason, w0, w1, inside)
