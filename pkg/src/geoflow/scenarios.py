"""Named experiments and their reports.

Every scenario is a pure function of its configuration: random draws come
from generators keyed by ``(seed, task id)`` and per-orbit work may run in
worker processes without changing any reported value.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .config import SCENARIOS, ScenarioConfig
from .cones import (
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
from .deformation import (
    BumpProfile,
    DeformationSpec,
    check_estimates,
    check_F_bound,
    deformed_chart,
    profile_eval,
)
from .ensembles import complete_velocity, parallel_starts, transversal_starts, tube_orbit
from .errors import UsageError
from .flow import (
    ChartJacobiSystem,
    ConstantJacobiSystem,
    PhasePoint,
    integrate_geodesic,
    transition_matrices,
)
from .geometry import ChartPoint, curvature_operator_matrix, curvature_tensor
from .models import ProductModel, SymmetricModel, product_jacobi_matrix, symmetric_chart
from .report import ScenarioReport, check, observe

__all__ = ["run_scenario", "run_all", "parallel_map", "resolve_jobs", "RUNNERS"]


def resolve_jobs(cli_jobs: Optional[int], config: ScenarioConfig) -> int:
    """Worker count: command line, then ``GEOFLOW_JOBS``, then the config."""
    if cli_jobs is not None:
        return max(1, int(cli_jobs))
    env = os.environ.get("GEOFLOW_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return config.jobs_count


def parallel_map(fn: Callable, tasks, jobs: int = 1) -> list:
    """Ordered map of ``fn(*task)``; worker processes when ``jobs > 1``."""
    tasks = list(tasks)
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as ex:
        return list(ex.map(fn, *zip(*tasks)))


def _tid(scenario: str, stream: int, index: int = 0) -> int:
    """Task id: scenario namespace, sub-stream and item index."""
    return ((SCENARIOS.index(scenario) + 1) << 40) + (stream << 20) + index


@lru_cache(maxsize=8)
def _base(n, r, period, radius):
    return symmetric_chart(SymmetricModel(n, r), period, radius)


@lru_cache(maxsize=32)
def _deformed(n, r, period, radius, eps, tau, amplitude, smoothing):
    spec = DeformationSpec(eps, n, r, tau, amplitude, smoothing)
    return deformed_chart(_base(n, r, period, radius), spec)


def base_chart(cfg: ScenarioConfig):
    return _base(cfg.dimension_count, cfg.a_block_count, cfg.period_time, cfg.epsilon_chart)


def tube_chart(cfg: ScenarioConfig, eps: Optional[float] = None):
    eps = cfg.epsilon_tube if eps is None else float(eps)
    return _deformed(
        cfg.dimension_count,
        cfg.a_block_count,
        cfg.period_time,
        cfg.epsilon_chart,
        eps,
        cfg.tau_ramp,
        cfg.amplitude_value,
        cfg.smoothing,
    )


def _model(cfg):
    return SymmetricModel(cfg.dimension_count, cfg.a_block_count)


def _a_block(cfg):
    return tuple(range(cfg.a_block_count))


def _axis_system(chart, duration, tol):
    n = chart.dim
    v = np.zeros(n)
    v[0] = 1.0
    seg = integrate_geodesic(chart, PhasePoint(np.zeros(n), v), duration, tol)
    return ChartJacobiSystem(chart, seg)


def _unit_states(rng, count, m):
    X = rng.standard_normal((count, 2 * m))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


# ---------------------------------------------------------------- scenarios


def symmetric_cones(cfg: ScenarioConfig, jobs: int = 1) -> ScenarioReport:
    name = "symmetric-cones"
    rep = ScenarioReport(name, cfg)
    m = cfg.dimension_count - 1
    block = _a_block(cfg)
    chart = base_chart(cfg)
    sysm = _axis_system(chart, max(cfg.monotone_time, 1.0) + 1.0, cfg.tol_relative)
    h = cfg.derivative_step_time
    tol = 1e-12

    if cfg.a_block_count == 1 and m == 3:
        a = 1.0 / np.sqrt(3.0)
        s = np.array([a, 0, 0, a, 0, a])
        spec = ConeSpec(block, cfg.cone_opening)
        rep.add(check("theta_example_value", theta(s, spec), 4.0 / 3.0, 1e-12, "abs", "DERIVED"))
        rep.add(check("theta_derivative_example_closed_form", theta_derivative_symmetric(s, spec), 8.0 / 9.0, 1e-12, "abs", "DERIVED"))
        rep.add(check("theta_derivative_example_numeric", theta_derivative_numeric(sysm, s, spec, h, tol=tol), 8.0 / 9.0, 1e-6, "abs", "DERIVED"))

    rng = rng_for(cfg.seed, _tid(name, 1))
    X = _unit_states(rng, cfg.oracle_samples_count, m)
    for side in ("unstable", "stable"):
        spec = ConeSpec(block, cfg.cone_opening, side)
        num = theta_derivative_numeric(sysm, X, spec, h, tol=tol)
        ref = theta_derivative_symmetric(X, spec)
        rep.add(check(f"oracle_max_abs_difference_{side}", float(np.max(np.abs(num - ref))), 0.0, 1e-5, "le", "DERIVED"))

    rates = rep.table("boundary_rates", ("opening", "min_closed_form", "min_numeric", "min_theta_increment"))
    times = np.linspace(0.0, cfg.monotone_time, 101)
    Ys = sysm.trajectory(np.eye(2 * m), times, tol)
    mono = rep.table("theta_monotone", ("opening", "time", "min_theta"))
    for ci, c in enumerate(cfg.cone_openings):
        spec = ConeSpec(block, c)
        X = sample_boundary_states(spec, m, cfg.samples_count, rng_for(cfg.seed, _tid(name, 2, ci)))
        closed = theta_derivative_symmetric(X, spec)
        num = theta_derivative_numeric(sysm, X, spec, h, tol=tol)
        rep.add(check(f"min_rate_closed_form_c{c:g}", float(closed.min()), 0.0, 0.0, "gt", "PAPER"))
        rep.add(check(f"min_rate_numeric_c{c:g}", float(num.min()), 0.0, 0.0, "gt", "PAPER"))
        th = np.stack([theta_batch(X @ Y.T, spec) for Y in Ys])
        inc = float(np.min(np.diff(th, axis=0)))
        rep.add(check(f"theta_nondecreasing_c{c:g}", inc, 0.0, 1e-10, "ge", "PAPER"))
        rates.add(c, float(closed.min()), float(num.min()), inc)
        for t, row in zip(times[::10], th[::10]):
            mono.add(c, float(t), float(row.min()))
    return rep


def eberlein_flat(cfg: ScenarioConfig, jobs: int = 1) -> ScenarioReport:
    name = "eberlein-flat"
    rep = ScenarioReport(name, cfg)
    n, r = cfg.dimension_count, cfg.a_block_count
    base = base_chart(cfg)
    chart = tube_chart(cfg)
    e0 = np.eye(n)[0]
    ts = np.linspace(0.0, cfg.period_time, cfg.axis_samples_count, endpoint=False)
    target_base = _model(cfg).jacobi_matrix()
    err_base = err_a = err_b = err_off = 0.0
    jet_g = jet_dg = gamma = 0.0
    series = rep.table("axis_operator", ("time", "strong_min", "weak_max_abs"))
    for t in ts:
        p = ChartPoint(t, np.zeros(n - 1))
        Kb = curvature_operator_matrix(base, p, e0)
        err_base = max(err_base, float(np.max(np.abs(Kb - target_base))))
        K = curvature_operator_matrix(chart, p, e0)
        d = np.diag(K)
        err_a = max(err_a, float(np.max(np.abs(d[:r] + 1.0))))
        err_b = max(err_b, float(np.max(np.abs(d[r:]))) if n - 1 > r else 0.0)
        err_off = max(err_off, float(np.max(np.abs(K - np.diag(d)))))
        g, dg, _ = chart.jet_at(p, order=1)
        jet_g = max(jet_g, float(np.max(np.abs(g - np.eye(n)))))
        jet_dg = max(jet_dg, float(np.max(np.abs(dg))))
        gamma = max(gamma, float(np.max(np.abs(curvature_tensor(chart, p).upper))))
        series.add(float(t), float(d[:r].min()), float(np.max(np.abs(d[r:]))) if n - 1 > r else 0.0)
    rep.add(check("base_axis_operator_error", err_base, 0.0, 1e-8, "le", "PAPER"))
    rep.add(check("weak_axis_curvature_max_abs", err_b, 0.0, 1e-8, "le", "PAPER"))
    rep.add(check("strong_axis_curvature_error", err_a, 0.0, 1e-8, "le", "PAPER"))
    rep.add(check("axis_operator_offdiagonal_max_abs", err_off, 0.0, 1e-8, "le", "PAPER"))
    rep.add(check("axis_metric_identity_error", jet_g, 0.0, 1e-10, "le", "PAPER"))
    rep.add(check("axis_metric_derivative_max_abs", jet_dg, 0.0, 1e-10, "le", "PAPER"))
    rep.add(check("axis_christoffel_max_abs", gamma, 0.0, 1e-10, "le", "PAPER"))

    eps2 = cfg.epsilon_tube**2
    bound = 0.5 * (1.0 + cfg.delta_slack)
    off = rep.table("weak_deformation", ("direction", "x", "curvature_change"))
    worst = 0.0
    for k in range(r, n - 1):
        for x in np.linspace(-0.999 * eps2, 0.999 * eps2, 101):
            xv = np.zeros(n - 1)
            xv[k] = x
            p = ChartPoint(0.0, xv)
            i = k + 1
            dR = curvature_tensor(chart, p).curvature[0, i, 0, i] - curvature_tensor(base, p).curvature[0, i, 0, i]
            worst = max(worst, abs(float(dR)))
            off.add(k + 1, float(x), float(dR))
    if n - 1 > r:
        rep.add(check("weak_curvature_change_max_abs", worst, bound, 0.0, "le", "DERIVED"))
    return rep


def central_bundle(cfg: ScenarioConfig, jobs: int = 1) -> ScenarioReport:
    name = "central-bundle"
    rep = ScenarioReport(name, cfg)
    n, r = cfg.dimension_count, cfg.a_block_count
    m = n - 1
    chart = tube_chart(cfg)
    tol = cfg.jacobi_tol_relative
    sysm = _axis_system(chart, max(cfg.loglog_end_time, cfg.t_end_time), cfg.tol_relative)
    times = np.linspace(0.0, cfg.t_end_time, 101)
    table = rep.table("central_growth", ("direction", "time", "xi_norm", "relative_error"))
    for k in range(r, m):
        y0 = np.zeros(2 * m)
        y0[m + k] = 1.0
        traj = sysm.trajectory(y0, times, tol)
        exact = np.zeros_like(traj)
        exact[:, k] = times
        exact[:, m + k] = 1.0
        rel = np.linalg.norm(traj - exact, axis=1) / np.linalg.norm(exact, axis=1)
        rep.add(check(f"linear_field_relative_error_k{k + 1}", float(rel.max()), 0.0, 1e-6, "le", "PAPER"))
        for t, y, e in zip(times[::5], traj[::5], rel[::5]):
            table.add(k + 1, float(t), float(np.linalg.norm(y[:m])), float(e))
        fit = loglog_slope(sysm, y0, cfg.loglog_start_time, cfg.loglog_end_time, tol=tol)
        rep.add(check(f"loglog_slope_k{k + 1}", fit.rate, 1.0, 0.05, "abs", "DERIVED"))

        z0 = np.zeros(2 * m)
        z0[k] = 1.0
        traj = sysm.trajectory(z0, times, tol)
        rep.add(check(f"constant_field_error_k{k + 1}", float(np.max(np.linalg.norm(traj - z0, axis=1))), 0.0, 1e-6, "le", "PAPER"))
        fit = strong_growth_rate(sysm, z0, None, cfg.t_end_time, tol=tol)
        rep.add(check(f"central_full_norm_rate_k{k + 1}", fit.rate, 0.0, 0.05, "abs", "PAPER"))

    spec = ConeSpec(_a_block(cfg), cfg.cone_opening)
    X = sample_boundary_states(spec, m, 1, rng_for(cfg.seed, _tid(name, 1)))
    fit = strong_growth_rate(sysm, X[0], spec, cfg.t_end_time, tol=tol)
    rep.add(check("strong_rate_on_axis", fit.rate, 1.0, 0.02, "abs", "PAPER"))
    return rep


def _parallel_task(cfg: ScenarioConfig, index: int) -> dict:
    chart = tube_chart(cfg)
    n, eps = cfg.dimension_count, cfg.epsilon_tube
    m = n - 1
    if index == 0:
        q = np.zeros(n)
        v = np.eye(n)[0]
    else:
        rng = rng_for(cfg.seed, _tid("parallel-cones", 1, index))
        q, vx = parallel_starts(n, cfg.a_block_count, eps, cfg.theta_parallel, 1, rng, offset=index)[0]
        v = complete_velocity(chart, q, vx)
    seg = integrate_geodesic(chart, PhasePoint(q, v), cfg.t_end_time, cfg.tol_relative, exit_radius=eps)
    sysm = ChartJacobiSystem(chart, seg)
    times = np.linspace(seg.t0, seg.t1, cfg.rate_times_count)
    out = {"exit_time": seg.t1 - seg.t0, "exit_reason": seg.exit_reason, "rates": []}
    for ci, c in enumerate(cfg.cone_openings):
        spec = ConeSpec(_a_block(cfg), c)
        X = sample_boundary_states(spec, m, cfg.orbit_states_count, rng_for(cfg.seed, _tid("parallel-cones", 2 + ci, index)))
        out["rates"].append(min(float(theta_rate(sysm, t, X, spec).min()) for t in times))
    return out


def parallel_cones(cfg: ScenarioConfig, jobs: int = 1) -> ScenarioReport:
    name = "parallel-cones"
    rep = ScenarioReport(name, cfg)
    tube_chart(cfg)
    res = parallel_map(_parallel_task, [(cfg, i) for i in range(cfg.parallel_orbits_count + 1)], jobs)
    table = rep.table("parallel_rates", ("orbit_id", "opening", "min_rate", "time_inside"))
    for i, out in enumerate(res):
        for c, rate in zip(cfg.cone_openings, out["rates"]):
            table.add(i, c, rate, out["exit_time"])
    for ci, c in enumerate(cfg.cone_openings):
        worst = min(out["rates"][ci] for out in res)
        rep.add(check(f"min_rate_inside_tube_c{c:g}", worst, 0.0, 0.0, "gt", "PAPER"))
    rep.add(observe("axis_orbit_min_rate", min(res[0]["rates"]), provenance="PAPER"))
    rep.add(observe("min_time_inside", min(out["exit_time"] for out in res)))
    return rep


def _crossing_task(cfg: ScenarioConfig, eps: float, index: int) -> tuple:
    chart = tube_chart(cfg, eps)
    n = cfg.dimension_count
    # keyed by index only: the same normalized start at every tube scale
    rng = rng_for(cfg.seed, _tid("crossing-time", 1, index))
    q, vx = transversal_starts(n, cfg.a_block_count, eps, cfg.theta_transverse, 1, rng, offset=index)[0]
    v = complete_velocity(chart, q, vx)
    seg = integrate_geodesic(chart, PhasePoint(q, v), cfg.t_end_time, cfg.tol_relative, with_frame=False, exit_radius=eps)
    return seg.t1 - seg.t0, seg.exit_reason


def crossing_time(cfg: ScenarioConfig, jobs: int = 1) -> ScenarioReport:
    name = "crossing-time"
    rep = ScenarioReport(name, cfg)
    eps_list = sorted(cfg.epsilon_crossing_list, reverse=True)
    for eps in eps_list:
        tube_chart(cfg, eps)
    tasks = [(cfg, eps, i) for eps in eps_list for i in range(cfg.crossing_orbits_count)]
    res = parallel_map(_crossing_task, tasks, jobs)
    table = rep.table("exit_times", ("epsilon", "orbit_id", "exit_time", "exit_reason"))
    E, T = [], []
    for (_, eps, i), (t, reason) in zip(tasks, res):
        table.add(eps, i, t, reason)
        E.append(eps)
        T.append(t)
    E, T = np.array(E), np.array(T)
    slope = float(np.polyfit(np.log(E), np.log(T), 1)[0])
    C = float(np.max(T / E))
    rep.add(check("exit_time_exponent", slope, 1.0, 0.1, "abs", "DERIVED"))
    rep.add(check("exit_time_constant", C, 2.0 / cfg.theta_transverse, 0.0, "le", "PAPER"))
    rep.add(check("all_orbits_exit_tube", int(sum(r == "tube" for _, r in res)), len(res), 0, "eq", "PAPER"))
    summary = rep.table("exit_time_summary", ("epsilon", "max_exit_time", "max_ratio"))
    for eps in eps_list:
        sel = E == eps
        summary.add(eps, float(T[sel].max()), float((T[sel] / eps).max()))
    return rep


def _tube_task(cfg: ScenarioConfig, eps: float, index: int, stream: int, outside: float) -> dict:
    chart = tube_chart(cfg, eps)
    n = cfg.dimension_count
    m = n - 1
    block = _a_block(cfg)
    rng = rng_for(cfg.seed, _tid("net-invariance", stream, index))
    q, vx = transversal_starts(n, cfg.a_block_count, eps, cfg.theta_transverse, 1, rng, at_face=True, offset=index)[0]
    v = complete_velocity(chart, q, vx)
    orbit = tube_orbit(chart, base_chart(cfg), _model(cfg), q, v, eps, outside, cfg.tol_relative)
    out = {"exit_time": orbit.exit_time, "exit_reason": orbit.exit_reason, "margins": [], "rates": []}
    tol = cfg.jacobi_tol_relative
    if outside > 0:
        Phi = orbit.system.transition(orbit.system.t0, orbit.system.t1, tol)
    inside = orbit.inside
    times = np.linspace(inside.t0, inside.t1, cfg.rate_times_count)
    for ci, c in enumerate(cfg.cone_openings):
        spec = ConeSpec(block, c)
        X = sample_boundary_states(spec, m, cfg.orbit_states_count, rng_for(cfg.seed, _tid("net-invariance", stream + 1 + ci, index)))
        if outside > 0:
            out["margins"].append(float(np.min(theta_batch(X @ Phi.T, spec) - theta_batch(X, spec))))
        else:
            out["rates"].append(min(float(theta_rate(inside, t, X, spec).min()) for t in times))
    return out


def net_invariance(cfg: ScenarioConfig, jobs: int = 1) -> ScenarioReport:
    name = "net-invariance"
    rep = ScenarioReport(name, cfg)
    openings = cfg.cone_openings
    arc = cfg.outside_arc_time

    tube_chart(cfg)
    res = parallel_map(_tube_task, [(cfg, cfg.epsilon_tube, i, 10, arc) for i in range(cfg.orbits_count)], jobs)
    table = rep.table("net_margins", ("epsilon", "orbit_id", "opening", "min_margin", "time_inside"))
    for i, out in enumerate(res):
        for c, mg in zip(openings, out["margins"]):
            table.add(cfg.epsilon_tube, i, c, mg, out["exit_time"])
    for ci, c in enumerate(openings):
        worst = min(out["margins"][ci] for out in res)
        rep.add(check(f"net_margin_min_c{c:g}", worst, 0.0, 0.0, "gt", "PAPER"))
    rep.add(check("all_orbits_exit_tube", sum(o["exit_reason"] == "tube" for o in res), len(res), 0, "eq", "PAPER"))
    rep.add(observe("max_time_inside", max(o["exit_time"] for o in res)))

    tube_chart(cfg, cfg.epsilon_large)
    big = parallel_map(_tube_task, [(cfg, cfg.epsilon_large, i, 30, arc) for i in range(cfg.orbits_large_count)], jobs)
    for i, out in enumerate(big):
        for c, mg in zip(openings, out["margins"]):
            table.add(cfg.epsilon_large, i, c, mg, out["exit_time"])
    flat = np.array([mg for out in big for mg in out["margins"]])
    rep.add(observe("large_tube_min_margin", float(flat.min())))
    rep.add(observe("large_tube_violation_fraction", float(np.mean(flat <= 0))))

    bound = rep.table("inside_rate_bound", ("epsilon", "orbit_id", "opening", "min_rate"))
    per_eps = []
    for eps in sorted(cfg.epsilon_bound_list, reverse=True):
        tube_chart(cfg, eps)
        out = parallel_map(_tube_task, [(cfg, eps, i, 50, 0.0) for i in range(cfg.crossing_orbits_count)], jobs)
        for i, o in enumerate(out):
            for c, rate in zip(openings, o["rates"]):
                bound.add(eps, i, c, rate)
        worst = min(min(o["rates"]) for o in out)
        per_eps.append(worst)
        rep.add(check(f"inside_rate_lower_bound_eps{eps:g}", worst, -cfg.bound_value, 0.0, "ge", "DERIVED"))
    rep.add(observe("inside_rate_bound_spread", float(max(per_eps) - min(per_eps))))
    return rep


def _detector_plan(cfg: ScenarioConfig, chart, eps: float):
    n = cfg.dimension_count
    model = _model(cfg)
    base = base_chart(cfg)
    axis = _axis_system(chart, cfg.spectrum_time, cfg.tol_relative)
    plan = [OrbitPlan(axis, "parallel", "axis", cfg.spectrum_time)]
    rng = rng_for(cfg.seed, _tid("strong-rates", 5))
    q, vx = parallel_starts(n, cfg.a_block_count, eps, cfg.theta_parallel, 1, rng)[0]
    o = tube_orbit(chart, base, model, q, complete_velocity(chart, q, vx), eps, cfg.window_time, cfg.tol_relative)
    plan.append(OrbitPlan(o.system, "theta-parallel"))
    q, vx = transversal_starts(n, cfg.a_block_count, eps, cfg.theta_transverse, 1, rng, at_face=True)[0]
    o = tube_orbit(chart, base, model, q, complete_velocity(chart, q, vx), eps, cfg.window_time, cfg.tol_relative)
    plan.append(OrbitPlan(o.system, "theta-transversal"))
    plan.append(OrbitPlan(ConstantJacobiSystem(model.jacobi_matrix(), cfg.window_time), "outside"))
    return plan


def _verdict_records(rep, tag, verdict, label, spectrum_expected=None):
    rep.add(check(f"{tag}_label", verdict.label, label, 0.0, "eq", "PAPER"))
    rep.add(observe(f"{tag}_min_margin", verdict.min_margin))
    rep.add(observe(f"{tag}_min_gap", verdict.min_gap))
    rep.add(observe(f"{tag}_central_min_abs", verdict.central_min_abs))
    if spectrum_expected is not None:
        err = float(np.max(np.abs(verdict.spectra[0] - spectrum_expected)))
        rep.add(check(f"{tag}_spectrum_error", err, 0.0, 0.03, "le", "DERIVED"))


def strong_rates(cfg: ScenarioConfig, jobs: int = 1) -> ScenarioReport:
    name = "strong-rates"
    rep = ScenarioReport(name, cfg)
    m = cfg.dimension_count - 1
    block = _a_block(cfg)
    tol = cfg.jacobi_tol_relative
    table = rep.table("strong_rates", ("orbit_id", "cone", "fitted_rate", "r_squared"))
    sysm = _axis_system(base_chart(cfg), cfg.t_end_time, cfg.tol_relative)
    for si, (side, target) in enumerate((("unstable", 1.0), ("stable", -1.0))):
        rng = rng_for(cfg.seed, _tid(name, 1 + si))
        cs = rng.uniform(cfg.cone_opening, 0.5 * (cfg.cone_opening + 2.0), cfg.rate_states_count)
        X = np.vstack([sample_boundary_states(ConeSpec(block, c, side), m, 1, rng) for c in cs])
        fits = growth_fits(sysm, X, ConeSpec(block, cfg.cone_opening, side), cfg.t_end_time, tol=tol)
        rates = np.array([f.rate for f in fits])
        for i, f in enumerate(fits):
            table.add(i, side, f.rate, f.r_squared)
        rep.add(check(f"{side}_rate_max_deviation", float(np.max(np.abs(rates - target))), 0.0, 0.02, "le", "PAPER"))

    spec = ConeSpec(block, cfg.cone_opening)
    sym = detect_splitting(
        _detector_plan(cfg, base_chart(cfg), cfg.epsilon_tube),
        spec,
        cfg.cone_openings,
        cfg.window_time,
        cfg.orbit_states_count,
        cfg.seed,
        cfg.gap_tol,
        cfg.central_tol,
        cfg.reortho_time,
        tol,
    )
    eig = np.sqrt(-_model(cfg).eigenvalues)
    expected = np.sort(np.concatenate([eig, -eig]))[::-1]
    _verdict_records(rep, "symmetric", sym, "anosov-like", expected)

    dv = detect_splitting(
        _detector_plan(cfg, tube_chart(cfg), cfg.epsilon_tube),
        spec,
        cfg.cone_openings,
        cfg.window_time,
        cfg.orbit_states_count,
        cfg.seed,
        cfg.gap_tol,
        cfg.central_tol,
        cfg.reortho_time,
        tol,
    )
    _verdict_records(rep, "deformed", dv, "partially-hyperbolic")
    rep.add(check("deformed_unstable_rates_deviation", float(np.max(np.abs(dv.unstable_rates - 1.0))), 0.0, 0.02, "le", "PAPER"))
    rep.add(check("deformed_stable_rates_deviation", float(np.max(np.abs(dv.stable_rates + 1.0))), 0.0, 0.02, "le", "PAPER"))
    rep.add(check("deformed_axis_central_max_abs", float(np.max(np.abs(dv.spectra[0][len(block) : 2 * m - len(block)]))), 0.0, 0.1, "le", "PAPER"))
    spectra = rep.table("spectra", ("metric", "index", "exponent"))
    for tag, v in (("symmetric", sym), ("deformed", dv)):
        for i, lam in enumerate(v.spectra[0]):
            spectra.add(tag, i, float(lam))
    return rep


def _strong_weak_rates(p: ProductModel):
    """Exact growth rates of the strong block and of the remaining directions."""
    rates = np.sqrt(np.maximum(-np.diag(p.curvature_operator()), 0.0))
    idx = list(p.a_block())
    return rates[idx], np.delete(rates, idx)


def _product_verdict(cfg, p: ProductModel):
    spec = ConeSpec(p.a_block(), cfg.cone_opening, slopes=tuple(p.a_slopes()))
    duration = max(cfg.product_spectrum_time, cfg.window_time)
    plan = [OrbitPlan(ConstantJacobiSystem(p.curvature_operator(), duration), "product", "", cfg.product_spectrum_time)]
    return detect_splitting(
        plan,
        spec,
        cfg.cone_openings,
        cfg.window_time,
        cfg.orbit_states_count,
        cfg.seed,
        cfg.gap_tol,
        cfg.central_tol,
        cfg.reortho_time,
        cfg.jacobi_tol_relative,
    )


def product_gap(cfg: ScenarioConfig, jobs: int = 1) -> ScenarioReport:
    name = "product-gap"
    rep = ScenarioReport(name, cfg)
    f1 = f2 = _model(cfg)
    alpha = cfg.product_alpha
    beta = float(np.sqrt(1.0 - alpha**2))
    p = ProductModel.of_models(f1, f2, alpha, beta)
    mu1 = np.sqrt(-f1.eigenvalues)
    expected = np.sort(np.concatenate([alpha * mu1, beta * mu1]))[::-1]

    ev = np.linalg.eigvals(product_jacobi_matrix(p))
    pos = np.sort(ev.real[ev.real > 0])[::-1]
    rep.add(check("assembled_rates_error", float(np.max(np.abs(pos - expected))), 0.0, 1e-12, "le", "DERIVED"))
    swapped = ProductModel.of_models(f2, f1, beta, alpha)
    ev2 = np.linalg.eigvals(product_jacobi_matrix(swapped))
    diff = np.max(np.abs(np.sort_complex(ev) - np.sort_complex(ev2)))
    rep.add(check("swap_invariance_error", float(diff), 0.0, 1e-12, "le", "DERIVED"))

    lam = lyapunov_spectrum(ConstantJacobiSystem(p.curvature_operator()), cfg.product_spectrum_time, cfg.reortho_time)
    full = np.sort(np.concatenate([expected, -expected]))[::-1]
    rep.add(check("qr_spectrum_error", float(np.max(np.abs(lam - full))), 0.0, 0.03, "le", "DERIVED"))
    spec_table = rep.table("spectrum", ("index", "qr_exponent", "expected"))
    for i, (a, b) in enumerate(zip(lam, full)):
        spec_table.add(i, float(a), float(b))

    collide = 2.0 / np.sqrt(5.0)
    for tag, a in (("alpha_twice_beta", collide), ("beta_twice_alpha", 1.0 / np.sqrt(5.0))):
        b = float(np.sqrt(1.0 - a**2))
        v = _product_verdict(cfg, ProductModel.of_models(f1, f2, a, b))
        rep.add(check(f"{tag}_label", v.label, "no-domination", 0.0, "eq", "DERIVED"))
        rep.add(observe(f"{tag}_min_gap", v.min_gap))
    v = _product_verdict(cfg, ProductModel.of_models(f1, f2, alpha, beta, include_mixing=True))
    rep.add(check("separated_label", v.label, "partially-hyperbolic", 0.0, "eq", "DERIVED"))
    rep.add(observe("separated_min_gap", v.min_gap))

    sweep = rep.table("gap_sweep", ("alpha", "beta", "strong_weak_margin", "level_separation"))
    for a in np.linspace(0.05, 0.95, 19):
        b = float(np.sqrt(1.0 - a**2))
        strong, weak = _strong_weak_rates(ProductModel.of_models(f1, f2, float(a), b))
        sep = float(np.min(np.abs(strong[:, None] - weak[None, :]))) if weak.size else float("inf")
        sweep.add(float(a), b, float(strong.min() - weak.max()) if weak.size else float("inf"), sep)
    return rep


def bump_bounds(cfg: ScenarioConfig, jobs: int = 1) -> ScenarioReport:
    name = "bump-bounds"
    rep = ScenarioReport(name, cfg)
    for tau in (0.0, 0.1, 0.25):
        v0, _, _ = profile_eval(BumpProfile(tau, 1.0, 0.0), 0.0)
        rep.add(check(f"calibrated_origin_tau{tau:g}", v0, -0.5, 1e-10, "abs", "PAPER"))
    lam = 0.1
    _, _, v2 = profile_eval(BumpProfile(0.0, lam, 0.0), 0.25 * lam)
    rep.add(check("plateau_second_derivative", v2, 2.0 / lam**2, 1e-9 / lam**2, "abs", "DERIVED"))

    ftab = rep.table("f_profile", ("tau", "u", "F"))
    for tau in cfg.tau_list:
        rel = cfg.smoothing
        prof = BumpProfile(tau) if rel is None else BumpProfile(tau, 1.0, rel)
        res = check_F_bound(prof, cfg.delta_slack, cfg.grid_count)
        rep.add(check(f"F_origin_tau{tau:g}", res.f_origin, -1.0, 1e-9, "abs", "PAPER"))
        rep.add(check(f"F_ratio_tau{tau:g}", res.max_ratio, res.bound, 0.0, "le", "PAPER"))
        rep.add(observe(f"smoothing_distance_tau{tau:g}", prof.smoothing_distance))
        u = np.linspace(0.0, 1.0, 101)
        a0, a1, a2 = prof.unit(u)
        for ui, F in zip(u, u**2 * a2 + 4 * u * a1 + 2 * a0):
            ftab.add(tau, float(ui), float(F))

    spec = DeformationSpec(
        cfg.epsilon_tube, cfg.dimension_count, cfg.a_block_count, cfg.tau_ramp, cfg.amplitude_value, cfg.smoothing
    )
    est = check_estimates(spec, cfg.epsilon_estimates_list)
    etab = rep.table("estimates", ("quantity", "epsilon", "maximum"))
    for q in est.quantities:
        rep.add(check(f"estimate_exponent_{q}", est.exponents[q], est.predicted[q], 0.2, "abs", "PAPER"))
        for e, mx in zip(est.epsilons, est.maxima[q]):
            etab.add(q, float(e), float(mx))
    rep.add(check("weak_second_derivative_ratio", est.weak_ratio, 1.5, 0.0, "le", "DERIVED"))
    rep.add(observe("estimate_constant", est.constant))
    return rep


RUNNERS = {
    "symmetric-cones": symmetric_cones,
    "eberlein-flat": eberlein_flat,
    "central-bundle": central_bundle,
    "parallel-cones": parallel_cones,
    "crossing-time": crossing_time,
    "net-invariance": net_invariance,
    "strong-rates": strong_rates,
    "product-gap": product_gap,
    "bump-bounds": bump_bounds,
}


def run_scenario(config: ScenarioConfig, name: Optional[str] = None, jobs: int = 1) -> ScenarioReport:
    """Run one named scenario (default: the configured one)."""
    name = config.scenario if name is None else name
    if name not in RUNNERS:
        raise UsageError(f"unknown scenario {name!r}; choose one of {', '.join(SCENARIOS)}")
    return RUNNERS[name](config.replace(scenario=name), jobs)


def run_all(config: ScenarioConfig, jobs: int = 1) -> list:
    return [run_scenario(config, name, jobs) for name in SCENARIOS]
