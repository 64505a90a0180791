"""Numerical laboratory for partially hyperbolic geodesic flows.

Tube charts around a closed geodesic, a deformation flattening the weak
curvature on the axis, Jacobi-field propagation, cone criteria and
scenario reports.
"""
from .config import ScenarioConfig, load_config, parse_config, serialize_config
from .cones import ConeSpec, detect_splitting, theta, theta_derivative_numeric, theta_derivative_symmetric
from .deformation import BumpProfile, DeformationSpec, alpha_eval, check_estimates, check_F_bound, deformed_chart, profile_eval, solve_h_tau
from .flow import JacobiState, PhasePoint, integrate_geodesic, parallel_frame, propagate_jacobi
from .geometry import ChartPoint, MetricChart, christoffel, curvature_operator_matrix, curvature_tensor, sectional_curvature
from .models import ProductModel, SymmetricModel, closed_form_jacobi, product_jacobi_matrix, symmetric_chart
from .report import ScenarioReport, emit_report
from .scenarios import run_all, run_scenario

__version__ = "0.1.0"
