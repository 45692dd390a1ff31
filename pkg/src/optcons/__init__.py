"""Distributed optimal output consensus for heterogeneous uncertain nonlinear agents."""

from .costs import CostEnsemble, CostFunction, global_optimum, hessian_bounds, make_ensemble
from .generator import GeneratorGains, generator_equilibrium, generator_field, lyapunov_vo, select_gains
from .graph import ComplementBasis, Digraph, LaplacianReport, build_laplacian, complement_basis, example_digraph
from .scenario import build_scenario, load_json, shipped_scenario
from .sim import RunReport, Scenario, Trajectory, compute_metrics, rk4_step, run_closed_loop, simulate_generator

__all__ = [
    "ComplementBasis",
    "CostEnsemble",
    "CostFunction",
    "Digraph",
    "GeneratorGains",
    "LaplacianReport",
    "RunReport",
    "Scenario",
    "Trajectory",
    "build_laplacian",
    "build_scenario",
    "complement_basis",
    "compute_metrics",
    "example_digraph",
    "generator_equilibrium",
    "generator_field",
    "global_optimum",
    "hessian_bounds",
    "load_json",
    "lyapunov_vo",
    "make_ensemble",
    "rk4_step",
    "run_closed_loop",
    "select_gains",
    "shipped_scenario",
    "simulate_generator",
]
