"""Desk-scale laboratory for quasistatic brittle fracture.

Energy states on cracked meshes, the equilibrium/minimality order between
them, rate-independent crack evolution, and the configurational force
measures (release rates, concentration quotients, tip counts) that the
theory ties together.

Exports resolve lazily so that importing the package (in particular the
command line front end, which caps BLAS threads through the environment)
does not load the numerical stack as a side effect.
"""

import importlib

__version__ = "0.1.0"

_EXPORTS = {
    "geometry": (
        "CrackSet", "FlowMap", "GeometryError", "Mesh", "Region",
        "VectorField", "add_break_node", "ball_region",
        "build_interval_mesh", "build_rect_mesh", "build_slit_disk_mesh",
        "callable_field", "cells_region", "crack_from_path",
        "crack_from_paths", "dilate", "empty_crack", "extend_crack",
        "integrate_flow", "is_admissible_variation", "nodal_field",
        "read_mesh", "scale_field", "sum_field", "tip_extension_field",
        "tubular_region", "whole_region", "write_mesh", "zero_field"),
    "energetics": (
        "EnergeticsError", "EnergyBreakdown", "HypothesisReport",
        "MaterialSpec", "SurfaceEnergySpec", "check_h1", "check_h2",
        "check_h3", "density", "domain_polygon", "elastic_energy", "stress",
        "surface_energy", "total_energy", "validate_density"),
    "elastostatics": (
        "BoundaryDisplacement", "CrackedSpace", "ElastostaticsError",
        "State", "constant_boundary", "interpolate_state",
        "pushforward_state", "read_state", "residual_report",
        "solve_displacement", "write_state"),
    "states": (
        "AdmissibilityReport", "OrderWitness", "SearchCertificate",
        "StatesError", "candidate_extensions", "find_absolute_minimum",
        "is_admissible", "is_equilibrium", "leq"),
    "measures": (
        "CurvatureReport", "FamilySupEstimate", "MeasureEstimate",
        "MeasuresError", "QuotientReport", "ReleaseRateValue",
        "default_tip_family", "difference_quotient_er",
        "distance_to_boundary", "elastic_concentration",
        "energy_release_rate", "er_total_variation", "j_contour",
        "mean_curvature_residual", "perimeter_sup", "radius_ladder",
        "surface_concentration"),
    "quasistatic": (
        "AuditReport", "ChainReport", "CriticalLoadReport", "LoadSchedule",
        "QuasistaticError", "Trajectory", "TrajectoryStep", "audit_axioms",
        "critical_load_bisection", "evolve_equilibrium", "evolve_minimal",
        "verify_measure_chain"),
    "oracles": (
        "BarOracle", "BruteForceResult", "OracleError", "SlitDiskExact",
        "brute_force_absmin", "manufactured_slit_state", "oracle_1d"),
    "config": (
        "ConfigError", "ScenarioConfig", "compile_expression", "load_config",
        "parse_config"),
    "report": (
        "RunReport", "measure_dict", "write_csv", "write_report"),
    "scenarios": (
        "BatteryMember", "bar_state", "barrier_scenario", "disk_state",
        "growth_scenario", "hypothesis_sweep", "random_crack",
        "standard_battery", "tear_state", "threshold_scenario"),
}

_ATTR_MODULE = {name: mod for mod, names in _EXPORTS.items()
                for name in names}

__all__ = sorted(_ATTR_MODULE) + sorted(_EXPORTS)


def __getattr__(name):
    if name in _ATTR_MODULE:
        module = importlib.import_module(f".{_ATTR_MODULE[name]}", __name__)
        value = getattr(module, name)
        globals()[name] = value
        return value
    if name in _EXPORTS:
        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(set(globals()) | set(__all__))
