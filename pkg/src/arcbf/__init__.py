"""Adaptive robust CLF-CBF quadratic-program control.

Estimate an unknown additive input from sampled state measurements with a
provable error bound, feed the estimate plus the bound into robustified
CLF/CBF constraints, and solve a small QP for the control input. Ships a
dependency-free dense active-set QP solver, a multirate closed-loop
simulator, and an adaptive cruise control benchmark.
"""
from .bounds import (UncertaintyBounds, compute_gamma, compute_phi,
                     compute_theta, derive_bounds, gamma_table,
                     max_norm_over_box)
from .certificates import (Cbf, CertificateReport, Clf, LieData, lie_data,
                           psi_h, psi_v, validate_certificates,
                           verify_robust_certificates)
from .controllers import (ControlDecision, ControllerConfig,
                          InfeasibilityPolicy, Variant, assemble_qp,
                          constraint_rows, control_step, effective_gamma,
                          uncertainty_terms)
from .errors import (AdmissibleSetExit, ConfigurationError,
                     ContractViolationError, InvariantViolation,
                     OracleScopeError, QpInfeasibleError)
from .estimator import (EstimatorState, init_estimator, predictor_derivative,
                        sample_update)
from .model import (Box, ControlAffineModel, LipschitzData,
                    check_lipschitz_consistency)
from .qp import (DenseQp, QpSolution, QpStatus, brute_force_oracle,
                 kkt_residuals, solve_qp)
from .simulator import (SimConfig, SimulationTrace, check_trace_invariants,
                        compare_variants, read_trace_csv, run_simulation)
from .acc import (GAMMA_REFERENCE_T, GAMMA_REFERENCE_VALUE, AccParams,
                  AccSetup, LeadScenario, acc_bounds, build_acc_certificates,
                  build_acc_model, build_acc_setup, calibrated_eta,
                  default_scenario, direct_uncertainty_bound, stress_scenario,
                  verification_region, verification_theta)

__version__ = "0.1.0"

__all__ = [
    "GAMMA_REFERENCE_T", "GAMMA_REFERENCE_VALUE",
    "AccParams", "AccSetup", "AdmissibleSetExit", "Box", "Cbf",
    "CertificateReport", "Clf", "ConfigurationError", "ContractViolationError",
    "ControlAffineModel", "ControlDecision", "ControllerConfig", "DenseQp",
    "EstimatorState", "InfeasibilityPolicy", "InvariantViolation", "LeadScenario",
    "LieData", "LipschitzData", "OracleScopeError", "QpInfeasibleError",
    "QpSolution", "QpStatus", "SimConfig", "SimulationTrace",
    "UncertaintyBounds", "Variant", "acc_bounds", "assemble_qp",
    "brute_force_oracle", "build_acc_certificates", "build_acc_model",
    "build_acc_setup", "calibrated_eta", "check_lipschitz_consistency",
    "check_trace_invariants",
    "compare_variants", "compute_gamma", "compute_phi", "compute_theta",
    "constraint_rows", "control_step", "default_scenario", "derive_bounds",
    "direct_uncertainty_bound", "effective_gamma", "gamma_table",
    "init_estimator", "kkt_residuals", "lie_data", "max_norm_over_box",
    "predictor_derivative", "psi_h", "psi_v", "read_trace_csv",
    "run_simulation", "sample_update", "solve_qp", "stress_scenario",
    "uncertainty_terms", "validate_certificates", "verification_region",
    "verification_theta", "verify_robust_certificates",
]
