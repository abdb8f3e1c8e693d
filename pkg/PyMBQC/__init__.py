"""PyMBQC: correlation-function analysis of measurement-based quantum gates."""

__version__ = "0.1.0"

from .Correlator import (StabilizerProductForm, derive_pre_measurement_expression,
                         derive_target_expression, enumerate_branches,
                         gate_fidelity, ideal_resource_state,
                         post_measurement_expectation,
                         pre_measurement_expectation, resource_tomography,
                         stabilizer_product_form)
from .Errors import (ConfigError, ContradictionError, DenseSizeError,
                     DimensionError, MBQCError, NonHermitianError,
                     NumericalConsistencyError, PlanError,
                     StabilizerFormUnavailable, UnsupportedBackendError)
from .Experiment import (ExperimentConfig, run_csign_search, run_sweep,
                         run_tomography, run_verify)
from .GatePlans import (GatePlan, MeasurementStep, OutcomeRecord,
                        ParityFormula, concatenate, csign_plan,
                        diag_identity_plan_2d, hadamard_plan, identity_plan,
                        pi2_plan, plan_from_config, plan_to_config, zrot_plan)
from .Lattice import Graph, build_cluster, chain, lattice_region, perturb, square
from .OperatorExpression import OperatorExpression
from .PauliString import PauliString, commutes, multiply
from .StateVector import BranchEnsemble, StateVector, expectation
from .Tableau import Tableau

__all__ = [
    "BranchEnsemble",
    "ConfigError",
    "ContradictionError",
    "DenseSizeError",
    "DimensionError",
    "ExperimentConfig",
    "GatePlan",
    "Graph",
    "MBQCError",
    "MeasurementStep",
    "NonHermitianError",
    "NumericalConsistencyError",
    "OperatorExpression",
    "OutcomeRecord",
    "ParityFormula",
    "PauliString",
    "PlanError",
    "StabilizerFormUnavailable",
    "StabilizerProductForm",
    "StateVector",
    "Tableau",
    "UnsupportedBackendError",
    "build_cluster",
    "chain",
    "commutes",
    "concatenate",
    "csign_plan",
    "derive_pre_measurement_expression",
    "derive_target_expression",
    "diag_identity_plan_2d",
    "enumerate_branches",
    "expectation",
    "gate_fidelity",
    "hadamard_plan",
    "ideal_resource_state",
    "identity_plan",
    "lattice_region",
    "multiply",
    "perturb",
    "pi2_plan",
    "plan_from_config",
    "plan_to_config",
    "post_measurement_expectation",
    "pre_measurement_expectation",
    "resource_tomography",
    "run_csign_search",
    "run_sweep",
    "run_tomography",
    "run_verify",
    "square",
    "stabilizer_product_form",
    "zrot_plan",
    "__version__",
]
