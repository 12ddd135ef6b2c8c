"""Uncertainty principles for homogeneous integral transforms, numerically certified."""
from .concentration import (
    ConcentrationPair,
    SetSpec,
    annihilation_constant,
    dilate_gram_independence,
    hs_norm_kernel,
    hs_norm_matrix,
    make_pair,
    op_norm,
    project_band,
    project_time,
    prolate_pairs,
    weighted_measure,
)
from .discretize import DiscreteOperator, Grid, assemble_forward, assemble_inverse, build_grid, plancherel_defect
from .estimators import ConcentrationOperator, IntegralTransformer, MissingDataRecovery
from .inequalities import (
    InequalityReport,
    c1_constant,
    c2_constant,
    global_constant,
    local_constant,
    verify_donoho_stark,
    verify_global,
    verify_local,
)
from .recovery import Observation, observe, reconstruct, stability_certificate
from .transforms import TransformSpec, kernel, measure_density

__version__ = "0.1.0"

__all__ = [
    "TransformSpec",
    "kernel",
    "measure_density",
    "Grid",
    "DiscreteOperator",
    "build_grid",
    "assemble_forward",
    "assemble_inverse",
    "plancherel_defect",
    "SetSpec",
    "ConcentrationPair",
    "make_pair",
    "weighted_measure",
    "project_time",
    "project_band",
    "hs_norm_kernel",
    "hs_norm_matrix",
    "op_norm",
    "annihilation_constant",
    "prolate_pairs",
    "dilate_gram_independence",
    "InequalityReport",
    "c1_constant",
    "c2_constant",
    "local_constant",
    "global_constant",
    "verify_local",
    "verify_global",
    "verify_donoho_stark",
    "Observation",
    "observe",
    "reconstruct",
    "stability_certificate",
    "IntegralTransformer",
    "ConcentrationOperator",
    "MissingDataRecovery",
]
