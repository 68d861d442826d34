"""Polyconvex physics-augmented neural network constitutive models.

Input-convex invariant networks for finite-strain hyperelasticity with
optional volumetric growth and stress/energy normalization, analytical
reference materials, dataset generation, Sobolev-style calibration of the
second Piola-Kirchhoff stress, and numerical verification utilities.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    AllZeroStressError,
    BracketFailureError,
    ConfigError,
    DatasetTooSmallError,
    DimensionMismatchError,
    EmptyDatasetError,
    FormatError,
    HypothesisViolatedWarning,
    NewtonDivergenceError,
    NonFiniteLossError,
    NonPositiveDeterminantError,
    NonPositiveInvariantError,
    PannError,
    SingularTensorError,
    SymmetryMismatchError,
)
from .tensor3 import Rotation3, SymTensor3, Tensor3
from .invariants import (
    InvariantSet,
    MaterialSymmetry,
    StructuralTensor,
    admissibility_gamma,
    compute_invariants,
    is_admissible,
)
from .icnn import NetworkArchitecture, NetworkParams, init_params
from .model import VARIANTS, PannModel, SimpleFP, SimpleFPParams, tangent_mandel
from .analytic import (
    DEFAULT_NEO_HOOKE,
    DEFAULT_TRANS_ISO,
    NeoHooke,
    NeoHookeParams,
    TransIsoParams,
    TransIsoReference,
)
from .loadcases import (
    LoadPoint,
    biaxial_path,
    shear_path,
    solve_biaxial,
    solve_uniaxial,
    uniaxial_path,
)
from .datagen import (
    Dataset,
    apply_noise,
    apply_offset,
    biaxial_data,
    filter_by_invariants,
    read_csv,
    sample_multiaxial,
    shear_data,
    split,
    uniaxial_data,
    write_csv,
)
from .calibrate import (
    CalibrationConfig,
    CalibrationResult,
    calibrate,
    calibrate_simple_fp,
    loss,
    loss_gradient,
)
from .verify import (
    ErrorStats,
    NonNegReport,
    gradient_audit,
    nonneg_scan_iso,
    nonneg_scan_transiso,
    relative_error,
    variant_ladder_study,
)
from ._kernels import BACKEND_NAME as KERNEL_BACKEND

__all__ = [
    "__version__",
    "KERNEL_BACKEND",
    # errors
    "PannError", "SingularTensorError", "NonPositiveDeterminantError",
    "NonPositiveInvariantError", "DimensionMismatchError",
    "BracketFailureError", "NewtonDivergenceError", "EmptyDatasetError",
    "DatasetTooSmallError", "AllZeroStressError", "NonFiniteLossError",
    "FormatError", "ConfigError", "SymmetryMismatchError",
    "HypothesisViolatedWarning",
    # tensors and invariants
    "SymTensor3", "Tensor3", "Rotation3",
    "StructuralTensor", "MaterialSymmetry", "InvariantSet",
    "compute_invariants", "admissibility_gamma", "is_admissible",
    # models
    "NetworkArchitecture", "NetworkParams", "init_params",
    "VARIANTS", "PannModel", "tangent_mandel",
    "NeoHooke", "NeoHookeParams", "TransIsoReference", "TransIsoParams",
    "SimpleFP", "SimpleFPParams", "DEFAULT_NEO_HOOKE", "DEFAULT_TRANS_ISO",
    # load cases and data
    "LoadPoint", "solve_uniaxial", "solve_biaxial",
    "uniaxial_path", "biaxial_path", "shear_path",
    "Dataset", "uniaxial_data", "biaxial_data", "shear_data",
    "sample_multiaxial", "apply_offset", "apply_noise", "split",
    "filter_by_invariants", "write_csv", "read_csv",
    # calibration
    "CalibrationConfig", "CalibrationResult", "calibrate",
    "calibrate_simple_fp", "loss", "loss_gradient",
    # verification
    "ErrorStats", "NonNegReport", "relative_error",
    "nonneg_scan_iso", "nonneg_scan_transiso", "gradient_audit",
    "variant_ladder_study",
]
