"""Pathwise numerics for SPDEs with linear multiplicative fractional noise."""

from __future__ import annotations

__version__ = "0.1.0"

from .attractor import (  # noqa: E402
    CocycleHandle,
    absorbing_radius_autonomous,
    absorbing_radius_nonautonomous,
    attractor_estimate,
    attractor_invariance_gap,
    cocycle_gap,
    hausdorff_semidist,
    pullback_evolve,
    temperedness_stat,
)
from .errors import ConfigError, FracRDSError, NumericalError  # noqa: E402
from .models import (  # noqa: E402
    LinearModel,
    NavierStokesModel,
    PorousMediumModel,
    build_model,
    check_assumptions,
)
from .noise import (  # noqa: E402
    HurstIndex,
    TwoSidedPath,
    build_two_sided_path,
    sample_fgn,
    shift_path,
)
from .solver import SolveConfig, equivalence_gap, solve  # noqa: E402
from .young import exp_transform, young_integral  # noqa: E402

__all__ = [
    "__version__",
    "CocycleHandle",
    "ConfigError",
    "FracRDSError",
    "HurstIndex",
    "LinearModel",
    "NavierStokesModel",
    "NumericalError",
    "PorousMediumModel",
    "SolveConfig",
    "TwoSidedPath",
    "absorbing_radius_autonomous",
    "absorbing_radius_nonautonomous",
    "attractor_estimate",
    "attractor_invariance_gap",
    "build_model",
    "build_two_sided_path",
    "check_assumptions",
    "cocycle_gap",
    "equivalence_gap",
    "exp_transform",
    "hausdorff_semidist",
    "pullback_evolve",
    "sample_fgn",
    "shift_path",
    "solve",
    "temperedness_stat",
    "young_integral",
]
