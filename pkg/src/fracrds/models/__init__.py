"""Discretized locally monotone models and their assumption checkers."""

from __future__ import annotations

from ..errors import ConfigError
from ._base import GelfandModel, NonautonomousForcing, TripleConstants
from .checks import (
    AssumptionReport,
    calibrate_growth_constant,
    check_assumptions,
    check_coercivity,
    check_embedding,
    check_growth,
    check_hemicontinuity,
    check_local_monotonicity,
    check_uniqueness_condition,
    eta_rho_eval,
    random_states,
)
from .linear import LinearModel, linear_apply
from .navier_stokes import NavierStokesModel
from .porous import PorousMediumModel, pme_apply

__all__ = [
    "GelfandModel",
    "NonautonomousForcing",
    "TripleConstants",
    "LinearModel",
    "PorousMediumModel",
    "NavierStokesModel",
    "linear_apply",
    "pme_apply",
    "nse_apply",
    "build_model",
    "AssumptionReport",
    "calibrate_growth_constant",
    "check_assumptions",
    "check_coercivity",
    "check_embedding",
    "check_growth",
    "check_hemicontinuity",
    "check_local_monotonicity",
    "check_uniqueness_condition",
    "eta_rho_eval",
    "random_states",
]


def nse_apply(model: NavierStokesModel, t: float, u):
    """nu Lap u + B(u, u) + P h(t) for a divergence-free spectral state."""
    return model.apply(t, u)


_MODEL_PARAMS = {
    "linear": {"a", "g"},
    "pme": {"n", "r"},
    "nse": {"N", "nu", "forcing_amplitude"},
}


def build_model(kind: str, params: dict | None = None) -> GelfandModel:
    """Construct a model from a configuration block ``{type, params}``."""
    params = dict(params or {})
    if kind not in _MODEL_PARAMS:
        raise ConfigError(f"unknown model type {kind!r}; expected one of {sorted(_MODEL_PARAMS)}")
    unknown = set(params) - _MODEL_PARAMS[kind]
    if unknown:
        raise ConfigError(f"unknown parameter(s) for model {kind!r}: {sorted(unknown)}")
    if kind == "linear":
        return LinearModel(**params)
    if kind == "pme":
        return PorousMediumModel(**params)
    amp = params.pop("forcing_amplitude", 0.0)
    model = NavierStokesModel(**params)
    if amp:
        model = model.with_forcing(model.cosine_forcing(amp))
    return model
