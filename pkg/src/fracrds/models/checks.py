"""
Sample-based checkers for the hemicontinuity, local monotonicity, coercivity
and growth inequalities, and for the eta + rho uniqueness bound.

Every checker returns a worst-case *slack* (nonnegative means the inequality
holds on the sample) except :func:`check_growth`, which returns the worst
ratio (<= 1 means it holds).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ._base import GelfandModel

__all__ = [
    "check_hemicontinuity",
    "check_local_monotonicity",
    "check_coercivity",
    "check_growth",
    "check_uniqueness_condition",
    "check_embedding",
    "eta_rho_eval",
    "calibrate_growth_constant",
    "AssumptionReport",
    "check_assumptions",
    "random_states",
]

HEMI_DELTA = 1e-10
HEMI_TOL = 1e-6


def _stack(model: GelfandModel, samples) -> np.ndarray:
    samples = list(samples) if not isinstance(samples, np.ndarray) else samples
    if len(samples) == 0:
        raise ConfigError("checker needs a nonempty sample")
    return np.stack([model.validate_state(s) for s in samples])


def random_states(model: GelfandModel, rng: np.random.Generator, count: int, scale: float = 1.0):
    return np.stack([model.random_state(rng, scale) for _ in range(count)])


def eta_rho_eval(model: GelfandModel, v) -> tuple[float, float]:
    return float(model.eta(v)), float(model.rho(v))


def check_coercivity(model: GelfandModel, t: float, samples) -> float:
    """min over v of ``-gamma |v|_V^alpha + K |v|_H^2 + C(t) - 2 <A(t,v), v>``."""
    v = _stack(model, samples)
    c = model.constants
    lhs = 2.0 * model.pairing(model.apply(t, v), v)
    rhs = (-c.gamma_coercive * model.norm_v(v) ** c.alpha
           + c.k_coercive * model.norm_h(v) ** 2 + model.coercive_bound(t))
    return float(np.min(rhs - lhs))


def check_growth(model: GelfandModel, t: float, samples, c_growth: float | None = None) -> float:
    """max over v of ``|A(t,v)|_{V*}^{a/(a-1)} / [C (floor + |v|_V^a)(1 + |v|_H^varpi)]``."""
    v = _stack(model, samples)
    c = model.constants
    C = c.c_growth if c_growth is None else c_growth
    a = c.alpha
    num = model.dual_norm(model.apply(t, v)) ** (a / (a - 1.0))
    den = C * (model.growth_floor(t) + model.norm_v(v) ** a) * (1.0 + model.norm_h(v) ** c.varpi)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(num == 0.0, 0.0, num / den)
    return float(np.max(ratio))


def calibrate_growth_constant(model: GelfandModel, t: float, pilot, margin: float = 1.1) -> float:
    """Smallest growth constant fitting a pilot sample, inflated by ``margin``."""
    return margin * check_growth(model, t, pilot, c_growth=1.0)


def check_local_monotonicity(model: GelfandModel, t: float, pairs) -> float:
    """min over (v1, v2) of ``(C(t) + eta(v1) + rho(v2)) |w|_H^2 - 2 <A v1 - A v2, w>``."""
    pairs = list(pairs)
    if not pairs:
        raise ConfigError("checker needs a nonempty sample")
    v1 = _stack(model, [p[0] for p in pairs])
    v2 = _stack(model, [p[1] for p in pairs])
    w = v1 - v2
    lhs = 2.0 * model.pairing(model.apply(t, v1) - model.apply(t, v2), w)
    rhs = (model.monotone_bound(t) + model.eta(v1) + model.rho(v2)) * model.norm_h(w) ** 2
    return float(np.min(rhs - lhs))


def check_hemicontinuity(model: GelfandModel, t: float, triples, delta: float = HEMI_DELTA,
                         tol: float = HEMI_TOL) -> float:
    """Finite-difference surrogate for continuity of ``s -> <A(v1 + s v2), v>``.

    For each triple the pairing is evaluated at s and s + delta (s drawn
    from {0, 0.5, 1}); the slack is ``tol * scale - |jump|`` with
    ``scale = 1 + |pairing at s|``.
    """
    triples = list(triples)
    if not triples:
        raise ConfigError("checker needs a nonempty sample")
    worst = np.inf
    for j, (v1, v2, v) in enumerate(triples):
        s = 0.5 * (j % 3)
        p0 = float(model.pairing(model.apply(t, v1 + s * v2), v))
        p1 = float(model.pairing(model.apply(t, v1 + (s + delta) * v2), v))
        worst = min(worst, tol * (1.0 + abs(p0)) - abs(p1 - p0))
    return float(worst)


def check_uniqueness_condition(model: GelfandModel, samples) -> float:
    """min over v of ``C (1 + |v|_V^a)(1 + |v|_H^vartheta) - eta(v) - rho(v)``."""
    v = _stack(model, samples)
    c = model.constants
    bound = (c.c_unique * (1.0 + model.norm_v(v) ** c.alpha)
             * (1.0 + model.norm_h(v) ** c.vartheta))
    return float(np.min(bound - model.eta(v) - model.rho(v)))


def check_embedding(model: GelfandModel, samples) -> float:
    """min over v of ``|v|_V^2 - lambda |v|_H^2``."""
    v = _stack(model, samples)
    return float(np.min(model.norm_v(v) ** 2 - model.constants.lambda_embed * model.norm_h(v) ** 2))


@dataclass(frozen=True)
class AssumptionReport:
    hemicontinuity: float
    local_monotonicity: float
    coercivity: float
    growth_slack: float
    uniqueness: float
    embedding: float

    def as_dict(self) -> dict:
        return {
            "A1_hemicontinuity_slack": self.hemicontinuity,
            "A2_local_monotonicity_slack": self.local_monotonicity,
            "A3_coercivity_slack": self.coercivity,
            "A4_growth_slack": self.growth_slack,
            "uniqueness_slack": self.uniqueness,
            "embedding_slack": self.embedding,
        }

    def passed(self, tol: float = 1e-10) -> bool:
        return all(v >= -tol for v in self.as_dict().values())


def check_assumptions(model: GelfandModel, t: float, rng: np.random.Generator,
                      count: int = 1000, scale: float = 1.0) -> AssumptionReport:
    """Run every checker on fresh random samples drawn from ``rng``.

    The growth slack is ``1 - ratio``, so all six fields share the
    "nonnegative means satisfied" convention.
    """
    a = random_states(model, rng, count, scale)
    b = random_states(model, rng, count, scale)
    c = random_states(model, rng, count, scale)
    return AssumptionReport(
        hemicontinuity=check_hemicontinuity(model, t, zip(a, b, c)),
        local_monotonicity=check_local_monotonicity(model, t, zip(a, b)),
        coercivity=check_coercivity(model, t, a),
        growth_slack=1.0 - check_growth(model, t, a),
        uniqueness=check_uniqueness_condition(model, a),
        embedding=check_embedding(model, a),
    )
