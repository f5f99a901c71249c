"""Common contract for discretized Gelfand-triple models."""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import ConfigError

__all__ = ["TripleConstants", "GelfandModel", "NonautonomousForcing"]


@dataclass(frozen=True)
class TripleConstants:
    """Constants of the monotonicity, coercivity and growth inequalities.

    The single constant ``C`` of the textbook conditions is split by role:
    ``c_bound`` (coercivity), ``c_monotone`` (local monotonicity),
    ``c_growth`` (growth) and ``c_unique`` (eta + rho bound).  In the
    nonautonomous case ``gamma_coercive`` is ``c`` and ``k_coercive`` is the
    constant ``g``; the time-dependent ``f(t)`` lives on the model.
    """

    lambda_embed: float
    alpha: float
    gamma_coercive: float
    k_coercive: float = 0.0
    c_bound: float = 0.0
    varpi: float = 0.0
    vartheta: float = 0.0
    c_monotone: float = 0.0
    c_growth: float = 1.0
    c_unique: float = 0.0

    def __post_init__(self):
        if not self.lambda_embed > 0:
            raise ConfigError("lambda_embed must be positive")
        if not self.alpha >= 2:
            raise ConfigError(f"alpha must be >= 2, got {self.alpha}")
        if not self.gamma_coercive > 0:
            raise ConfigError("gamma_coercive must be positive")
        for name in ("k_coercive", "c_bound", "varpi", "vartheta",
                     "c_monotone", "c_growth", "c_unique"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative")
        if self.alpha == 2 and not self.k_coercive < self.gamma_coercive * self.lambda_embed:
            raise ConfigError(
                "alpha = 2 requires k_coercive < gamma_coercive * lambda_embed "
                f"({self.k_coercive} >= {self.gamma_coercive * self.lambda_embed})"
            )


@dataclass(frozen=True)
class NonautonomousForcing:
    """Scalar forcing envelope ``|f(t)|`` with an exponential-integrability certificate.

    The certificate is the pair (``bound``, ``rate``) asserting
    ``|f(r)| <= bound * exp(rate * |r|)`` for all r; then
    ``int_{-inf}^t |f(r)| e^{eta r} dr`` is finite for every ``eta > rate``.
    ``field`` optionally maps t to an H-state (the NSE body force).
    """

    envelope: Callable[[np.ndarray], np.ndarray]
    bound: float
    rate: float = 0.0
    field: Callable | None = None
    label: str = "custom"

    def __call__(self, t):
        return self.envelope(t)

    @classmethod
    def constant(cls, value: float) -> "NonautonomousForcing":
        v = abs(float(value))
        return cls(lambda t: np.full(np.shape(t), v) if np.ndim(t) else v, v, 0.0,
                   label=f"constant({v})")

    def certify(self, eta_grid, horizon: float = 100.0, samples: int = 4001) -> bool:
        """True when the envelope respects its bound on a sampled grid and
        every ``eta`` exceeds the growth rate."""
        etas = np.asarray(eta_grid, dtype=float)
        if np.any(etas <= 0):
            return False
        if np.any(etas <= self.rate):
            return False
        r = np.linspace(-horizon, horizon, samples)
        f = np.abs(np.asarray(self.envelope(r), dtype=float))
        if not np.all(np.isfinite(f)):
            return False
        return bool(np.all(f <= self.bound * np.exp(self.rate * np.abs(r)) * (1 + 1e-12)))


class GelfandModel(ABC):
    """Discretized operator ``A(t, u)`` on a finite-dimensional triple V, H, V*.

    States are arrays of shape ``state_shape``; every method also accepts a
    stack of states with extra leading axes and reduces over the trailing
    state axes.
    """

    name: str = "abstract"
    constants: TripleConstants
    state_shape: tuple[int, ...]
    dtype = float
    forcing: NonautonomousForcing | None = None

    # ---- operator ----------------------------------------------------
    @abstractmethod
    def apply(self, t: float, u: np.ndarray) -> np.ndarray:
        """A(t, u) as a representative of V* in state coordinates."""

    def jacobian(self, t: float, u: np.ndarray):
        """Dense derivative of ``apply`` (None when not available)."""
        return None

    @abstractmethod
    def imex_step(self, t: float, u: np.ndarray, z: float, dt: float) -> np.ndarray:
        """One linearly implicit step of the transformed equation.

        Starting from ``u`` at time t (where the transform factor is 1),
        returns the transformed state at t + dt, where the factor is ``z``.
        """

    # ---- geometry ----------------------------------------------------
    @abstractmethod
    def inner_h(self, u, v) -> np.ndarray: ...

    def norm_h(self, u):
        return np.sqrt(np.maximum(self.inner_h(u, u), 0.0))

    @abstractmethod
    def norm_v(self, u): ...

    @abstractmethod
    def dual_norm(self, F): ...

    def pairing(self, F, v):
        """Duality pairing; states of V* are represented in H coordinates."""
        return self.inner_h(F, v)

    def eta(self, u):
        return np.zeros(np.shape(u)[: np.ndim(u) - len(self.state_shape)])

    def rho(self, u):
        return np.zeros(np.shape(u)[: np.ndim(u) - len(self.state_shape)])

    # ---- time dependence ---------------------------------------------
    @property
    def is_autonomous(self) -> bool:
        return self.forcing is None

    def f(self, t):
        """Time-dependent coercivity term; 0 when autonomous."""
        return 0.0

    def coercive_bound(self, t):
        """Additive constant of the coercivity inequality at time t."""
        return self.constants.c_bound if self.is_autonomous else self.f(t)

    def monotone_bound(self, t):
        return self.constants.c_monotone if self.is_autonomous else self.f(t)

    def growth_floor(self, t):
        """First factor offset in the growth bound: 1, or f(t)."""
        return 1.0 if self.is_autonomous else self.f(t)

    # ---- sampling / io -----------------------------------------------
    @abstractmethod
    def random_state(self, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray: ...

    def validate_state(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=self.dtype)
        if u.shape[-len(self.state_shape):] != self.state_shape:
            raise ConfigError(f"state shape {u.shape} does not match {self.state_shape}")
        if not np.all(np.isfinite(u)):
            raise ConfigError("state has non-finite entries")
        return u

    def coefficients(self, u) -> np.ndarray:
        """Real coordinate vector for CSV dumps."""
        return np.asarray(u, dtype=float).ravel()

    def zero(self) -> np.ndarray:
        return np.zeros(self.state_shape, dtype=self.dtype)

    @property
    def dimension(self) -> int:
        return math.prod(self.state_shape)

    def describe(self) -> dict:
        return {"type": self.name, "dimension": self.dimension}


def _sum_trailing(x: np.ndarray, ndim: int) -> np.ndarray:
    return np.sum(x, axis=tuple(range(-ndim, 0)))
