"""Scalar affine model A(u) = -a u + g, the analytic workhorse."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from ._base import GelfandModel, TripleConstants


def linear_apply(a: float, g: float, u):
    """-a u + g."""
    return -a * np.asarray(u, dtype=float) + g


class LinearModel(GelfandModel):
    """One-dimensional triple V = H = V* = R with A(u) = -a u + g.

    Constants: lambda = 1, alpha = 2, gamma = a, K = 0 and C = g**2 / a,
    since 2(-a u + g) u <= -a u**2 + g**2 / a.  The growth constant
    ``2 max(a**2, g**2)`` follows from (a u - g)**2 <= 2 a**2 u**2 + 2 g**2.
    """

    name = "linear"

    def __init__(self, a: float = 1.0, g: float = 0.0):
        if not a > 0:
            raise ConfigError(f"linear model needs a > 0, got {a}")
        self.a = float(a)
        self.g = float(g)
        self.state_shape = (1,)
        self.constants = TripleConstants(
            lambda_embed=1.0,
            alpha=2.0,
            gamma_coercive=self.a,
            k_coercive=0.0,
            c_bound=self.g**2 / self.a,
            c_monotone=0.0,
            c_growth=2.0 * max(self.a**2, self.g**2),
            c_unique=0.0,
        )

    def apply(self, t, u):
        return -self.a * u + self.g

    def jacobian(self, t, u):
        return np.array([[-self.a]])

    def imex_step(self, t, u, z, dt):
        # backward Euler is explicit for an affine scalar operator
        return (u + dt * z * self.g) / (1.0 + self.a * dt)

    def inner_h(self, u, v):
        return np.sum(np.asarray(u) * np.asarray(v), axis=-1)

    def norm_v(self, u):
        return np.abs(np.asarray(u))[..., 0]

    def dual_norm(self, F):
        return np.abs(np.asarray(F))[..., 0]

    def random_state(self, rng, scale=1.0):
        return scale * rng.standard_normal(1)

    def fixed_point(self) -> float:
        return self.g / self.a

    def describe(self):
        return {"type": self.name, "a": self.a, "g": self.g, "dimension": 1}
