"""
Porous medium operator on a 1-D Dirichlet grid.

The triple is V = L^{r+1}, H = W^{-1,2}_0 and V*, discretized on ``n``
interior nodes of (0, 1) with spacing ``dx = 1 / (n + 1)``.  With ``L`` the
discrete Dirichlet Laplacian the H inner product is
``<u, v>_H = dx * u^T (-L)^{-1} v`` and ``A(u) = L phi(u)`` with
``phi(u) = |u|^{r-1} u``, so that ``<A(u), u>_H = -dx * sum |u|^{r+1}``.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from ..errors import ConfigError
from ._base import GelfandModel, TripleConstants


def _phi(u, r):
    return np.abs(u) ** (r - 1.0) * u


def _laplacian_apply(v, dx):
    out = -2.0 * v
    out[..., 1:] += v[..., :-1]
    out[..., :-1] += v[..., 1:]
    return out / dx**2


def dirichlet_laplacian(n: int) -> np.ndarray:
    dx = 1.0 / (n + 1)
    return (np.diag(np.full(n - 1, 1.0), -1) - 2.0 * np.eye(n)
            + np.diag(np.full(n - 1, 1.0), 1)) / dx**2


def pme_apply(r: float, u, dx: float | None = None):
    """L(|u|^{r-1} u) on the Dirichlet grid implied by the last axis of ``u``."""
    if not r > 1:
        raise ConfigError(f"porous medium exponent must exceed 1, got {r}")
    u = np.asarray(u, dtype=float)
    dx = 1.0 / (u.shape[-1] + 1) if dx is None else dx
    return _laplacian_apply(_phi(u, r), dx)


class PorousMediumModel(GelfandModel):
    """
    Discrete porous medium model.

    Parameters
    ----------
    n : int
        Number of interior grid nodes.
    r : float
        Exponent, r > 1.  ``allow_degenerate=True`` admits r = 1, which turns
        A into the discrete heat operator (used only as a test oracle).

    Notes
    -----
    Constants: alpha = r + 1, gamma = 2, K = C = 0 (coercivity is an
    identity), eta = rho = 0, varpi = 0.  lambda is the first eigenvalue
    of -L; since the domain has measure ``n dx < 1`` the discrete L^2 norm
    is dominated by the L^{r+1} norm, giving ``lambda |u|_H^2 <= |u|_V^2``.
    The growth constant 1 is the supremum of
    ``|A(u)|_{V*}^{alpha/(alpha-1)} / (1 + |u|_V^alpha)``.
    """

    name = "pme"

    def __init__(self, n: int = 16, r: float = 3.0, allow_degenerate: bool = False):
        if n < 2:
            raise ConfigError(f"porous medium grid needs n >= 2, got {n}")
        if not (r > 1 or (allow_degenerate and r == 1)):
            raise ConfigError(f"porous medium exponent must exceed 1, got {r}")
        self.n = int(n)
        self.r = float(r)
        self.dx = 1.0 / (self.n + 1)
        self.state_shape = (self.n,)
        self.laplacian = dirichlet_laplacian(self.n)
        self._neg_inv = np.linalg.inv(-self.laplacian)
        self._neg_inv = 0.5 * (self._neg_inv + self._neg_inv.T)
        self.mu1 = 4.0 / self.dx**2 * np.sin(np.pi * self.dx / 2.0) ** 2
        self.grid = np.arange(1, self.n + 1) * self.dx
        self.constants = TripleConstants(
            lambda_embed=self.mu1,
            alpha=self.r + 1.0,
            gamma_coercive=2.0,
            k_coercive=0.0,
            c_bound=0.0,
            varpi=0.0,
            vartheta=0.0,
            c_monotone=0.0,
            c_growth=1.0,
            c_unique=0.0,
        )

    def apply(self, t, u):
        return _laplacian_apply(_phi(np.asarray(u, dtype=float), self.r), self.dx)

    def jacobian(self, t, u):
        return self.laplacian * (self.r * np.abs(u) ** (self.r - 1.0))[None, :]

    def imex_step(self, t, u, z, dt):
        """Lagged-coefficient step ``(I - dt L diag|u|^{r-1}) v = u``.

        The transform factor cancels from the linearized operator, so ``z``
        is not used.
        """
        u = np.asarray(u, dtype=float)
        if u.ndim > 1:
            return np.stack([self.imex_step(t, ui, z, dt) for ui in u])
        d = np.abs(u) ** (self.r - 1.0) * (dt / self.dx**2)
        ab = np.empty((3, self.n))
        ab[0, 0] = 0.0
        ab[0, 1:] = -d[1:]
        ab[1] = 1.0 + 2.0 * d
        ab[2, :-1] = -d[:-1]
        ab[2, -1] = 0.0
        return scipy.linalg.solve_banded((1, 1), ab, u)

    def inner_h(self, u, v):
        return self.dx * np.sum(np.asarray(u) * (np.asarray(v) @ self._neg_inv), axis=-1)

    def norm_v(self, u):
        p = self.r + 1.0
        return (self.dx * np.sum(np.abs(u) ** p, axis=-1)) ** (1.0 / p)

    def dual_norm(self, F):
        q = (self.r + 1.0) / self.r
        psi = np.asarray(F) @ self._neg_inv
        return (self.dx * np.sum(np.abs(psi) ** q, axis=-1)) ** (1.0 / q)

    def random_state(self, rng, scale=1.0):
        k = np.arange(1, self.n + 1)
        c = rng.standard_normal(self.n) / k**2
        return scale * (np.sin(np.pi * np.outer(self.grid, k)) @ c)

    def first_mode(self) -> np.ndarray:
        """Eigenvector of -L for the smallest eigenvalue ``mu1``."""
        return np.sin(np.pi * self.grid)

    def describe(self):
        return {"type": self.name, "n": self.n, "r": self.r, "dimension": self.n}
