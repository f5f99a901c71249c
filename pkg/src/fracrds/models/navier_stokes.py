"""
Two-dimensional incompressible Navier-Stokes on the periodic torus [0, 2 pi)^2.

States are Fourier coefficients ``u_hat`` of shape ``(2, N, N)`` normalized
as ``fft2(u) / N**2``; axis -2 carries the x wavenumber and axis -1 the y
wavenumber.  Only modes with ``max(|k_x|, |k_y|) <= K = (N - 1) // 3`` are
kept (2/3 rule), which makes every quadratic product exact on the N grid.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigError, PreconditionError
from ._base import GelfandModel, NonautonomousForcing, TripleConstants

AREA = (2.0 * np.pi) ** 2

# Frozen bound for |v|_{L4}^4 <= LADYZHENSKAYA |v|_H^2 |grad v|_H^2 on
# mean-free periodic vector fields (sharp planar scalar constant ~0.171,
# doubled for two components, rounded up).
LADYZHENSKAYA = 0.5
DIV_TOL = 1e-12


class NavierStokesModel(GelfandModel):
    """
    Spectral Galerkin model ``A(t, u) = nu Lap u + B(u, u) + P h(t)``.

    Parameters
    ----------
    N : int
        Grid size; the truncation radius is ``(N - 1) // 3``.
    nu : float
        Viscosity.  With ``nu >= (27 LADYZHENSKAYA / 128)**(1/3)`` the local
        monotonicity inequality holds with ``rho = |v|_{L4}^4`` unscaled.
    forcing : NonautonomousForcing, optional
        Body force; ``forcing.field(t)`` must return a spectral state.

    Notes
    -----
    Constants: lambda = 1 (first Stokes eigenvalue on the torus), alpha = 2,
    c = nu / 2, g = 0, f(t) = 2 / (3 nu lambda) |h(t)|^2, eta = 0,
    varpi = vartheta = 2.
    """

    name = "nse"
    dtype = complex

    def __init__(self, N: int = 32, nu: float = 1.0, forcing: NonautonomousForcing | None = None):
        if N < 4:
            raise ConfigError(f"NSE grid needs N >= 4, got {N}")
        if not nu > 0:
            raise ConfigError(f"viscosity must be positive, got {nu}")
        self.N = int(N)
        self.nu = float(nu)
        self.K = (self.N - 1) // 3
        self.state_shape = (2, self.N, self.N)
        k = np.fft.fftfreq(self.N, 1.0 / self.N)
        self.kx = k[:, None] * np.ones((1, self.N))
        self.ky = np.ones((self.N, 1)) * k[None, :]
        self.k2 = self.kx**2 + self.ky**2
        self.mask = (np.abs(self.kx) <= self.K) & (np.abs(self.ky) <= self.K) & (self.k2 > 0)
        self.inv_k2 = np.where(self.k2 > 0, 1.0 / np.where(self.k2 > 0, self.k2, 1.0), 0.0)
        self.c_f = 2.0 / (3.0 * self.nu * 1.0)
        self.forcing = forcing
        # padded grid for the exact L4 quadrature of degree-4K polynomials
        self.M = 4 * self.K + 2
        kk = np.arange(-self.K, self.K + 1)
        self._src = np.ix_(kk % self.N, kk % self.N)
        self._dst = np.ix_(kk % self.M, kk % self.M)
        self.constants = TripleConstants(
            lambda_embed=1.0,
            alpha=2.0,
            gamma_coercive=self.nu / 2.0,
            k_coercive=0.0,
            c_bound=0.0,
            varpi=2.0,
            vartheta=2.0,
            c_monotone=0.0,
            c_growth=max(3.0 * self.nu**2, 3.0 * LADYZHENSKAYA, 4.5 * self.nu),
            c_unique=LADYZHENSKAYA,
        )

    # ---- transforms --------------------------------------------------
    def to_physical(self, uh) -> np.ndarray:
        return np.fft.ifft2(uh, axes=(-2, -1)).real * self.N**2

    def from_physical(self, u) -> np.ndarray:
        return np.fft.fft2(np.asarray(u, dtype=float), axes=(-2, -1)) / self.N**2 * self.mask

    def grid(self):
        x = 2.0 * np.pi * np.arange(self.N) / self.N
        return np.meshgrid(x, x, indexing="ij")

    def leray(self, F) -> np.ndarray:
        div = self.kx * F[..., 0, :, :] + self.ky * F[..., 1, :, :]
        out = np.empty_like(F)
        out[..., 0, :, :] = F[..., 0, :, :] - self.kx * div * self.inv_k2
        out[..., 1, :, :] = F[..., 1, :, :] - self.ky * div * self.inv_k2
        return out * self.mask

    def divergence(self, uh) -> np.ndarray:
        return 1j * (self.kx * uh[..., 0, :, :] + self.ky * uh[..., 1, :, :])

    def check_solenoidal(self, uh) -> None:
        div = np.abs(self.divergence(uh))
        scale = max(1.0, float(np.max(np.sqrt(self.k2) * np.abs(uh), initial=0.0)))
        if np.max(div, initial=0.0) > DIV_TOL * scale:
            raise PreconditionError(
                f"state is not divergence-free (max |k.u| = {np.max(div):.3e})"
            )

    # ---- operator ----------------------------------------------------
    def bilinear(self, uh) -> np.ndarray:
        """B(u, u) = -P[(u . grad) u], dealiased."""
        uh = np.asarray(uh, dtype=complex)
        ux = self.to_physical(uh[..., 0, :, :])
        uy = self.to_physical(uh[..., 1, :, :])
        adv = np.empty(uh.shape, dtype=float)
        for i in range(2):
            dxi = self.to_physical(1j * self.kx * uh[..., i, :, :])
            dyi = self.to_physical(1j * self.ky * uh[..., i, :, :])
            adv[..., i, :, :] = ux * dxi + uy * dyi
        return -self.leray(self.from_physical(adv))

    def forcing_field(self, t) -> np.ndarray:
        if self.forcing is None or self.forcing.field is None:
            return np.zeros(self.state_shape, dtype=complex)
        return self.leray(np.asarray(self.forcing.field(t), dtype=complex))

    def apply(self, t, u):
        u = np.asarray(u, dtype=complex)
        self.check_solenoidal(u)
        out = -self.nu * self.k2 * u + self.bilinear(u)
        if self.forcing is not None:
            out = out + self.forcing_field(t)
        return out * self.mask

    def imex_step(self, t, u, z, dt):
        """Viscous term implicit, advection and forcing explicit at t."""
        rhs = u + dt * self.bilinear(u)
        if self.forcing is not None:
            rhs = rhs + dt * self.forcing_field(t)
        return rhs / (1.0 + self.nu * dt * self.k2) * self.mask

    # ---- geometry ----------------------------------------------------
    def inner_h(self, u, v):
        return AREA * np.sum((np.asarray(u) * np.conj(v)).real, axis=(-3, -2, -1))

    def norm_v(self, u):
        return np.sqrt(AREA * np.sum(self.k2 * np.abs(u) ** 2, axis=(-3, -2, -1)))

    def dual_norm(self, F):
        return np.sqrt(AREA * np.sum(self.inv_k2 * self.mask * np.abs(F) ** 2, axis=(-3, -2, -1)))

    def _padded_physical(self, uh) -> np.ndarray:
        uh = np.asarray(uh, dtype=complex)
        big = np.zeros(uh.shape[:-2] + (self.M, self.M), dtype=complex)
        big[(...,) + self._dst] = uh[(...,) + self._src]
        return np.fft.ifft2(big, axes=(-2, -1)).real * self.M**2

    def l4_norm4(self, uh):
        """Exact int |u|^4 dx of the trigonometric polynomial."""
        v = self._padded_physical(uh)
        speed2 = v[..., 0, :, :] ** 2 + v[..., 1, :, :] ** 2
        return AREA / self.M**2 * np.sum(speed2**2, axis=(-2, -1))

    def rho(self, u):
        return self.l4_norm4(u)

    # ---- forcing -----------------------------------------------------
    def f(self, t):
        if self.forcing is None:
            return 0.0 if np.ndim(t) == 0 else np.zeros(np.shape(t))
        return self.forcing.envelope(t)

    def cosine_forcing(self, amplitude: float) -> NonautonomousForcing:
        """h(t) = amplitude cos(t) (sin 2y, 0) with its exact f(t) envelope."""
        if self.K < 2:
            raise ConfigError("cosine forcing needs truncation radius >= 2 (N >= 7)")
        x, y = self.grid()
        template = self.from_physical(np.stack([np.sin(2.0 * y), np.zeros_like(y)]))
        sq = float(self.inner_h(template, template))
        c_f, amp = self.c_f, float(amplitude)
        return NonautonomousForcing(
            envelope=lambda t: c_f * amp**2 * sq * np.cos(t) ** 2,
            bound=c_f * amp**2 * sq,
            rate=0.0,
            field=lambda t: amp * math.cos(t) * template,
            label=f"cosine({amp})",
        )

    def with_forcing(self, forcing):
        return NavierStokesModel(self.N, self.nu, forcing)

    # ---- sampling ----------------------------------------------------
    def random_state(self, rng, scale=1.0):
        shape = (self.N, self.N)
        c = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * self.mask
        c = c * self.inv_k2 ** 1.5
        # Hermitian symmetrization: psi_hat(-k) = conj(psi_hat(k))
        flipped = np.roll(np.flip(c, axis=(0, 1)), 1, axis=(0, 1))
        psi = 0.5 * (c + np.conj(flipped))
        u = np.stack([1j * self.ky * psi, -1j * self.kx * psi]) * self.mask
        nrm = float(self.norm_h(u))
        if nrm == 0.0:
            return u
        return u * (scale * math.exp(0.5 * rng.standard_normal()) / nrm)

    def taylor_green(self, amplitude: float = 1.0) -> np.ndarray:
        x, y = self.grid()
        u = np.stack([np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)])
        return amplitude * self.from_physical(u)

    def validate_state(self, u):
        u = super().validate_state(u)
        self.check_solenoidal(u)
        return u

    def coefficients(self, u):
        u = np.asarray(u, dtype=complex)
        return np.concatenate([u.real.ravel(), u.imag.ravel()])

    def describe(self):
        return {"type": self.name, "N": self.N, "nu": self.nu, "K": self.K,
                "dimension": 2 * self.N * self.N,
                "forcing": None if self.forcing is None else self.forcing.label}
