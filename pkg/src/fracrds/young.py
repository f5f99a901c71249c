"""
Pathwise Young calculus on a uniform grid.

Integrals are left-point Riemann sums accumulated in increasing time order
with correctly rounded summation (``math.fsum``), so a replay is bitwise
reproducible and re-indexed sums (shifts) agree exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GridError, TransformOverflowError
from .noise import _check_range, grid_index, shift_path

__all__ = [
    "SampledPath",
    "ExpCocycle",
    "YoungProcess",
    "young_integral",
    "young_remainder_bound",
    "sewing_constant",
    "exp_transform",
    "exp_sde_residual",
    "product_rule_residual",
    "shift_integral_gap",
    "residual_report",
    "OVERFLOW_LIMIT",
]

OVERFLOW_LIMIT = 700.0


@dataclass(frozen=True, eq=False)
class SampledPath:
    """Values (scalars or H-states) at grid indices ``start, start+1, ...``.

    The time of row ``k`` is ``(start + k) * step``.
    """

    start: int
    step: float
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data)
        if self.step <= 0:
            raise ConfigError("step must be positive")
        if data.ndim == 0 or data.shape[0] == 0:
            raise ConfigError("sampled path needs at least one value")
        if not np.all(np.isfinite(data)):
            raise ConfigError("sampled path values must be finite")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_times(cls, t0: float, step: float, data) -> "SampledPath":
        return cls(grid_index(t0, step), step, data)

    @classmethod
    def time(cls, step: float, i0: int, i1: int) -> "SampledPath":
        """The identity path t -> t on indices i0..i1 (the dt driver)."""
        return cls(i0, step, np.arange(i0, i1 + 1) * step)

    @classmethod
    def restrict(cls, path, t0: float, t1: float) -> "SampledPath":
        """Copy of a noise path on [t0, t1]."""
        i0, i1 = path.index_of(t0), path.index_of(t1)
        return cls(i0, path.step, path.values(i0, i1))

    @property
    def first_index(self) -> int:
        return self.start

    @property
    def last_index(self) -> int:
        return self.start + self.data.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.first_index, self.last_index + 1) * self.step

    def index_of(self, t: float) -> int:
        return grid_index(t, self.step)

    def values(self, i0: int | None = None, i1: int | None = None) -> np.ndarray:
        i0 = self.first_index if i0 is None else i0
        i1 = self.last_index if i1 is None else i1
        _check_range(self, i0, i1)
        return self.data[i0 - self.start : i1 - self.start + 1]

    def increments(self, i0: int, i1: int) -> np.ndarray:
        return np.diff(self.values(i0, i1), axis=0)

    def shifted(self, shift_steps: int) -> "SampledPath":
        """t -> Y_{t+s}: same data, origin moved by ``shift_steps``."""
        return SampledPath(self.start - shift_steps, self.step, self.data)

    def __call__(self, t: float):
        return self.values(self.index_of(t), self.index_of(t))[0]


def _fsum_axis0(terms: np.ndarray):
    if terms.ndim == 1:
        return math.fsum(terms)
    flat = terms.reshape(terms.shape[0], -1)
    out = np.array([math.fsum(flat[:, j]) for j in range(flat.shape[1])])
    return out.reshape(terms.shape[1:])


def _cumsum_compensated(terms: np.ndarray) -> np.ndarray:
    """Running Neumaier sums of a 1-D array, strictly in index order."""
    out = np.empty(terms.size + 1)
    out[0] = 0.0
    s = c = 0.0
    for k, x in enumerate(terms.tolist()):
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
        out[k + 1] = s + c
    return out


def _check_same_step(a, b) -> None:
    if a.step != b.step:
        raise GridError(f"grid steps differ: {a.step} vs {b.step}")


def _riemann_terms(y, x, i0: int, i1: int) -> np.ndarray:
    yv = np.asarray(y.values(i0, i1)[:-1])
    dx = np.asarray(x.increments(i0, i1))
    if yv.ndim > 1 and dx.ndim == 1:
        dx = dx.reshape((-1,) + (1,) * (yv.ndim - 1))
    return yv * dx


def young_integral(y, x, s: float, t: float):
    """Left-point sum of ``y_u (x_v - x_u)`` over the grid cells of [s, t].

    Parameters
    ----------
    y : grid path
        Integrand; scalar or state valued.
    x : grid path
        Driver with the same step (``TwoSidedPath``, ``ShiftedPathView`` or
        ``SampledPath``).
    s, t : float
        Grid-aligned endpoints with ``s <= t``.
    """
    _check_same_step(y, x)
    i0, i1 = x.index_of(s), x.index_of(t)
    if i1 < i0:
        raise GridError(f"integration bounds reversed: {s} > {t}")
    if i1 == i0:
        v = np.asarray(y.values(i0, i0))[0]
        return 0.0 if np.ndim(v) == 0 else np.zeros_like(v, dtype=float)
    return _fsum_axis0(_riemann_terms(y, x, i0, i1))


def sewing_constant(zeta: float, xi: float) -> float:
    if zeta + xi <= 1.0:
        raise ConfigError(f"Young condition needs zeta + xi > 1, got {zeta + xi}")
    return 2.0 / (1.0 - 2.0 ** (1.0 - (zeta + xi)))


def young_remainder_bound(h_x, h_y, dt, zeta, xi) -> float:
    """``C h_x h_y dt**(zeta + xi)`` with C = 2 / (1 - 2**(1 - zeta - xi))."""
    C = sewing_constant(zeta, xi)
    if dt < 0:
        raise ConfigError("dt must be nonnegative")
    return C * h_x * h_y * dt ** (zeta + xi)


@dataclass(frozen=True, eq=False)
class ExpCocycle:
    """``z_t = exp(-beta omega_t)`` and its reciprocal on a window."""

    beta: float
    z: SampledPath
    z_inv: SampledPath


def _guarded_exponent(beta: float, omega: np.ndarray, times: np.ndarray) -> np.ndarray:
    arg = beta * omega
    bad = np.flatnonzero(np.abs(arg) > OVERFLOW_LIMIT)
    if bad.size:
        k = int(bad[0])
        raise TransformOverflowError(
            f"|beta*omega| exceeds {OVERFLOW_LIMIT} at t = {times[k]!r}",
            time=float(times[k]), value=float(arg[k]),
        )
    return arg


def exp_transform(beta: float, path, window: tuple[float, float]) -> ExpCocycle:
    i0, i1 = path.index_of(window[0]), path.index_of(window[1])
    omega = path.values(i0, i1)
    arg = _guarded_exponent(beta, omega, np.arange(i0, i1 + 1) * path.step)
    return ExpCocycle(
        float(beta),
        SampledPath(i0, path.step, np.exp(-arg)),
        SampledPath(i0, path.step, np.exp(arg)),
    )


def exp_sde_residual(cocycle: ExpCocycle, path, window: tuple[float, float]) -> float:
    """sup_t |z_t - z_t0 + beta * int_t0^t z d omega| over grid times in window."""
    _check_same_step(cocycle.z, path)
    i0, i1 = path.index_of(window[0]), path.index_of(window[1])
    if cocycle.beta == 0.0:
        return 0.0
    z = cocycle.z.values(i0, i1)
    integral = _cumsum_compensated(_riemann_terms(cocycle.z, path, i0, i1))
    return float(np.max(np.abs(z - z[0] + cocycle.beta * integral)))


@dataclass(frozen=True, eq=False)
class YoungProcess:
    """``dX = drift dt + diffusion d omega`` sampled on a common grid."""

    values: SampledPath
    drift: SampledPath
    diffusion: SampledPath

    def __post_init__(self):
        shapes = {p.data.shape[0] for p in (self.values, self.drift, self.diffusion)}
        starts = {p.start for p in (self.values, self.drift, self.diffusion)}
        if len(shapes) != 1 or len(starts) != 1:
            raise ConfigError("values, drift and diffusion must share one grid")

    @classmethod
    def from_driver(cls, path, window) -> "YoungProcess":
        """omega itself: zero drift, unit diffusion."""
        v = SampledPath.restrict(path, *window)
        return cls(v, SampledPath(v.start, v.step, np.zeros(v.data.shape)),
                   SampledPath(v.start, v.step, np.ones(v.data.shape)))

    @classmethod
    def deterministic(cls, fn, dfn, step, window) -> "YoungProcess":
        """Smooth process X_t = fn(t) with derivative dfn."""
        i0, i1 = grid_index(window[0], step), grid_index(window[1], step)
        t = np.arange(i0, i1 + 1) * step
        return cls(SampledPath(i0, step, fn(t)), SampledPath(i0, step, dfn(t)),
                   SampledPath(i0, step, np.zeros_like(t)))

    def differential_terms(self, other: SampledPath, driver, i0: int, i1: int) -> np.ndarray:
        """Left-point terms of ``int other dX``."""
        clock = SampledPath.time(driver.step, i0, i1)
        w = other.values(i0, i1)[:-1]
        return (w * self.drift.values(i0, i1)[:-1] * clock.increments(i0, i1)
                + w * self.diffusion.values(i0, i1)[:-1] * driver.increments(i0, i1))


def product_rule_residual(X: YoungProcess, Y: YoungProcess, driver, window) -> float:
    """sup_t |(XY)_t - (XY)_t0 - int (X dY + Y dX)| on the window."""
    for p in (X.values, Y.values):
        _check_same_step(p, driver)
    i0, i1 = driver.index_of(window[0]), driver.index_of(window[1])
    terms = (Y.differential_terms(X.values, driver, i0, i1)
             + X.differential_terms(Y.values, driver, i0, i1))
    xy = X.values.values(i0, i1) * Y.values.values(i0, i1)
    return float(np.max(np.abs(xy - xy[0] - _cumsum_compensated(terms))))


def shift_integral_gap(Y: SampledPath, path, t1: float, t2: float, s: float) -> float:
    """|int_{t1}^{t2} Y d omega - int_{t1-s}^{t2-s} Y_{.+s} d(theta_s omega)|."""
    k = grid_index(s, path.step)
    direct = young_integral(Y, path, t1, t2)
    shifted = young_integral(Y.shifted(k), shift_path(path, k), t1 - s, t2 - s)
    return float(np.max(np.abs(np.asarray(direct) - np.asarray(shifted))))


def residual_report(operation: str, window, step: float, residual: float) -> str:
    return json.dumps(
        {"operation": operation, "window": list(window), "step": step, "residual": residual},
        sort_keys=True,
    )
