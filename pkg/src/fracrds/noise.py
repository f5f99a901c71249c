"""
Two-sided fractional Brownian motion on a uniform grid.

Paths are generated from one stationary fractional Gaussian noise (fGn)
sequence spanning past and future, so increments keep their exact
cross-covariance across the time origin.  The shift operator is a view
that never resamples or interpolates.

Every grid path (``TwoSidedPath``, ``ShiftedPathView`` and
``young.SampledPath``) exposes the same small surface:

* ``step``, ``first_index``, ``last_index``
* ``values(i0, i1)``      -- samples at grid indices ``i0..i1`` (inclusive)
* ``increments(i0, i1)``  -- the ``i1 - i0`` one-step increments
* ``index_of(t)``         -- grid index of an aligned time
"""

from __future__ import annotations

import csv
import functools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import ConfigError, EmbeddingError, GridError

__all__ = [
    "HurstIndex",
    "TwoSidedPath",
    "ShiftedPathView",
    "HolderEstimate",
    "GrowthSeries",
    "fgn_autocovariance",
    "sample_fgn",
    "sample_fgn_exact",
    "build_two_sided_path",
    "subsample_path",
    "shift_path",
    "holder_seminorm",
    "holder_from_samples",
    "growth_ratio",
    "grid_index",
    "save_path",
    "load_path",
]

EIGENVALUE_FLOOR = -1e-10
EXACT_MAX_N = 4096
_ALIGN_TOL = 1e-6


class HurstIndex(float):
    """Hurst index restricted to the Young regime 1/2 < H < 1."""

    def __new__(cls, value):
        value = float(value)
        if not 0.5 < value < 1.0:
            raise ConfigError(f"Hurst index must lie in (1/2, 1), got {value}")
        return super().__new__(cls, value)


def grid_index(t: float, step: float) -> int:
    """Integer k with k * step == t; raises GridError if t is off-grid."""
    k = round(t / step)
    if abs(k * step - t) > _ALIGN_TOL * step:
        raise GridError(f"time {t!r} is not a multiple of step {step!r}")
    return int(k)


def _check_range(obj, i0: int, i1: int) -> None:
    if i0 > i1:
        raise GridError(f"empty or reversed index range [{i0}, {i1}]")
    if i0 < obj.first_index or i1 > obj.last_index:
        raise GridError(
            f"indices [{i0}, {i1}] outside sampled grid "
            f"[{obj.first_index}, {obj.last_index}]"
        )


# ---------------------------------------------------------------------------
# fractional Gaussian noise


def fgn_autocovariance(H: float, k):
    """Autocovariance of unit-step fGn at lag ``k`` (scalar or array)."""
    k = np.abs(np.asarray(k, dtype=float))
    h2 = 2.0 * H
    out = 0.5 * ((k + 1.0) ** h2 - 2.0 * k**h2 + np.abs(k - 1.0) ** h2)
    return float(out) if out.ndim == 0 else out


def _check_fgn_args(H: float, n: int, step: float) -> None:
    if not 0.0 < H < 1.0:
        raise ConfigError(f"Hurst index must lie in (0, 1), got {H}")
    if n < 1:
        raise ConfigError(f"n must be positive, got {n}")
    if not step > 0:
        raise ConfigError(f"step must be positive, got {step}")


@functools.lru_cache(maxsize=32)
def _circulant_sqrt_eigs(H: float, n: int) -> np.ndarray:
    # first row of the 2n circulant: gamma(0..n), gamma(n-1..1)
    gamma = fgn_autocovariance(H, np.arange(n + 1))
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    eigs = np.fft.fft(row).real
    worst = eigs.min()
    if worst < EIGENVALUE_FLOOR:
        raise EmbeddingError(
            "circulant embedding has a negative eigenvalue",
            H=H, n=n, min_eigenvalue=float(worst),
        )
    eigs = np.clip(eigs, 0.0, None)
    out = np.sqrt(eigs / row.size)
    out.setflags(write=False)
    return out


def sample_fgn(H: float, n: int, step: float, seed: int) -> np.ndarray:
    """
    Draw fractional Gaussian noise by circulant embedding (Davies-Harte).

    Parameters
    ----------
    H : float
        Hurst index in (0, 1).
    n : int
        Number of increments.
    step : float
        Grid spacing; the lag-k covariance is ``step**(2H) * gamma(k)``.
    seed : int
        Seed of ``numpy.random.default_rng``; equal seeds give equal arrays.

    Returns
    -------
    ndarray of shape (n,)
    """
    _check_fgn_args(H, n, step)
    sqrt_eigs = _circulant_sqrt_eigs(float(H), int(n))
    m = sqrt_eigs.size
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    x = np.fft.fft(sqrt_eigs * w).real[:n]
    return x * step**H


@functools.lru_cache(maxsize=8)
def _cholesky_factor(H: float, n: int) -> np.ndarray:
    cov = scipy.linalg.toeplitz(fgn_autocovariance(H, np.arange(n)))
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise EmbeddingError("fGn covariance has a nonpositive pivot", H=H, n=n) from exc
    L.setflags(write=False)
    return L


def sample_fgn_exact(H: float, n: int, step: float, seed: int) -> np.ndarray:
    """fGn via dense Cholesky of the exact Toeplitz covariance (n <= 4096).

    O(n^2) per draw after an O(n^3) factorization that is cached per (H, n).
    Serves as the distributional oracle for :func:`sample_fgn`.
    """
    _check_fgn_args(H, n, step)
    if n > EXACT_MAX_N:
        raise ConfigError(f"dense sampler limited to n <= {EXACT_MAX_N}, got {n}")
    L = _cholesky_factor(float(H), int(n))
    z = np.random.default_rng(seed).standard_normal(n)
    return (L @ z) * step**H


# ---------------------------------------------------------------------------
# paths


@dataclass(frozen=True, eq=False)
class TwoSidedPath:
    """Sampled fBm realization on ``k * step`` for ``-n_past <= k <= n_future``.

    ``samples[n_past]`` is the value at time zero and is exactly 0.
    ``hurst`` and ``seed`` are None for injected deterministic paths.
    """

    step: float
    n_past: int
    n_future: int
    samples: np.ndarray = field(repr=False)
    hurst: float | None = None
    seed: int | None = None

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if self.step <= 0:
            raise ConfigError(f"step must be positive, got {self.step}")
        if self.n_past < 0 or self.n_future < 0:
            raise ConfigError("n_past and n_future must be nonnegative")
        if samples.shape != (self.n_past + self.n_future + 1,):
            raise ConfigError(
                f"expected {self.n_past + self.n_future + 1} samples, got {samples.shape}"
            )
        if not np.all(np.isfinite(samples)):
            raise ConfigError("path samples must be finite")
        if samples[self.n_past] != 0.0:
            raise ConfigError("path must vanish at time zero")
        if self.hurst is not None:
            object.__setattr__(self, "hurst", HurstIndex(self.hurst))
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_increments(cls, increments, step, n_past, hurst=None, seed=None):
        """Cumulate increments and re-anchor so the value at time 0 is 0."""
        increments = np.asarray(increments, dtype=float)
        w = np.concatenate([[0.0], np.cumsum(increments)])
        w = w - w[n_past]
        return cls(step, n_past, increments.size - n_past, w, hurst, seed)

    @classmethod
    def from_function(cls, fn, step, n_past, n_future):
        """Injected path ``omega_t = fn(t) - fn(0)`` (for oracle tests)."""
        t = np.arange(-n_past, n_future + 1) * step
        w = np.asarray(fn(t), dtype=float) - float(fn(0.0))
        w[n_past] = 0.0
        return cls(step, n_past, n_future, w)

    @property
    def first_index(self) -> int:
        return -self.n_past

    @property
    def last_index(self) -> int:
        return self.n_future

    @property
    def times(self) -> np.ndarray:
        return np.arange(-self.n_past, self.n_future + 1) * self.step

    def index_of(self, t: float) -> int:
        return grid_index(t, self.step)

    def value(self, i: int) -> float:
        _check_range(self, i, i)
        return float(self.samples[i + self.n_past])

    def values(self, i0: int | None = None, i1: int | None = None) -> np.ndarray:
        i0 = self.first_index if i0 is None else i0
        i1 = self.last_index if i1 is None else i1
        _check_range(self, i0, i1)
        return self.samples[i0 + self.n_past : i1 + self.n_past + 1]

    def increments(self, i0: int, i1: int) -> np.ndarray:
        return np.diff(self.values(i0, i1))

    def __call__(self, t: float) -> float:
        return self.value(self.index_of(t))


@dataclass(frozen=True, eq=False)
class ShiftedPathView:
    """Wiener shift ``(theta_s omega)_t = omega_{t+s} - omega_s``, s = shift_steps * step.

    Increments are taken directly from the base path, so Riemann sums over a
    shifted window reproduce the unshifted sums term by term.
    """

    base: TwoSidedPath
    shift_steps: int

    def __post_init__(self):
        _check_range(self.base, self.shift_steps, self.shift_steps)

    @property
    def step(self) -> float:
        return self.base.step

    @property
    def hurst(self):
        return self.base.hurst

    @property
    def first_index(self) -> int:
        return self.base.first_index - self.shift_steps

    @property
    def last_index(self) -> int:
        return self.base.last_index - self.shift_steps

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.first_index, self.last_index + 1) * self.step

    def index_of(self, t: float) -> int:
        return grid_index(t, self.step)

    def value(self, i: int) -> float:
        return float(self.values(i, i)[0])

    def values(self, i0: int | None = None, i1: int | None = None) -> np.ndarray:
        i0 = self.first_index if i0 is None else i0
        i1 = self.last_index if i1 is None else i1
        _check_range(self, i0, i1)
        s = self.shift_steps
        return self.base.values(i0 + s, i1 + s) - self.base.value(s)

    def increments(self, i0: int, i1: int) -> np.ndarray:
        _check_range(self, i0, i1)
        s = self.shift_steps
        return self.base.increments(i0 + s, i1 + s)

    def __call__(self, t: float) -> float:
        return self.value(self.index_of(t))


def build_two_sided_path(H, step, n_past, n_future, seed) -> TwoSidedPath:
    """One fGn draw over the whole grid, cumulated and anchored at t = 0."""
    H = HurstIndex(H)
    if n_past + n_future < 1:
        raise ConfigError("path needs at least one increment")
    incr = sample_fgn(float(H), n_past + n_future, step, seed)
    return TwoSidedPath.from_increments(incr, step, n_past, hurst=H, seed=seed)


def subsample_path(path: TwoSidedPath, factor: int) -> TwoSidedPath:
    """Same realization observed on a grid ``factor`` times coarser."""
    if factor < 1 or path.n_past % factor or path.n_future % factor:
        raise ConfigError(f"factor {factor} does not divide the grid extents")
    return TwoSidedPath(
        path.step * factor,
        path.n_past // factor,
        path.n_future // factor,
        path.samples[::factor],
        path.hurst,
        path.seed,
    )


def shift_path(path, shift_steps: int) -> ShiftedPathView:
    """theta_s for s = shift_steps * step; shifts of views compose additively."""
    if isinstance(path, ShiftedPathView):
        return ShiftedPathView(path.base, path.shift_steps + int(shift_steps))
    return ShiftedPathView(path, int(shift_steps))


# ---------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class HolderEstimate:
    exponent: float
    seminorm: float
    window: tuple[float, float]
    exhaustive: bool = True


def holder_from_samples(values, step: float, exponent: float) -> tuple[float, bool]:
    """Max of |x_j - x_i| / |t_j - t_i|**exponent over sampled pairs.

    All lags are used up to 4096 samples; beyond that only lags 1, 2, 4, ...
    so the result is then a lower bound.  Values may carry trailing axes
    (H-states), in which case the Euclidean norm of the difference is used.
    """
    x = np.asarray(values)
    n = x.shape[0]
    if n < 2:
        raise ConfigError("Hölder window must contain at least two samples")
    exhaustive = n <= EXACT_MAX_N
    lags = range(1, n) if exhaustive else [2**j for j in range(int(math.log2(n - 1)) + 1)]
    best = 0.0
    for d in lags:
        diff = x[d:] - x[:-d]
        if diff.ndim > 1:
            mag = np.sqrt(np.sum(np.abs(diff.reshape(diff.shape[0], -1)) ** 2, axis=1))
        else:
            mag = np.abs(diff)
        best = max(best, float(mag.max()) / (d * step) ** exponent)
    return best, exhaustive


def holder_seminorm(path, exponent: float, window: tuple[float, float]) -> HolderEstimate:
    if not 0.0 < exponent < 1.0:
        raise ConfigError(f"exponent must lie in (0, 1), got {exponent}")
    t0, t1 = window
    i0, i1 = path.index_of(t0), path.index_of(t1)
    if i1 <= i0:
        raise ConfigError(f"empty Hölder window {window}")
    seminorm, exhaustive = holder_from_samples(path.values(i0, i1), path.step, exponent)
    return HolderEstimate(exponent, seminorm, (t0, t1), exhaustive)


class GrowthSeries(NamedTuple):
    times: np.ndarray
    ratios: np.ndarray


def growth_ratio(path) -> GrowthSeries:
    """|omega_t| / |t| at every grid time with |t| >= 1."""
    t = np.arange(path.first_index, path.last_index + 1) * path.step
    keep = np.abs(t) >= 1.0
    if not keep.any():
        raise ConfigError("path has no grid times with |t| >= 1")
    w = path.values()
    return GrowthSeries(t[keep], np.abs(w[keep]) / np.abs(t[keep]))


# ---------------------------------------------------------------------------
# CSV / JSON interchange


def save_path(path: TwoSidedPath, stem) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` (time,omega) and ``<stem>.json`` (manifest)."""
    stem = Path(stem)
    csv_file, json_file = stem.with_suffix(".csv"), stem.with_suffix(".json")
    with open(csv_file, "w", newline="") as fh:
        fh.write("time,omega\n")
        for t, w in zip(path.times, path.samples):
            fh.write(f"{t:.17g},{w:.17g}\n")
    manifest = {
        "hurst": None if path.hurst is None else float(path.hurst),
        "step": path.step,
        "n_past": path.n_past,
        "n_future": path.n_future,
        "seed": path.seed,
    }
    json_file.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return csv_file, json_file


def load_path(stem) -> TwoSidedPath:
    stem = Path(stem)
    manifest = json.loads(stem.with_suffix(".json").read_text())
    with open(stem.with_suffix(".csv"), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["time", "omega"]:
            raise ConfigError(f"unexpected CSV header {header}")
        omega = np.array([float(row[1]) for row in reader])
    return TwoSidedPath(
        manifest["step"], manifest["n_past"], manifest["n_future"], omega,
        manifest["hurst"], manifest["seed"],
    )
