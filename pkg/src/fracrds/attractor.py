"""
Random-dynamical-systems layer: cocycles, absorbing radii, temperedness,
pullback ensembles and attractor estimates.

Pullback from time tau - T is realized by solving on [tau - T, tau] with
the single stored two-sided path; on aligned grids this is the same as
shifting the noise by -T and evolving for time T.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, FracRDSError, NumericalError
from .models._base import NonautonomousForcing, TripleConstants
from .noise import grid_index, shift_path
from .solver import SolveConfig, solve

__all__ = [
    "CocycleHandle",
    "AbsorbingEstimate",
    "PullbackEnsemble",
    "AttractorEstimate",
    "TemperednessReport",
    "hausdorff_semidist",
    "absorption_rate",
    "absorbing_radius_autonomous",
    "absorbing_radius_nonautonomous",
    "radius_along_shifts",
    "temperedness_stat",
    "pullback_evolve",
    "attractor_estimate",
    "cocycle_gap",
    "attractor_invariance_gap",
    "worker_count",
]

TAIL_FRACTION = 0.01
ENVELOPE_CUTOFF = 1e-8


def worker_count() -> int:
    """Worker cap from the ``THREADS`` environment variable (default 1)."""
    raw = os.environ.get("THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"THREADS must be an integer, got {raw!r}") from exc
    return max(1, n)


def _ordered_map(fn, items, workers: int | None = None):
    workers = worker_count() if workers is None else workers
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# cocycle


@dataclass(frozen=True, eq=False)
class CocycleHandle:
    """phi(t, tau, x): state at tau + t of the solution started from x at tau.

    ``offset_steps`` converts path time into model time for nonautonomous
    models; :meth:`shifted` moves both the path (theta_s) and the offset so
    the model sees the same absolute times.
    """

    model: object
    beta: float
    cfg: SolveConfig
    path: object
    offset_steps: int = 0

    def __post_init__(self):
        object.__setattr__(self, "cfg", replace(self.cfg, save_every=2**62))

    @property
    def time_offset(self) -> float:
        return self.offset_steps * self.path.step

    def evaluate(self, t: float, tau: float, x):
        if t < 0:
            raise ConfigError("cocycle time must be nonnegative")
        if grid_index(t, self.path.step) == 0:
            return np.array(x, copy=True)
        traj = solve(self.model, self.path, self.beta, x, (tau, tau + t), self.cfg, self.time_offset)
        return traj.final_state

    def trajectory(self, t: float, tau: float, x, save_every: int = 1):
        cfg = replace(self.cfg, save_every=save_every)
        return solve(self.model, self.path, self.beta, x, (tau, tau + t), cfg, self.time_offset)

    def shifted(self, s: float) -> "CocycleHandle":
        k = grid_index(s, self.path.step)
        return CocycleHandle(self.model, self.beta, self.cfg, shift_path(self.path, k),
                             self.offset_steps + k)


def cocycle_gap(cocycle: CocycleHandle, s: float, t: float, x) -> float:
    """|phi(t + s, omega, x) - phi(s, theta_t omega, phi(t, omega, x))|_H."""
    if s < 0 or t < 0:
        raise ConfigError("cocycle times must be nonnegative")
    k_s, k_t = grid_index(s, cocycle.path.step), grid_index(t, cocycle.path.step)
    step = cocycle.path.step
    whole = cocycle.evaluate((k_s + k_t) * step, 0.0, x)
    first = cocycle.evaluate(k_t * step, 0.0, x)
    second = cocycle.shifted(k_t * step).evaluate(k_s * step, 0.0, first)
    return float(cocycle.model.norm_h(whole - second))


# ---------------------------------------------------------------------------
# semi-distance


def _euclidean(d):
    d = np.asarray(d)
    return np.sqrt(np.sum(np.abs(d.reshape(d.shape[0], -1)) ** 2, axis=1))


def hausdorff_semidist(A, B, norm=None) -> float:
    """
    sup over a in A of inf over b in B of |a - b|.

    Parameters
    ----------
    A, B : sequences of states
        Point clouds in the same space.
    norm : callable, optional
        Maps a stack of differences to their norms (e.g. ``model.norm_h``).
        Defaults to the Euclidean norm of the flattened coordinates.

    Returns
    -------
    float
        ``math.inf`` when B is empty.
    """
    A = [np.asarray(a) for a in A]
    B = [np.asarray(b) for b in B]
    if not A:
        raise ConfigError("semi-distance of an empty set A is undefined")
    if not B:
        return math.inf
    norm = _euclidean if norm is None else norm
    Bs = np.stack(B)
    return float(max(np.min(norm(a[None, ...] - Bs)) for a in A))


# ---------------------------------------------------------------------------
# absorbing radii


@dataclass(frozen=True)
class AbsorbingEstimate:
    radius_sq: float
    truncation_horizon: float
    tail_bound: float
    regime: str
    kappa: float
    constant: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def absorption_rate(constants: TripleConstants, epsilon: float | None = None):
    """(kappa, C_total, regime) for the autonomous radius.

    For alpha = 2, kappa = lambda gamma - K and C_total = C.  For alpha > 2,
    kappa = lambda (gamma - eps) and C_total adds the two Young-inequality
    constants with p = alpha / 2, q = alpha / (alpha - 2):
    ``(K/lambda)^q (p eps)^{-q/p} / q + (gamma - eps)(1 - 1/p) p^{-1/(p-1)}``.
    """
    c = constants
    lam, gam, K = c.lambda_embed, c.gamma_coercive, c.k_coercive
    if c.alpha == 2:
        if not K < gam * lam:
            raise ConfigError("alpha = 2 requires K < gamma * lambda")
        return lam * gam - K, c.c_bound, "alpha-eq-2"
    eps = gam / 2.0 if epsilon is None else float(epsilon)
    if not 0 < eps < gam:
        raise ConfigError(f"epsilon must lie in (0, gamma = {gam}), got {eps}")
    p = c.alpha / 2.0
    q = c.alpha / (c.alpha - 2.0)
    extra_k = (K / lam) ** q * (p * eps) ** (-q / p) / q if K > 0 else 0.0
    extra_l = (gam - eps) * (1.0 - 1.0 / p) * p ** (-1.0 / (p - 1.0))
    return lam * (gam - eps), c.c_bound + extra_k + extra_l, "alpha-gt-2"


def _growth_envelope(path, n_far: int) -> float:
    """max |omega_r| / |r| over the oldest half of the sampled past."""
    if n_far < 2:
        raise ConfigError("path must extend into the past for the tail bound")
    lo = path.first_index
    idx = np.arange(lo, lo + max(1, n_far // 2) + 1)
    r = idx * path.step
    w = path.values(idx[0], idx[-1])
    keep = np.abs(r) >= 1.0
    if not keep.any():
        return 0.0
    return float(np.max(np.abs(w[keep]) / np.abs(r[keep])))


def _radius_quadrature(path, beta, kappa, weight, horizon, extra_rate, extra_bound, scale):
    """Trapezoid of ``weight(r) exp(-2 beta omega_r + kappa r)`` on [-T, 0] plus a tail bound.

    The tail is the sampled part beyond -T, integrated the same way and
    multiplied by ``scale``, plus the growth-envelope bound for times older
    than the sampled past.
    """
    step = path.step
    n_avail = -path.first_index
    if n_avail < 1:
        raise ConfigError("path has no past samples")
    if horizon is not None:
        n = grid_index(horizon, step)
        if n > n_avail:
            raise ConfigError(f"horizon {horizon} exceeds the sampled past {n_avail * step}")
    r = np.arange(-n_avail, 1) * step
    w = path.values(-n_avail, 0)
    integrand = weight(r) * np.exp(-2.0 * beta * w + kappa * r)
    # pieces[j] covers [r[j], r[j + 1]]; acc[k] sums the k + 1 newest pieces
    pieces = 0.5 * step * (integrand[1:] + integrand[:-1])
    acc = np.cumsum(pieces[::-1])
    g = _growth_envelope(path, n_avail)
    decay = kappa - 2.0 * abs(beta) * g - extra_rate
    beyond = extra_bound * math.exp(-decay * n_avail * step) / decay if decay > 0 else math.inf
    if horizon is None:
        # shortest horizon whose remaining mass falls below the cutoff of the accumulated value
        rest = scale * (acc[-1] - acc) + beyond
        ok = np.flatnonzero(rest <= ENVELOPE_CUTOFF * scale * np.maximum(acc, 1e-300))
        n = int(ok[0]) + 1 if ok.size else n_avail
    value = float(acc[n - 1]) if n > 0 else 0.0
    tail = scale * max(float(acc[-1]) - value, 0.0) + beyond
    return value, n * step, tail


def absorbing_radius_autonomous(path, constants: TripleConstants, beta: float,
                                epsilon: float | None = None, horizon: float | None = None):
    """
    R^2 = 1 + C int_{-inf}^0 exp(-2 beta omega_r + kappa r) dr by trapezoid.

    The part beyond the horizon is bounded using ``|omega_r| <= g |r|``
    with g the largest growth ratio seen on the oldest half of the sampled
    past.
    """
    kappa, C, regime = absorption_rate(constants, epsilon)
    if C == 0.0:
        T = (horizon if horizon is not None else -path.first_index * path.step)
        return AbsorbingEstimate(1.0, T, 0.0, regime, kappa, C)
    value, T, tail = _radius_quadrature(path, beta, kappa, lambda r: np.ones_like(r),
                                        horizon, 0.0, C, C)
    est = AbsorbingEstimate(1.0 + C * value, T, tail, regime, kappa, C)
    _check_tail(est)
    return est


def absorbing_radius_nonautonomous(path, constants: TripleConstants, beta: float,
                                   epsilon: float | None, tau: float,
                                   f: NonautonomousForcing, horizon: float | None = None):
    """R^2 = 1 + int exp(-2 beta omega_r + kappa r)(|f(r + tau)| + C_extra) dr.

    ``constants.gamma_coercive`` and ``k_coercive`` play the roles of c and g.
    ``C_extra`` is 0 for alpha = 2 and the Young-inequality constant otherwise.
    """
    kappa, C_total, regime = absorption_rate(replace(constants, c_bound=0.0), epsilon)
    if not f.certify([kappa]):
        raise ConfigError("forcing is not certified exponentially integrable at the absorption rate")
    bound = f.bound * math.exp(f.rate * abs(tau)) + C_total
    value, T, tail = _radius_quadrature(
        path, beta, kappa,
        lambda r: np.abs(np.asarray(f.envelope(r + tau), dtype=float)) + C_total,
        horizon, f.rate, bound, 1.0,
    )
    est = AbsorbingEstimate(1.0 + value, T, tail, "nonautonomous", kappa, C_total)
    _check_tail(est)
    return est


def _check_tail(est: AbsorbingEstimate) -> None:
    if not est.tail_bound < TAIL_FRACTION * est.radius_sq:
        raise NumericalError(
            f"tail bound {est.tail_bound:.3e} is not below {TAIL_FRACTION} R^2 = "
            f"{TAIL_FRACTION * est.radius_sq:.3e}; sample a longer past",
            tail_bound=est.tail_bound, radius_sq=est.radius_sq,
        )


def radius_along_shifts(path, constants: TripleConstants, beta: float,
                        epsilon: float | None = None):
    """Return ``R2(k)``: R^2(theta_{-k step} omega) for grid shifts k >= 0.

    Uses ``R^2(theta_{-t} omega) = 1 + C e^{2 beta omega_{-t}} G(-t)`` with
    ``G(x) = int_{-inf}^x exp(-2 beta omega_s + kappa (s - x)) ds`` computed
    by one trapezoidal recursion from the oldest sample (where G = 0).
    """
    kappa, C, _ = absorption_rate(constants, epsilon)
    h = path.step
    w = path.values(path.first_index, 0)
    e = np.exp(-2.0 * beta * w)
    decay = math.exp(-kappa * h)
    G = np.empty_like(w)
    G[0] = 0.0
    for j in range(1, w.size):
        G[j] = decay * G[j - 1] + 0.5 * h * (e[j - 1] * decay + e[j])
    R2_past = 1.0 + C * G / e  # index j <-> time (first_index + j) * h

    def R2(k):
        k = np.asarray(k)
        return R2_past[w.size - 1 - k]

    R2.max_shift = w.size - 1
    return R2


@dataclass(frozen=True)
class TemperednessReport:
    eta: float
    valid: bool
    decayed: bool
    decay_time: float | None
    sequence: np.ndarray = field(repr=False)


def temperedness_stat(radius_fn, path, eta_grid, horizon: float, floor: float = 1e-6):
    """
    For each eta, track ``exp(-eta t) R^2(theta_{-t} omega)`` over grid t in
    [0, horizon] and report whether it drops below ``floor`` times its
    initial value.  eta <= 0 is reported as invalid.
    """
    step = path.step
    n = grid_index(horizon, step)
    if n > getattr(radius_fn, "max_shift", n):
        raise ConfigError("horizon exceeds the shifts available to radius_fn")
    k = np.arange(n + 1)
    R2 = np.asarray(radius_fn(k), dtype=float)
    t = k * step
    out = []
    for eta in eta_grid:
        eta = float(eta)
        if not eta > 0:
            out.append(TemperednessReport(eta, False, False, None, np.empty(0)))
            continue
        logseq = -eta * t + np.log(R2)
        below = np.flatnonzero(logseq < math.log(floor) + logseq[0])
        decay_time = float(t[below[0]]) if below.size else None
        out.append(TemperednessReport(eta, True, below.size > 0, decay_time, np.exp(logseq)))
    return out


# ---------------------------------------------------------------------------
# pullback ensembles and attractor estimates


@dataclass(eq=False)
class PullbackEnsemble:
    fiber_time: float
    pullback_times: list
    initial_set: np.ndarray
    fibers: list


def _with_context(exc: FracRDSError, **ctx):
    if isinstance(exc, NumericalError):
        exc.context.update(ctx)
    return exc


def pullback_evolve(cocycle: CocycleHandle, pullback_times, initial_set, fiber_time: float,
                    workers: int | None = None) -> PullbackEnsemble:
    """States at ``fiber_time`` of solutions started at ``fiber_time - T``."""
    initial = np.stack([np.asarray(x) for x in initial_set]) if len(initial_set) else None
    if initial is None:
        raise ConfigError("initial set must be nonempty")
    times = [float(T) for T in pullback_times]
    if any(T < 0 for T in times):
        raise ConfigError("pullback times must be nonnegative")

    def run(job):
        T, i = job
        try:
            return cocycle.evaluate(T, fiber_time - T, initial[i])
        except NumericalError as exc:
            raise _with_context(exc, pullback_time=T, index=i)

    jobs = [(T, i) for T in times for i in range(initial.shape[0])]
    flat = _ordered_map(run, jobs, workers)
    n = initial.shape[0]
    fibers = [np.stack(flat[j * n:(j + 1) * n]) for j in range(len(times))]
    return PullbackEnsemble(float(fiber_time), times, initial, fibers)


@dataclass(eq=False)
class AttractorEstimate:
    fiber_time: float
    points: np.ndarray
    diameter: float
    semidist_history: list
    fiber_diameters: list
    pullback_times: list
    converged: bool
    verdict: str
    invariance_gap: float | None = None

    def summary(self) -> dict:
        return {
            "fiber_time": self.fiber_time,
            "pullback_times": list(self.pullback_times),
            "semidist_history": list(self.semidist_history),
            "fiber_diameters": list(self.fiber_diameters),
            "diameter": self.diameter,
            "converged": self.converged,
            "verdict": self.verdict,
            "invariance_gap": self.invariance_gap,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"

    def write_points_csv(self, fh, model) -> None:
        coeffs = np.stack([model.coefficients(p) for p in self.points])
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"coeff_{j}" for j in range(coeffs.shape[1])])
        for row in coeffs:
            writer.writerow([f"{c:.17g}" for c in row])


def _diameter(points, norm) -> float:
    if len(points) < 2:
        return 0.0
    return float(max(np.max(norm(p[None, ...] - points)) for p in points))


def attractor_estimate(ensemble: PullbackEnsemble, norm=None, tol: float = 1e-3,
                       monotone_slack: float = 1e-12) -> AttractorEstimate:
    """
    Deepest-fiber approximation of the attractor fiber.

    ``semidist_history[i]`` is the semi-distance from fiber i to the deepest
    fiber.  The estimate is accepted (``converged``) when the history is
    nonincreasing up to ``monotone_slack`` and its second-to-last entry is
    below ``tol``; the last entry is 0 by construction.
    """
    if len(ensemble.fibers) < 2:
        raise ConfigError("attractor estimate needs at least two pullback times")
    norm = _euclidean if norm is None else norm
    last = ensemble.fibers[-1]
    history = [hausdorff_semidist(f, last, norm) for f in ensemble.fibers]
    diams = [_diameter(f, norm) for f in ensemble.fibers]
    monotone = all(b <= a + monotone_slack for a, b in zip(history, history[1:]))
    small = history[-2] < tol
    if monotone and small:
        verdict = "converged"
    elif not monotone:
        verdict = "not converged: semi-distance history is not monotone"
    else:
        verdict = f"not converged: semi-distance {history[-2]:.3e} >= tolerance {tol:.1e}"
    return AttractorEstimate(
        fiber_time=ensemble.fiber_time, points=last, diameter=diams[-1],
        semidist_history=history, fiber_diameters=diams,
        pullback_times=list(ensemble.pullback_times),
        converged=monotone and small, verdict=verdict,
    )


def attractor_invariance_gap(estimate: AttractorEstimate, cocycle: CocycleHandle, t: float,
                             shifted_estimate: AttractorEstimate, norm=None) -> float:
    """Two-sided semi-distance between phi(t, omega, A) and the fiber at theta_t omega."""
    norm = cocycle.model.norm_h if norm is None else norm
    moved = [cocycle.evaluate(t, estimate.fiber_time, x) for x in estimate.points]
    a = hausdorff_semidist(moved, shifted_estimate.points, norm)
    b = hausdorff_semidist(shifted_estimate.points, moved, norm)
    return max(a, b)
