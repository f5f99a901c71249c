"""
Pathwise time stepping for ``du = A(t, u) dt + beta u d omega``.

Two routes are provided.  The direct route discretizes the Young integral
with a left-point rule.  The transform route integrates
``d u~ = z_t A(t, z_t^{-1} u~) dt`` with ``z_t = exp(-beta omega_t)``.

Transform-route steps are normalized locally: on each cell [t_n, t_{n+1}]
the factor is ``z_t / z_{t_n}``, so a step only sees the increment of the
path over that cell.  Multiplying z by a constant leaves the transformed
equation and every scheme below unchanged, so this is the same method in
exact arithmetic, and it makes restarts and shifted replays reproduce the
step sequence bit for bit.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .errors import (
    BlowUpError,
    ConfigError,
    EnergyViolationError,
    NewtonConvergenceError,
    TransformOverflowError,
)
from .noise import HolderEstimate, grid_index, holder_from_samples
from .young import OVERFLOW_LIMIT

__all__ = [
    "SCHEMES",
    "SolveConfig",
    "Trajectory",
    "DependenceReport",
    "solve",
    "solve_transformed",
    "solve_direct_young",
    "equivalence_gap",
    "continuous_dependence_gap",
    "pairing_holder_estimate",
]

SCHEMES = ("direct-young", "transform-explicit", "transform-imex", "transform-implicit")
EXPLICIT = ("direct-young", "transform-explicit")
BLOWUP_THRESHOLD = 1e12
_CHUNK = 64


@dataclass(frozen=True)
class SolveConfig:
    """
    Time-stepping options.

    ``dt`` must equal the noise step or divide it by an integer; within a
    noise cell the path is interpolated linearly.  ``save_every`` thins the
    stored states (diagnostics are kept at every step).
    """

    dt: float
    scheme: str = "transform-imex"
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    save_every: int = 1
    check_energy: bool = True
    energy_tol: float = 1e-8

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not self.newton_tol > 0 or self.newton_max_iter < 1:
            raise ConfigError("Newton tolerance and iteration cap must be positive")
        if self.save_every < 1:
            raise ConfigError("save_every must be >= 1")
        if not self.energy_tol > 0:
            raise ConfigError("energy_tol must be positive")

    def substeps(self, noise_step: float) -> int:
        m = round(noise_step / self.dt)
        if m < 1 or abs(m * self.dt - noise_step) > 1e-9 * noise_step:
            raise ConfigError(
                f"dt = {self.dt} must equal the noise step {noise_step} or divide it"
            )
        return int(m)


@dataclass(eq=False)
class Trajectory:
    """Solution of one solve on a grid window.

    ``times``, ``norm_h``, ``norm_v``, ``v_integral`` (running integral of
    ``|u|_V^alpha``), ``omega`` and ``z`` (the transform factor relative to
    the window start) have one entry per step time; ``states`` holds the
    saved states at ``times[saved_steps]``.
    """

    scheme: str
    dt: float
    beta: float
    times: np.ndarray
    omega: np.ndarray
    z: np.ndarray
    norm_h: np.ndarray
    norm_v: np.ndarray
    v_integral: np.ndarray
    saved_steps: np.ndarray
    states: np.ndarray
    energy_excess_max: float
    newton_iterations: int = 0
    model: object = field(default=None, repr=False)

    @property
    def state_times(self) -> np.ndarray:
        return self.times[self.saved_steps]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def state_at(self, t: float) -> np.ndarray:
        k = grid_index(t - self.times[0], self.dt)
        hit = np.flatnonzero(self.saved_steps == k)
        if hit.size == 0:
            raise ConfigError(f"no saved state at t = {t}")
        return self.states[hit[0]]

    def summary(self) -> dict:
        return {
            "scheme": self.scheme,
            "dt": self.dt,
            "beta": self.beta,
            "window": [float(self.times[0]), float(self.times[-1])],
            "steps": int(self.times.size - 1),
            "final_normH": float(self.norm_h[-1]),
            "energy_slack_max": float(self.energy_excess_max),
            "newton_iterations": int(self.newton_iterations),
        }

    def write_csv(self, fh, coefficients: bool = False) -> None:
        """``time,normH,normV[,coeff_0..]``; coefficient rows at saved steps."""
        writer = csv.writer(fh, lineterminator="\n")
        rows = self.saved_steps if coefficients else np.arange(self.times.size)
        header = ["time", "normH", "normV"]
        coeffs = None
        if coefficients:
            coeffs = np.stack([self.model.coefficients(s) for s in self.states])
            header += [f"coeff_{j}" for j in range(coeffs.shape[1])]
        writer.writerow(header)
        for j, k in enumerate(rows):
            row = [f"{self.times[k]:.17g}", f"{self.norm_h[k]:.17g}", f"{self.norm_v[k]:.17g}"]
            if coeffs is not None:
                row += [f"{c:.17g}" for c in coeffs[j]]
            writer.writerow(row)

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# core integrator


class _Diagnostics:
    """Chunked norm, energy and blow-up bookkeeping."""

    def __init__(self, model, cfg: SolveConfig, times, z, nsteps, explicit):
        self.model, self.cfg = model, cfg
        self.times, self.z = times, z
        self.explicit = explicit
        self.norm_h = np.empty(nsteps + 1)
        self.norm_v = np.empty(nsteps + 1)
        self.excess = -np.inf
        self.buf: list = []
        self.start = 0

    def push(self, u):
        self.buf.append(u)
        if len(self.buf) >= _CHUNK:
            self.flush()

    def flush(self):
        if not self.buf:
            return
        model, k0 = self.model, self.start
        block = np.stack(self.buf)
        idx = np.arange(k0, k0 + block.shape[0])
        with np.errstate(all="ignore"):
            nh = model.norm_h(block)
        bad = ~np.isfinite(nh) | (nh > BLOWUP_THRESHOLD)
        if bad.any():
            k = int(idx[np.argmax(bad)])
            raise BlowUpError(
                f"|u|_H exceeded {BLOWUP_THRESHOLD:g} at step {k} (t = {self.times[k]:.6g})",
                step=k, time=float(self.times[k]), norm_h=float(nh[np.argmax(bad)]),
            )
        self.norm_h[idx] = nh
        self.norm_v[idx] = model.norm_v(block)
        if self.cfg.check_energy:
            # explicit schemes evaluate A at the start of a step, the others at the end
            sel = idx < len(self.times) - 1 if self.explicit else idx > 0
            if sel.any():
                self._energy(block[sel], idx[sel])
        self.buf.clear()
        self.start = k0 + block.shape[0]

    def _energy(self, block, idx):
        model = self.model
        c = model.constants
        if model.is_autonomous:
            A = model.apply(self.times[idx[0]], block)
            bound = np.full(idx.size, float(model.coercive_bound(0.0)))
        else:
            A = np.stack([model.apply(self.times[k], u) for k, u in zip(idx, block)])
            bound = np.array([float(model.coercive_bound(self.times[k])) for k in idx])
        lhs = 2.0 * model.pairing(A, block)
        diss = c.gamma_coercive * self.norm_v[idx] ** c.alpha
        grow = c.k_coercive * self.norm_h[idx] ** 2
        excess = lhs - (-diss + grow + bound)
        scale = np.maximum.reduce([np.ones_like(lhs), np.abs(lhs), diss, grow, np.abs(bound)])
        rel = excess / scale
        if np.any(rel > self.cfg.energy_tol):
            j = int(np.argmax(rel))
            raise EnergyViolationError(
                f"energy inequality violated at step {idx[j]} (relative excess {rel[j]:.3e})",
                step=int(idx[j]), time=float(self.times[idx[j]]), relative_excess=float(rel[j]),
            )
        self.excess = max(self.excess, float(np.max(self.z[idx] ** 2 * excess)))


def _newton(model, t, u, zr, h, cfg: SolveConfig, step: int):
    """Solve ``v = u + h zr A(t, v / zr)`` by damped Newton; returns (v, iterations)."""
    shape = u.shape
    eye = np.eye(u.size)
    v = u.copy()

    def residual(v):
        return v - u - h * zr * model.apply(t, v / zr)

    G = residual(v)
    for it in range(1, cfg.newton_max_iter + 1):
        J = model.jacobian(t, (v / zr).reshape(shape))
        delta = np.linalg.solve(eye - h * J, -G.ravel()).reshape(shape)
        gnorm = np.linalg.norm(G)
        lam = 1.0
        while True:
            cand = v + lam * delta
            Gc = residual(cand)
            if np.linalg.norm(Gc) <= (1.0 - 1e-4 * lam) * gnorm or lam <= 1.0 / 64.0:
                break
            lam *= 0.5
        v, G = cand, Gc
        if np.max(np.abs(lam * delta)) <= cfg.newton_tol * max(1.0, float(np.max(np.abs(v)))):
            return v, it
    raise NewtonConvergenceError(
        f"Newton did not converge in {cfg.newton_max_iter} iterations at step {step} (t = {t:.6g})",
        step=step, time=float(t), residual=float(np.linalg.norm(G)),
    )


def solve(model, path, beta: float, u0, window, cfg: SolveConfig, time_offset: float = 0.0):
    """
    Integrate from ``window[0]`` to ``window[1]`` with the scheme in ``cfg``.

    Parameters
    ----------
    model : GelfandModel
    path : grid path
        Noise realization (``TwoSidedPath`` or ``ShiftedPathView``).
    beta : float
        Noise intensity.
    u0 : array
        Initial state at ``window[0]``.
    window : (float, float)
        Grid-aligned time window in path time.
    cfg : SolveConfig
    time_offset : float
        Added to path time to obtain the model time of a nonautonomous A.
        Must be grid-aligned.

    Returns
    -------
    Trajectory
    """
    if cfg.scheme == "transform-implicit" and model.jacobian(0.0, model.zero()) is None:
        raise ConfigError(f"scheme 'transform-implicit' needs a Jacobian; model {model.name!r} has none")
    u = np.array(model.validate_state(u0), copy=True)
    step = path.step
    m = cfg.substeps(step)
    h = step / m
    i0, i1 = path.index_of(window[0]), path.index_of(window[1])
    if i1 < i0:
        raise ConfigError(f"window {window} is reversed")
    off = grid_index(time_offset, step)
    nsteps = (i1 - i0) * m

    w = path.values(i0, i1)
    dw = path.increments(i0, i1) if i1 > i0 else np.empty(0)
    if m == 1:
        dws = dw
        omega = np.array(w, dtype=float)
    else:
        dws = np.repeat(dw / m, m)
        frac = np.tile(np.arange(m) / m, i1 - i0)
        omega = np.append(np.repeat(w[:-1], m) + frac * np.repeat(dw, m), w[-1])
    if np.any(np.abs(beta * (omega - omega[0])) > OVERFLOW_LIMIT):
        k = int(np.argmax(np.abs(beta * (omega - omega[0])) > OVERFLOW_LIMIT))
        raise TransformOverflowError("transform factor overflows", step=k)
    zr = np.exp(-beta * dws)
    zinv = np.exp(beta * dws)
    z = np.exp(-beta * (omega - omega[0]))
    path_times = (i0 * m + np.arange(nsteps + 1)) * h
    model_times = ((i0 + off) * m + np.arange(nsteps + 1)) * h

    scheme = cfg.scheme
    diag = _Diagnostics(model, cfg, model_times, z, nsteps, scheme in EXPLICIT)
    saved_steps = np.unique(np.append(np.arange(0, nsteps + 1, cfg.save_every), nsteps))
    states = np.empty((saved_steps.size,) + u.shape, dtype=u.dtype)
    states[0] = u
    slot = 1
    newton_total = 0
    diag.push(u)
    apply = model.apply
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(nsteps):
            t = model_times[n]
            if scheme == "direct-young":
                u = u + h * apply(t, u) + beta * dws[n] * u
            elif scheme == "transform-explicit":
                u = (u + h * apply(t, u)) * zinv[n]
            elif scheme == "transform-imex":
                u = model.imex_step(t, u, zr[n], h) * zinv[n]
            else:
                v, it = _newton(model, model_times[n + 1], u, zr[n], h, cfg, n)
                newton_total += it
                u = v * zinv[n]
            diag.push(u)
            if slot < saved_steps.size and saved_steps[slot] == n + 1:
                states[slot] = u
                slot += 1
    diag.flush()

    alpha = model.constants.alpha
    nv = diag.norm_v ** alpha
    vint = np.concatenate([[0.0], np.cumsum(0.5 * h * (nv[1:] + nv[:-1]))])
    return Trajectory(
        scheme=scheme, dt=h, beta=float(beta), times=path_times, omega=omega, z=z,
        norm_h=diag.norm_h, norm_v=diag.norm_v, v_integral=vint,
        saved_steps=saved_steps, states=states,
        energy_excess_max=diag.excess if np.isfinite(diag.excess) else 0.0,
        newton_iterations=newton_total, model=model,
    )


def solve_transformed(model, path, beta, u0, window, cfg: SolveConfig, time_offset: float = 0.0):
    """Transform route; ``cfg.scheme`` must be one of the ``transform-*`` schemes."""
    if cfg.scheme == "direct-young":
        raise ConfigError("solve_transformed needs a transform-* scheme")
    return solve(model, path, beta, u0, window, cfg, time_offset)


def solve_direct_young(model, path, beta, u0, window, cfg: SolveConfig, time_offset: float = 0.0):
    """Direct route ``u_{n+1} = u_n + dt A(t_n, u_n) + beta u_n (omega_{n+1} - omega_n)``."""
    return solve(model, path, beta, u0, window, replace(cfg, scheme="direct-young"), time_offset)


def _matched_transform(cfg: SolveConfig) -> SolveConfig:
    if cfg.scheme == "direct-young":
        return replace(cfg, scheme="transform-explicit")
    return cfg


def _sup_gap(model, a: Trajectory, b: Trajectory) -> float:
    if a.states.shape != b.states.shape:
        raise ConfigError("trajectories are not aligned")
    return float(np.max(model.norm_h(a.states - b.states)))


def equivalence_gap(model, path, beta, u0, window, cfg: SolveConfig,
                    return_trajectories: bool = False, time_offset: float = 0.0):
    """
    sup over saved times of ``|u_direct - u_transform|_H``.

    The direct route always uses ``direct-young``; the transform route uses
    ``cfg.scheme``, or ``transform-explicit`` when ``cfg.scheme`` is the
    direct scheme (matched explicit pair).
    """
    direct = solve_direct_young(model, path, beta, u0, window, cfg, time_offset)
    transformed = solve(model, path, beta, u0, window, _matched_transform(cfg), time_offset)
    gap = _sup_gap(model, direct, transformed)
    return (gap, direct, transformed) if return_trajectories else gap


class DependenceReport(NamedTuple):
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray

    def holds(self, tol: float = 1e-6) -> bool:
        return bool(np.all(self.lhs <= self.rhs * (1.0 + tol)))

    def worst_ratio(self) -> float:
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(self.rhs > 0, self.lhs / self.rhs, np.where(self.lhs > 0, np.inf, 0.0))
        return float(np.max(r))


def continuous_dependence_gap(model, path, beta, u0a, u0b, window, cfg: SolveConfig,
                              time_offset: float = 0.0) -> DependenceReport:
    """
    Gronwall comparison for two solutions driven by the same path.

    ``lhs(t) = |u~_1(t) - u~_2(t)|_H^2`` with ``u~ = exp(-beta omega_t) u`` and
    ``rhs(t) = exp(int (C(s) + rho(u_1) + eta(u_2)) ds) * lhs(t0)``, the
    integral taken by the trapezoidal rule on the step grid.
    """
    cfg = replace(cfg, save_every=1)
    a = solve(model, path, beta, u0a, window, cfg, time_offset)
    b = solve(model, path, beta, u0b, window, cfg, time_offset)
    zabs = np.exp(-beta * a.omega)
    diff = model.norm_h(a.states - b.states) ** 2
    lhs = zabs**2 * diff
    off = time_offset
    mono = np.array([float(model.monotone_bound(t + off)) for t in a.times])
    integrand = mono + model.rho(a.states) + model.eta(b.states)
    expo = np.concatenate([[0.0], np.cumsum(0.5 * a.dt * (integrand[1:] + integrand[:-1]))])
    rhs = np.exp(expo) * lhs[0]
    return DependenceReport(a.times, lhs, rhs)


def pairing_holder_estimate(traj: Trajectory, v, exponent: float) -> HolderEstimate:
    """Hölder seminorm of ``t -> <u(t), v>_H`` over the saved states."""
    series = traj.model.inner_h(traj.states, v)
    steps = np.diff(traj.saved_steps)
    if steps.size and np.any(steps != steps[0]):
        series, spacing = series[:-1], steps[0]
    else:
        spacing = steps[0] if steps.size else 1
    if series.size < 2:
        return HolderEstimate(exponent, 0.0, (float(traj.times[0]), float(traj.times[-1])))
    seminorm, exhaustive = holder_from_samples(series, traj.dt * spacing, exponent)
    return HolderEstimate(exponent, seminorm, (float(traj.times[0]), float(traj.times[-1])), exhaustive)
