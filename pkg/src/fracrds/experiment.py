"""
Experiment configuration, execution and deterministic result emission.

A run writes payload files (CSV/JSON/SVG) that depend only on the
configuration, plus ``manifest.json`` which also records timestamps.
Files are staged in a temporary directory next to the output directory
and moved into place one by one with ``os.replace``; the manifest goes
last.
"""

from __future__ import annotations

import copy
import datetime as _dt
import hashlib
import io
import json
import math
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .attractor import (
    CocycleHandle,
    attractor_estimate,
    attractor_invariance_gap,
    pullback_evolve,
)
from .errors import ConfigError, FracRDSError, NumericalError
from .models import build_model, check_assumptions
from .noise import (
    HurstIndex,
    build_two_sided_path,
    growth_ratio,
    holder_seminorm,
    save_path,
    subsample_path,
)
from .plots import Series, line_plot_svg, loglog_fit, slope_annotation
from .solver import SCHEMES, SolveConfig, equivalence_gap, solve
from .young import exp_sde_residual, exp_transform, young_integral

__all__ = [
    "TASKS",
    "ExperimentConfig",
    "RunManifest",
    "PlotSpec",
    "load_config",
    "parse_config",
    "serialize_config",
    "run_experiment",
    "emit_plots",
]

TASKS = ("generate-noise", "solve", "equivalence", "pullback", "attractor", "check-assumptions")

_REQ = object()

# block -> key -> (expected python types, default or _REQ)
SCHEMA: dict[str, dict[str, tuple]] = {
    "noise": {
        "hurst": ((int, float), _REQ),
        "step": ((int, float), _REQ),
        "n_past": ((int,), 0),
        "n_future": ((int,), _REQ),
        "seed": ((int,), _REQ),
    },
    "model": {
        "type": ((str,), _REQ),
        "params": ((dict,), {}),
        "beta": ((int, float), 0.0),
    },
    "solver": {
        "dt": ((int, float), _REQ),
        "scheme": ((str,), "transform-imex"),
        "newton_tol": ((int, float), 1e-12),
        "newton_max_iter": ((int,), 50),
        "save_every": ((int,), 1),
    },
    "initial": {
        "seed": ((int,), _REQ),
        "count": ((int,), 1),
        "scale": ((int, float), 1.0),
    },
    "window": None,  # [t0, t1]
    "refinement": {
        "factors": ((list,), [1, 2, 4, 8, 16]),
    },
    "pullback": {
        "fiber_time": ((int, float), 0.0),
        "depths": ((list,), _REQ),
        "tolerance": ((int, float), 1e-3),
        "invariance_shift": ((int, float), 0.0),
    },
    "checks": {
        "samples": ((int,), 1000),
        "seed": ((int,), _REQ),
        "scale": ((int, float), 1.0),
        "time": ((int, float), 0.0),
    },
    "output": {
        "dir": ((str,), "fracrds-out"),
        "plots": ((bool,), False),
        "coefficients": ((bool,), False),
    },
}

REQUIRED_BLOCKS = {
    "generate-noise": ("noise",),
    "solve": ("noise", "model", "solver", "initial", "window"),
    "equivalence": ("noise", "model", "solver", "initial", "window", "refinement"),
    "pullback": ("noise", "model", "solver", "initial", "pullback"),
    "attractor": ("noise", "model", "solver", "initial", "pullback"),
    "check-assumptions": ("model", "checks"),
}

# blocks whose every key has a default may be omitted
_DEFAULTABLE = ("refinement", "output")


@dataclass(frozen=True)
class ExperimentConfig:
    task: str
    blocks: dict

    def block(self, name: str) -> dict:
        return self.blocks[name]

    def to_dict(self) -> dict:
        return {"task": self.task, **copy.deepcopy(self.blocks)}

    def sha256(self) -> str:
        """Hash of the canonical configuration, excluding the output block."""
        d = self.to_dict()
        d.pop("output", None)
        return hashlib.sha256(_canonical(d).encode()).hexdigest()

    def seeds(self) -> dict:
        out = {}
        for name in ("noise", "initial", "checks"):
            if name in self.blocks:
                out[name] = self.blocks[name]["seed"]
        return out


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _fill_block(name: str, raw) -> dict:
    schema = SCHEMA[name]
    if not isinstance(raw, dict):
        raise ConfigError(f"block '{name}' must be an object")
    unknown = set(raw) - set(schema)
    if unknown:
        raise ConfigError(f"unknown key(s) in '{name}': {sorted(unknown)}")
    out = {}
    for key, (types, default) in schema.items():
        if key in raw:
            value = raw[key]
            if isinstance(value, bool) and bool not in types:
                raise ConfigError(f"'{name}.{key}' must be {types[0].__name__}, got bool")
            if not isinstance(value, types):
                raise ConfigError(
                    f"'{name}.{key}' must be {' or '.join(t.__name__ for t in types)}, "
                    f"got {type(value).__name__}"
                )
            out[key] = float(value) if float in types and not isinstance(value, bool) else value
        elif default is _REQ:
            raise ConfigError(f"missing required key '{name}.{key}'")
        else:
            out[key] = copy.deepcopy(default)
    return out


def _validate(task: str, blocks: dict) -> None:
    if "noise" in blocks:
        n = blocks["noise"]
        try:
            HurstIndex(n["hurst"])
        except ConfigError as exc:
            raise ConfigError(f"'noise.hurst': {exc}") from None
        if not n["step"] > 0:
            raise ConfigError("'noise.step' must be positive")
        if n["n_past"] < 0 or n["n_future"] < 0 or n["n_past"] + n["n_future"] < 1:
            raise ConfigError("'noise.n_past' and 'noise.n_future' must be nonnegative with a positive sum")
    if "solver" in blocks:
        s = blocks["solver"]
        if s["scheme"] not in SCHEMES:
            raise ConfigError(f"'solver.scheme' must be one of {list(SCHEMES)}, got {s['scheme']!r}")
        if not s["dt"] > 0:
            raise ConfigError("'solver.dt' must be positive")
    if "window" in blocks:
        w = blocks["window"]
        if (not isinstance(w, list) or len(w) != 2
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in w)
                or not w[0] <= w[1]):
            raise ConfigError("'window' must be [t0, t1] with t0 <= t1")
        blocks["window"] = [float(w[0]), float(w[1])]
    if "initial" in blocks and blocks["initial"]["count"] < 1:
        raise ConfigError("'initial.count' must be >= 1")
    if "pullback" in blocks:
        d = blocks["pullback"]["depths"]
        if (len(d) < 2 or not all(isinstance(v, (int, float)) and not isinstance(v, bool) and v >= 0 for v in d)):
            raise ConfigError("'pullback.depths' must list at least two nonnegative times")
        blocks["pullback"]["depths"] = [float(v) for v in d]
    if "refinement" in blocks:
        f = blocks["refinement"]["factors"]
        if len(f) < 2 or not all(isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in f):
            raise ConfigError("'refinement.factors' must list at least two positive integers")
    if "checks" in blocks and blocks["checks"]["samples"] < 1:
        raise ConfigError("'checks.samples' must be >= 1")
    if "model" in blocks:
        # constructing the model validates type and parameters
        build_model(blocks["model"]["type"], blocks["model"]["params"])


def parse_config(raw: dict, task: str | None = None) -> ExperimentConfig:
    """Validate a configuration mapping and fill documented defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    raw = copy.deepcopy(raw)
    file_task = raw.pop("task", None)
    if task is None:
        task = file_task
    elif file_task is not None and file_task != task:
        raise ConfigError(f"config declares task {file_task!r} but {task!r} was requested")
    if task not in TASKS:
        raise ConfigError(f"'task' must be one of {list(TASKS)}, got {task!r}")
    unknown = set(raw) - set(SCHEMA)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {sorted(unknown)}")
    blocks: dict = {}
    for name in REQUIRED_BLOCKS[task]:
        if name not in raw and name not in _DEFAULTABLE:
            raise ConfigError(f"task {task!r} requires block '{name}'")
    for name in SCHEMA:
        if name in raw:
            blocks[name] = raw[name] if name == "window" else _fill_block(name, raw[name])
        elif name in _DEFAULTABLE:
            blocks[name] = _fill_block(name, {})
    _validate(task, blocks)
    return ExperimentConfig(task, blocks)


def load_config(path, task: str | None = None) -> ExperimentConfig:
    """Read and validate a JSON configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    return parse_config(raw, task)


def serialize_config(cfg: ExperimentConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# outputs


@dataclass
class PlotSpec:
    name: str
    series: list
    title: str
    xlabel: str
    ylabel: str
    logx: bool = False
    logy: bool = False
    fit_slope: bool = False


def emit_plots(specs, out_dir, enabled: bool = True):
    """Write one SVG per PlotSpec; plots with no data are skipped with a warning.

    Returns (written file names, warnings).
    """
    files, warnings = [], []
    if not enabled:
        return files, warnings
    specs = list(specs)
    if not specs:
        warnings.append("no plot series supplied; nothing drawn")
        return files, warnings
    out_dir = Path(out_dir)
    for spec in specs:
        series = [s for s in spec.series if len(s.x) and len(s.y)]
        if not series:
            warnings.append(f"plot '{spec.name}' skipped: missing series")
            continue
        note = None
        if spec.fit_slope:
            slope, _ = loglog_fit(series[0].x, series[0].y)
            note = slope_annotation(slope)
        svg = line_plot_svg(series, spec.title, spec.xlabel, spec.ylabel,
                            spec.logx, spec.logy, note)
        name = f"{spec.name}.svg"
        (out_dir / name).write_text(svg)
        files.append(name)
    return files, warnings


@dataclass
class RunManifest:
    task: str
    status: str
    config_sha256: str
    seeds: dict
    version: str
    started_at: str
    finished_at: str
    summary: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    error: dict | None = None
    exit_code: int = 0

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _dump(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, default=_json_default) + "\n"


def _clean(obj):
    """Replace non-finite floats by strings so the JSON stays standard."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return obj


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


# ---------------------------------------------------------------------------
# tasks


def _path_from(cfg: ExperimentConfig):
    n = cfg.block("noise")
    return build_two_sided_path(n["hurst"], n["step"], n["n_past"], n["n_future"], n["seed"])


def _model_from(cfg: ExperimentConfig):
    m = cfg.block("model")
    return build_model(m["type"], m["params"]), m["beta"]


def _solver_cfg(cfg: ExperimentConfig, **over) -> SolveConfig:
    s = dict(cfg.block("solver"))
    s.update(over)
    return SolveConfig(**s)


def _initial_set(cfg: ExperimentConfig, model):
    b = cfg.block("initial")
    rng = np.random.default_rng(b["seed"])
    return [model.random_state(rng, b["scale"]) for _ in range(b["count"])]


def _task_generate_noise(cfg, stage: Path):
    path = _path_from(cfg)
    save_path(path, stage / "path")
    summary = {"n_samples": int(path.samples.size)}
    t1 = path.n_future * path.step
    if path.n_future >= 2:
        est = holder_seminorm(path, min(0.5, float(path.hurst) - 0.05), (0.0, t1))
        summary["holder"] = {"exponent": est.exponent, "seminorm": est.seminorm,
                             "window": list(est.window), "exhaustive": est.exhaustive}
    try:
        g = growth_ratio(path)
        summary["growth_ratio_final"] = float(g.ratios[-1])
        summary["growth_ratio_median"] = float(np.median(g.ratios))
    except ConfigError:
        pass
    plots = [PlotSpec("path", [Series("omega", tuple(path.times), tuple(path.samples))],
                      "fBm sample path", "t", "omega")]
    return summary, plots


def _task_solve(cfg, stage: Path):
    path = _path_from(cfg)
    model, beta = _model_from(cfg)
    u0 = _initial_set(cfg, model)[0]
    traj = solve(model, path, beta, u0, tuple(cfg.block("window")), _solver_cfg(cfg))
    buf = io.StringIO()
    traj.write_csv(buf, coefficients=cfg.block("output")["coefficients"])
    (stage / "trajectory.csv").write_text(buf.getvalue())
    summary = traj.summary()
    (stage / "summary.json").write_text(_dump(summary))
    plots = [PlotSpec("norm_vs_time", [Series("|u|_H", tuple(traj.times), tuple(traj.norm_h))],
                      "H-norm of the solution", "t", "|u|_H")]
    return summary, plots


def _task_equivalence(cfg, stage: Path):
    fine = _path_from(cfg)
    model, beta = _model_from(cfg)
    u0 = _initial_set(cfg, model)[0]
    window = tuple(cfg.block("window"))
    base = cfg.block("solver")
    m = round(fine.step / base["dt"])
    rows = []
    for f in sorted(cfg.block("refinement")["factors"]):
        path = subsample_path(fine, f) if f > 1 else fine
        scfg = _solver_cfg(cfg, dt=path.step / m)
        gap = equivalence_gap(model, path, beta, u0, window, scfg)
        res = exp_sde_residual(exp_transform(beta, path, window), path, window)
        w = path.values(path.index_of(window[0]), path.index_of(window[1]))
        ito = abs(young_integral(path, path, *window) - 0.5 * (w[-1] ** 2 - w[0] ** 2))
        rows.append((scfg.dt, gap, res, ito))
    rows.sort()
    lines = ["dt,equivalence_gap,exp_sde_residual,chain_rule_residual"]
    lines += [",".join(f"{v:.17g}" for v in r) for r in rows]
    (stage / "refinement.csv").write_text("\n".join(lines) + "\n")
    dts = [r[0] for r in rows]
    summary = {"dt": dts}
    plots = []
    for j, name in ((1, "equivalence_gap"), (2, "exp_sde_residual"), (3, "chain_rule_residual")):
        ys = [r[j] for r in rows]
        summary[name] = ys
        positive = all(y > 0 for y in ys)
        summary[f"{name}_order"] = loglog_fit(dts, ys)[0] if positive else None
        if positive:
            plots.append(PlotSpec(f"{name}_loglog", [Series(name, tuple(dts), tuple(ys))],
                                  f"{name} under refinement", "dt", name,
                                  logx=True, logy=True, fit_slope=True))
    (stage / "summary.json").write_text(_dump(summary))
    return summary, plots


def _ensemble(cfg, path, model, beta, fiber_time):
    pb = cfg.block("pullback")
    coc = CocycleHandle(model, beta, _solver_cfg(cfg), path)
    ens = pullback_evolve(coc, pb["depths"], _initial_set(cfg, model), fiber_time)
    est = attractor_estimate(ens, model.norm_h, pb["tolerance"])
    return coc, ens, est


def _write_points(stage: Path, name: str, est, model):
    buf = io.StringIO()
    est.write_points_csv(buf, model)
    (stage / name).write_text(buf.getvalue())


def _task_pullback(cfg, stage: Path, with_invariance: bool = False):
    path = _path_from(cfg)
    model, beta = _model_from(cfg)
    pb = cfg.block("pullback")
    coc, ens, est = _ensemble(cfg, path, model, beta, pb["fiber_time"])
    shift = pb["invariance_shift"]
    if with_invariance and shift > 0:
        _, _, est_shift = _ensemble(cfg, path, model, beta, pb["fiber_time"] + shift)
        est.invariance_gap = attractor_invariance_gap(est, coc, shift, est_shift)
    summary = est.summary()
    name = "attractor" if with_invariance else "ensemble"
    (stage / f"{name}.json").write_text(_dump(summary))
    _write_points(stage, "points.csv", est, model)
    plots = [PlotSpec("semidist_vs_depth",
                      [Series("semi-distance to deepest fiber", tuple(est.pullback_times[:-1]),
                              tuple(est.semidist_history[:-1]))],
                      "pullback convergence", "pullback depth T", "dist_H")]
    return summary, plots


def _task_check_assumptions(cfg, stage: Path):
    m = cfg.block("model")
    model = build_model(m["type"], m["params"])
    c = cfg.block("checks")
    rep = check_assumptions(model, c["time"], np.random.default_rng(c["seed"]),
                            c["samples"], c["scale"])
    summary = {**rep.as_dict(), "passed": rep.passed(), "model": model.describe(),
               "constants": dict(model.constants.__dict__)}
    (stage / "checks.json").write_text(_dump(summary))
    return summary, []


_RUNNERS = {
    "generate-noise": _task_generate_noise,
    "solve": _task_solve,
    "equivalence": _task_equivalence,
    "pullback": _task_pullback,
    "attractor": lambda cfg, stage: _task_pullback(cfg, stage, with_invariance=True),
    "check-assumptions": _task_check_assumptions,
}


def _error_record(exc: BaseException) -> dict:
    rec = {"type": type(exc).__name__, "message": str(exc)}
    ctx = getattr(exc, "context", None)
    if ctx:
        rec["context"] = _clean(ctx)
    return rec


def run_experiment(cfg: ExperimentConfig, out_dir=None, plots: bool | None = None) -> RunManifest:
    """
    Execute ``cfg.task`` and write its outputs plus ``manifest.json``.

    Numerical and configuration failures inside the task do not raise;
    they produce a manifest with ``status = "failed"`` and exit code 3
    (numerical) or 2 (configuration).
    """
    out = Path(out_dir if out_dir is not None else cfg.block("output")["dir"])
    want_plots = cfg.block("output")["plots"] if plots is None else plots
    out.mkdir(parents=True, exist_ok=True)
    started = _now()
    stage = Path(tempfile.mkdtemp(prefix=".stage-", dir=out))
    manifest = RunManifest(cfg.task, "ok", cfg.sha256(), cfg.seeds(), __version__, started, "")
    try:
        try:
            summary, plot_specs = _RUNNERS[cfg.task](cfg, stage)
            manifest.summary = _clean(summary)
            if want_plots:
                files, warns = emit_plots(plot_specs, stage, True)
                manifest.warnings.extend(warns)
        except NumericalError as exc:
            manifest.status, manifest.exit_code, manifest.error = "failed", 3, _error_record(exc)
        except (ConfigError, FracRDSError) as exc:
            manifest.status, manifest.exit_code, manifest.error = "failed", 2, _error_record(exc)
        if manifest.status == "ok":
            (stage / "config.json").write_text(serialize_config(cfg))
            names = sorted(p.name for p in stage.iterdir())
            for name in names:
                os.replace(stage / name, out / name)
            manifest.files = names
    finally:
        shutil.rmtree(stage, ignore_errors=True)
    manifest.finished_at = _now()
    tmp = out / ".manifest.json.tmp"
    tmp.write_text(manifest.to_json())
    os.replace(tmp, out / "manifest.json")
    return manifest
