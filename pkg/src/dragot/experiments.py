"""Configuration-driven experiment running.

Experiments are described by flat key-value files (``section.key = value``,
``#`` comments), which keeps configurations diff-friendly and trivially
round-trippable. A config names a benchmark instance, a solver setup, the
evaluation budget, and an output directory; ``compare`` configs additionally
list variants as ``variant.<label>.<field>`` overrides. Each repeat writes one
evaluation CSV per seed, plus a ``meta.json`` sidecar with the fully resolved
configuration and a git describe string.
"""

from __future__ import annotations

import dataclasses
import json
import subprocess
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .ground_truth import GroundTruthInstance, example1, example2, example3
from .measures import DiscreteMeasure, UniformBall, load_measure_csv, pairwise_radii
from .metrics import (
    EvalRecord,
    average_records,
    cost_gap,
    fit_rate,
    map_error,
    potential_error_sq,
    write_records,
)
from .projection import cost_box, lipschitz_box
from .rng import RngStream
from .solvers import (
    SolverConfig,
    current_eps,
    current_gamma,
    default_eval_schedule,
    run,
    solution,
)
from .transport_map import map_apply_batch, mk_quantile_labels, write_pointcloud_csv

EXPORT_STREAM_BASE = 3 << 32
_MK_TARGET_STREAM = 4 << 32


class ConfigError(ValueError):
    """Raised for malformed or invalid experiment configurations."""


@dataclass
class InstanceSpec:
    kind: str = ""
    d: int = 2
    m: int = 100
    delta: float = 0.5
    seed: int = 0
    mc_n: int = 10_000_000
    target_csv: str = ""


@dataclass
class SolverSpec:
    t_max: int = 0
    variant: str = "drag"
    a: float = 0.33
    b: float = 2.0 / 3.0
    gamma1: float | None = None  # None means "source diameter"
    eps_scale: float = 0.1
    fixed_eps: float | None = None
    batch_size: int = 1
    scale_gamma_by_batch: bool = True
    averaging: str = "plain"
    omega: float = 2.0
    projection: str = "cu"
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_lr: float = 1e-3


@dataclass
class EvalSpec:
    n_cost: int = 100_000
    n_map: int = 100_000
    p: float = 2.0
    points: int = 40
    start: int = 10


@dataclass
class ExportSpec:
    n_points: int = 5000
    bands: int = 10


@dataclass
class ExperimentConfig:
    instance: InstanceSpec = field(default_factory=InstanceSpec)
    solver: SolverSpec = field(default_factory=SolverSpec)
    eval: EvalSpec = field(default_factory=EvalSpec)
    export: ExportSpec = field(default_factory=ExportSpec)
    repeats: int = 10
    output_dir: str = ""
    variants: list = field(default_factory=list)  # (label, {field: value})


_VARIANT_OVERRIDES = {
    "kind": ("variant", str),
    "eps": ("fixed_eps", float),
    "a": ("a", float),
    "b": ("b", float),
    "gamma1": ("gamma1", float),
    "eps_scale": ("eps_scale", float),
    "batch_size": ("batch_size", int),
    "scale_gamma_by_batch": ("scale_gamma_by_batch", bool),
    "averaging": ("averaging", str),
    "omega": ("omega", float),
    "adam_beta1": ("adam_beta1", float),
    "adam_beta2": ("adam_beta2", float),
    "adam_lr": ("adam_lr", float),
}


def parse_flat_text(text: str):
    """``key = value`` lines to an ordered {key: (raw, lineno)} mapping."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = (raw, lineno)
    return out


def _convert(raw: str, typ, key: str, lineno: int):
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: {key}: {exc}") from None


def config_from_flat(flat) -> ExperimentConfig:
    """Build and validate an :class:`ExperimentConfig` from a flat mapping."""
    exp = ExperimentConfig()
    sections = {
        "instance": exp.instance,
        "solver": exp.solver,
        "eval": exp.eval,
        "export": exp.export,
    }
    variant_raw: dict[str, dict] = {}
    for key, (raw, lineno) in flat.items():
        parts = key.split(".")
        if parts[0] == "variant":
            if len(parts) != 3:
                raise ConfigError(f"line {lineno}: expected variant.<label>.<field>")
            _, label, fname = parts
            if fname not in _VARIANT_OVERRIDES:
                raise ConfigError(f"line {lineno}: unknown variant field {fname!r}")
            target, typ = _VARIANT_OVERRIDES[fname]
            variant_raw.setdefault(label, {})[target] = _convert(raw, typ, key, lineno)
        elif len(parts) == 2 and parts[0] in sections:
            obj = sections[parts[0]]
            fname = parts[1]
            fobj = {f.name: f for f in dataclasses.fields(obj)}.get(fname)
            if fobj is None:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            base = type(getattr(obj, fname)) if getattr(obj, fname) is not None else float
            typ = {int: int, float: float, bool: bool, str: str}.get(base, str)
            if raw == "auto" and fname == "gamma1":
                setattr(obj, fname, None)
            else:
                setattr(obj, fname, _convert(raw, typ, key, lineno))
        elif key == "repeats":
            exp.repeats = _convert(raw, int, key, lineno)
        elif key == "output_dir":
            exp.output_dir = raw
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    exp.variants = sorted((label, ov) for label, ov in variant_raw.items())
    validate_experiment(exp)
    return exp


def config_to_flat(exp: ExperimentConfig) -> dict:
    """Flat mapping that reproduces the configuration on reload."""
    flat = {}
    for section, obj in (
        ("instance", exp.instance),
        ("solver", exp.solver),
        ("eval", exp.eval),
        ("export", exp.export),
    ):
        for f in dataclasses.fields(obj):
            val = getattr(obj, f.name)
            if val is None:
                if f.name == "gamma1":
                    flat["solver.gamma1"] = "auto"
                continue  # unset optionals stay at their defaults on reload
            if isinstance(val, bool):
                val = "true" if val else "false"
            elif isinstance(val, float):
                val = repr(val)
            flat[f"{section}.{f.name}"] = str(val)
    flat["repeats"] = str(exp.repeats)
    flat["output_dir"] = exp.output_dir
    for label, overrides in exp.variants:
        rev = {tgt: name for name, (tgt, _) in _VARIANT_OVERRIDES.items()}
        for tgt, val in overrides.items():
            if isinstance(val, bool):
                val = "true" if val else "false"
            elif isinstance(val, float):
                val = repr(val)
            flat[f"variant.{label}.{rev[tgt]}"] = str(val)
    return flat


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    try:
        return config_from_flat(parse_flat_text(text))
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def validate_experiment(exp: ExperimentConfig) -> None:
    if exp.repeats < 1:
        raise ConfigError("repeats: must be at least 1")
    inst = exp.instance
    if inst.kind not in ("example1", "example2", "example3", "mk"):
        raise ConfigError(f"instance.kind: unknown kind {inst.kind!r}")
    sol = exp.solver
    if sol.t_max < 1:
        raise ConfigError("solver.t_max: must be at least 1")
    if sol.variant in ("drag", "adam", "fixed_eps", "noreg") and not 0.5 < sol.b < 1.0:
        raise ConfigError("solver.b: must satisfy ½ < b < 1")
    if sol.variant in ("drag", "adam") and sol.a <= 0:
        raise ConfigError("solver.a: must satisfy 0 < a")
    if sol.variant == "fixed_eps" and (sol.fixed_eps is None or sol.fixed_eps <= 0):
        raise ConfigError("solver.fixed_eps: must be positive")
    if sol.projection not in ("cu", "cinf", "none"):
        raise ConfigError(f"solver.projection: unknown choice {sol.projection!r}")
    for label, overrides in exp.variants:
        kind = overrides.get("variant", sol.variant)
        if kind not in ("drag", "fixed_eps", "noreg", "adam"):
            raise ConfigError(f"variant.{label}.kind: unknown kind {kind!r}")
        if kind == "fixed_eps" and overrides.get("fixed_eps", sol.fixed_eps) is None:
            raise ConfigError(f"variant.{label}.eps: required for fixed_eps")


def build_instance(spec: InstanceSpec) -> GroundTruthInstance:
    if spec.kind == "example1":
        return example1(spec.d, spec.m)
    if spec.kind == "example2":
        return example2(spec.d, spec.m, spec.seed, spec.mc_n)
    if spec.kind == "example3":
        return example3(spec.delta, spec.m)
    raise ConfigError(f"instance.kind: {spec.kind!r} has no ground truth")


def boomerang_measure(m: int, seed: int) -> DiscreteMeasure:
    """Built-in 2-D crescent-shaped target for map-export demos."""
    rng = RngStream(seed, stream=_MK_TARGET_STREAM)
    u = rng.uniforms(2 * m).reshape(m, 2)
    theta = (2.0 * u[:, 0] - 1.0) * (3.0 * np.pi / 4.0)
    rad = 0.55 + 0.35 * u[:, 1]
    pts = np.column_stack([rad * np.cos(theta), rad * np.sin(theta)])
    return DiscreteMeasure(pts, np.full(m, 1.0 / m))


def build_mk_task(spec: InstanceSpec):
    """Unit-ball source plus a target for quantile exports."""
    if spec.target_csv:
        target = load_measure_csv(spec.target_csv)
    else:
        target = boomerang_measure(spec.m, spec.seed)
    if target.dim != 2 and not spec.target_csv:
        raise ConfigError("mk built-in target is 2-D")
    source = UniformBall(np.zeros(target.dim), 1.0)
    return source, target


def make_solver_config(exp: ExperimentConfig, gt_source, gt_target, overrides=None) -> SolverConfig:
    """Resolve the solver spec against an instance (projection, gamma1)."""
    sol = exp.solver
    kwargs = {f.name: getattr(sol, f.name) for f in dataclasses.fields(sol) if f.name != "projection"}
    if overrides:
        kwargs.update(overrides)
    if kwargs["gamma1"] is None:
        kwargs["gamma1"] = gt_source.diameter
    if sol.projection == "cu":
        proj = lipschitz_box(pairwise_radii(gt_target, gt_source.radius_bound))
    elif sol.projection == "cinf":
        proj = cost_box(gt_source.radius_bound)
    else:
        proj = None
    cfg = SolverConfig(projection=proj, **kwargs)
    cfg.eval_every = default_eval_schedule(cfg.t_max, exp.eval.points, exp.eval.start)
    cfg.validate()
    return cfg


def make_eval_hook(gt: GroundTruthInstance, config: SolverConfig, ev: EvalSpec):
    """Evaluation hook computing the three error metrics per scheduled step."""

    def hook(state, rng, wall_ms):
        g = solution(state, config)
        return EvalRecord(
            t=state.t,
            eps=current_eps(config, state.t),
            gamma=current_gamma(config, state.t),
            pot_err_sq=potential_error_sq(g, gt.g_star),
            cost_gap=cost_gap(g, gt, ev.n_cost, rng),
            map_err=map_error(g, gt, ev.n_map, rng, p=ev.p),
            wall_ms=wall_ms,
        )

    return hook


def git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=10,
            cwd=Path(__file__).resolve().parent,
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def write_meta(out_dir: Path, exp: ExperimentConfig, resolved_gamma1: float) -> None:
    resolved = replace(exp, solver=replace(exp.solver, gamma1=resolved_gamma1))
    meta = {"config": config_to_flat(resolved), "git_describe": git_describe()}
    (out_dir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))


def _run_one(exp: ExperimentConfig, gt: GroundTruthInstance, seed: int, overrides=None):
    cfg = make_solver_config(exp, gt.source, gt.target, overrides)
    cfg = replace(cfg, seed=seed)
    hook = make_eval_hook(gt, cfg, exp.eval)
    _, records = run(cfg, gt.source, gt.target, eval_hook=hook)
    return cfg, records


def _job(args):
    exp, label, overrides, seed = args
    gt = build_instance(exp.instance)
    _, records = _run_one(exp, gt, seed, overrides)
    return label, seed, records


def _run_jobs(exp: ExperimentConfig, gt, jobs, threads: int):
    """jobs: list of (label, overrides, seed) -> {(label, seed): records}."""
    results = {}
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for label, seed, records in pool.map(
                _job, [(exp, label, ov, seed) for label, ov, seed in jobs]
            ):
                results[(label, seed)] = records
    else:
        for label, overrides, seed in jobs:
            _, records = _run_one(exp, gt, seed, overrides)
            results[(label, seed)] = records
    return results


def cmd_run(exp: ExperimentConfig, threads: int = 1) -> int:
    """Run one solver configuration ``repeats`` times; one CSV per seed."""
    gt = build_instance(exp.instance)
    out_dir = _prepare_output(exp)
    seeds = [exp.solver.seed + r for r in range(exp.repeats)]
    results = _run_jobs(exp, gt, [(None, None, s) for s in seeds], threads)
    for seed in seeds:
        write_records(out_dir / f"run_{seed}.csv", results[(None, seed)])
    cfg = make_solver_config(exp, gt.source, gt.target)
    write_meta(out_dir, exp, cfg.gamma1)
    print(f"wrote {len(seeds)} run CSVs to {out_dir}")
    return 0


def cmd_compare(exp: ExperimentConfig, threads: int = 1) -> int:
    """Run every configured variant on a shared instance and eval grid."""
    if not exp.variants:
        exp = replace(exp, variants=[("base", {})])
    gt = build_instance(exp.instance)
    out_dir = _prepare_output(exp)
    seeds = [exp.solver.seed + r for r in range(exp.repeats)]
    jobs = [(label, ov, s) for label, ov in exp.variants for s in seeds]
    results = _run_jobs(exp, gt, jobs, threads)

    print(f"{'variant':<16} {'final pot_err_sq':>18} {'slope':>9}")
    for label, _ in exp.variants:
        per_seed = []
        for seed in seeds:
            records = results[(label, seed)]
            write_records(out_dir / f"{label}_run_{seed}.csv", records)
            per_seed.append(records)
        mean_records = average_records(per_seed)
        write_records(out_dir / f"{label}.csv", mean_records)
        final = mean_records[-1].pot_err_sq
        try:
            slope = fit_rate(mean_records, "pot_err_sq")
            slope_txt = f"{slope:9.3f}"
        except ValueError:
            slope_txt = "      n/a"
        print(f"{label:<16} {final:>18.6e} {slope_txt}")
    cfg = make_solver_config(exp, gt.source, gt.target)
    write_meta(out_dir, exp, cfg.gamma1)
    return 0


def cmd_slopes(paths, field_name: str, window: float = 0.5) -> int:
    """Print per-file fitted slopes and their average."""
    from .metrics import read_records

    slopes = []
    for path in paths:
        records = read_records(path)
        slope = fit_rate(records, field_name, window)
        slopes.append(slope)
        print(f"{path}: {slope:.4f}")
    print(f"mean: {float(np.mean(slopes)):.4f}")
    return 0


def cmd_export_map(exp: ExperimentConfig, threads: int = 1) -> int:
    """Solve on the unit ball and export banded map labels as a point cloud."""
    if exp.instance.kind != "mk":
        raise ConfigError("export-map requires instance.kind = mk")
    source, target = build_mk_task(exp.instance)
    out_dir = _prepare_output(exp)
    cfg = make_solver_config(exp, source, target)
    state, _ = run(cfg, source, target)
    g = solution(state, cfg)
    rng = RngStream(cfg.seed, stream=EXPORT_STREAM_BASE)
    xs = source.sample_batch(exp.export.n_points, rng)
    bands, atoms = mk_quantile_labels(g, xs, target, exp.export.bands)
    mapped = map_apply_batch(g, xs, target)
    path = out_dir / "pointcloud.csv"
    write_pointcloud_csv(path, xs, bands, atoms, mapped)
    write_meta(out_dir, exp, cfg.gamma1)
    print(f"wrote {path}")
    return 0


def _prepare_output(exp: ExperimentConfig) -> Path:
    if not exp.output_dir:
        raise ConfigError("output_dir: required")
    out_dir = Path(exp.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    probe = out_dir / ".write_probe"
    try:
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output_dir: not writable: {exc}") from None
    return out_dir
