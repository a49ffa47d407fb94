"""Command-line front end.

Usage:
    zenolab <experiment> --config <path> [--out <dir>] [--threads <n>] [--seed <u64>]

The experiment name must match the ``experiment`` key of the JSON config
(one parser, validated fail-closed: unknown keys are rejected).  Each run
writes CSV data files plus ``manifest.json`` with keys ``config``,
``version``, ``seed``, ``summaries``, ``files``, ``wall_clock_s``.

CSV schemas
-----------
survival:       t,s
zeno-scan:      dt,N,s_N,neg_log_sN
theorem-check:  schedule_id,N,region,s,s_N,residual
detector-sweep: lambda,t,s,norm_F,norm_G,norm_D
lattice-verify: check,topology,residual

Exit codes: 0 success (all requested thresholds met), 1 a threshold in the
config was not met, 2 invalid config, 3 runtime horizon/grid violation.
Re-running with the same config and seed reproduces identical CSV bytes,
serially or with any worker count.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import jsonschema

from . import __version__
from .atomfield import ModelParams, build_model, evolve_to, init_excited
from .detector import DetectorParams, build_detector_model, _sweep_curves
from .errors import SimulationLimitError
from .lattice import (
    LatticeState,
    new_lattice_model,
    rotation_core_step,
    verify_one_sided,
    product_identity_residual,
    lattice_step,
)
from .measure import (
    MeasurementSchedule,
    best_ring_deviation,
    compute_survival_curve,
    fit_decay_rate,
    fit_short_time_alpha,
    interior_equal_schedule,
    measured_survival,
    run_monte_carlo,
    wave_zone_projector,
    whole_region_projector,
    zeno_scan,
    zeno_schedule,
)

EXPERIMENTS = ("survival", "theorem-check", "zeno-scan", "lattice-verify", "detector-sweep")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config schemas (fail-closed: additionalProperties rejected everywhere)
# ---------------------------------------------------------------------------

_NUM = {"type": "number"}
_INT = {"type": "integer"}

_MODEL = {
    "type": "object",
    "additionalProperties": False,
    "properties": {"d": _NUM, "omega": _NUM, "g0": _NUM, "dx": _NUM,
                   "t_max": _NUM, "margin": _NUM},
}

_DETECTOR = {
    "type": "object",
    "additionalProperties": False,
    "properties": {"x_minus": _NUM, "x_plus": _NUM, "n_k": _INT, "k_max": _NUM},
}

_LATTICE = {
    "type": "object",
    "additionalProperties": False,
    "properties": {"theta": _NUM, "phase": _NUM, "horizon": _INT,
                   "ring_length": _INT, "product_chain": _INT},
}

_SCHEDULE = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "id": {"type": "string"},
        "region": {"enum": ["wave-zone", "whole-region"]},
        "n": _INT,
        "spacing": {"enum": ["equal", "random"]},
        "times": {"type": "array", "items": _NUM},
        "final_time": _NUM,
    },
}

_COMMON = {
    "experiment": {"enum": list(EXPERIMENTS)},
    "seed": _INT,
    "output": {"type": "object", "additionalProperties": False,
               "properties": {"directory": {"type": "string"}}},
    "thresholds": {
        "type": "object",
        "additionalProperties": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"max": _NUM, "min": _NUM},
        },
    },
}


def _schema(extra: dict, required: list[str]) -> dict:
    return {
        "type": "object",
        "additionalProperties": False,
        "properties": {**_COMMON, **extra},
        "required": ["experiment"] + required,
    }


_SCHEMAS = {
    "survival": _schema({
        "model": _MODEL,
        "sample_stride": _INT,
        "short_time_window": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
        "decay_window": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
    }, ["model"]),
    "theorem-check": _schema({
        "model": _MODEL,
        "schedules": {"type": "array", "items": _SCHEDULE},
    }, ["model"]),
    "zeno-scan": _schema({
        "model": _MODEL,
        "t_fixed": _NUM,
        "dt_list": {"type": "array", "items": _NUM, "minItems": 1},
        "region": {"enum": ["wave-zone", "whole-region"]},
        "branch_tree_max": _INT,
        "mc": {"type": "object", "additionalProperties": False,
               "properties": {"n_traj": _INT}},
    }, ["model", "t_fixed", "dt_list"]),
    "lattice-verify": _schema({
        "lattice": _LATTICE,
    }, ["lattice"]),
    "detector-sweep": _schema({
        "model": _MODEL,
        "detector": _DETECTOR,
        "lambda_list": {"type": "array", "items": _NUM, "minItems": 1},
        "sample_stride": _INT,
    }, ["model", "lambda_list"]),
}


def validate_config(config: dict) -> None:
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    kind = config.get("experiment")
    if kind not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {kind!r}")
    try:
        jsonschema.validate(config, _SCHEMAS[kind])
    except jsonschema.ValidationError as err:
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {path}: {err.message}") from err


def _model_params(config: dict) -> ModelParams:
    return ModelParams(**config.get("model", {}))


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _pmap(fn, items, threads: int):
    """Ordered map over sweep points; results identical for any worker count."""
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# experiment workers (module-level so they can cross process boundaries)
# ---------------------------------------------------------------------------

def _projector(model, region: str):
    return wave_zone_projector(model) if region == "wave-zone" else whole_region_projector(model)


def _theorem_row(task: dict) -> tuple:
    params = ModelParams(**task["model"])
    model = build_model(params)
    projector = _projector(model, task["region"])
    sched = MeasurementSchedule(times=tuple(task["times"]),
                                final_time=task["final_time"], projector=projector)
    final_state = evolve_to(model, init_excited(model), task["final_time"])
    s_plain = abs(final_state.c) ** 2
    s_meas = measured_survival(model, sched)
    return (task["schedule_id"], len(task["times"]), task["region"], s_plain, s_meas,
            abs(s_meas - s_plain))


def _zeno_row(task: dict) -> tuple:
    params = ModelParams(**task["model"])
    model = build_model(params)
    projector = _projector(model, task["region"])
    scan = zeno_scan(model, task["t_fixed"], [task["dt"]], projector,
                     branch_tree_max=task["branch_tree_max"])
    mc_stats = None
    if task["n_traj"]:
        sched = zeno_schedule(model, projector, task["t_fixed"], task["dt"])
        mc = run_monte_carlo(model, sched, task["n_traj"], task["seed"])
        mc_stats = (mc.estimate, mc.standard_error)
    return (task["dt"], int(scan.n_meas[0]), float(scan.s_n[0]),
            float(scan.neg_log_s_n[0]), scan.method[0], mc_stats)


def _detector_row(task: dict) -> tuple:
    atom = ModelParams(**task["model"])
    det = DetectorParams(**task["detector"]).scaled(task["lam"])
    model = build_detector_model(atom, det)
    return _sweep_curves(model, model.n_steps_max, task["stride"])


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def _run_survival(config: dict, out: Path, threads: int, seed: int):
    params = _model_params(config)
    model = build_model(params)
    curve = compute_survival_curve(model, sample_stride=config.get("sample_stride", 1))
    win = config.get("short_time_window") or (0.0, 4.5 * params.dx)
    # the quadratic-law fit needs every step near t = 0, whatever the CSV stride
    n_short = min(max(4, int(np.ceil(win[1] / model.dt))), model.n_steps_max)
    short_curve = compute_survival_curve(model, t_max=n_short * model.dt, sample_stride=1)
    alpha = fit_short_time_alpha(short_curve, tuple(win))
    dwin = config.get("decay_window") or (params.t_max / 2, params.t_max)
    decay = fit_decay_rate(curve, tuple(dwin))
    final = evolve_to(model, init_excited(model), model.t_max)
    files = {"survival.csv": ("t,s", list(zip(curve.t, curve.s)))}
    summaries = {
        "alpha": alpha.alpha,
        "alpha_residual": alpha.residual,
        "alpha_flagged": bool(alpha.flagged),
        "gamma": decay.gamma,
        "gamma_residual": decay.residual,
        "s_final": float(abs(final.c) ** 2),
        "norm_error": abs(model.norm_sq(final) - 1.0),
        "eq_unitarity_residual": abs(abs(final.c) ** 2 - (1.0 - model.field_norm_sq(final.f))),
    }
    return files, summaries


def _build_schedule_times(config: dict, model, spec: dict, seed: int, index: int):
    final_time = spec.get("final_time", model.t_max)
    if "times" in spec:
        times = [float(t) for t in spec["times"]]
        ident = spec.get("id", f"explicit-{index}")
    else:
        n = spec.get("n", 4)
        spacing = spec.get("spacing", "equal")
        final_steps = int(round(final_time / model.dt))
        if spacing == "equal":
            sched = interior_equal_schedule(model, _projector(model, spec.get("region", "wave-zone")),
                                            n, final_time)
            times = list(sched.times)
        else:
            rng = np.random.default_rng((seed, index))
            if n >= final_steps:
                raise ConfigError(f"cannot place {n} random measurement steps before {final_steps}")
            steps = np.sort(rng.choice(np.arange(1, final_steps), size=n, replace=False))
            times = [float(s_ * model.dt) for s_ in steps]
        ident = spec.get("id", f"{spacing}-{n}")
    return ident, times, float(final_time)


def _run_theorem_check(config: dict, out: Path, threads: int, seed: int):
    params = _model_params(config)
    model = build_model(params)
    specs = config.get("schedules")
    if specs is None:
        specs = [{"region": "wave-zone", "n": n, "spacing": sp}
                 for n in (1, 4, 16, 64) for sp in ("equal", "random")]
    tasks = []
    for idx, spec in enumerate(specs):
        ident, times, final_time = _build_schedule_times(config, model, spec, seed, idx)
        tasks.append({"model": config["model"], "region": spec.get("region", "wave-zone"),
                      "times": times, "final_time": final_time, "schedule_id": ident})
    rows = _pmap(_theorem_row, tasks, threads)
    files = {"theorem.csv": ("schedule_id,N,region,s,s_N,residual",
                             [(r[0], r[1], r[2], r[3], r[4], r[5]) for r in rows])}
    summaries = {
        "max_theorem_residual": max(r[5] for r in rows),
        "n_schedules": len(rows),
    }
    return files, summaries


def _run_zeno_scan(config: dict, out: Path, threads: int, seed: int):
    params = _model_params(config)
    model = build_model(params)  # validates the grid before dispatch
    region = config.get("region", "whole-region")
    cap = config.get("branch_tree_max", 10)
    n_traj = config.get("mc", {}).get("n_traj", 0)
    tasks = [{"model": config["model"], "region": region, "t_fixed": config["t_fixed"],
              "dt": float(dtm), "branch_tree_max": cap, "n_traj": n_traj, "seed": seed}
             for dtm in config["dt_list"]]
    rows = _pmap(_zeno_row, tasks, threads)
    per_row = np.array([r[3] for r in rows]) / np.array([r[0] for r in rows])
    slope = float(np.mean(per_row))
    files = {"zeno.csv": ("dt,N,s_N,neg_log_sN", [(r[0], r[1], r[2], r[3]) for r in rows])}
    summaries = {
        "slope": slope,
        "slope_residual": float(np.sqrt(np.mean((per_row - slope) ** 2)) / abs(slope)) if slope else 0.0,
        "alpha_times_t": float(params.g0**2 * params.d**2 * config["t_fixed"]),
        "s_n_monotone": bool(np.all(np.diff([r[2] for r in rows]) != 0)),
    }
    mc_rows = [r for r in rows if r[5] is not None]
    if mc_rows:
        summaries["mc_max_sigma_distance"] = max(
            abs(r[2] - r[5][0]) / max(r[5][1], 1e-300) for r in mc_rows)
    return files, summaries


def _run_lattice_verify(config: dict, out: Path, threads: int, seed: int):
    lat = config.get("lattice", {})
    theta = lat.get("theta", 0.3)
    phase = lat.get("phase", 0.0)
    horizon = lat.get("horizon", 24)
    ring_len = lat.get("ring_length", 4)
    chain = lat.get("product_chain", 20)
    k = rotation_core_step(theta, phase)
    uni = new_lattice_model(2, k, "unilateral", horizon=horizon)
    ring = new_lattice_model(2, k, "ring", horizon=horizon, ring_length=ring_len)

    rng = np.random.default_rng((seed, 7))
    lemma_residual = 0.0
    core = rng.normal(size=2) + 1j * rng.normal(size=2)
    core *= 0.6 / np.linalg.norm(core)
    tail = np.sqrt(1.0 - 0.36)
    states = []
    for _ in range(2):
        wave = rng.normal(size=6) + 1j * rng.normal(size=6)
        wave *= tail / np.linalg.norm(wave)
        states.append(LatticeState(core=core.copy(), wave=wave, n=0))
    s1, s2 = states
    for _ in range(horizon):
        s1, s2 = lattice_step(uni, s1), lattice_step(uni, s2)
        lemma_residual = max(lemma_residual, float(np.max(np.abs(s1.core - s2.core))))

    drift = 0.0
    st = uni.initial_state()
    for _ in range(horizon):
        st = lattice_step(uni, st)
        drift = max(drift, abs(st.norm_sq() - 1.0))

    counterexample_dev, _sched = best_ring_deviation(ring, min(horizon, 12))
    rows = [
        ("one_sided", "unilateral", verify_one_sided(uni, horizon)),
        ("one_sided", f"ring({ring_len})", verify_one_sided(ring, ring_len)),
        ("product_identity", "unilateral", product_identity_residual(uni, chain)),
        ("product_identity", f"ring({ring_len})", product_identity_residual(ring, min(chain, 8))),
        ("lemma_core_agreement", "unilateral", lemma_residual),
        ("unitarity_drift", "unilateral", drift),
        ("counterexample_deviation", f"ring({ring_len})", counterexample_dev),
    ]
    files = {"lattice.csv": ("check,topology,residual", rows)}
    summaries = {
        "one_sided_unilateral": rows[0][2],
        "one_sided_ring": rows[1][2],
        "product_identity_unilateral": rows[2][2],
        "lemma_residual": lemma_residual,
        "unitarity_drift": drift,
        "counterexample_deviation": counterexample_dev,
    }
    return files, summaries


def _run_detector_sweep(config: dict, out: Path, threads: int, seed: int):
    atom = _model_params(config)
    det = DetectorParams(**config.get("detector", {}))
    build_detector_model(atom, det)  # validate before dispatch
    stride = config.get("sample_stride", 8)
    lambdas = [float(v) for v in config["lambda_list"]]
    tasks = [{"model": config["model"], "detector": config.get("detector", {}),
              "lam": lam, "stride": stride} for lam in [0.0] + lambdas]
    rows = _pmap(_detector_row, tasks, threads)
    ref_s = rows[0][1]
    csv_rows = []
    for lam, (t, s, nf, ng, nd) in zip(lambdas, rows[1:]):
        for i in range(t.size):
            csv_rows.append((lam, t[i], s[i], nf[i], ng[i], nd[i]))
    max_dev = max((float(np.max(np.abs(r[1] - ref_s))) for r in rows[1:]), default=0.0)
    g_final = [float(r[3][-1]) for r in rows[1:]]
    files = {"detector.csv": ("lambda,t,s,norm_F,norm_G,norm_D", csv_rows)}
    summaries = {
        "max_s_deviation": max_dev,
        "g_norm_spread": max(g_final) - min(g_final) if g_final else 0.0,
        "lambda_count": len(lambdas),
    }
    return files, summaries


_RUNNERS = {
    "survival": _run_survival,
    "theorem-check": _run_theorem_check,
    "zeno-scan": _run_zeno_scan,
    "lattice-verify": _run_lattice_verify,
    "detector-sweep": _run_detector_sweep,
}


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------

def _check_thresholds(summaries: dict, thresholds: dict) -> list[str]:
    failures = []
    for key, bound in thresholds.items():
        if key not in summaries:
            raise ConfigError(f"threshold references unknown summary {key!r}")
        value = summaries[key]
        if "max" in bound and not value <= bound["max"]:
            failures.append(f"{key}={value} exceeds max {bound['max']}")
        if "min" in bound and not value >= bound["min"]:
            failures.append(f"{key}={value} below min {bound['min']}")
    return failures


def run_experiment(config: dict, out_dir: str | Path, threads: int = 1,
                   seed: int | None = None) -> dict:
    """Validate the config, execute the named experiment, write CSV files
    and the JSON manifest, and return the manifest dict (with an extra
    ``threshold_failures`` entry left out of the file)."""
    validate_config(config)
    t0 = time.perf_counter()
    seed = int(config.get("seed", 0)) if seed is None else int(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runner = _RUNNERS[config["experiment"]]
    files, summaries = runner(config, out, threads, seed)
    for name, (header, rows) in files.items():
        _write_csv(out / name, header, rows)
    manifest = {
        "config": config,
        "version": __version__,
        "seed": seed,
        "summaries": summaries,
        "files": sorted(files),
        "wall_clock_s": time.perf_counter() - t0,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=float) + "\n")
    failures = _check_thresholds(summaries, config.get("thresholds", {}))
    return {**manifest, "threshold_failures": failures}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="zenolab", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, help="path to the JSON experiment config")
    parser.add_argument("--out", default=None, help="output directory (default: from config, else ./zenolab_out)")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    args = parser.parse_args(argv)

    try:
        config = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as err:
        print(f"zenolab: cannot read config: {err}", file=sys.stderr)
        return 2

    out_dir = args.out or config.get("output", {}).get("directory", "zenolab_out") \
        if isinstance(config, dict) else (args.out or "zenolab_out")
    try:
        if isinstance(config, dict) and config.get("experiment") != args.experiment:
            raise ConfigError(
                f"config is for experiment {config.get('experiment')!r}, not {args.experiment!r}")
        result = run_experiment(config, out_dir, threads=args.threads, seed=args.seed)
    except (ConfigError, ValueError) as err:
        print(f"zenolab: invalid config: {err}", file=sys.stderr)
        return 2
    except SimulationLimitError as err:
        print(f"zenolab: runtime limit: {err}", file=sys.stderr)
        return 3

    for key, value in result["summaries"].items():
        print(f"{key} = {value}")
    if result["threshold_failures"]:
        for line in result["threshold_failures"]:
            print(f"zenolab: threshold not met: {line}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
