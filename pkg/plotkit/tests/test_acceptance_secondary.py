"""Secondary acceptance: render every figure kind from real zenolab runs.

The experiment outputs are produced through the zenolab CLI (the only
interface plotkit knows about); the zeno_scaling annotation must agree with
the slope recorded in that run's manifest.
"""

import json
import subprocess
import sys

import pytest

from plotkit.render import FigureSpec, render

CONFIGS = {
    "survival": {
        "experiment": "survival",
        "model": {"d": 1.0, "omega": 5.0, "g0": 0.5, "dx": 1 / 64, "t_max": 3.0},
        "sample_stride": 4,
    },
    "theorem-check": {
        "experiment": "theorem-check",
        "model": {"d": 1.0, "omega": 5.0, "g0": 0.5, "dx": 1 / 64, "t_max": 3.0},
        "seed": 11,
    },
    "zeno-scan": {
        "experiment": "zeno-scan",
        "model": {"d": 1.0, "omega": 5.0, "g0": 0.5, "dx": 1 / 80, "t_max": 1.2},
        "t_fixed": 1.0,
        "dt_list": [0.2, 0.1, 0.05, 0.025],
        "region": "whole-region",
    },
    "detector-sweep": {
        "experiment": "detector-sweep",
        "model": {"d": 1.0, "omega": 5.0, "g0": 0.5, "dx": 1 / 64, "t_max": 3.0},
        "detector": {"x_minus": 0.75, "x_plus": 1.25, "n_k": 33, "k_max": 8.0},
        "lambda_list": [0.0, 0.5, 2.0],
        "sample_stride": 8,
    },
}


@pytest.fixture(scope="module")
def run_dirs(tmp_path_factory):
    root = tmp_path_factory.mktemp("zenolab_runs")
    dirs = {}
    for name, config in CONFIGS.items():
        cfg = root / f"{name}.json"
        cfg.write_text(json.dumps(config))
        out = root / name
        proc = subprocess.run(
            [sys.executable, "-m", "zenolab.cli", name, "--config", str(cfg),
             "--out", str(out), "--threads", "2"],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        dirs[name] = out
    return dirs


def test_criterion_10_all_figure_kinds(run_dirs, tmp_path):
    figures = {
        "survival": (run_dirs["survival"] / "survival.csv", "survival.png"),
        "theorem_residual": (run_dirs["theorem-check"] / "theorem.csv", "theorem.png"),
        "zeno_scaling": (run_dirs["zeno-scan"] / "zeno.csv", "zeno.png"),
        "lambda_sweep": (run_dirs["detector-sweep"] / "detector.csv", "sweep.png"),
    }
    metas = {}
    for kind, (csv_path, out_name) in figures.items():
        out = tmp_path / out_name
        metas[kind] = render(FigureSpec(kind=kind, inputs=(str(csv_path),),
                                        output=str(out)))
        assert out.stat().st_size > 0

    manifest = json.loads((run_dirs["zeno-scan"] / "manifest.json").read_text())
    annotated = metas["zeno_scaling"]["slope"]
    recorded = manifest["summaries"]["slope"]
    assert f"{annotated:.6g}" == f"{recorded:.6g}"
    print(f"criterion 10: PASS — four figure kinds rendered; zeno slope annotation "
          f"{annotated:.6g} matches manifest {recorded:.6g}")
