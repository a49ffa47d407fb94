"""Batch figure rendering for the zenolab CSV schemas.

Four figure kinds, one per experiment output:

* ``survival``:         survival curve(s) from ``t,s`` files
* ``zeno_scaling``:     -log s_N against the measurement spacing, with the
                        through-origin fit annotated (log-linear in dt)
* ``theorem_residual``: per-schedule |s_N - s| bars with a threshold line
* ``lambda_sweep``:     survival overlay plus sector-norm response per
                        detector coupling

Rendering is read-only; identical inputs give identical figures up to
image-encoder nondeterminism.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "plotkit"

import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = ("survival", "zeno_scaling", "theorem_residual", "lambda_sweep")

_REQUIRED_COLUMNS = {
    "survival": {"t", "s"},
    "zeno_scaling": {"dt", "N", "s_N", "neg_log_sN"},
    "theorem_residual": {"schedule_id", "N", "region", "s", "s_N", "residual"},
    "lambda_sweep": {"lambda", "t", "s", "norm_F", "norm_G", "norm_D"},
}


class SchemaError(ValueError):
    """An input CSV does not carry the columns its figure kind needs."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple[str, ...]
    output: str
    title: str | None = None
    threshold: float | None = None  # horizontal guide line (theorem_residual)
    logy: bool = False

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; choose from {FIGURE_KINDS}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")


def read_table(path: str | Path, kind: str) -> dict[str, list]:
    """Load one CSV and check it against the kind's column schema."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        names = set(reader.fieldnames or ())
        missing = _REQUIRED_COLUMNS[kind] - names
        if missing:
            raise SchemaError(
                f"{path.name} lacks column(s) {sorted(missing)} required by {kind}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path.name} has no data rows")
    table: dict[str, list] = {name: [] for name in reader.fieldnames}
    for row in rows:
        for name in reader.fieldnames:
            table[name].append(row[name])
    return table


def _floats(col) -> np.ndarray:
    return np.array([float(v) for v in col])


def _render_survival(spec: FigureSpec, ax) -> dict:
    for path in spec.inputs:
        tab = read_table(path, "survival")
        ax.plot(_floats(tab["t"]), _floats(tab["s"]), lw=1.2, label=Path(path).stem)
    ax.set_xlabel("t")
    ax.set_ylabel("survival probability s(t)")
    if spec.logy:
        ax.set_yscale("log")
    if len(spec.inputs) > 1:
        ax.legend(fontsize=8)
    return {}


def _render_zeno_scaling(spec: FigureSpec, ax) -> dict:
    tab = read_table(spec.inputs[0], "zeno_scaling")
    dt = _floats(tab["dt"])
    neg_log = _floats(tab["neg_log_sN"])
    # same through-origin, relative-weighted fit the scan reports
    slope = float(np.mean(neg_log / dt))
    ax.plot(dt, neg_log, "o", ms=5, label="measured")
    grid = np.linspace(0.0, dt.max() * 1.05, 64)
    ax.plot(grid, slope * grid, "-", lw=1.0, label=f"fit: slope = {slope:.6g}")
    ax.set_xlabel("measurement spacing dt")
    ax.set_ylabel("-log s_N")
    ax.legend(fontsize=8)
    return {"slope": slope}


def _render_theorem_residual(spec: FigureSpec, ax) -> dict:
    tab = read_table(spec.inputs[0], "theorem_residual")
    residuals = _floats(tab["residual"])
    labels = [f"{sid} ({reg})" for sid, reg in zip(tab["schedule_id"], tab["region"])]
    x = np.arange(residuals.size)
    floor = 1e-18
    ax.bar(x, np.maximum(residuals, floor), color="#336699")
    ax.set_yscale("log")
    threshold = 1e-10 if spec.threshold is None else spec.threshold
    ax.axhline(threshold, color="crimson", lw=1.0, ls="--",
               label=f"threshold {threshold:g}")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("|s_N - s|")
    ax.legend(fontsize=8)
    return {"max_residual": float(residuals.max()), "threshold": threshold}


def _render_lambda_sweep(spec: FigureSpec, ax) -> dict:
    tab = read_table(spec.inputs[0], "lambda_sweep")
    lam = _floats(tab["lambda"])
    t = _floats(tab["t"])
    s = _floats(tab["s"])
    norm_g = _floats(tab["norm_G"])
    fig = ax.figure
    ax2 = ax.twinx()
    spreads = []
    for value in sorted(set(lam)):
        sel = lam == value
        ax.plot(t[sel], s[sel], lw=1.2, label=f"s, lambda={value:g}")
        ax2.plot(t[sel], norm_g[sel], lw=0.9, ls=":")
        spreads.append(s[sel])
    ax.set_xlabel("t")
    ax.set_ylabel("survival probability")
    ax2.set_ylabel("two-left-mover norm (dotted)")
    ax.legend(fontsize=8, loc="lower left")
    overlay_spread = float(np.max(np.ptp(np.stack(spreads), axis=0))) if len(spreads) > 1 else 0.0
    return {"survival_overlay_spread": overlay_spread}


_RENDERERS = {
    "survival": _render_survival,
    "zeno_scaling": _render_zeno_scaling,
    "theorem_residual": _render_theorem_residual,
    "lambda_sweep": _render_lambda_sweep,
}


def render(spec: FigureSpec) -> dict:
    """Render the figure and return its annotation metadata (for example
    the fitted slope a zeno_scaling figure prints)."""
    fig, ax = plt.subplots(figsize=(5.4, 3.6), dpi=150)
    try:
        meta = _RENDERERS[spec.kind](spec, ax)
        ax.set_title(spec.title or spec.kind.replace("_", " "))
        fig.tight_layout()
        # drop the embedded creation date so identical inputs give
        # identical bytes
        encoder_meta = {"Date": None} if str(spec.output).endswith(".svg") else None
        fig.savefig(spec.output, metadata=encoder_meta)
    finally:
        plt.close(fig)
    return meta
