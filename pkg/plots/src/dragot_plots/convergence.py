"""Log-log convergence figures with reference-slope guides.

Consumes one or more evaluation CSVs (typically one per seed), draws each
seed's curve with a min-max band, and overlays dashed t^s guide lines
anchored at the tail of the mean curve.
"""

from __future__ import annotations

import argparse
import glob as globlib
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .records import HEADER, read_record_csv


@dataclass
class FigureSpec:
    csv_globs: list
    field: str
    output: str
    reference_slopes: list = field(default_factory=list)
    title: str = ""


def _load_curves(spec: FigureSpec):
    paths = sorted(p for pattern in spec.csv_globs for p in globlib.glob(str(pattern)))
    if not paths:
        raise FileNotFoundError(f"no CSV files match {spec.csv_globs!r}")
    if spec.field not in HEADER:
        raise ValueError(f"unknown field column {spec.field!r}; expected one of {HEADER[3:]}")
    curves = []
    for path in paths:
        rows = read_record_csv(path)
        t = np.array([r["t"] for r in rows])
        v = np.array([r[spec.field] for r in rows])
        keep = (t > 0) & (v > 0)
        if not np.any(keep):
            raise ValueError(f"{path}: no positive values for {spec.field!r}")
        curves.append((path, t[keep], v[keep]))
    return curves


def plot_convergence(spec: FigureSpec) -> str:
    """Render the figure; returns the output path."""
    curves = _load_curves(spec)
    fig, ax = plt.subplots(figsize=(5.0, 3.8))

    for path, t, v in curves:
        ax.loglog(t, v, lw=0.9, alpha=0.55, color="tab:blue")

    grids = [set(map(float, t)) for _, t, _ in curves]
    shared = np.array(sorted(set.intersection(*grids)))
    if shared.size >= 2 and len(curves) > 1:
        stacked = []
        for _, t, v in curves:
            lookup = dict(zip(t, v))
            stacked.append([lookup[x] for x in shared])
        stacked = np.array(stacked)
        ax.fill_between(shared, stacked.min(0), stacked.max(0), alpha=0.18, color="tab:blue")
        mean_t, mean_v = shared, stacked.mean(0)
        ax.loglog(mean_t, mean_v, lw=1.8, color="tab:blue", label="seed mean")
    else:
        _, mean_t, mean_v = curves[0]

    for slope in spec.reference_slopes:
        guide = mean_v[-1] * (mean_t / mean_t[-1]) ** slope
        ax.loglog(mean_t, guide, "--", lw=1.0, color="gray")
        ax.annotate(
            f"$t^{{{slope:g}}}$",
            (mean_t[0], guide[0]),
            fontsize=8,
            color="gray",
            va="bottom",
        )

    ax.set_xlabel("iteration $t$")
    ax.set_ylabel(spec.field)
    if spec.title:
        ax.set_title(spec.title)
    if len(curves) > 1:
        ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    fig.savefig(spec.output)
    plt.close(fig)
    return spec.output


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="dragot-plot-convergence")
    parser.add_argument("csvs", nargs="+", help="CSV paths or globs")
    parser.add_argument("--field", default="pot_err_sq")
    parser.add_argument("--slopes", type=float, nargs="*", default=[-1.0])
    parser.add_argument("--out", required=True)
    parser.add_argument("--title", default="")
    args = parser.parse_args(argv)
    try:
        plot_convergence(
            FigureSpec(args.csvs, args.field, args.out, list(args.slopes), args.title)
        )
    except (OSError, ValueError) as exc:
        print(f"error: {exc}")
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
