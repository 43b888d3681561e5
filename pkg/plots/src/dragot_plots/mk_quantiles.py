"""Banded scatter of exported transport-map point clouds.

Consumes the point-cloud CSV (``x1..xd,band,atom,tx1..txd``) and scatters the
mapped points colored by radial band, so nested source annuli can be traced
through the map.
"""

from __future__ import annotations

import argparse
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def read_pointcloud_csv(path):
    """Returns (source points, bands, atoms, mapped points)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if "band" not in header or "atom" not in header:
            raise ValueError(f"{path}: expected band/atom columns, got {header!r}")
        b = header.index("band")
        d = b
        expected = [f"x{i + 1}" for i in range(d)] + ["band", "atom"] + [
            f"tx{i + 1}" for i in range(d)
        ]
        if header != expected or d < 1:
            raise ValueError(f"{path}: malformed header {header!r}")
        xs, bands, atoms, mapped = [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields")
            try:
                xs.append([float(v) for v in row[:d]])
                bands.append(int(row[b]))
                atoms.append(int(row[b + 1]))
                mapped.append([float(v) for v in row[b + 2 :]])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not xs:
        raise ValueError(f"{path}: no data rows")
    return np.array(xs), np.array(bands), np.array(atoms), np.array(mapped)


def plot_mk_quantiles(csv_path, output) -> str:
    """Render the banded scatter; returns the output path."""
    _, bands, _, mapped = read_pointcloud_csv(csv_path)
    if mapped.shape[1] < 2:
        raise ValueError("point cloud must be at least 2-D to scatter")
    n_bands = int(bands.max())
    cmap = plt.get_cmap("viridis", n_bands)
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    sc = ax.scatter(
        mapped[:, 0],
        mapped[:, 1],
        c=bands,
        cmap=cmap,
        vmin=0.5,
        vmax=n_bands + 0.5,
        s=7,
        linewidths=0,
    )
    cbar = fig.colorbar(sc, ax=ax, ticks=range(1, n_bands + 1), shrink=0.85)
    cbar.set_label("band")
    ax.set_aspect("equal")
    ax.set_xlabel("$x_1$")
    ax.set_ylabel("$x_2$")
    fig.tight_layout()
    fig.savefig(output)
    plt.close(fig)
    return str(output)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="dragot-plot-mk")
    parser.add_argument("csv", help="point-cloud CSV from a map export")
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    try:
        plot_mk_quantiles(args.csv, args.out)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}")
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
