"""
Quantile bands of an estimated transport map
============================================

Solves transport from the uniform unit disc onto a crescent-shaped point
cloud and exports source points labeled by radial band together with their
mapped atoms. The bands partition the disc into ten annuli; their images
tile the target cloud from its center outwards.

The CSV layout (x1,x2,band,atom,tx1,tx2) is what the plotting package's
banded-scatter script consumes:

    dragot-plot-mk demos/out/mk_pointcloud.csv --out demos/out/mk.svg
"""

from pathlib import Path

import numpy as np

from dragot import SolverConfig, UniformBall, cost_box, run, solution
from dragot.experiments import boomerang_measure
from dragot.rng import RngStream
from dragot.transport_map import (
    map_apply_batch,
    mk_quantile_labels,
    write_pointcloud_csv,
)

target = boomerang_measure(300, seed=7)
source = UniformBall(np.zeros(2), 1.0)

cfg = SolverConfig(
    t_max=40_000,
    gamma1=source.diameter,
    projection=cost_box(source.radius_bound),
    batch_size=16,
    seed=0,
)
state, _ = run(cfg, source, target)
g = solution(state, cfg)

xs = source.sample_batch(4000, RngStream(0, stream=3 << 32))
bands, atoms = mk_quantile_labels(g, xs, target, bands=10)
mapped = map_apply_batch(g, xs, target)

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)
path = out / "mk_pointcloud.csv"
write_pointcloud_csv(path, xs, bands, atoms, mapped)

print(f"wrote {path}")
print("band populations:", np.bincount(bands, minlength=11)[1:])
print("atoms hit:", len(np.unique(atoms)), "of", target.num_atoms)
