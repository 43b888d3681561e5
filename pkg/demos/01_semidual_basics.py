"""
Transforms, softened assignments, and gradients on a toy target
===============================================================

A five-atom target on the plane, one source point, and the quantities the
solver is built from: the hard transform (nearest cost-adjusted atom), its
softened version at a few temperatures, and the stochastic gradient.
"""

import numpy as np

from dragot import (
    DiscreteMeasure,
    ctransform_hard,
    ctransform_soft,
    softmax_weights,
    stochastic_gradient,
)

rng = np.random.default_rng(0)

# A small weighted target and a probe point
atoms = rng.random((5, 2))
weights = np.array([0.1, 0.15, 0.2, 0.25, 0.3])
target = DiscreteMeasure(atoms, weights)
x = np.array([0.4, 0.6])
g = 0.05 * rng.standard_normal(5)

# Hard transform: value and the winning atom
value, idx = ctransform_hard(g, x, target)
print(f"hard transform: value {value:.4f}, assigned atom {idx}")

# Soft transforms squeeze between the hard value and a log(1/w_min) band
for eps in (1.0, 0.1, 0.01, 1e-6):
    soft = ctransform_soft(g, x, target, eps)
    print(f"  eps = {eps:<8g} soft value {soft: .6f}  (gap {soft - value:.2e})")

# Softened assignment probabilities flatten as the temperature rises
print("\nassignment probabilities (rows: eps = 1, 0.1, 0.01):")
for eps in (1.0, 0.1, 0.01):
    chi = softmax_weights(g, x, target, eps)
    print("  " + "  ".join(f"{c:.3f}" for c in chi), f" sum = {chi.sum():.12f}")

# The single-sample gradient is the assignment minus the target weights;
# its entries always cancel out
grad = stochastic_gradient(g, x, target, 0.1)
print(f"\ngradient: {np.array2string(grad, precision=3)}  (sum {grad.sum():+.2e})")
