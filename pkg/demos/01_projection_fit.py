"""Fit a (non-private) Fourier projection estimator and watch the
bias-variance trade-off as the cut-off M grows.

Run:  python demos/01_projection_fit.py
"""

import numpy as np

from privdens import fit, mise, rejection_sample
from privdens.densities import exact_bias, make_trig_density

truth = make_trig_density(2.0, 2.0, M_truth=20, d=1, rng=7)
rng = np.random.default_rng(0)
n = 4096
data = rejection_sample(truth, n, rng)

print(f"truth: trigonometric density, cutoff {truth.cutoff}, "
      f"certified minimum {truth.min_value:.3f}")
print(f"data:  n = {n} points in [0,1]\n")

print(f"{'M':>4} {'bias^2':>12} {'var (approx)':>13} {'MISE':>12}")
for M in (0, 1, 2, 4, 8, 16, 32):
    est = fit(data, M)
    err = mise(est, truth)
    bias = exact_bias(truth, M)
    # for the non-private estimator the variance part is about (2M+1)/n
    print(f"{M:>4} {bias:>12.3e} {(2 * M + 1) / n:>13.3e} {err:>12.3e}")

print("\nSmall M underfits (bias dominates), large M overfits (variance");
print("dominates); the error bottoms out near the truth's effective cutoff.")
