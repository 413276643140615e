"""The coherence walker: measurement-only and weak-limit chains on the (N_x, N_z) triangle."""
import numpy as np

from coherencelab import markov

rng = np.random.default_rng(0)
rates = (0.2, 0.3, 0.5)
L = 400

nx, nz, ny = markov.stationary_means("measurement_only", rates, L, 400_000, rng)
print(f"measurement-only means / L: N_x {nx / L:.3f}, N_y {ny / L:.3f}, N_z {nz / L:.3f}  (rates {rates})")

mean, err = markov.bulk_drift((0.5, 0.25, 0.25), 4000, 500, 500, rng)
print(f"weak-limit bulk drift {np.round(mean, 3).tolist()} +/- {np.round(err, 3).tolist()} (expected [0.0, -0.5])")

for px in (0.55, 0.65, 0.75):
    h = markov.edge_histogram((px, (1 - px) / 2, (1 - px) / 2), 200, 1_000_000, rng)
    lam = markov.localization_length(h)
    print(f"p_x = {px}: edge localization length {lam:6.2f}, times gap {lam * abs(2 * px - 1):.2f}")

for xi in (1.0, 4.0, 16.0):
    sx, sz, res, it = markov.solve_xi_steady(rates, xi, L)
    print(f"xi = {xi:4.1f}: steady N_x / L = {sx / L:.3f}, N_z / L = {sz / L:.3f} ({it} iterations)")
