"""Moment extraction: finite differences against the spectral route.

Both routes start from the same noiseless F(t) data on the pairing benchmark.
Central differences at t = 0 are excellent for the first handful of moments
and then fall off a cliff; the spectral decomposition (FFT peaks polished by a
least-squares tone fit) stays at ~1e-7 relative error through K = 21.
"""

import numpy as np

from gfsim import (
    PairingModel,
    build_dense,
    fourier_grid,
    gf_exact,
    initial_state,
    moments_exact,
    moments_fdm,
    moments_fourier,
    spectral_peaks,
    to_qubits,
)

model = PairingModel.uniform(levels=8, pairs=4, delta_e=1.0, g=1.0)
h = to_qubits(model)
dense = build_dense(h)
init = initial_state(model)
oracle = moments_exact(dense, init, 21)

# finite differences on a fine short grid around t = 0
fdm_series = gf_exact(dense, init, 2.5e-4 * np.arange(4001))
fdm = moments_fdm(fdm_series, 14)

# spectral route on the long grid prescribed by the sampling rule
grid = fourier_grid(h.energy_bound)
spec = spectral_peaks(gf_exact(dense, init, grid))
fourier = moments_fourier(spec, 21)

print(f"spectral decomposition: {spec.energies.size} peaks, "
      f"weight sum {spec.weights.sum():.10f}, residual power {spec.residual_power:.2e}")
print(f"grid rule: dt = {grid[1]:.4f} (energy bound {h.energy_bound:g}), t_max = {grid[-1]:.1f}")
print()
print(" K   <H^K> exact       FDM rel err   spectral rel err   FDM step h")
for k in range(22):
    exact_k = oracle.values[k]
    fou = abs(fourier.values[k] - exact_k) / abs(exact_k)
    if k <= 14:
        fdm_err = abs(fdm.values[k] - exact_k) / abs(exact_k)
        h_k = fdm.diagnostics["h_per_K"][k]
        print(f"{k:2d}   {exact_k:14.6e}   {fdm_err:9.1e}     {fou:9.1e}        {h_k:g}")
    else:
        print(f"{k:2d}   {exact_k:14.6e}        --        {fou:9.1e}")
print()
print("the finite-difference column degrades by orders of magnitude between")
print("K = 6 and K = 14; the spectral column does not")
