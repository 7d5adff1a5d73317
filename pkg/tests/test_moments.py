import math

import numpy as np
import pytest

from gfsim.genfunc import GfSeries, gf_exact
from gfsim.models import PairingModel, build_dense, initial_state, pairing_to_qubits
from gfsim.moments import (
    FdmStencil,
    MomentSet,
    SpectralDecomposition,
    central_difference_coefficients,
    fourier_grid,
    moments_exact,
    moments_fdm,
    moments_fourier,
    spectral_peaks,
)
from gfsim.statevector import SimulationError


def two_level():
    model = PairingModel.uniform(2, 1, 1.0, 1.0)
    dense = build_dense(pairing_to_qubits(model))
    return model, dense, initial_state(model)


def benchmark():
    model = PairingModel.uniform(8, 4, 1.0, 1.0)
    dense = build_dense(pairing_to_qubits(model))
    return model, dense, initial_state(model)


def sector_moment(k):
    """Oracle: powers of the hand-built 2x2 sector matrix on its first basis vector."""
    sec = np.array([[2.0, -1.0], [-1.0, 4.0]])
    e0 = np.array([1.0, 0.0])
    return float(e0 @ np.linalg.matrix_power(sec, k) @ e0)


def test_moments_exact_trivial_hamiltonian():
    from gfsim.models import DenseHamiltonian, InitialState
    from gfsim.statevector import StateVector

    dense = DenseHamiltonian(np.zeros((4, 4)), 2)
    init = InitialState([StateVector.from_bitstring("10")])
    mom = moments_exact(dense, init, 4)
    assert mom.values[0] == 1.0
    assert np.allclose(mom.values[1:], 0.0)


def test_moments_exact_two_level():
    _, dense, init = two_level()
    mom = moments_exact(dense, init, 6)
    for k in range(7):
        assert mom.values[k] == pytest.approx(sector_moment(k), rel=1e-12)
    assert mom.values[1] == pytest.approx(2.0)
    assert mom.values[2] == pytest.approx(5.0)


def test_moments_exact_eigenstate_powers():
    from gfsim.models import InitialState
    from gfsim.statevector import StateVector

    _, dense, _ = two_level()
    vec = dense.eigenvectors[:, 3]
    mom = moments_exact(dense, InitialState([StateVector(2, vec)]), 5)
    assert np.allclose(mom.values, dense.eigenvalues[3] ** np.arange(6), rtol=1e-12)


def test_hankel_matrix_psd():
    _, dense, init = two_level()
    mom = moments_exact(dense, init, 8)
    hank = mom.hankel_overlap(4)
    evals = np.linalg.eigvalsh(hank)
    assert evals.min() > -1e-8 * np.abs(hank).max()


def test_stencil_classic_coefficients():
    assert central_difference_coefficients(1, 2) == ((-1, 0, 1), (-0.5, 0.0, 0.5))
    assert central_difference_coefficients(2, 2) == ((-1, 0, 1), (1.0, -2.0, 1.0))


def test_stencil_monomial_exactness():
    # stencil applied to t^m at h=1 recovers the derivative exactly
    for deriv, acc in ((1, 8), (3, 8), (4, 6), (6, 8)):
        offsets, coeffs = central_difference_coefficients(deriv, acc)
        offsets = np.asarray(offsets, dtype=float)
        coeffs = np.asarray(coeffs)
        for m in range(deriv + acc):
            value = float((coeffs * offsets**m).sum())
            expected = float(math.factorial(deriv)) if m == deriv else 0.0
            assert value == pytest.approx(expected, abs=1e-7 * max(1.0, np.abs(coeffs).max()))


def test_stencil_rejects_odd_accuracy():
    with pytest.raises(SimulationError):
        central_difference_coefficients(2, 3)


def test_fdm_order_zero_returns_one():
    _, dense, init = two_level()
    series = gf_exact(dense, init, 1e-3 * np.arange(200))
    mom = moments_fdm(series, 0)
    assert mom.values[0] == pytest.approx(1.0, abs=1e-12)


def test_fdm_low_orders_accurate():
    _, dense, init = two_level()
    series = gf_exact(dense, init, 2.5e-4 * np.arange(4001))
    mom = moments_fdm(series, 6)
    for k in range(7):
        assert mom.values[k] == pytest.approx(sector_moment(k), rel=1e-3)
    # route and tuned-step diagnostics recorded
    assert mom.route == "fdm"
    assert set(mom.diagnostics["h_per_K"]) == set(range(7))


def test_fdm_explicit_stencil_step_must_match_grid():
    _, dense, init = two_level()
    series = gf_exact(dense, init, 1e-3 * np.arange(500))
    with pytest.raises(SimulationError):
        moments_fdm(series, 2, stencil=FdmStencil(h=0.0015708, accuracy=4))


def test_fdm_degrades_at_high_order():
    _, dense, init = benchmark()
    series = gf_exact(dense, init, 2.5e-4 * np.arange(4001))
    mom = moments_fdm(series, 14)
    oracle = moments_exact(dense, init, 14)
    rel = np.abs(mom.values - oracle.values) / np.abs(oracle.values)
    assert rel[:7].max() < 1e-3
    assert rel[14] > 1e3 * rel[6]
    # the reported error estimates grow with the order as well
    assert mom.errors[14] > mom.errors[6]


def test_fourier_grid_rule():
    grid = fourier_grid(100.0, gap_target=0.02)
    dt = grid[1] - grid[0]
    assert dt <= np.pi / 200.0 + 1e-15
    assert grid[-1] >= np.pi / 0.02 - dt
    assert grid[0] == 0.0


def test_spectral_peaks_single_tone():
    t = np.linspace(0, 80, 2001)
    values = np.exp(-1j * 2.5 * t)
    series = GfSeries(t, values.real, values.imag, 0 * t, 0 * t, route="exact")
    spec = spectral_peaks(series)
    assert spec.energies.size == 1
    assert spec.energies[0] == pytest.approx(2.5, abs=1e-9)
    assert spec.weights[0] == pytest.approx(1.0, abs=1e-9)


def test_spectral_peaks_two_level():
    _, dense, init = two_level()
    grid = fourier_grid(7.0)
    series = gf_exact(dense, init, grid)
    spec = spectral_peaks(series)
    evals, evecs = np.linalg.eigh(np.array([[2.0, -1.0], [-1.0, 4.0]]))
    weights = np.abs(evecs[0, :]) ** 2
    assert spec.energies.size == 2
    assert np.allclose(spec.energies, evals, atol=1e-8)
    assert np.allclose(spec.weights, weights, atol=1e-8)


def test_spectral_peaks_benchmark_weight_capture():
    model, dense, init = benchmark()
    h = pairing_to_qubits(model)
    series = gf_exact(dense, init, fourier_grid(h.energy_bound))
    spec = spectral_peaks(series)
    assert spec.weights.sum() >= 0.999
    assert spec.residual_power < 1e-10


def test_spectral_peaks_rejects_nonuniform_grid():
    t = np.array([0.0, 0.1, 0.3])
    series = GfSeries(t, np.ones(3), np.zeros(3), np.zeros(3), np.zeros(3), route="exact")
    with pytest.raises(SimulationError):
        spectral_peaks(series)


def test_spectral_peaks_rejects_aliasing_grid():
    _, dense, init = two_level()
    series = gf_exact(dense, init, np.arange(0, 40, 0.8))  # dt too coarse for E ~ 7
    with pytest.raises(SimulationError):
        spectral_peaks(series, energy_bound=7.0)


def test_moments_fourier_single_peak():
    spec = SpectralDecomposition(np.array([3.0]), np.array([1.0]), 0.0)
    mom = moments_fourier(spec, 4)
    assert np.allclose(mom.values, 3.0 ** np.arange(5))


def test_moments_fourier_two_level_high_order():
    _, dense, init = two_level()
    series = gf_exact(dense, init, fourier_grid(7.0))
    mom = moments_fourier(spectral_peaks(series), 20)
    oracle = moments_exact(dense, init, 20)
    rel = np.abs(mom.values - oracle.values) / np.abs(oracle.values)
    assert rel.max() < 1e-6


def test_fourier_error_tightens_with_longer_grid():
    _, dense, init = two_level()
    oracle = moments_exact(dense, init, 12)
    rels = []
    for t_max in (40.0, 80.0, 160.0):
        t = np.arange(0, t_max, 0.2)
        mom = moments_fourier(spectral_peaks(gf_exact(dense, init, t)), 12)
        rels.append((np.abs(mom.values - oracle.values) / np.abs(oracle.values)).max())
    # monotone decrease, unless already at the double-precision floor
    assert rels[0] >= rels[1] >= rels[2] or max(rels) < 1e-12


def test_moment_bounds_and_variance():
    _, dense, init = two_level()
    series = gf_exact(dense, init, fourier_grid(7.0))
    spec = spectral_peaks(series)
    mom = moments_fourier(spec, 4)
    assert spec.energies.min() - 1e-9 <= mom.values[1] <= spec.energies.max() + 1e-9
    assert mom.values[2] - mom.values[1] ** 2 > -1e-10


def test_moment_csv_round_trip(tmp_path):
    _, dense, init = two_level()
    mom = moments_exact(dense, init, 5)
    mom.source = "two-level"
    path = tmp_path / "moments.csv"
    mom.to_csv(path)
    back = MomentSet.from_csv(path)
    assert np.array_equal(back.values, mom.values)
    assert back.route == "exact"
    assert back.source == "two-level"


def test_moment_set_requires_unit_zeroth():
    with pytest.raises(SimulationError):
        MomentSet(np.array([0.5, 1.0]), np.zeros(2), route="exact")
