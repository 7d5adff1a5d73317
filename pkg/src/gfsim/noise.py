"""Synthetic readout + depolarizing noise and the two mitigation techniques.

Noise model: after every applied gate, each touched qubit independently
suffers a uniform Pauli error (X, Y, Z each with probability p_dep/3) via
trajectory sampling, and the measured qubit's outcome passes through a
column-stochastic 2x2 confusion matrix before counting.

Mitigation: (1) readout inversion applies the inverse confusion matrix to
outcome probabilities; (2) reference correction builds one 2x2 matrix from
the t = 0 data of both Hadamard-test circuits, where the ideal outcomes are
known exactly -- the Re circuit's ideal (1, 0) pins its first column and the
Im circuit's ideal (1/2, 1/2) pins the column average -- and applies the
stored inverse at every later time.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .genfunc import GfSeries
from .statevector import (
    GateMatrix,
    ShotCounts,
    SimulationError,
    StateVector,
    ancilla_probability,
    apply_controlled,
    apply_gate,
)
from .trotter import Circuit


@dataclass(frozen=True)
class ReadoutModel:
    """Per-qubit 2x2 confusion matrices; columns are the true state."""

    matrices: tuple[np.ndarray, ...]

    def __post_init__(self):
        mats = []
        for mat in self.matrices:
            mat = np.asarray(mat, dtype=float)
            if mat.shape != (2, 2):
                raise SimulationError(f"confusion matrix must be 2x2, got {mat.shape}")
            if np.any(mat < -1e-12):
                raise SimulationError("confusion matrix entries must be nonnegative")
            if np.abs(mat.sum(axis=0) - 1.0).max() > 1e-9:
                raise SimulationError("confusion matrix columns must sum to 1")
            mats.append(mat)
        object.__setattr__(self, "matrices", tuple(mats))

    @classmethod
    def uniform(cls, p_flip_0to1: float, p_flip_1to0: float, n_qubits: int) -> "ReadoutModel":
        mat = np.array([[1.0 - p_flip_0to1, p_flip_1to0], [p_flip_0to1, 1.0 - p_flip_1to0]])
        return cls(tuple(mat.copy() for _ in range(n_qubits)))

    @classmethod
    def identity(cls, n_qubits: int) -> "ReadoutModel":
        return cls.uniform(0.0, 0.0, n_qubits)

    def confusion(self, qubit: int) -> np.ndarray:
        if not 0 <= qubit < len(self.matrices):
            raise SimulationError(f"no confusion matrix for qubit {qubit}")
        return self.matrices[qubit]

    def is_identity(self, qubit: int) -> bool:
        return bool(np.allclose(self.confusion(qubit), np.eye(2), atol=1e-15))


@dataclass(frozen=True)
class NoiseConfig:
    readout: ReadoutModel
    p_dep: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p_dep <= 1.0:
            raise SimulationError(f"p_dep must lie in [0, 1], got {self.p_dep}")


_PAULIS = (
    np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
)


def _run_with_errors(init: StateVector, circuit: Circuit, pattern: tuple[tuple[int, int], ...]) -> StateVector:
    """Replay the circuit inserting the given (slot, pauli) errors after gates."""
    by_slot = dict(pattern)
    state = init
    slot = 0
    for item in circuit.gates:
        if item.control is None:
            state = apply_gate(state, item.gate)
        else:
            state = apply_controlled(state, item.control, item.gate)
        for qubit in item.touched:
            pauli = by_slot.get(slot)
            if pauli is not None:
                state = apply_gate(state, GateMatrix(_PAULIS[pauli], (qubit,)))
            slot += 1
    return state


def _readout_counts(rng: np.random.Generator, n_true0: int, n_true1: int, confusion: np.ndarray) -> tuple[int, int]:
    """Push exact true-outcome counts through the confusion matrix."""
    rep0 = int(rng.binomial(n_true0, confusion[0, 0])) if n_true0 else 0
    rep0 += int(rng.binomial(n_true1, confusion[0, 1])) if n_true1 else 0
    return rep0, n_true0 + n_true1 - rep0


def noisy_sample(
    init: StateVector,
    circuit: Circuit,
    ancilla: int,
    shots: int,
    cfg: NoiseConfig,
    seed: int,
) -> ShotCounts:
    """Trajectory-sampled noisy execution of a circuit, then confused readout.

    With p_dep = 0 and an identity confusion matrix this reduces to exactly
    the same RNG call path as sample_ancilla on the clean final state.
    """
    if shots < 1:
        raise SimulationError(f"shots must be >= 1, got {shots}")
    rng = np.random.default_rng(seed)
    confusion = cfg.readout.confusion(ancilla)

    clean_final = circuit.apply(init)
    p0_clean = min(1.0, max(0.0, ancilla_probability(clean_final, ancilla)))

    n_slots = sum(len(item.touched) for item in circuit.gates)
    if cfg.p_dep == 0.0 or n_slots == 0:
        n_true0 = int(rng.binomial(shots, p0_clean))
        n_true1 = shots - n_true0
    else:
        errors_per_shot = rng.binomial(n_slots, cfg.p_dep, size=shots)
        n_clean = int((errors_per_shot == 0).sum())
        n_true0 = int(rng.binomial(n_clean, p0_clean)) if n_clean else 0
        n_true1 = n_clean - n_true0
        cache: dict[tuple[tuple[int, int], ...], float] = {}
        for n_err in errors_per_shot[errors_per_shot > 0]:
            slots = rng.choice(n_slots, size=int(n_err), replace=False)
            paulis = rng.integers(0, 3, size=int(n_err))
            pattern = tuple(sorted(zip(slots.tolist(), paulis.tolist())))
            p0 = cache.get(pattern)
            if p0 is None:
                final = _run_with_errors(init, circuit, pattern)
                p0 = min(1.0, max(0.0, ancilla_probability(final, ancilla)))
                cache[pattern] = p0
            if rng.random() < p0:
                n_true0 += 1
            else:
                n_true1 += 1

    if cfg.readout.is_identity(ancilla):
        n0, n1 = n_true0, n_true1
    else:
        n0, n1 = _readout_counts(rng, n_true0, n_true1, confusion)
    return ShotCounts(n0=n0, n1=n1, seed=int(seed))


# Mitigation -------------------------------------------------------------------


def _to_probs(counts_or_probs) -> np.ndarray:
    if isinstance(counts_or_probs, ShotCounts):
        total = counts_or_probs.shots
        return np.array([counts_or_probs.n0 / total, counts_or_probs.n1 / total])
    probs = np.asarray(counts_or_probs, dtype=float)
    if probs.shape != (2,):
        raise SimulationError(f"expected a probability pair, got shape {probs.shape}")
    return probs


def mitigate_readout(counts_or_probs, readout: ReadoutModel, qubit: int) -> tuple[np.ndarray, bool]:
    """Invert the qubit's confusion matrix; clip + renormalize off-simplex results.

    Returns (corrected probabilities, clipped flag).
    """
    probs = _to_probs(counts_or_probs)
    confusion = readout.confusion(qubit)
    det = float(np.linalg.det(confusion))
    if abs(det) < 1e-9:
        raise SimulationError(f"confusion matrix is singular (det = {det:.3e})")
    corrected = np.linalg.solve(confusion, probs)
    clipped = bool(np.any(corrected < 0.0) or np.any(corrected > 1.0))
    if clipped:
        corrected = np.clip(corrected, 0.0, None)
        total = corrected.sum()
        corrected = corrected / total if total > 0 else np.array([0.5, 0.5])
    return corrected, clipped


@dataclass(frozen=True)
class ReferenceCorrection:
    """2x2 map from ideal to observed outcome probabilities, calibrated at t = 0."""

    matrix: np.ndarray
    inverse: np.ndarray = field(init=False)

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=float)
        det = float(np.linalg.det(mat))
        if abs(det) < 1e-6:
            raise SimulationError(f"reference calibration not invertible (det = {det:.3e})")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "inverse", np.linalg.inv(mat))

    def correct(self, probs) -> np.ndarray:
        return self.inverse @ _to_probs(probs)

    def bias_scale(self) -> float:
        """|d corrected_bias / d observed_bias| for error-bar propagation."""
        a = self.inverse
        return abs(a[0, 0] - a[1, 0] - a[0, 1] + a[1, 1]) / 2.0


def calibrate_reference(f0_re: float, f0_im: float, exact_f0: tuple[float, float] = (1.0, 0.0)) -> ReferenceCorrection:
    """Build the t = 0 calibration matrix from observed Re/Im bias estimates.

    Ideal outcome probabilities are known exactly at t = 0: (1, 0) for the Re
    circuit and (1/2, 1/2) for the Im circuit.  The observed Re pair is the
    matrix's action on (1, 0) (column 0); the observed Im pair is its action
    on (1/2, 1/2) (the column average), which yields column 1.  With pure
    readout noise the result is exactly the measured qubit's confusion matrix.
    """
    if exact_f0 != (1.0, 0.0):
        raise SimulationError("calibration assumes the generating function is 1 at t = 0")
    obs_re = np.array([(1.0 + f0_re) / 2.0, (1.0 - f0_re) / 2.0])
    obs_im = np.array([(1.0 + f0_im) / 2.0, (1.0 - f0_im) / 2.0])
    col0 = obs_re
    col1 = 2.0 * obs_im - col0
    return ReferenceCorrection(np.column_stack([col0, col1]))


def _bias_to_probs(bias: float) -> np.ndarray:
    return np.array([(1.0 + bias) / 2.0, (1.0 - bias) / 2.0])


def _probs_to_bias(probs: np.ndarray) -> float:
    return float(probs[0] - probs[1])


def mitigate_series(noisy: GfSeries, readout: ReadoutModel, ref: ReferenceCorrection, qubit: int) -> GfSeries:
    """Per-point readout inversion then reference correction, errors propagated.

    Error bars are scaled by the linearized bias sensitivity of the combined
    inverse map (the same scalar for both outcomes of a quadrature).
    """
    confusion = readout.confusion(qubit)
    inv_confusion = np.linalg.inv(confusion)
    combined = ref.inverse @ inv_confusion
    err_scale = abs(combined[0, 0] - combined[1, 0] - combined[0, 1] + combined[1, 1]) / 2.0

    def correct(bias: float) -> float:
        probs = inv_confusion @ _bias_to_probs(bias)
        return _probs_to_bias(ref.inverse @ probs)

    re = np.array([correct(b) for b in noisy.re])
    im = np.array([correct(b) for b in noisy.im])
    return replace(
        noisy,
        re=re,
        im=im,
        re_err=noisy.re_err * err_scale,
        im_err=noisy.im_err * err_scale,
        route="mitigated",
    )
