"""Generating-function traces F(t) = <exp(-i t H)> by three routes.

* exact: spectral formula from the dense oracle, F(t) = sum_a w_a e^{-i t E_a};
* statevector (shots = 0): Hadamard-test circuits evaluated with exact ancilla
  expectations;
* sampled (shots > 0): the same circuits with binomial shot sampling.

The Hadamard test prepares (|0> + |1>)/sqrt(2) on the ancilla, applies the
Trotterized evolution controlled on the ancilla, and closes with a Hadamard;
the ancilla bias p0 - p1 is Re F(t).  Inserting R(-pi/2) on the ancilla turns
the bias into Im F(t).  Mixtures are averaged member by member with the shot
budget split evenly.

The CSV format written here is the contract between the quantum-side and
classical-side modules: `# model=`, `# shots=`, `# seed=`, `# route=` header
lines, then named columns t,re,im,re_err,im_err rendered with 17 significant
digits.
"""

from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .models import DenseHamiltonian, InitialState
from .statevector import (
    SimulationError,
    StateVector,
    ancilla_expectation,
    apply_gate,
    derive_seed,
    hadamard,
    phase_gate,
    sample_ancilla,
)
from .trotter import controlled_evolve, steps_for, trotter_step

ROUTES = ("exact", "statevector", "sampled", "noisy", "mitigated")

_QUAD_RE, _QUAD_IM = 0, 1


def _fmt(x: float) -> str:
    return f"{float(x):.16e}"


@dataclass
class GfSeries:
    """Sampled or exact F(t) on a time grid, with per-point standard errors."""

    t: np.ndarray
    re: np.ndarray
    im: np.ndarray
    re_err: np.ndarray
    im_err: np.ndarray
    shots: int = 0
    route: str = "exact"
    model: str = ""
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("t", "re", "im", "re_err", "im_err"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        n = self.t.size
        for name in ("re", "im", "re_err", "im_err"):
            if getattr(self, name).size != n:
                raise SimulationError(f"column {name} does not match grid length {n}")
        if self.route not in ROUTES:
            raise SimulationError(f"unknown route {self.route!r}")
        self.validate()

    def validate(self):
        mag = np.hypot(self.re, self.im)
        slack = 3.0 * np.maximum(self.re_err, self.im_err)
        bad = np.nonzero(mag > 1.0 + slack + 1e-12)[0]
        if bad.size:
            k = bad[0]
            raise SimulationError(f"|F| = {mag[k]:.6f} exceeds 1 beyond error bars at t = {self.t[k]:g}")
        if self.route == "exact" and self.t.size and self.t[0] == 0.0:
            if abs(self.re[0] - 1.0) > 1e-12 or abs(self.im[0]) > 1e-12:
                raise SimulationError("exact route must have F(0) = 1")

    @property
    def values(self) -> np.ndarray:
        return self.re + 1j * self.im

    def dt(self) -> float:
        """Grid spacing; requires a uniform grid."""
        if self.t.size < 2:
            raise SimulationError("grid too short")
        steps = np.diff(self.t)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            raise SimulationError("grid is not uniform")
        return float(steps[0])

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# model={self.model}\n")
            fh.write(f"# shots={self.shots}\n")
            fh.write(f"# seed={self.seed}\n")
            fh.write(f"# route={self.route}\n")
            names = ["t", "re", "im", "re_err", "im_err"] + list(self.extra)
            fh.write(",".join(names) + "\n")
            cols = [self.t, self.re, self.im, self.re_err, self.im_err]
            cols += [np.asarray(self.extra[name], dtype=float) for name in self.extra]
            for row in zip(*cols):
                fh.write(",".join(_fmt(x) for x in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "GfSeries":
        meta = {"model": "", "shots": "0", "seed": "0", "route": "exact"}
        rows: list[list[float]] = []
        names: list[str] | None = None
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, value = line[1:].strip().partition("=")
                    meta[key.strip()] = value.strip()
                elif names is None:
                    names = [c.strip() for c in line.split(",")]
                else:
                    rows.append([float(x) for x in line.split(",")])
        if names is None or not rows:
            raise SimulationError(f"no data rows in {path}")
        data = {name: np.array([r[i] for r in rows]) for i, name in enumerate(names)}
        core = {k: data[k] for k in ("t", "re", "im", "re_err", "im_err")}
        extra = {k: v for k, v in data.items() if k not in core}
        return cls(
            **core,
            shots=int(meta["shots"]),
            route=meta["route"],
            model=meta["model"],
            seed=int(meta["seed"]),
            extra=extra,
        )


def gf_exact(dense: DenseHamiltonian, init: InitialState, t_grid, model: str = "") -> GfSeries:
    """F(t) = sum_a w_a e^{-i t E_a} from the cached eigendecomposition."""
    t = np.asarray(t_grid, dtype=float)
    w = dense.spectral_weights(init)
    values = np.exp(-1j * np.outer(t, dense.eigenvalues)) @ w
    zeros = np.zeros_like(t)
    return GfSeries(t, values.real, values.imag, zeros, zeros, shots=0, route="exact", model=model)


class HadamardEstimate(NamedTuple):
    re: float
    im: float
    re_err: float
    im_err: float
    shots: int  # actual total shots per quadrature (after mixture rounding)


def _evolved_branches(member: StateVector, model, t: float, n_steps: int) -> StateVector:
    """State after [H on ancilla, controlled evolution]; ancilla = highest qubit."""
    ancilla = model.n_qubits
    state = member.tensor_with_ancilla()
    state = apply_gate(state, hadamard(ancilla))
    if t != 0:
        state = controlled_evolve(state, model, t, n_steps, ancilla)
    return state


def _quadrature_state(mid: StateVector, ancilla: int, quadrature: int) -> StateVector:
    if quadrature == _QUAD_IM:
        mid = apply_gate(mid, phase_gate(-math.pi / 2.0, ancilla))
    return apply_gate(mid, hadamard(ancilla))


def gf_hadamard(model, init: InitialState, t: float, n_steps: int, shots: int, seed: int) -> HadamardEstimate:
    """One time point of F(t) via the two Hadamard-test circuits.

    shots = 0 uses exact ancilla expectations (no sampling); otherwise each
    quadrature of each mixture member is sampled with shots/len(mixture)
    measurements (rounded down, actual total recorded).
    """
    if shots < 0:
        raise SimulationError(f"shots must be >= 0, got {shots}")
    ancilla = model.n_qubits
    members = len(init)
    per_member = shots // members if shots else 0
    if shots and per_member == 0:
        raise SimulationError(f"shot budget {shots} too small for a {members}-member mixture")

    estimates = np.zeros(2)
    for m_idx, (weight, member) in enumerate(zip(init.weights, init.members)):
        mid = _evolved_branches(member, model, t, n_steps)
        for quad in (_QUAD_RE, _QUAD_IM):
            state = _quadrature_state(mid, ancilla, quad)
            if shots == 0:
                estimates[quad] += weight * ancilla_expectation(state, ancilla)
            else:
                sub_seed = derive_seed(seed, m_idx, quad)
                counts = sample_ancilla(state, ancilla, per_member, sub_seed)
                estimates[quad] += weight * counts.bias

    total = per_member * members
    if shots == 0:
        errs = np.zeros(2)
    else:
        errs = np.sqrt(np.maximum(0.0, 1.0 - estimates**2) / total)
    return HadamardEstimate(estimates[0], estimates[1], errs[0], errs[1], total)


def gf_series(
    model,
    init: InitialState,
    t_grid,
    n_steps_policy="reference",
    shots: int = 0,
    seed: int = 0,
    threads: int = 1,
) -> GfSeries:
    """Per-point Hadamard-test estimates over a monotone grid starting at 0."""
    t = np.asarray(t_grid, dtype=float)
    if t.size == 0 or t[0] != 0.0 or np.any(np.diff(t) < 0):
        raise SimulationError("t_grid must be monotone and start at 0")

    def point(k: int) -> HadamardEstimate:
        n_steps = steps_for(model, t[k], n_steps_policy)
        return gf_hadamard(model, init, float(t[k]), n_steps, shots, derive_seed(seed, k))

    indices = range(t.size)
    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(point, indices))
    else:
        results = [point(k) for k in indices]

    route = "statevector" if shots == 0 else "sampled"
    actual = results[0].shots if shots else 0
    return GfSeries(
        t,
        np.array([r.re for r in results]),
        np.array([r.im for r in results]),
        np.array([r.re_err for r in results]),
        np.array([r.im_err for r in results]),
        shots=actual,
        route=route,
        model=model.fingerprint(),
        seed=int(seed),
    )


def hadamard_test_circuit(model, t: float, n_steps: int, quadrature: str):
    """Full gate sequence of one Hadamard-test circuit (for noise replays).

    quadrature is "re" or "im"; the ancilla is qubit model.n_qubits.
    """
    from .trotter import AppliedGate, Circuit

    if quadrature not in ("re", "im"):
        raise SimulationError(f"quadrature must be re|im, got {quadrature!r}")
    ancilla = model.n_qubits
    gates: list[AppliedGate] = [AppliedGate(hadamard(ancilla))]
    if quadrature == "im":
        gates.append(AppliedGate(phase_gate(-math.pi / 2.0, ancilla)))
    if t != 0:
        step = trotter_step(model, t / n_steps).controlled(ancilla)
        for _ in range(n_steps):
            gates.extend(step.gates)
    gates.append(AppliedGate(hadamard(ancilla)))
    return Circuit(tuple(gates), ancilla + 1, dt=t / n_steps if t else 0.0, n_steps=n_steps)
