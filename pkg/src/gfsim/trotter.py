"""First-order Trotter-Suzuki step circuits and (controlled) time evolution.

One step factorizes exp(-i dt H) into the model's two parts, each realized by
explicit 1- and 2-qubit blocks:

* Hubbard: all hopping blocks over allowed neighbor pairs (ascending index),
  then all interaction blocks diag(1,1,1,e^{-i dt U}) on (site, site+M);
* pairing: phase gates R(-2 eps_p dt) on every level qubit, then for each
  p > q the block with cos(g_pq dt) / +i sin(g_pq dt) entries.

Within each part gates are applied in ascending qubit order; the order is
frozen here because any fixed order is valid at first order.  Controlled
evolution promotes every gate of the same sequence to its ancilla-controlled
version (explicit 3-qubit matrices; no decomposition into hardware gates).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import HubbardModel, PairingModel
from .statevector import GateMatrix, SimulationError, StateVector, apply_controlled, apply_gate

REFERENCE_DT_PAIRING = 0.002  # dt * (level spacing)
REFERENCE_DT_HUBBARD = 0.02  # dt * J


@dataclass(frozen=True)
class AppliedGate:
    """A gate plus an optional control qubit."""

    gate: GateMatrix
    control: int | None = None

    @property
    def touched(self) -> tuple[int, ...]:
        if self.control is None:
            return self.gate.targets
        return (self.control, *self.gate.targets)


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list; gates[0] is applied first."""

    gates: tuple[AppliedGate, ...]
    n_qubits: int
    dt: float = 0.0
    n_steps: int = 1

    def apply(self, state: StateVector) -> StateVector:
        for item in self.gates:
            if item.control is None:
                state = apply_gate(state, item.gate)
            else:
                state = apply_controlled(state, item.control, item.gate)
        return state

    def controlled(self, ancilla: int) -> "Circuit":
        """Promote every gate to its ancilla-controlled version, same order."""
        for item in self.gates:
            if item.control is not None:
                raise SimulationError("circuit already controlled")
            if ancilla in item.gate.targets:
                raise SimulationError(f"ancilla {ancilla} collides with gate targets")
        gates = tuple(AppliedGate(item.gate, ancilla) for item in self.gates)
        return Circuit(gates, max(self.n_qubits, ancilla + 1), self.dt, self.n_steps)


def _hopping_block(lam: float) -> np.ndarray:
    c, s = math.cos(lam), math.sin(lam)
    return np.array(
        [
            [1, 0, 0, 0],
            [0, c, -1j * s, 0],
            [0, -1j * s, c, 0],
            [0, 0, 0, 1],
        ],
        dtype=complex,
    )


def _pairing_block(lam: float) -> np.ndarray:
    c, s = math.cos(lam), math.sin(lam)
    return np.array(
        [
            [1, 0, 0, 0],
            [0, c, 1j * s, 0],
            [0, 1j * s, c, 0],
            [0, 0, 0, 1],
        ],
        dtype=complex,
    )


def trotter_step_hubbard(model: HubbardModel, dt: float) -> Circuit:
    """One first-order step: hopping blocks then interaction blocks."""
    if dt <= 0:
        raise SimulationError(f"dt must be > 0, got {dt}")
    m = model.sites
    gates: list[AppliedGate] = []
    lam = dt * model.hopping
    for a in range(2 * m - 1):
        if a == m - 1:
            continue
        gates.append(AppliedGate(GateMatrix(_hopping_block(lam), (a, a + 1), name=f"Uj({a},{a + 1})")))
    phase = np.diag([1.0, 1.0, 1.0, np.exp(-1j * dt * model.onsite)])
    for a in range(m):
        gates.append(AppliedGate(GateMatrix(phase, (a, a + m), name=f"Uu({a},{a + m})")))
    return Circuit(tuple(gates), model.n_qubits, dt=dt)


def trotter_step_pairing(model: PairingModel, dt: float) -> Circuit:
    """One first-order step: level phase gates then pair-coupling blocks."""
    if dt <= 0:
        raise SimulationError(f"dt must be > 0, got {dt}")
    m = model.n_levels
    gates: list[AppliedGate] = []
    for p in range(m):
        phi = -2.0 * model.eps[p] * dt
        gates.append(AppliedGate(GateMatrix(np.diag([1.0, np.exp(1j * phi)]), (p,), name=f"R({p})")))
    for p in range(1, m):
        for q in range(p):
            lam = model.g[p, q] * dt
            gates.append(AppliedGate(GateMatrix(_pairing_block(lam), (q, p), name=f"Ug({q},{p})")))
    return Circuit(tuple(gates), model.n_qubits, dt=dt)


def trotter_step(model, dt: float) -> Circuit:
    if isinstance(model, PairingModel):
        return trotter_step_pairing(model, dt)
    if isinstance(model, HubbardModel):
        return trotter_step_hubbard(model, dt)
    raise SimulationError(f"unsupported model type {type(model).__name__}")


def reference_dt(model) -> float:
    """Step size used for noiseless runs: dt*spacing = 0.002 (pairing), dt*J = 0.02 (Hubbard)."""
    if isinstance(model, PairingModel):
        return REFERENCE_DT_PAIRING / model.level_spacing
    if isinstance(model, HubbardModel):
        return REFERENCE_DT_HUBBARD / abs(model.hopping)
    raise SimulationError(f"unsupported model type {type(model).__name__}")


def steps_for(model, t: float, policy="reference") -> int:
    """Number of Trotter steps for evolving to time t under a step policy.

    "reference" gives ceil(t / reference_dt); an int is a fixed step count;
    a callable is invoked with t.
    """
    if policy == "reference":
        if t == 0:
            return 1
        return max(1, int(math.ceil(abs(t) / reference_dt(model) - 1e-12)))
    if isinstance(policy, int):
        if policy < 1:
            raise SimulationError(f"n_steps must be >= 1, got {policy}")
        return policy
    if callable(policy):
        return int(policy(t))
    raise SimulationError(f"unknown step policy {policy!r}")


def evolve(state: StateVector, model, t: float, n_steps: int) -> StateVector:
    """Apply n_steps first-order Trotter steps of size t/n_steps."""
    if n_steps < 1:
        raise SimulationError(f"n_steps must be >= 1, got {n_steps}")
    if t == 0:
        return state.copy()
    step = trotter_step(model, t / n_steps)
    for _ in range(n_steps):
        state = step.apply(state)
    return state


def controlled_evolve(state: StateVector, model, t: float, n_steps: int, ancilla: int) -> StateVector:
    """Ancilla-controlled version of evolve; identical gate order."""
    if n_steps < 1:
        raise SimulationError(f"n_steps must be >= 1, got {n_steps}")
    if ancilla < model.n_qubits:
        raise SimulationError(f"ancilla {ancilla} lies inside the system register")
    if t == 0:
        return state.copy()
    step = trotter_step(model, t / n_steps).controlled(ancilla)
    for _ in range(n_steps):
        state = step.apply(state)
    return state
