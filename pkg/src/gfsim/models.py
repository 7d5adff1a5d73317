"""Model Hamiltonians, qubit encodings, dense oracle, and initial states.

Two models are supported:

* a seniority-zero pairing Hamiltonian (one qubit per time-reversed pair),
  H = sum_p eps_p [1 - Z_p] - 1/2 sum_{p>q} g_pq [X_p X_q + Y_p Y_q];
* the open-boundary 1-D Fermi-Hubbard chain after a Jordan-Wigner mapping
  with spin-up sites on qubits 0..M-1 and spin-down on M..2M-1,
  H = J sum_{a != M-1} (X_{a+1} X_a + Y_{a+1} Y_a)/2
    + U/4 sum_a [I - Z_a][I - Z_{a+M}].

The dense matrix of any encoded Hamiltonian (eigendecomposition cached) is the
oracle every "exact" curve in the package is checked against.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .statevector import SimulationError, StateVector

HERMITICITY_TOL = 1e-12
MAX_DENSE_QUBITS = 12

_PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


def pauli_string_matrix(ops: str) -> np.ndarray:
    """Dense matrix of a Pauli string; ops[q] acts on qubit q (qubit 0 = LSB)."""
    mat = _PAULI_1Q[ops[-1]]
    for q in range(len(ops) - 2, -1, -1):
        mat = np.kron(mat, _PAULI_1Q[ops[q]])
    return mat


def pauli_terms_matrix(terms, n_qubits: int) -> np.ndarray:
    """Dense matrix of a list of (complex coefficient, ops string) terms."""
    dim = 1 << n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for coeff, ops in terms:
        if len(ops) != n_qubits:
            raise SimulationError(f"Pauli string {ops!r} does not match {n_qubits} qubits")
        out += coeff * pauli_string_matrix(ops)
    return out


@dataclass(frozen=True)
class PauliTerm:
    """Real-weighted Pauli string; ops[q] is the letter for qubit q."""

    coeff: float
    ops: str

    def __post_init__(self):
        if any(c not in "IXYZ" for c in self.ops):
            raise SimulationError(f"invalid Pauli letters in {self.ops!r}")


class QubitHamiltonian:
    """Hermitian sum of real-weighted Pauli strings on n qubits.

    Canonicalization merges duplicate strings, drops zero terms, and sorts by
    string so identical Hamiltonians compare equal term by term.
    """

    def __init__(self, n_qubits: int, terms):
        self.n_qubits = int(n_qubits)
        merged: dict[str, float] = {}
        for term in terms:
            if isinstance(term, PauliTerm):
                coeff, ops = term.coeff, term.ops
            else:
                coeff, ops = term
            if len(ops) != self.n_qubits:
                raise SimulationError(f"term {ops!r} does not match {self.n_qubits} qubits")
            if abs(float(np.imag(coeff))) > HERMITICITY_TOL:
                raise SimulationError(f"non-real coefficient {coeff} on {ops!r}")
            merged[ops] = merged.get(ops, 0.0) + float(np.real(coeff))
        self.terms = tuple(
            PauliTerm(c, ops) for ops, c in sorted(merged.items()) if c != 0.0
        )

    def __iter__(self):
        return iter(self.terms)

    def __len__(self):
        return len(self.terms)

    def coefficient(self, ops: str) -> float:
        for term in self.terms:
            if term.ops == ops:
                return term.coeff
        return 0.0

    @property
    def energy_bound(self) -> float:
        """sum_terms |coeff|, a rigorous bound on every |eigenvalue|."""
        return float(sum(abs(t.coeff) for t in self.terms))

    def to_matrix(self) -> np.ndarray:
        return pauli_terms_matrix([(t.coeff, t.ops) for t in self.terms], self.n_qubits)


def _string(n: int, letters: dict[int, str]) -> str:
    out = ["I"] * n
    for q, letter in letters.items():
        out[q] = letter
    return "".join(out)


# Models --------------------------------------------------------------------


@dataclass(frozen=True)
class PairingModel:
    """Pairing model with M doubly degenerate levels and N pairs (one qubit per level)."""

    eps: np.ndarray
    g: np.ndarray
    n_pairs: int

    def __post_init__(self):
        eps = np.asarray(self.eps, dtype=float)
        g = np.asarray(self.g, dtype=float)
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "g", g)
        m = eps.size
        if g.shape != (m, m):
            raise SimulationError(f"g must be {m}x{m}, got {g.shape}")
        if not np.allclose(g, g.T, atol=1e-12):
            raise SimulationError("g must be symmetric")
        if not 0 <= self.n_pairs <= m:
            raise SimulationError(f"need 0 <= N <= {m}, got N={self.n_pairs}")

    @classmethod
    def uniform(cls, levels: int, pairs: int, delta_e: float = 1.0, g: float = 1.0) -> "PairingModel":
        """eps_p = p * delta_e for p = 1..M and constant pair coupling g."""
        eps = delta_e * np.arange(1, levels + 1, dtype=float)
        return cls(eps=eps, g=np.full((levels, levels), float(g)), n_pairs=pairs)

    @property
    def n_levels(self) -> int:
        return self.eps.size

    @property
    def n_qubits(self) -> int:
        return self.eps.size

    @property
    def level_spacing(self) -> float:
        """Smallest gap between consecutive sorted level energies (energy scale)."""
        if self.eps.size < 2:
            return float(abs(self.eps[0])) or 1.0
        gaps = np.diff(np.sort(self.eps))
        positive = gaps[gaps > 0]
        return float(positive.min()) if positive.size else 1.0

    def fingerprint(self) -> str:
        eps = ",".join(f"{e:g}" for e in self.eps)
        if np.allclose(self.g, self.g.flat[0]):
            gtxt = f"{self.g.flat[0]:g}"
        else:
            gtxt = "matrix"
        return f"pairing(M={self.n_levels},N={self.n_pairs},eps=[{eps}],g={gtxt})"


@dataclass(frozen=True)
class HubbardModel:
    """1-D Fermi-Hubbard chain with open boundaries; 2M qubits for M sites."""

    sites: int
    hopping: float
    onsite: float

    def __post_init__(self):
        if self.sites < 2:
            raise SimulationError(f"need at least 2 sites, got {self.sites}")

    @property
    def n_qubits(self) -> int:
        return 2 * self.sites

    def fingerprint(self) -> str:
        return f"hubbard(M={self.sites},J={self.hopping:g},U={self.onsite:g})"


def pairing_to_qubits(model: PairingModel) -> QubitHamiltonian:
    """Encode the pairing Hamiltonian, one qubit per level."""
    m = model.n_levels
    terms: list[tuple[float, str]] = []
    for p in range(m):
        terms.append((model.eps[p], _string(m, {})))
        terms.append((-model.eps[p], _string(m, {p: "Z"})))
    for p in range(m):
        for q in range(p):
            c = -0.5 * model.g[p, q]
            terms.append((c, _string(m, {p: "X", q: "X"})))
            terms.append((c, _string(m, {p: "Y", q: "Y"})))
    return QubitHamiltonian(m, terms)


def hubbard_to_qubits(model: HubbardModel) -> QubitHamiltonian:
    """Encode the Hubbard chain on 2M qubits (up: 0..M-1, down: M..2M-1)."""
    m = model.sites
    n = 2 * m
    terms: list[tuple[float, str]] = []
    for a in range(2 * m - 1):
        if a == m - 1:  # no hop across the spin-sector boundary
            continue
        c = 0.5 * model.hopping
        terms.append((c, _string(n, {a: "X", a + 1: "X"})))
        terms.append((c, _string(n, {a: "Y", a + 1: "Y"})))
    u4 = 0.25 * model.onsite
    for a in range(m):
        terms.append((u4, _string(n, {})))
        terms.append((-u4, _string(n, {a: "Z"})))
        terms.append((-u4, _string(n, {a + m: "Z"})))
        terms.append((u4, _string(n, {a: "Z", a + m: "Z"})))
    return QubitHamiltonian(n, terms)


def to_qubits(model) -> QubitHamiltonian:
    if isinstance(model, PairingModel):
        return pairing_to_qubits(model)
    if isinstance(model, HubbardModel):
        return hubbard_to_qubits(model)
    raise SimulationError(f"unsupported model type {type(model).__name__}")


def jordan_wigner(j: int, kind: str, n_qubits: int) -> list[tuple[complex, str]]:
    """Fermionic ladder operator as a Pauli-term sum with a signed Z string.

    A_j^+ = [prod_{k<j} (-Z_k)] (X_j - i Y_j)/2 and A_j is its conjugate.
    Returned terms have complex coefficients (the operator is not Hermitian).
    """
    if not 0 <= j < n_qubits:
        raise SimulationError(f"mode index {j} out of range for {n_qubits} qubits")
    if kind not in ("creation", "annihilation"):
        raise SimulationError(f"kind must be creation|annihilation, got {kind!r}")
    sign = (-1.0) ** j
    ztail = {k: "Z" for k in range(j)}
    y_coeff = -0.5j if kind == "creation" else 0.5j
    return [
        (sign * 0.5, _string(n_qubits, {**ztail, j: "X"})),
        (sign * y_coeff, _string(n_qubits, {**ztail, j: "Y"})),
    ]


# Dense oracle ----------------------------------------------------------------


class DenseHamiltonian:
    """Dense Hermitian matrix with a cached eigendecomposition."""

    def __init__(self, matrix: np.ndarray, n_qubits: int):
        matrix = np.asarray(matrix, dtype=complex)
        herm_err = np.abs(matrix - matrix.conj().T).max()
        if herm_err > HERMITICITY_TOL * max(1.0, np.abs(matrix).max()):
            raise SimulationError(f"matrix not Hermitian: |H - H^H| = {herm_err:.3e}")
        self.matrix = matrix
        self.n_qubits = int(n_qubits)
        self.eigenvalues, self.eigenvectors = np.linalg.eigh(matrix)

    def spectral_weights(self, init: "InitialState") -> np.ndarray:
        """w_alpha = sum_members weight * |<alpha|member>|^2; sums to 1."""
        w = np.zeros(self.eigenvalues.size)
        for weight, member in zip(init.weights, init.members):
            overlaps = self.eigenvectors.conj().T @ member.amplitudes
            w += weight * np.abs(overlaps) ** 2
        return w

    def ground_energy(self, init: "InitialState", weight_tol: float = 1e-12) -> float:
        """Lowest eigenvalue with nonzero initial-state weight (reachable sector)."""
        w = self.spectral_weights(init)
        reachable = self.eigenvalues[w > weight_tol]
        if reachable.size == 0:
            raise SimulationError("initial state has no spectral weight above tolerance")
        return float(reachable.min())

    def propagator(self, t: float) -> np.ndarray:
        """exp(-i t H) from the cached eigendecomposition."""
        phases = np.exp(-1j * t * self.eigenvalues)
        return (self.eigenvectors * phases) @ self.eigenvectors.conj().T


def build_dense(h: QubitHamiltonian, max_qubits: int = MAX_DENSE_QUBITS) -> DenseHamiltonian:
    if h.n_qubits > max_qubits:
        raise SimulationError(f"dense oracle limited to {max_qubits} qubits, got {h.n_qubits}")
    return DenseHamiltonian(h.to_matrix(), h.n_qubits)


# Initial states --------------------------------------------------------------


class InitialState:
    """A pure state or a uniform mixture of orthogonal pure states."""

    def __init__(self, members: list[StateVector], weights=None):
        if not members:
            raise SimulationError("initial state needs at least one member")
        self.members = list(members)
        if weights is None:
            weights = [1.0 / len(members)] * len(members)
        self.weights = [float(w) for w in weights]
        if len(self.weights) != len(self.members):
            raise SimulationError("weights and members length mismatch")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise SimulationError("weights must sum to 1")
        for member in self.members:
            if abs(member.norm() - 1.0) > 1e-12:
                raise SimulationError("members must be normalized")

    @classmethod
    def from_bitstrings(cls, bitstrings: list[str]) -> "InitialState":
        return cls([StateVector.from_bitstring(b) for b in bitstrings])

    def __len__(self):
        return len(self.members)


def _pairing_lowest_filled(model: PairingModel) -> list[str]:
    order = np.argsort(model.eps, kind="stable")
    bits = ["0"] * model.n_levels
    for p in order[: model.n_pairs]:
        bits[p] = "1"
    return ["".join(bits)]


def _hubbard_pair_mixture(model: HubbardModel, pairs: int = 2) -> list[str]:
    m = model.sites
    if pairs > m:
        raise SimulationError(f"cannot place {pairs} up-down pairs on {m} sites")
    out = []
    for sites in itertools.combinations(range(m), pairs):
        bits = ["0"] * (2 * m)
        for i in sites:
            bits[i] = "1"
            bits[i + m] = "1"
        out.append("".join(bits))
    return out


def initial_state(model, spec="default") -> InitialState:
    """Build an initial state from a builtin name or explicit bitstring list.

    Builtins: "pairing-lowest-filled" (pairing default) occupies the N lowest
    levels; "hubbard-spin-saturated-mixture" (Hubbard default) is the uniform
    mixture of the C(M,2) determinants with an up-down pair on 2 of M sites.
    """
    if isinstance(spec, (list, tuple)):
        bitstrings = list(spec)
    elif spec in ("default", "pairing-lowest-filled") and isinstance(model, PairingModel):
        bitstrings = _pairing_lowest_filled(model)
    elif spec in ("default", "hubbard-spin-saturated-mixture") and isinstance(model, HubbardModel):
        bitstrings = _hubbard_pair_mixture(model)
    else:
        raise SimulationError(f"unknown initial-state spec {spec!r} for {type(model).__name__}")

    n = model.n_qubits
    for bits in bitstrings:
        if len(bits) != n:
            raise SimulationError(f"bitstring {bits!r} does not match {n} qubits")
    if isinstance(model, PairingModel):
        for bits in bitstrings:
            if bits.count("1") != model.n_pairs:
                raise SimulationError(
                    f"bitstring {bits!r} occupies {bits.count('1')} pairs, model has N={model.n_pairs}"
                )
    if isinstance(model, HubbardModel):
        m = model.sites
        counts = {(b[:m].count("1"), b[m:].count("1")) for b in bitstrings}
        if len(counts) > 1:
            raise SimulationError(f"mixture members disagree on particle numbers: {sorted(counts)}")
    return InitialState.from_bitstrings(bitstrings)


def number_operator_matrix(model) -> np.ndarray:
    """Dense total-number operator: sum_q (1 - Z_q)/2 (pairs for pairing)."""
    n = model.n_qubits
    terms = [(0.5, _string(n, {})) for _ in range(n)]
    terms += [(-0.5, _string(n, {q: "Z"})) for q in range(n)]
    return pauli_terms_matrix(terms, n)
