"""Ground-state energy extrapolation from cumulants of the Hamiltonian.

The imaginary-time energy E(tau) = <H e^{-tau H}>/<e^{-tau H}> obeys
dE/dtau = -(variance at tau) <= 0, and its Taylor coefficients are cumulants:
dE/dtau ~= -sum_{K=0}^{M} (-tau)^K / K! kappa_{K+2}.  The truncated series is
replaced by a Pade approximant constrained to be negative, pole-free on the
evaluation window, and decaying faster than 1/tau (denominator degree J with
J - I >= 2); integrating it from 0 extrapolates E(tau) to its asymptote.

The cumulant recurrence implemented is the standard moments-to-cumulants form
kappa_n = <H^n> - sum_{k=1}^{n-1} C(n-1, k-1) kappa_k <H^{n-k}>, validated by
a series-exponentiation round trip in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .genfunc import _fmt
from .models import DenseHamiltonian, InitialState
from .moments import MomentSet
from .statevector import SimulationError

PADE_COND_LIMIT = 1e12
PADE_TAYLOR_TOL = 1e-8


class PadeRejection(SimulationError):
    """Raised when no admissible Pade approximant exists."""


@dataclass
class CumulantSet:
    """kappa_K for K = 1..order (values[K-1] holds kappa_K)."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.size >= 2 and self.values[1] < -1e-10:
            raise SimulationError(f"variance kappa_2 = {self.values[1]:.3e} is negative")

    @property
    def order(self) -> int:
        return self.values.size

    def kappa(self, k: int) -> float:
        if not 1 <= k <= self.order:
            raise SimulationError(f"cumulant order {k} outside 1..{self.order}")
        return float(self.values[k - 1])


def cumulants_from_moments(m: MomentSet) -> CumulantSet:
    """Iterative moments-to-cumulants conversion starting from kappa_1 = <H>."""
    if m.order < 1:
        raise SimulationError("need moments through order 1")
    mom = m.values
    kappa = np.zeros(m.order)
    for n in range(1, m.order + 1):
        acc = mom[n]
        for k in range(1, n):
            acc -= math.comb(n - 1, k - 1) * kappa[k - 1] * mom[n - k]
        kappa[n - 1] = acc
    return CumulantSet(kappa)


def taylor_dEdtau(c: CumulantSet, order: int) -> np.ndarray:
    """Coefficients b_K of dE/dtau ~= sum_K b_K tau^K, b_K = -(-1)^K kappa_{K+2}/K!."""
    if c.order < order + 2:
        raise SimulationError(f"need cumulants through {order + 2}, have {c.order}")
    return np.array([-((-1.0) ** k) * c.kappa(k + 2) / math.factorial(k) for k in range(order + 1)])


@dataclass
class PadeApproximant:
    """Rational function num/den matching a Taylor series through order I+J."""

    num: np.ndarray  # a_0..a_I, ascending powers
    den: np.ndarray  # b_0=1, b_1..b_J, ascending powers
    residual: float = 0.0
    cond: float = 0.0

    def __post_init__(self):
        self.num = np.asarray(self.num, dtype=float)
        self.den = np.asarray(self.den, dtype=float)
        if self.den.size == 0 or self.den[0] != 1.0:
            raise SimulationError("denominator must be normalized with b_0 = 1")

    @property
    def orders(self) -> tuple[int, int]:
        return (self.num.size - 1, self.den.size - 1)

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        num = np.polyval(self.num[::-1], tau)
        den = np.polyval(self.den[::-1], tau)
        return num / den

    def taylor(self, order: int) -> np.ndarray:
        """Re-expand num/den as a power series through the given order."""
        coeffs = np.zeros(order + 1)
        for k in range(order + 1):
            acc = self.num[k] if k < self.num.size else 0.0
            for m in range(1, min(k, self.den.size - 1) + 1):
                acc -= self.den[m] * coeffs[k - m]
            coeffs[k] = acc
        return coeffs

    def poles(self) -> np.ndarray:
        if self.den.size == 1:
            return np.zeros(0, dtype=complex)
        return np.roots(self.den[::-1])


def pade_fit(coeffs, i_order: int, j_order: int) -> PadeApproximant:
    """Fit Pade[I, J] to the series coefficients c_0..c_{I+J}.

    Solves the JxJ linear system for the denominator and convolves for the
    numerator; rejects condition numbers above 1e12.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    total = i_order + j_order
    if coeffs.size < total + 1:
        raise SimulationError(f"need {total + 1} coefficients for Pade[{i_order},{j_order}]")

    def c(k: int) -> float:
        return coeffs[k] if 0 <= k < coeffs.size else 0.0

    if j_order == 0:
        den = np.array([1.0])
        cond = 1.0
        residual = 0.0
    else:
        a = np.array([[c(i_order + ell - m) for m in range(1, j_order + 1)] for ell in range(1, j_order + 1)])
        rhs = -np.array([c(i_order + ell) for ell in range(1, j_order + 1)])
        if not a.any():
            b = np.zeros(j_order)
            cond = 1.0
            residual = float(np.linalg.norm(rhs))
        else:
            cond = float(np.linalg.cond(a))
            if not np.isfinite(cond) or cond > PADE_COND_LIMIT:
                raise PadeRejection(f"Pade[{i_order},{j_order}] system condition {cond:.3e} exceeds {PADE_COND_LIMIT:g}")
            b = np.linalg.solve(a, rhs)
            residual = float(np.linalg.norm(a @ b - rhs))
        den = np.concatenate([[1.0], b])
    num = np.array([sum(den[m] * c(i - m) for m in range(min(i, j_order) + 1)) for i in range(i_order + 1)])
    approx = PadeApproximant(num, den, residual=residual, cond=cond)

    back = approx.taylor(total)
    scale = np.abs(coeffs[: total + 1]).max() or 1.0
    err = np.abs(back - coeffs[: total + 1]).max() / scale
    if err > PADE_TAYLOR_TOL:
        raise PadeRejection(f"Pade[{i_order},{j_order}] re-expansion error {err:.3e} exceeds {PADE_TAYLOR_TOL:g}")
    return approx


@dataclass
class CandidateReport:
    i_order: int
    j_order: int
    accepted: bool
    reason: str
    cond: float = float("nan")


def _has_positive_real_pole(approx: PadeApproximant) -> bool:
    """Any real pole on tau >= 0 invalidates the tail integral to infinity."""
    for root in approx.poles():
        near_axis = abs(root.imag) <= 1e-6 * max(1.0, abs(root))
        if near_axis and root.real >= -1e-12:
            return True
    return False


def pade_select(
    coeffs, order: int, tau_eval_max: float, grid_points: int = 2001, sign_tol: float = 1e-4
) -> tuple[PadeApproximant, list[CandidateReport]]:
    """Enumerate Pade[I, J] with I+J = order, J-I >= 2 and pick the admissible winner.

    A candidate is discarded if it has a real pole anywhere on tau >= 0 (the
    asymptote's tail integral would cross it) or takes a positive value beyond
    a small relative tolerance on the evaluation grid.  Among the survivors,
    decay strictly faster than 1/tau^2 is preferred (the boundary case
    J - I = 2 is a fallback only), then the largest numerator order wins, with
    the linear-system condition number as the tie-break.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.size < order + 1:
        raise SimulationError(f"need {order + 1} coefficients, have {coeffs.size}")
    grid = np.linspace(0.0, tau_eval_max, grid_points)

    log: list[CandidateReport] = []
    survivors: list[tuple[int, int, float, PadeApproximant]] = []
    for i_order in range(order + 1):
        j_order = order - i_order
        if j_order - i_order < 2:
            continue
        try:
            approx = pade_fit(coeffs, i_order, j_order)
        except PadeRejection as exc:
            log.append(CandidateReport(i_order, j_order, False, str(exc)))
            continue
        if _has_positive_real_pole(approx):
            log.append(CandidateReport(i_order, j_order, False, "real pole on tau >= 0", approx.cond))
            continue
        values = approx(grid)
        worst = float(values.max())
        if worst > sign_tol * float(np.abs(values).max()):
            log.append(
                CandidateReport(i_order, j_order, False, f"positive value {worst:.3e} on the evaluation grid", approx.cond)
            )
            continue
        marginal_decay = int(j_order - i_order == 2)
        note = "admissible" if not marginal_decay else "admissible (marginal 1/tau^2 decay, used only as fallback)"
        log.append(CandidateReport(i_order, j_order, True, note, approx.cond))
        survivors.append((marginal_decay, i_order, approx.cond, approx))

    if not survivors:
        reasons = "; ".join(f"[{r.i_order},{r.j_order}]: {r.reason}" for r in log)
        raise PadeRejection(f"no admissible Pade approximant at order {order} ({reasons})")
    survivors.sort(key=lambda item: (item[0], -item[1], item[2]))
    return survivors[0][3], log


def selection_report(log: list[CandidateReport], chosen: PadeApproximant | None) -> str:
    lines = ["Pade candidate selection"]
    for r in log:
        status = "accepted" if r.accepted else "rejected"
        lines.append(f"  [{r.i_order},{r.j_order}] {status}: {r.reason} (cond={r.cond:.3e})")
    if chosen is not None:
        i_order, j_order = chosen.orders
        lines.append(f"  chosen: [{i_order},{j_order}]")
    return "\n".join(lines) + "\n"


@dataclass
class EnergyCurve:
    """E(tau) and dE/dtau on a grid, with asymptote estimates.

    dE/dtau must be nonpositive up to the same relative wiggle tolerance the
    approximant selector allows on a decaying rational tail.
    """

    tau: np.ndarray
    energy: np.ndarray
    dEdtau: np.ndarray
    asymptote: float
    asymptote_grid_end: float
    uncertainty: float = 0.0

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float)
        self.energy = np.asarray(self.energy, dtype=float)
        self.dEdtau = np.asarray(self.dEdtau, dtype=float)
        if self.dEdtau.size:
            limit = 1e-4 * float(np.abs(self.dEdtau).max()) + 1e-10
            if float(self.dEdtau.max()) > limit:
                raise SimulationError(f"dE/dtau reaches {self.dEdtau.max():.3e} > 0")

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# asymptote={_fmt(self.asymptote)}\n")
            fh.write(f"# asymptote_grid_end={_fmt(self.asymptote_grid_end)}\n")
            fh.write(f"# uncertainty={_fmt(self.uncertainty)}\n")
            fh.write("tau,E,dEdtau\n")
            for row in zip(self.tau, self.energy, self.dEdtau):
                fh.write(",".join(_fmt(x) for x in row) + "\n")


def default_tau_max(kappa_2: float, factor: float = 20.0) -> float:
    """Evaluation horizon 20/sqrt(kappa_2); an inverse energy scale."""
    if kappa_2 <= 0:
        return factor
    return factor / math.sqrt(kappa_2)


def integrate_energy(approx: PadeApproximant, h_mean: float, tau_grid) -> EnergyCurve:
    """E(tau) = <H> + int_0^tau p(s) ds by adaptive quadrature (tol 1e-10).

    The asymptote adds the tail integral int_{tau_end}^inf p(s) ds, finite for
    admissible approximants since they decay faster than 1/tau.
    """
    tau = np.asarray(tau_grid, dtype=float)
    if tau.size == 0 or tau[0] != 0.0 or np.any(np.diff(tau) <= 0):
        raise SimulationError("tau grid must be strictly increasing from 0")
    energy = np.zeros(tau.size)
    energy[0] = h_mean
    for k in range(1, tau.size):
        piece, piece_err = quad(approx, tau[k - 1], tau[k], epsabs=1e-10, epsrel=1e-10, limit=200)
        if not np.isfinite(piece):
            raise SimulationError(f"energy integral diverges on [{tau[k - 1]:g}, {tau[k]:g}]")
        energy[k] = energy[k - 1] + piece
    tail, tail_err = quad(approx, tau[-1], np.inf, epsabs=1e-10, epsrel=1e-10, limit=200)
    if not np.isfinite(tail):
        raise SimulationError("tail integral diverges; approximant violates decay constraint")
    uncertainty = abs(tail) + abs(tail_err)
    return EnergyCurve(
        tau,
        energy,
        approx(tau),
        asymptote=float(energy[-1] + tail),
        asymptote_grid_end=float(energy[-1]),
        uncertainty=float(uncertainty),
    )


def constant_energy_curve(h_mean: float, tau_grid) -> EnergyCurve:
    """Degenerate case kappa_2 = 0 (eigenstate input): E(tau) = <H>."""
    tau = np.asarray(tau_grid, dtype=float)
    flat = np.full(tau.size, h_mean)
    return EnergyCurve(tau, flat, np.zeros(tau.size), asymptote=h_mean, asymptote_grid_end=h_mean)


def extrapolate_ground_energy(
    moments: MomentSet, order: int, tau_grid=None, tau_eval_max: float | None = None
) -> tuple[EnergyCurve, PadeApproximant | None, list[CandidateReport]]:
    """Full pipeline: cumulants -> truncated series -> Pade -> integrated E(tau)."""
    cumulants = cumulants_from_moments(moments)
    h_mean = float(moments.values[1])
    kappa_2 = cumulants.kappa(2) if cumulants.order >= 2 else 0.0
    if tau_eval_max is None:
        tau_eval_max = default_tau_max(kappa_2) if kappa_2 > 0 else 1.0
    if tau_grid is None:
        tau_grid = np.linspace(0.0, tau_eval_max, 401)
    if kappa_2 <= 1e-14 * max(1.0, h_mean**2):
        return constant_energy_curve(h_mean, tau_grid), None, []
    coeffs = taylor_dEdtau(cumulants, order)
    approx, log = pade_select(coeffs, order, tau_eval_max)
    return integrate_energy(approx, h_mean, tau_grid), approx, log


def imaginary_time_oracle(dense: DenseHamiltonian, init: InitialState, tau_grid) -> EnergyCurve:
    """Exact E(tau) and dE/dtau from the eigendecomposition (reference curves).

    Exponentials are stabilized by subtracting the lowest weight-carrying
    eigenvalue before exponentiation.
    """
    tau = np.asarray(tau_grid, dtype=float)
    w = dense.spectral_weights(init)
    keep = w > 1e-15
    energies = dense.eigenvalues[keep]
    weights = w[keep]
    e_min = energies.min()
    boltz = weights[None, :] * np.exp(-np.outer(tau, energies - e_min))
    norm = boltz.sum(axis=1)
    e_tau = (boltz @ energies) / norm
    e2_tau = (boltz @ energies**2) / norm
    dEdtau = -(e2_tau - e_tau**2)
    dEdtau = np.minimum(dEdtau, 0.0)  # clip roundoff at large tau
    return EnergyCurve(
        tau,
        e_tau,
        dEdtau,
        asymptote=float(e_min),
        asymptote_grid_end=float(e_tau[-1]),
    )
