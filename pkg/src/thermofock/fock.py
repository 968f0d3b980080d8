"""Truncated single-mode and doubled-mode Fock machinery.

Units are hbar = k_B = 1 throughout; ``beta`` is an inverse energy.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .linalg import check_hermitian, eigh_hermitian
from .tolerances import tolerances

__all__ = [
    "UnstableHamiltonianError",
    "CutoffNotConverged",
    "ModelParams",
    "TruncationPolicy",
    "DoubledState",
    "DensityOperator",
    "FockOperators",
    "fock_operators",
    "pair_exponential",
    "build_hamiltonian",
    "gibbs_density",
    "reduced_density",
    "von_neumann_entropy",
    "choose_cutoff",
]


class UnstableHamiltonianError(ValueError):
    """The quadratic Hamiltonian is not bounded below (omega <= 2|kappa|)."""


class CutoffNotConverged(RuntimeError):
    """The truncation search hit its maximum cutoff without converging."""

    def __init__(self, best_cutoff: int, residual: float, tol: float):
        self.best_cutoff = best_cutoff
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"cutoff search did not converge up to N={best_cutoff}: "
            f"best residual {residual:.3e} > tolerance {tol:.1e}"
        )


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModelParams:
    """Inputs of ``H = omega a^+a + conj(kappa) a^+^2 + kappa a^2`` at inverse temperature ``beta``."""

    omega: float
    kappa: complex = 0.0
    beta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "kappa", complex(self.kappa))
        object.__setattr__(self, "beta", float(self.beta))
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise ValueError(f"omega must be positive, got {self.omega}")
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not cmath.isfinite(self.kappa):
            raise ValueError(f"kappa must be finite, got {self.kappa}")
        margin = self.omega - 2.0 * abs(self.kappa)
        eps = tolerances().stability * self.omega
        if margin <= eps:
            raise UnstableHamiltonianError(
                f"omega - 2|kappa| = {margin:.6g} <= {eps:.1e}: "
                "spectrum is unbounded below, exp(-beta H) is not trace class"
            )

    @classmethod
    def from_polar(cls, omega: float, kappa_abs: float, kappa_arg: float, beta: float) -> "ModelParams":
        return cls(omega, cmath.rect(kappa_abs, kappa_arg), beta)

    @property
    def kappa_abs(self) -> float:
        return abs(self.kappa)

    @property
    def phi(self) -> float:
        """Phase of kappa, with the convention phi = 0 for kappa = 0."""
        return cmath.phase(self.kappa) if self.kappa != 0 else 0.0

    @property
    def temperature(self) -> float:
        return 1.0 / self.beta

    def with_beta(self, beta: float) -> "ModelParams":
        return ModelParams(self.omega, self.kappa, beta)


@dataclass(frozen=True)
class TruncationPolicy:
    initial: int = 16
    growth: Fraction = Fraction(5, 4)
    tol: float = 1e-10
    max_cutoff: int = 512

    def __post_init__(self):
        object.__setattr__(self, "growth", Fraction(self.growth))
        if self.initial < 8:
            raise ValueError("initial cutoff must be at least 8")
        if self.growth <= 1:
            raise ValueError("growth factor must exceed 1")
        if self.max_cutoff < self.initial:
            raise ValueError("max_cutoff must not be below the initial cutoff")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")

    def sequence(self) -> list[int]:
        """Candidate cutoffs, strictly increasing, ending at ``max_cutoff``."""
        out = [self.initial]
        while out[-1] < self.max_cutoff:
            nxt = max(out[-1] + 1, math.ceil(out[-1] * self.growth))
            out.append(min(nxt, self.max_cutoff))
        return out


@dataclass(frozen=True)
class DoubledState:
    """Two-mode pure state ``sum C[m, n] |m> (x) |n~>`` (system index first).

    ``norm_factor`` is the multiplier applied by :meth:`normalized`; a value
    far from 1 means the truncation removed noticeable weight.
    """

    amplitudes: np.ndarray
    label: str = ""
    norm_factor: float = 1.0
    tail_mass: float = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.amplitudes, dtype=complex)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 1:
            raise ValueError(f"amplitudes must be a square matrix, got {c.shape}")
        object.__setattr__(self, "amplitudes", _readonly(c))
        edge = np.abs(c[-1, :]) ** 2
        tail = float(edge.sum() + np.sum(np.abs(c[:-1, -1]) ** 2))
        object.__setattr__(self, "tail_mass", tail)

    @property
    def cutoff(self) -> int:
        return self.amplitudes.shape[0]

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def normalized(self) -> "DoubledState":
        n2 = self.norm_sq()
        if n2 == 0:
            raise ValueError("cannot normalize the zero state")
        factor = 1.0 / math.sqrt(n2)
        return DoubledState(self.amplitudes * factor, self.label, self.norm_factor * factor)

    def vector(self) -> np.ndarray:
        """Flattened state on the N*N doubled space (system index outer)."""
        return self.amplitudes.reshape(-1)


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, unit-trace, positive semidefinite matrix on one mode.

    ``z_numeric`` is the unnormalized trace where the operator came from
    ``exp(-beta H)``; ``raw_trace`` is the trace before normalization.
    """

    matrix: np.ndarray
    z_numeric: float | None = None
    raw_trace: float = 1.0

    def __post_init__(self):
        m = check_hermitian(np.asarray(self.matrix, dtype=complex))
        tol = tolerances()
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > tol.normalization:
            raise ValueError(f"density operator trace {tr!r} differs from 1")
        lo = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])
        if lo < -tol.negative_eigenvalue:
            raise ValueError(f"density operator has negative eigenvalue {lo:.3e}")
        object.__setattr__(self, "matrix", _readonly(m))

    @property
    def cutoff(self) -> int:
        return self.matrix.shape[0]

    def tail_population(self, count: int = 2) -> float:
        return float(np.sum(np.diag(self.matrix).real[-count:]))

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.trace(self.matrix @ op))


class FockOperators(NamedTuple):
    a: np.ndarray
    adag: np.ndarray
    n: np.ndarray


def fock_operators(n_max: int) -> FockOperators:
    """Annihilation, creation and number operators on ``span{|0>, ..., |N-1>}``.

    The truncated commutator ``[a, a^+]`` is the identity except for its last
    diagonal entry, which equals ``1 - N``.
    """
    if int(n_max) != n_max or n_max < 2:
        raise ValueError(f"cutoff must be an integer >= 2, got {n_max}")
    n_max = int(n_max)
    a = np.diag(np.sqrt(np.arange(1, n_max, dtype=float)), 1).astype(complex)
    adag = a.conj().T.copy()
    num = np.diag(np.arange(n_max, dtype=float)).astype(complex)
    for m in (a, adag, num):
        m.setflags(write=False)
    return FockOperators(a, adag, num)


def pair_exponential(c: complex, n_max: int, lowering: bool = False) -> np.ndarray:
    """Exact truncated matrix of ``exp(c a^+^2)``, or of ``exp(c a^2)`` when ``lowering``.

    Entries are ``<n+2j| exp(c a^+^2) |n> = c^j sqrt((n+2j)!/n!) / j!``; every
    intermediate level lies inside the truncation, so no truncation error arises.
    Each diagonal is built from the previous one by a single multiplication.
    """
    c = complex(c)
    out = np.eye(n_max, dtype=complex)
    if c != 0:
        col = np.ones(n_max, dtype=complex)
        for j in range(1, (n_max + 1) // 2):
            src = np.arange(n_max - 2 * j)
            top = src + 2 * j
            col = col[: src.size] * (c / j) * np.sqrt(top * (top - 1.0))
            out[top, src] = col
    return out.T.copy() if lowering else out


def build_hamiltonian(p: ModelParams, n_max: int) -> np.ndarray:
    ops = fock_operators(n_max)
    h = p.omega * ops.n + np.conj(p.kappa) * (ops.adag @ ops.adag) + p.kappa * (ops.a @ ops.a)
    return h


def gibbs_density(p: ModelParams, n_max: int) -> DensityOperator:
    """Brute-force thermal state ``exp(-beta H) / tr exp(-beta H)`` at cutoff ``n_max``."""
    eig = eigh_hermitian(build_hamiltonian(p, n_max))
    w = eig.eigenvalues
    # shift by the ground energy so the weights never overflow
    weights = np.exp(-p.beta * (w - w[0]))
    z_shifted = float(weights.sum())
    rho = (eig.eigenvectors * (weights / z_shifted)) @ eig.eigenvectors.conj().T
    z = z_shifted * math.exp(-p.beta * w[0])
    return DensityOperator(rho, z_numeric=z, raw_trace=z)


def reduced_density(s: DoubledState) -> DensityOperator:
    """Partial trace over the tilde mode, ``C C^+`` for amplitudes ``C``."""
    c = s.amplitudes
    rho = c @ c.conj().T
    tr = float(np.trace(rho).real)
    if tr == 0:
        raise ValueError("zero-norm doubled state has no reduced density")
    rho = rho / tr
    rho = 0.5 * (rho + rho.conj().T)
    return DensityOperator(rho, raw_trace=tr)


def von_neumann_entropy(rho: DensityOperator) -> float:
    """``-tr(rho ln rho)`` in units of k_B."""
    tol = tolerances()
    lam = np.linalg.eigvalsh(rho.matrix)
    if lam[0] < -tol.entropy_reject:
        raise ValueError(f"eigenvalue {lam[0]:.3e} is negative; input is not a density operator")
    lam = lam[lam > tol.entropy_floor]
    return float(-np.sum(lam * np.log(lam)))


def choose_cutoff(p: ModelParams, policy: TruncationPolicy | None = None) -> int:
    """Smallest cutoff of the policy's sequence at which the Gibbs state has converged.

    A candidate ``N`` is accepted when the population of its two highest Fock
    levels is at most ``policy.tol`` and the numeric partition function moved
    by at most ``policy.tol`` (relative) from the previous candidate.  The
    first candidate is compared against ``initial / growth``.
    """
    policy = policy or TruncationPolicy()
    seq = policy.sequence()
    prev_n = max(2, math.floor(seq[0] / policy.growth))
    prev_z = gibbs_density(p, prev_n).z_numeric
    best = (math.inf, seq[0])
    for n in seq:
        rho = gibbs_density(p, n)
        tail = rho.tail_population(2)
        dz = abs(rho.z_numeric - prev_z) / rho.z_numeric
        residual = max(tail, dz)
        if residual <= policy.tol:
            return n
        if residual < best[0]:
            best = (residual, n)
        prev_z = rho.z_numeric
    raise CutoffNotConverged(best[1], best[0], policy.tol)
