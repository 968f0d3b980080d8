"""Purifications of thermal states and their thermodynamics.

Each constructor returns a :class:`~thermofock.fock.DoubledState` whose
partial trace over the tilde mode is the thermal state of
``H = omega a^+a + conj(kappa) a^+^2 + kappa a^2``.  The purifications are
only unique up to a unitary acting on the tilde mode, so comparisons
between different constructions are made on reduced densities.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .fock import (
    CutoffNotConverged,
    DoubledState,
    ModelParams,
    build_hamiltonian,
    fock_operators,
    pair_exponential,
)
from .linalg import eigh_hermitian, expm_hermitian, tensor
from .su11 import partition_function, thermal_params
from .tolerances import tolerances

__all__ = [
    "BogoliubovParams",
    "ThermoObservables",
    "DiagonalizationReport",
    "thermo_vacuum_free",
    "two_mode_squeeze_vacuum",
    "generalized_thermo_state",
    "spectral_thermo_state",
    "bogoliubov",
    "squeeze_operator",
    "rotation_operator",
    "diagonalization_check",
    "bogoliubov_thermo_state",
    "thermo_observables",
]

_DEFAULT = object()


def _log_power(base: complex, exponent: np.ndarray) -> np.ndarray:
    """Complex ``exponent * log(base)`` with ``0**0 = 1`` and ``0**k = 0``."""
    exponent = np.asarray(exponent)
    if base == 0:
        return np.where(exponent == 0, 0.0, -np.inf).astype(complex)
    return exponent * cmath.log(base)


def _finish(c: np.ndarray, label: str, tail_tol) -> DoubledState:
    raw = DoubledState(c, label)
    state = raw.normalized()
    tol = tolerances().cutoff if tail_tol is _DEFAULT else tail_tol
    if tol is not None:
        residual = max(raw.tail_mass, abs(1.0 - raw.norm_sq()))
        if residual > tol:
            raise CutoffNotConverged(raw.cutoff, residual, tol)
    return state


def thermo_vacuum_free(p: ModelParams, n_max: int) -> DoubledState:
    """``sqrt(1 - e^{-beta omega}) exp(e^{-beta omega/2} a^+ a~^+) |0 0~>`` for ``kappa = 0``."""
    if p.kappa != 0:
        raise ValueError("thermo_vacuum_free requires kappa = 0; use generalized_thermo_state")
    n = np.arange(n_max)
    x = p.beta * p.omega
    diag = math.sqrt(-math.expm1(-x)) * np.exp(-n * x / 2)
    state = DoubledState(np.diag(diag.astype(complex)), "free")
    return state


def two_mode_squeeze_vacuum(theta: float, n_max: int) -> DoubledState:
    """``exp[theta (a^+ a~^+ - a a~)] |0 0~>`` built on the truncated doubled space."""
    ops = fock_operators(n_max)
    gen = theta * (tensor(ops.adag, ops.adag) - tensor(ops.a, ops.a))
    # gen is anti-Hermitian: exp(gen) = exp(-i K) with K = i gen Hermitian
    u = expm_hermitian(1j * gen, -1j)
    vec = u[:, 0]
    return DoubledState(vec.reshape(n_max, n_max), "two-mode-squeeze")


def generalized_thermo_state(p: ModelParams, n_max: int, tail_tol=_DEFAULT) -> DoubledState:
    """Closed-form purification ``N exp(E* a^+^2 + sqrt(lam) a^+ a~^+) |0 0~>``.

    With ``m = n + 2j`` the amplitudes are
    ``N E*^j lam^{n/2} sqrt(m!) / (j! sqrt(n!))`` and vanish otherwise,
    where ``N = sqrt(2 lam^{1/2} sinh(beta D / 2))``.  The truncated state is
    renormalized; ``tail_tol`` (``None`` to skip) bounds the discarded weight.
    """
    dp = thermal_params(p)
    log_norm = 0.5 * (math.log(2.0) + 0.5 * math.log(dp.lam) + math.log(math.sinh(p.beta * dp.D / 2)))
    m = np.arange(n_max)[:, None]
    n = np.arange(n_max)[None, :]
    twice_j = m - n
    allowed = (twice_j >= 0) & (twice_j % 2 == 0)
    j = np.where(allowed, twice_j // 2, 0)
    logc = (
        log_norm
        + _log_power(np.conj(dp.E), j)
        + 0.5 * n * math.log(dp.lam)
        + 0.5 * gammaln(m + 1)
        - 0.5 * gammaln(n + 1)
        - gammaln(j + 1)
    )
    c = np.exp(np.where(allowed, logc, -np.inf))
    return _finish(c, "generalized", tail_tol)


def spectral_thermo_state(p: ModelParams, n_max: int) -> DoubledState:
    """``Z^{-1/2} sum_n e^{-beta E_n / 2} |psi_n> (x) |n~>`` from the truncated spectrum."""
    eig = eigh_hermitian(build_hamiltonian(p, n_max))
    w = eig.eigenvalues
    weights = np.exp(-p.beta * (w - w[0]) / 2)
    weights = weights / math.sqrt(float(np.sum(weights**2)))
    return DoubledState(eig.eigenvectors * weights, "spectral")


@dataclass(frozen=True)
class BogoliubovParams:
    mu: float
    nu: float
    omega_prime: float
    phi: float

    @property
    def ratio(self) -> float:
        return self.nu / self.mu


def bogoliubov(p: ModelParams) -> BogoliubovParams:
    wp = math.sqrt(p.omega**2 - 4 * abs(p.kappa) ** 2)
    half = p.omega / (2 * wp)
    return BogoliubovParams(math.sqrt(half + 0.5), math.sqrt(max(half - 0.5, 0.0)), wp, p.phi)


def squeeze_operator(bp: BogoliubovParams, n_max: int) -> np.ndarray:
    """``exp(r a^+^2 / 2) mu^{-(a^+a + 1/2)} exp(-r a^2 / 2)`` with ``r = nu / mu``."""
    n = np.arange(n_max)
    r = bp.ratio
    left = pair_exponential(0.5 * r, n_max)
    right = pair_exponential(-0.5 * r, n_max, lowering=True)
    return (left * bp.mu ** (-(n + 0.5))) @ right


def rotation_operator(phi: float, n_max: int) -> np.ndarray:
    return np.diag(np.exp(0.5j * phi * np.arange(n_max)))


@dataclass(frozen=True)
class DiagonalizationReport:
    cutoff: int
    block: int
    offdiag_norm: float
    const_shift_err: float
    unitarity_err: float
    intertwining_err: float


def diagonalization_check(p: ModelParams, n_max: int, block: int | None = None) -> DiagonalizationReport:
    """Compare ``S R H R^+ S^+`` with ``omega' (a^+a + 1/2) - omega/2`` on the leading block.

    ``offdiag_norm`` and ``const_shift_err`` are max-abs deviations of the
    off-diagonal and diagonal entries.  ``intertwining_err`` measures
    ``S R H R^+ - H' S`` instead, which avoids the truncated ``S^+`` and is
    exact at finite cutoff on columns below ``n_max - 2``.
    """
    block = n_max // 2 if block is None else block
    bp = bogoliubov(p)
    s = squeeze_operator(bp, n_max)
    r = rotation_operator(bp.phi, n_max)
    rhr = r @ build_hamiltonian(p, n_max) @ r.conj().T
    h_prime = s @ rhr @ s.conj().T
    target = bp.omega_prime * (np.arange(n_max) + 0.5) - 0.5 * p.omega
    dev = (h_prime - np.diag(target))[:block, :block]
    diag = np.diag(dev).copy()
    off = dev - np.diag(diag)
    unit = (s.conj().T @ s - np.eye(n_max))[:block, :block]
    inter = (s @ rhr - target[:, None] * s)[:block, : n_max - 2]
    return DiagonalizationReport(
        cutoff=n_max,
        block=block,
        offdiag_norm=float(np.max(np.abs(off))),
        const_shift_err=float(np.max(np.abs(diag))),
        unitarity_err=float(np.max(np.abs(unit))),
        intertwining_err=float(np.max(np.abs(inter))),
    )


def _bogoliubov_closed_sum(p: ModelParams, bp: BogoliubovParams, n_max: int) -> np.ndarray:
    # exp[x a^+ a~^+ + y a^+^2 + w a~^+^2] |0 0~>: m = l + 2j, n = l + 2k
    bw = p.beta * bp.omega_prime
    x = cmath.exp(-(bw + 1j * bp.phi) / 2) / bp.mu
    y = -bp.nu * cmath.exp(-1j * bp.phi) / (2 * bp.mu)
    w = bp.nu * math.exp(-bw) / (2 * bp.mu)
    log_norm = 0.5 * (math.log(-math.expm1(-bw)) - math.log(bp.mu))
    lg = gammaln(np.arange(n_max) + 1)
    c = np.zeros((n_max, n_max), dtype=complex)
    for l in range(n_max):
        jj = np.arange((n_max - 1 - l) // 2 + 1)
        m = l + 2 * jj
        logs = (
            log_norm
            + _log_power(x, np.array(l))
            + _log_power(y, jj)[:, None]
            + _log_power(w, jj)[None, :]
            + 0.5 * (lg[m][:, None] + lg[m][None, :])
            - lg[l]
            - lg[jj][:, None]
            - lg[jj][None, :]
        )
        c[np.ix_(m, m)] += np.exp(logs)
    return c


def bogoliubov_thermo_state(p: ModelParams, n_max: int, route: str = "unitary", tail_tol=_DEFAULT) -> DoubledState:
    """Purification obtained from the Bogoliubov diagonalization.

    ``route="unitary"`` applies ``R^+ S^+`` to the free thermo vacuum at
    frequency ``omega'``; ``route="closed"`` sums the equivalent
    three-generator exponential directly.
    """
    bp = bogoliubov(p)
    if route == "unitary":
        free = thermo_vacuum_free(ModelParams(bp.omega_prime, 0.0, p.beta), n_max).amplitudes
        s = squeeze_operator(bp, n_max)
        r = rotation_operator(bp.phi, n_max)
        c = r.conj().T @ s.conj().T @ free
    elif route == "closed":
        c = _bogoliubov_closed_sum(p, bp, n_max)
    else:
        raise ValueError(f"unknown route {route!r}; expected 'unitary' or 'closed'")
    return _finish(c, f"bogoliubov-{route}", tail_tol)


@dataclass(frozen=True)
class ThermoObservables:
    Z: float
    internal_energy: float
    entropy: float
    term_number: float
    term_raise: float
    term_lower: float
    temperature: float

    @property
    def sum_rule_residual(self) -> float:
        total = self.term_number + self.term_raise + self.term_lower
        return abs(total - self.internal_energy) / max(abs(self.internal_energy), 1e-300)


def _coth(x: float) -> float:
    return 1.0 / math.tanh(x)


def thermo_observables(p: ModelParams) -> ThermoObservables:
    d = math.sqrt(p.omega**2 - 4 * abs(p.kappa) ** 2)
    x = p.beta * d / 2
    ct = _coth(x)
    energy = 0.5 * (d * ct - p.omega)
    # ln(2 sinh x) = x + ln(1 - e^{-2x})
    entropy = x * ct - (x + math.log(-math.expm1(-2 * x)))
    term_number = 0.5 * p.omega * (p.omega / d * ct - 1)
    term_pair = -(abs(p.kappa) ** 2) / d * ct
    return ThermoObservables(
        Z=partition_function(p),
        internal_energy=energy,
        entropy=entropy,
        term_number=term_number,
        term_raise=term_pair,
        term_lower=term_pair,
        temperature=1.0 / p.beta,
    )
