"""Wigner functions and homodyne tomograms of the thermal states.

Phase-space convention: ``alpha = (q + i p) / sqrt(2)`` and
``W(alpha) = tr[rho D(alpha) Pi D(alpha)^+] / pi`` with ``Pi = (-1)^{a^+a}``,
so the vacuum has ``W(0) = 1/pi`` and ``int W dq dp = 1``.  The quadrature
frame ``(f, g)`` measures ``f q + g p``.
"""

from __future__ import annotations

import cmath
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.interpolate import RectBivariateSpline
from scipy.special import gammaln

from .fock import DensityOperator, ModelParams, fock_operators
from .linalg import eigh_hermitian
from .su11 import DerivedParams, thermal_params
from .tolerances import tolerances

__all__ = [
    "WIGNER_CONVENTION",
    "SupportError",
    "PhasePoint",
    "QuadratureFrame",
    "WignerGrid",
    "wigner_closed",
    "wigner_closed_grid",
    "wigner_free",
    "covering_halfwidth",
    "displacement_operator",
    "wigner_numeric",
    "wigner_numeric_grid",
    "quadrature_state",
    "quadrature_state_series",
    "tomogram_fock",
    "radon_numeric",
    "tomogram_closed_candidate",
    "TomogramAudit",
    "audit_candidate_tomogram",
]

WIGNER_CONVENTION = "displaced-parity; alpha=(q+ip)/sqrt2; W_vacuum(0)=1/pi; int W dq dp = 1"


class SupportError(ValueError):
    """A state or grid does not fit inside the available truncation or domain."""


@dataclass(frozen=True)
class PhasePoint:
    alpha: complex

    @classmethod
    def from_qp(cls, q: float, p: float) -> "PhasePoint":
        return cls(complex(q, p) / math.sqrt(2))

    @property
    def q(self) -> float:
        return math.sqrt(2) * self.alpha.real

    @property
    def p(self) -> float:
        return math.sqrt(2) * self.alpha.imag


@dataclass(frozen=True)
class QuadratureFrame:
    """Homodyne frame for the quadrature ``f q + g p``."""

    f: float
    g: float

    def __post_init__(self):
        object.__setattr__(self, "f", float(self.f))
        object.__setattr__(self, "g", float(self.g))
        if self.f == 0 and self.g == 0:
            raise ValueError("quadrature frame (f, g) must not be (0, 0)")

    @property
    def A(self) -> complex:
        return complex(self.f, -self.g)

    @property
    def norm2(self) -> float:
        return self.f**2 + self.g**2

    @property
    def angle(self) -> float:
        """``phi`` in ``A = |A| exp(-i phi)``."""
        return -cmath.phase(self.A)

    def prefactor(self, q: float) -> float:
        """``[pi (f^2 + g^2)]^{-1/4} exp(-q^2 / (2 (f^2 + g^2)))``."""
        return (math.pi * self.norm2) ** -0.25 * math.exp(-(q * q) / (2 * self.norm2))

    def G(self, dp: DerivedParams) -> complex:
        return 1 + 2 * cmath.exp(2j * self.angle) * dp.E

    def label(self) -> str:
        return f"{self.f!r},{self.g!r}"


@dataclass(frozen=True)
class WignerGrid:
    """Wigner values on a rectangular lattice; ``values[i, j]`` sits at ``(q[i], p[j])``."""

    q: np.ndarray
    p: np.ndarray
    values: np.ndarray
    convention: str = WIGNER_CONVENTION

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        p = np.asarray(self.p, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.shape != (q.size, p.size):
            raise ValueError(f"values shape {v.shape} does not match axes ({q.size}, {p.size})")
        for arr in (q, p, v):
            arr.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "values", v)

    @property
    def dq(self) -> float:
        return float(self.q[1] - self.q[0])

    @property
    def dp(self) -> float:
        return float(self.p[1] - self.p[0])

    def normalization(self) -> float:
        return float(np.sum(self.values) * self.dq * self.dp)

    def edge_max(self) -> float:
        v = np.abs(self.values)
        return float(max(v[0].max(), v[-1].max(), v[:, 0].max(), v[:, -1].max()))

    @functools.cached_property
    def _spline(self) -> RectBivariateSpline:
        return RectBivariateSpline(self.q, self.p, self.values, kx=3, ky=3, s=0)

    def __call__(self, q, p) -> np.ndarray:
        return self._spline.ev(q, p)


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    count = int(round((hi - lo) / step)) + 1
    return lo + step * np.arange(count)


def wigner_closed(p: ModelParams, alpha) -> np.ndarray | float:
    """Closed-form Wigner function of the thermal state of ``H``.

    ``W = (t/pi) exp{-(2t/D) [omega |alpha|^2 + kappa alpha^2 + kappa* alpha*^2]}``
    with ``t = tanh(beta D / 2)``.  ``alpha`` may be a PhasePoint or an array.
    """
    if isinstance(alpha, PhasePoint):
        alpha = alpha.alpha
    alpha = np.asarray(alpha, dtype=complex)
    d = math.sqrt(p.omega**2 - 4 * abs(p.kappa) ** 2)
    t = math.tanh(p.beta * d / 2)
    quad = p.omega * np.abs(alpha) ** 2 + 2 * np.real(p.kappa * alpha**2)
    out = t / math.pi * np.exp(-2 * quad * t / d)
    return float(out) if out.ndim == 0 else out


def wigner_free(omega: float, beta: float, alpha) -> np.ndarray | float:
    """Thermal Wigner function of a free oscillator, ``(t/pi) exp(-2 t |alpha|^2)`` with ``t = tanh(beta omega / 2)``."""
    if isinstance(alpha, PhasePoint):
        alpha = alpha.alpha
    t = math.tanh(beta * omega / 2)
    out = t / math.pi * np.exp(-2 * t * np.abs(np.asarray(alpha, dtype=complex)) ** 2)
    return float(out) if out.ndim == 0 else out


def wigner_closed_grid(p: ModelParams, q_axis: np.ndarray, p_axis: np.ndarray) -> WignerGrid:
    qq, pp = np.meshgrid(q_axis, p_axis, indexing="ij")
    return WignerGrid(q_axis, p_axis, wigner_closed(p, (qq + 1j * pp) / math.sqrt(2)))


def covering_halfwidth(p: ModelParams, edge: float | None = None, step: float = 0.02) -> float:
    """Half-width ``L`` such that the closed-form Wigner function is below ``edge`` outside ``[-L, L]^2``."""
    edge = tolerances().support if edge is None else edge
    d = math.sqrt(p.omega**2 - 4 * abs(p.kappa) ** 2)
    t = math.tanh(p.beta * d / 2)
    soft = (2 * t / d) * (p.omega / 2 - abs(p.kappa))
    peak = t / math.pi
    half = math.sqrt(max(math.log(peak / edge), 0.0) / soft)
    return step * math.ceil(half / step + 1)


class _Displacer:
    """Builds ``D(alpha) = R(theta) exp(r (a^+ - a)) R(theta)^+`` from one eigendecomposition."""

    def __init__(self, n_max: int):
        ops = fock_operators(n_max)
        self.n = np.arange(n_max)
        self.eig = eigh_hermitian(1j * (ops.adag - ops.a))

    def __call__(self, alpha: complex) -> np.ndarray:
        r = abs(alpha)
        theta = cmath.phase(alpha) if r else 0.0
        # exp(r (a^+ - a)) = exp(-i r K) with K = i (a^+ - a)
        core = self.eig.apply(lambda w: np.exp(-1j * r * w))
        phase = np.exp(1j * theta * self.n)
        return phase[:, None] * core * phase.conj()[None, :]


@functools.lru_cache(maxsize=8)
def _displacer(n_max: int) -> _Displacer:
    return _Displacer(n_max)


def displacement_operator(alpha: complex, n_max: int) -> np.ndarray:
    """Truncated ``exp(alpha a^+ - alpha* a)``."""
    return _displacer(n_max)(complex(alpha))


def _padded(rho: DensityOperator, n_max: int | None) -> np.ndarray:
    m = rho.matrix
    if n_max is None or n_max == m.shape[0]:
        return m
    if n_max < m.shape[0]:
        raise ValueError(f"cutoff {n_max} is below the density operator's cutoff {m.shape[0]}")
    out = np.zeros((n_max, n_max), dtype=complex)
    out[: m.shape[0], : m.shape[0]] = m
    return out


def _wigner_at(rho: np.ndarray, alpha: complex, tail_tol: float) -> float:
    d = displacement_operator(alpha, rho.shape[0])
    # diagonal of D^+ rho D, the state displaced by -alpha
    pops = np.sum(d.conj() * (rho @ d), axis=0).real
    tail = float(pops[-2:].sum())
    if tail > tail_tol:
        raise SupportError(
            f"displaced state at alpha={alpha:.4g} leaks {tail:.3e} into the top Fock levels"
        )
    parity = np.where(np.arange(rho.shape[0]) % 2 == 0, 1.0, -1.0)
    return float(np.dot(parity, pops) / math.pi)


def wigner_numeric(rho: DensityOperator, pt: PhasePoint, n_max: int | None = None,
                   tail_tol: float | None = None) -> float:
    """Wigner function at ``pt`` from the displaced-parity expectation value."""
    tail_tol = tolerances().displaced_support if tail_tol is None else tail_tol
    return _wigner_at(_padded(rho, n_max), pt.alpha, tail_tol)


def wigner_numeric_grid(rho: DensityOperator, q_axis, p_axis, n_max: int | None = None,
                        tail_tol: float | None = None) -> WignerGrid:
    tail_tol = tolerances().displaced_support if tail_tol is None else tail_tol
    m = _padded(rho, n_max)
    q_axis = np.asarray(q_axis, dtype=float)
    p_axis = np.asarray(p_axis, dtype=float)
    vals = np.empty((q_axis.size, p_axis.size))
    for i, q in enumerate(q_axis):
        for j, p in enumerate(p_axis):
            vals[i, j] = _wigner_at(m, complex(q, p) / math.sqrt(2), tail_tol)
    return WignerGrid(q_axis, p_axis, vals)


def quadrature_state_series(frame: QuadratureFrame, q: float, n_max: int) -> np.ndarray:
    """Fock coefficients of ``|q>_{f,g}`` from the raw two-generator series.

    ``C exp[(sqrt2 / A) q a^+ - (e^{2i phi} / 2) a^+^2] |0>`` expands to
    ``c_n = C sqrt(n!) sum_j u^{n-2j} v^j / ((n-2j)! j!)``.  Terms are formed
    in the log domain, but the alternating sum cancels catastrophically once
    ``n`` or ``|q|`` grows; use it only as a low-order cross-check.
    """
    u = math.sqrt(2) * q / frame.A
    v = -0.5 * cmath.exp(2j * frame.angle)
    n = np.arange(n_max)[:, None]
    j = np.arange(n_max // 2 + 1)[None, :]
    k = n - 2 * j
    valid = k >= 0
    k = np.where(valid, k, 0)
    if u == 0:
        log_u = np.where(k == 0, 0.0, -np.inf).astype(complex)
    else:
        log_u = k * cmath.log(u)
    logs = log_u + j * cmath.log(v) + 0.5 * gammaln(n + 1) - gammaln(k + 1) - gammaln(j + 1)
    terms = np.where(valid, np.exp(logs), 0.0)
    return frame.prefactor(q) * terms.sum(axis=1)


def quadrature_state(frame: QuadratureFrame, q: float, n_max: int) -> np.ndarray:
    """Fock coefficients of the ``f q + g p`` eigenstate ``|q>_{f,g}``.

    The generating series resums to ``c_n = e^{i n phi} h_n(q/|A|) / sqrt|A|``
    with ``h_n`` the oscillator eigenfunctions, evaluated by their stable
    three-term recurrence.  The state is delta-normalized in q.
    """
    return _quadrature_states(frame, np.array([float(q)]), n_max)[:, 0]


def _quadrature_states(frame: QuadratureFrame, qs: np.ndarray, n_max: int) -> np.ndarray:
    # column i holds the coefficients of |qs[i]>
    x = qs / math.sqrt(frame.norm2)
    h = np.empty((n_max, x.size))
    h[0] = math.pi**-0.25 * np.exp(-0.5 * x * x)
    if n_max > 1:
        h[1] = math.sqrt(2.0) * x * h[0]
    for n in range(2, n_max):
        h[n] = math.sqrt(2.0 / n) * x * h[n - 1] - math.sqrt((n - 1) / n) * h[n - 2]
    phase = np.exp(1j * frame.angle * np.arange(n_max))
    return phase[:, None] * h / frame.norm2**0.25


def tomogram_fock(rho: DensityOperator, frame: QuadratureFrame, q) -> np.ndarray | float:
    """``<q| rho |q>_{f,g}``, the quadrature distribution by Fock-space projection."""
    qs = np.atleast_1d(np.asarray(q, dtype=float))
    vecs = _quadrature_states(frame, qs, rho.cutoff)
    out = np.sum(vecs.conj() * (rho.matrix @ vecs), axis=0).real
    return float(out[0]) if np.ndim(q) == 0 else out


def _line_interval(lo: float, hi: float, start: float, slope: float) -> tuple[float, float]:
    if slope == 0:
        return (-math.inf, math.inf) if lo <= start <= hi else (0.0, 0.0)
    a, b = (lo - start) / slope, (hi - start) / slope
    return (min(a, b), max(a, b))


def radon_numeric(grid: WignerGrid, frame: QuadratureFrame, q, edge_tol: float | None = None):
    """``int delta(q - f q' - g p') W(q', p') dq' dp'`` by a Simpson line integral.

    The line ``f q' + g p' = q`` is parameterized by arc length and the grid is
    interpolated with a bicubic spline; outside the grid W is taken as zero,
    which requires the grid edges to be negligible.
    """
    edge_tol = tolerances().support if edge_tol is None else edge_tol
    if grid.edge_max() > edge_tol:
        raise SupportError(f"grid edge value {grid.edge_max():.3e} exceeds {edge_tol:.1e}")
    qs = np.atleast_1d(np.asarray(q, dtype=float))
    norm = math.sqrt(frame.norm2)
    nq, npp = frame.f / norm, frame.g / norm
    tq, tp = -npp, nq
    h = min(grid.dq, grid.dp)
    out = np.empty(qs.size)
    for i, qi in enumerate(qs):
        q0, p0 = qi / norm * nq, qi / norm * npp
        a1, b1 = _line_interval(grid.q[0], grid.q[-1], q0, tq)
        a2, b2 = _line_interval(grid.p[0], grid.p[-1], p0, tp)
        s_lo, s_hi = max(a1, a2), min(b1, b2)
        if not s_hi > s_lo:
            out[i] = 0.0
            continue
        count = max(int(math.ceil((s_hi - s_lo) / h)), 2)
        count += count % 2
        s = np.linspace(s_lo, s_hi, count + 1)
        vals = grid(q0 + s * tq, p0 + s * tp)
        out[i] = integrate.simpson(vals, x=s) / norm
    return float(out[0]) if np.ndim(q) == 0 else out


def _candidate_coefficients(p: ModelParams, frame: QuadratureFrame) -> tuple[float, float]:
    """Return ``(K, c)`` such that the candidate tomogram equals ``K exp(c q^2)``."""
    dp = thermal_params(p)
    lam = dp.lam
    big_g = frame.G(dp)
    a = frame.A
    mix = lam + abs(big_g) ** 2 / lam
    pref = 2 * math.sinh(p.beta * dp.D / 2) / (math.sqrt(math.pi * frame.norm2) * math.sqrt(mix))
    bracket = (1 - lam * (1 / big_g).real) / (frame.norm2 * mix) + (2 * dp.E / (a * a * big_g)).real
    # C^{-2} contributes exp(+q^2 / |A|^2) to the denominator
    return pref, 2 * bracket - 1 / frame.norm2


def tomogram_closed_candidate(p: ModelParams, frame: QuadratureFrame, q) -> np.ndarray | float:
    """A closed-form Gaussian tomogram built from the thermal parameters, evaluated term by term.

    It is kept for comparison only; :func:`audit_candidate_tomogram` reports how it
    differs from the Fock-projection and Radon routes.
    """
    pref, c = _candidate_coefficients(p, frame)
    qs = np.asarray(q, dtype=float)
    out = pref * np.exp(c * qs**2)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TomogramAudit:
    rows: list = field(default_factory=list)
    normalization: dict = field(default_factory=dict)

    FIELDS = ("f", "g", "q", "R_candidate", "R_fock", "R_radon",
              "abs_dev_fock", "rel_dev_fock", "abs_dev_radon", "rel_dev_radon")

    def complete(self, frames, qs) -> bool:
        want = {(fr.f, fr.g, float(q)) for fr in frames for q in qs}
        have = {(r["f"], r["g"], r["q"]) for r in self.rows}
        fields_ok = all(set(self.FIELDS) <= set(r) for r in self.rows)
        norms_ok = all(fr.label() in self.normalization for fr in frames)
        return want <= have and fields_ok and norms_ok

    def as_dict(self) -> dict:
        return {"rows": list(self.rows), "normalization": dict(self.normalization)}


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b) if b != 0 else (0.0 if a == b else math.inf)


def audit_candidate_tomogram(p: ModelParams, frames, qs, rho: DensityOperator,
                             grid: WignerGrid) -> TomogramAudit:
    """Compare the candidate closed-form tomogram with both numerical routes."""
    rows = []
    norms = {}
    qs = [float(x) for x in qs]
    for fr in frames:
        candidate = np.atleast_1d(tomogram_closed_candidate(p, fr, np.array(qs)))
        fock = np.atleast_1d(tomogram_fock(rho, fr, np.array(qs)))
        radon = np.atleast_1d(radon_numeric(grid, fr, np.array(qs)))
        for q, r_p, r_f, r_r in zip(qs, candidate, fock, radon):
            rows.append({
                "f": fr.f, "g": fr.g, "q": q,
                "R_candidate": float(r_p), "R_fock": float(r_f), "R_radon": float(r_r),
                "abs_dev_fock": float(abs(r_p - r_f)), "rel_dev_fock": _rel(r_p, r_f),
                "abs_dev_radon": float(abs(r_p - r_r)), "rel_dev_radon": _rel(r_p, r_r),
            })
        pref, c = _candidate_coefficients(p, fr)
        if c < 0:
            total, _ = integrate.quad(lambda x: pref * math.exp(c * x * x), -math.inf, math.inf)
        else:
            total = math.inf
        norms[fr.label()] = {"integral": float(total), "deviation": float(abs(total - 1.0))}
    return TomogramAudit(rows, norms)
