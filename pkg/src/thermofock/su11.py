"""SU(1,1) operator algebra for quadratic single-mode exponents.

Name mapping: the coefficients of ``exp[f a^+a + g a^+^2 + k a^2]`` live on
:class:`QuadraticExponent` as ``f``, ``g``, ``k``; the Gaussian-integral
parameters live on :class:`GaussianIntegralParams` as ``zeta, xi, eta, f, g``.
The two sets are unrelated.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .fock import ModelParams, fock_operators, pair_exponential

__all__ = [
    "PoleError",
    "DivergentIntegralError",
    "QuadraticExponent",
    "FactoredForm",
    "DerivedParams",
    "GaussianIntegralParams",
    "disentangle",
    "exponent_matrix",
    "thermal_params",
    "factored_gibbs",
    "normal_ordered_number_exp",
    "gaussian_integral",
    "gaussian_integral_quadrature",
    "partition_function",
    "partition_function_coherent_trace",
]

_SERIES_RADIUS = 1e-4


class PoleError(ValueError):
    """A denominator of the disentangled form vanishes."""


class DivergentIntegralError(ValueError):
    """Gaussian-integral parameters fall outside the convergence region."""


def _xcothx(x: complex) -> complex:
    if abs(x) < _SERIES_RADIUS:
        x2 = x * x
        return 1 + x2 / 3 - x2 * x2 / 45
    return x / cmath.tanh(x)


def _tanhx_over_x(x: complex) -> complex:
    if abs(x) < _SERIES_RADIUS:
        x2 = x * x
        return 1 - x2 / 3 + 2 * x2 * x2 / 15
    return cmath.tanh(x) / x


@dataclass(frozen=True)
class QuadraticExponent:
    """Coefficients of ``f a^+a + g a^+^2 + k a^2``; ``script_d`` is the principal ``sqrt(f^2 - 4kg)``."""

    f: complex
    g: complex = 0.0
    k: complex = 0.0
    script_d: complex = field(init=False)

    def __post_init__(self):
        for name in ("f", "g", "k"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        object.__setattr__(self, "script_d", cmath.sqrt(self.f * self.f - 4 * self.k * self.g))

    @classmethod
    def gibbs(cls, p: ModelParams) -> "QuadraticExponent":
        """The exponent of ``exp(-beta H)``."""
        b = p.beta
        return cls(-b * p.omega, -b * np.conj(p.kappa), -b * p.kappa)


@dataclass(frozen=True)
class FactoredForm:
    """``prefactor * exp(g_out a^+^2) exp((a^+a + 1/2) ell) exp(k_out a^2)``."""

    prefactor: complex
    g_out: complex
    ell: complex
    k_out: complex

    def matrix(self, n_max: int) -> np.ndarray:
        n = np.arange(n_max)
        raise_part = pair_exponential(self.g_out, n_max)
        lower_part = pair_exponential(self.k_out, n_max, lowering=True)
        middle = np.exp(self.ell * (n + 0.5))
        return self.prefactor * (raise_part * middle) @ lower_part


def disentangle(q: QuadraticExponent, *, flip_branch: bool = False) -> FactoredForm:
    """Normal-ordered factorization of ``exp[f a^+a + g a^+^2 + k a^2]``.

    Every occurrence of ``script_d`` is through an even function, so the
    result does not depend on its sign; ``flip_branch`` exists to test that.
    The half-integer power ``exp(ell/2)`` uses the principal logarithm.
    """
    d = -q.script_d if flip_branch else q.script_d
    f = q.f
    den = _xcothx(d) - f
    scale = 1.0 + abs(f)
    if abs(den) <= 1e-12 * scale or not cmath.isfinite(den):
        raise PoleError(f"D coth D - f = {den!r} vanishes")
    # D - f tanh D written as D * (1 - f tanh(D)/D) to stay finite at D = 0
    reduced = 1 - f * _tanhx_over_x(d)
    if abs(reduced) <= 1e-12 * scale or not cmath.isfinite(reduced):
        raise PoleError(f"D - f tanh D = {d * reduced!r} vanishes")
    # D sech D / (D - f tanh D) = sech D / (1 - f tanh(D)/D)
    ell = cmath.log(1 / (cmath.cosh(d) * reduced))
    return FactoredForm(cmath.exp(-f / 2), q.g / den, ell, q.k / den)


def exponent_matrix(q: QuadraticExponent, n_max: int) -> np.ndarray:
    """Truncated matrix of ``f a^+a + g a^+^2 + k a^2``."""
    ops = fock_operators(n_max)
    return q.f * ops.n + q.g * (ops.adag @ ops.adag) + q.k * (ops.a @ ops.a)


@dataclass(frozen=True)
class DerivedParams:
    D: float
    lam: float
    E: complex
    Z: float
    theta: float | None = None

    def identity_residual(self, beta: float) -> float:
        """Relative defect of ``(1 - lam)^2 - 4|E|^2 = 4 lam sinh^2(beta D / 2)``."""
        lhs = (1 - self.lam) ** 2 - 4 * abs(self.E) ** 2
        rhs = 4 * self.lam * math.sinh(beta * self.D / 2) ** 2
        return abs(lhs - rhs) / abs(rhs)


def thermal_params(p: ModelParams) -> DerivedParams:
    b = p.beta
    d = math.sqrt(p.omega**2 - 4 * abs(p.kappa) ** 2)
    bd = b * d
    # D / (omega sinh bD + D cosh bD), rewritten with exp(-bD) to avoid overflow
    lam = 2 * d * math.exp(-bd) / (p.omega * (1 - math.exp(-2 * bd)) + d * (1 + math.exp(-2 * bd)))
    # sinh(bD) * lam / D = (1 - exp(-2bD)) / (omega (1 - e^{-2bD}) + D (1 + e^{-2bD}))
    ratio = (1 - math.exp(-2 * bd)) / (p.omega * (1 - math.exp(-2 * bd)) + d * (1 + math.exp(-2 * bd)))
    e = -ratio * p.kappa
    theta = math.atanh(math.exp(-b * p.omega / 2)) if p.kappa == 0 else None
    return DerivedParams(d, lam, complex(e), partition_function(p), theta)


def factored_gibbs(p: ModelParams, n_max: int) -> np.ndarray:
    """``sqrt(lam e^{beta omega}) exp(E* a^+^2) lam^{a^+a} exp(E a^2)``, unnormalized."""
    dp = thermal_params(p)
    n = np.arange(n_max)
    raise_part = pair_exponential(np.conj(dp.E), n_max)
    lower_part = pair_exponential(dp.E, n_max, lowering=True)
    pref = math.sqrt(dp.lam) * math.exp(p.beta * p.omega / 2)
    return pref * (raise_part * dp.lam**n) @ lower_part


def normal_ordered_number_exp(c: complex, n_max: int) -> np.ndarray:
    """Matrix of ``:exp(c a^+a):`` summed as ``sum_k c^k a^+^k a^k / k!``.

    With ``c = exp(-x) - 1`` this reproduces ``exp(-x a^+a)`` exactly.
    """
    ops = fock_operators(n_max)
    out = np.eye(n_max, dtype=complex)
    up = np.eye(n_max, dtype=complex)
    down = np.eye(n_max, dtype=complex)
    coeff = 1.0 + 0j
    for k in range(1, n_max):
        up = up @ ops.adag
        down = down @ ops.a
        coeff = coeff * c / k
        out = out + coeff * (up @ down)
    return out


@dataclass(frozen=True)
class GaussianIntegralParams:
    """Parameters of ``int d^2z/pi exp(zeta|z|^2 + xi z + eta z* + f z^2 + g z*^2)``."""

    zeta: complex
    xi: complex = 0.0
    eta: complex = 0.0
    f: complex = 0.0
    g: complex = 0.0
    convergent: bool = field(init=False)

    def __post_init__(self):
        for name in ("zeta", "xi", "eta", "f", "g"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        object.__setattr__(self, "convergent", self._predicate())

    @property
    def discriminant(self) -> complex:
        return self.zeta**2 - 4 * self.f * self.g

    def _predicate(self) -> bool:
        # every sign combination of zeta +- f +- g must satisfy both conditions
        disc = self.discriminant
        if disc == 0:
            return False
        for s1 in (1, -1):
            for s2 in (1, -1):
                lin = self.zeta + s1 * self.f + s2 * self.g
                if lin == 0 or not lin.real < 0:
                    return False
                if not (disc / lin).real < 0:
                    return False
        return True

    def quadratic_form(self) -> np.ndarray:
        """Complex symmetric ``M`` with exponent ``-(x, y) M (x, y)^T + ...`` for ``z = x + iy``."""
        z, f, g = self.zeta, self.f, self.g
        off = 1j * (f - g)
        return -np.array([[z + f + g, off], [off, z - f - g]])


def _sqrt_discriminant(gp: GaussianIntegralParams) -> complex:
    # det M equals the discriminant; the branch that is continuous from
    # zeta < 0, f = g = 0 is the product of principal roots of M's eigenvalues
    w = np.linalg.eigvals(gp.quadratic_form())
    root = complex(np.prod(np.sqrt(w.astype(complex))))
    principal = cmath.sqrt(gp.discriminant)
    return principal if abs(root - principal) <= abs(root + principal) else -principal


def gaussian_integral(gp: GaussianIntegralParams) -> complex:
    if not gp.convergent:
        raise DivergentIntegralError(f"parameters {gp} violate the convergence condition")
    disc = gp.discriminant
    expo = (-gp.zeta * gp.xi * gp.eta + gp.xi**2 * gp.g + gp.eta**2 * gp.f) / disc
    return cmath.exp(expo) / _sqrt_discriminant(gp)


def gaussian_integral_quadrature(
    gp: GaussianIntegralParams, radius: float = 9.0, step: float = 0.05, tol: float = 1e-10
) -> complex:
    """Trapezoid rule for the same integral over the square ``|x|, |y| <= radius``.

    Independent oracle for :func:`gaussian_integral`. The integrand is entire
    and decays like a Gaussian, so the rule converges spectrally; the result is
    accepted only if halving the step changes it by at most ``tol`` (relative).
    Requires the real part of the quadratic form to be negative definite.
    """
    m = gp.quadratic_form()
    if np.linalg.eigvalsh(m.real)[0] <= 0:
        raise DivergentIntegralError("real part of the quadratic form is not negative definite")

    def rule(h: float) -> complex:
        n = int(math.ceil(radius / h))
        x = np.arange(-n, n + 1) * h
        z = x[:, None] + 1j * x[None, :]
        zc = z.conj()
        expo = gp.zeta * (z * zc).real + gp.xi * z + gp.eta * zc + gp.f * z * z + gp.g * zc * zc
        return complex(np.exp(expo).sum() * h * h / math.pi)

    coarse, fine = rule(step), rule(step / 2)
    if abs(fine - coarse) > tol * max(abs(fine), 1e-300):
        raise DivergentIntegralError(
            f"quadrature not converged: step refinement changed the value by {abs(fine - coarse):.3e}"
        )
    return fine


def partition_function(p: ModelParams) -> float:
    """``tr exp(-beta H) = exp(beta omega / 2) / (2 sinh(beta D / 2))``."""
    d = math.sqrt(p.omega**2 - 4 * abs(p.kappa) ** 2)
    x = p.beta * d / 2
    # e^{b w/2} / (2 sinh x) = e^{b w/2 - x} / (1 - e^{-2x})
    return math.exp(p.beta * p.omega / 2 - x) / -math.expm1(-2 * x)


def partition_function_coherent_trace(p: ModelParams) -> complex:
    """Partition function as a coherent-state trace of the factored Gibbs operator.

    ``tr[...] = sqrt(lam e^{beta omega}) * int d^2z/pi exp((lam - 1)|z|^2 + E z^2 + E* z*^2)``.
    """
    dp = thermal_params(p)
    gp = GaussianIntegralParams(zeta=dp.lam - 1, f=dp.E, g=np.conj(dp.E))
    return math.sqrt(dp.lam) * math.exp(p.beta * p.omega / 2) * gaussian_integral(gp)
