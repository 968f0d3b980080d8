"""Dense complex-matrix primitives.

Conventions used throughout the package:

* Tensor products follow ``numpy.kron`` ordering, i.e. the composite index of
  ``|i_A> (x) |i_B>`` is ``i_A * dB + i_B``.  In the doubled Fock space the
  system mode is the outer (slow) factor and the tilde mode the inner one.
* Hermitian exponentials are always taken through an eigendecomposition.
  The only non-Hermitian exponentials in the package are nilpotent ladder
  factors, which :func:`expm_banded_series` sums exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tolerances import tolerances

__all__ = [
    "NotHermitianError",
    "NotNilpotentError",
    "HermitianEig",
    "hermitian_defect",
    "check_hermitian",
    "eigh_hermitian",
    "expm_hermitian",
    "expm_banded_series",
    "tensor",
    "partial_trace",
    "matrix_distance",
]


class NotHermitianError(ValueError):
    """Raised when a matrix expected to be Hermitian is not."""

    def __init__(self, defect: float, bound: float):
        self.defect = defect
        self.bound = bound
        super().__init__(
            f"matrix is not Hermitian: max |M - M^H| = {defect:.3e} exceeds {bound:.3e}"
        )


class NotNilpotentError(ValueError):
    """Raised when a power series expected to terminate does not."""


def _as_square(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    return m


def hermitian_defect(m: np.ndarray) -> float:
    """Largest entrywise deviation ``max |M[i,j] - conj(M[j,i])|``."""
    m = _as_square(m)
    return float(np.max(np.abs(m - m.conj().T)))


def check_hermitian(m: np.ndarray, rtol: float | None = None) -> np.ndarray:
    """Return ``m`` unchanged if Hermitian within ``rtol * (1 + max|m|)``."""
    m = _as_square(m)
    rtol = tolerances().hermitian if rtol is None else rtol
    bound = rtol * (1.0 + float(np.max(np.abs(m))))
    defect = hermitian_defect(m)
    if defect > bound:
        raise NotHermitianError(defect, bound)
    return m


@dataclass(frozen=True)
class HermitianEig:
    """Ascending eigenvalues and the unitary matrix of eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def apply(self, fn) -> np.ndarray:
        """Matrix function ``V diag(fn(w)) V^H``."""
        v = self.eigenvectors
        return (v * fn(self.eigenvalues)) @ v.conj().T


def eigh_hermitian(m: np.ndarray) -> HermitianEig:
    m = check_hermitian(m)
    # symmetrize so that round-off asymmetry never leaks into eigh
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    w.setflags(write=False)
    v.setflags(write=False)
    return HermitianEig(w, v)


def expm_hermitian(m: np.ndarray, s: complex = 1.0, eig: HermitianEig | None = None) -> np.ndarray:
    """Compute ``exp(s * M)`` for Hermitian ``M`` via its eigendecomposition.

    ``s`` may be complex, which gives unitaries such as ``exp(-i t M)``; the
    result is Hermitian whenever ``s`` is real.
    """
    if eig is None:
        eig = eigh_hermitian(m)
    return eig.apply(lambda w: np.exp(s * w))


def expm_banded_series(m: np.ndarray) -> np.ndarray:
    """Exact exponential of a nilpotent matrix by its terminating power series.

    Ladder-operator powers such as ``E * a**2`` on a truncated space are
    strictly triangular, so ``M**k`` vanishes identically for ``k >= dim``.
    Any input whose powers have not become exactly zero after ``dim`` steps
    is rejected.
    """
    m = _as_square(m)
    dim = m.shape[0]
    dtype = np.result_type(m.dtype, np.float64)
    out = np.eye(dim, dtype=dtype)
    term = np.eye(dim, dtype=dtype)
    for k in range(1, dim + 1):
        term = term @ m / k
        if not term.any():
            return out
        out = out + term
    raise NotNilpotentError(
        f"power series did not terminate within {dim} terms; input is not nilpotent"
    )


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with composite index ``i_A * dB + i_B``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("tensor factors must be matrices")
    return np.kron(a, b)


def partial_trace(m: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    """Trace out the second (inner) factor of an operator on ``C^dA (x) C^dB``.

    Returns the ``dA x dA`` matrix with entries ``sum_k M[(i,k),(j,k)]``.
    """
    m = np.asarray(m)
    d_a, d_b = (int(d) for d in dims)
    if d_a < 1 or d_b < 1:
        raise ValueError(f"dimensions must be positive, got {dims}")
    if m.shape != (d_a * d_b, d_a * d_b):
        raise ValueError(
            f"operator of shape {m.shape} is inconsistent with dims {dims}"
        )
    return np.trace(m.reshape(d_a, d_b, d_a, d_b), axis1=1, axis2=3)


def matrix_distance(a: np.ndarray, b: np.ndarray, norm: str = "trace") -> float:
    """Distance ``||A - B||`` in the trace, Frobenius or max-abs norm."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    if norm == "trace":
        return float(np.sum(np.linalg.svd(diff, compute_uv=False)))
    if norm == "frobenius":
        return float(np.linalg.norm(diff))
    if norm == "maxabs":
        return float(np.max(np.abs(diff))) if diff.size else 0.0
    raise ValueError(f"unknown norm {norm!r}; expected trace, frobenius or maxabs")
