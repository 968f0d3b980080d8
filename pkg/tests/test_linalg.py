import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as st

from thermofock.linalg import (
    NotHermitianError,
    NotNilpotentError,
    check_hermitian,
    eigh_hermitian,
    expm_banded_series,
    expm_hermitian,
    hermitian_defect,
    matrix_distance,
    partial_trace,
    tensor,
)

from conftest import random_hermitian

seeds = st.integers(0, 2**32 - 1)


def test_check_hermitian_rejects_asymmetric():
    m = np.array([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(NotHermitianError) as info:
        check_hermitian(m)
    assert info.value.defect == pytest.approx(hermitian_defect(m))


def test_check_hermitian_accepts_roundoff():
    m = np.array([[1.0, 1e-14], [0.0, 1.0]])
    check_hermitian(m)


@given(seeds, st.integers(1, 12))
def test_eigh_reconstructs(seed, n):
    m = random_hermitian(np.random.default_rng(seed), n)
    eig = eigh_hermitian(m)
    assert np.all(np.diff(eig.eigenvalues) >= 0)
    assert np.max(np.abs(eig.reconstruct() - m)) <= 1e-10 * (1 + np.max(np.abs(m)))
    assert not eig.eigenvectors.flags.writeable


@given(seeds, st.integers(1, 10), st.floats(-2, 2))
def test_expm_hermitian_matches_pade(seed, n, s):
    m = random_hermitian(np.random.default_rng(seed), n, 0.5)
    assert np.allclose(expm_hermitian(m, s), sla.expm(s * m), rtol=1e-10, atol=1e-12)


def test_expm_hermitian_complex_parameter_is_unitary(rng):
    m = random_hermitian(rng, 6)
    u = expm_hermitian(m, -1j * 0.7)
    assert np.allclose(u @ u.conj().T, np.eye(6), atol=1e-12)


@given(seeds, st.integers(2, 14))
def test_banded_series_matches_dense_for_nilpotent(seed, n):
    rng = np.random.default_rng(seed)
    m = np.triu(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)), 1) * 0.5
    assert np.allclose(expm_banded_series(m), sla.expm(m), rtol=1e-10, atol=1e-12)


def test_banded_series_rejects_non_nilpotent():
    with pytest.raises(NotNilpotentError):
        expm_banded_series(np.eye(3))


@given(seeds, st.integers(1, 5), st.integers(1, 5))
def test_partial_trace_of_product(seed, da, db):
    rng = np.random.default_rng(seed)
    a = random_hermitian(rng, da)
    b = random_hermitian(rng, db)
    assert np.allclose(partial_trace(tensor(a, b), (da, db)), np.trace(b) * a)


def test_partial_trace_matches_explicit_sum(rng):
    da, db = 3, 4
    m = rng.normal(size=(da * db, da * db)) + 1j * rng.normal(size=(da * db, da * db))
    explicit = np.array([[sum(m[i * db + k, j * db + k] for k in range(db)) for j in range(da)]
                         for i in range(da)])
    assert np.allclose(partial_trace(m, (da, db)), explicit)


def test_partial_trace_shape_mismatch():
    with pytest.raises(ValueError):
        partial_trace(np.eye(6), (4, 2))


@given(seeds, st.integers(1, 8))
def test_trace_distance_is_nuclear_norm(seed, n):
    rng = np.random.default_rng(seed)
    a, b = random_hermitian(rng, n), random_hermitian(rng, n)
    assert matrix_distance(a, b, norm="trace") == pytest.approx(np.linalg.norm(a - b, "nuc"), rel=1e-10)
    assert matrix_distance(a, b, norm="frobenius") == pytest.approx(np.linalg.norm(a - b), rel=1e-12)
    assert matrix_distance(a, b, norm="maxabs") == pytest.approx(np.max(np.abs(a - b)))
