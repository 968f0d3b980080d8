import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thermofock.fock import (
    CutoffNotConverged,
    DensityOperator,
    DoubledState,
    ModelParams,
    TruncationPolicy,
    UnstableHamiltonianError,
    build_hamiltonian,
    choose_cutoff,
    fock_operators,
    gibbs_density,
    pair_exponential,
    reduced_density,
    von_neumann_entropy,
)
from thermofock.linalg import expm_banded_series
from thermofock.su11 import partition_function
from thermofock.tolerances import tolerances, use_tolerances

TEST_POINT = ModelParams(1.0, 0.25, 1.0)


class TestModelParams:
    def test_stability_gate(self):
        with pytest.raises(UnstableHamiltonianError):
            ModelParams(1.0, 0.5, 1.0)
        with pytest.raises(UnstableHamiltonianError):
            ModelParams(1.0, 0.51j)
        ModelParams(1.0, 0.4999, 1.0)

    def test_gate_follows_tolerance_profile(self):
        with use_tolerances(tolerances().replace(stability=1e-3)):
            with pytest.raises(UnstableHamiltonianError):
                ModelParams(1.0, 0.4999)

    @pytest.mark.parametrize("omega, beta", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (1.0, math.inf)])
    def test_rejects_bad_scalars(self, omega, beta):
        with pytest.raises(ValueError):
            ModelParams(omega, 0.0, beta)

    def test_polar_form(self):
        p = ModelParams.from_polar(1.0, 0.2, math.pi / 3, 2.0)
        assert p.kappa_abs == pytest.approx(0.2)
        assert p.phi == pytest.approx(math.pi / 3)
        assert p.temperature == 0.5
        assert ModelParams(1.0).phi == 0.0


def test_truncated_commutator_corner():
    n = 7
    ops = fock_operators(n)
    comm = ops.a @ ops.adag - ops.adag @ ops.a
    want = np.eye(n)
    want[-1, -1] = 1 - n
    assert np.allclose(comm, want)
    assert np.allclose(ops.adag @ ops.a, ops.n)


def test_fock_operators_reject_tiny_cutoff():
    with pytest.raises(ValueError):
        fock_operators(1)


@given(st.complex_numbers(max_magnitude=1.5), st.integers(2, 30), st.booleans())
def test_pair_exponential_matches_series(c, n, lowering):
    ops = fock_operators(n)
    gen = c * (ops.a @ ops.a if lowering else ops.adag @ ops.adag)
    want = expm_banded_series(gen)
    got = pair_exponential(c, n, lowering=lowering)
    assert np.max(np.abs(got - want)) <= 1e-12 * max(1.0, np.max(np.abs(want)))


def test_hamiltonian_is_hermitian():
    h = build_hamiltonian(ModelParams.from_polar(1.0, 0.3, 1.1, 1.0), 20)
    assert np.allclose(h, h.conj().T)


def test_free_gibbs_state_is_geometric():
    p = ModelParams(1.3, 0.0, 0.8)
    rho = gibbs_density(p, 80)
    x = math.exp(-p.beta * p.omega)
    want = (1 - x) * x ** np.arange(80)
    assert np.allclose(np.diag(rho.matrix).real, want, atol=1e-15)
    assert rho.z_numeric == pytest.approx(1 / (1 - x), rel=1e-12)


@given(st.floats(0.0, 0.45), st.floats(0.0, 6.3), st.floats(0.5, 4.0))
def test_gibbs_trace_matches_closed_partition_function(k, arg, beta):
    p = ModelParams.from_polar(1.0, k, arg, beta)
    rho = gibbs_density(p, choose_cutoff(p))
    assert rho.z_numeric == pytest.approx(partition_function(p), rel=1e-8)


class TestTruncationPolicy:
    def test_sequence(self):
        seq = TruncationPolicy(initial=16, max_cutoff=40).sequence()
        assert seq[0] == 16 and seq[-1] == 40
        assert all(b > a for a, b in zip(seq, seq[1:]))

    @pytest.mark.parametrize("kw", [{"initial": 4}, {"growth": 1}, {"initial": 32, "max_cutoff": 16},
                                    {"tol": 0.0}])
    def test_rejects_bad_fields(self, kw):
        with pytest.raises(ValueError):
            TruncationPolicy(**kw)

    def test_choose_cutoff_converges(self):
        n = choose_cutoff(TEST_POINT)
        rho = gibbs_density(TEST_POINT, n)
        assert rho.tail_population() <= 1e-10

    def test_choose_cutoff_reports_best_residual(self):
        with pytest.raises(CutoffNotConverged) as info:
            choose_cutoff(ModelParams(1.0, 0.4, 0.3), TruncationPolicy(initial=8, max_cutoff=20))
        err = info.value
        assert err.residual > err.tol
        assert 8 <= err.best_cutoff <= 20


class TestDensityOperator:
    def test_rejects_bad_trace(self):
        with pytest.raises(ValueError):
            DensityOperator(np.diag([0.5, 0.6]))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(ValueError):
            DensityOperator(np.array([[1.2, 0], [0, -0.2]]))

    def test_entropy(self):
        assert von_neumann_entropy(DensityOperator(np.diag([1.0, 0.0]))) == 0.0
        assert von_neumann_entropy(DensityOperator(np.eye(4) / 4)) == pytest.approx(math.log(4))


class TestDoubledState:
    def test_product_state_reduces_to_pure(self):
        psi = np.array([0.6, 0.8j, 0.0])
        phi = np.array([1.0, 0.0, 0.0])
        s = DoubledState(np.outer(psi, phi))
        rho = reduced_density(s)
        assert np.allclose(rho.matrix, np.outer(psi, psi.conj()))
        assert s.tail_mass == pytest.approx(0.0)

    def test_vector_uses_system_major_order(self):
        c = np.arange(9.0).reshape(3, 3)
        basis = np.eye(3)
        want = sum(c[m, n] * np.kron(basis[m], basis[n]) for m in range(3) for n in range(3))
        assert np.array_equal(DoubledState(c).vector(), want)

    def test_normalized(self):
        s = DoubledState(np.diag([3.0, 4.0])).normalized()
        assert s.norm_sq() == pytest.approx(1.0)
        assert s.norm_factor == pytest.approx(0.2)

    def test_tail_mass(self):
        c = np.zeros((3, 3))
        c[0, 0], c[2, 1] = 0.6, 0.8
        assert DoubledState(c).tail_mass == pytest.approx(0.64)
        assert not DoubledState(c).amplitudes.flags.writeable
