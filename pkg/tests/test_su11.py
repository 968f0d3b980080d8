import cmath
import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import assume, given
from hypothesis import strategies as st

from thermofock.fock import ModelParams, build_hamiltonian, choose_cutoff, gibbs_density
from thermofock.linalg import expm_hermitian
from thermofock.su11 import (
    DivergentIntegralError,
    GaussianIntegralParams,
    PoleError,
    QuadraticExponent,
    disentangle,
    exponent_matrix,
    factored_gibbs,
    gaussian_integral,
    gaussian_integral_quadrature,
    normal_ordered_number_exp,
    partition_function,
    partition_function_coherent_trace,
    thermal_params,
)

small = st.complex_numbers(max_magnitude=0.3, allow_nan=False, allow_infinity=False)
params = st.builds(
    ModelParams.from_polar,
    st.just(1.0), st.floats(0.0, 0.45), st.floats(0.0, 6.3), st.floats(0.2, 5.0),
)


def padded_expm(q, n):
    # leading n x n block of the dense exponential, grown until it settles
    size, prev = n, sla.expm(exponent_matrix(q, n))
    while size < 384:
        size *= 2
        cur = sla.expm(exponent_matrix(q, size))[:n, :n]
        if np.max(np.abs(cur - prev[:n, :n])) <= 1e-13 * np.max(np.abs(cur)):
            return cur
        prev = cur
    return prev[:n, :n]


class TestThermalParams:
    def test_reference_point(self):
        dp = thermal_params(ModelParams(1.0, 0.25, 1.0))
        assert dp.D == pytest.approx(0.8660254037844386, rel=1e-14)
        assert dp.lam == pytest.approx(0.395444, abs=5e-7)
        assert dp.E.real == pytest.approx(-0.111690, abs=5e-7)
        assert dp.E.imag == 0
        assert dp.Z == pytest.approx(1.845562, abs=5e-7)

    def test_free_limit(self):
        p = ModelParams(1.0, 0.0, 2.0)
        dp = thermal_params(p)
        assert dp.lam == pytest.approx(math.exp(-2.0), rel=1e-14)
        assert dp.E == 0
        assert math.tanh(dp.theta) == pytest.approx(math.exp(-1.0), rel=1e-14)

    @given(params)
    def test_identity_between_parameters(self, p):
        assert thermal_params(p).identity_residual(p.beta) <= 1e-10

    def test_no_overflow_at_large_beta(self):
        dp = thermal_params(ModelParams(1.0, 0.3, 800.0))
        assert math.isfinite(dp.lam) and dp.lam >= 0
        assert math.isfinite(dp.Z)


@given(small, small, small)
def test_disentangle_matches_dense_exponential(f, g, k):
    q = QuadraticExponent(f, g, k)
    assume(abs(q.script_d) < 1)
    try:
        got = disentangle(q).matrix(12)
    except PoleError:
        assume(False)
    want = padded_expm(q, 12)
    assert np.max(np.abs(got - want)) <= 1e-10 * np.max(np.abs(want))


@given(small, small, small)
def test_branch_of_square_root_is_irrelevant(f, g, k):
    q = QuadraticExponent(f, g, k)
    a, b = disentangle(q), disentangle(q, flip_branch=True)
    for x, y in [(a.prefactor, b.prefactor), (a.g_out, b.g_out), (a.ell, b.ell), (a.k_out, b.k_out)]:
        assert cmath.isclose(x, y, rel_tol=1e-12, abs_tol=1e-14)


def test_small_discriminant_series_is_continuous():
    base = disentangle(QuadraticExponent(0.2, 0.1, 0.1))
    near = disentangle(QuadraticExponent(0.2 + 1e-9, 0.1, 0.1))
    assert abs(base.ell - near.ell) < 1e-8
    zero = disentangle(QuadraticExponent(0.2, 0.01, 1.0))  # f^2 = 4kg
    assert zero.matrix(8).shape == (8, 8)


def test_pole_is_reported():
    f = 1 / math.tan(1.0)  # D coth D = cot 1 at D = i
    kg = (f * f + 1) / 4
    with pytest.raises(PoleError):
        disentangle(QuadraticExponent(f, math.sqrt(kg), math.sqrt(kg)))


@pytest.mark.parametrize("p", [ModelParams(1.0, 0.25, 1.0), ModelParams.from_polar(1.0, 0.4, 1.0, 0.5)])
def test_gibbs_factorizations(p):
    n = choose_cutoff(p)
    dense = expm_hermitian(build_hamiltonian(p, n), -p.beta)
    k = n // 2
    for fact in (disentangle(QuadraticExponent.gibbs(p)).matrix(n), factored_gibbs(p, n)):
        assert np.max(np.abs(fact - dense)[:k, :k]) <= 1e-10


@given(st.floats(0.01, 5.0), st.integers(2, 20))
def test_normal_ordered_number_exponential(x, n):
    c = math.exp(-x) - 1
    got = normal_ordered_number_exp(c, n)
    # alternating binomial sums lose about (1 + |c|)^n ulps
    bound = 4 * n * np.finfo(float).eps * (1 + abs(c)) ** n
    assert np.max(np.abs(got - np.diag(np.exp(-x * np.arange(n))))) <= bound


class TestGaussianIntegral:
    def test_isotropic(self):
        for zeta in (-1.0, -0.3 + 2j):
            assert gaussian_integral(GaussianIntegralParams(zeta)) == pytest.approx(-1 / zeta)

    def test_linear_terms(self):
        # int e^{-|z|^2 + xi z + eta z*} d^2z / pi = e^{xi eta}
        gp = GaussianIntegralParams(-1.0, 0.3 + 0.1j, -0.2j)
        assert gaussian_integral(gp) == pytest.approx(cmath.exp(gp.xi * gp.eta))

    @pytest.mark.parametrize("gp", [
        GaussianIntegralParams(-1.0 + 0.5j, 0.2, -0.1j, 0.3, 0.1j),
        GaussianIntegralParams(-0.8, 0.1 + 0.1j, 0.3, -0.2 + 0.1j, 0.25),
        GaussianIntegralParams(-2.0 - 1j, 0.5, 0.5, 0.6j, -0.4),
    ])
    def test_against_quadrature(self, gp):
        assert gp.convergent
        assert abs(gaussian_integral(gp) - gaussian_integral_quadrature(gp)) <= 1e-10

    def test_divergent_parameters_rejected(self):
        gp = GaussianIntegralParams(0.5)
        assert not gp.convergent
        with pytest.raises(DivergentIntegralError):
            gaussian_integral(gp)
        with pytest.raises(DivergentIntegralError):
            gaussian_integral_quadrature(gp)
        assert not GaussianIntegralParams(-1.0, f=0.6, g=0.6).convergent

    @given(st.floats(-3, -0.3), small, small)
    def test_convergent_real_forms_are_positive_definite(self, zeta, f, g):
        gp = GaussianIntegralParams(zeta, 0, 0, f.real, g.real)
        if gp.convergent:
            assert np.linalg.eigvalsh(gp.quadratic_form().real)[0] > 0


@given(params)
def test_partition_function_routes(p):
    z = partition_function(p)
    assert partition_function_coherent_trace(p) == pytest.approx(z, rel=1e-10)
    assert thermal_params(p).Z == pytest.approx(z, rel=1e-14)


def test_partition_function_numeric():
    p = ModelParams.from_polar(1.0, 0.3, 2.0, 0.7)
    assert gibbs_density(p, choose_cutoff(p)).z_numeric == pytest.approx(partition_function(p), rel=1e-9)
