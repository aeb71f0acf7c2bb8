import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phaseopt.cost_model import (CostSpec, FourierCoefficients, NumericalError,
                                 ToeplitzCostMatrix, cost_matrix, expected_cost,
                                 fourier_coefficients, holevo_check, min_eig_inverse_iteration,
                                 mixture_expected_cost, optimize_state, quadratic_form,
                                 toeplitz_from_coeffs)
from phaseopt.states import ProbeState, basis_state, random_state, sine_state, uniform_state

from oracles import (fidelity_expected_cost, window_coefficient_gauss, window_coefficient_quad,
                     window_expected_cost)


def test_fidelity_coefficients():
    c = fourier_coefficients(CostSpec.fidelity(), 3)
    np.testing.assert_allclose(c.coeffs, [0.5, -0.25, 0, 0], atol=0)
    assert c.source == "analytic"
    assert c[-1] == -0.25


@pytest.mark.parametrize("delta", [np.pi, 0.0, -0.1, 4.0])
def test_window_delta_outside_open_interval(delta):
    with pytest.raises(ValueError):
        fourier_coefficients(CostSpec.window(delta), 3)


def test_window_coefficients_against_quadrature():
    delta = 0.5
    c = fourier_coefficients(CostSpec.window(delta), 4)
    assert c.coeffs[0] == pytest.approx(1 - delta / np.pi, abs=1e-15)
    for k in range(5):
        assert abs(c.coeffs[k] - window_coefficient_quad(k, delta)) < 1e-8
        assert abs(c.coeffs[k] - window_coefficient_gauss(k, delta)) < 1e-8
    k = np.arange(1, 5)
    np.testing.assert_allclose(c.coeffs[1:].real, -np.sin(k * delta) / (k * np.pi), atol=1e-15)


def test_custom_coefficients_match_closed_form():
    cost = CostSpec.custom(lambda p: np.sin(p / 2) ** 2, sample_budget=64, symmetry="even")
    c = fourier_coefficients(cost, 6)
    assert c.quadrature_points == 64
    np.testing.assert_allclose(c.coeffs, [0.5, -0.25, 0, 0, 0, 0, 0], atol=1e-15)
    # grid grows to 8 * (max_lag + 1) when the budget is too small
    assert fourier_coefficients(cost, 20).quadrature_points == 168


def test_custom_general_cost_coefficients():
    # C(phi) = 1 + cos(phi) + sin(2 phi): c_1 = 1/2, c_2 = 1/(2i)
    cost = CostSpec.custom(lambda p: 1 + np.cos(p) + np.sin(2 * p), sample_budget=32)
    c = fourier_coefficients(cost, 3)
    np.testing.assert_allclose(c.coeffs, [1, 0.5, -0.5j, 0], atol=1e-14)
    assert abs(c.coeffs[0].imag) <= 1e-12


def test_custom_nonfinite_rejected():
    cost = CostSpec.custom(lambda p: np.where(p > 1, np.inf, 0.0))
    with pytest.raises(ValueError, match="non-finite"):
        fourier_coefficients(cost, 2)


def test_even_hint_rejects_odd_cost():
    cost = CostSpec.custom(lambda p: np.sin(p), symmetry="even")
    with pytest.raises(ValueError, match="even"):
        fourier_coefficients(cost, 2)


def test_even_custom_cost_has_real_coefficients():
    cost = CostSpec.custom(lambda p: np.abs(np.sin(p)) ** 3, sample_budget=1024, symmetry="even")
    assert np.max(np.abs(fourier_coefficients(cost, 10).coeffs.imag)) <= 1e-10


def test_coefficients_json_roundtrip():
    c = fourier_coefficients(CostSpec.window(0.7), 5)
    data = json.loads(c.to_json())
    assert set(data) == {"max_lag", "coeffs", "source"}
    back = FourierCoefficients.from_json(c.to_json())
    np.testing.assert_array_equal(back.coeffs, c.coeffs)
    assert back.max_lag == 5 and back.source == "analytic"


def test_toeplitz_fidelity_tridiagonal():
    t = toeplitz_from_coeffs(fourier_coefficients(CostSpec.fidelity(), 2), 2).dense()
    np.testing.assert_array_equal(t, [[0.5, -0.25, 0], [-0.25, 0.5, -0.25], [0, -0.25, 0.5]])


def test_toeplitz_degenerate_size():
    c = fourier_coefficients(CostSpec.window(1.0), 4)
    t = toeplitz_from_coeffs(c, 0)
    assert t.dim == 1
    np.testing.assert_array_equal(t.dense(), [[c.coeffs[0].real]])


def test_toeplitz_window_entries_against_quadrature():
    delta = 0.5
    t = toeplitz_from_coeffs(fourier_coefficients(CostSpec.window(delta), 3), 3).dense()
    for j in range(4):
        for k in range(4):
            # (1/2pi) int C(phi) e^{i(j-k) phi} = conj of the lag-(j-k) coefficient; real here
            assert abs(t[j, k] - window_coefficient_quad(j - k, delta)) < 1e-8


def test_toeplitz_rejects_short_coefficients():
    with pytest.raises(ValueError):
        toeplitz_from_coeffs(fourier_coefficients(CostSpec.fidelity(), 2), 3)


def test_toeplitz_is_hermitian_for_complex_coefficients():
    m = ToeplitzCostMatrix([1.0, 0.2 + 0.3j, -0.1j])
    d = m.dense()
    np.testing.assert_array_equal(d, d.conj().T)
    assert d[1, 0] == 0.2 + 0.3j


def test_uniform_fidelity_cost_closed_form_checked_by_quadrature():
    for n in (1, 3, 10, 25):
        alpha = uniform_state(n).amplitudes
        oracle = fidelity_expected_cost(alpha)
        assert abs(oracle - 1 / (2 * (n + 1))) < 1e-12
        assert abs(expected_cost(uniform_state(n), cost_matrix(CostSpec.fidelity(), n))
                   - 1 / (2 * (n + 1))) < 1e-12
    assert expected_cost(uniform_state(3), cost_matrix(CostSpec.fidelity(), 3)) == pytest.approx(0.125, abs=1e-12)


@pytest.mark.parametrize("cost", [CostSpec.fidelity(), CostSpec.window(0.9)])
def test_basis_state_cost_is_mean(cost):
    m = cost_matrix(cost, 5)
    assert expected_cost(basis_state(5, 0), m) == pytest.approx(m.first_column[0].real, abs=1e-15)


def test_sine_state_n1_cost():
    # 2x2 by hand: eigenvalues 1/2 -+ 1/4, minimum 1/4 = sin^2(pi/6)
    m = cost_matrix(CostSpec.fidelity(), 1)
    assert expected_cost(sine_state(1), m) == pytest.approx(np.sin(np.pi / 6) ** 2, abs=1e-15)


def test_expected_cost_errors():
    m = cost_matrix(CostSpec.fidelity(), 3)
    with pytest.raises(ValueError, match="dimension"):
        expected_cost(uniform_state(2), m)
    with pytest.raises(ValueError, match="unit norm"):
        expected_cost(np.ones(4), m)


def test_quadrature_form_agreement_random_states():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(0, 12))
        s = random_state(n, rng)
        fid = cost_matrix(CostSpec.fidelity(), n)
        assert abs(expected_cost(s, fid) - fidelity_expected_cost(s.amplitudes)) <= 1e-8
        delta = float(rng.uniform(0.05, 3.0))
        win = cost_matrix(CostSpec.window(delta), n)
        assert abs(expected_cost(s, win) - window_expected_cost(s.amplitudes, delta)) <= 1e-8


@settings(max_examples=50, deadline=None)
@given(n=st.integers(0, 10), extra=st.integers(1, 5), seed=st.integers(0, 2 ** 32 - 1))
def test_lag_sufficiency(n, extra, seed):
    rng = np.random.default_rng(seed)
    base = fourier_coefficients(CostSpec.window(0.4), n + extra)
    perturbed = base.coeffs.copy()
    perturbed[n + 1:] += rng.standard_normal(extra) + 1j * rng.standard_normal(extra)
    other = FourierCoefficients(n + extra, perturbed)
    s = random_state(n, rng)
    assert expected_cost(s, toeplitz_from_coeffs(base, n)) == expected_cost(s, toeplitz_from_coeffs(other, n))


@settings(max_examples=50, deadline=None)
@given(n=st.integers(0, 16), seed=st.integers(0, 2 ** 32 - 1))
def test_quadratic_form_is_real(n, seed):
    rng = np.random.default_rng(seed)
    col = rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1)
    col[0] = col[0].real
    s = random_state(n, rng)
    assert abs(quadratic_form(s, ToeplitzCostMatrix(col)).imag) <= 1e-12


def test_sine_vector_is_eigenvector_of_fidelity_matrix():
    for n in (1, 2, 7, 30):
        t = cost_matrix(CostSpec.fidelity(), n).dense()
        v = sine_state(n).amplitudes
        lam = np.sin(np.pi / (2 * (n + 2))) ** 2
        np.testing.assert_allclose(t @ v, lam * v, atol=1e-14)


@pytest.mark.parametrize("n", [0, 1, 5, 14, 60])
def test_optimize_fidelity_gives_sine_state(n):
    state, value = optimize_state(cost_matrix(CostSpec.fidelity(), n))
    assert value == pytest.approx(np.sin(np.pi / (2 * (n + 2))) ** 2, abs=1e-14)
    assert np.linalg.norm(state.amplitudes - sine_state(n).amplitudes) < 1e-8


def test_optimize_single_amplitude():
    m = cost_matrix(CostSpec.window(0.3), 0)
    state, value = optimize_state(m)
    np.testing.assert_array_equal(state.amplitudes, [1.0])
    assert value == m.first_column[0].real


def test_optimize_window_beats_uniform():
    m = cost_matrix(CostSpec.window(0.3), 8)
    _, value = optimize_state(m)
    gap = expected_cost(uniform_state(8), m) - value
    assert gap >= -1e-9
    assert gap > 0  # the uniform state is not exactly optimal here


@pytest.mark.parametrize("cost", [CostSpec.fidelity(), CostSpec.window(0.3), CostSpec.window(1.2)])
def test_optimality_against_random_states(cost):
    rng = np.random.default_rng(5)
    n = 9
    m = cost_matrix(cost, n)
    _, value = optimize_state(m)
    for _ in range(1000):
        assert value <= expected_cost(random_state(n, rng), m) + 1e-9


@pytest.mark.parametrize("cost", [CostSpec.fidelity(), CostSpec.window(0.25)])
def test_even_cost_optimum_is_real(cost):
    state, _ = optimize_state(cost_matrix(cost, 20))
    assert np.max(np.abs(state.amplitudes.imag)) <= 1e-9
    lead = np.argmax(np.abs(state.amplitudes))
    assert state.amplitudes[lead].real > 0


def test_optimize_complex_matrix_phase_fixed():
    rng = np.random.default_rng(3)
    col = rng.standard_normal(8) * 0.2 + 1j * rng.standard_normal(8) * 0.2
    col[0] = 1.0
    m = ToeplitzCostMatrix(col)
    state, value = optimize_state(m)
    assert value == pytest.approx(np.linalg.eigvalsh(m.dense())[0], abs=1e-12)
    mag = np.abs(state.amplitudes)
    lead = state.amplitudes[np.flatnonzero(mag >= mag.max() * (1 - 1e-9))[0]]
    assert lead.imag == pytest.approx(0, abs=1e-15) and lead.real > 0


@pytest.mark.parametrize("cost,n", [(CostSpec.fidelity(), 120), (CostSpec.window(0.3), 30),
                                    (CostSpec.window(0.8), 12)])
def test_inverse_iteration_path_matches_dense(cost, n):
    m = cost_matrix(cost, n)
    dense_state, dense_value = optimize_state(m)
    it_state, it_value = optimize_state(m, dense_limit=10)
    assert it_value == pytest.approx(dense_value, abs=1e-11)
    resid = np.linalg.norm(m.dense() @ it_state.amplitudes - it_value * it_state.amplitudes)
    assert resid <= 1e-11
    overlap = abs(np.vdot(dense_state.amplitudes, it_state.amplitudes))
    assert overlap == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("delta,n", [(0.8, 90), (2.5, 60)])
def test_inverse_iteration_clustered_minimum(delta, n):
    # dozens of eigenvalues at round-off level: only value and residual are well defined
    m = cost_matrix(CostSpec.window(delta), n)
    state, value = optimize_state(m, dense_limit=10)
    assert abs(value) <= 1e-12
    assert np.linalg.norm(m.dense() @ state.amplitudes - value * state.amplitudes) <= 1e-11


def test_inverse_iteration_large_fidelity():
    n = 2100  # above the dense limit
    state, value = optimize_state(cost_matrix(CostSpec.fidelity(), n))
    assert value == pytest.approx(np.sin(np.pi / (2 * (n + 2))) ** 2, rel=1e-6)
    assert np.linalg.norm(state.amplitudes - sine_state(n).amplitudes) < 1e-5


def test_inverse_iteration_failure_raises():
    mat = cost_matrix(CostSpec.fidelity(), 40).dense()
    with pytest.raises(NumericalError):
        min_eig_inverse_iteration(mat, tol=0.0, max_iter=1)


def test_holevo_check():
    assert holevo_check(CostSpec.fidelity())
    assert not holevo_check(CostSpec.window(0.5))
    assert holevo_check(CostSpec.custom(lambda p: np.ones_like(p)))
    # sign scan of -sin(k delta)/(k pi) first turns positive at k = 7 for delta = 0.5
    assert holevo_check(CostSpec.window(0.5), max_lag=6)
    assert not holevo_check(CostSpec.window(0.5), max_lag=7)


def test_mixture_cost_is_density_matrix_average():
    rng = np.random.default_rng(2)
    m = cost_matrix(CostSpec.window(0.6), 5)
    states = [random_state(5, rng) for _ in range(3)]
    w = np.array([0.2, 0.5, 0.3])
    direct = sum(p * expected_cost(s, m) for p, s in zip(w, states))
    assert mixture_expected_cost(w, states, m) == pytest.approx(direct, abs=1e-14)


def test_cost_spec_evaluation():
    w = CostSpec.window(0.5)
    np.testing.assert_array_equal(w(np.array([0.0, 0.49, 0.5, -0.5, 2 * np.pi - 0.4, np.pi])),
                                  [0, 0, 1, 1, 0, 1])
    assert CostSpec.fidelity()(np.pi) == pytest.approx(1.0)
    assert w.name == "window:0.5"


def test_from_samples_interpolates_trig_polynomial():
    n = 16
    phi = 0.3 + 2 * np.pi * np.arange(n) / n
    f = lambda p: 0.7 - 0.2 * np.cos(p) + 0.1 * np.sin(3 * p)
    cost = CostSpec.from_samples(phi, f(phi))
    test = np.linspace(-4, 4, 33)
    np.testing.assert_allclose(cost(test), f(test), atol=1e-13)
    c = fourier_coefficients(cost, 4)
    np.testing.assert_allclose(c.coeffs, [0.7, -0.1, 0, 0.05j * -1, 0], atol=1e-13)


def test_from_samples_rejects_nonuniform_grid():
    with pytest.raises(ValueError, match="uniform"):
        CostSpec.from_samples([0, 1, 2, 3], [0, 1, 1, 0])


def test_probe_state_roundtrip():
    s = ProbeState.from_unnormalized([1, 1j, -1])
    back = ProbeState.from_json(s.to_json())
    np.testing.assert_array_equal(back.amplitudes, s.amplitudes)
