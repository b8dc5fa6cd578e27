import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dqsense import densmat, metrology
from dqsense.errors import NoAdvantageError, ValidationError
from dqsense.metrology import (
    DepolarizedGhzModel,
    GhzDiagonalState,
    SensingProblem,
)

from .oracles import (
    bisect,
    c_from_eigenvalues,
    depolarized_eigenvalues,
    eta_depolarized_explicit,
    golden_section_min,
)


# C coefficient ---------------------------------------------------------------


def test_c_pure_ghz_is_zero():
    assert metrology.c_coefficient(GhzDiagonalState.pure(3)) == 0.0


def test_c_maximally_mixed_is_one():
    for m in (2, 3, 4):
        assert metrology.c_coefficient(GhzDiagonalState.maximally_mixed(m)) == pytest.approx(1.0)


def test_c_depolarized_matches_explicit_eigenvalue_sum():
    state = GhzDiagonalState.depolarized(0.9, 3)
    expected = c_from_eigenvalues(depolarized_eigenvalues(0.9, 3))
    assert metrology.c_coefficient(state) == pytest.approx(expected, abs=1e-14)
    assert expected == pytest.approx(0.141964, abs=1e-6)


def test_c_dp_closed_form_matches_eigenvalue_sum():
    for d in (2, 3, 4):
        for n in (1, 2):
            for f in (0.3, 0.6, 0.9, 0.99):
                expected = c_from_eigenvalues(depolarized_eigenvalues(f, n * d))
                assert metrology.c_dp(f, d, n) == pytest.approx(expected, abs=1e-13)


def test_c_dp_large_register_does_not_overflow():
    c = metrology.c_dp(0.9, 20, 60)
    assert math.isfinite(c) and 0 <= c <= 1


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 4), st.lists(st.floats(0.0, 1.0), min_size=16, max_size=16))
def test_c_within_unit_interval(m, raw):
    w = np.array(raw[: 2**m]) + 1e-9
    state = GhzDiagonalState(m, w / w.sum())
    assert 0.0 <= metrology.c_coefficient(state) <= 1.0


def test_qfi_average_examples():
    assert metrology.qfi_average(0.0, SensingProblem(3, 2)) == 12
    assert metrology.qfi_average(1.0, SensingProblem(4, 3)) == 0
    c = metrology.c_coefficient(GhzDiagonalState.depolarized(0.9, 3))
    assert metrology.qfi_average(c, SensingProblem(3)) == pytest.approx(2.574107, abs=1e-6)


def test_qfi_average_rejects_bad_c():
    with pytest.raises(ValidationError):
        metrology.qfi_average(1.5, SensingProblem(3))


# advantage factor and thresholds --------------------------------------------


def test_eta_pure_equals_d():
    for d in (2, 3, 5):
        for n in (1, 3):
            assert metrology.eta_depolarized(DepolarizedGhzModel(1.0, d, n)) == pytest.approx(d)


def test_eta_zero_at_maximally_mixed_fidelity():
    for d, n in ((2, 1), (3, 1), (3, 2)):
        f = 2.0 ** -(n * d)
        assert metrology.eta_depolarized(DepolarizedGhzModel(f, d, n)) == pytest.approx(0, abs=1e-12)


def test_eta_at_threshold_is_one():
    f = metrology.threshold_dp(3)
    assert metrology.eta_depolarized(DepolarizedGhzModel(f, 3)) == pytest.approx(1, abs=1e-9)


def test_threshold_dp_golden():
    assert metrology.threshold_dp(3) == pytest.approx(0.50963, abs=1e-4)
    assert metrology.threshold_dp(2) == pytest.approx(0.73029, abs=1e-5)


def test_threshold_dp_matches_bisection_oracle():
    for d in range(2, 7):
        for n in (1, 2):
            root = bisect(
                lambda f: eta_depolarized_explicit(f, d, n) - 1, 2.0 ** -(n * d) + 1e-9, 1.0
            )
            assert metrology.threshold_dp(d, n) == pytest.approx(root, abs=1e-10)


def test_threshold_dp_reduces_to_one_over_d():
    assert 1.0 <= 20 * metrology.threshold_dp(20) <= 1.05


def test_threshold_rank2():
    assert metrology.threshold_rank2(4) == pytest.approx(0.75)
    assert metrology.threshold_rank2(100) == pytest.approx(0.55)
    with pytest.raises(ValidationError):
        metrology.threshold_rank2(1)


def test_threshold_rank2_is_advantage_boundary():
    for d in (2, 3, 4):
        f = metrology.threshold_rank2(d)
        c = metrology.c_coefficient(GhzDiagonalState.dephased_rank2(f, d))
        assert d * (1 - c) == pytest.approx(1, abs=1e-12)


def test_threshold_azimuthal():
    assert metrology.threshold_azimuthal(4) == pytest.approx(17 / 32)
    assert metrology.bell_pair_threshold(2, "azimuthal") == pytest.approx(
        (4 + math.sqrt(2) - 1) / (4 * math.sqrt(2))
    )
    for d in range(2, 8):
        assert metrology.threshold_azimuthal(d) > metrology.threshold_dp(d)


def test_bell_pair_thresholds_golden():
    expected = [0.730, 0.714, 0.711, 0.716, 0.726, 0.738]
    got = [metrology.bell_pair_threshold(d) for d in range(2, 8)]
    assert got == pytest.approx(expected, abs=1e-3)


def test_bell_pair_threshold_rejects_unknown_measurement():
    with pytest.raises(ValidationError):
        metrology.bell_pair_threshold(3, "homodyne")


def test_bell_pair_infidelity_ratio_at_d30():
    eps_opt = 1 - metrology.bell_pair_threshold(30, "optimal")
    eps_az = 1 - metrology.bell_pair_threshold(30, "azimuthal")
    assert eps_opt / eps_az == pytest.approx(2, rel=0.1)


def test_qfi_lower_bound_values():
    assert metrology.qfi_lower_bound(0.5, 3) == 0
    assert metrology.qfi_lower_bound(1.0, 4) == 4
    assert metrology.qfi_lower_bound(0.8, 3) == pytest.approx(1.08)


def test_qfi_lower_bound_holds_on_random_states():
    rng = np.random.default_rng(11)
    for d in (2, 3):
        for _ in range(300):
            f = rng.uniform(0.5, 1)
            rest = rng.dirichlet(np.full(2**d - 1, rng.uniform(0.05, 2))) * (1 - f)
            state = GhzDiagonalState(d, np.concatenate([[f], rest]))
            qfi = metrology.qfi_average(metrology.c_coefficient(state), SensingProblem(d))
            assert qfi >= metrology.qfi_lower_bound(f, d) - 1e-12


def test_qfi_lower_bound_fails_below_half_fidelity():
    # weight F on Z|GHZ> and the rest spread over balanced pairs gives C = 1
    f = 0.3
    lam = np.zeros(8)
    lam[0] = lam[1] = f
    lam[2:] = (1 - 2 * f) / 6
    state = GhzDiagonalState(3, lam)
    qfi = metrology.qfi_average(metrology.c_coefficient(state), SensingProblem(3))
    assert qfi == pytest.approx(0, abs=1e-12)
    assert metrology.qfi_lower_bound(f, 3) > 0.4


def test_lower_bound_is_attained_by_rank2_state():
    for f in (0.6, 0.8, 0.95):
        c = metrology.c_coefficient(GhzDiagonalState.dephased_rank2(f, 3))
        assert 3 * (1 - c) == pytest.approx(metrology.qfi_lower_bound(f, 3))


def test_threshold_exceeds_separability_bound():
    for d in range(2, 11):
        for n in range(1, 5):
            assert metrology.threshold_dp(d, n) > 3 / (2 ** (n * d) + 2)


def test_c_dp_monotone_in_fidelity_and_k():
    h = 1e-6
    for d in (2, 3, 4):
        for n in (1, 2, 4):
            for f in np.linspace(2.0 ** -(n * d) + 0.01, 0.99, 15):
                assert metrology.c_dp(f + h, d, n, 0.99) < metrology.c_dp(f, d, n, 0.99)
            if n > 1:
                for k in np.linspace(0.9, 0.999, 10):
                    assert metrology.c_dp(0.9, d, n, k + h) < metrology.c_dp(0.9, d, n, k)


# n_max and local comparison -------------------------------------------------


def test_n_max_estimate_golden_and_exact_crossing():
    est = metrology.n_max_estimate(3, 0.9, 0.99)
    assert est.n_max == pytest.approx(98.83, abs=0.01)
    exact = metrology.n_max_exact(3, 0.9, 0.99, n_limit=1000)
    assert abs(exact - est.n_max) <= 5
    assert metrology.eta_depolarized(DepolarizedGhzModel(0.9, 3, exact, 0.99)) >= 1
    assert metrology.eta_depolarized(DepolarizedGhzModel(0.9, 3, exact + 1, 0.99)) < 1


def test_n_max_estimate_grows_as_k_approaches_one():
    values = [metrology.n_max_estimate(3, 0.9, k).n_max for k in (0.9, 0.99, 0.999, 0.9999)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_n_max_sensitivity_ratio_large_at_high_k():
    assert metrology.n_max_estimate(3, 0.9, 0.9999).ratio > 100


def test_n_max_estimate_no_advantage():
    with pytest.raises(NoAdvantageError):
        metrology.n_max_estimate(3, 0.3, 0.99)


def test_local_imperfect_and_ratio():
    assert metrology.eta_local_imperfect(3, 1, 0.9) == pytest.approx(1)
    model = DepolarizedGhzModel(0.9, 3, 1, 0.9999)
    assert metrology.global_local_ratio(model) == pytest.approx(metrology.eta_depolarized(model))
    ratios = [
        metrology.global_local_ratio(DepolarizedGhzModel(0.9, 3, n, 0.9999))
        for n in range(1, 400000, 2000)
    ]
    assert ratios[0] > 1 and min(ratios) < 1


def test_c_local_matches_eigenvalue_sum():
    for d, n, k in ((3, 2, 0.99), (3, 4, 0.9), (2, 5, 0.95)):
        f_local = k ** ((n - 1) / d)
        expected = c_from_eigenvalues(depolarized_eigenvalues(f_local, n))
        assert metrology.c_local(d, n, k) == pytest.approx(expected, abs=1e-13)


# azimuthal readout ----------------------------------------------------------


def test_azimuthal_divergent_without_offset():
    assert metrology.azimuthal_variance(0.8, 3, 1, 0.0, 0.0) == metrology.DIVERGENT


def test_azimuthal_pure_state_reaches_qcrb():
    for d, n in ((2, 1), (3, 2)):
        opt = metrology.optimal_azimuthal(n, d)
        var = metrology.azimuthal_variance(1.0, d, n, opt.alpha_opt, 0.0)
        assert var == pytest.approx(1 / (d * n * n))


def test_azimuthal_example_value():
    a = 0.8 - 0.2 / 7
    assert metrology.azimuthal_variance(0.8, 3, 1, math.pi / 6, 0.0) == pytest.approx(1 / (3 * a * a))


@pytest.mark.parametrize("n,d", [(1, 2), (1, 3), (2, 2), (2, 3)])
def test_azimuthal_argmin(n, d):
    f = 0.85
    alpha = golden_section_min(
        lambda a: metrology.azimuthal_variance(f, d, n, a, 0.0), 1e-9, math.pi / (n * d) - 1e-9
    )
    opt = metrology.optimal_azimuthal(n, d)
    assert alpha == pytest.approx(opt.alpha_opt, abs=1e-6)
    a = metrology.azimuthal_contrast(f, n * d)
    assert metrology.azimuthal_variance(f, d, n, opt.alpha_opt, 0.0) == pytest.approx(
        1 / (d * a * a * n * n)
    )
    assert opt.min_variance(f) == pytest.approx(1 / (d * a * a * n * n))


def test_azimuthal_threshold_is_advantage_boundary():
    for d, n in ((2, 1), (3, 1), (3, 2)):
        opt = metrology.optimal_azimuthal(n, d)
        # the local optimum with n qubits per node gives variance 1/(d n^2)
        assert opt.min_variance(opt.f_threshold) == pytest.approx(1 / (n * n), rel=1e-12)


# numeric QFIM ---------------------------------------------------------------


def test_qfim_numeric_pure_ghz_is_ones():
    rho = densmat.ghz_density(GhzDiagonalState.pure(3))
    assert np.allclose(metrology.qfim_numeric(rho, SensingProblem(3)), np.ones((3, 3)), atol=1e-10)


def test_qfim_numeric_maximally_mixed_is_zero():
    rho = np.eye(8) / 8
    assert np.allclose(metrology.qfim_numeric(rho, SensingProblem(3)), 0, atol=1e-12)


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("f", [0.7, 0.9])
def test_qfim_numeric_matches_closed_form(d, n, f):
    problem = SensingProblem(d, n)
    rho = densmat.ghz_density(GhzDiagonalState.depolarized(f, n * d))
    expected = (1 - metrology.c_dp(f, d, n)) * n * n * np.ones((d, d))
    assert np.allclose(metrology.qfim_numeric(rho, problem), expected, atol=1e-8)
    assert np.allclose(metrology.qfim_local(metrology.c_dp(f, d, n), problem), expected, atol=1e-12)


def _balanced_tail_state(rng, m):
    """Random GHZ-diagonal state whose only unequal partner pair is (0, 1)."""
    lam = np.zeros(2**m)
    w = rng.dirichlet(np.ones(2 ** (m - 1) + 1))
    lam[0], lam[1] = w[0], w[1]
    for b in range(1, 2 ** (m - 1)):
        lam[2 * b] = lam[2 * b + 1] = w[b + 1] / 2
    return GhzDiagonalState(m, lam)


def test_qfim_numeric_matches_c_when_only_principal_pair_unbalanced():
    rng = np.random.default_rng(5)
    for d in (2, 3):
        problem = SensingProblem(d)
        for _ in range(20):
            state = _balanced_tail_state(rng, d)
            numeric = metrology.qfim_numeric(densmat.ghz_density(state), problem)
            c = metrology.c_coefficient(state)
            v1 = problem.direction
            assert v1 @ numeric @ v1 == pytest.approx(d * (1 - c), abs=1e-9)


def test_c_formula_upper_bounds_numeric_qfi():
    # pairs built on bit strings of Hamming weight w only accumulate phase at
    # rate (m - 2w), so the C formula is exact for the principal pair and an
    # upper bound otherwise
    rng = np.random.default_rng(6)
    problem = SensingProblem(3)
    v1 = problem.direction
    for _ in range(50):
        state = GhzDiagonalState(3, rng.dirichlet(np.ones(8)))
        numeric = v1 @ metrology.qfim_numeric(densmat.ghz_density(state), problem) @ v1
        assert numeric <= 3 * (1 - metrology.c_coefficient(state)) + 1e-9


def test_qfim_numeric_rejects_wrong_shape():
    with pytest.raises(ValidationError):
        metrology.qfim_numeric(np.eye(4) / 4, SensingProblem(3))


def test_orthonormal_extension():
    for d in (2, 3, 5):
        m = metrology.orthonormal_extension(d)
        assert np.allclose(m @ m.T, np.eye(d), atol=1e-12)
        assert np.allclose(m[0], np.full(d, 1 / math.sqrt(d)))
    m2 = metrology.orthonormal_extension(2)
    assert np.allclose(np.abs(m2[1]), [1 / math.sqrt(2)] * 2)
    assert m2[1, 0] == pytest.approx(-m2[1, 1])


def test_model_validation():
    with pytest.raises(ValidationError):
        DepolarizedGhzModel(1.2, 3)
    with pytest.raises(ValidationError):
        DepolarizedGhzModel(0.9, 1)
    with pytest.raises(ValidationError):
        GhzDiagonalState(2, np.array([0.5, 0.5, 0.5, -0.5]))
