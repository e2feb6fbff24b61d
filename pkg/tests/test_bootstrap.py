import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from near_misses.bootstrap import (
    ErrorTermModel,
    beta_step,
    contraction_factor,
    exponent_sequence,
    fit_error_model,
    iteration_schedule,
    predicted_bound,
)
from near_misses.errors import DomainError, InvalidQueryError

from oracles import beta_sequence


# ---------------------------------------------------------------------------
# one step


def test_first_step_for_n3():
    assert beta_step(3, 3) == Fraction(5, 2)


@pytest.mark.parametrize("n", range(2, 11))
def test_first_step_closed_form(n):
    assert beta_step(n, n) == n - 1 + Fraction(2, n + 1)


def test_n4_third_exponent():
    assert beta_step(4, Fraction(17, 5)) == Fraction(61, 19)


def test_step_domain():
    with pytest.raises(DomainError):
        beta_step(4, 3)
    with pytest.raises(DomainError):
        beta_step(4, Fraction(5, 2))


def test_float_input_is_read_exactly():
    assert beta_step(3, 2.5) == Fraction(7, 3)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(2, 12), num=st.integers(1, 10**6), den=st.integers(1, 10**6))
def test_transformed_recursion(n, num, den):
    # beta_step(n, x) - (n-1) = (x - (n-1)) / (x - (n-1)/2) for rational x > n - 1
    x = n - 1 + Fraction(num, den)
    lhs = beta_step(n, x) - (n - 1)
    assert lhs == (x - (n - 1)) / (x - Fraction(n - 1, 2))
    assert lhs > 0


@settings(max_examples=100, deadline=None)
@given(n=st.integers(4, 12), t=st.fractions(Fraction(1, 10**6), 1))
def test_contraction_bound_on_unit_interval(n, t):
    # x in (n-1, n]: 1/(x - (n-1)/2) <= 2/(n-1) <= 2/3
    x = n - 1 + t
    assert contraction_factor(n, x) <= Fraction(2, n - 1) <= Fraction(2, 3)


# ---------------------------------------------------------------------------
# sequences


def test_n3_first_ten():
    seq = exponent_sequence(3, 10)
    assert seq.betas == [2 + Fraction(1, i) for i in range(1, 11)]
    assert seq[10] == Fraction(21, 10)


def test_n4_first_three():
    assert exponent_sequence(4, 3).betas == [4, Fraction(17, 5), Fraction(61, 19)]


@pytest.mark.parametrize("n", range(2, 9))
def test_sequence_matches_oracle(n):
    assert exponent_sequence(n, 60, verify=False).betas == beta_sequence(n, 60)


def test_n3_closed_form_to_ten_thousand():
    assert exponent_sequence(3, 10_000).closed_form_holds()


@pytest.mark.parametrize("n", range(4, 9))
def test_contraction(n):
    seq = exponent_sequence(n, 1500)
    assert seq.contraction_holds()
    assert seq.transformed_recursion_holds()


@pytest.mark.parametrize("n", range(2, 11))
def test_sequence_shape(n):
    seq = exponent_sequence(n, 200, verify=False)
    assert seq[1] == n
    assert seq.strictly_decreasing()
    assert all(b > n - 1 for b in seq.betas)


def test_unreduced_pairs_compare_exactly():
    # the checks must not depend on the pairs being in lowest terms
    seq = exponent_sequence(3, 5)
    seq.pairs = [(6 * p, 6 * r) for p, r in seq.pairs]
    assert seq.closed_form_holds() and seq.strictly_decreasing() and seq.transformed_recursion_holds()
    assert seq[2] == Fraction(5, 2)


def test_closed_form_only_for_n3():
    with pytest.raises(InvalidQueryError):
        exponent_sequence(4, 3).closed_form_holds()


def test_sequence_validation():
    with pytest.raises(InvalidQueryError):
        exponent_sequence(1, 3)
    with pytest.raises(InvalidQueryError):
        exponent_sequence(3, 0)
    with pytest.raises(IndexError):
        exponent_sequence(3, 3)[0]


# ---------------------------------------------------------------------------
# schedules


def test_schedule_examples():
    assert iteration_schedule(3, math.exp(16)) == 4
    assert iteration_schedule(4, math.exp(math.exp(2.0))) == 4
    assert iteration_schedule(3, 1e6) == 3


@settings(max_examples=50, deadline=None)
@given(Q=st.floats(3, 1e300))
def test_schedule_formulas(Q):
    assert iteration_schedule(3, Q) == math.floor(math.sqrt(math.log(Q)))
    assert iteration_schedule(5, Q) == max(0, math.floor(math.log(math.log(Q)) / math.log(1.5)))


def test_schedule_domain():
    with pytest.raises(InvalidQueryError):
        iteration_schedule(3, 2.9)


# ---------------------------------------------------------------------------
# envelopes and error-term shapes


def test_envelope_without_main_term():
    pb = predicted_bound(4, 1e8, 0.0)
    seq = exponent_sequence(4, len(pb.per_i))
    expect = min(2.0**i * 1e8 ** float(seq[i]) * math.log(1e8) for i in range(1, len(pb.per_i) + 1))
    assert pb.envelope == pytest.approx(expect, rel=1e-12)


def test_main_term_dominates_n3():
    pb = predicted_bound(3, 1e4, 0.1)
    main = 0.1 * 1e12
    assert main == pytest.approx(1e11)
    # E_3 = Q^2 exp(sqrt(log Q)) ~ 2.1e9, well below the main term
    assert pb.terminal == pytest.approx(1e8 * math.exp(math.sqrt(math.log(1e4))), rel=1e-12)
    assert pb.terminal < main / 10


def test_terminal_exponent_tends_to_n_minus_one():
    seq = exponent_sequence(4, 80)
    assert abs(float(seq[80]) - 3) < 1e-12
    gaps = [float(seq[i]) - 3 for i in (10, 20, 40)]
    assert gaps[0] > gaps[1] > gaps[2] > 0


@pytest.mark.parametrize("n", [2, 3, 4, 6])
def test_error_model_growth(n):
    assert ErrorTermModel(n).check_growth()


@pytest.mark.parametrize("n, attr, value", [(3, "c", 0.7), (4, "kappa", 2.5), (5, "kappa", 0.4)])
def test_fit_recovers_shape(n, attr, value):
    truth = ErrorTermModel(n, amplitude=3.0, **{attr: value})
    Qs = np.logspace(2, 8, 12)
    fit = fit_error_model(n, Qs, truth(Qs))
    assert getattr(fit, attr) == pytest.approx(value, rel=1e-8)
    assert fit.amplitude == pytest.approx(3.0, rel=1e-8)


def test_fit_needs_positive_residuals():
    with pytest.raises(InvalidQueryError):
        fit_error_model(3, [10, 100], [1.0, 0.0])
