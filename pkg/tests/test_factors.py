import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from signedlfm.errors import ParseError, SignedLfmError
from signedlfm.factors import (
    EdgeScore,
    FactorModel,
    activation,
    activation_array,
    edge_scores,
    init_model,
    log_activation,
    log_one_minus_activation,
    model_from_lines,
    model_to_lines,
)

# reference values from a 60-digit decimal evaluation of
# p0 * e^x / (1 + p0 * (e^x - 1))
HIGH_PRECISION_POINTS = [
    (2.0, 0.01, 0.06945315965638048),
    (-3.0, 0.2, 0.012293749653343877),
    (0.7, 0.5, 0.6681877721681662),
    (-1.25, 0.35, 0.13365293327248584),
]


@pytest.mark.parametrize("p0", [0.01, 0.1, 0.5, 0.9, 0.999])
def test_activation_at_zero_is_exactly_p0(p0):
    assert activation(0.0, p0) == p0


@pytest.mark.parametrize("x,p0,expected", HIGH_PRECISION_POINTS)
def test_activation_matches_high_precision_oracle(x, p0, expected):
    assert activation(x, p0) == pytest.approx(expected, rel=1e-14)
    assert activation_array(np.array([x]), p0)[0] == pytest.approx(expected, rel=1e-14)


def test_activation_monotone_limits():
    for p0 in (0.01, 0.5, 0.99):
        assert activation(50.0, p0) > 1.0 - 1e-12
        assert 0.0 < activation(-50.0, p0) < 1e-12 or activation(-50.0, p0) < 1e-9
        assert activation(-50.0, p0) < activation(0.0, p0) < activation(50.0, p0)


def test_activation_no_overflow_far_out():
    for x in (500.0, -500.0, 750.0, -750.0):
        v = activation(x, 0.01)
        assert math.isfinite(v)
        assert 0.0 <= v <= 1.0


def test_derivative_identity_against_finite_differences(rng):
    # f' = f(1-f) checked at 100 random points
    xs = rng.uniform(-8, 8, size=100)
    for p0 in (0.01, 0.3, 0.7):
        h = 1e-6
        for x in xs:
            f = activation(x, p0)
            analytic = f * (1.0 - f)
            numeric = (activation(x + h, p0) - activation(x - h, p0)) / (2 * h)
            assert analytic == pytest.approx(numeric, rel=1e-6)


def test_p0_half_is_the_logistic_function():
    xs = np.linspace(-30, 30, 301)
    logistic = 1.0 / (1.0 + np.exp(-xs))
    ours = activation_array(xs, 0.5)
    np.testing.assert_allclose(ours, logistic, rtol=0, atol=1e-12)


@given(
    st.floats(-60, 60), st.floats(-60, 60),
    st.floats(0.001, 0.999),
)
def test_activation_monotone(x1, x2, p0):
    lo, hi = sorted((x1, x2))
    assert activation(lo, p0) <= activation(hi, p0)


def test_log_forms_agree_with_direct_evaluation(rng):
    xs = rng.uniform(-20, 20, size=200)
    for p0 in (0.01, 0.5):
        f = activation_array(xs, p0)
        np.testing.assert_allclose(log_activation(xs, p0), np.log(f), atol=1e-12)
        np.testing.assert_allclose(
            log_one_minus_activation(xs, p0), np.log1p(-f), atol=1e-12
        )


def test_log_forms_stay_finite_when_activation_saturates():
    xs = np.array([-600.0, 600.0])
    assert np.all(np.isfinite(log_activation(xs, 0.01)))
    assert np.all(np.isfinite(log_one_minus_activation(xs, 0.01)))


def _model(rng, users=3, targets=4, d_pos=30, d_neg=30, p0=0.01):
    return FactorModel(
        w_pos=rng.normal(size=(users, d_pos)),
        w_neg=rng.normal(size=(users, d_neg)),
        h_pos=rng.normal(size=(targets, d_pos)),
        h_neg=rng.normal(size=(targets, d_neg)),
        p0=p0,
    )


def test_edge_scores_zero_factors_return_prior():
    model = FactorModel(
        w_pos=np.zeros((2, 4)), w_neg=np.zeros((2, 4)),
        h_pos=np.zeros((3, 4)), h_neg=np.zeros((3, 4)), p0=0.2,
    )
    score = edge_scores(model, 1, 2)
    assert score == EdgeScore(0.2, 0.2)


def test_edge_scores_inner_product_arithmetic():
    model = FactorModel(
        w_pos=np.zeros((1, 1)), w_neg=np.array([[3.0]]),
        h_pos=np.zeros((1, 1)), h_neg=np.array([[3.0]]), p0=0.05,
    )
    assert edge_scores(model, 0, 0).f_neg == activation(9.0, 0.05)


def test_edge_scores_match_elementwise_sum_oracle(rng):
    model = _model(rng)
    for u in range(3):
        for t in range(4):
            x_pos = sum(model.w_pos[u][k] * model.h_pos[t][k] for k in range(30))
            x_neg = sum(model.w_neg[u][k] * model.h_neg[t][k] for k in range(30))
            got = edge_scores(model, u, t)
            assert got.f_pos == pytest.approx(activation(x_pos, model.p0), abs=1e-12)
            assert got.f_neg == pytest.approx(activation(x_neg, model.p0), abs=1e-12)


def test_init_model_deterministic_and_bounded():
    a = init_model(5, 7, 30, 30, p0=0.01, scale=0.1, seed=42)
    b = init_model(5, 7, 30, 30, p0=0.01, scale=0.1, seed=42)
    for m_a, m_b in zip((a.w_pos, a.w_neg, a.h_pos, a.h_neg),
                        (b.w_pos, b.w_neg, b.h_pos, b.h_neg)):
        np.testing.assert_array_equal(m_a, m_b)
        assert np.all(np.abs(m_a) < 0.1)
    assert a.w_pos.shape == (5, 30)
    assert a.h_neg.shape == (7, 30)
    c = init_model(5, 7, 30, 30, p0=0.01, scale=0.1, seed=43)
    assert not np.array_equal(a.w_pos, c.w_pos)


@pytest.mark.parametrize(
    "kwargs",
    [dict(d_pos=0), dict(p0=0.0), dict(p0=1.0), dict(scale=0.0)],
)
def test_init_model_rejects_bad_arguments(kwargs):
    args = dict(num_users=2, num_targets=2, d_pos=3, d_neg=3, p0=0.5, scale=0.1)
    args.update(kwargs)
    with pytest.raises(SignedLfmError):
        init_model(**args)


def test_model_file_round_trip(rng):
    model = _model(rng, users=4, targets=2, d_pos=5, d_neg=3, p0=0.07)
    lines = model_to_lines(model)
    assert lines[0] == "lfm-factors v1 users=4 targets=2 dpos=5 dneg=3 p0=0.07"
    loaded = model_from_lines(lines)
    np.testing.assert_array_equal(loaded.w_pos, model.w_pos)
    np.testing.assert_array_equal(loaded.w_neg, model.w_neg)
    np.testing.assert_array_equal(loaded.h_pos, model.h_pos)
    np.testing.assert_array_equal(loaded.h_neg, model.h_neg)
    assert loaded.p0 == model.p0


@pytest.mark.parametrize(
    "mutate",
    [
        lambda lines: lines[:1],                          # missing rows
        lambda lines: ["bogus header"] + lines[1:],       # bad header
        lambda lines: lines[:1] + ["U\t+\t0"] + lines[2:],  # short row
    ],
)
def test_model_file_rejects_malformed_input(rng, mutate):
    lines = model_to_lines(_model(rng, users=1, targets=1, d_pos=2, d_neg=2))
    with pytest.raises(ParseError):
        model_from_lines(mutate(lines))
