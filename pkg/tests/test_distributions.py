import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from hardalign.distributions import (
    EMIT,
    SHIFT,
    BinConcreteParams,
    NoiseSource,
    TransitionAction,
    binconcrete_cdf,
    binconcrete_from_logistic,
    binconcrete_log_density,
    binconcrete_logit_cdf,
    binconcrete_sample,
    binconcrete_sample_logit,
    binconcrete_sample_grad,
    discretize,
    emit_prob,
    log_emit_prob,
    log_shift_prob,
    logistic_from_uniform,
    sample_bernoulli,
    sample_logistic,
    sigmoid_temp,
)
from hardalign.errors import ValidationError
from helpers import density_mass, total_mass

N = 10**5
LAMBDAS = (1.0, 0.2, 0.05)


def three_sigma(p, n=N):
    return 3.0 * math.sqrt(p * (1.0 - p) / n)


def linear_density(x, alpha, lam):
    """Direct linear-space evaluation, usable only away from the endpoints."""
    num = lam * alpha * x ** (-lam - 1) * (1 - x) ** (-lam - 1)
    return num / (alpha * x ** (-lam) + (1 - x) ** (-lam)) ** 2


def test_transition_action_has_two_states():
    assert len(TransitionAction) == 2
    assert int(EMIT) == 0 and int(SHIFT) == 1


def test_noise_source_is_reproducible_and_interior():
    a, b = NoiseSource(7), NoiseSource(7)
    np.testing.assert_array_equal(a.uniform(1000), b.uniform(1000))
    assert [a.uniform() for _ in range(10)] == [b.uniform() for _ in range(10)]
    u = NoiseSource(1).uniform(10**5)
    assert u.min() > 0.0 and u.max() < 1.0


def test_noise_source_clamps_extremes():
    src = NoiseSource(0)
    src.rng = type("R", (), {"random": lambda self, size=None: 0.0 if size is None else np.zeros(size)})()
    assert math.isfinite(src.logistic())
    assert np.all(np.isfinite(src.logistic(5)))


def test_logistic_transform_fixed_points():
    assert logistic_from_uniform(0.5) == 0.0
    e = math.e
    assert logistic_from_uniform(e / (1 + e)) == pytest.approx(1.0, abs=1e-14)


def test_logistic_median_monte_carlo():
    draws = sample_logistic(NoiseSource(3), N)
    assert abs(np.median(draws)) < 0.02
    assert np.all(np.isfinite(draws))


def test_sigmoid_temp_values():
    for lam in (1.0, 0.2, 0.05, 3.0):
        assert sigmoid_temp(0.0, lam) == 0.5
    assert sigmoid_temp(2.0, 1.0) == pytest.approx(0.8807970779778823, abs=1e-15)
    eps = 1.0 - sigmoid_temp(1.0, 0.05)
    assert 0.0 < eps < 1e-8


@pytest.mark.parametrize("lam", [0.0, -1.0, math.inf, math.nan])
def test_sigmoid_temp_rejects_bad_lambda(lam):
    with pytest.raises(ValidationError):
        sigmoid_temp(0.3, lam)


@given(st.floats(-50, 50), st.floats(0.01, 10))
def test_sigmoid_symmetry(x, lam):
    assert sigmoid_temp(x, lam) + sigmoid_temp(-x, lam) == pytest.approx(1.0, abs=1e-12)


@given(st.floats(-20, 20), st.floats(1e-3, 20), st.floats(0.05, 5))
def test_sigmoid_monotone(x, dx, lam):
    assert sigmoid_temp(x + dx, lam) >= sigmoid_temp(x, lam)


def test_emit_prob_values():
    assert emit_prob(0.0, 1.0) == 0.5
    assert emit_prob(math.log(3.0), 1.0) == pytest.approx(0.75, abs=1e-15)


@given(st.floats(-10, 10))
def test_emit_prob_recovers_alpha(x):
    a1 = emit_prob(x, 1.0)
    assert a1 / (1.0 - a1) == pytest.approx(math.exp(x), rel=1e-9)


@given(st.floats(-30, 30), st.sampled_from(LAMBDAS))
def test_log_probs_are_complementary(x, lam):
    total = math.exp(log_emit_prob(x, lam)) + math.exp(log_shift_prob(x, lam))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_bernoulli_saturated():
    noise = NoiseSource(0)
    assert all(sample_bernoulli(1e3, noise) is EMIT for _ in range(1000))
    assert np.all(sample_bernoulli(1e3, noise, size=N) == int(EMIT))


@pytest.mark.parametrize("log_alpha,p", [(0.0, 0.5), (math.log(3.0), 0.75)])
def test_bernoulli_frequency(log_alpha, p):
    draws = sample_bernoulli(log_alpha, NoiseSource(11), size=N)
    freq = np.mean(draws == int(EMIT))
    assert abs(freq - p) <= three_sigma(p)


def test_bernoulli_scalar_matches_vector_stream():
    scalar = [int(sample_bernoulli(0.3, NoiseSource(5))) for _ in range(1)]
    vector = sample_bernoulli(0.3, NoiseSource(5), size=1)
    assert scalar == list(vector)


def test_bernoulli_tie_goes_to_emit(monkeypatch):
    noise = NoiseSource(0)
    monkeypatch.setattr(noise, "logistic", lambda size=None: 0.0)
    assert sample_bernoulli(0.0, noise) is EMIT


def test_binconcrete_params_validation():
    with pytest.raises(ValidationError):
        BinConcreteParams(math.inf, 1.0)
    with pytest.raises(ValidationError):
        BinConcreteParams(0.0, 0.0)


def test_binconcrete_sample_symmetry_point():
    for lam in LAMBDAS:
        assert binconcrete_from_logistic(BinConcreteParams(0.0, lam), 0.0) == 0.5


@pytest.mark.parametrize("lam", LAMBDAS)
def test_binconcrete_exceeds_half_with_logistic_cdf_probability(lam):
    log_alpha = math.log(3.0)
    x = binconcrete_sample(BinConcreteParams(log_alpha, lam), NoiseSource(21), N)
    p = 0.75
    assert abs(np.mean(x > 0.5) - p) <= three_sigma(p)


def test_binconcrete_uniform_at_unit_alpha_and_temperature():
    x = binconcrete_sample(BinConcreteParams(0.0, 1.0), NoiseSource(4), N)
    res = stats.kstest(x, "uniform")
    assert res.statistic < 1.628 / math.sqrt(N)  # 1% asymptotic critical value


def test_log_density_unit_case_is_zero():
    xs = np.linspace(1e-6, 1 - 1e-6, 2001)
    np.testing.assert_allclose(binconcrete_log_density(xs, BinConcreteParams(0.0, 1.0)), 0.0, atol=1e-12)


def test_density_unit_case_symbolic():
    x = sympy.symbols("x", positive=True)
    alpha, lam = 1, 1
    expr = lam * alpha * x ** (-lam - 1) * (1 - x) ** (-lam - 1) / (alpha * x ** (-lam) + (1 - x) ** (-lam)) ** 2
    assert sympy.simplify(expr) == 1


@given(st.floats(0.01, 0.99), st.floats(-3, 3), st.sampled_from((1.0, 0.5, 0.2)))
def test_log_density_matches_linear_form(x, log_alpha, lam):
    got = math.exp(binconcrete_log_density(x, BinConcreteParams(log_alpha, lam)))
    assert got == pytest.approx(linear_density(x, math.exp(log_alpha), lam), rel=1e-9)


@given(st.floats(1e-6, 1 - 1e-6), st.floats(-4, 4), st.sampled_from(LAMBDAS))
def test_log_density_reflection(x, log_alpha, lam):
    left = binconcrete_log_density(x, BinConcreteParams(log_alpha, lam))
    right = binconcrete_log_density(1 - x, BinConcreteParams(-log_alpha, lam))
    assert left == pytest.approx(right, abs=1e-7)


@pytest.mark.parametrize("x", [0.0, 1.0, -0.1, 1.5])
def test_log_density_rejects_closed_interval(x):
    with pytest.raises(ValidationError):
        binconcrete_log_density(x, BinConcreteParams(0.0, 1.0))


def test_log_density_finite_near_endpoints():
    params = BinConcreteParams(0.7, 0.05)
    vals = binconcrete_log_density(np.array([1e-300, 1e-12, 1 - 1e-12]), params)
    assert np.all(np.isfinite(vals))


@pytest.mark.parametrize("alpha", [0.5, 2.0])
@pytest.mark.parametrize("lam", [1.0, 0.2])
def test_density_normalizes(alpha, lam):
    assert total_mass(math.log(alpha), lam) == pytest.approx(1.0, abs=1e-6)


@given(st.floats(0.02, 0.98), st.floats(-3, 3), st.sampled_from((1.0, 0.2)))
@settings(max_examples=50)
def test_cdf_derivative_is_density(x, log_alpha, lam):
    params = BinConcreteParams(log_alpha, lam)
    h = 1e-6
    fd = (binconcrete_cdf(x + h, params) - binconcrete_cdf(x - h, params)) / (2 * h)
    assert fd == pytest.approx(math.exp(binconcrete_log_density(x, params)), rel=1e-5)


@pytest.mark.parametrize("lam", LAMBDAS)
@pytest.mark.parametrize("log_alpha", [-0.8, 0.0, 1.1])
@pytest.mark.parametrize("x", [1e-6, 0.01, 0.2, 0.5])
def test_cdf_is_integral_of_density(lam, log_alpha, x):
    assert density_mass(log_alpha, lam, upper=x) == pytest.approx(
        binconcrete_cdf(x, BinConcreteParams(log_alpha, lam)), abs=1e-9
    )


def test_logit_sampler_shares_the_noise_stream():
    p = BinConcreteParams(0.4, 0.2)
    t = binconcrete_sample_logit(p, NoiseSource(5), 1000)
    x = binconcrete_sample(p, NoiseSource(5), 1000)
    np.testing.assert_allclose(1 / (1 + np.exp(-t)), x, rtol=1e-15)


@given(st.floats(0.001, 0.999), st.floats(-3, 3), st.sampled_from(LAMBDAS))
def test_logit_cdf_agrees_with_cdf(x, log_alpha, lam):
    p = BinConcreteParams(log_alpha, lam)
    t = math.log(x) - math.log1p(-x)
    assert binconcrete_logit_cdf(t, p) == pytest.approx(binconcrete_cdf(x, p), abs=1e-12)


@pytest.mark.parametrize("log_alpha", [0.0, math.log(3.0), -1.2])
def test_samples_follow_density_directly(log_alpha):
    # at lam = 1 float64 rounding of X is harmless, so test X itself
    params = BinConcreteParams(log_alpha, 1.0)
    x = binconcrete_sample(params, NoiseSource(100), N)
    assert stats.kstest(x, lambda v: binconcrete_cdf(v, params)).pvalue > 0.01


@pytest.mark.parametrize("lam", LAMBDAS)
@pytest.mark.parametrize("log_alpha", [0.0, math.log(3.0), -1.2])
def test_samples_follow_density(lam, log_alpha):
    # KS distance is invariant under the monotone map X = sigmoid(T)
    params = BinConcreteParams(log_alpha, lam)
    t = binconcrete_sample_logit(params, NoiseSource(100), N)
    assert stats.kstest(t, lambda v: binconcrete_logit_cdf(v, params)).pvalue > 0.01


def test_ks_rejects_wrong_location():
    t = binconcrete_sample_logit(BinConcreteParams(0.1, 0.2), NoiseSource(1), N)
    assert stats.kstest(t, lambda v: binconcrete_logit_cdf(v, BinConcreteParams(0.0, 0.2))).pvalue < 1e-3


def test_discretize():
    assert discretize(0.9) is EMIT
    assert discretize(0.1) is SHIFT
    assert discretize(0.5) is EMIT
    np.testing.assert_array_equal(discretize(np.array([0.2, 0.5, 0.7])), [1, 0, 0])


@pytest.mark.parametrize("lam", LAMBDAS)
def test_discretized_binconcrete_matches_bernoulli(lam):
    log_alpha = math.log(3.0)
    relaxed = discretize(binconcrete_sample(BinConcreteParams(log_alpha, lam), NoiseSource(31), N))
    direct = sample_bernoulli(log_alpha, NoiseSource(32), size=N)
    table = np.array([np.bincount(relaxed, minlength=2), np.bincount(direct, minlength=2)])
    _, pvalue, _, _ = stats.chi2_contingency(table)
    assert pvalue > 0.001
    assert abs(np.mean(relaxed == 0) - 0.75) <= three_sigma(0.75)


def test_grad_values():
    assert binconcrete_sample_grad(BinConcreteParams(0.0, 1.0), 0.0) == 0.25
    assert binconcrete_sample_grad(BinConcreteParams(0.0, 0.2), 0.0) == pytest.approx(1.25, abs=1e-15)


def test_grad_matches_finite_difference():
    rng = np.random.default_rng(8)
    h = 1e-5
    for _ in range(50):
        log_alpha, noise_value = rng.uniform(-2, 2, size=2)
        lam = rng.uniform(0.5, 2.0)
        up = binconcrete_from_logistic(BinConcreteParams(log_alpha + h, lam), noise_value)
        down = binconcrete_from_logistic(BinConcreteParams(log_alpha - h, lam), noise_value)
        fd = (up - down) / (2 * h)
        grad = binconcrete_sample_grad(BinConcreteParams(log_alpha, lam), noise_value)
        assert abs(grad - fd) / abs(fd) <= 1e-5


def test_same_seed_bit_identical_samples():
    p = BinConcreteParams(0.3, 0.2)
    a = binconcrete_sample(p, NoiseSource(99), 500)
    b = binconcrete_sample(p, NoiseSource(99), 500)
    assert a.tobytes() == b.tobytes()
