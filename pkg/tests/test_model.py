"""Unit and property tests for the structural utility model."""

import math

import numpy as np
import pytest

from debtmod.model import (
    ChoiceDesign,
    PaymentStream,
    PreferenceParams,
    Prospect,
    UtilityConfig,
    choice_probability,
    choice_probability_gradient,
    debt_cost,
    delta_utility,
    discount,
    gain_utility,
    is_debt_contract,
    prospect_utility,
    value,
)

CFG = UtilityConfig(epsilon=1.0)


def params(alpha=0.3, delta=0.01, gamma=1.05, lambda_=1.5, mu=0.1):
    return PreferenceParams(alpha=alpha, delta=delta, gamma=gamma, lambda_=lambda_, mu=mu)


def stream(x_t, x_T, t=0.0, T=6.0):
    return PaymentStream(x_t=x_t, x_T=x_T, t=t, T=T)


class TestGainUtility:
    def test_zero_is_zero(self):
        for alpha in (-0.5, 0.0, 0.37, 0.9):
            for eps in (0.5, 1.0, 3.0):
                assert gain_utility(0.0, alpha, eps) == 0.0

    def test_scalar_value(self):
        # independent evaluation: ((3+1)^0.5 - 1^0.5) / 0.5 = (2 - 1) / 0.5
        assert gain_utility(3.0, 0.5, 1.0) == pytest.approx(2.0, abs=1e-12)

    def test_alpha_zero_is_identity(self):
        assert gain_utility(10.0, 0.0, 1.0) == pytest.approx(10.0, abs=1e-12)

    def test_rejects_bad_domain(self):
        with pytest.raises(ValueError):
            gain_utility(-1.0, 0.5, 1.0)
        with pytest.raises(ValueError):
            gain_utility(1.0, 0.5, 0.0)
        with pytest.raises(ValueError):
            gain_utility(1.0, 1.0, 1.0)

    def test_strictly_increasing_and_concave(self):
        xs = np.linspace(0.0, 200.0, 401)
        for alpha in (0.2, 0.5, 0.8):
            u = np.array([gain_utility(x, alpha, 1.0) for x in xs])
            assert np.all(np.diff(u) > 0)
            assert np.all(np.diff(u, 2) < 0)


class TestValue:
    def test_reference_point(self):
        assert value(0.0, 0.5, 2.0, 1.0) == 0.0

    def test_loss_side(self):
        # -lambda * u(3) with u(3) = 2 under alpha=0.5, eps=1
        assert value(-3.0, 0.5, 2.0, 1.0) == pytest.approx(-4.0, abs=1e-12)

    def test_linear_case_is_odd(self):
        assert value(-5.0, 0.0, 1.0, 1.0) == pytest.approx(-5.0, abs=1e-12)

    def test_sign_and_loss_aversion_identity(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            x = rng.uniform(0.1, 500.0)
            alpha = rng.uniform(-0.5, 0.95)
            lam = rng.uniform(0.2, 4.0)
            eps = rng.uniform(0.2, 3.0)
            vp = value(x, alpha, lam, eps)
            vm = value(-x, alpha, lam, eps)
            assert vp > 0 and vm < 0
            assert vm == pytest.approx(-lam * vp, rel=1e-14)


class TestDiscount:
    def test_zero_delay(self):
        assert discount(0.0, 0.3) == 1.0

    def test_scalar_value(self):
        assert discount(1.0, 0.1) == pytest.approx(1.0 / 1.1, abs=1e-15)

    def test_zero_rate(self):
        assert discount(2.0, 0.0) == 1.0

    def test_decreasing_in_delay(self):
        taus = np.linspace(0, 24, 49)
        w = np.array([discount(t, 0.05) for t in taus])
        assert np.all(np.diff(w) < 0)

    def test_rejects_delta_at_minus_one(self):
        with pytest.raises(ValueError):
            discount(1.0, -1.0)


class TestDebtIndicatorAndCost:
    def test_indicator(self):
        assert is_debt_contract(stream(100.0, -110.0))
        assert not is_debt_contract(stream(-50.0, 60.0))
        assert not is_debt_contract(stream(0.0, -10.0))

    def test_gamma_one_is_neutral(self):
        assert debt_cost(stream(100.0, -110.0), params(gamma=1.0), CFG) == 0.0

    def test_scalar_value(self):
        # (1 - 1.05) * 1 * v(-110) with v(-110) = -110 under alpha=0, lambda=1
        p = params(alpha=0.0, delta=0.0, gamma=1.05, lambda_=1.0)
        assert debt_cost(stream(100.0, -110.0), p, CFG) == pytest.approx(5.5, abs=1e-12)

    def test_saving_contract_costless(self):
        for gamma in (0.5, 1.0, 2.0):
            assert debt_cost(stream(-50.0, 60.0), params(gamma=gamma), CFG) == 0.0

    def test_positive_for_averse_on_debt(self):
        p = params(gamma=1.2)
        assert debt_cost(stream(100.0, -110.0), p, CFG) > 0


class TestProspectUtility:
    def test_degenerate_zero(self):
        zero = Prospect.sure(stream(0.0, 0.0))
        assert prospect_utility(zero, params(), CFG) == 0.0

    def test_debt_neutral_reduces_to_discounted_value(self):
        p = params(gamma=1.0)
        s = stream(100.0, -110.0)
        expected = discount(0.0, p.delta) * value(100.0, p.alpha, p.lambda_, 1.0) + discount(
            6.0, p.delta
        ) * value(-110.0, p.alpha, p.lambda_, 1.0)
        assert prospect_utility(Prospect.sure(s), p, CFG) == pytest.approx(expected, rel=1e-14)

    def test_linear_in_probabilities(self):
        s1, s2 = stream(100.0, -110.0), stream(-50.0, 60.0)
        p = params()
        mix = Prospect([(s1, 0.5), (s2, 0.5)])
        mean = 0.5 * (
            prospect_utility(Prospect.sure(s1), p, CFG) + prospect_utility(Prospect.sure(s2), p, CFG)
        )
        assert prospect_utility(mix, p, CFG) == pytest.approx(mean, rel=1e-14)

    def test_debt_aversion_lowers_debt_utility(self):
        debt = Prospect.sure(stream(100.0, -110.0))
        saving = Prospect.sure(stream(-50.0, 60.0))
        u_low = prospect_utility(debt, params(gamma=1.0), CFG)
        u_high = prospect_utility(debt, params(gamma=1.1), CFG)
        assert u_low > u_high
        assert prospect_utility(saving, params(gamma=1.0), CFG) == prospect_utility(
            saving, params(gamma=1.1), CFG
        )

    def test_prospect_validation(self):
        with pytest.raises(ValueError):
            Prospect([])
        with pytest.raises(ValueError):
            Prospect([(stream(1.0, 1.0), 0.6), (stream(2.0, 1.0), 0.6)])
        with pytest.raises(ValueError):
            Prospect([(stream(1.0, 1.0), 1.5), (stream(2.0, 1.0), -0.5)])


class TestChoiceProbability:
    def test_indifference(self):
        s = Prospect.sure(stream(10.0, 10.0))
        assert choice_probability(s, s, params(), CFG) == pytest.approx(0.5, abs=1e-15)

    def test_logit_at_log3(self):
        # Pick two sure amounts whose utility gap over mu equals ln 3.
        p = params(alpha=0.0, delta=0.0, lambda_=1.0, mu=1.0)
        a = Prospect.sure(stream(0.0, 0.0))
        b = Prospect.sure(stream(math.log(3.0), 0.0))
        assert choice_probability(a, b, p, CFG) == pytest.approx(0.75, rel=1e-12)

    def test_dominance_limit(self):
        p = params(alpha=0.0, delta=0.0, lambda_=1.0, mu=1e-9)
        a = Prospect.sure(stream(0.0, 0.0))
        b = Prospect.sure(stream(100.0, 0.0))
        assert choice_probability(a, b, p, CFG) == pytest.approx(1.0, abs=1e-12)

    def test_complement_identity(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            pa = Prospect.sure(stream(rng.uniform(-80, 120), rng.uniform(-120, 80)))
            pb = Prospect.sure(stream(rng.uniform(-80, 120), rng.uniform(-120, 80)))
            p = params(mu=rng.uniform(0.05, 2.0))
            total = choice_probability(pa, pb, p, CFG) + choice_probability(pb, pa, p, CFG)
            assert total == pytest.approx(1.0, abs=1e-12)

    def test_monotone_in_option_b_utility(self):
        p = params(alpha=0.0, delta=0.0, lambda_=1.0)
        a = Prospect.sure(stream(5.0, 0.0))
        probs = [
            choice_probability(a, Prospect.sure(stream(x, 0.0)), p, CFG) for x in (1.0, 4.0, 5.5, 9.0)
        ]
        assert probs == sorted(probs)


def _random_choice_pair(rng):
    def rnd_stream():
        kind = rng.integers(0, 3)
        if kind == 0:  # debt-like
            return stream(rng.uniform(20, 120), -rng.uniform(20, 150))
        if kind == 1:  # saving-like
            return stream(-rng.uniform(20, 120), rng.uniform(20, 150))
        return stream(rng.uniform(-50, 80), rng.uniform(-50, 80))

    def rnd_prospect():
        if rng.random() < 0.5:
            return Prospect.sure(rnd_stream())
        q = rng.uniform(0.2, 0.8)
        return Prospect([(rnd_stream(), q), (rnd_stream(), 1.0 - q)])

    return rnd_prospect(), rnd_prospect()


def _random_params(rng):
    return params(
        alpha=rng.uniform(-0.5, 0.9),
        delta=rng.uniform(-0.05, 0.2),
        gamma=rng.uniform(0.8, 1.3),
        lambda_=rng.uniform(0.5, 3.0),
        mu=rng.uniform(0.05, 1.0),
    )


class TestGradient:
    def test_matches_central_differences(self):
        rng = np.random.default_rng(42)
        checked = 0
        for _ in range(60):
            a, b = _random_choice_pair(rng)
            p = _random_params(rng)
            # keep the comparison informative: rescale mu so the logit is not
            # saturated at this particular pair
            du = delta_utility(a, b, p, CFG)
            p = params(alpha=p.alpha, delta=p.delta, gamma=p.gamma, lambda_=p.lambda_,
                       mu=max(p.mu, abs(du) / 3.0, 1e-6))
            grad = choice_probability_gradient(a, b, p, CFG)
            fields = ("alpha", "delta", "gamma", "lambda_", "mu")
            base = {f: getattr(p, f) for f in fields}
            for k, f in enumerate(fields):
                h = 1e-6 * max(1.0, abs(base[f]))
                hi = PreferenceParams(**{**base, f: base[f] + h})
                lo = PreferenceParams(**{**base, f: base[f] - h})
                fd = (choice_probability(a, b, hi, CFG) - choice_probability(a, b, lo, CFG)) / (2 * h)
                scale = max(abs(fd), abs(grad[k]))
                # below ~1e-7 the central difference is dominated by rounding
                # noise (P carries ~1e-16 absolute error, h = 1e-6)
                if scale > 1e-7:
                    assert abs(grad[k] - fd) / scale < 1e-5
                    checked += 1
        assert checked > 100


class TestChoiceDesign:
    def test_matches_scalar_path(self):
        rng = np.random.default_rng(3)
        rows = [_random_choice_pair(rng) for _ in range(40)]
        design = ChoiceDesign(rows, CFG)
        for _ in range(10):
            p = _random_params(rng)
            du_vec = design.delta_u(p)
            du_ref = np.array([delta_utility(a, b, p, CFG) for a, b in rows])
            np.testing.assert_allclose(du_vec, du_ref, rtol=1e-12, atol=1e-12)
            probs = design.choice_probabilities(p)
            ref = np.array([choice_probability(a, b, p, CFG) for a, b in rows])
            np.testing.assert_allclose(probs, ref, rtol=1e-12, atol=1e-15)

    def test_gradient_matches_scalar_gradient(self):
        rng = np.random.default_rng(5)
        rows = [_random_choice_pair(rng) for _ in range(25)]
        design = ChoiceDesign(rows, CFG)
        p = _random_params(rng)
        du, grads = design.delta_u_with_gradient(p)
        for i, (a, b) in enumerate(rows):
            full = choice_probability_gradient(a, b, p, CFG)
            xi = delta_utility(a, b, p, CFG) / p.mu
            fprime = 1.0 / (1.0 + math.exp(-xi)) * (1.0 / (1.0 + math.exp(xi)))
            # recover d(delta U) from the probability gradient
            if fprime > 1e-12:
                np.testing.assert_allclose(grads[i], full[:4] * p.mu / fprime, rtol=1e-8)


class TestStreamValidation:
    def test_time_ordering(self):
        with pytest.raises(ValueError):
            PaymentStream(x_t=1.0, x_T=1.0, t=6.0, T=6.0)
        with pytest.raises(ValueError):
            PaymentStream(x_t=1.0, x_T=1.0, t=-1.0, T=6.0)

    def test_finite_amounts(self):
        with pytest.raises(ValueError):
            PaymentStream(x_t=math.inf, x_T=0.0, t=0.0, T=1.0)

    def test_param_validation(self):
        with pytest.raises(ValueError):
            params(lambda_=0.0)
        with pytest.raises(ValueError):
            params(mu=-0.1)
        with pytest.raises(ValueError):
            params(alpha=1.0)
        with pytest.raises(ValueError):
            params(delta=-1.0)
