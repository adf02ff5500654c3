"""Tests for the hierarchical likelihood and the dual-optimizer estimator."""

import math

import numpy as np
import pytest
from scipy.stats import norm

import debtmod.estimation as est
from debtmod.data import ChoiceRecord, MPLSpec
from debtmod.estimation import (
    HierarchicalConfig,
    Normal,
    PopulationDistribution,
    estimate_all,
    estimate_subject,
    hierarchical_loglik,
    load_estimates,
    log_weighted_prior,
    logit_loglik,
    save_estimates,
    weighted_prior,
)
from debtmod.estimation import _SubjectProblem, _design_for
from debtmod.instruments import synthetic_mpl_catalog
from debtmod.model import PaymentStream, PreferenceParams, Prospect, UtilityConfig
from debtmod.simulation import default_population, simulate_choices

CFG = UtilityConfig()
POP = default_population()


def params(alpha=0.3, delta=0.01, gamma=1.05, lambda_=1.5, mu=0.1):
    return PreferenceParams(alpha=alpha, delta=delta, gamma=gamma, lambda_=lambda_, mu=mu)


def sure(x_t, x_T=0.0, t=0.0, T=6.0):
    return Prospect.sure(PaymentStream(x_t=x_t, x_T=x_T, t=t, T=T))


def single_row_mpl(option_a, option_b, mpl_id="m", n_rows=1):
    return {mpl_id: MPLSpec(id=mpl_id, rows=tuple((option_a, option_b) for _ in range(n_rows)))}


class TestWeightedPrior:
    def test_s_zero_is_one(self):
        for p in (params(), params(alpha=-1.0, gamma=2.0)):
            assert weighted_prior(p, POP, 0.0) == 1.0

    def test_s_one_is_density_product(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            p = params(
                alpha=rng.normal(0.3, 0.2),
                delta=rng.normal(0.01, 0.05),
                gamma=rng.normal(1.05, 0.2),
                lambda_=rng.uniform(0.5, 3.0),
            )
            # independent oracle: scipy normal pdfs
            expected = (
                norm.pdf(p.alpha, POP.alpha.mean, POP.alpha.sd)
                * norm.pdf(p.delta, POP.delta.mean, POP.delta.sd)
                * norm.pdf(p.gamma, POP.gamma.mean, POP.gamma.sd)
                * norm.pdf(p.lambda_, POP.lambda_.mean, POP.lambda_.sd)
            )
            assert weighted_prior(p, POP, 1.0) == pytest.approx(expected, rel=1e-12)

    def test_peak_density_product_at_mean(self):
        p = params(
            alpha=POP.alpha.mean, delta=POP.delta.mean, gamma=POP.gamma.mean, lambda_=POP.lambda_.mean
        )
        peak = np.prod([1.0 / (math.sqrt(2 * math.pi) * m.sd) for m in POP.marginals()])
        assert weighted_prior(p, POP, 1.0) == pytest.approx(peak, rel=1e-12)

    def test_log_space_consistency(self):
        p = params()
        for s in (0.0, 0.0139, 0.5, 1.0, 3.0):
            assert weighted_prior(p, POP, s) == pytest.approx(
                math.exp(log_weighted_prior(p, POP, s)), rel=1e-15
            )

    def test_negative_s_rejected(self):
        with pytest.raises(ValueError):
            log_weighted_prior(params(), POP, -0.1)


def hcfg(shrinkage=0.0, **kw):
    return HierarchicalConfig(population=POP, shrinkage=shrinkage, **kw)


class TestHierarchicalLoglik:
    def test_indifferent_single_choice(self):
        mpls = single_row_mpl(sure(10.0), sure(10.0))
        choices = [ChoiceRecord("s", "m", 0, 1)]
        ll = hierarchical_loglik(params(), choices, mpls, CFG, hcfg(0.0))
        assert ll == pytest.approx(math.log(0.5), abs=1e-12)

    def test_two_choice_scalar_case(self):
        # alpha=0, lambda=1 make value linear, so delta-U = ln 3 with mu = 1
        p = params(alpha=0.0, delta=0.0, lambda_=1.0, mu=1.0)
        mpls = single_row_mpl(sure(0.0), sure(math.log(3.0)), n_rows=2)
        choices = [ChoiceRecord("s", "m", 0, 1), ChoiceRecord("s", "m", 1, 0)]
        ll = hierarchical_loglik(p, choices, mpls, CFG, hcfg(0.0))
        assert ll == pytest.approx(math.log(0.75) + math.log(0.25), rel=1e-12)

    def test_s_zero_equals_plain_logit(self):
        rng = np.random.default_rng(42)
        mpls = synthetic_mpl_catalog()
        for trial in range(100):
            p = params(
                alpha=rng.uniform(-0.2, 0.8),
                delta=rng.uniform(-0.02, 0.05),
                gamma=rng.uniform(0.9, 1.2),
                lambda_=rng.uniform(0.8, 2.5),
                mu=rng.uniform(0.2, 2.0),
            )
            choices = simulate_choices(p, mpls, CFG, seed=trial, subject_id="s")
            ll = hierarchical_loglik(p, choices, mpls, CFG, hcfg(0.0))
            ref = logit_loglik(p, choices, mpls, CFG)
            assert ll == pytest.approx(ref, rel=1e-12, abs=1e-12)

    def test_weight_above_one_can_reject(self):
        # at the population mean the density product exceeds 1, so a strong
        # enough weight pushes F*w past 1 for a rejected near-certain row
        p = params(alpha=POP.alpha.mean, delta=POP.delta.mean, gamma=POP.gamma.mean,
                   lambda_=POP.lambda_.mean, mu=0.01)
        mpls = single_row_mpl(sure(0.0), sure(50.0))
        choices = [ChoiceRecord("s", "m", 0, 0)]  # rejects a dominant option
        assert hierarchical_loglik(p, choices, mpls, CFG, hcfg(1.0)) == -math.inf
        assert math.isfinite(hierarchical_loglik(p, choices, mpls, CFG, hcfg(0.0)))

    def test_empty_choices_rejected(self):
        with pytest.raises(ValueError):
            hierarchical_loglik(params(), [], {}, CFG, hcfg())


class TestLoglikGradient:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        mpls = synthetic_mpl_catalog()
        p0 = params()
        choices = simulate_choices(p0, mpls, CFG, seed=3, subject_id="s")
        design, chosen = _design_for(choices, mpls, CFG)
        # a diffuse prior keeps the density product below 1, so every random
        # point stays feasible even at material shrinkage
        diffuse = PopulationDistribution(
            alpha=Normal(0.30, 0.60),
            delta=Normal(0.010, 0.30),
            gamma=Normal(1.05, 0.60),
            lambda_=Normal(1.50, 0.80),
        )
        for s in (0.0, 0.0139, 0.3):
            problem = _SubjectProblem(
                design, chosen, HierarchicalConfig(population=diffuse, shrinkage=s)
            )
            for _ in range(25):
                theta = np.array(
                    [
                        rng.uniform(0.1, 0.6),
                        rng.uniform(-0.01, 0.04),
                        rng.uniform(0.9, 1.2),
                        rng.uniform(1.0, 2.2),
                        rng.uniform(0.15, 0.8),
                    ]
                )
                ll, grad = problem.loglik_and_grad(theta)
                assert math.isfinite(ll)
                assert ll == pytest.approx(problem.loglik(theta), rel=1e-12)
                for k in range(5):
                    h = 1e-6 * max(abs(theta[k]), 0.05)
                    hi, lo = theta.copy(), theta.copy()
                    hi[k] += h
                    lo[k] -= h
                    fd = (problem.loglik(hi) - problem.loglik(lo)) / (2 * h)
                    scale = max(abs(fd), abs(grad[k]), 1e-4)
                    assert abs(grad[k] - fd) / scale < 1e-5


@pytest.fixture(scope="module")
def small_subject():
    mpls = synthetic_mpl_catalog(n_blocks=2)
    truth = params()
    choices = simulate_choices(truth, mpls, CFG, seed=99, subject_id="subj")
    return truth, choices, mpls


class TestEstimateSubject:
    def test_recovery_within_five_percent(self):
        # 10,080 simulated choices: every parameter back within 5% relative error
        mpls = synthetic_mpl_catalog(n_blocks=112)
        truth = params()
        choices = simulate_choices(truth, mpls, CFG, seed=17, subject_id="subj")
        result = estimate_subject(choices, mpls, CFG, hcfg(0.0, n_starts=2))
        assert result.status == "consistent"
        for attr in ("alpha", "delta", "gamma", "lambda_", "mu"):
            got, want = getattr(result.params, attr), getattr(truth, attr)
            assert abs(got - want) / abs(want) < 0.05, (attr, got, want)

    def test_inverted_bounds_fail_with_diagnostic(self, small_subject):
        _, choices, mpls = small_subject
        cfg_bad = hcfg(alpha_bounds=(0.9, -0.5))
        result = estimate_subject(choices, mpls, CFG, cfg_bad)
        assert result.status == "failed"
        assert "inverted" in result.message

    def test_constant_choices_never_crash(self, small_subject):
        _, choices, mpls = small_subject
        all_a = [ChoiceRecord(c.subject_id, c.mpl_id, c.row_index, 0) for c in choices]
        result = estimate_subject(all_a, mpls, CFG, hcfg(n_starts=2))
        assert result.status in ("consistent", "discarded_inconsistent", "failed")

    def test_multiple_subjects_rejected(self, small_subject):
        _, choices, mpls = small_subject
        mixed = choices + [ChoiceRecord("other", choices[0].mpl_id, 0, 1)]
        with pytest.raises(ValueError, match="multiple subjects"):
            estimate_subject(mixed, mpls, CFG, hcfg())

    def test_order_invariance(self, small_subject):
        _, choices, mpls = small_subject
        rng = np.random.default_rng(0)
        shuffled = list(choices)
        rng.shuffle(shuffled)
        a = estimate_subject(choices, mpls, CFG, hcfg(n_starts=2))
        b = estimate_subject(shuffled, mpls, CFG, hcfg(n_starts=2))
        assert a.params == b.params
        assert a.log_likelihood == b.log_likelihood

    def test_disagreement_is_discarded(self, small_subject, monkeypatch):
        _, choices, mpls = small_subject
        real = est._run_optimizer
        results = {}

        def fake(problem, transform, starts, method, hconfig):
            r = real(problem, transform, starts, method, hconfig)
            if method == "bfgs":
                # displace one parameter by more than the 10% threshold
                p = r.params
                bumped = PreferenceParams(
                    alpha=p.alpha, delta=p.delta, gamma=p.gamma * 1.2, lambda_=p.lambda_, mu=p.mu
                )
                r = est.OptimizerResult(bumped, r.log_likelihood - 1.0, r.converged, r.n_evaluations)
            results[method] = r
            return r

        monkeypatch.setattr(est, "_run_optimizer", fake)
        out = estimate_subject(choices, mpls, CFG, hcfg(n_starts=1))
        assert out.status == "discarded_inconsistent"
        assert "gamma" in out.message


class TestShrinkageDirection:
    def test_estimate_moves_toward_prior_mean(self):
        # diffuse prior (density product below 1 everywhere, so F*w < 1 and
        # no hard rejections), centered away from the agent's true gamma
        prior = PopulationDistribution(
            alpha=Normal(0.30, 0.60),
            delta=Normal(0.010, 0.30),
            gamma=Normal(1.30, 0.60),
            lambda_=Normal(1.50, 0.80),
        )
        peak = np.prod([1.0 / (math.sqrt(2 * math.pi) * m.sd) for m in prior.marginals()])
        assert peak < 1.0
        # a noisy respondent keeps the likelihood unimodal in the noise scale;
        # grid points are spaced so the theoretical shift per step exceeds
        # optimizer resolution (adjacent default-grid points near 1e-4 move
        # gamma by well under 1e-6)
        mpls = synthetic_mpl_catalog(n_blocks=2)
        truth = params(gamma=1.0, mu=0.3)
        choices = simulate_choices(truth, mpls, CFG, seed=21, subject_id="subj")
        gaps = []
        for s in (1e-4, 0.1, 0.5, 1.0, 5.0, 25.0):
            cfg_s = HierarchicalConfig(population=prior, shrinkage=s, n_starts=3)
            result = estimate_subject(choices, mpls, CFG, cfg_s)
            assert result.status == "consistent"
            gaps.append(abs(result.params.gamma - prior.gamma.mean))
        for earlier, later in zip(gaps, gaps[1:]):
            assert later <= earlier + 1e-6
        assert gaps[-1] < 0.2 * gaps[0]  # the pull is material over the grid


class TestEstimateAll:
    def test_three_subjects_deterministic(self):
        mpls = synthetic_mpl_catalog(n_blocks=2)
        all_choices = []
        for i in range(3):
            p = params(gamma=1.0 + 0.03 * i)
            all_choices += simulate_choices(p, mpls, CFG, seed=[7, i], subject_id=f"s{i}")
        first, summary1 = estimate_all(all_choices, mpls, CFG, hcfg(n_starts=2))
        second, summary2 = estimate_all(all_choices, mpls, CFG, hcfg(n_starts=2), n_jobs=2)
        assert [e.params for e in first] == [e.params for e in second]
        assert summary1 == summary2
        assert summary1["n_subjects"] == 3
        assert len(first) == 3

    def test_failures_are_isolated(self, tmp_path):
        mpls = synthetic_mpl_catalog()
        good = simulate_choices(params(), mpls, CFG, seed=1, subject_id="good")
        bad = [ChoiceRecord("bad", "no_such_mpl", 0, 1)]
        estimates, summary = estimate_all(good + bad, mpls, CFG, hcfg(n_starts=2))
        by_id = {e.subject_id: e for e in estimates}
        assert by_id["bad"].status == "failed"
        assert "no_such_mpl" in by_id["bad"].message
        assert by_id["good"].status in ("consistent", "discarded_inconsistent")
        assert summary["counts"]["failed"] == 1

    def test_csv_round_trip(self, tmp_path):
        mpls = synthetic_mpl_catalog()
        choices = simulate_choices(params(), mpls, CFG, seed=2, subject_id="s0")
        estimates, _ = estimate_all(choices, mpls, CFG, hcfg(n_starts=2))
        path = tmp_path / "estimates.csv"
        save_estimates(path, estimates)
        again = load_estimates(path)
        assert len(again) == 1
        assert again[0].subject_id == estimates[0].subject_id
        assert again[0].status == estimates[0].status
        assert again[0].params == estimates[0].params

    def test_csv_round_trip_with_failed_rows(self, tmp_path):
        from debtmod.estimation import SubjectEstimate

        rows = [
            SubjectEstimate("ok", params(), -12.5, "consistent"),
            SubjectEstimate("broken", None, -math.inf, "failed"),
        ]
        path = tmp_path / "estimates.csv"
        save_estimates(path, rows)
        again = load_estimates(path)
        assert again[0].params == rows[0].params
        assert again[0].log_likelihood == -12.5
        assert again[1].params is None
        assert again[1].status == "failed"
