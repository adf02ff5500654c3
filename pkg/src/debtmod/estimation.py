"""Per-subject hierarchical maximum-likelihood estimation from binary choices.

The individual log-likelihood multiplies each row's logit choice probability
by a weighted population density w = (d(alpha)d(delta)d(gamma)d(lambda))^s
before taking logs:

    ll = sum_j [ c_j ln(F_j w) + (1 - c_j) ln(1 - F_j w) ]

With shrinkage s = 0 this is the plain logit log-likelihood; growing s pulls
estimates toward the population means.  Because w is a density power it can
exceed 1, in which case 1 - F w may be nonpositive; such points are treated
as hard rejections (log-likelihood -inf).

Every subject is maximized twice, with Nelder-Mead and with BFGS on
transformed coordinates (log for mu and lambda, a logistic squash for alpha,
identity for delta and gamma), each from multiple starts.  A subject is kept
only when the two optimizers agree within a relative tolerance on every
parameter; the higher-likelihood solution is reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import minimize
from scipy.special import expit, log_expit, logit

from .model import ChoiceDesign, PreferenceParams, UtilityConfig

__all__ = [
    "Normal",
    "PopulationDistribution",
    "HierarchicalConfig",
    "SubjectEstimate",
    "log_weighted_prior",
    "weighted_prior",
    "hierarchical_loglik",
    "logit_loglik",
    "estimate_subject",
    "estimate_all",
    "save_estimates",
    "load_estimates",
    "ESTIMATES_HEADER",
]

_LOG_2PI = math.log(2.0 * math.pi)

ESTIMATES_HEADER = ["subject_id", "alpha", "delta", "gamma", "lambda", "mu", "loglik", "status"]

STATUS_CONSISTENT = "consistent"
STATUS_DISCARDED = "discarded_inconsistent"
STATUS_FAILED = "failed"


@dataclass(frozen=True)
class Normal:
    mean: float
    sd: float

    def __post_init__(self):
        if not (self.sd > 0 and math.isfinite(self.sd) and math.isfinite(self.mean)):
            raise ValueError(f"need finite mean and sd > 0, got N({self.mean}, {self.sd})")

    def logpdf(self, x: float) -> float:
        z = (x - self.mean) / self.sd
        return -0.5 * z * z - math.log(self.sd) - 0.5 * _LOG_2PI


@dataclass(frozen=True)
class PopulationDistribution:
    """Independent normal population densities for (alpha, delta, gamma, lambda)."""

    alpha: Normal
    delta: Normal
    gamma: Normal
    lambda_: Normal

    def marginals(self):
        return (self.alpha, self.delta, self.gamma, self.lambda_)

    def means(self) -> np.ndarray:
        return np.array([m.mean for m in self.marginals()])

    def sds(self) -> np.ndarray:
        return np.array([m.sd for m in self.marginals()])


@dataclass(frozen=True)
class HierarchicalConfig:
    """Estimation settings: prior, shrinkage, bounds, optimizer controls."""

    population: PopulationDistribution
    shrinkage: float = 0.0
    consistency_threshold: float = 0.10
    alpha_bounds: tuple = (-5.0, 0.999)
    mu_start: float = 0.2
    n_starts: int = 5
    start_jitter: float = 0.5
    start_seed: int = 0
    simplex_tol: float = 1e-8
    gradient_tol: float = 1e-6
    max_iterations: int = 2000

    def __post_init__(self):
        if self.shrinkage < 0:
            raise ValueError("shrinkage must be nonnegative")
        if self.consistency_threshold <= 0:
            raise ValueError("consistency threshold must be positive")


@dataclass(frozen=True)
class OptimizerResult:
    params: PreferenceParams | None
    log_likelihood: float
    converged: bool
    n_evaluations: int


@dataclass(frozen=True)
class SubjectEstimate:
    subject_id: str
    params: PreferenceParams | None
    log_likelihood: float
    status: str
    optimizer_results: dict = field(default_factory=dict)
    message: str = ""


def log_weighted_prior(params: PreferenceParams, pop: PopulationDistribution, s: float) -> float:
    """ln of the shrinkage-weighted prior: s * sum of the four normal log densities."""
    if s < 0:
        raise ValueError("shrinkage must be nonnegative")
    values = (params.alpha, params.delta, params.gamma, params.lambda_)
    return s * sum(m.logpdf(x) for m, x in zip(pop.marginals(), values))


def weighted_prior(params: PreferenceParams, pop: PopulationDistribution, s: float) -> float:
    """(d(alpha) d(delta) d(gamma) d(lambda))^s at the parameter point."""
    return math.exp(log_weighted_prior(params, pop, s))


# --- likelihood core ---------------------------------------------------------


class _SubjectProblem:
    """Likelihood of one subject's choices, evaluated on packed theta vectors.

    theta order: (alpha, delta, gamma, lambda, mu).
    """

    def __init__(self, design: ChoiceDesign, chosen: np.ndarray, hconfig: HierarchicalConfig):
        self.design = design
        self.c = chosen.astype(bool)
        self.hcfg = hconfig
        self.pop_means = hconfig.population.means()
        self.pop_sds = hconfig.population.sds()
        self.n_evals = 0

    def _theta_ok(self, theta) -> bool:
        lo, hi = self.hcfg.alpha_bounds
        return (
            np.all(np.isfinite(theta))
            and lo <= theta[0] <= hi
            and theta[0] != 1.0
            and theta[1] > -1.0
            and theta[3] > 0.0
            and theta[4] > 0.0
        )

    def _log_w(self, theta) -> float:
        z = (theta[:4] - self.pop_means) / self.pop_sds
        logd = -0.5 * z @ z - np.sum(np.log(self.pop_sds)) - 2.0 * _LOG_2PI
        return self.hcfg.shrinkage * logd

    def _params(self, theta) -> PreferenceParams:
        return PreferenceParams(
            alpha=theta[0], delta=theta[1], gamma=theta[2], lambda_=theta[3], mu=theta[4]
        )

    def loglik(self, theta) -> float:
        self.n_evals += 1
        if not self._theta_ok(theta):
            return -math.inf
        with np.errstate(over="ignore", invalid="ignore"):
            du = self.design.delta_u(self._params(theta))
            if not np.all(np.isfinite(du)):
                return -math.inf
            xi = du / theta[4]
            log_p = log_expit(xi)
            log_w = self._log_w(theta)
            total = np.sum(log_p[self.c]) + np.count_nonzero(self.c) * log_w
            xi0 = xi[~self.c]
            if xi0.size:
                term0 = self._log_one_minus_fw(xi0, log_w)
                if term0 is None:
                    return -math.inf
                total += np.sum(term0)
        return float(total) if math.isfinite(total) else -math.inf

    @staticmethod
    def _log_one_minus_fw(xi0, log_w):
        """ln(1 - F w) rows; None when any argument is nonpositive."""
        if log_w == 0.0:
            return log_expit(-xi0)
        if log_w < 30.0:
            w = math.exp(log_w)
            arg0 = w * expit(-xi0) + (1.0 - w)
            if np.any(arg0 <= 0.0):
                return None
            return np.log(arg0)
        log_fw = log_expit(xi0) + log_w
        if np.any(log_fw >= 0.0):
            return None
        return np.log1p(-np.exp(log_fw))

    def loglik_and_grad(self, theta):
        """(log-likelihood, d/d theta).  Gradient is zero at rejected points."""
        self.n_evals += 1
        if not self._theta_ok(theta):
            return -math.inf, np.zeros(5)
        with np.errstate(over="ignore", invalid="ignore"):
            du, dgrad = self.design.delta_u_with_gradient(self._params(theta))
            if not (np.all(np.isfinite(du)) and np.all(np.isfinite(dgrad))):
                return -math.inf, np.zeros(5)
            mu = theta[4]
            xi = du / mu
            q = expit(-xi)
            p = expit(xi)
            log_w = self._log_w(theta)
            w = math.exp(log_w) if log_w < 30.0 else math.inf

            # d xi / d theta: model parameters through delta-U, mu directly
            dxi = np.empty((len(du), 5))
            dxi[:, :4] = dgrad / mu
            dxi[:, 4] = -xi / mu
            dlogw = np.zeros(5)
            dlogw[:4] = -self.hcfg.shrinkage * (theta[:4] - self.pop_means) / self.pop_sds**2

            c = self.c
            total = np.sum(log_expit(xi[c])) + np.count_nonzero(c) * log_w
            grad = (q[c, None] * dxi[c]).sum(axis=0) + np.count_nonzero(c) * dlogw

            if np.any(~c):
                xi0, q0, p0 = xi[~c], q[~c], p[~c]
                term0 = self._log_one_minus_fw(xi0, log_w)
                if term0 is None:
                    return -math.inf, np.zeros(5)
                total += np.sum(term0)
                if log_w == 0.0:
                    grad += (-p0[:, None] * dxi[~c]).sum(axis=0)
                else:
                    wp = np.exp(log_w + log_expit(xi0))
                    arg0 = w * q0 + (1.0 - w) if math.isfinite(w) else -np.expm1(log_w + log_expit(xi0))
                    inner = dlogw[None, :] + q0[:, None] * dxi[~c]
                    grad += (-(wp / arg0)[:, None] * inner).sum(axis=0)
        if not math.isfinite(total):
            return -math.inf, np.zeros(5)
        return float(total), grad


def _design_for(choices, mpls, config: UtilityConfig):
    """Canonically ordered design and chosen vector for one subject's records."""
    ordered = sorted(choices, key=lambda r: (r.mpl_id, r.row_index))
    rows = []
    for rec in ordered:
        if rec.mpl_id not in mpls:
            raise ValueError(f"choice references unknown MPL {rec.mpl_id!r}")
        mpl = mpls[rec.mpl_id]
        if not 0 <= rec.row_index < len(mpl):
            raise ValueError(f"row_index {rec.row_index} out of range for MPL {rec.mpl_id!r}")
        rows.append(mpl.rows[rec.row_index])
    chosen = np.array([r.chosen for r in ordered])
    return ChoiceDesign(rows, config), chosen


def hierarchical_loglik(params, choices, mpls, config, hconfig) -> float:
    """Hierarchical log-likelihood of one subject's choices at a parameter point."""
    if not choices:
        raise ValueError("need at least one choice")
    design, chosen = _design_for(choices, mpls, config)
    theta = np.array([params.alpha, params.delta, params.gamma, params.lambda_, params.mu])
    return _SubjectProblem(design, chosen, hconfig).loglik(theta)


def logit_loglik(params, choices, mpls, config) -> float:
    """Plain logit log-likelihood (no population weighting)."""
    design, chosen = _design_for(choices, mpls, config)
    xi = design.delta_u(params) / params.mu
    c = chosen.astype(bool)
    return float(np.sum(log_expit(xi[c])) + np.sum(log_expit(-xi[~c])))


# --- coordinate transform -----------------------------------------------------


class _Transform:
    """Free coordinates z <-> theta: squash alpha, log lambda and mu."""

    def __init__(self, alpha_bounds):
        self.lo, self.hi = alpha_bounds

    def to_theta(self, z) -> np.ndarray:
        theta = np.empty(5)
        with np.errstate(over="ignore"):  # inf is rejected downstream
            theta[0] = self.lo + (self.hi - self.lo) * expit(z[0])
            theta[1] = z[1]
            theta[2] = z[2]
            theta[3] = np.exp(z[3])
            theta[4] = np.exp(z[4])
        return theta

    def to_z(self, theta) -> np.ndarray:
        frac = (theta[0] - self.lo) / (self.hi - self.lo)
        frac = min(max(frac, 1e-12), 1.0 - 1e-12)
        return np.array(
            [logit(frac), theta[1], theta[2], math.log(theta[3]), math.log(theta[4])]
        )

    def dtheta_dz(self, z, theta) -> np.ndarray:
        sig = expit(z[0])
        return np.array([(self.hi - self.lo) * sig * (1.0 - sig), 1.0, 1.0, theta[3], theta[4]])


# --- optimization --------------------------------------------------------------


def _starting_points(hconfig: HierarchicalConfig, transform: _Transform) -> list[np.ndarray]:
    pop = hconfig.population
    theta0 = np.array(
        [
            min(max(pop.alpha.mean, transform.lo + 1e-6), transform.hi - 1e-6),
            pop.delta.mean,
            pop.gamma.mean,
            max(pop.lambda_.mean, 1e-3),
            hconfig.mu_start,
        ]
    )
    z0 = transform.to_z(theta0)
    starts = [z0]
    rng = np.random.default_rng(hconfig.start_seed)
    for _ in range(max(0, hconfig.n_starts - 1)):
        starts.append(z0 + hconfig.start_jitter * rng.standard_normal(5))
    return starts


_PENALTY = 1e15  # finite stand-in for -inf, keeps simplex and line search sane


def _run_optimizer(problem, transform, starts, method, hconfig) -> OptimizerResult:
    best_theta, best_ll, any_success = None, -math.inf, False
    evals_before = problem.n_evals
    for z0 in starts:
        if method == "nelder_mead":

            def neg(z):
                ll = problem.loglik(transform.to_theta(z))
                return -ll if math.isfinite(ll) else _PENALTY

            res = minimize(
                neg,
                z0,
                method="Nelder-Mead",
                options={
                    "xatol": hconfig.simplex_tol,
                    "fatol": hconfig.simplex_tol,
                    "maxiter": hconfig.max_iterations,
                    "maxfev": 4 * hconfig.max_iterations,
                },
            )
        else:

            def neg_with_grad(z):
                theta = transform.to_theta(z)
                ll, grad_theta = problem.loglik_and_grad(theta)
                if not math.isfinite(ll):
                    return _PENALTY, np.zeros(5)
                return -ll, -grad_theta * transform.dtheta_dz(z, theta)

            res = minimize(
                neg_with_grad,
                z0,
                jac=True,
                method="BFGS",
                options={"gtol": hconfig.gradient_tol, "maxiter": hconfig.max_iterations},
            )
        theta = transform.to_theta(res.x)
        ll = problem.loglik(theta)
        if math.isfinite(ll):
            any_success = True
            if ll > best_ll:
                best_ll, best_theta = ll, theta
    params = None
    if best_theta is not None:
        params = PreferenceParams(
            alpha=float(best_theta[0]),
            delta=float(best_theta[1]),
            gamma=float(best_theta[2]),
            lambda_=float(best_theta[3]),
            mu=float(best_theta[4]),
        )
    return OptimizerResult(
        params=params,
        log_likelihood=best_ll,
        converged=any_success,
        n_evaluations=problem.n_evals - evals_before,
    )


def _relative_gap(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    if scale == 0.0:
        return 0.0
    return abs(a - b) / scale


def estimate_subject(choices, mpls, config, hconfig) -> SubjectEstimate:
    """Estimate one subject, cross-checking Nelder-Mead against BFGS.

    Status is ``consistent`` when every parameter agrees within the relative
    consistency threshold (the higher-likelihood solution is reported),
    ``discarded_inconsistent`` when the optimizers disagree, and ``failed``
    when no optimizer produced a finite maximum.
    """
    if not choices:
        raise ValueError("need at least one choice record")
    subject_ids = {c.subject_id for c in choices}
    if len(subject_ids) != 1:
        raise ValueError(f"choices span multiple subjects: {sorted(subject_ids)}")
    subject_id = subject_ids.pop()

    lo, hi = hconfig.alpha_bounds
    if not lo < hi:
        return SubjectEstimate(
            subject_id=subject_id,
            params=None,
            log_likelihood=-math.inf,
            status=STATUS_FAILED,
            message=f"empty admissible region: alpha bounds ({lo}, {hi}) are inverted",
        )

    try:
        design, chosen = _design_for(choices, mpls, config)
    except ValueError as exc:
        return SubjectEstimate(
            subject_id=subject_id,
            params=None,
            log_likelihood=-math.inf,
            status=STATUS_FAILED,
            message=str(exc),
        )

    transform = _Transform(hconfig.alpha_bounds)
    starts = _starting_points(hconfig, transform)
    results = {}
    for method in ("nelder_mead", "bfgs"):
        problem = _SubjectProblem(design, chosen, hconfig)
        results[method] = _run_optimizer(problem, transform, starts, method, hconfig)

    nm, qn = results["nelder_mead"], results["bfgs"]
    if nm.params is None and qn.params is None:
        return SubjectEstimate(
            subject_id=subject_id,
            params=None,
            log_likelihood=-math.inf,
            status=STATUS_FAILED,
            optimizer_results=results,
            message="both optimizers failed to find a finite maximum",
        )
    if nm.params is None or qn.params is None:
        ok = nm if nm.params is not None else qn
        return SubjectEstimate(
            subject_id=subject_id,
            params=ok.params,
            log_likelihood=ok.log_likelihood,
            status=STATUS_DISCARDED,
            optimizer_results=results,
            message="only one optimizer converged; agreement not verifiable",
        )

    gaps = {
        name: _relative_gap(getattr(nm.params, attr), getattr(qn.params, attr))
        for name, attr in zip(
            ("alpha", "delta", "gamma", "lambda", "mu"),
            ("alpha", "delta", "gamma", "lambda_", "mu"),
        )
    }
    best = nm if nm.log_likelihood >= qn.log_likelihood else qn
    if all(g <= hconfig.consistency_threshold for g in gaps.values()):
        status, message = STATUS_CONSISTENT, ""
    else:
        worst = max(gaps, key=gaps.get)
        status = STATUS_DISCARDED
        message = f"optimizers disagree on {worst} by {gaps[worst]:.1%}"
    return SubjectEstimate(
        subject_id=subject_id,
        params=best.params,
        log_likelihood=best.log_likelihood,
        status=status,
        optimizer_results=results,
        message=message,
    )


def estimate_all(choices, mpls, config, hconfig, n_jobs: int = 1):
    """Estimate every subject in a choice dataset.

    Returns (estimates sorted by subject_id, summary).  Per-subject failures
    are isolated in their estimate's status; the run always completes.
    """
    by_subject: dict[str, list] = {}
    for rec in choices:
        by_subject.setdefault(rec.subject_id, []).append(rec)
    subject_ids = sorted(by_subject)
    estimates = Parallel(n_jobs=n_jobs)(
        delayed(estimate_subject)(by_subject[sid], mpls, config, hconfig) for sid in subject_ids
    )
    estimates = sorted(estimates, key=lambda e: e.subject_id)

    counts = {STATUS_CONSISTENT: 0, STATUS_DISCARDED: 0, STATUS_FAILED: 0}
    gammas = []
    for est in estimates:
        counts[est.status] += 1
        if est.status == STATUS_CONSISTENT:
            gammas.append(est.params.gamma)
    summary = {
        "n_subjects": len(estimates),
        "counts": counts,
        "gamma_min": float(np.min(gammas)) if gammas else None,
        "gamma_median": float(np.median(gammas)) if gammas else None,
        "gamma_max": float(np.max(gammas)) if gammas else None,
        "share_debt_averse": float(np.mean([g > 1.0 for g in gammas])) if gammas else None,
    }
    return estimates, summary


def predicted_choice_accuracy(params_by_subject, choices, mpls, config) -> float:
    """Share of observed binary choices whose sign of U(B)-U(A) is predicted.

    Used to compare survey-module-based parameter predictions against fully
    structural estimates on the same choice data.  Subjects without a
    parameter vector are skipped; indifferent rows count as predicting B.
    """
    by_subject: dict[str, list] = {}
    for rec in choices:
        by_subject.setdefault(rec.subject_id, []).append(rec)
    hits = total = 0
    for sid, recs in sorted(by_subject.items()):
        params = params_by_subject.get(sid)
        if params is None:
            continue
        design, chosen = _design_for(recs, mpls, config)
        predicted = (design.delta_u(params) >= 0.0).astype(int)
        hits += int(np.sum(predicted == chosen))
        total += len(recs)
    if total == 0:
        raise ValueError("no overlapping subjects between parameters and choices")
    return hits / total


def save_estimates(path, estimates) -> None:
    """Write estimates as CSV: subject_id,alpha,delta,gamma,lambda,mu,loglik,status."""
    lines = [",".join(ESTIMATES_HEADER)]
    for est in estimates:
        if est.params is None:
            fields = [est.subject_id, "", "", "", "", "", "", est.status]
        else:
            p = est.params
            fields = [
                est.subject_id,
                repr(p.alpha),
                repr(p.delta),
                repr(p.gamma),
                repr(p.lambda_),
                repr(p.mu),
                repr(est.log_likelihood),
                est.status,
            ]
        lines.append(",".join(fields))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_estimates(path) -> list[SubjectEstimate]:
    """Read an estimates CSV written by save_estimates."""
    estimates = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header != ESTIMATES_HEADER:
            raise ValueError(f"{path}: unexpected estimates header {header}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 8:
                raise ValueError(f"{path}:{lineno}: expected 8 fields")
            sid, a, d, g, l, m, ll, status = parts
            params = None
            loglik = -math.inf
            if a:
                params = PreferenceParams(
                    alpha=float(a), delta=float(d), gamma=float(g), lambda_=float(l), mu=float(m)
                )
                loglik = float(ll)
            estimates.append(
                SubjectEstimate(
                    subject_id=sid, params=params, log_likelihood=loglik, status=status
                )
            )
    return estimates
