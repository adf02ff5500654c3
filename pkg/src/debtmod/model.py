"""Structural utility model for two-dated payment streams and logit choice.

A payment stream pays ``x_t`` at time ``t`` and ``x_T`` at time ``T`` (months).
Money utility is reference-dependent with curvature ``alpha``, loss aversion
``lambda_`` and a smoothing offset ``epsilon``:

    u(x)   = ((x + eps)^(1-a) - eps^(1-a)) / (1-a)         for x >= 0
    v(x)   = u(x) if x >= 0 else -lambda * u(-x)
    phi(t) = (1 + delta)^(-t)

Streams that pay now and repay later (``x_t > 0 and x_T < 0``) are debt
contracts and incur an extra cost ``(1 - gamma) * phi(T) * v(x_T)``, so
``gamma > 1`` penalizes holding debt beyond its discounted repayment value.
Choices between two prospects follow a logit rule with noise scale ``mu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

__all__ = [
    "PaymentStream",
    "Prospect",
    "PreferenceParams",
    "UtilityConfig",
    "GRADIENT_ORDER",
    "gain_utility",
    "value",
    "discount",
    "is_debt_contract",
    "debt_cost",
    "stream_utility",
    "prospect_utility",
    "delta_utility",
    "choice_probability",
    "choice_probability_gradient",
    "ChoiceDesign",
]

PROBABILITY_TOL = 1e-9

# Order of parameters in every gradient array produced by this module.
GRADIENT_ORDER = ("alpha", "delta", "gamma", "lambda", "mu")


@dataclass(frozen=True)
class PaymentStream:
    """Two-dated money stream: ``x_t`` at month ``t``, ``x_T`` at month ``T``."""

    x_t: float
    x_T: float
    t: float
    T: float

    def __post_init__(self):
        if not (math.isfinite(self.x_t) and math.isfinite(self.x_T)):
            raise ValueError("payment amounts must be finite")
        if not (0 <= self.t < self.T):
            raise ValueError(f"need T > t >= 0, got t={self.t}, T={self.T}")


@dataclass(frozen=True)
class Prospect:
    """Probabilistic mixture over payment streams.

    ``branches`` is a list of ``(PaymentStream, probability)`` pairs whose
    probabilities must sum to 1 within 1e-9.  Out-of-tolerance inputs are
    rejected rather than renormalized.
    """

    branches: tuple

    def __init__(self, branches):
        branches = tuple((stream, float(p)) for stream, p in branches)
        if not branches:
            raise ValueError("prospect needs at least one branch")
        for _, p in branches:
            if not (0.0 <= p <= 1.0):
                raise ValueError(f"branch probability {p} outside [0, 1]")
        total = sum(p for _, p in branches)
        if abs(total - 1.0) > PROBABILITY_TOL:
            raise ValueError(f"branch probabilities sum to {total}, not 1")
        object.__setattr__(self, "branches", branches)

    @classmethod
    def sure(cls, stream: PaymentStream) -> "Prospect":
        """Degenerate prospect paying ``stream`` with certainty."""
        return cls([(stream, 1.0)])


@dataclass(frozen=True)
class PreferenceParams:
    """Preference vector: curvature, discounting, debt aversion, loss aversion, noise."""

    alpha: float
    delta: float
    gamma: float
    lambda_: float
    mu: float

    def __post_init__(self):
        vals = (self.alpha, self.delta, self.gamma, self.lambda_, self.mu)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("preference parameters must be finite")
        if self.alpha == 1.0:
            raise ValueError("alpha = 1 is outside the admissible region")
        if self.delta <= -1.0:
            raise ValueError("delta must exceed -1")
        if self.lambda_ <= 0.0:
            raise ValueError("lambda must be positive")
        if self.mu <= 0.0:
            raise ValueError("mu must be positive")


@dataclass(frozen=True)
class UtilityConfig:
    """Utility offset keeping u finite and smooth at x=0 (u(0)=0 regardless)."""

    epsilon: float = 1.0

    def __post_init__(self):
        if not (self.epsilon > 0.0 and math.isfinite(self.epsilon)):
            raise ValueError("epsilon must be a positive finite number")


def gain_utility(x: float, alpha: float, epsilon: float) -> float:
    """Utility of a nonnegative amount: ((x+eps)^(1-a) - eps^(1-a)) / (1-a)."""
    if x < 0:
        raise ValueError("gain_utility requires x >= 0")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if alpha == 1.0:
        raise ValueError("alpha = 1 is outside the admissible region")
    a = 1.0 - alpha
    return ((x + epsilon) ** a - epsilon**a) / a


def value(x: float, alpha: float, lambda_: float, epsilon: float) -> float:
    """Reference-dependent money value: u(x) for gains, -lambda*u(-x) for losses."""
    if x >= 0:
        return gain_utility(x, alpha, epsilon)
    return -lambda_ * gain_utility(-x, alpha, epsilon)


def discount(tau: float, delta: float) -> float:
    """Exponential discount weight 1/(1+delta)^tau for a delay of tau months."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if delta <= -1.0:
        raise ValueError("delta must exceed -1")
    return (1.0 + delta) ** (-tau)


def is_debt_contract(stream: PaymentStream) -> bool:
    """True iff the stream pays now and repays later (x_t > 0 and x_T < 0)."""
    return stream.x_t > 0 and stream.x_T < 0


def debt_cost(stream: PaymentStream, params: PreferenceParams, config: UtilityConfig) -> float:
    """Extra cost of holding a debt contract: (1-gamma)*phi(T)*v(x_T), else 0."""
    if not is_debt_contract(stream):
        return 0.0
    return (
        (1.0 - params.gamma)
        * discount(stream.T, params.delta)
        * value(stream.x_T, params.alpha, params.lambda_, config.epsilon)
    )


def stream_utility(stream: PaymentStream, params: PreferenceParams, config: UtilityConfig) -> float:
    """Discounted value of both dated payments net of the debt cost."""
    v_t = value(stream.x_t, params.alpha, params.lambda_, config.epsilon)
    v_T = value(stream.x_T, params.alpha, params.lambda_, config.epsilon)
    base = discount(stream.t, params.delta) * v_t + discount(stream.T, params.delta) * v_T
    return base - debt_cost(stream, params, config)


def prospect_utility(prospect: Prospect, params: PreferenceParams, config: UtilityConfig) -> float:
    """Expected stream utility over the prospect's branches."""
    return sum(p * stream_utility(s, params, config) for s, p in prospect.branches)


def delta_utility(
    option_a: Prospect, option_b: Prospect, params: PreferenceParams, config: UtilityConfig
) -> float:
    """Utility advantage of option B: U(B) - U(A)."""
    return prospect_utility(option_b, params, config) - prospect_utility(option_a, params, config)


def choice_probability(
    option_a: Prospect, option_b: Prospect, params: PreferenceParams, config: UtilityConfig
) -> float:
    """Probability of choosing option B under the logit rule F((U(B)-U(A))/mu)."""
    if params.mu <= 0:
        raise ValueError("mu must be positive")
    xi = delta_utility(option_a, option_b, params, config) / params.mu
    return float(expit(xi))


# --- analytic parameter derivatives ---------------------------------------
#
# d/d(alpha) of u uses, with a = 1-alpha and y = x+eps:
#   du/dalpha = (u - (y^a ln y - eps^a ln eps)) / a
# which vanishes at x = 0 for every alpha.


def _gain_utility_dalpha(x: float, alpha: float, epsilon: float) -> float:
    a = 1.0 - alpha
    y = x + epsilon
    u = (y**a - epsilon**a) / a
    return (u - (y**a * math.log(y) - epsilon**a * math.log(epsilon))) / a


def _value_dalpha(x: float, alpha: float, lambda_: float, epsilon: float) -> float:
    if x >= 0:
        return _gain_utility_dalpha(x, alpha, epsilon)
    return -lambda_ * _gain_utility_dalpha(-x, alpha, epsilon)


def _value_dlambda(x: float, alpha: float, epsilon: float) -> float:
    return 0.0 if x >= 0 else -gain_utility(-x, alpha, epsilon)


def _stream_utility_gradient(stream, params, config):
    """d(stream utility)/d(alpha, delta, gamma, lambda)."""
    eps = config.epsilon
    phi_t = discount(stream.t, params.delta)
    phi_T = discount(stream.T, params.delta)
    # Folding the debt cost into the late payment leaves coefficient gamma on
    # phi(T)v(x_T) for debt contracts and 1 otherwise.
    coef = params.gamma if is_debt_contract(stream) else 1.0
    v_t = value(stream.x_t, params.alpha, params.lambda_, eps)
    v_T = value(stream.x_T, params.alpha, params.lambda_, eps)
    dphi_t = -stream.t * phi_t / (1.0 + params.delta)
    dphi_T = -stream.T * phi_T / (1.0 + params.delta)
    d_alpha = phi_t * _value_dalpha(stream.x_t, params.alpha, params.lambda_, eps) + coef * phi_T * _value_dalpha(
        stream.x_T, params.alpha, params.lambda_, eps
    )
    d_delta = dphi_t * v_t + coef * dphi_T * v_T
    d_gamma = phi_T * v_T if is_debt_contract(stream) else 0.0
    d_lambda = phi_t * _value_dlambda(stream.x_t, params.alpha, eps) + coef * phi_T * _value_dlambda(
        stream.x_T, params.alpha, eps
    )
    return np.array([d_alpha, d_delta, d_gamma, d_lambda])


def choice_probability_gradient(
    option_a: Prospect, option_b: Prospect, params: PreferenceParams, config: UtilityConfig
) -> np.ndarray:
    """Gradient of choice_probability in GRADIENT_ORDER = (alpha, delta, gamma, lambda, mu)."""
    d_delta_u = np.zeros(4)
    for stream, p in option_b.branches:
        d_delta_u += p * _stream_utility_gradient(stream, params, config)
    for stream, p in option_a.branches:
        d_delta_u -= p * _stream_utility_gradient(stream, params, config)
    du = delta_utility(option_a, option_b, params, config)
    xi = du / params.mu
    fprime = expit(xi) * expit(-xi)
    grad = np.empty(5)
    grad[:4] = fprime * d_delta_u / params.mu
    grad[4] = fprime * (-du / params.mu**2)
    return grad


class ChoiceDesign:
    """Vectorized evaluator of U(B)-U(A) over a fixed list of binary choice rows.

    Branch-level data is flattened once so that repeated evaluation at new
    parameter vectors (the inner loop of likelihood maximization) runs as a
    handful of numpy operations.  Row order is the construction order.
    """

    def __init__(self, rows, config: UtilityConfig):
        self.config = config
        self.n_rows = len(rows)
        xt, xT, tt, TT, pw, row_idx, debt = [], [], [], [], [], [], []
        for i, (option_a, option_b) in enumerate(rows):
            for side, prospect in ((-1.0, option_a), (1.0, option_b)):
                for stream, p in prospect.branches:
                    xt.append(stream.x_t)
                    xT.append(stream.x_T)
                    tt.append(stream.t)
                    TT.append(stream.T)
                    pw.append(side * p)
                    row_idx.append(i)
                    debt.append(is_debt_contract(stream))
        self._xt = np.asarray(xt)
        self._xT = np.asarray(xT)
        self._tt = np.asarray(tt)
        self._TT = np.asarray(TT)
        self._pw = np.asarray(pw)
        self._row = np.asarray(row_idx, dtype=np.intp)
        self._debt = np.asarray(debt)
        eps = config.epsilon
        # sign split and |x|+eps are parameter-free, precompute once
        self._sf_t = np.where(self._xt >= 0, 1.0, -1.0)
        self._sf_T = np.where(self._xT >= 0, 1.0, -1.0)
        self._yt = np.abs(self._xt) + eps
        self._yT = np.abs(self._xT) + eps
        self._log_yt = np.log(self._yt)
        self._log_yT = np.log(self._yT)

    def _pieces(self, params: PreferenceParams):
        eps = self.config.epsilon
        a = 1.0 - params.alpha
        eps_a = eps**a
        u_t = (self._yt**a - eps_a) / a
        u_T = (self._yT**a - eps_a) / a
        lam_t = np.where(self._sf_t > 0, 1.0, params.lambda_)
        lam_T = np.where(self._sf_T > 0, 1.0, params.lambda_)
        v_t = self._sf_t * lam_t * u_t
        v_T = self._sf_T * lam_T * u_T
        phi_t = (1.0 + params.delta) ** (-self._tt)
        phi_T = (1.0 + params.delta) ** (-self._TT)
        coef = np.where(self._debt, params.gamma, 1.0)
        return a, eps_a, u_t, u_T, lam_t, lam_T, v_t, v_T, phi_t, phi_T, coef

    def delta_u(self, params: PreferenceParams) -> np.ndarray:
        """U(B)-U(A) for every row at the given parameter point."""
        _, _, _, _, _, _, v_t, v_T, phi_t, phi_T, coef = self._pieces(params)
        su = phi_t * v_t + coef * phi_T * v_T
        return np.bincount(self._row, weights=self._pw * su, minlength=self.n_rows)

    def delta_u_with_gradient(self, params: PreferenceParams):
        """(delta_u, d(delta_u)/d(alpha, delta, gamma, lambda)) with shape (n, 4)."""
        eps = self.config.epsilon
        a, eps_a, u_t, u_T, lam_t, lam_T, v_t, v_T, phi_t, phi_T, coef = self._pieces(params)
        su = phi_t * v_t + coef * phi_T * v_T
        du = np.bincount(self._row, weights=self._pw * su, minlength=self.n_rows)

        log_eps = math.log(eps)
        ua_t = (u_t - (self._yt**a * self._log_yt - eps_a * log_eps)) / a
        ua_T = (u_T - (self._yT**a * self._log_yT - eps_a * log_eps)) / a
        va_t = self._sf_t * lam_t * ua_t
        va_T = self._sf_T * lam_T * ua_T
        vl_t = np.where(self._sf_t > 0, 0.0, -u_t)
        vl_T = np.where(self._sf_T > 0, 0.0, -u_T)
        dphi_t = -self._tt * phi_t / (1.0 + params.delta)
        dphi_T = -self._TT * phi_T / (1.0 + params.delta)

        d_alpha = phi_t * va_t + coef * phi_T * va_T
        d_delta = dphi_t * v_t + coef * dphi_T * v_T
        d_gamma = np.where(self._debt, phi_T * v_T, 0.0)
        d_lambda = phi_t * vl_t + coef * phi_T * vl_T

        grads = np.empty((self.n_rows, 4))
        for k, d in enumerate((d_alpha, d_delta, d_gamma, d_lambda)):
            grads[:, k] = np.bincount(self._row, weights=self._pw * d, minlength=self.n_rows)
        return du, grads

    def choice_probabilities(self, params: PreferenceParams) -> np.ndarray:
        """Logit probability of option B for every row."""
        return expit(self.delta_u(params) / params.mu)
