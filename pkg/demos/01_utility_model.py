"""Walk through the structural utility model on a few concrete contracts.

Run: python3 demos/01_utility_model.py
"""

import numpy as np

from debtmod.model import (
    PaymentStream,
    PreferenceParams,
    Prospect,
    UtilityConfig,
    choice_probability,
    debt_cost,
    discount,
    gain_utility,
    is_debt_contract,
    prospect_utility,
    value,
)

cfg = UtilityConfig(epsilon=1.0)
params = PreferenceParams(alpha=0.3, delta=0.01, gamma=1.05, lambda_=1.5, mu=0.1)

print("== money utility ==")
for x in (0, 10, 50, 100):
    print(f"  u({x:>3}) = {gain_utility(x, params.alpha, cfg.epsilon):8.3f}")
print("losses hurt lambda times more:")
print(f"  v(+50) = {value(50, params.alpha, params.lambda_, cfg.epsilon):8.3f}")
print(f"  v(-50) = {value(-50, params.alpha, params.lambda_, cfg.epsilon):8.3f}")

print("\n== discounting (monthly rate {:.1%}) ==".format(params.delta))
for months in (0, 6, 12, 24):
    print(f"  weight at {months:>2} months: {discount(months, params.delta):.4f}")

print("\n== a debt contract: receive 100 today, repay 110 in six months ==")
debt = PaymentStream(x_t=100.0, x_T=-110.0, t=0.0, T=6.0)
saving = PaymentStream(x_t=-100.0, x_T=110.0, t=0.0, T=6.0)
print(f"  is_debt_contract(debt)   = {is_debt_contract(debt)}")
print(f"  is_debt_contract(saving) = {is_debt_contract(saving)}")
print(f"  extra cost of holding the debt (gamma=1.05): {debt_cost(debt, params, cfg):.3f}")
neutral = PreferenceParams(alpha=0.3, delta=0.01, gamma=1.0, lambda_=1.5, mu=0.1)
print(f"  ... and at gamma=1 (debt neutral):           {debt_cost(debt, neutral, cfg):.3f}")

print("\n== utilities and choice probabilities ==")
status_quo = Prospect.sure(PaymentStream(x_t=0.0, x_T=0.0, t=0.0, T=6.0))
offer = Prospect.sure(debt)
u = prospect_utility(offer, params, cfg)
print(f"  U(debt contract)  = {u:8.3f}")
print(f"  U(status quo)     = {prospect_utility(status_quo, params, cfg):8.3f}")
print(f"  P(accept | gamma=1.05) = {choice_probability(status_quo, offer, params, cfg):.4f}")

print("\nacceptance probability falls as debt aversion rises:")
for gamma in np.linspace(0.95, 1.15, 5):
    p = PreferenceParams(alpha=0.3, delta=0.01, gamma=float(gamma), lambda_=1.5, mu=0.1)
    print(f"  gamma={gamma:.2f}: P(accept) = {choice_probability(status_quo, offer, p, cfg):.4f}")
