"""Score questionnaire answers with the shipped two-item module.

Run: python3 demos/06_two_item_predictor.py
"""

from debtmod.predictor import ModuleAnswer, load_module_spec, predict_gamma, rescale_likert

spec = load_module_spec()
print(f"module version: {spec.version}")
print(f"intercept: {spec.intercept}")
for item in spec.items:
    print(f"  {item.item_id}: weight {item.weight:+.4f} on a {item.scale_min:.0f}-{item.scale_max:.0f} scale")

print("\nthe worked example, answers (5, 2):")
prediction = predict_gamma(spec, {"Q1": 5, "Q2": 2})
print(f"  {prediction.decomposition()}")
print(f"  classification: {prediction.classification}")

print("\npredictions over the full 6x6 answer grid:")
print("      Q2=1    Q2=2    Q2=3    Q2=4    Q2=5    Q2=6")
for q1 in range(1, 7):
    row = [predict_gamma(spec, {"Q1": q1, "Q2": q2}).gamma_hat for q2 in range(1, 7)]
    print(f"Q1={q1} " + " ".join(f"{g:.4f}" for g in row))

print("\nanswers given on a 0-10 scale are rescaled onto the 6-point scale:")
print(f"  8 on 0-10 maps to {rescale_likert(8, 0, 10):.1f}")
custom = predict_gamma(
    spec, [ModuleAnswer("Q1", 8, 0, 10), ModuleAnswer("Q2", 2, 0, 10)]
)
print(f"  (Q1=8, Q2=2 on 0-10) -> gamma_hat = {custom.gamma_hat:.4f} ({custom.classification})")
