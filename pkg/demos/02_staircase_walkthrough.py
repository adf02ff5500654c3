"""Traverse the adaptive staircase of hypothetical debt contracts.

Run: python3 demos/02_staircase_walkthrough.py
"""

import itertools

from debtmod.staircase import (
    REPAYMENTS,
    staircase_next,
    staircase_root,
    staircase_switchpoint,
    switchpoint_to_mpl_choices,
)

print("The 15 contracts, mildest repayment first:")
print(" ", ", ".join(str(r) for r in REPAYMENTS))

print("\nOne respondent's path (accept, reject, reject, accept):")
node = staircase_root()
for answer in ("accept", "reject", "reject", "accept"):
    print(f"  offered: receive 100 now, repay {-node.repay_in_6m:.0f} in 6 months -> {answer}")
    node = staircase_next(node, answer)
print(f"  switchpoint: SP={node}")

print("\nAll 16 answer sequences (A=accept, R=reject) and their switchpoints:")
for answers in itertools.product((False, True), repeat=4):
    sp = staircase_switchpoint(list(answers))
    label = "".join("A" if a else "R" for a in answers)
    print(f"  {label} -> SP={sp:>2}")

print("\nSP=9 expanded to the full 15-row price list (True = accept):")
choices = switchpoint_to_mpl_choices(9)
for repay, accept in zip(REPAYMENTS, choices):
    print(f"  repay {repay:>3}: {'accept' if accept else 'reject'}")
print("A switchpoint of 9 accepts exactly the contracts repaying at most 100.")
