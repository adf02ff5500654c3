"""Calibrate the shrinkage factor by grid search on simulated agents.

For each candidate s the full choice dataset is re-estimated and the MSE of
estimated vs true gamma recorded; the argmin wins, grid values with too many
estimation failures are disqualified.

Run: python3 demos/04_shrinkage_calibration.py   (a few minutes on 2 cores)
"""

from debtmod.instruments import synthetic_mpl_catalog
from debtmod.model import UtilityConfig
from debtmod.simulation import calibrate_shrinkage, default_population

cfg = UtilityConfig()
pop = default_population()
mpls = synthetic_mpl_catalog(n_blocks=2)

grid = [0.005, 0.0139, 0.05, 0.15]
print(f"grid: {grid}")
print("simulating 6 agents and estimating them once per grid value ...")
result = calibrate_shrinkage(
    pop, mpls, cfg, grid, n_agents=6, seed=23, mu=0.25, n_jobs=-1, n_starts=3
)

print(f"\n{'s':>8} {'mse':>12} {'mae':>10} {'consistent':>10}  note")
for row in result.as_dicts():
    mse = f"{row['mse']:.6f}" if row["mse"] is not None else "-"
    mae = f"{row['mae']:.5f}" if row["mae"] is not None else "-"
    note = "disqualified (>20% failures)" if row["disqualified"] else ""
    print(f"{row['s']:>8} {mse:>12} {mae:>10} {row['n_consistent']:>7}/6   {note}")
print(f"\nbest shrinkage factor: s = {result.best_s}")
