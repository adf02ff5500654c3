"""Built-in multiple price lists.

Two kinds ship with the package:

* the canonical 15-contract staircase list (``staircase_mpl``), the one list
  whose contents are fully pinned down by the staircase tree, and
* synthetic identification batteries (``synthetic_mpl_catalog``) used by the
  simulation and recovery pipelines.  Six lists of 15 rows each probe risk
  over gains, mixed gain/loss lotteries, near and far delay tradeoffs, and
  debt and saving contracts, so that every preference parameter moves some
  switchpoint.  Grids are deterministic; ``n_blocks`` replicates the battery
  with interleaved grid offsets to add resolution without duplicate rows.
"""

from __future__ import annotations

import numpy as np

from . import staircase
from .data import MPLSpec
from .model import PaymentStream, Prospect

__all__ = [
    "staircase_mpl",
    "STAIRCASE_MPL_ID",
    "synthetic_mpl_catalog",
    "builtin_catalog",
]

STAIRCASE_MPL_ID = "staircase_debt"

_STATUS_QUO = Prospect.sure(PaymentStream(x_t=0.0, x_T=0.0, t=0.0, T=6.0))


def staircase_mpl() -> MPLSpec:
    """The staircase contracts as a 15-row MPL, mildest repayment first.

    Option A is keeping the status quo; option B is the debt contract, so
    ``chosen=1`` means the contract was accepted.
    """
    rows = tuple(
        (_STATUS_QUO, Prospect.sure(staircase.contract_stream(k))) for k in range(1, 16)
    )
    return MPLSpec(id=STAIRCASE_MPL_ID, rows=rows)


def _sure_now(amount: float) -> Prospect:
    return Prospect.sure(PaymentStream(x_t=amount, x_T=0.0, t=0.0, T=6.0))


def _sure_at(amount: float, month: float) -> Prospect:
    if month == 0.0:
        return _sure_now(amount)
    return Prospect.sure(PaymentStream(x_t=0.0, x_T=amount, t=0.0, T=month))


def _grid(lo: float, hi: float, n: int, shift: float) -> np.ndarray:
    step = (hi - lo) / (n - 1)
    return np.round(lo + shift * step + step * np.arange(n), 2)


def _battery(block: int, n_blocks: int) -> list[MPLSpec]:
    # Two regimes on purpose.  The small-stake gain and delay lists keep a
    # band of rows genuinely stochastic at noise scales around 0.1, which is
    # what identifies the noise parameter.  The large-stake loss, debt and
    # saving lists switch sharply, bracketing loss and debt aversion tightly;
    # interleaving grids across blocks refines those brackets.
    shift = block / n_blocks
    tag = f"_b{block}" if n_blocks > 1 else ""
    lists: list[MPLSpec] = []

    # sure amount now vs 50/50 lottery over 15 or nothing (curvature, noise)
    lottery = Prospect(
        [
            (PaymentStream(x_t=15.0, x_T=0.0, t=0.0, T=6.0), 0.5),
            (PaymentStream(x_t=0.0, x_T=0.0, t=0.0, T=6.0), 0.5),
        ]
    )
    rows = tuple((_sure_now(s), lottery) for s in _grid(4.2, 8.4, 15, shift))
    lists.append(MPLSpec(id=f"risk_gain{tag}", rows=rows))

    # status quo vs 50/50 win 80 / lose l (loss aversion)
    rows = tuple(
        (
            _STATUS_QUO,
            Prospect(
                [
                    (PaymentStream(x_t=80.0, x_T=0.0, t=0.0, T=6.0), 0.5),
                    (PaymentStream(x_t=-loss, x_T=0.0, t=0.0, T=6.0), 0.5),
                ]
            ),
        )
        for loss in _grid(30.0, 72.0, 15, shift)
    )
    lists.append(MPLSpec(id=f"risk_loss{tag}", rows=rows))

    # 5 today vs y in six months (discounting, noise)
    rows = tuple((_sure_now(5.0), _sure_at(y, 6.0)) for y in _grid(4.6, 7.4, 15, shift))
    lists.append(MPLSpec(id=f"time_near{tag}", rows=rows))

    # status quo vs receive 100 now, repay y in six months (debt aversion)
    rows = tuple(
        (_STATUS_QUO, Prospect.sure(PaymentStream(x_t=100.0, x_T=-y, t=0.0, T=6.0)))
        for y in _grid(28.0, 112.0, 15, shift)
    )
    lists.append(MPLSpec(id=f"debt_6m{tag}", rows=rows))

    # same contract stretched to a year (separates debt aversion from discounting)
    rows = tuple(
        (_STATUS_QUO, Prospect.sure(PaymentStream(x_t=100.0, x_T=-y, t=0.0, T=12.0)))
        for y in _grid(30.0, 114.0, 15, shift)
    )
    lists.append(MPLSpec(id=f"debt_12m{tag}", rows=rows))

    # status quo vs pay 100 now, receive y in six months (gamma-free contrast)
    rows = tuple(
        (_STATUS_QUO, Prospect.sure(PaymentStream(x_t=-100.0, x_T=y, t=0.0, T=6.0)))
        for y in _grid(115.0, 325.0, 15, shift)
    )
    lists.append(MPLSpec(id=f"saving_6m{tag}", rows=rows))
    return lists


def synthetic_mpl_catalog(n_blocks: int = 1) -> dict[str, MPLSpec]:
    """Deterministic battery of 6*n_blocks MPLs, 15 rows each (90 rows per block)."""
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    catalog: dict[str, MPLSpec] = {}
    for block in range(n_blocks):
        for mpl in _battery(block, n_blocks):
            catalog[mpl.id] = mpl
    return catalog


def builtin_catalog(name: str) -> dict[str, MPLSpec]:
    """Resolve ``builtin:`` catalog names used by the CLI."""
    if name == "staircase":
        mpl = staircase_mpl()
        return {mpl.id: mpl}
    if name == "synthetic":
        return synthetic_mpl_catalog(n_blocks=1)
    if name.startswith("synthetic:"):
        return synthetic_mpl_catalog(n_blocks=int(name.split(":", 1)[1]))
    raise ValueError(f"unknown builtin catalog {name!r}")
