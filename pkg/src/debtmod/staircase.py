"""Adaptive staircase over 15 hypothetical debt contracts.

Every contract pays 100 today against a repayment due in six months.  The
15 repayment amounts, sorted from mildest to harshest, form a multiple price
list; a respondent answering four accept/reject questions walks a balanced
binary tree that pins down their switchpoint (SP, 1..16) between accepting
and rejecting: SP = k means the k-1 mildest contracts are accepted and the
rest rejected.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import PaymentStream

__all__ = [
    "RECEIVE_TODAY",
    "REPAY_MONTHS",
    "REPAYMENTS",
    "LEVEL_REPAYMENTS",
    "StaircaseNode",
    "staircase_root",
    "staircase_next",
    "staircase_switchpoint",
    "switchpoint_to_mpl_choices",
    "contract_stream",
    "iter_nodes",
    "tree_as_dict",
]

RECEIVE_TODAY = 100.0
REPAY_MONTHS = 6.0

# Repayment magnitudes of the 15 contracts, mildest first.
REPAYMENTS = (60, 75, 85, 90, 95, 97, 99, 100, 101, 103, 105, 110, 115, 125, 140)

# Repayment magnitudes encountered per questioning depth.
LEVEL_REPAYMENTS = (
    (100,),
    (90, 110),
    (75, 97, 103, 125),
    (60, 85, 95, 99, 101, 105, 115, 140),
)


@dataclass(frozen=True)
class StaircaseNode:
    """One question of the staircase; children are nodes or terminal switchpoints."""

    receive_today: float
    repay_in_6m: float
    reject_child: "StaircaseNode | int"
    accept_child: "StaircaseNode | int"

    @property
    def is_terminal_next(self) -> bool:
        return isinstance(self.accept_child, int) and isinstance(self.reject_child, int)


def _build(lo: int, hi: int) -> StaircaseNode | int:
    """Balanced search tree over contract positions lo..hi (1-based, inclusive)."""
    if lo > hi:
        # all contracts up to lo-1 accepted, the rest rejected
        return lo
    mid = (lo + hi) // 2
    return StaircaseNode(
        receive_today=RECEIVE_TODAY,
        repay_in_6m=-float(REPAYMENTS[mid - 1]),
        reject_child=_build(lo, mid - 1),
        accept_child=_build(mid + 1, hi),
    )


_ROOT = _build(1, len(REPAYMENTS))


def staircase_root() -> StaircaseNode:
    """Entry node of the staircase (repayment 100)."""
    return _ROOT


def _as_accept(answer) -> bool:
    if isinstance(answer, bool):
        return answer
    if answer in ("accept", "reject"):
        return answer == "accept"
    raise ValueError(f"answer must be 'accept', 'reject' or a bool, got {answer!r}")


def staircase_next(node: StaircaseNode, answer) -> StaircaseNode | int:
    """Follow one branch; returns the next node or a terminal switchpoint."""
    if not isinstance(node, StaircaseNode):
        raise ValueError("cannot advance from a terminal switchpoint")
    return node.accept_child if _as_accept(answer) else node.reject_child


def staircase_switchpoint(answers) -> int:
    """Map exactly four accept/reject answers to the switchpoint 1..16."""
    answers = list(answers)
    if len(answers) != 4:
        raise ValueError(f"staircase takes exactly 4 answers, got {len(answers)}")
    pos: StaircaseNode | int = staircase_root()
    for answer in answers:
        pos = staircase_next(pos, answer)
    assert isinstance(pos, int)
    return pos


def switchpoint_to_mpl_choices(sp: int) -> list[bool]:
    """Monotone accept/reject vector over the 15 contracts sorted mildest first.

    Position k (1-based) is accepted iff k < sp, so SP=1 rejects everything
    and SP=16 accepts everything.
    """
    if not (isinstance(sp, int) and 1 <= sp <= 16):
        raise ValueError(f"switchpoint must be an integer in 1..16, got {sp!r}")
    return [k < sp for k in range(1, 16)]


def contract_stream(position: int) -> PaymentStream:
    """Payment stream of the contract at 1-based sorted position."""
    if not 1 <= position <= len(REPAYMENTS):
        raise ValueError(f"position must be in 1..{len(REPAYMENTS)}")
    return PaymentStream(
        x_t=RECEIVE_TODAY, x_T=-float(REPAYMENTS[position - 1]), t=0.0, T=REPAY_MONTHS
    )


def iter_nodes():
    """Yield every internal node, breadth first."""
    queue = [staircase_root()]
    while queue:
        node = queue.pop(0)
        yield node
        for child in (node.reject_child, node.accept_child):
            if isinstance(child, StaircaseNode):
                queue.append(child)


def _node_dict(pos: StaircaseNode | int):
    if isinstance(pos, int):
        return {"switchpoint": pos}
    return {
        "receive_today": pos.receive_today,
        "repay_in_6m": pos.repay_in_6m,
        "repay_months": REPAY_MONTHS,
        "reject": _node_dict(pos.reject_child),
        "accept": _node_dict(pos.accept_child),
    }


def tree_as_dict() -> dict:
    """JSON-ready view of the full tree, as served to questionnaire clients."""
    return _node_dict(staircase_root())
