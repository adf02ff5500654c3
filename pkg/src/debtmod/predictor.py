"""The validated two-item debt-aversion predictor.

gamma_hat = intercept + sum_i weight_i * answer_i, with answers coded 1-6
left to right.  Answers given on another scale with minimum l and maximum h
are first mapped affinely onto the 6-point scale via (x-l)/(h-l)*5 + 1.
Weights live in a versioned JSON spec, not in code; the shipped default
carries the published intercept and the two item weights.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .data import packaged_path

__all__ = [
    "ModuleItem",
    "SurveyModuleSpec",
    "ModuleAnswer",
    "Prediction",
    "NEUTRAL_TOLERANCE",
    "rescale_likert",
    "predict_gamma",
    "load_module_spec",
    "classify_gamma",
]

NEUTRAL_TOLERANCE = 1e-12

DEBT_AVERSE = "debt averse"
DEBT_NEUTRAL = "debt neutral"
DEBT_AFFINE = "debt affine"


@dataclass(frozen=True)
class ModuleItem:
    item_id: str
    prompt: str
    weight: float
    scale_min: float = 1.0
    scale_max: float = 6.0

    def __post_init__(self):
        if not self.scale_min < self.scale_max:
            raise ValueError(f"item {self.item_id!r}: need scale_min < scale_max")


@dataclass(frozen=True)
class SurveyModuleSpec:
    intercept: float
    items: tuple
    version: str = "unversioned"

    def __post_init__(self):
        if not self.items:
            raise ValueError("module spec needs at least one item")
        ids = [i.item_id for i in self.items]
        if len(set(ids)) != len(ids):
            raise ValueError("module item ids must be unique")

    def item_ids(self):
        return tuple(i.item_id for i in self.items)

    def as_dict(self) -> dict:
        return {
            "schema_version": 1,
            "version": self.version,
            "intercept": self.intercept,
            "items": [
                {
                    "item_id": i.item_id,
                    "prompt": i.prompt,
                    "weight": i.weight,
                    "scale_min": i.scale_min,
                    "scale_max": i.scale_max,
                }
                for i in self.items
            ],
        }


@dataclass(frozen=True)
class ModuleAnswer:
    """One answer; scale bounds default to the item's native scale."""

    item_id: str
    value: float
    scale_min: float | None = None
    scale_max: float | None = None


@dataclass(frozen=True)
class Prediction:
    gamma_hat: float
    classification: str
    answers: tuple  # (item_id, raw value, value on the 6-point scale)
    terms: tuple  # (label, contribution): intercept plus one term per item

    def decomposition(self) -> str:
        parts = [f"{self.terms[0][1]:+.4f} ({self.terms[0][0]})"]
        parts += [f"{v:+.4f} ({label})" for label, v in self.terms[1:]]
        return " ".join(parts) + f" = {self.gamma_hat:.4f}"


def load_module_spec(path=None) -> SurveyModuleSpec:
    """Load a module spec file (the packaged default when path is None)."""
    if path is None:
        path = packaged_path("module_spec.json")
    doc = json.loads(Path(path).read_text())
    items = tuple(
        ModuleItem(
            item_id=i["item_id"],
            prompt=i.get("prompt", ""),
            weight=i["weight"],
            scale_min=i.get("scale_min", 1),
            scale_max=i.get("scale_max", 6),
        )
        for i in doc["items"]
    )
    return SurveyModuleSpec(
        intercept=doc["intercept"], items=items, version=doc.get("version", "unversioned")
    )


def rescale_likert(x: float, l: float, h: float) -> float:
    """Map x from a scale with minimum l and maximum h onto the 6-point scale."""
    if not l < h:
        raise ValueError(f"need l < h, got l={l}, h={h}")
    if not l <= x <= h:
        raise ValueError(f"answer {x} outside its scale [{l}, {h}]")
    return (x - l) / (h - l) * 5.0 + 1.0


def classify_gamma(gamma_hat: float) -> str:
    if abs(gamma_hat - 1.0) <= NEUTRAL_TOLERANCE:
        return DEBT_NEUTRAL
    return DEBT_AVERSE if gamma_hat > 1.0 else DEBT_AFFINE


def _normalize_answers(spec: SurveyModuleSpec, answers) -> list[ModuleAnswer]:
    if isinstance(answers, Mapping):
        answers = [ModuleAnswer(item_id=k, value=v) for k, v in answers.items()]
    elif isinstance(answers, Iterable):
        answers = [
            a if isinstance(a, ModuleAnswer) else ModuleAnswer(item_id=a[0], value=a[1])
            for a in answers
        ]
    by_id = {}
    for a in answers:
        if a.item_id in by_id:
            raise ValueError(f"duplicate answer for item {a.item_id!r}")
        by_id[a.item_id] = a
    expected = set(spec.item_ids())
    missing = expected - set(by_id)
    extra = set(by_id) - expected
    if missing:
        raise ValueError(f"missing answers for {sorted(missing)}")
    if extra:
        raise ValueError(f"answers for unknown items {sorted(extra)}")
    return [by_id[i] for i in spec.item_ids()]


def predict_gamma(spec: SurveyModuleSpec, answers) -> Prediction:
    """Predicted debt-aversion parameter from one answer per module item.

    ``answers`` maps item ids to values, or is a list of ModuleAnswer with
    optional per-answer scale bounds (rescaled onto 1..6 before weighting).
    """
    ordered = _normalize_answers(spec, answers)
    gamma = spec.intercept
    terms = [("intercept", spec.intercept)]
    echoed = []
    for item, answer in zip(spec.items, ordered):
        lo = item.scale_min if answer.scale_min is None else answer.scale_min
        hi = item.scale_max if answer.scale_max is None else answer.scale_max
        if not math.isfinite(answer.value):
            raise ValueError(f"answer for {item.item_id!r} must be finite")
        coded = rescale_likert(answer.value, lo, hi)
        contribution = item.weight * coded
        gamma += contribution
        terms.append((item.item_id, contribution))
        echoed.append((item.item_id, answer.value, coded))
    return Prediction(
        gamma_hat=gamma,
        classification=classify_gamma(gamma),
        answers=tuple(echoed),
        terms=tuple(terms),
    )
