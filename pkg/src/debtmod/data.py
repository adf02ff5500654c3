"""Choice records, MPL and survey-item catalogs, and their file formats.

File schemas
------------
Choice data        CSV with header ``subject_id,mpl_id,row_index,chosen``
Survey responses   CSV with header ``subject_id,item_id,value``
MPL catalog        JSON: ``{"schema_version": 1, "mpls": [{"id", "rows": [
                   {"option_a": PROSPECT, "option_b": PROSPECT}]}]}`` where
                   PROSPECT is ``{"branches": [{"x_t","x_T","t","T","p"}]}``
Item catalog       JSON: ``{"schema_version": 1, "items": [{"id","number",
                   "text","cluster","scale","directional_hypothesis"}]}``
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .model import PaymentStream, Prospect

__all__ = [
    "MPLSpec",
    "ChoiceRecord",
    "SurveyItem",
    "SurveyResponse",
    "SCALE_RANGES",
    "load_mpl_catalog",
    "save_mpl_catalog",
    "mpl_catalog_to_dict",
    "load_choices",
    "serialize_choices",
    "save_choices",
    "load_item_catalog",
    "load_survey_responses",
    "save_survey_responses",
    "packaged_path",
]

CHOICES_HEADER = ["subject_id", "mpl_id", "row_index", "chosen"]
RESPONSES_HEADER = ["subject_id", "item_id", "value"]

# Inclusive integer coding ranges per scale kind.  Integer amounts are
# unbounded above; categorical covers counts 0..5 plus 6 for "more than 5".
SCALE_RANGES = {
    "likert": (1, 6),
    "yes_no": (0, 1),
    "integer": (0, None),
    "categorical": (0, 6),
    "switchpoint": (1, 16),
}


@dataclass(frozen=True)
class MPLSpec:
    """Ordered multiple price list of binary (option A, option B) rows."""

    id: str
    rows: tuple

    def __post_init__(self):
        if not self.rows:
            raise ValueError(f"MPL {self.id!r} has no rows")

    def __len__(self):
        return len(self.rows)


@dataclass(frozen=True)
class ChoiceRecord:
    """One observed binary decision: chosen=0 means option A, 1 means option B."""

    subject_id: str
    mpl_id: str
    row_index: int
    chosen: int

    def __post_init__(self):
        if self.chosen not in (0, 1):
            raise ValueError(f"chosen must be 0 or 1, got {self.chosen}")
        if self.row_index < 0:
            raise ValueError("row_index must be nonnegative")


@dataclass(frozen=True)
class SurveyItem:
    """Catalog entry for one survey item."""

    id: str
    number: int
    text: str
    cluster: str
    scale: str
    directional_hypothesis: bool = True

    def __post_init__(self):
        if self.scale not in SCALE_RANGES:
            raise ValueError(f"unknown scale kind {self.scale!r} for item {self.id!r}")


@dataclass(frozen=True)
class SurveyResponse:
    """One answered survey item, integer-coded per the item's scale."""

    subject_id: str
    item_id: str
    value: int


def packaged_path(name: str) -> Path:
    """Path of a JSON fixture shipped inside the package."""
    return Path(str(resources.files("debtmod").joinpath("data", name)))


# --- MPL catalog ------------------------------------------------------------


def _prospect_from_dict(d: dict) -> Prospect:
    branches = [
        (PaymentStream(x_t=b["x_t"], x_T=b["x_T"], t=b["t"], T=b["T"]), b["p"])
        for b in d["branches"]
    ]
    return Prospect(branches)


def _prospect_to_dict(p: Prospect) -> dict:
    return {
        "branches": [
            {"x_t": s.x_t, "x_T": s.x_T, "t": s.t, "T": s.T, "p": prob} for s, prob in p.branches
        ]
    }


def load_mpl_catalog(path) -> dict[str, MPLSpec]:
    """Load an MPL catalog file into an ordered id -> MPLSpec mapping."""
    doc = json.loads(Path(path).read_text())
    catalog: dict[str, MPLSpec] = {}
    for entry in doc["mpls"]:
        mpl_id = entry["id"]
        if mpl_id in catalog:
            raise ValueError(f"duplicate MPL id {mpl_id!r} in {path}")
        rows = tuple(
            (_prospect_from_dict(r["option_a"]), _prospect_from_dict(r["option_b"]))
            for r in entry["rows"]
        )
        catalog[mpl_id] = MPLSpec(id=mpl_id, rows=rows)
    return catalog


def mpl_catalog_to_dict(catalog: dict[str, MPLSpec]) -> dict:
    return {
        "schema_version": 1,
        "mpls": [
            {
                "id": mpl.id,
                "rows": [
                    {"option_a": _prospect_to_dict(a), "option_b": _prospect_to_dict(b)}
                    for a, b in mpl.rows
                ],
            }
            for mpl in catalog.values()
        ],
    }


def save_mpl_catalog(path, catalog: dict[str, MPLSpec]) -> None:
    Path(path).write_text(json.dumps(mpl_catalog_to_dict(catalog), indent=2) + "\n")


# --- choice data ------------------------------------------------------------


def load_choices(path, mpl_catalog: dict[str, MPLSpec]) -> list[ChoiceRecord]:
    """Read and validate a choice-data CSV against an MPL catalog.

    Raises ValueError naming the offending line for parse errors, unknown
    (mpl_id, row_index) references and duplicate (subject, mpl, row) keys.
    Emits a warning and returns [] for a file with no data rows.
    """
    records: list[ChoiceRecord] = []
    seen: set[tuple] = set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            warnings.warn(f"{path}: empty choice file")
            return []
        if header != CHOICES_HEADER:
            raise ValueError(f"{path}:1: expected header {','.join(CHOICES_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            subject_id, mpl_id, raw_index, raw_chosen = row
            try:
                row_index = int(raw_index)
                chosen = int(raw_chosen)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if mpl_id not in mpl_catalog:
                raise ValueError(f"{path}:{lineno}: unknown MPL id {mpl_id!r}")
            if not 0 <= row_index < len(mpl_catalog[mpl_id]):
                raise ValueError(
                    f"{path}:{lineno}: row_index {row_index} out of range for MPL {mpl_id!r}"
                )
            if chosen not in (0, 1):
                raise ValueError(f"{path}:{lineno}: chosen must be 0 or 1, got {chosen}")
            key = (subject_id, mpl_id, row_index)
            if key in seen:
                raise ValueError(f"{path}:{lineno}: duplicate record for {key}")
            seen.add(key)
            records.append(
                ChoiceRecord(subject_id=subject_id, mpl_id=mpl_id, row_index=row_index, chosen=chosen)
            )
    if not records:
        warnings.warn(f"{path}: no choice records")
    return records


def per_subject_counts(records) -> dict[str, int]:
    """Choice counts keyed by subject (the lab design gave 90 per subject)."""
    counts: dict[str, int] = {}
    for r in records:
        counts[r.subject_id] = counts.get(r.subject_id, 0) + 1
    return counts


def serialize_choices(records) -> str:
    """Canonical CSV text for a list of choice records."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CHOICES_HEADER)
    for r in records:
        writer.writerow([r.subject_id, r.mpl_id, r.row_index, r.chosen])
    return buf.getvalue()


def save_choices(path, records) -> None:
    Path(path).write_text(serialize_choices(records))


# --- survey items and responses ----------------------------------------------


def load_item_catalog(path=None) -> dict[str, SurveyItem]:
    """Load the survey-item catalog (the packaged one when path is None)."""
    if path is None:
        path = packaged_path("item_catalog.json")
    doc = json.loads(Path(path).read_text())
    items: dict[str, SurveyItem] = {}
    for entry in doc["items"]:
        item = SurveyItem(
            id=entry["id"],
            number=entry["number"],
            text=entry["text"],
            cluster=entry["cluster"],
            scale=entry["scale"],
            directional_hypothesis=entry.get("directional_hypothesis", True),
        )
        if item.id in items:
            raise ValueError(f"duplicate item id {item.id!r} in {path}")
        items[item.id] = item
    return items


def validate_response_value(item: SurveyItem, value: int) -> None:
    lo, hi = SCALE_RANGES[item.scale]
    if value < lo or (hi is not None and value > hi):
        rng = f"{lo}..{hi}" if hi is not None else f">= {lo}"
        raise ValueError(f"value {value} outside {rng} for {item.scale} item {item.id!r}")


def load_survey_responses(path, item_catalog: dict[str, SurveyItem]) -> list[SurveyResponse]:
    """Read a survey-response CSV, validating each value against its item's scale."""
    responses: list[SurveyResponse] = []
    seen: set[tuple] = set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            warnings.warn(f"{path}: empty response file")
            return []
        if header != RESPONSES_HEADER:
            raise ValueError(f"{path}:1: expected header {','.join(RESPONSES_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            subject_id, item_id, raw_value = row
            if item_id not in item_catalog:
                raise ValueError(f"{path}:{lineno}: unknown item id {item_id!r}")
            try:
                value = int(raw_value)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            try:
                validate_response_value(item_catalog[item_id], value)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            key = (subject_id, item_id)
            if key in seen:
                raise ValueError(f"{path}:{lineno}: duplicate response for {key}")
            seen.add(key)
            responses.append(SurveyResponse(subject_id=subject_id, item_id=item_id, value=value))
    return responses


def save_survey_responses(path, responses) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESPONSES_HEADER)
    for r in responses:
        writer.writerow([r.subject_id, r.item_id, r.value])
    Path(path).write_text(buf.getvalue())
