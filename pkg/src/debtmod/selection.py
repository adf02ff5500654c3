"""Survey-item selection: pool filtering, exhaustive subset OLS, scoring, CV.

The pipeline regresses per-subject debt-aversion estimates on integer-coded
survey responses, fits all predictor subsets of each size, keeps per-size
leaderboards by adjusted R-squared, shortlists every item appearing in a kept
model, exhausts all subsets of the shortlist, and discriminates across sizes
with AIC/BIC and repeated k-fold cross-validation.  The recommended module is
the size minimizing mean CV-MSE across the k values, ties toward brevity.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed
from scipy.linalg import solve_triangular

from .data import SurveyItem, packaged_path

__all__ = [
    "EXCLUSION_REASONS",
    "ItemPool",
    "RegressionDataset",
    "OLSFit",
    "ModelCandidate",
    "CVConfig",
    "SelectionReport",
    "load_default_exclusions",
    "filter_pool",
    "ols_fit",
    "information_criteria",
    "subset_count",
    "fit_slot_count",
    "enumerate_subsets",
    "best_subset_search",
    "exhaustive_shortlist_search",
    "cross_validate",
    "select_module",
    "build_regression_dataset",
    "run_selection",
]

EXCLUSION_REASONS = frozenset(
    {"education-specific", "no-directional-hypothesis", "counter-directional"}
)

_RANK_TOL = 1e-10


@dataclass(frozen=True)
class ItemPool:
    """Unique-id collection of survey items eligible as predictors."""

    items: tuple

    def __post_init__(self):
        ids = [item.id for item in self.items]
        if len(set(ids)) != len(ids):
            raise ValueError("item ids must be unique")

    def ids(self) -> tuple:
        return tuple(item.id for item in self.items)

    def __len__(self):
        return len(self.items)

    @classmethod
    def from_catalog(cls, catalog: dict[str, SurveyItem]) -> "ItemPool":
        return cls(items=tuple(catalog.values()))


def load_default_exclusions(path=None) -> dict[str, str]:
    """Default item exclusions (editable config): item_id -> reason."""
    if path is None:
        path = packaged_path("default_exclusions.json")
    doc = json.loads(open(path).read())
    return {e["item_id"]: e["reason"] for e in doc["exclusions"]}


def filter_pool(pool: ItemPool, exclusions: dict[str, str]) -> ItemPool:
    """Drop excluded items; every exclusion must name a pool item and a known reason."""
    ids = set(pool.ids())
    for item_id, reason in exclusions.items():
        if item_id not in ids:
            raise ValueError(f"exclusion names unknown item {item_id!r}")
        if reason not in EXCLUSION_REASONS:
            raise ValueError(f"unknown exclusion reason {reason!r} for {item_id!r}")
    kept = tuple(item for item in pool.items if item.id not in exclusions)
    return ItemPool(items=kept)


@dataclass(frozen=True)
class RegressionDataset:
    """Rows of (gamma, integer-coded item responses), canonically sorted by subject."""

    subject_ids: tuple
    item_ids: tuple
    y: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        if self.X.shape != (len(self.subject_ids), len(self.item_ids)):
            raise ValueError("X shape inconsistent with row/column labels")
        if len(self.y) != len(self.subject_ids):
            raise ValueError("y length inconsistent with rows")
        if list(self.subject_ids) != sorted(self.subject_ids):
            raise ValueError("rows must be sorted by subject_id")

    @property
    def n(self) -> int:
        return len(self.subject_ids)

    def columns(self, item_ids) -> np.ndarray:
        index = {item_id: j for j, item_id in enumerate(self.item_ids)}
        try:
            cols = [index[i] for i in item_ids]
        except KeyError as exc:
            raise ValueError(f"dataset has no column for item {exc.args[0]!r}") from None
        return self.X[:, cols]


def build_regression_dataset(estimates, responses, item_ids) -> RegressionDataset:
    """Join consistent estimates with survey responses, listwise-deleting rows.

    Subjects missing the dependent variable or any requested item response
    are dropped.
    """
    gamma = {
        e.subject_id: e.params.gamma for e in estimates if e.status == "consistent" and e.params
    }
    by_subject: dict[str, dict[str, int]] = {}
    for r in responses:
        by_subject.setdefault(r.subject_id, {})[r.item_id] = r.value
    item_ids = tuple(item_ids)
    keep = sorted(
        sid
        for sid in gamma
        if sid in by_subject and all(i in by_subject[sid] for i in item_ids)
    )
    if not keep:
        raise ValueError("no subjects remain after listwise deletion")
    y = np.array([gamma[sid] for sid in keep])
    X = np.array([[by_subject[sid][i] for i in item_ids] for sid in keep], dtype=float)
    return RegressionDataset(subject_ids=tuple(keep), item_ids=item_ids, y=y, X=X)


# --- OLS and scores -----------------------------------------------------------


@dataclass(frozen=True)
class OLSFit:
    coefficients: np.ndarray  # intercept first
    r2: float
    adjusted_r2: float
    rss: float
    n: int
    p: int
    ok: bool  # False when the design was rank-deficient


def ols_fit(y, X) -> OLSFit:
    """Least squares of y on [1, X] via QR; rank-deficient designs are flagged."""
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = len(y)
    p = X.shape[1] if X.size else 0
    if n <= p + 1:
        raise ValueError(f"need more rows than coefficients: n={n}, p={p}")
    design = np.column_stack([np.ones(n), X]) if p else np.ones((n, 1))
    q, r = np.linalg.qr(design)
    diag = np.abs(np.diag(r))
    ok = bool(np.all(diag > _RANK_TOL * max(diag.max(), 1.0)))
    if ok:
        coef = solve_triangular(r, q.T @ y)
    else:
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    rss = float(resid @ resid)
    tss = float(np.sum((y - y.mean()) ** 2))
    if tss > 0:
        r2 = 1.0 - rss / tss
    else:
        r2 = 1.0 if rss <= 1e-30 else 0.0
    adj = 1.0 - (1.0 - r2) * (n - 1) / (n - p - 1)
    return OLSFit(coefficients=coef, r2=r2, adjusted_r2=adj, rss=rss, n=n, p=p, ok=ok)


def information_criteria(rss: float, n: int, p: int):
    """(AIC, BIC) under the Gaussian-likelihood convention.

    AIC = n ln(RSS/n) + 2(p+2) and BIC = n ln(RSS/n) + (p+2) ln n, where
    p+2 counts slopes, intercept and the error variance.  An exact fit
    (RSS = 0) returns -inf for both.
    """
    if rss < 0:
        raise ValueError("RSS must be nonnegative")
    if n <= p:
        raise ValueError("need n > p")
    if rss == 0.0:
        return -math.inf, -math.inf
    base = n * math.log(rss / n)
    return base + 2.0 * (p + 2), base + (p + 2) * math.log(n)


# --- subset enumeration ---------------------------------------------------------


def subset_count(n: int, k: int) -> int:
    """Number of distinct predictor subsets of size k from n items: C(n, k)."""
    if k < 0 or n < 0 or k > n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    return math.comb(n, k)


def fit_slot_count(n: int, sizes) -> int:
    """Total slope-coefficient slots across all distinct subsets of the given sizes.

    A size-k model contributes k slots, so this equals sum_k k*C(n, k) --
    the enumeration-workload figure reported for size-capped searches, as
    opposed to the distinct-subset count sum_k C(n, k).
    """
    return sum(k * subset_count(n, k) for k in sizes)


def enumerate_subsets(items, k: int):
    """Lexicographic subsets of size k; ``items`` is a sequence or a pool size."""
    if isinstance(items, int):
        items = range(items)
    return itertools.combinations(items, k)


# --- candidates and leaderboards -------------------------------------------------


@dataclass(frozen=True)
class ModelCandidate:
    """A predictor subset with its fitted coefficients and scores."""

    predictor_ids: tuple
    coefficients: tuple  # intercept first
    r2: float
    adjusted_r2: float
    rss: float
    aic: float
    bic: float
    n: int
    degenerate: bool = False
    cv_scores: dict = field(default_factory=dict)  # k -> {"mse", "mae", ...}

    @property
    def size(self) -> int:
        return len(self.predictor_ids)

    def sort_key(self):
        # adjusted R-squared descending, then lexicographic ids for ties
        return (-self.adjusted_r2, self.predictor_ids)


def _fit_candidate(dataset: RegressionDataset, ids: tuple) -> ModelCandidate:
    ids = tuple(str(i) for i in ids)
    fit = ols_fit(dataset.y, dataset.columns(ids))
    if fit.ok:
        aic, bic = information_criteria(fit.rss, fit.n, fit.p)
        adj = fit.adjusted_r2
    else:
        aic, bic, adj = math.inf, math.inf, -math.inf
    return ModelCandidate(
        predictor_ids=tuple(ids),
        coefficients=tuple(float(c) for c in fit.coefficients),
        r2=fit.r2,
        adjusted_r2=adj,
        rss=fit.rss,
        aic=aic,
        bic=bic,
        n=fit.n,
        degenerate=not fit.ok,
    )


def _fit_chunk(dataset, chunk):
    return [_fit_candidate(dataset, tuple(ids)) for ids in chunk]


def _leaderboard(dataset, id_subsets, top: int, n_jobs: int) -> list[ModelCandidate]:
    if n_jobs == 1:
        candidates = _fit_chunk(dataset, id_subsets)
    else:
        # lexicographic ranges per worker; the sorted merge below is
        # deterministic, so parallel equals serial exactly
        subsets = list(id_subsets)
        n_chunks = max(1, min(len(subsets), abs(n_jobs) * 4))
        bounds = np.linspace(0, len(subsets), n_chunks + 1, dtype=int)
        parts = Parallel(n_jobs=n_jobs)(
            delayed(_fit_chunk)(dataset, subsets[a:b])
            for a, b in zip(bounds[:-1], bounds[1:])
            if b > a
        )
        candidates = [cand for part in parts for cand in part]
    return sorted(candidates, key=ModelCandidate.sort_key)[:top]


@dataclass(frozen=True)
class SubsetSearchResult:
    leaderboards: dict  # size -> list[ModelCandidate], best first
    shortlist: tuple  # union of predictor ids over all kept models
    n_fitted: int


def best_subset_search(
    dataset: RegressionDataset, pool_ids=None, sizes=range(1, 7), top: int = 10, n_jobs: int = 1
) -> SubsetSearchResult:
    """Exhaustively fit every subset of each size; keep the top models per size.

    Returns per-size leaderboards ranked by adjusted R-squared (ties broken
    lexicographically) and the shortlist of items appearing in any kept model.
    Rank-deficient candidates are flagged and ranked last, never fatal.
    """
    ids = tuple(pool_ids) if pool_ids is not None else dataset.item_ids
    missing = set(ids) - set(dataset.item_ids)
    if missing:
        raise ValueError(f"dataset lacks columns for {sorted(missing)}")
    leaderboards: dict[int, list[ModelCandidate]] = {}
    n_fitted = 0
    for size in sizes:
        if size > len(ids):
            continue
        n_fitted += subset_count(len(ids), size)
        leaderboards[size] = _leaderboard(dataset, enumerate_subsets(ids, size), top, n_jobs)
    shortlist = sorted({i for board in leaderboards.values() for c in board for i in c.predictor_ids})
    return SubsetSearchResult(leaderboards=leaderboards, shortlist=tuple(shortlist), n_fitted=n_fitted)


def exhaustive_shortlist_search(
    dataset: RegressionDataset, shortlist, top: int = 10, n_jobs: int = 1
) -> SubsetSearchResult:
    """Fit every non-empty subset of the shortlist; keep per-size leaderboards."""
    shortlist = tuple(shortlist)
    if not shortlist:
        raise ValueError("shortlist must be non-empty")
    return best_subset_search(
        dataset, pool_ids=shortlist, sizes=range(1, len(shortlist) + 1), top=top, n_jobs=n_jobs
    )


# --- cross-validation -------------------------------------------------------------


@dataclass(frozen=True)
class CVConfig:
    k_values: tuple = (5, 10)
    replicates: int = 100
    seed: int = 0

    def __post_init__(self):
        if any(k < 2 for k in self.k_values):
            raise ValueError("every k must be at least 2")
        if self.replicates < 1:
            raise ValueError("need at least one replicate")


def _fold_sizes(n: int, k: int) -> list[int]:
    base, extra = divmod(n, k)
    return [base + 1 if i < extra else base for i in range(k)]


def cross_validate(dataset: RegressionDataset, candidate, cvconfig: CVConfig) -> dict:
    """Repeated seeded k-fold CV of one candidate; returns per-k MSE and MAE.

    Partitions shuffle the canonical subject order with a stream derived from
    (seed, k, replicate); the shuffled indices are cut into k nearly equal
    contiguous folds with the remainder spread over the first folds.  Scores
    average over folds, then over replicates.  A replicate is skipped (and
    counted) when a training split is too small to fit the candidate.
    """
    ids = candidate.predictor_ids if isinstance(candidate, ModelCandidate) else tuple(candidate)
    X = dataset.columns(ids)
    y = dataset.y
    n, p = dataset.n, len(ids)
    results = {}
    for k in cvconfig.k_values:
        if k > n:
            raise ValueError(f"k={k} exceeds the {n} available rows")
        rep_mse, rep_mae, skipped = [], [], 0
        for rep in range(cvconfig.replicates):
            rng = np.random.default_rng([cvconfig.seed, k, rep])
            order = rng.permutation(n)
            folds = []
            start = 0
            for size in _fold_sizes(n, k):
                folds.append(order[start : start + size])
                start += size
            if n - max(len(f) for f in folds) < p + 2:
                skipped += 1
                continue
            fold_mse, fold_mae = [], []
            for held in folds:
                train = np.setdiff1d(order, held, assume_unique=True)
                fit = ols_fit(y[train], X[train])
                design = np.column_stack([np.ones(len(held)), X[held]]) if p else np.ones((len(held), 1))
                pred = design @ fit.coefficients
                err = y[held] - pred
                fold_mse.append(float(np.mean(err**2)))
                fold_mae.append(float(np.mean(np.abs(err))))
            rep_mse.append(float(np.mean(fold_mse)))
            rep_mae.append(float(np.mean(fold_mae)))
        results[k] = {
            "mse": float(np.mean(rep_mse)) if rep_mse else None,
            "mae": float(np.mean(rep_mae)) if rep_mae else None,
            "n_replicates_used": len(rep_mse),
            "n_replicates_skipped": skipped,
        }
    return results


def with_cv(dataset, candidate: ModelCandidate, cvconfig: CVConfig) -> ModelCandidate:
    """Candidate with cross-validation scores attached."""
    return replace(candidate, cv_scores=cross_validate(dataset, candidate, cvconfig))


# --- final choice -------------------------------------------------------------------


@dataclass(frozen=True)
class SelectionReport:
    recommended: ModelCandidate
    per_size: dict  # size -> row dict of scores

    def as_dict(self) -> dict:
        return {
            "recommended_size": self.recommended.size,
            "recommended": _candidate_dict(self.recommended),
            "per_size": {str(size): row for size, row in sorted(self.per_size.items())},
        }


def _candidate_dict(c: ModelCandidate) -> dict:
    return {
        "predictor_ids": list(c.predictor_ids),
        "coefficients": list(c.coefficients),
        "r2": c.r2,
        "adjusted_r2": c.adjusted_r2,
        "aic": c.aic,
        "bic": c.bic,
        "cv": {str(k): v for k, v in sorted(c.cv_scores.items())},
        "degenerate": c.degenerate,
    }


def _mean_cv_mse(candidate: ModelCandidate) -> float:
    scores = [v["mse"] for v in candidate.cv_scores.values() if v["mse"] is not None]
    return float(np.mean(scores)) if scores else math.inf


def select_module(candidates_by_size: dict, parsimony_band: float | None = None) -> SelectionReport:
    """Pick the size minimizing mean CV-MSE across k values; ties favor brevity.

    ``candidates_by_size`` maps size -> the size's best candidate, with CV
    scores already attached.  Because candidates were selected in-sample,
    CV-MSE differences well inside its own sampling error are noise, so
    "ties" are read as a practical-equivalence band: the smallest size whose
    mean CV-MSE is within ``parsimony_band`` (relative) of the minimum wins.
    The default band is sqrt(2/n), the relative sampling error of an MSE
    estimate on n residuals; exact ties then still resolve to fewer
    predictors.
    """
    if not candidates_by_size:
        raise ValueError("no candidates to select from")
    if parsimony_band is None:
        n = max(c.n for c in candidates_by_size.values())
        parsimony_band = math.sqrt(2.0 / n)
    scores = {size: _mean_cv_mse(c) for size, c in candidates_by_size.items()}
    best = min(scores.values())
    threshold = best * (1.0 + parsimony_band) if math.isfinite(best) else math.inf
    eligible = [size for size, mse in scores.items() if mse <= threshold]
    recommended = candidates_by_size[min(eligible)]
    per_size = {
        size: {
            "predictor_ids": list(c.predictor_ids),
            "adjusted_r2": c.adjusted_r2,
            "aic": c.aic,
            "bic": c.bic,
            "cv": {str(k): v for k, v in sorted(c.cv_scores.items())},
            "mean_cv_mse": _mean_cv_mse(c),
        }
        for size, c in candidates_by_size.items()
    }
    return SelectionReport(recommended=recommended, per_size=per_size)


def run_selection(
    dataset: RegressionDataset,
    pool_ids=None,
    sizes=range(1, 7),
    top: int = 10,
    cvconfig: CVConfig = CVConfig(),
    n_jobs: int = 1,
) -> dict:
    """Full pipeline: subset search, shortlist exhaustion, CV, recommendation."""
    search = best_subset_search(dataset, pool_ids=pool_ids, sizes=sizes, top=top, n_jobs=n_jobs)
    shortlist_search = exhaustive_shortlist_search(dataset, search.shortlist, top=top, n_jobs=n_jobs)
    candidates_by_size = {}
    for size, board in sorted(shortlist_search.leaderboards.items()):
        if board and size in set(sizes):
            candidates_by_size[size] = with_cv(dataset, board[0], cvconfig)
    report = select_module(candidates_by_size)
    return {
        "parsimony_band": math.sqrt(2.0 / dataset.n),
        "n_rows": dataset.n,
        "pool_size": len(pool_ids) if pool_ids is not None else len(dataset.item_ids),
        "sizes": list(sizes),
        "n_fitted_stage1": search.n_fitted,
        "shortlist": list(search.shortlist),
        "n_fitted_shortlist": shortlist_search.n_fitted,
        "leaderboards": {
            str(size): [_candidate_dict(c) for c in board]
            for size, board in sorted(search.leaderboards.items())
        },
        "selection": report.as_dict(),
    }
