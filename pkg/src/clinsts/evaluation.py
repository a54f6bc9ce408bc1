"""Correlation, error breakdowns, per-feature analysis and feature-group ablation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import forest
from .errors import DegenerateVariance, SizeMismatch
from .features import FEATURE_GROUPS, FEATURE_NAMES

REGION_EDGES = (0.0, 1.0, 2.0, 3.0, 4.0, 5.0)


def _pair(pred, gold):
    pred = np.asarray(pred, dtype=np.float64).ravel()
    gold = np.asarray(gold, dtype=np.float64).ravel()
    if pred.shape != gold.shape:
        raise SizeMismatch(f"{len(pred)} predictions vs {len(gold)} gold scores")
    return pred, gold


def pearson(pred, gold) -> float:
    pred, gold = _pair(pred, gold)
    if len(pred) < 2:
        raise SizeMismatch("pearson needs at least two points")
    dp = pred - pred.mean()
    dg = gold - gold.mean()
    sp = float(np.dot(dp, dp))
    sg = float(np.dot(dg, dg))
    if sp == 0.0 or sg == 0.0:
        raise DegenerateVariance("pearson is undefined for a constant vector")
    r = float(np.dot(dp, dg)) / math.sqrt(sp * sg)
    return max(-1.0, min(1.0, r))


def mse(pred, gold) -> float:
    pred, gold = _pair(pred, gold)
    if len(pred) == 0:
        raise SizeMismatch("mse of an empty vector")
    return float(np.mean((pred - gold) ** 2))


@dataclass
class EvalReport:
    pearson: float | None
    mse: float
    n: int


def evaluate(pred, gold) -> EvalReport:
    pred, gold = _pair(pred, gold)
    try:
        r = pearson(pred, gold)
    except (DegenerateVariance, SizeMismatch):
        r = None
    return EvalReport(r, mse(pred, gold), len(pred))


@dataclass
class RegionRow:
    low: float
    high: float
    count: int
    mse: float | None

    @property
    def label(self) -> str:
        close = "]" if self.high == REGION_EDGES[-1] else ")"
        return f"[{self.low:g},{self.high:g}{close}"


def region_index(score: float) -> int:
    """Bin of a gold score: [0,1), [1,2), [2,3), [3,4), [4,5]."""
    return min(int(math.floor(score)), len(REGION_EDGES) - 2)


def mse_by_region(pred, gold) -> list[RegionRow]:
    pred, gold = _pair(pred, gold)
    sq = (pred - gold) ** 2
    bins = np.array([region_index(g) for g in gold], dtype=np.int64)
    rows = []
    for k in range(len(REGION_EDGES) - 1):
        sel = bins == k
        count = int(sel.sum())
        rows.append(
            RegionRow(REGION_EDGES[k], REGION_EDGES[k + 1], count,
                      float(sq[sel].mean()) if count else None)
        )
    return rows


def per_feature_correlation(features, gold) -> list[float | None]:
    X = np.asarray(features, dtype=np.float64)
    gold = np.asarray(gold, dtype=np.float64).ravel()
    if X.ndim != 2 or len(X) != len(gold):
        raise SizeMismatch(f"feature matrix {X.shape} vs {len(gold)} gold scores")
    out = []
    for j in range(X.shape[1]):
        try:
            out.append(pearson(X[:, j], gold))
        except DegenerateVariance:
            out.append(None)
    return out


def top_errors(pred, gold, k: int = 10):
    """Indices of the ``k`` largest absolute errors, largest first."""
    pred, gold = _pair(pred, gold)
    err = np.abs(pred - gold)
    return [int(i) for i in np.argsort(-err, kind="stable")[:k]]


# ---------------------------------------------------------------------------
# ablation
# ---------------------------------------------------------------------------


@dataclass
class AblationRow:
    group: str
    n_removed: int
    n_remaining: int
    validation_pearson: float | None
    test_pearson: float | None
    validation_delta: float | None = None
    test_delta: float | None = None


@dataclass
class AblationReport:
    rows: list = field(default_factory=list)


def _safe_pearson(pred, gold):
    try:
        return pearson(pred, gold)
    except DegenerateVariance:
        return None


def _delta(value, base):
    return None if value is None or base is None else value - base


def ablation(train, validation, config: forest.ForestConfig, test=None,
             groups=FEATURE_GROUPS) -> AblationReport:
    """Retrain the forest with each feature group removed.

    ``train``, ``validation`` and ``test`` are ``(X, gold)`` tuples over the
    full 14-column layout. The forest seed is the same for every row.
    """
    X_tr, y_tr = train
    X_va, y_va = validation
    n_total = X_tr.shape[1]
    rows = []

    def run(name, drop):
        keep = [j for j in range(n_total) if j not in set(drop)]
        model = forest.fit(X_tr[:, keep], y_tr, config)
        val = _safe_pearson(forest.predict(model, X_va[:, keep]), y_va)
        tst = None
        if test is not None:
            tst = _safe_pearson(forest.predict(model, test[0][:, keep]), test[1])
        return AblationRow(name, len(drop), len(keep), val, tst)

    full = run("full", ())
    rows.append(full)
    for name, cols in groups.items():
        row = run(name, cols)
        row.validation_delta = _delta(row.validation_pearson, full.validation_pearson)
        row.test_delta = _delta(row.test_pearson, full.test_pearson)
        rows.append(row)
    return AblationReport(rows)


# ---------------------------------------------------------------------------
# JSON report
# ---------------------------------------------------------------------------


def sig6(x):
    """Round to 6 significant digits for report output; None passes through."""
    if x is None:
        return None
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.6g}")


def build_report(pred, gold, features=None, ablation_report=None) -> dict:
    ev = evaluate(pred, gold)
    doc = {
        "pearson": sig6(ev.pearson),
        "mse": sig6(ev.mse),
        "n": ev.n,
        "regions": [
            {"bin": r.label, "low": r.low, "high": r.high, "count": r.count, "mse": sig6(r.mse)}
            for r in mse_by_region(pred, gold)
        ],
        "per_feature": [],
        "ablation": [],
    }
    if features is not None:
        corr = per_feature_correlation(features, gold)
        doc["per_feature"] = [
            {"index": j, "name": FEATURE_NAMES[j] if j < len(FEATURE_NAMES) else f"f{j}",
             "pearson": sig6(c)}
            for j, c in enumerate(corr)
        ]
    if ablation_report is not None:
        doc["ablation"] = ablation_rows_json(ablation_report)
    return doc


def ablation_rows_json(report: AblationReport) -> list[dict]:
    return [
        {
            "group": r.group,
            "n_removed": r.n_removed,
            "n_remaining": r.n_remaining,
            "validation_pearson": sig6(r.validation_pearson),
            "test_pearson": sig6(r.test_pearson),
            "validation_delta": sig6(r.validation_delta),
            "test_delta": sig6(r.test_delta),
        }
        for r in report.rows
    ]
