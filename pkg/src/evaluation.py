"""Hamming loss, reduction size, Pareto non-dominance and Wilcoxon signed-rank tests.

Aggregations return pandas DataFrames in canonical order:
theta, classifier (br, lp, mlknn, all), method (ALL, MRHC, MChen, MRSP1,
MRSP2, MRSP3; m ascending), k.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Iterable, List, Sequence

import numpy as np
import pandas as pd
from scipy.stats import norm, rankdata

from src.errors import EvaluationError
from src.mldata import Labelset
from src.reducers import method_sort_key

logger = logging.getLogger(__name__)

RECORD_COLUMNS = ["corpus", "theta", "method", "classifier", "k", "hl", "size_pct"]
CLASSIFIER_ORDER = {"br": 0, "lp": 1, "mlknn": 2, "all": 3}
BASELINES = ("ALL", "MRHC")
DEFAULT_ALPHA = 0.05
EXACT_LIMIT = 20
MIN_PAIRS = 5


@dataclass(frozen=True)
class EvalRecord:
    method: str
    corpus: str
    theta: float
    classifier: str
    k: int
    hl: float
    size_pct: float

    def __post_init__(self):
        if not 0.0 <= self.hl <= 1.0:
            raise EvaluationError(f"Hamming loss out of range: {self.hl}")

    def as_row(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ParetoPoint:
    method: str
    hl: float
    size_pct: float


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    p_value: float
    verdict: str  # improve | worsen | no-difference
    n: int
    w_plus: float
    w_minus: float
    method: str  # exact | normal


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def hamming_loss(truth: Sequence[Labelset], pred: Sequence[Labelset], L: int) -> float:
    """Mean size of the symmetric difference between true and predicted labelsets, over L."""
    if len(truth) != len(pred):
        raise EvaluationError(f"Length mismatch: {len(truth)} true vs {len(pred)} predicted labelsets")
    if len(truth) == 0:
        raise EvaluationError("Hamming loss needs at least one instance")
    if L < 1:
        raise EvaluationError(f"Label count must be positive, got {L}")
    wrong = sum(t.symmetric_difference_size(p) for t, p in zip(truth, pred))
    return wrong / (len(truth) * L)


# ---------------------------------------------------------------------------
# Pareto
# ---------------------------------------------------------------------------

def dominates(a: ParetoPoint, b: ParetoPoint) -> bool:
    """a is no worse in both objectives and strictly better in one."""
    return (
        a.hl <= b.hl
        and a.size_pct <= b.size_pct
        and (a.hl < b.hl or a.size_pct < b.size_pct)
    )


def pareto_front(points: Sequence[ParetoPoint]) -> List[ParetoPoint]:
    """Non-dominated points in input order; duplicates of a frontier point are all kept."""
    if not points:
        raise EvaluationError("Pareto front of an empty set")
    return [p for p in points if not any(dominates(q, p) for q in points)]


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank
# ---------------------------------------------------------------------------

def exact_signed_rank_pvalue(ranks: Sequence[float], w_plus: float) -> float:
    """Two-sided p of W+ under the null, counting all 2^n sign assignments.

    Average ranks are multiples of 1/2, so sums are tracked in half-units.
    """
    doubled = np.rint(2 * np.asarray(ranks, dtype=np.float64)).astype(np.int64)
    counts = np.zeros(int(doubled.sum()) + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:-r]
        counts = counts + shifted
    total = float(2 ** doubled.size)
    observed = int(round(2 * w_plus))
    lower = counts[: observed + 1].sum() / total
    upper = counts[observed:].sum() / total
    return min(1.0, 2.0 * min(lower, upper))


def _normal_pvalue(abs_diff: np.ndarray, w_plus: float) -> float:
    n = abs_diff.size
    mean = n * (n + 1) / 4.0
    _, ties = np.unique(abs_diff, return_counts=True)
    variance = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(ties ** 3 - ties)) / 48.0
    if variance <= 0:
        return 1.0
    z = max(0.0, abs(w_plus - mean) - 0.5) / math.sqrt(variance)
    return min(1.0, 2.0 * float(norm.sf(z)))


def wilcoxon_signed_rank(
    a: Sequence[float],
    b: Sequence[float],
    alpha: float = DEFAULT_ALPHA,
    exact_limit: int = EXACT_LIMIT,
) -> WilcoxonResult:
    """Paired two-sided test on a - b; ``improve`` means a is significantly lower."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise EvaluationError(f"Paired samples differ in length: {a.size} vs {b.size}")
    diff = a - b
    diff = diff[diff != 0]
    n = int(diff.size)
    if n < MIN_PAIRS:
        raise EvaluationError(f"insufficient pairs: {n} non-zero differences, need {MIN_PAIRS}")
    abs_diff = np.abs(diff)
    ranks = rankdata(abs_diff, method="average")
    w_plus = float(ranks[diff > 0].sum())
    w_minus = float(ranks[diff < 0].sum())
    if n <= exact_limit:
        p_value, how = exact_signed_rank_pvalue(ranks, w_plus), "exact"
    else:
        p_value, how = _normal_pvalue(abs_diff, w_plus), "normal"
    if p_value < alpha:
        verdict = "improve" if w_minus > w_plus else "worsen"
    else:
        verdict = "no-difference"
    return WilcoxonResult(min(w_plus, w_minus), p_value, verdict, n, w_plus, w_minus, how)


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

def records_frame(records: Iterable[EvalRecord]) -> pd.DataFrame:
    return pd.DataFrame([r.as_row() for r in records], columns=RECORD_COLUMNS)


def sort_frame(frame: pd.DataFrame) -> pd.DataFrame:
    """Canonical row order for any frame holding a subset of the record columns."""
    keys = []
    work = frame.copy()
    if "theta" in work:
        keys.append("theta")
    if "classifier" in work:
        work["_classifier"] = work["classifier"].map(lambda c: CLASSIFIER_ORDER.get(c, len(CLASSIFIER_ORDER)))
        keys.append("_classifier")
    if "method" in work:
        work["_method_rank"] = work["method"].map(lambda m: method_sort_key(m)[0])
        work["_method_m"] = work["method"].map(lambda m: method_sort_key(m)[1])
        keys += ["_method_rank", "_method_m"]
    if "k" in work:
        keys.append("k")
    if "corpus" in work:
        keys.append("corpus")
    if keys:
        work = work.sort_values(keys, kind="mergesort")
    return work.drop(columns=[c for c in work.columns if c.startswith("_")]).reset_index(drop=True)


def _as_frame(records) -> pd.DataFrame:
    frame = records if isinstance(records, pd.DataFrame) else records_frame(records)
    if frame.empty:
        raise EvaluationError("No records to aggregate")
    return frame


def aggregate(records, group_by: Sequence[str] = ("theta", "method", "classifier", "k")) -> pd.DataFrame:
    """Unweighted mean HL and size per group, plus the number of records averaged."""
    frame = _as_frame(records)
    grouped = (
        frame.groupby(list(group_by), sort=False)
        .agg(hl=("hl", "mean"), size_pct=("size_pct", "mean"), records=("hl", "size"))
        .reset_index()
    )
    return sort_frame(grouped)


def results_table(records) -> pd.DataFrame:
    """Per (theta, method): mean size and mean HL for every classifier/k column."""
    means = aggregate(records, ("theta", "method", "classifier", "k"))
    means["column"] = means["classifier"] + "_k" + means["k"].astype(str)
    columns = list(dict.fromkeys(means["column"]))
    hl = means.pivot_table(index=["theta", "method"], columns="column", values="hl", sort=False)
    size = aggregate(records, ("theta", "method"))[["theta", "method", "size_pct"]]
    table = size.merge(hl[columns].reset_index(), on=["theta", "method"], how="left")
    return sort_frame(table)


def scenario_table(records) -> pd.DataFrame:
    """Per (theta, method): mean size and mean HL per k, averaged over corpora and classifiers."""
    means = aggregate(records, ("theta", "method", "k"))
    means["column"] = "k" + means["k"].astype(str)
    columns = list(dict.fromkeys(means["column"]))
    hl = means.pivot_table(index=["theta", "method"], columns="column", values="hl", sort=False)
    size = aggregate(records, ("theta", "method"))[["theta", "method", "size_pct"]]
    table = size.merge(hl[columns].reset_index(), on=["theta", "method"], how="left")
    return sort_frame(table)


def best_k(means: pd.DataFrame, scenario: Sequence[str] = ("theta", "classifier")) -> pd.DataFrame:
    """Row with the lowest mean HL per scenario and method; ties go to the smaller k."""
    keys = [c for c in scenario if c in means] + ["method"]
    ordered = means.sort_values(keys + ["hl", "k"], kind="mergesort")
    return sort_frame(ordered.groupby(keys, sort=False).head(1))


def scenario_means(records) -> pd.DataFrame:
    """Mean HL/size per (theta, classifier, k, method), with classifier='all' for the classifier average."""
    frame = _as_frame(records)
    per_classifier = aggregate(frame, ("theta", "classifier", "k", "method"))
    averaged = aggregate(frame, ("theta", "k", "method"))
    averaged.insert(1, "classifier", "all")
    return sort_frame(pd.concat([per_classifier, averaged], ignore_index=True))


def frontier_flags(means: pd.DataFrame, scenario: Sequence[str]) -> pd.Series:
    """Boolean Series marking non-dominated rows within each scenario group."""
    flags = pd.Series(False, index=means.index)
    for _, group in means.groupby(list(scenario), sort=False):
        points = [ParetoPoint(str(row.method), float(row.hl), float(row.size_pct)) for row in group.itertuples()]
        front = pareto_front(points)
        keep = {(p.method, p.hl, p.size_pct) for p in front}
        for index, point in zip(group.index, points):
            flags.at[index] = (point.method, point.hl, point.size_pct) in keep
    return flags


def pareto_table(records) -> pd.DataFrame:
    """Scenario means with a 0/1 frontier column per (theta, classifier, k)."""
    means = scenario_means(records)
    means["frontier"] = frontier_flags(means, ("theta", "classifier", "k")).astype(int)
    return means


def _per_corpus(frame: pd.DataFrame, theta: float, classifier: str) -> pd.DataFrame:
    subset = frame[frame["theta"] == theta]
    if classifier != "all":
        subset = subset[subset["classifier"] == classifier]
    return subset.groupby(["corpus", "method", "k"], sort=False)[["hl", "size_pct"]].mean().reset_index()


def compare_to_baselines(
    records,
    baselines: Sequence[str] = BASELINES,
    alpha: float = DEFAULT_ALPHA,
) -> pd.DataFrame:
    """Wilcoxon tests of every frontier (method, k) against each baseline's best k.

    Scenarios are (theta, classifier) including the classifier average
    'all'; the frontier is taken over the (method, k) means of the scenario
    and the paired samples are per-corpus HL and per-corpus size.
    """
    frame = _as_frame(records)
    rows = []
    scenarios = scenario_means(frame)[["theta", "classifier"]].drop_duplicates()
    for theta, classifier in scenarios.itertuples(index=False):
        per_corpus = _per_corpus(frame, theta, classifier)
        means = per_corpus.groupby(["method", "k"], sort=False)[["hl", "size_pct"]].mean().reset_index()
        means = sort_frame(means)
        means["frontier"] = frontier_flags(means.assign(_all=0), ["_all"])
        best = best_k(means, ())
        for point in means[means["frontier"]].itertuples():
            if point.method in baselines:
                continue
            for baseline in baselines:
                chosen = best[best["method"] == baseline]
                if chosen.empty:
                    continue
                baseline_k = int(chosen["k"].iloc[0])
                rows.extend(
                    _paired_tests(per_corpus, theta, classifier, point.method, int(point.k), baseline, baseline_k, alpha)
                )
    columns = [
        "theta", "classifier", "method", "k", "baseline", "baseline_k", "metric",
        "pairs", "statistic", "p_value", "verdict",
    ]
    return sort_frame(pd.DataFrame(rows, columns=columns))


def _paired_tests(
    per_corpus: pd.DataFrame,
    theta: float,
    classifier: str,
    method: str,
    k: int,
    baseline: str,
    baseline_k: int,
    alpha: float,
) -> List[dict]:
    ours = per_corpus[(per_corpus["method"] == method) & (per_corpus["k"] == k)].set_index("corpus")
    theirs = per_corpus[(per_corpus["method"] == baseline) & (per_corpus["k"] == baseline_k)].set_index("corpus")
    corpora = [c for c in ours.index if c in theirs.index]
    rows = []
    for metric in ("hl", "size_pct"):
        row = {
            "theta": theta, "classifier": classifier, "method": method, "k": k,
            "baseline": baseline, "baseline_k": baseline_k, "metric": metric,
            "pairs": len(corpora), "statistic": math.nan, "p_value": math.nan,
            "verdict": "insufficient-pairs",
        }
        try:
            result = wilcoxon_signed_rank(
                ours.loc[corpora, metric].to_numpy(), theirs.loc[corpora, metric].to_numpy(), alpha
            )
        except EvaluationError as e:
            logger.debug(f"{method} vs {baseline} ({metric}, theta={theta}, {classifier}): {e}")
        else:
            row.update(statistic=result.statistic, p_value=result.p_value, verdict=result.verdict)
        rows.append(row)
    return rows
