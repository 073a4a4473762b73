"""Metrics for comparing institution rankings against impact indicators."""
from __future__ import annotations

import math
from collections import defaultdict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

KSIM_KS = (5, 10, 20, 50, 100, 200, 500)


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of average ranks."""
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise ValueError("need at least two paired values")
    rx = rankdata(x, method="average")
    ry = rankdata(y, method="average")
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise ValueError("spearman is undefined for constant input")
    rho = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, rho))


def top_fraction_labels(values: Mapping[str, float], fraction: float) -> dict[str, int]:
    """Label the top ``ceil(fraction * N)`` ids as 1 (ties -> smaller id first)."""
    if not values:
        raise ValueError("no values to label")
    if not 0 < fraction < 1:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    k = math.ceil(fraction * len(values))
    order = sorted(values, key=lambda inst: (-values[inst], inst))
    positive = set(order[:k])
    return {inst: int(inst in positive) for inst in sorted(values)}


@dataclass
class RocCurve:
    points: list[tuple[float, float]]
    auc: float

    def trapezoid_area(self) -> float:
        return math.fsum(
            (x1 - x0) * (y0 + y1) / 2 for (x0, y0), (x1, y1) in zip(self.points, self.points[1:])
        )


def roc_auc(scores: Mapping[str, float], labels: Mapping[str, int]) -> RocCurve:
    """ROC curve by threshold sweep; AUC from the Mann-Whitney rank sum.

    Ties between a positive and a negative count one half.
    """
    ids = sorted(labels)
    s = np.array([scores[i] for i in ids], dtype=float)
    y = np.array([labels[i] for i in ids], dtype=int)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both positive and negative labels")
    ranks = rankdata(s, method="average")
    auc = (float(ranks[y == 1].sum()) - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)

    points = [(0.0, 0.0)]
    tp = fp = 0
    for thr in np.unique(s)[::-1]:
        at = s == thr
        tp += int(y[at].sum())
        fp += int(at.sum() - y[at].sum())
        points.append((fp / n_neg, tp / n_pos))
    return RocCurve(points, auc)


def ksim(tau1: Sequence[str], tau2: Sequence[str]) -> float:
    """Fraction of ordered pairs of the union on whose order both lists agree.

    Items missing from a list are appended to its end, all sharing one
    position; a pair tied in either extended list agrees in neither order.
    """
    for name, tau in (("tau1", tau1), ("tau2", tau2)):
        if not tau:
            raise ValueError(f"{name} is empty")
        if len(set(tau)) != len(tau):
            raise ValueError(f"{name} contains duplicate ids")
    union = sorted(set(tau1) | set(tau2))
    n = len(union)
    if n < 2:
        return 1.0
    p1 = _extended_positions(tau1, union)
    p2 = _extended_positions(tau2, union)
    s1 = np.sign(p1[:, None] - p1[None, :])
    s2 = np.sign(p2[:, None] - p2[None, :])
    agree = int(np.count_nonzero((s1 == s2) & (s1 != 0)))
    return agree / (n * (n - 1))


def _extended_positions(tau: Sequence[str], union: Sequence[str]) -> np.ndarray:
    pos = {inst: i for i, inst in enumerate(tau)}
    tail = len(tau)
    return np.array([pos.get(inst, tail) for inst in union], dtype=np.int64)


def h_index(values: Iterable[int]) -> int:
    h = 0
    for i, v in enumerate(sorted(values, reverse=True), start=1):
        if v >= i:
            h = i
        else:
            break
    return h


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    x_min: float
    n_tail: int

    @property
    def stderr(self) -> float:
        return (self.alpha - 1) / math.sqrt(self.n_tail)


def powerlaw_mle(samples: Iterable[float], x_min: float | None = None) -> PowerLawFit:
    """Continuous power-law exponent for the tail ``x >= x_min``.

    ``x_min`` defaults to the smallest positive sample.
    """
    xs = np.asarray([float(v) for v in samples], dtype=float)
    if x_min is None:
        positive = xs[xs > 0]
        if positive.size == 0:
            raise ValueError("no positive samples")
        x_min = float(positive.min())
    if not x_min > 0:
        raise ValueError(f"x_min must be positive, got {x_min}")
    tail = xs[xs >= x_min]
    if tail.size < 2:
        raise ValueError(f"need at least 2 samples >= x_min, got {tail.size}")
    log_sum = math.fsum(np.log(tail / x_min))
    if log_sum == 0:
        raise ValueError("all tail samples equal x_min")
    return PowerLawFit(1.0 + tail.size / log_sum, float(x_min), int(tail.size))


@dataclass(frozen=True)
class DistanceStats:
    year: int
    count: int
    mean: float
    median: float
    q1: float
    q3: float
    min: float
    max: float


def distance_summary(samples: Iterable[tuple[int, float]]) -> list[DistanceStats]:
    by_year: dict[int, list[float]] = defaultdict(list)
    for year, d in samples:
        by_year[year].append(d)
    out = []
    for year in sorted(by_year):
        v = np.asarray(by_year[year])
        q1, med, q3 = np.percentile(v, [25, 50, 75])
        out.append(
            DistanceStats(year, v.size, math.fsum(v) / v.size, float(med), float(q1), float(q3), float(v.min()), float(v.max()))
        )
    return out


IMPACT_METRICS = ("citation", "citation_h", "altmetrics", "altmetrics_h")


def impact_indicators(stats: Mapping) -> dict[str, dict[str, float]]:
    """Citation/altmetrics totals and h-indices per institution from ``InstitutionStats``."""
    return {
        "citation": {k: float(sum(s.citation_list)) for k, s in stats.items()},
        "citation_h": {k: float(h_index(s.citation_list)) for k, s in stats.items()},
        "altmetrics": {k: float(sum(s.altmetrics_list)) for k, s in stats.items()},
        "altmetrics_h": {k: float(h_index(s.altmetrics_list)) for k, s in stats.items()},
    }


def top_k(values: Mapping[str, float], k: int) -> list[str]:
    return sorted(values, key=lambda inst: (-values[inst], inst))[:k]


def _or_nan(fn, *args) -> float:
    try:
        return fn(*args)
    except ValueError:
        return math.nan


def evaluation_rows(
    indices: Mapping[str, Mapping[str, float]],
    impacts: Mapping[str, Mapping[str, float]],
    fraction: float = 0.05,
    ks: Sequence[int] = KSIM_KS,
) -> list[tuple[str, str, str, float]]:
    """Long-format ``(index, impact_metric, measure, value)`` rows.

    Measures are ``spearman``, ``auc`` (top ``fraction`` of the impact metric
    as positives) and ``ksim@k``. Undefined values come back as NaN.
    """
    rows = []
    for index_name, index_scores in indices.items():
        for impact_name, impact in impacts.items():
            ids = sorted(set(index_scores) & set(impact))
            x = [index_scores[i] for i in ids]
            y = [impact[i] for i in ids]
            rows.append((index_name, impact_name, "spearman", _or_nan(spearman, x, y)))
            sub_index = {i: index_scores[i] for i in ids}
            sub_impact = {i: impact[i] for i in ids}
            auc = math.nan
            if ids:
                labels = top_fraction_labels(sub_impact, fraction)
                auc = _or_nan(lambda: roc_auc(sub_index, labels).auc)
            rows.append((index_name, impact_name, "auc", auc))
            for k in ks:
                value = math.nan
                if ids:
                    value = ksim(top_k(sub_index, k), top_k(sub_impact, k))
                rows.append((index_name, impact_name, f"ksim@{k}", value))
    return rows


def index_correlations(indices: Mapping[str, Mapping[str, float]]) -> list[tuple[str, str, float]]:
    """Pairwise Spearman correlation between ranking indices."""
    names = list(indices)
    rows = []
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            ids = sorted(set(indices[a]) & set(indices[b]))
            rows.append((a, b, _or_nan(spearman, [indices[a][k] for k in ids], [indices[b][k] for k in ids])))
    return rows
