"""Gravity model of pairwise co-publication intensity and the cross-border weight.

The model regresses the co-publication count of an institution pair on the
log10 publication masses of both sides, the log10 distance between them and
a cross-border dummy (plus any caller-supplied proximity covariates). The
cross-border weight used by the spatial score is the ratio of the border
coefficient to the distance coefficient.
"""
from __future__ import annotations

import io
import json
import math
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.linalg

from .corpus import Institution, PublicationRecord
from .errors import NumericalError
from .geo import DISTANCE_FLOOR_KM, haversine_km

BASE_COLUMNS = ("intercept", "pubmass_a", "pubmass_b", "distance", "country")
MAX_CONDITION = 1e12
DISTANCE_COEF_EPS = 1e-9


class GravityError(NumericalError):
    pass


@dataclass(frozen=True)
class GravitySample:
    pair: tuple[str, str]
    intensity: float
    log_pubmass_a: float
    log_pubmass_b: float
    log_distance: float
    cross_border: int
    extras: tuple[float, ...] = ()


@dataclass
class GravityFit:
    names: tuple[str, ...]
    coefficients: tuple[float, ...]
    standard_errors: tuple[float, ...]
    r_squared: float
    n_samples: int
    residual_min: float = 0.0
    residual_max: float = 0.0
    residual_mean: float = 0.0
    lam: float = field(init=False)

    def __post_init__(self):
        b_dist = self.coef("distance")
        self.lam = self.coef("country") / b_dist if abs(b_dist) > DISTANCE_COEF_EPS else math.nan

    def coef(self, name: str) -> float:
        return self.coefficients[self.names.index(name)]

    def to_dict(self) -> dict:
        return {
            "coefficients": [
                {"name": n, "estimate": _round12(b), "stderr": _round12(s)}
                for n, b, s in zip(self.names, self.coefficients, self.standard_errors)
            ],
            "r_squared": _round12(self.r_squared),
            "n_samples": self.n_samples,
            "lambda": None if math.isnan(self.lam) else _round12(self.lam),
            "residuals": {
                "min": _round12(self.residual_min),
                "max": _round12(self.residual_max),
                "mean": _round12(self.residual_mean),
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"{'name':<16}{'estimate':>22}{'stderr':>22}\n")
        for n, b, s in zip(self.names, self.coefficients, self.standard_errors):
            buf.write(f"{n:<16}{b:>22.12g}{s:>22.12g}\n")
        buf.write(f"r_squared = {self.r_squared:.12g}\n")
        buf.write(f"n_samples = {self.n_samples}\n")
        buf.write(f"lambda = {'nan' if math.isnan(self.lam) else format(self.lam, '.12g')}\n")
        buf.write(
            f"residuals = min {self.residual_min:.12g}, max {self.residual_max:.12g}, "
            f"mean {self.residual_mean:.12g}\n"
        )
        return buf.getvalue()


def _round12(x: float) -> float:
    return float(f"{x:.12g}")


def build_gravity_samples(
    records: Iterable[PublicationRecord],
    institutions: Mapping[str, Institution],
    years: tuple[int, int] | None = None,
) -> list[GravitySample]:
    """One sample per unordered pair that co-publishes inside the window.

    Publication mass is the number of in-window papers an institution
    appears on. Pairs are keyed ``(a, b)`` with ``a < b``; ``a`` takes the
    ``pubmass_a`` role.
    """
    pubmass: Counter[str] = Counter()
    intensity: Counter[tuple[str, str]] = Counter()
    for record in records:
        if years is not None and not (years[0] <= record.year <= years[1]):
            continue
        insts = sorted(set(record.institutions))
        pubmass.update(insts)
        intensity.update(combinations(insts, 2))
    samples = []
    for a, b in sorted(intensity):
        ia, ib = institutions[a], institutions[b]
        samples.append(
            GravitySample(
                pair=(a, b),
                intensity=float(intensity[a, b]),
                log_pubmass_a=math.log10(pubmass[a]),
                log_pubmass_b=math.log10(pubmass[b]),
                log_distance=math.log10(max(haversine_km(ia, ib), DISTANCE_FLOOR_KM)),
                cross_border=int(ia.country != ib.country),
            )
        )
    return samples


def design_matrix(
    samples: Sequence[GravitySample], extra_names: Sequence[str] | None = None, log_response: bool = False
) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
    n_extra = len(samples[0].extras) if samples else 0
    if any(len(s.extras) != n_extra for s in samples):
        raise ValueError("all samples must carry the same number of extra covariates")
    if extra_names is None:
        extra_names = [f"extra_{k}" for k in range(n_extra)]
    elif len(extra_names) != n_extra:
        raise ValueError(f"{len(extra_names)} extra names for {n_extra} extra columns")
    names = BASE_COLUMNS + tuple(extra_names)
    X = np.array(
        [
            (1.0, s.log_pubmass_a, s.log_pubmass_b, s.log_distance, float(s.cross_border), *s.extras)
            for s in samples
        ],
        dtype=float,
    ).reshape(len(samples), len(names))
    y = np.array([s.intensity for s in samples], dtype=float)
    if log_response:
        if np.any(y <= 0):
            raise GravityError("log response needs positive intensities")
        y = np.log10(y)
    return X, y, names


def ols(X: np.ndarray, y: np.ndarray, names: Sequence[str]) -> GravityFit:
    """Least squares via column-pivoted QR.

    Raises :class:`GravityError` when there are no more rows than columns,
    when the design is rank deficient (naming the dependent columns) or when
    its condition number exceeds ``MAX_CONDITION``.
    """
    n, p = X.shape
    if n <= p:
        raise GravityError(f"too few samples: {n} rows for {p} coefficients")
    Q, R, perm = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > diag[0] * 1e-12)) if diag[0] > 0 else 0
    if rank < p:
        dependent = sorted(names[j] for j in perm[rank:])
        raise GravityError(f"rank-deficient design: collinear columns {', '.join(dependent)}")
    cond = np.linalg.cond(R)
    if not cond < MAX_CONDITION:
        raise GravityError(f"ill-conditioned design (condition number {cond:.3g})")
    beta_perm = scipy.linalg.solve_triangular(R, Q.T @ y)
    beta = np.empty(p)
    beta[perm] = beta_perm
    resid = y - X @ beta
    rss = float(resid @ resid)
    tss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    r2 = min(1.0, max(0.0, r2))
    sigma2 = rss / (n - p)
    Rinv = scipy.linalg.solve_triangular(R, np.eye(p))
    cov_perm = sigma2 * (Rinv @ Rinv.T)
    se = np.empty(p)
    se[perm] = np.sqrt(np.diag(cov_perm))
    return GravityFit(
        names=tuple(names),
        coefficients=tuple(float(b) for b in beta),
        standard_errors=tuple(float(s) for s in se),
        r_squared=r2,
        n_samples=n,
        residual_min=float(resid.min()),
        residual_max=float(resid.max()),
        residual_mean=float(resid.mean()),
    )


def ols_fit(
    samples: Sequence[GravitySample], extra_names: Sequence[str] | None = None, log_response: bool = False
) -> GravityFit:
    """Fit the gravity model. ``log_response`` regresses log10 intensity instead."""
    if not samples:
        raise GravityError("too few samples: none")
    X, y, names = design_matrix(samples, extra_names, log_response)
    return ols(X, y, names)


def estimate_lambda(fit: GravityFit) -> float:
    b_dist = fit.coef("distance")
    if abs(b_dist) <= DISTANCE_COEF_EPS:
        raise GravityError("distance coefficient vanishes")
    return fit.coef("country") / b_dist


@dataclass(frozen=True)
class YearLambda:
    year: int
    lam: float | None
    reason: str | None = None


def lambda_by_year(
    records: Sequence[PublicationRecord],
    institutions: Mapping[str, Institution],
    years: Iterable[int],
    log_response: bool = False,
) -> list[YearLambda]:
    """Fit one gravity model per calendar year; failures become entries with a reason."""
    out = []
    for year in sorted(set(years)):
        samples = build_gravity_samples(records, institutions, (year, year))
        try:
            fit = ols_fit(samples, log_response=log_response)
            out.append(YearLambda(year, estimate_lambda(fit)))
        except GravityError as exc:
            reason = "too few samples" if str(exc).startswith("too few samples") else str(exc)
            out.append(YearLambda(year, None, reason))
    return out
