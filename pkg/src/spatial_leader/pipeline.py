"""Glue between input files and the analysis modules."""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .corpus import (
    Institution,
    ParseError,
    PublicationRecord,
    ValidationReport,
    filter_records,
    load_institutions,
    parse_publications,
    validate_corpus,
)
from .errors import InputError
from .evaluate import KSIM_KS
from .geo import DEFAULT_BANDWIDTH_KM
from .gravity import GravityError, GravityFit, build_gravity_samples, estimate_lambda, ols_fit
from .ranking import DEFAULT_DAMPING, DEFAULT_MAX_ITER, DEFAULT_TOL

log = logging.getLogger(__name__)

TOY_PUBLICATIONS = "toy_publications.jsonl"
TOY_INSTITUTIONS = "toy_institutions.csv"


@dataclass
class PipelineConfig:
    pubs: Path
    inst: Path
    out: Path
    lam: float | str | None = None  # number, "estimate" or unset
    years: tuple[int, int] | None = None
    field_name: str | None = None
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    damping: float = DEFAULT_DAMPING
    fraction: float = 0.05
    ksim_ks: tuple[int, ...] = KSIM_KS
    bandwidth_km: float = DEFAULT_BANDWIDTH_KM
    grid_bounds: tuple[float, float, float, float] = (-90.0, 90.0, -180.0, 180.0)
    grid_shape: tuple[int, int] = (90, 180)
    fmt: str = "csv"
    log_response: bool = False
    threads: int = 1

    def __post_init__(self):
        for name in ("pubs", "inst", "out"):
            if not str(getattr(self, name)):
                raise InputError(f"{name} path must be non-empty")
        if not self.tol > 0:
            raise InputError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise InputError(f"max-iter must be >= 1, got {self.max_iter}")
        if not 0 < self.fraction < 1:
            raise InputError(f"fraction must lie in (0, 1), got {self.fraction}")
        if not 0 < self.damping < 1:
            raise InputError(f"damping must lie in (0, 1), got {self.damping}")
        if not self.bandwidth_km > 0:
            raise InputError(f"bandwidth must be positive, got {self.bandwidth_km}")


def toy_paths() -> tuple[Path, Path]:
    base = resources.files("spatial_leader") / "data"
    return Path(str(base / TOY_PUBLICATIONS)), Path(str(base / TOY_INSTITUTIONS))


def threads_from_env() -> int:
    raw = os.environ.get("SLR_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"SLR_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise InputError(f"SLR_THREADS must be a positive integer, got {raw!r}")
    return n


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc


@dataclass
class Corpus:
    records: list[PublicationRecord]
    institutions: dict[str, Institution]
    report: ValidationReport
    parse_errors: list[ParseError] = field(default_factory=list)


def load_corpus(cfg: PipelineConfig) -> Corpus:
    """Parse, filter by year/field, then validate."""
    records, errors = parse_publications(_read(cfg.pubs))
    for err in errors:
        log.warning("%s line %d: %s", cfg.pubs, err.line, err.message)
    institutions = load_institutions(_read(cfg.inst))
    records = filter_records(records, cfg.years, cfg.field_name)
    accepted, report = validate_corpus(records, institutions)
    return Corpus(accepted, institutions, report, errors)


def fit_gravity(corpus: Corpus, cfg: PipelineConfig) -> GravityFit:
    samples = build_gravity_samples(corpus.records, corpus.institutions, cfg.years)
    return ols_fit(samples, log_response=cfg.log_response)


def resolve_lambda(corpus: Corpus, cfg: PipelineConfig, required: bool = True) -> float:
    if cfg.lam is None:
        if required:
            raise InputError("the spatial network needs --lambda <value> or --lambda estimate")
        return 0.0
    if cfg.lam == "estimate":
        lam = estimate_lambda(fit_gravity(corpus, cfg))
        if not lam >= 0:
            raise GravityError(f"estimated lambda {lam!r} is negative; the spatial score needs lambda >= 0")
        log.info("estimated lambda = %r", lam)
        return lam
    return float(cfg.lam)
