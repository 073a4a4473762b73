"""Command-line entry point ``slr``.

Exit status: 0 on success, 1 on input or usage errors, 2 on numerical
failures (e.g. a rank-deficient gravity fit).
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from . import corpus as corpus_mod
from .errors import InputError, NumericalError
from .evaluate import (
    KSIM_KS,
    distance_summary,
    evaluation_rows,
    impact_indicators,
    index_correlations,
    powerlaw_mle,
)
from .geo import kde_grid
from .gravity import lambda_by_year
from .leadership import build_network, flow_distance_samples, leadership_mass
from .pipeline import PipelineConfig, fit_gravity, load_corpus, resolve_lambda, threads_from_env, toy_paths
from .ranking import ALL_METRICS, RankParams, rank
from .report import FORMATS, Table, emit_report, write_text

log = logging.getLogger("spatial_leader")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERIC = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _lambda_arg(text: str):
    if text == "estimate":
        return text
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'estimate', got {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError("lambda must be finite")
    return value


def _years_arg(text: str) -> tuple[int, int]:
    try:
        a, b = (int(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A:B, got {text!r}") from None
    if a > b:
        raise argparse.ArgumentTypeError(f"empty year window {text!r}")
    return a, b


def _bounds_arg(text: str) -> tuple[float, float, float, float]:
    try:
        parts = tuple(float(v) for v in text.split(":"))
    except ValueError:
        parts = ()
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(f"expected LATMIN:LATMAX:LONMIN:LONMAX, got {text!r}")
    return parts


def _shape_arg(text: str) -> tuple[int, int]:
    try:
        rows, cols = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ROWSxCOLS, got {text!r}") from None
    return rows, cols


def _ks_arg(text: str) -> tuple[int, ...]:
    try:
        ks = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if any(k < 1 for k in ks):
        raise argparse.ArgumentTypeError("k values must be positive")
    return ks


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    src = common.add_argument_group("inputs")
    src.add_argument("--pubs", type=Path, help="line-delimited JSON publication records")
    src.add_argument("--inst", type=Path, help="institutions CSV (id,name,lat,lon,country)")
    src.add_argument("--toy", action="store_true", help="use the bundled three-paper toy corpus")
    common.add_argument("--out", type=Path, default=Path("slr_out"), help="output directory (default: slr_out)")
    common.add_argument("--format", dest="fmt", choices=FORMATS, default="csv")
    common.add_argument("--lambda", dest="lam", type=_lambda_arg, help="cross-border weight, or 'estimate'")
    common.add_argument("--years", type=_years_arg, help="inclusive year window A:B")
    common.add_argument("--field", dest="field_name", help="keep only records with this field tag")
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--max-iter", type=int, default=10000)
    common.add_argument("--damping", type=float, default=0.85)
    common.add_argument("--fraction", type=float, default=0.05, help="top fraction labelled positive for ROC")
    common.add_argument("--ksim-k", type=_ks_arg, default=KSIM_KS, help="comma-separated k list for KSim")
    common.add_argument("--bandwidth-km", type=float, default=100.0)
    common.add_argument("--log-response", action="store_true", help="regress log10 intensity in the gravity model")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="slr", description="Spatial research-leadership networks and rankings.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    sub.add_parser("validate", parents=[common], help="validate the corpus and report dropped records")
    p = sub.add_parser("lambda", parents=[common], help="fit the gravity model and print lambda")
    p.add_argument("--by-year", action="store_true", help="also fit one model per year")
    sub.add_parser("build", parents=[common], help="export the leadership network and leadership mass")
    p = sub.add_parser("rank", parents=[common], help="rank institutions by one metric")
    p.add_argument("--metric", choices=ALL_METRICS, required=True)
    sub.add_parser("eval", parents=[common], help="compare every index against the impact indicators")
    p = sub.add_parser("powerlaw", parents=[common], help="power-law fit and yearly summaries of flow distances")
    p.add_argument("--xmin", type=float, help="tail threshold in km (default: smallest positive distance)")
    p = sub.add_parser("kde", parents=[common], help="kernel density grid of leadership mass")
    p.add_argument("--grid-bounds", type=_bounds_arg, default=(-90.0, 90.0, -180.0, 180.0))
    p.add_argument("--grid-shape", type=_shape_arg, default=(90, 180), help="ROWSxCOLS (default 90x180)")
    return parser


def config_from_args(args) -> PipelineConfig:
    if args.toy:
        if args.pubs or args.inst:
            raise InputError("--toy cannot be combined with --pubs/--inst")
        pubs, inst = toy_paths()
    else:
        if not args.pubs or not args.inst:
            raise InputError("both --pubs and --inst are required (or --toy)")
        pubs, inst = args.pubs, args.inst
    return PipelineConfig(
        pubs=pubs,
        inst=inst,
        out=args.out,
        lam=args.lam,
        years=args.years,
        field_name=args.field_name,
        tol=args.tol,
        max_iter=args.max_iter,
        damping=args.damping,
        fraction=args.fraction,
        ksim_ks=tuple(args.ksim_k),
        bandwidth_km=args.bandwidth_km,
        grid_bounds=getattr(args, "grid_bounds", (-90.0, 90.0, -180.0, 180.0)),
        grid_shape=getattr(args, "grid_shape", (90, 180)),
        fmt=args.fmt,
        log_response=args.log_response,
        threads=threads_from_env(),
    )


def _emit(cfg: PipelineConfig, stem: str, table: Table) -> Path:
    return write_text(cfg.out / f"{stem}.{cfg.fmt}", emit_report(table, cfg.fmt))


def cmd_validate(cfg, args):
    corpus = load_corpus(cfg)
    rep = corpus.report
    table = Table(
        ("record_id", "reason"),
        list(rep.dropped),
        comments=[
            f"record_count={rep.record_count} accepted={rep.accepted_count} dropped={len(rep.dropped)} "
            f"distinct_institutions={rep.distinct_institutions} parse_errors={len(corpus.parse_errors)}"
        ]
        + [f"parse_error line={e.line} {e.message}" for e in corpus.parse_errors],
        meta={
            "record_count": rep.record_count,
            "accepted": rep.accepted_count,
            "dropped_count": len(rep.dropped),
            "distinct_institutions": rep.distinct_institutions,
            "parse_errors": [{"line": e.line, "message": e.message} for e in corpus.parse_errors],
        },
    )
    _emit(cfg, "validation", table)
    print(
        f"records={rep.record_count} accepted={rep.accepted_count} dropped={len(rep.dropped)} "
        f"distinct_institutions={rep.distinct_institutions} parse_errors={len(corpus.parse_errors)}"
    )


def cmd_lambda(cfg, args):
    corpus = load_corpus(cfg)
    fit = fit_gravity(corpus, cfg)
    write_text(cfg.out / "gravity_fit.txt", fit.to_text())
    write_text(cfg.out / "gravity_fit.json", fit.to_json())
    if args.by_year:
        years = sorted({r.year for r in corpus.records})
        series = lambda_by_year(corpus.records, corpus.institutions, years, cfg.log_response)
        rows = [(y.year, math.nan if y.lam is None else y.lam, y.reason or "") for y in series]
        _emit(cfg, "lambda_by_year", Table(("year", "lambda", "reason"), rows))
    if math.isnan(fit.lam):
        raise NumericalError("distance coefficient vanishes; lambda is undefined")
    print(f"lambda={fit.lam!r}")


def _network(cfg, corpus, required=True):
    lam = resolve_lambda(corpus, cfg, required)
    return build_network(corpus.records, corpus.institutions, lam)


def cmd_build(cfg, args):
    corpus = load_corpus(cfg)
    net, mass = _network(cfg, corpus)
    _emit(cfg, "network", net.to_table())
    _emit(cfg, "leadership_mass", mass.to_table())
    print(f"lambda={net.lambda_used!r} nodes={len(net.nodes)} edges={len(net.edges)}")


def _params(cfg) -> RankParams:
    return RankParams(cfg.tol, cfg.max_iter, cfg.damping)


def _publication_counts(records):
    return {k: s.publication_count for k, s in corpus_mod.institution_stats(records).items()}


def cmd_rank(cfg, args):
    corpus = load_corpus(cfg)
    net, _ = _network(cfg, corpus, required=args.metric == "spatialleaderrank")
    if not net.nodes:
        result_table = Table(("rank", "institution_id", "score"))
        _emit(cfg, f"ranking_{args.metric}", result_table)
        return
    result = rank(net, args.metric, _params(cfg), _publication_counts(corpus.records))
    if not result.converged:
        log.warning("%s did not converge after %d iterations (residual %.3g)", args.metric, result.iterations, result.residual)
    _emit(cfg, f"ranking_{args.metric}", result.to_table())


def cmd_eval(cfg, args):
    corpus = load_corpus(cfg)
    net, _ = _network(cfg, corpus)
    stats = corpus_mod.institution_stats(corpus.records)
    counts = {k: s.publication_count for k, s in stats.items()}
    indices = {}
    if net.nodes:
        for metric in ALL_METRICS:
            result = rank(net, metric, _params(cfg), counts)
            if not result.converged:
                log.warning("%s did not converge", metric)
            indices[metric] = result.scores
    rows = evaluation_rows(indices, impact_indicators(stats), cfg.fraction, cfg.ksim_ks)
    _emit(cfg, "evaluation", Table(("index", "impact_metric", "measure", "value"), rows))
    _emit(cfg, "index_correlation", Table(("index_a", "index_b", "spearman"), index_correlations(indices)))


def cmd_powerlaw(cfg, args):
    corpus = load_corpus(cfg)
    samples = flow_distance_samples(corpus.records, corpus.institutions)
    rows = []
    scopes = [("all", [d for _, d in samples])]
    scopes += [(str(y), [d for yy, d in samples if yy == y]) for y in sorted({y for y, _ in samples})]
    for scope, dists in scopes:
        try:
            fit = powerlaw_mle(dists, args.xmin)
            rows.append((scope, fit.alpha, fit.x_min, fit.n_tail, fit.stderr))
        except ValueError as exc:
            if scope == "all":
                raise NumericalError(f"power-law fit failed: {exc}") from exc
            rows.append((scope, math.nan, math.nan, 0, math.nan))
    _emit(cfg, "powerlaw", Table(("scope", "alpha", "x_min", "n_tail", "stderr"), rows))
    summary = [
        (s.year, s.count, s.mean, s.median, s.q1, s.q3, s.min, s.max) for s in distance_summary(samples)
    ]
    _emit(cfg, "distance_summary", Table(("year", "count", "mean", "median", "q1", "q3", "min", "max"), summary))


def cmd_kde(cfg, args):
    corpus = load_corpus(cfg)
    mass = leadership_mass(corpus.records)
    points = [(corpus.institutions[k], w) for k, w in sorted(mass.mass.items())]
    try:
        grid = kde_grid(points, cfg.bandwidth_km, cfg.grid_bounds, cfg.grid_shape)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if cfg.fmt == "csv":
        write_text(cfg.out / "kde_grid.csv", grid.to_csv())
    else:
        table = Table(
            tuple(f"c{j}" for j in range(grid.cols)),
            [tuple(float(v) for v in row) for row in grid.values],
            meta={
                "lat_min": grid.lat_min,
                "lat_max": grid.lat_max,
                "lon_min": grid.lon_min,
                "lon_max": grid.lon_max,
                "rows": grid.rows,
                "cols": grid.cols,
                "bandwidth_km": grid.bandwidth_km,
            },
        )
        write_text(cfg.out / "kde_grid.json", table.to_json())


COMMANDS = {
    "validate": cmd_validate,
    "lambda": cmd_lambda,
    "build": cmd_build,
    "rank": cmd_rank,
    "eval": cmd_eval,
    "powerlaw": cmd_powerlaw,
    "kde": cmd_kde,
}


def run_command(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="slr: %(levelname)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        cfg = config_from_args(args)
        COMMANDS[args.command](cfg, args)
    except InputError as exc:
        print(f"slr: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"slr: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main() -> None:
    sys.exit(run_command())
