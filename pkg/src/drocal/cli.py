"""Command-line interface.

    drocal [global flags] {summarize,eligibility,reliability,design,n1-study} ...

Global flags (accepted before or after the subcommand):
    --config PATH      key = value config file
    --set key=value    override one config key (repeatable)
    --seed U64         master seed (same as --set seed=...)
    --jobs N           worker processes for per-e work
    --output DIR       output directory (default: out)

Exit codes: 0 success, 2 input error, 3 model/protocol error, 4 solver error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import constants as C
from .config import RunConfig, load_config, parse_set_flag
from .design import KwConfig, KwError, RobustObjective, kw_optimize
from .eligibility import (
    EligibilityRecord,
    build_polytopes,
    construct_eligibility_set,
    n1_impact_study,
    range_shrinkage_ranking,
    summarize_data,
)
from .errors import (
    DrocalError,
    EmptySetError,
    InvalidInputError,
    ModelEvaluationError,
    SolverError,
)
from .io import load_series_csv, read_csv, read_matrix, write_csv
from .model import Box, SyntheticOscillator, external_model, sample_uniform
from .reliability import low_rmin_subset, reliability_report
from .seeding import (
    PHASE_A_SAMPLES,
    PHASE_DESIGN,
    PHASE_E_SAMPLES,
    PHASE_OBJECTIVE,
    derive_seed,
)
from .summary import SUMMARY_FIELDS, FrequencyBand

log = logging.getLogger("drocal")

EXIT_OK, EXIT_INPUT, EXIT_MODEL, EXIT_SOLVER = 0, 2, 3, 4


# --- run context -------------------------------------------------------------


def bands_of(cfg: RunConfig):
    return FrequencyBand(*cfg.band1), FrequencyBand(*cfg.band2)


def make_model(cfg: RunConfig):
    if cfg.model == "oscillator":
        model = SyntheticOscillator()
        if cfg.a_lo is not None or cfg.a_hi is not None:
            model.a_box = Box(cfg.a_lo or model.a_box.lo, cfg.a_hi or model.a_box.hi)
        if cfg.e_lo is not None or cfg.e_hi is not None:
            model.e_box = Box(cfg.e_lo or model.e_box.lo, cfg.e_hi or model.e_box.hi)
        return model
    if not cfg.model_command:
        raise InvalidInputError("model.name = external needs model.command")
    if None in (cfg.a_lo, cfg.a_hi, cfg.e_lo, cfg.e_hi):
        raise InvalidInputError("an external model needs boxes.a.lo/hi and boxes.e.lo/hi")
    return external_model(
        cfg.model_command,
        Box(cfg.a_lo, cfg.a_hi),
        Box(cfg.e_lo, cfg.e_hi),
        cfg.model_dim_theta,
        cfg.theta,
        cfg.model_timeout,
    )


def design_theta(cfg: RunConfig, model) -> np.ndarray:
    if cfg.theta is not None:
        return np.array(cfg.theta)
    base = getattr(model, "theta_baseline", None)
    if base is None:
        raise InvalidInputError("no design.theta configured and the model has no baseline")
    return np.asarray(base, dtype=float)


def phase_seeds(cfg: RunConfig) -> dict[str, int]:
    return {
        "e_samples": derive_seed(cfg.seed, PHASE_E_SAMPLES),
        "a_samples": derive_seed(cfg.seed, PHASE_A_SAMPLES),
        "design": derive_seed(cfg.seed, PHASE_DESIGN),
        "objective": derive_seed(cfg.seed, PHASE_OBJECTIVE),
    }


def write_provenance(out: Path, cfg: RunConfig, command: str, extra=None):
    prov = {
        "command": command,
        "version": __version__,
        "synthetic_model_version": C.SYNTHETIC_MODEL_VERSION,
        "config": cfg.to_text().splitlines(),
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "phase_seeds": phase_seeds(cfg),
    }
    prov.update(extra or {})
    out.mkdir(parents=True, exist_ok=True)
    (out / f"provenance_{command}.json").write_text(json.dumps(prov, indent=2, sort_keys=True) + "\n")


# --- records persistence -----------------------------------------------------


def write_records(path: Path, records: list[EligibilityRecord]):
    d = records[0].e.size
    header = ["index"] + [f"e_{j + 1}" for j in range(d)] + ["q_star", "threshold", "eligible", "error"]
    rows = [[i, *r.e, r.q_star, r.threshold, r.eligible, r.error or ""] for i, r in enumerate(records)]
    write_csv(path, header, rows)


def read_records(path: Path) -> list[EligibilityRecord]:
    header, rows = read_csv(path)
    e_cols = [i for i, h in enumerate(header) if h.startswith("e_")]
    try:
        col = {name: header.index(name) for name in ("q_star", "threshold", "eligible")}
    except ValueError as exc:
        raise InvalidInputError(f"{path}: not a records file ({exc})") from None
    err_col = header.index("error") if "error" in header else None
    records = []
    for n, row in enumerate(rows, start=2):
        try:
            records.append(
                EligibilityRecord(
                    np.array([float(row[i]) for i in e_cols]),
                    float(row[col["q_star"]]),
                    row[col["eligible"]].strip() == "1",
                    float(row[col["threshold"]]),
                    error=(row[err_col] or None) if err_col is not None else None,
                )
            )
        except (ValueError, IndexError) as exc:
            raise InvalidInputError(f"{path}: row {n}: {exc}") from None
    if not records:
        raise InvalidInputError(f"{path}: no records")
    return records


def load_run(records_path: Path, cfg: RunConfig):
    """Records plus the data summaries and a-samples saved beside them."""
    records_path = Path(records_path)
    records = read_records(records_path)
    run_dir = records_path.parent
    _, data_summaries = read_matrix(run_dir / "data_summaries.csv")
    _, a_samples = read_matrix(run_dir / "a_samples.csv")
    model = make_model(cfg)
    if not any(r.eligible for r in records):
        raise EmptySetError(f"{records_path}: no eligible e among {len(records)} records")
    polytopes = build_polytopes(records, data_summaries, model, a_samples, bands_of(cfg), cfg.threshold)
    return records, model, polytopes


# --- subcommands -------------------------------------------------------------


def cmd_summarize(args, cfg: RunConfig, out: Path) -> int:
    series = load_series_csv(args.data)
    summaries = summarize_data(series, bands_of(cfg))
    write_csv(out / "summaries.csv", SUMMARY_FIELDS, summaries.tolist())
    print(f"summarized {len(series)} series -> {out / 'summaries.csv'}")
    return EXIT_OK


def cmd_eligibility(args, cfg: RunConfig, out: Path) -> int:
    series = load_series_csv(args.data)
    bands = bands_of(cfg)
    model = make_model(cfg)
    seeds = phase_seeds(cfg)
    data_summaries = summarize_data(series, bands)
    e_samples = sample_uniform(model.e_box, cfg.n2, seeds["e_samples"])
    a_samples = sample_uniform(model.a_box, cfg.k, seeds["a_samples"])
    records = construct_eligibility_set(
        data_summaries,
        model,
        e_samples,
        a_samples,
        cfg.alpha,
        bands,
        threshold=cfg.threshold,
        jobs=args.jobs,
        backend=cfg.backend,
    )
    write_records(out / "records.csv", records)
    write_csv(out / "data_summaries.csv", SUMMARY_FIELDS, data_summaries.tolist())
    write_csv(out / "a_samples.csv", [f"a_{j + 1}" for j in range(a_samples.shape[1])], a_samples.tolist())
    threshold = records[0].threshold
    for d in range(e_samples.shape[1]):
        write_csv(
            out / f"scatter_e{d + 1}.csv",
            [f"e_{d + 1}", "q_star", "threshold"],
            [[r.e[d], r.q_star, threshold] for r in records],
        )
    n_elig = sum(r.eligible for r in records)
    n_fail = sum(r.error is not None for r in records)
    write_provenance(
        out, cfg, "eligibility", {"n1": int(data_summaries.shape[0]), "k_over_n1": cfg.k / data_summaries.shape[0]}
    )
    print(f"threshold q = {threshold:.4f}; eligible {n_elig}/{len(records)}; failed {n_fail}")
    print(f"k/n1 = {cfg.k / data_summaries.shape[0]:.4g}")
    if n_elig:
        ranking = range_shrinkage_ranking(records, model.e_box)
        print("range-shrinkage ranking: " + ", ".join(f"e{d + 1} ({s:.4f})" for d, s in ranking))
    return EXIT_OK


def cmd_reliability(args, cfg: RunConfig, out: Path) -> int:
    records, model, polytopes = load_run(args.records, cfg)
    theta = design_theta(cfg, model)
    report = reliability_report(records, model, theta, polytopes, cfg.backend)
    rows = [[f"R_{i + 1}", lo, hi, s] for i, ((lo, hi), s) in enumerate(zip(report.requirement_ranges, report.severities))]
    rows.append(["R", report.combined_range[0], report.combined_range[1], ""])
    write_csv(out / "reliability.csv", ["quantity", "lo", "hi", "severity"], rows)
    d = records[0].e.size
    write_csv(
        out / "rmin_rmax.csv",
        ["index"] + [f"e_{j + 1}" for j in range(d)] + ["r_min", "r_max"],
        [[r.index, *r.e, r.r_min, r.r_max] for r in report.table],
    )
    all_rank = dict(range_shrinkage_ranking(records, model.e_box))
    low = set(low_rmin_subset(report.table))
    low_records = [rec if i in low else EligibilityRecord(rec.e, rec.q_star, False, rec.threshold) for i, rec in enumerate(records)]
    low_rank = dict(range_shrinkage_ranking(low_records, model.e_box))
    write_csv(
        out / "ranking.csv",
        ["dimension", "score_eligible", "score_low_rmin"],
        [[f"e_{j + 1}", all_rank[j], low_rank[j]] for j in sorted(all_rank, key=lambda j: -all_rank[j])],
    )
    write_provenance(out, cfg, "reliability", {"theta": [float(t) for t in theta]})
    for i, ((lo, hi), s) in enumerate(zip(report.requirement_ranges, report.severities)):
        print(f"R_{i + 1} in [{lo:.4f}, {hi:.4f}]  severity {s:.4f}")
    print(f"R   in [{report.combined_range[0]:.4f}, {report.combined_range[1]:.4f}]")
    return EXIT_OK


def _write_trace(path: Path, trace, d: int):
    header = ["n", "i", "seed", "c_n", "a_n", "u", "l", "g"]
    header += [f"x_before_{j + 1}" for j in range(d)] + [f"x_after_{j + 1}" for j in range(d)]
    rows = [[s.n, s.i + 1, s.seed, s.c_n, s.a_n, s.u, s.l, s.g, *s.x_before, *s.x_after] for s in trace.steps]
    write_csv(path, header, rows)


def cmd_design(args, cfg: RunConfig, out: Path) -> int:
    records, model, polytopes = load_run(args.records, cfg)
    theta_b = design_theta(cfg, model)
    seeds = phase_seeds(cfg)
    f = RobustObjective(records, polytopes, model, bands_of(cfg), cfg.kw_fresh_samples, cfg.backend)
    kw = KwConfig(theta_b, cfg.kw_c0, cfg.kw_a0, cfg.kw_n_max, cfg.kw_exponent, cfg.kw_return_best)
    try:
        theta_new, trace = kw_optimize(f, kw, seeds["design"])
    except KwError as exc:
        _write_trace(out / "design_trace.csv", exc.trace, theta_b.size)
        raise
    _write_trace(out / "design_trace.csv", trace, theta_b.size)
    write_csv(
        out / "design.csv",
        ["coordinate", "theta_baseline", "theta_new"],
        [[j + 1, b, t] for j, (b, t) in enumerate(zip(theta_b, theta_new))],
    )
    eval_seed = seeds["objective"] if cfg.kw_fresh_samples else None
    f_base, f_new = f(theta_b, eval_seed), f(theta_new, eval_seed)
    write_csv(
        out / "objective.csv",
        ["design", "objective", "eval_seed"],
        [["baseline", f_base, eval_seed], ["new", f_new, eval_seed]],
    )
    write_provenance(out, cfg, "design")
    print(f"objective: baseline {f_base:.4f} -> new {f_new:.4f}")
    print("theta_new = [" + ", ".join(f"{t:.4f}" for t in theta_new) + "]")
    return EXIT_OK


def cmd_n1_study(args, cfg: RunConfig, out: Path) -> int:
    series = load_series_csv(args.data)
    sizes = [int(s) for s in args.sizes.split(",")] if args.sizes else list(cfg.study_sizes)
    if not sizes:
        raise InvalidInputError("no subsample sizes given (use --sizes or study.sizes)")
    bands = bands_of(cfg)
    model = make_model(cfg)
    seeds = phase_seeds(cfg)
    e_samples = sample_uniform(model.e_box, cfg.n2, seeds["e_samples"])
    a_samples = sample_uniform(model.a_box, cfg.k, seeds["a_samples"])
    rows = n1_impact_study(
        summarize_data(series, bands),
        model,
        sizes,
        cfg.study_seeds,
        e_samples,
        a_samples,
        cfg.alpha,
        bands,
        threshold=cfg.threshold,
        jobs=args.jobs,
        backend=cfg.backend,
    )
    d = e_samples.shape[1]
    header = ["size", "seed", "n_eligible", "n_records", "eligible_fraction"]
    header += [f"e_{j + 1}_{side}" for j in range(d) for side in ("lo", "hi")]
    write_csv(
        out / "n1_study.csv",
        header,
        [[r.size, r.seed, r.n_eligible, r.n_records, r.eligible_fraction, *r.ranges.ravel()] for r in rows],
    )
    write_provenance(out, cfg, "n1-study", {"sizes": sizes})
    for size in dict.fromkeys(r.size for r in rows):
        frac = np.mean([r.eligible_fraction for r in rows if r.size == size])
        print(f"n1' = {size}: mean eligible fraction {frac:.4f}")
    return EXIT_OK


COMMANDS = {
    "summarize": cmd_summarize,
    "eligibility": cmd_eligibility,
    "reliability": cmd_reliability,
    "design": cmd_design,
    "n1-study": cmd_n1_study,
}


# --- argument parsing --------------------------------------------------------


def _common_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--jobs", type=int, help="worker processes for per-e work")
    p.add_argument("--output", type=Path, help="output directory (default: out)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="drocal", description=__doc__.split("\n")[0], parents=[common])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("summarize", parents=[common], help="write the 12-column spectral summaries of a data file")
    p.add_argument("data", type=Path, help="CSV, one series per row: dt, y0, ..., yT")

    p = sub.add_parser("eligibility", parents=[common], help="construct the eligibility set")
    p.add_argument("data", type=Path)

    p = sub.add_parser("reliability", parents=[common], help="failure-probability ranges over an eligibility run")
    p.add_argument("records", type=Path, help="records.csv written by 'eligibility'")

    p = sub.add_parser("design", parents=[common], help="KW design optimization over an eligibility run")
    p.add_argument("records", type=Path)

    p = sub.add_parser("n1-study", parents=[common], help="eligibility under data subsampling")
    p.add_argument("data", type=Path)
    p.add_argument("--sizes", help="comma-separated subsample sizes (default: study.sizes)")
    return parser


def resolve_config(args) -> RunConfig:
    text, source = "", "<defaults>"
    if getattr(args, "config", None):
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise InvalidInputError(f"cannot read config {args.config}: {exc}") from exc
        source = str(args.config)
    overrides = [parse_set_flag(item) for item in getattr(args, "set", None) or []]
    if getattr(args, "seed", None) is not None:
        overrides.append(("seed", str(args.seed)))
    return load_config(text, overrides, source)


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, KwError) and exc.__cause__ is not None:
        return _exit_code(exc.__cause__)
    if isinstance(exc, ModelEvaluationError):
        return EXIT_MODEL
    if isinstance(exc, SolverError):
        return EXIT_SOLVER
    return EXIT_INPUT


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.jobs = getattr(args, "jobs", 1)
    out = getattr(args, "output", Path("out"))
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.jobs < 1:
            raise InvalidInputError("--jobs must be at least 1")
        cfg = resolve_config(args)
        return COMMANDS[args.command](args, cfg, Path(out))
    except (DrocalError, EmptySetError) as exc:
        print(f"drocal {args.command}: error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
