"""Command line entry point and experiment orchestration.

Subcommands: ``simulate``, ``schedule``, ``experiment`` (theorem1 | theorem2 |
theorem3 | bounds), ``oracle`` and ``bounds``.  Every run writes one results
file plus ``manifest.json``; the exit status is 0 when every verdict
passes, 1 when one fails and 2 on configuration or I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__, streams
from .analysis import (
    epsilon_n,
    estimate_prob_best_wins,
    estimate_prob_top_k_wins,
    concentration_check,
    cutoff_sweep,
    fit_rank_exponent,
    non_decreasing_within_ci,
    sandwich_violation_counts,
    winner_rank_distribution,
)
from .config import ConfigError, ExperimentSpec, parse_config, spec_from_dict
from .distributions import (
    InapplicableModelError,
    check_assumption_a,
    check_convexity,
    moments,
    order_statistics,
    sample,
)
from .scheduler import build_schedule, check_schedule
from .tournament import enumerate_exact, play, play_with_tagged

EXIT_OK, EXIT_VERDICT, EXIT_ERROR = 0, 1, 2
EXACT_AUTO_LIMIT = 12

SCHEMAS = {
    "simulate": ["replicate_id", "n", "max_score", "winner_rank_from_top", "winner_count",
                 "best_strict_win", "score_total_ok", "tagged_strict_win",
                 "tagged_sufficient_win", "tagged_sure_loss"],
    "schedule": ["round", "player_a", "player_b"],
    "theorem1": ["n", "replicates", "strict_prob", "strict_ci_low", "strict_ci_high",
                 "cowin_prob", "cowin_ci_low", "cowin_ci_high"],
    "theorem2": ["n", "replicates", "median_rank", "median_ci_low", "median_ci_high",
                 "mean_rank", "rank_exponent", "best_strict_prob", "best_strict_ci_low",
                 "best_strict_ci_high", "top_k", "top_k_cowin_prob", "top_k_cowin_ci_low",
                 "top_k_cowin_ci_high"],
    "theorem2_ranks": ["n", "rank", "count"],
    "theorem3": ["n", "c", "v_tagged", "epsilon_n", "win_prob", "win_ci_low", "win_ci_high",
                 "sufficient_prob", "sufficient_ci_low", "sufficient_ci_high",
                 "loss_prob", "loss_ci_low", "loss_ci_high", "judged"],
    "bounds": ["check", "n", "u", "frequency", "bound", "threshold", "passed"],
    "oracle": ["event", "probability"],
}


@dataclass
class RunResult:
    exit_code: int
    verdicts: dict[str, bool] = field(default_factory=dict)
    files: list[Path] = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def format_value(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, Fraction):
        x = float(x)
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _json_value(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating, Fraction)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def render_rows(columns: list[str], rows: list[dict], fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_value(row.get(c)) for c in columns])
        return buf.getvalue()
    lines = [json.dumps({c: _json_value(row.get(c)) for c in columns}) for row in rows]
    return "".join(line + "\n" for line in lines)


# -- experiments ------------------------------------------------------------


def _simulate_replicate(model, n, seed, v_tagged, fixed, r):
    rng = streams.replicate_rng(seed, r)
    if fixed:
        v = order_statistics(sample(model, n, streams.stream(seed, streams.ENVIRONMENT, n)))
    else:
        v = order_statistics(sample(model, n, rng))
    if v_tagged is None:
        out = play(v, rng)
        tagged = (None, None, None)
    else:
        out = play_with_tagged(v, v_tagged, rng)
        tagged = (out.tagged_strict_win, out.tagged_sufficient_win, out.tagged_sure_loss)
    return {
        "replicate_id": r, "n": n, "max_score": out.max_score,
        "winner_rank_from_top": out.winner_rank_from_top, "winner_count": out.winner_count,
        "best_strict_win": out.best_strict_win,
        "score_total_ok": int(out.scores.sum()) == n * (n - 1) // 2,
        "tagged_strict_win": tagged[0], "tagged_sufficient_win": tagged[1],
        "tagged_sure_loss": tagged[2],
    }


def run_simulate(spec: ExperimentSpec, workers):
    rows = []
    fixed = spec.environment == "fixed"
    for n in spec.n_grid:
        fn = partial(_simulate_replicate, spec.model, n, spec.seed, spec.v_tagged, fixed)
        rows.extend(streams.fan_out(fn, range(spec.replicates), workers))
    verdicts = {"score_conservation": all(r["score_total_ok"] for r in rows)}
    if spec.v_tagged is not None:
        verdicts["tagged_event_nesting"] = all(
            (not r["tagged_sufficient_win"] or r["tagged_strict_win"])
            and not (r["tagged_sure_loss"] and r["tagged_strict_win"])
            for r in rows
        )
    return {"simulate": rows}, verdicts, {"environment": spec.environment}


def run_schedule(spec: ExperimentSpec, workers):
    rows = []
    verdicts = {}
    for n in spec.n_grid:
        sched = build_schedule(n)
        verdicts[f"coverage_n{n}"] = not check_schedule(sched)
        rows.extend({"round": k, "player_a": a, "player_b": b} for k, a, b in sched.csv_rows())
    return {"schedule": rows}, verdicts, {}


def run_theorem1(spec: ExperimentSpec, workers):
    model = spec.model
    verdicts = {}
    summary = {"environment": "resample"}
    mom = moments(model)
    verdicts["second_moment_finite"] = math.isfinite(mom.second_moment)
    try:
        conv = check_convexity(model)
        verdicts["convexity"] = conv.passed
        summary["convexity"] = {"beta": conv.beta, "x0": conv.x0,
                                "min_second_difference": conv.min_second_difference}
    except (InapplicableModelError, ValueError) as exc:
        verdicts["convexity"] = False
        summary["convexity"] = {"error": str(exc)}
    rows, strict_list = [], []
    for n in spec.n_grid:
        strict, co = estimate_prob_best_wins(model, n, spec.replicates, spec.seed, workers)
        strict_list.append(strict)
        rows.append({"n": n, "replicates": spec.replicates, "strict_prob": strict.value,
                     "strict_ci_low": strict.ci_low, "strict_ci_high": strict.ci_high,
                     "cowin_prob": co.value, "cowin_ci_low": co.ci_low,
                     "cowin_ci_high": co.ci_high})
    if len(strict_list) >= 2:
        verdicts["trend_non_decreasing"] = non_decreasing_within_ci(strict_list)
        verdicts["gain_at_least_0.05"] = strict_list[-1].value - strict_list[0].value >= 0.05
    return {"theorem1": rows}, verdicts, summary


def run_theorem2(spec: ExperimentSpec, workers):
    model = spec.model
    fixed = spec.environment == "fixed"
    verdicts = {}
    report = check_assumption_a(model)
    verdicts["assumption_a"] = report.passed
    rows, hist_rows, medians = [], [], []
    last = None
    for n in spec.n_grid:
        rd = winner_rank_distribution(model, n, spec.replicates, spec.seed, fixed, workers)
        k = max(1, math.ceil(n ** spec.top_k_gamma))
        co, _ = estimate_prob_top_k_wins(model, n, k, spec.replicates, spec.seed, fixed, workers)
        medians.append(rd.median)
        last = rd
        rows.append({"n": n, "replicates": spec.replicates, "median_rank": rd.median,
                     "median_ci_low": rd.median_ci[0], "median_ci_high": rd.median_ci[1],
                     "mean_rank": rd.mean, "rank_exponent": rd.exponent,
                     "best_strict_prob": rd.best_strict.value,
                     "best_strict_ci_low": rd.best_strict.ci_low,
                     "best_strict_ci_high": rd.best_strict.ci_high, "top_k": k,
                     "top_k_cowin_prob": co.value, "top_k_cowin_ci_low": co.ci_low,
                     "top_k_cowin_ci_high": co.ci_high})
        hist = rd.histogram()
        hist_rows.extend({"n": n, "rank": r + 1, "count": int(c)}
                         for r, c in enumerate(hist) if c)
    predicted = 1 - model.alpha / 2
    summary = {"environment": spec.environment, "predicted_exponent": predicted,
               "assumption_a_slope": report.slope}
    if len(medians) >= 3:
        fitted = fit_rank_exponent(spec.n_grid, medians)
        summary["fitted_exponent"] = fitted
        verdicts["exponent_window"] = abs(fitted - predicted) <= 0.2
    verdicts["best_strict_small_at_max_n"] = last.best_strict.value <= 0.1
    return {"theorem2": rows, "theorem2_ranks": hist_rows}, verdicts, summary


def run_theorem3(spec: ExperimentSpec, workers):
    model = spec.model
    fixed = spec.environment == "fixed"
    theta = moments(model).theta_u
    rows = []
    verdicts = {}
    for n in spec.n_grid:
        eps = epsilon_n(model.alpha, theta, n)
        points = cutoff_sweep(model, n, spec.sweep, spec.replicates, spec.seed, fixed, workers)
        for p in points:
            rows.append({"n": n, "c": p.c, "v_tagged": p.v_tagged, "epsilon_n": eps,
                         "win_prob": p.win_prob.value, "win_ci_low": p.win_prob.ci_low,
                         "win_ci_high": p.win_prob.ci_high,
                         "sufficient_prob": p.sufficient_prob.value,
                         "sufficient_ci_low": p.sufficient_prob.ci_low,
                         "sufficient_ci_high": p.sufficient_prob.ci_high,
                         "loss_prob": p.loss_prob.value, "loss_ci_low": p.loss_prob.ci_low,
                         "loss_ci_high": p.loss_prob.ci_high, "judged": p.c != 1.0})
        verdicts[f"win_monotone_n{n}"] = non_decreasing_within_ci([p.win_prob for p in points])
        verdicts[f"event_nesting_n{n}"] = all(
            p.sufficient_prob.value <= p.win_prob.value <= 1 - p.loss_prob.value for p in points
        )
        below = [p for p in points if p.c < 1]
        above = [p for p in points if p.c > 1]
        if below and above:
            verdicts[f"separation_n{n}"] = above[-1].win_prob.value - below[-1].win_prob.value >= 0.5
    return {"theorem3": rows}, verdicts, {"environment": spec.environment, "theta_u": theta}


def run_bounds(spec: ExperimentSpec, workers):
    rows = []
    verdicts = {}
    for side, bad in zip(("lower", "upper"), sandwich_violation_counts(200)):
        name = f"bernoulli_mgf_{side}"
        rows.append({"check": name, "n": 200 * 200, "u": None, "frequency": bad / 40000,
                     "bound": 0.0, "threshold": 0.0, "passed": bad == 0})
        verdicts[name] = bad == 0
    for n in spec.n_grid:
        if spec.model is None:
            v = np.ones(n)
        else:
            v = order_statistics(sample(spec.model, n, streams.stream(spec.seed, streams.ENVIRONMENT, n)))
        for chk in concentration_check(v, spec.u_values, spec.replicates, spec.seed, workers):
            rows.append({"check": chk.check, "n": chk.n, "u": chk.u, "frequency": chk.frequency,
                         "bound": chk.bound, "threshold": chk.threshold, "passed": chk.passed})
            verdicts[f"{chk.check}_n{n}_u{chk.u:g}"] = chk.passed
    return {"bounds": rows}, verdicts, {}


def _oracle_strengths(spec: ExperimentSpec):
    if spec.strengths is not None:
        return [np.asarray(spec.strengths)]
    return [order_statistics(sample(spec.model, n, streams.stream(spec.seed, streams.ENVIRONMENT, n)))
            for n in spec.n_grid]


def run_oracle(spec: ExperimentSpec, workers):
    rows = []
    verdicts = {}
    docs = []
    for v in _oracle_strengths(spec):
        n = len(v)
        m = n * (n - 1) // 2 + (n if spec.v_tagged is not None else 0)
        exact = spec.exact if spec.exact is not None else m <= EXACT_AUTO_LIMIT
        res = enumerate_exact(v, spec.v_tagged, exact=exact)
        probs = res.as_dict()
        rows.extend({"event": f"n{n}:{k}", "probability": p} for k, p in probs.items())
        dominated = all(
            res.max_cdf[a] <= math.prod(res.score_cdf[i][a] for i in range(n)) for a in range(n)
        )
        total = sum(res.winner_count[1:])
        verdicts[f"max_score_domination_n{n}"] = dominated
        verdicts[f"probabilities_sum_to_one_n{n}"] = (total == 1) if exact else abs(total - 1) < 1e-12
        docs.append({"strengths": [float(x) for x in v], "v_tagged": spec.v_tagged,
                     "exact": exact, "probabilities": {k: float(p) for k, p in probs.items()},
                     "unique_win": [float(p) for p in res.unique_win]})
    return {"oracle": rows}, verdicts, {"oracle": docs}


RUNNERS = {
    "simulate": run_simulate,
    "schedule": run_schedule,
    "theorem1": run_theorem1,
    "theorem2": run_theorem2,
    "theorem3": run_theorem3,
    "bounds": run_bounds,
    "oracle": run_oracle,
}


def run(spec: ExperimentSpec, out_dir=None, workers=None) -> RunResult:
    """Run one experiment and write its results plus a manifest under ``out_dir``."""
    out = Path(out_dir or spec.output or f"results/{spec.experiment}")
    workers = streams.resolve_workers(spec.workers if workers is None else workers)
    t0 = time.perf_counter()
    tables, verdicts, summary = RUNNERS[spec.experiment](spec, workers)
    wall = time.perf_counter() - t0
    ext = "csv" if spec.format == "csv" else "jsonl"
    files = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, rows in tables.items():
            path = out / f"{name}.{ext}"
            path.write_text(render_rows(SCHEMAS[name], rows, spec.format))
            files.append(path)
        if spec.experiment == "oracle":
            path = out / "oracle.json"
            path.write_text(json.dumps(summary["oracle"], indent=2, sort_keys=True) + "\n")
            files.append(path)
        manifest = {
            "library_version": __version__,
            "experiment": spec.experiment,
            "spec": spec.echo(),
            "workers": workers,
            "wall_time_s": wall,
            "results": [p.name for p in files],
            "verdicts": verdicts,
            "all_passed": all(verdicts.values()),
            "summary": summary,
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=_json_value) + "\n")
    except OSError as exc:
        raise IOFailure(str(exc)) from exc
    code = EXIT_OK if all(verdicts.values()) else EXIT_VERDICT
    return RunResult(code, verdicts, files, summary)


class IOFailure(RuntimeError):
    pass


# -- argument parsing -----------------------------------------------------


def _parse_model_flag(text: str) -> dict:
    """``kind`` or ``kind:key=value,key=value`` into a model mapping."""
    kind, _, rest = text.partition(":")
    model: dict = {"kind": kind}
    if rest:
        for item in rest.split(","):
            key, _, value = item.partition("=")
            if "/" in value:
                model[key] = [float(x) for x in value.split("/")]
            else:
                model[key] = float(value)
    return model


def _load(args, experiment: str | None) -> ExperimentSpec:
    if args.config:
        text = Path(args.config).read_text()
        spec = parse_config(text)
        if experiment and spec.experiment != experiment:
            raise ConfigError(f"experiment: config says {spec.experiment!r}, command asks {experiment!r}")
        return spec
    doc: dict = {"experiment": experiment}
    if getattr(args, "model", None):
        doc["model"] = _parse_model_flag(args.model)
    if getattr(args, "n", None):
        doc["n_grid"] = args.n
    for key in ("replicates", "seed"):
        if getattr(args, key, None) is not None:
            doc[key] = getattr(args, key)
    if getattr(args, "tagged", None) is not None:
        doc["v_tagged"] = args.tagged
    if getattr(args, "strengths", None):
        doc["strengths"] = [float(x) for x in args.strengths.split(",")]
    if experiment == "schedule" and "seed" not in doc:
        doc["seed"] = 0
    return spec_from_dict(doc)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="btre", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="YAML experiment document")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--workers", help="worker processes or 'auto'")

    sp = sub.add_parser("simulate", help="per-replicate tournament summaries")
    common(sp)
    sp.add_argument("--model", help="kind[:key=value,...], e.g. beta:a=1,b=0.5")
    sp.add_argument("--n", type=int, nargs="+")
    sp.add_argument("--replicates", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--tagged", type=float, help="strength of an extra tagged player")

    sp = sub.add_parser("schedule", help="round-robin pairing table as CSV")
    common(sp)
    sp.add_argument("--n", type=int, nargs="+")

    sp = sub.add_parser("experiment", help="theorem1 | theorem2 | theorem3 | bounds")
    common(sp)
    sp.add_argument("mode", nargs="?", choices=["theorem1", "theorem2", "theorem3", "bounds"])

    sp = sub.add_parser("oracle", help="exact enumeration of event probabilities")
    common(sp)
    sp.add_argument("--strengths", help="comma separated strengths")
    sp.add_argument("--tagged", type=float)
    sp.add_argument("--seed", type=int)

    sp = sub.add_parser("bounds", help="concentration and MGF bound checks")
    common(sp)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    experiment = {"experiment": args.mode if args.command == "experiment" else None,
                  "bounds": "bounds"}.get(args.command, args.command)
    try:
        if args.command == "experiment" and not args.config:
            raise ConfigError("--config: experiment runs need a config file")
        if args.command == "oracle" and not args.config and args.seed is None:
            args.seed = 0  # the oracle draws nothing when strengths are given
        spec = _load(args, experiment)
        if args.command == "schedule" and not args.out:
            for n in spec.n_grid:
                w = csv.writer(sys.stdout, lineterminator="\n")
                w.writerow(SCHEMAS["schedule"])
                for row in build_schedule(n).csv_rows():
                    w.writerow([format_value(x) for x in row])
            return EXIT_OK
        result = run(spec, args.out, args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (IOFailure, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for name, ok in result.verdicts.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    print(f"results: {', '.join(str(f) for f in result.files)}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
