"""Command-line interface: cluster, score, coordinate, evaluate, simulate.

Every subcommand writes CSV plus a JSON run manifest next to it, is
deterministic given (inputs, flags, cache, seed), and orders its output by
question id regardless of worker completion order. Exit codes: 0 success,
1 data error, 2 configuration error, 3 oracle failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from . import __version__
from .clustering import ExactMatchOracle, ProbMode, build_ensemble
from .coordination import CoordinationConfig, coordinate
from .core import coe, ensemble_mean
from .divergences import DivergenceKind
from .errors import (
    CoentropyError,
    ConfigError,
    DataError,
    DegenerateLabels,
    MissingLabel,
    MissingLogprob,
    OracleFailure,
)
from .evaluation import (
    DEFAULT_RETENTION_GRID,
    ScoredItem,
    baseline_mean_se,
    baseline_p_false,
    baseline_regular_entropy,
    evaluate,
)
from .io import (
    EntailmentCache,
    Matcher,
    RemoteEntailmentOracle,
    label_correctness,
    load_cache,
    load_dataset,
    load_matrix_oracle,
    save_cache,
)
from .simulator import RegimeQuadrant, RegimeSpec, regime_sweep


def _fmt(value) -> str:
    """Deterministic CSV cell: shortest round-trip repr for floats."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _fmt_list(values) -> str:
    return ";".join(_fmt(v) for v in values)


def _parse_kinds(flag: str) -> list:
    kinds = []
    for name in flag.split(","):
        kind = DivergenceKind.parse(name)
        if kind not in kinds:
            kinds.append(kind)
    if not kinds:
        raise ConfigError("at least one divergence kind required")
    return kinds


def _parse_retention(flag: str) -> tuple:
    try:
        grid = tuple(float(x) for x in flag.split(","))
    except ValueError:
        raise ConfigError(f"bad retention list {flag!r}") from None
    if not grid or any(not 0.0 < r <= 1.0 for r in grid):
        raise ConfigError("retention fractions must lie in (0, 1]")
    return grid


def _load_weights(flag: str):
    if flag == "uniform":
        return None
    try:
        with open(flag, "r", encoding="utf-8") as fh:
            weights = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read weights file {flag!r}: {exc}") from None
    if not isinstance(weights, list):
        raise ConfigError("weights file must hold a JSON array")
    return weights


def _make_oracle(args, cache: EntailmentCache):
    spec = args.oracle
    if spec == "exact":
        return ExactMatchOracle()
    if spec.startswith("matrix:"):
        return load_matrix_oracle(spec[len("matrix:"):])
    if spec == "remote":
        return RemoteEntailmentOracle(
            endpoint=getattr(args, "endpoint", None),
            timeout=getattr(args, "timeout", 30.0),
            cache=cache,
        )
    raise ConfigError(
        f"unknown oracle {spec!r}; expected exact, matrix:<path> or remote"
    )


def _write_rows(path: str, header: list, rows: list) -> None:
    """Write CSV atomically; a failed run leaves no partial output."""
    tmp = f"{path}.tmp"
    try:
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_manifest(args, config: dict, inputs: list, wall_clock: float) -> None:
    manifest = {
        "subcommand": args.subcommand,
        "tool_version": __version__,
        "config": config,
        "inputs": [str(p) for p in inputs],
        "outputs": [args.out],
        "wall_clock_seconds": wall_clock,
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    with open(f"{args.out}.manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _map_jobs(worker, items, jobs: int) -> list:
    if jobs <= 1:
        return [worker(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, items))


def cmd_score(args) -> int:
    started = time.monotonic()
    records = load_dataset(args.dataset)
    kinds = _parse_kinds(args.divergence)
    mode = ProbMode(args.prob_mode)
    weights = _load_weights(args.weights)
    cache = load_cache(args.cache) if args.cache else EntailmentCache()
    oracle = _make_oracle(args, cache)

    def worker(record):
        space, ensemble = build_ensemble(
            record.pooled_samples(), oracle, mode=mode, weights=weights,
            query_id=record.question_id,
        )
        rows = []
        for kind in kinds:
            report = coe(ensemble, kind)
            rows.append([
                record.question_id,
                kind.value,
                space.n_clusters,
                _fmt(report.u_aleatoric),
                _fmt(report.u_epistemic),
                _fmt(report.u_coe),
                report.quadrant.value,
                _fmt_list(report.per_model_se),
                _fmt_list(report.per_model_div),
            ])
        return rows

    per_question = _map_jobs(worker, records, args.jobs)
    rows = [row for rows in sorted(per_question, key=lambda r: r[0][0])
            for row in rows]
    _write_rows(args.out, [
        "question_id", "divergence", "n_clusters", "u_aleatoric",
        "u_epistemic", "u_coe", "quadrant", "per_model_se", "per_model_div",
    ], rows)
    if args.cache:
        save_cache(cache, args.cache)
    _write_manifest(args, {
        "divergence": [k.value for k in kinds],
        "prob_mode": mode.value,
        "weights": args.weights,
        "oracle": args.oracle,
        "cache": args.cache,
        "jobs": args.jobs,
    }, [args.dataset], time.monotonic() - started)
    return 0


def cmd_coordinate(args) -> int:
    started = time.monotonic()
    records = load_dataset(args.dataset)
    kinds = _parse_kinds(args.divergence)
    mode = ProbMode(args.prob_mode)
    weights = _load_weights(args.weights)
    cache = load_cache(args.cache) if args.cache else EntailmentCache()
    oracle = _make_oracle(args, cache)

    def worker(record):
        samples = record.pooled_samples()
        space, ensemble = build_ensemble(
            samples, oracle, mode=mode, weights=weights,
            query_id=record.question_id,
        )
        rows = []
        for kind in kinds:
            cfg = CoordinationConfig(epsilon=args.epsilon, t_max=args.t_max,
                                     divergence_kind=kind)
            trace = coordinate(ensemble, cfg)
            if trace.consensus_cluster is not None:
                answer_cluster = trace.consensus_cluster
            else:
                answer_cluster = ensemble_mean(trace.final).argmax()
            answer = samples[space.representatives[answer_cluster]].text
            rows.append([
                record.question_id,
                kind.value,
                space.n_clusters,
                int(trace.converged),
                trace.iterations_used,
                _fmt(trace.steps[0].u_coe),
                _fmt(trace.steps[-1].u_coe),
                "" if trace.consensus_cluster is None
                else trace.consensus_cluster,
                answer,
            ])
        return rows

    per_question = _map_jobs(worker, records, args.jobs)
    rows = [row for rows in sorted(per_question, key=lambda r: r[0][0])
            for row in rows]
    _write_rows(args.out, [
        "question_id", "divergence", "n_clusters", "converged",
        "iterations_used", "initial_u_coe", "terminal_u_coe",
        "consensus_cluster", "answer",
    ], rows)
    if args.cache:
        save_cache(cache, args.cache)
    _write_manifest(args, {
        "divergence": [k.value for k in kinds],
        "epsilon": args.epsilon,
        "t_max": args.t_max,
        "prob_mode": mode.value,
        "weights": args.weights,
        "oracle": args.oracle,
        "cache": args.cache,
        "jobs": args.jobs,
    }, [args.dataset], time.monotonic() - started)
    return 0


def _read_score_rows(path: str) -> list:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            return list(csv.DictReader(fh))
    except OSError as exc:
        raise DataError(f"cannot read score file {path!r}: {exc}") from None


def _read_answers(path: str) -> dict:
    answers = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            answers.setdefault(row["question_id"], row["answer"])
    return answers


def cmd_evaluate(args) -> int:
    started = time.monotonic()
    records = load_dataset(args.dataset)
    by_id = {r.question_id: r for r in records}
    matcher = Matcher.parse(args.matcher)
    retention = _parse_retention(args.retention)
    score_rows = _read_score_rows(args.scores)
    if not score_rows:
        raise DataError(f"score file {args.scores!r} holds no rows")
    answers = _read_answers(args.answers) if args.answers else {}

    labels = {}
    for qid in {row["question_id"] for row in score_rows}:
        record = by_id.get(qid)
        if record is None:
            raise DataError(f"score row references unknown question {qid!r}")
        if matcher is Matcher.ORACLE:
            labels[qid] = label_correctness(record, "", matcher)
        else:
            if qid not in answers:
                raise MissingLabel(
                    f"question {qid!r} has no system answer; pass --answers "
                    "or use --matcher oracle"
                )
            labels[qid] = label_correctness(record, answers[qid], matcher)

    # uncertainty scores per metric name, in fixed report order
    kinds = []
    for row in score_rows:
        if row["divergence"] not in kinds:
            kinds.append(row["divergence"])
    metrics: dict = {}
    for kind in kinds:
        metrics[f"u_coe[{kind}]"] = {
            row["question_id"]: float(row["u_coe"])
            for row in score_rows if row["divergence"] == kind
        }
    first = kinds[0]
    metrics["u_aleatoric"] = {
        row["question_id"]: float(row["u_aleatoric"])
        for row in score_rows if row["divergence"] == first
    }
    for kind in kinds:
        metrics[f"u_epistemic[{kind}]"] = {
            row["question_id"]: float(row["u_epistemic"])
            for row in score_rows if row["divergence"] == kind
        }
    metrics["mean_se"] = {
        row["question_id"]: baseline_mean_se(
            [float(x) for x in row["per_model_se"].split(";")]
        )
        for row in score_rows if row["divergence"] == first
    }
    qids = sorted(metrics[f"u_coe[{first}]"])
    try:
        metrics["regular_entropy"] = {
            qid: baseline_mean_se([
                baseline_regular_entropy(m.samples) for m in by_id[qid].models
            ])
            for qid in qids
        }
    except MissingLogprob:
        pass
    if all(m.p_false is not None for qid in qids for m in by_id[qid].models):
        metrics["p_false"] = {qid: baseline_p_false(by_id[qid]) for qid in qids}

    n_correct = sum(1 for qid in qids if labels[qid])
    if n_correct == 0 or n_correct == len(qids):
        raise DegenerateLabels(
            f"all {len(qids)} questions share one label "
            f"({n_correct} correct, {len(qids) - n_correct} incorrect)"
        )

    header = ["metric", "auroc", "aurac"]
    header += [f"acc@{r:g}" for r in retention]
    header += ["n_items"]
    rows = []
    for name, scores in metrics.items():
        items = [ScoredItem(qid, scores[qid], labels[qid]) for qid in qids]
        summary = evaluate(items, retention)
        rows.append([name, _fmt(summary.auroc), _fmt(summary.aurac)]
                    + [_fmt(summary.rejection_accuracy[r]) for r in retention]
                    + [summary.n_items])
    _write_rows(args.out, header, rows)
    _write_manifest(args, {
        "matcher": matcher.value,
        "retention": list(retention),
        "answers": args.answers,
    }, [args.dataset, args.scores], time.monotonic() - started)
    return 0


def cmd_simulate(args) -> int:
    started = time.monotonic()
    kinds = _parse_kinds(args.divergence)
    if args.quadrant == "all":
        quadrants = list(RegimeQuadrant)
    else:
        quadrants = [RegimeQuadrant.parse(args.quadrant)]
    specs = []
    for quadrant in quadrants:
        for i in range(args.count):
            specs.append(RegimeSpec(
                quadrant=quadrant,
                n_models=args.models,
                n_clusters=args.clusters,
                alpha_sharp=args.alpha_sharp,
                alpha_flat=args.alpha_flat,
                seed=args.seed + i,
            ))
    rows = []
    for kind in kinds:
        for row in regime_sweep(specs, kind):
            rows.append([
                row.quadrant.value, row.seed, row.n_models, row.n_clusters,
                _fmt(args.alpha_sharp), _fmt(args.alpha_flat), kind.value,
                _fmt(row.u_aleatoric), _fmt(row.u_epistemic), _fmt(row.u_coe),
                row.label.value,
            ])
    _write_rows(args.out, [
        "quadrant", "seed", "n_models", "n_clusters", "alpha_sharp",
        "alpha_flat", "divergence", "u_aleatoric", "u_epistemic", "u_coe",
        "label",
    ], rows)
    _write_manifest(args, {
        "quadrant": args.quadrant,
        "count": args.count,
        "models": args.models,
        "clusters": args.clusters,
        "alpha_sharp": args.alpha_sharp,
        "alpha_flat": args.alpha_flat,
        "divergence": [k.value for k in kinds],
        "seed": args.seed,
    }, [], time.monotonic() - started)
    return 0


def _add_shared_pipeline_flags(sub):
    sub.add_argument("dataset", help="line-delimited question records")
    sub.add_argument("--divergence", default="kl",
                     help="comma list of kl,js,wasserstein,hellinger")
    sub.add_argument("--prob-mode", choices=["logprob", "frequency"],
                     default="logprob")
    sub.add_argument("--weights", default="uniform",
                     help="'uniform' or a JSON file with one weight per model")
    sub.add_argument("--oracle", default="exact",
                     help="exact, matrix:<path>, or remote")
    sub.add_argument("--endpoint", default=None,
                     help="remote oracle URL (or set COE_NLI_ENDPOINT)")
    sub.add_argument("--timeout", type=float, default=30.0,
                     help="remote oracle timeout in seconds")
    sub.add_argument("--cache", default=None,
                     help="entailment cache file (read and written)")
    sub.add_argument("--jobs", type=int, default=1,
                     help="question-level worker threads")
    sub.add_argument("--out", required=True, help="output CSV path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coe",
        description="Collaborative entropy for ensembles of answerers: "
                    "semantic clustering, uncertainty decomposition, "
                    "coordination and selective-prediction evaluation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="subcommand", required=True)

    score = subs.add_parser("score", help="per-question uncertainty reports")
    _add_shared_pipeline_flags(score)
    score.set_defaults(func=cmd_score)

    coord = subs.add_parser("coordinate",
                            help="run the coordination heuristic per question")
    _add_shared_pipeline_flags(coord)
    coord.add_argument("--epsilon", type=float, default=1e-6,
                       help="convergence threshold on the total, in nats")
    coord.add_argument("--t-max", type=int, default=10,
                       help="iteration budget")
    coord.set_defaults(func=cmd_coordinate)

    ev = subs.add_parser("evaluate",
                         help="selective-prediction metrics from score files")
    ev.add_argument("dataset", help="line-delimited question records")
    ev.add_argument("--scores", required=True, help="CSV from 'coe score'")
    ev.add_argument("--answers", default=None,
                    help="CSV from 'coe coordinate' supplying system answers")
    ev.add_argument("--matcher", default="contains",
                    help="exact, contains or oracle")
    ev.add_argument("--retention",
                    default=",".join(str(r) for r in DEFAULT_RETENTION_GRID),
                    help="comma list of retention fractions")
    ev.add_argument("--out", required=True, help="output CSV path")
    ev.set_defaults(func=cmd_evaluate)

    sim = subs.add_parser("simulate", help="synthetic regime sweeps")
    sim.add_argument("--quadrant", default="all",
                     help="q1, q2, q3, q4 or all")
    sim.add_argument("--count", type=int, default=1,
                     help="ensembles per quadrant")
    sim.add_argument("--models", type=int, default=3)
    sim.add_argument("--clusters", type=int, default=3)
    sim.add_argument("--alpha-sharp", type=float, default=0.05)
    sim.add_argument("--alpha-flat", type=float, default=5.0)
    sim.add_argument("--divergence", default="kl",
                     help="comma list of kl,js,wasserstein,hellinger")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="output CSV path")
    sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"coe: configuration error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"coe: data error: {exc}", file=sys.stderr)
        return 1
    except OracleFailure as exc:
        print(f"coe: oracle failure: {exc}", file=sys.stderr)
        return 3
    except CoentropyError as exc:
        print(f"coe: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
