"""Command-line front end: cluster, aggregate, single, simulate, fixtures."""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from typing import Any, Mapping

import numpy as np

from . import fixtures as fixtures_mod
from . import simulate as sim
from .clustering import SolverConfig, dmi_cluster, same_up_to_permutation
from .errors import (
    CsvParseError,
    DegenerateSpectrumError,
    DmiError,
    SchemaError,
    UnknownFixtureError,
)
from .linalg import determinant
from .mechanisms import (
    ReportSet,
    aggregate_answer_matrix,
    align_labels,
    kdmi_payments,
    plurality,
    surprisingly_popular_multitask,
)
from .render import render_clustering_svg
from .single_task import (
    SingleTaskDataset,
    spectral_truth_serum,
    surprisingly_popular_single,
)

EXIT_OK = 0
EXIT_COMPUTE = 1
EXIT_USAGE = 2


# ---------------------------------------------------------------------------
# deterministic JSON with 17-significant-digit floats
# ---------------------------------------------------------------------------

def _format_float(x: float) -> str:
    if not np.isfinite(x):
        raise ValueError("cannot serialize non-finite float")
    s = format(float(x), ".17g")
    if "." not in s and "e" not in s and "n" not in s:
        s += ".0"
    return s


def _encode(obj: Any, parts: list[str]) -> None:
    if obj is None:
        parts.append("null")
    elif isinstance(obj, bool | np.bool_):
        parts.append("true" if obj else "false")
    elif isinstance(obj, int | np.integer):
        parts.append(str(int(obj)))
    elif isinstance(obj, float | np.floating):
        parts.append(_format_float(float(obj)))
    elif isinstance(obj, str):
        parts.append(json.dumps(obj))
    elif isinstance(obj, np.ndarray):
        _encode(obj.tolist(), parts)
    elif isinstance(obj, dict):
        parts.append("{")
        for i, (key, value) in enumerate(obj.items()):
            if i:
                parts.append(", ")
            parts.append(json.dumps(str(key)))
            parts.append(": ")
            _encode(value, parts)
        parts.append("}")
    elif isinstance(obj, list | tuple):
        parts.append("[")
        for i, value in enumerate(obj):
            if i:
                parts.append(", ")
            _encode(value, parts)
        parts.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj: Any) -> str:
    parts: list[str] = []
    _encode(obj, parts)
    return "".join(parts) + "\n"


def write_output(text: str, path: str | None) -> None:
    """Write to stdout, or atomically (temp file + rename) to a path."""
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-dmicluster-")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# input parsing
# ---------------------------------------------------------------------------

def parse_points_csv(text: str) -> np.ndarray:
    """Comma-separated decimals, optional single header line."""
    rows: list[list[float]] = []
    width: int | None = None
    lines = text.splitlines()
    start = 0
    if lines:
        try:
            [float(cell) for cell in lines[0].split(",") if cell.strip() != ""]
        except ValueError:
            start = 1  # header
    for lineno in range(start, len(lines)):
        line = lines[lineno].strip()
        if not line:
            continue
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise CsvParseError(lineno + 1, len(cells),
                                f"expected {width} columns")
        row = []
        for colno, cell in enumerate(cells):
            try:
                value = float(cell)
            except ValueError:
                raise CsvParseError(lineno + 1, colno + 1,
                                    f"not a decimal: {cell!r}") from None
            if not np.isfinite(value):
                raise CsvParseError(lineno + 1, colno + 1, "non-finite value")
            row.append(value)
        rows.append(row)
    if not rows:
        raise CsvParseError(1, 1, "no data rows")
    return np.array(rows)


def parse_gold_csv(text: str) -> dict[int, int]:
    gold: dict[int, int] = {}
    for lineno, line in enumerate(text.splitlines()):
        line = line.strip()
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != 2:
            raise CsvParseError(lineno + 1, len(cells),
                                "expected task_index,option_index")
        try:
            task, opt = int(cells[0]), int(cells[1])
        except ValueError:
            if lineno == 0:
                continue  # header
            raise CsvParseError(lineno + 1, 1, "expected two integers") from None
        gold[task] = opt
    if not gold:
        raise CsvParseError(1, 1, "no gold rows")
    return gold


def _expect(obj: Mapping[str, Any], key: str, kind, pointer: str) -> Any:
    if key not in obj:
        raise SchemaError(f"{pointer}/{key}", "missing required field")
    value = obj[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise SchemaError(f"{pointer}/{key}", "expected an integer")
    if kind is list and not isinstance(value, list):
        raise SchemaError(f"{pointer}/{key}", "expected an array")
    if kind is dict and not isinstance(value, dict):
        raise SchemaError(f"{pointer}/{key}", "expected an object")
    return value


def reports_from_json(obj: Any) -> ReportSet:
    """{"n":, "options":, "agents": [{"id":, "answers": {"task": option}}]}"""
    if not isinstance(obj, dict):
        raise SchemaError("", "expected a top-level object")
    n = _expect(obj, "n", int, "")
    options = _expect(obj, "options", int, "")
    agents = _expect(obj, "agents", list, "")
    answer_maps = []
    for i, agent in enumerate(agents):
        pointer = f"/agents/{i}"
        if not isinstance(agent, dict):
            raise SchemaError(pointer, "expected an object")
        answers = _expect(agent, "answers", dict, pointer)
        amap: dict[int, int] = {}
        for key, value in answers.items():
            try:
                task = int(key)
            except ValueError:
                raise SchemaError(f"{pointer}/answers/{key}",
                                  "task key must be an integer") from None
            if isinstance(value, bool) or not isinstance(value, int):
                raise SchemaError(f"{pointer}/answers/{key}",
                                  "option must be an integer")
            if not (0 <= task < n):
                raise SchemaError(f"{pointer}/answers/{key}",
                                  f"task index out of range [0, {n})")
            if not (0 <= value < options):
                raise SchemaError(f"{pointer}/answers/{key}",
                                  f"option index out of range [0, {options})")
            amap[task] = value
        answer_maps.append(amap)
    try:
        return ReportSet.from_answer_maps(n, options, answer_maps)
    except ValueError as exc:
        raise SchemaError("/agents", str(exc)) from None


def reports_to_json(reports: ReportSet) -> dict[str, Any]:
    return {
        "n": reports.n_tasks,
        "options": reports.n_options,
        "agents": [
            {
                "id": i,
                "answers": {
                    str(int(t)): int(c)
                    for t, c in zip(reports.task_sets[i], reports.choices[i])
                },
            }
            for i in range(reports.n_agents)
        ],
    }


def dataset_from_json(obj: Any) -> SingleTaskDataset:
    """{"options":, "records": [{"signal":, "prediction": [..]}]}"""
    if not isinstance(obj, dict):
        raise SchemaError("", "expected a top-level object")
    options = _expect(obj, "options", int, "")
    records = _expect(obj, "records", list, "")
    signals, predictions = [], []
    for i, rec in enumerate(records):
        pointer = f"/records/{i}"
        if not isinstance(rec, dict):
            raise SchemaError(pointer, "expected an object")
        signal = _expect(rec, "signal", int, pointer)
        pred = _expect(rec, "prediction", list, pointer)
        if len(pred) != options:
            raise SchemaError(f"{pointer}/prediction",
                              f"expected {options} entries")
        signals.append(signal)
        predictions.append([float(x) for x in pred])
    if not signals:
        raise SchemaError("/records", "need at least one record")
    try:
        return SingleTaskDataset(options, np.array(signals),
                                 np.array(predictions))
    except ValueError as exc:
        raise SchemaError("/records", str(exc)) from None


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _config_from_args(args) -> SolverConfig:
    return SolverConfig(
        solver=args.solver,
        restarts=args.restarts,
        seed=args.seed,
        rank_tol=args.tol,
    )


def _result_payload(res) -> dict[str, Any]:
    return {
        "k": res.k,
        "picked_columns": list(res.picked_columns),
        "assignment": [int(x) for x in res.labels],
        "partition": res.partition,
        "score": res.score,
        "solver_tag": res.solver_tag,
    }


def cmd_cluster(args) -> int:
    with open(args.input) as handle:
        points = parse_points_csv(handle.read())
    res = dmi_cluster(points, _config_from_args(args))
    payload = _result_payload(res)
    payload["seed"] = args.seed
    write_output(dumps_json(payload), args.out)
    if args.svg:
        if points.shape[1] == 2:
            write_output(render_clustering_svg(points, res.labels), args.svg)
        else:
            print(f"svg skipped: input has {points.shape[1]} columns, need 2",
                  file=sys.stderr)
    return EXIT_OK


def cmd_aggregate(args) -> int:
    with open(args.input) as handle:
        reports = reports_from_json(json.load(handle))
    config = _config_from_args(args)
    outcome = kdmi_payments(reports, config, seed=args.seed,
                            single_part=args.single_part)
    answers = aggregate_answer_matrix(reports)
    sp = surprisingly_popular_multitask(answers)
    plu = plurality(answers)
    payload: dict[str, Any] = {
        "n": reports.n_tasks,
        "options": reports.n_options,
        "extraction": _result_payload(outcome.extracted),
        "quality": outcome.quality,
        "payments": outcome.payments,
        "per_agent_alignment": [
            list(a) if a is not None else None
            for a in outcome.per_agent_alignment
        ],
        "surprisingly_popular": [int(x) for x in np.argmax(sp, axis=1)],
        "plurality": [int(x) for x in np.argmax(plu, axis=1)],
        "warnings": outcome.warnings,
        "alignment": None,
        "aligned_answers": None,
    }
    if args.gold:
        with open(args.gold) as handle:
            gold = parse_gold_csv(handle.read())
        perm = align_labels(outcome.extracted.assignment, gold)
        payload["alignment"] = list(perm)
        payload["aligned_answers"] = [
            int(perm[c]) for c in outcome.extracted.labels
        ]
    write_output(dumps_json(payload), args.out)
    return EXIT_OK


def cmd_single(args) -> int:
    with open(args.input) as handle:
        data = dataset_from_json(json.load(handle))
    sp = surprisingly_popular_single(data, smoothing=args.smoothing)
    payload: dict[str, Any] = {
        "sp_answer": sp.option,
        "sp_tied": sp.tied,
        "sp_ratios": sp.ratios,
        "sts_label": None,
        "diagnostics": {
            "answer_shares": sp.moments.answer_shares,
            "prior": sp.moments.prior,
            "prior_normalization_gap":
                sp.moments.diagnostics["prior_normalization_gap"],
        },
    }
    try:
        sts = spectral_truth_serum(data, seed=args.seed,
                                   smoothing=args.smoothing)
        payload["sts_label"] = sts.label
        payload["diagnostics"].update({
            "sts_tied": sts.tied,
            "eigenvalue": sts.eigenvalue,
            "eigenvector": sts.eigenvector,
            "eigen_gap": sts.eigen_gap,
            "projection": sts.projection,
            "residual": sts.residual,
            "warnings": list(sts.warnings),
        })
    except DegenerateSpectrumError as exc:
        payload["diagnostics"]["degenerate_spectrum"] = str(exc)
    write_output(dumps_json(payload), args.out)
    return EXIT_OK


def _accuracy(extracted, truth: np.ndarray) -> float:
    """Best agreement with ground truth over cluster-label permutations."""
    gold = {t: int(truth[t]) for t in range(truth.size)}
    perm = align_labels(extracted.assignment, gold)
    labels = extracted.labels
    hits = sum(1 for t in range(truth.size) if perm[labels[t]] == truth[t])
    return hits / truth.size


def _simulate_example12(args) -> tuple[dict[str, Any], ReportSet | None]:
    strategy = sim.EXAMPLE_STRATEGY_3
    config = _config_from_args(args)
    if args.expected:
        world = sim.preset_world("example12", n_tasks=args.n, m_agents=args.m)
        honest = sim.expected_answer_matrix(world, np.eye(3))
        skewed = sim.expected_answer_matrix(world, strategy)
        res_honest = dmi_cluster(honest, config)
        res_skewed = dmi_cluster(skewed, config)
        det_s = determinant(strategy)
        metrics = {
            "mode": "expected",
            "invariant": same_up_to_permutation(res_honest.assignment,
                                                res_skewed.assignment),
            "quality_honest": res_honest.score,
            "quality_strategy": res_skewed.score,
            "strategy_abs_det": abs(det_s),
            "quality_ratio": res_skewed.score / res_honest.score,
        }
        return metrics, None
    world = sim.preset_world("example12", n_tasks=args.n, m_agents=args.m)
    honest_draw = sim.generate_reports(
        world, sim.identity_strategies(args.m, 3), args.seed)
    skewed_draw = sim.generate_reports(
        world, sim.shared_strategies(args.m, strategy), args.seed)
    res_honest = dmi_cluster(aggregate_answer_matrix(honest_draw.reports),
                             config)
    res_skewed = dmi_cluster(aggregate_answer_matrix(skewed_draw.reports),
                             config)
    outcome = kdmi_payments(honest_draw.reports, config, seed=args.seed)
    metrics = {
        "mode": "sampled",
        "invariant": same_up_to_permutation(res_honest.assignment,
                                            res_skewed.assignment),
        "accuracy_honest": _accuracy(res_honest, honest_draw.truth),
        "accuracy_strategy": _accuracy(res_skewed, skewed_draw.truth),
        "quality_honest": res_honest.score,
        "quality_strategy": res_skewed.score,
        "payment_mean": float(outcome.payments.mean()),
        "payment_std": float(outcome.payments.std()),
    }
    return metrics, honest_draw.reports


def _simulate_legal_pure(args) -> tuple[dict[str, Any], ReportSet | None]:
    world = sim.preset_world("legal_pure", n_tasks=args.n, m_agents=args.m)
    draw = sim.generate_reports(world, sim.identity_strategies(args.m, 3),
                                args.seed)
    config = _config_from_args(args)
    res = dmi_cluster(aggregate_answer_matrix(draw.reports), config)
    outcome = kdmi_payments(draw.reports, config, seed=args.seed)
    metrics = {
        "mode": "sampled",
        "accuracy": _accuracy(res, draw.truth),
        "quality": res.score,
        "payment_mean": float(outcome.payments.mean()),
        "payment_std": float(outcome.payments.std()),
    }
    return metrics, draw.reports


def _simulate_affine_fixture(args) -> tuple[dict[str, Any], None]:
    a = fixtures_mod.fixture_array("affine_7x2")
    t, b = fixtures_mod.transform_parts()
    config = _config_from_args(args)
    res_a = dmi_cluster(a, config)
    res_t = dmi_cluster(a @ t + b, config)
    return {
        "mode": "exact",
        "invariant": same_up_to_permutation(res_a.assignment,
                                            res_t.assignment),
        "score_original": res_a.score,
        "score_transformed": res_t.score,
        "score_ratio": res_t.score / res_a.score,
    }, None


def _simulate_two_world(args) -> tuple[dict[str, Any], None]:
    spec = sim.preset_two_world()
    sts_hits = sp_hits = degenerate = 0
    max_residual = 0.0
    sts_binding: dict[str, int] = {"plus": 0, "minus": 1}
    for trial in range(args.trials):
        data, world = sim.generate_single_task(spec, args.m,
                                               args.seed + trial)
        sp = surprisingly_popular_single(data)
        if int(np.argmax(spec.mu[world])) == sp.option:
            sp_hits += 1
        try:
            sts = spectral_truth_serum(data, seed=args.seed)
        except DegenerateSpectrumError:
            degenerate += 1
            continue
        max_residual = max(max_residual, sts.residual)
        if sts.label is not None and sts_binding[sts.label] == world:
            sts_hits += 1
    return {
        "mode": "sampled",
        "trials": args.trials,
        "sts_accuracy": sts_hits / args.trials,
        "sp_accuracy": sp_hits / args.trials,
        "degenerate_trials": degenerate,
        "max_eigen_residual": max_residual,
    }, None


def _simulate_config_file(args) -> tuple[dict[str, Any], ReportSet | None]:
    with open(args.config) as handle:
        obj = json.load(handle)
    if not isinstance(obj, dict):
        raise SchemaError("", "expected a top-level object")
    options = _expect(obj, "options", int, "")
    n_tasks = _expect(obj, "n_tasks", int, "")
    m_agents = _expect(obj, "m_agents", int, "")
    world = sim.WorldModel(
        n_options=options,
        n_tasks=n_tasks,
        m_agents=m_agents,
        states=np.array(obj["states"]) if "states" in obj else None,
        weights=np.array(obj["weights"]) if "weights" in obj else None,
        dirichlet_alpha=(np.array(obj["dirichlet_alpha"])
                         if "dirichlet_alpha" in obj else None),
        tasks_per_agent=obj.get("tasks_per_agent"),
        assign_prob=obj.get("assign_prob"),
    )
    spec = obj.get("strategies", {"kind": "identity"})
    kind = spec.get("kind", "identity")
    if kind == "identity":
        strategies = sim.identity_strategies(m_agents, options)
    elif kind == "shared":
        strategies = sim.shared_strategies(m_agents, np.array(spec["matrix"]))
    elif kind == "per_agent":
        strategies = [np.array(mat) for mat in spec["matrices"]]
    else:
        raise SchemaError("/strategies/kind", f"unknown kind {kind!r}")
    draw = sim.generate_reports(world, strategies, args.seed)
    config = _config_from_args(args)
    res = dmi_cluster(aggregate_answer_matrix(draw.reports), config)
    metrics = {
        "mode": "sampled",
        "accuracy": _accuracy(res, draw.truth) if not draw.soft_truth else None,
        "soft_truth": draw.soft_truth,
        "quality": res.score,
    }
    return metrics, draw.reports


def cmd_simulate(args) -> int:
    if bool(args.preset) == bool(args.config):
        raise SchemaError("", "give exactly one of --preset or --config")
    if args.preset:
        runner = {
            "example12": _simulate_example12,
            "legal_pure": _simulate_legal_pure,
            "affine_fixture": _simulate_affine_fixture,
            "two_world_spectral": _simulate_two_world,
        }.get(args.preset)
        if runner is None:
            raise SchemaError("/preset", f"unknown preset {args.preset!r}")
        metrics, reports = runner(args)
        metrics["preset"] = args.preset
    else:
        metrics, reports = _simulate_config_file(args)
    metrics["seed"] = args.seed
    if args.reports:
        if reports is None:
            print("no reports generated in this mode", file=sys.stderr)
        else:
            write_output(dumps_json(reports_to_json(reports)), args.reports)
    write_output(dumps_json(metrics), args.out)
    return EXIT_OK


def cmd_fixtures(args) -> int:
    sys.stdout.write(fixtures_mod.fixture_csv(args.name))
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0,
                        help="random seed (default 0)")
    parser.add_argument("--solver", default="auto",
                        choices=["auto", "exact", "kcofactors", "brute"],
                        help="solver dispatch mode (default auto)")
    parser.add_argument("--restarts", type=int, default=16,
                        help="heuristic restarts (default 16)")
    parser.add_argument("--tol", type=float, default=None,
                        help="rank tolerance (default 1e-9 x max entry)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dmicluster",
        description="Determinant-maximization clustering and crowd aggregation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="cluster rows of a CSV point matrix")
    p.add_argument("input", help="CSV of n x d points (optional header)")
    _add_solver_flags(p)
    p.add_argument("--svg", default=None, help="write an SVG plot (d=2 only)")
    p.add_argument("--out", default=None, help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("aggregate", help="extract answers and pay agents")
    p.add_argument("input", help="reports JSON")
    _add_solver_flags(p)
    p.add_argument("--gold", default=None,
                   help="CSV of task_index,option_index gold labels")
    p.add_argument("--single-part", action="store_true",
                   help="pay det over all performed tasks instead of a "
                        "two-part split")
    p.add_argument("--out", default=None, help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("single", help="aggregate one question's reports")
    p.add_argument("input", help="dataset JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--smoothing", type=float, default=0.0,
                   help="additive smoothing for zero conditionals (default off)")
    p.add_argument("--out", default=None, help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_single)

    p = sub.add_parser("simulate", help="run a synthetic scenario")
    p.add_argument("--preset", default=None,
                   choices=["example12", "legal_pure", "affine_fixture",
                            "two_world_spectral"])
    p.add_argument("--config", default=None, help="scenario config JSON")
    _add_solver_flags(p)
    p.add_argument("--expected", action="store_true",
                   help="exact expected-matrix mode (no sampling)")
    p.add_argument("--m", type=int, default=200, help="agents (default 200)")
    p.add_argument("--n", type=int, default=60, help="tasks (default 60)")
    p.add_argument("--trials", type=int, default=200,
                   help="trials for single-task presets (default 200)")
    p.add_argument("--reports", default=None,
                   help="also write generated reports JSON here")
    p.add_argument("--out", default=None, help="metrics JSON path (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fixtures", help="emit a built-in matrix as CSV")
    p.add_argument("name", help=f"one of: {', '.join(fixtures_mod.fixture_names())}")
    p.set_defaults(func=cmd_fixtures)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CsvParseError, SchemaError, UnknownFixtureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DmiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
