"""Experiment runner: seeded Monte Carlo sweeps, golden-table reproduction,
matched-model demonstrations, and structure/model inspection.

Subcommands: ``example1`` (golden reproduction), ``sweep`` (seeded recovery
sweeps from a config file), ``lipman`` (matched model pair demonstration),
``assumptions`` (structure checks), ``recover`` (hierarchy-based posterior
recovery on a partition-model file).  Every subcommand is a pure function of
its inputs: rerunning with the same arguments produces byte-identical output.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from collections import Counter
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
import yaml

from .aggregate import (
    AggregationOutcome,
    action_pmba,
    limited_info_pmba,
    monte_carlo_tolerance,
    pmba_binary,
    pmba_multi,
    surprisingly_popular,
)
from .errors import DegenerateReporterError, PopmeanError
from .example1 import DEFAULT_TOLERANCE, Example1Report, reproduce_example1
from .hierarchy import (
    LIPMAN_ANCHOR,
    build_lipman,
    first_disagreement_order,
    full_info_posterior_exact,
    hierarchies_equal_up_to,
    lipman_constant,
    load_partition_model,
    recover_from_hierarchy,
)
from .model import (
    InfoStructure,
    check_assumptions,
    expected_belief_matrix,
    load_structure,
    posterior_matrix,
)
from .population import (
    CorrelationSpec,
    MisspecSpec,
    PopulationDraw,
    misspecified_alpha_batch,
    sample_population,
    vote_share_matrix,
)

__all__ = [
    "ExperimentConfig",
    "OutputTable",
    "SweepResult",
    "main",
    "render_csv",
    "render_kv",
    "run_example1",
    "run_lipman",
    "run_sweep",
]

#: Environment variable naming the default directory for relative --out paths.
OUT_DIR_VAR = "POPMEAN_OUT"

PROCEDURES = (
    "pmba_binary",
    "pmba_multi",
    "action_pmba",
    "limited_info_pmba",
    "surprisingly_popular",
)


# ---------------------------------------------------------------------------
# output documents
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OutputTable:
    """One named table of uniform rows; ``key_fields`` identify a row when the
    table is flattened to key/value lines."""

    name: str
    key_fields: tuple[str, ...]
    rows: tuple[dict, ...]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, (int, str, Fraction)):
        return str(value)
    raise TypeError(f"cannot format {value!r}")


def render_csv(tables: Sequence[OutputTable]) -> str:
    """Delimited text: one commented title line and a header per table."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    for i, table in enumerate(tables):
        if i:
            out.write("\n")
        out.write(f"# {table.name}\n")
        columns = list(table.rows[0].keys()) if table.rows else []
        writer.writerow(columns)
        for row in table.rows:
            writer.writerow([_fmt(row[c]) for c in columns])
    return out.getvalue()


def render_kv(tables: Sequence[OutputTable]) -> str:
    """Key/value document: ``table.rowkey.column: value`` lines."""
    lines = []
    for table in tables:
        for row in table.rows:
            prefix = ".".join([table.name] + [_fmt(row[k]) for k in table.key_fields])
            for column, value in row.items():
                if column in table.key_fields:
                    continue
                lines.append(f"{prefix}.{column}: {_fmt(value)}")
    return "\n".join(lines) + "\n"


def _render(tables: Sequence[OutputTable], fmt: str) -> str:
    if fmt == "kv":
        return render_kv(tables)
    return render_csv(tables)


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    base = os.environ.get(OUT_DIR_VAR)
    if base and not os.path.isabs(out):
        out = os.path.join(base, out)
    with open(out, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)


# ---------------------------------------------------------------------------
# example1
# ---------------------------------------------------------------------------

def _verdict_text(members: frozenset[str], most: str | None) -> str:
    joined = "+".join(sorted(members))
    return f"{joined};most={most}" if most is not None else joined


def run_example1(tolerance: float = DEFAULT_TOLERANCE) -> tuple[list[OutputTable], bool]:
    """Golden reproduction document: expected vs computed for every block."""
    report: Example1Report = reproduce_example1(tolerance)
    rows: list[dict] = []

    for check, col_names in (
        (report.mean_check, [f"|{w}" for w in ("w1", "w2", "w3")]),
        (report.alpha_check, [f"|{s}" for s in ("s1", "s2", "s3")]),
    ):
        for i, state in enumerate(("w1", "w2", "w3")):
            for j, suffix in enumerate(col_names):
                expected = float(check.expected[i, j])
                computed = float(check.computed[i, j])
                rows.append(
                    {
                        "block": check.name,
                        "item": f"{state}{suffix}",
                        "expected": expected,
                        "computed": computed,
                        "delta": abs(computed - expected),
                        "ok": abs(computed - expected) <= tolerance,
                    }
                )

    for (signal, state), (want_set, want_most) in report.sp_check.expected.items():
        verdict = report.sp_check.computed[(signal, state)]
        rows.append(
            {
                "block": "sp",
                "item": f"{signal}|{state}",
                "expected": _verdict_text(want_set, want_most),
                "computed": _verdict_text(verdict.sp_states, verdict.most_surprising),
                "delta": None,
                "ok": verdict.sp_states == want_set
                and verdict.most_surprising == want_most,
            }
        )

    for j, state in enumerate(("w1", "w2", "w3")):
        expected = report.reference_scores[j]
        computed = report.scores[j]
        rows.append(
            {
                "block": "scores",
                "item": state,
                "expected": expected,
                "computed": computed,
                "delta": abs(computed - expected),
                "ok": abs(computed - expected) <= tolerance,
            }
        )
    rows.append(
        {
            "block": "verdict",
            "item": "score(w2)>score(w1)",
            "expected": True,
            "computed": report.ranking_ok,
            "delta": None,
            "ok": report.ranking_ok,
        }
    )
    rows.append(
        {
            "block": "result",
            "item": "passed",
            "expected": True,
            "computed": report.passed,
            "delta": None,
            "ok": report.passed,
        }
    )
    table = OutputTable("example1", ("block", "item"), tuple(rows))
    return [table], report.passed


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """A sweep: structure file, procedure, correlation, sizes, trials, seed."""

    structure_path: str
    procedure: str
    correlation: CorrelationSpec
    population_sizes: tuple[int, ...]
    trials: int
    seed: int
    half_width: float = 0.0
    out: str | None = None
    format: str = "csv"

    def override(self, **changes) -> "ExperimentConfig":
        supplied = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **supplied)


def _config_key_lines(path: str) -> dict[str, int]:
    """Map top-level (and one-level nested) config keys to 1-based lines."""
    with open(path, "r", encoding="utf-8") as handle:
        node = yaml.compose(handle, Loader=yaml.SafeLoader)
    lines: dict[str, int] = {}
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            lines[str(key_node.value)] = key_node.start_mark.line + 1
            if isinstance(value_node, yaml.MappingNode):
                for sub_key, _ in value_node.value:
                    lines[f"{key_node.value}.{sub_key.value}"] = (
                        sub_key.start_mark.line + 1
                    )
    return lines


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate a sweep config, anchoring errors to file:line: key."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            payload = yaml.safe_load(handle)
    except OSError as exc:
        raise ValueError(f"{path}:1: cannot read config ({exc})") from exc
    except yaml.YAMLError as exc:
        raise ValueError(f"{path}:1: invalid document ({exc})") from exc
    if not isinstance(payload, dict):
        raise ValueError(f"{path}:1: config must be a mapping")
    lines = _config_key_lines(path)

    def fail(key: str, problem: str) -> ValueError:
        line = lines.get(key, lines.get(key.split(".")[0], 1))
        return ValueError(f"{path}:{line}: {key}: {problem}")

    def require(key: str):
        if key not in payload:
            raise ValueError(f"{path}:1: {key}: missing required key")
        return payload[key]

    structure_path = str(require("structure"))
    if not os.path.exists(structure_path):
        raise fail("structure", f"file not found: {structure_path}")

    procedure = str(require("procedure"))
    if procedure not in PROCEDURES:
        raise fail("procedure", f"unknown procedure (choose from {', '.join(PROCEDURES)})")

    corr_payload = payload.get("correlation", {"kind": "iid"})
    if not isinstance(corr_payload, dict):
        raise fail("correlation", "must be a mapping with kind/block_size")
    try:
        correlation = CorrelationSpec(
            kind=str(corr_payload.get("kind", "iid")),
            block_size=corr_payload.get("block_size", 1),
        )
    except ValueError as exc:
        raise fail("correlation", str(exc)) from exc

    sizes_payload = require("population_sizes")
    if not isinstance(sizes_payload, list) or not sizes_payload:
        raise fail("population_sizes", "must be a nonempty list")
    sizes = []
    for entry in sizes_payload:
        if not isinstance(entry, int) or isinstance(entry, bool) or entry < 1:
            raise fail("population_sizes", f"sizes must be positive integers, got {entry!r}")
        sizes.append(entry)

    trials = require("trials")
    if not isinstance(trials, int) or isinstance(trials, bool) or trials < 1:
        raise fail("trials", f"must be an integer >= 1, got {trials!r}")

    seed = payload.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise fail("seed", f"must be a nonnegative integer, got {seed!r}")

    half_width = payload.get("half_width", 0.0)
    if isinstance(half_width, bool) or not isinstance(half_width, (int, float)) or half_width < 0:
        raise fail("half_width", f"must be a nonnegative number, got {half_width!r}")

    fmt = payload.get("format", "csv")
    if fmt not in ("csv", "kv"):
        raise fail("format", f"must be csv or kv, got {fmt!r}")

    out = payload.get("out")
    if out is not None:
        out = str(out)

    known = {
        "structure", "procedure", "correlation", "population_sizes",
        "trials", "seed", "half_width", "format", "out",
    }
    for key in payload:
        if key not in known:
            raise fail(str(key), "unknown key")

    return ExperimentConfig(
        structure_path=structure_path,
        procedure=procedure,
        correlation=correlation,
        population_sizes=tuple(sizes),
        trials=trials,
        seed=seed,
        half_width=float(half_width),
        out=out,
        format=str(fmt),
    )


@dataclass(frozen=True)
class SweepResult:
    """Per-trial rows plus per-population-size aggregates."""

    detail: tuple[dict, ...]
    summary: tuple[dict, ...]

    def tables(self) -> list[OutputTable]:
        return [
            OutputTable("trial", ("n", "trial"), self.detail),
            OutputTable("summary", ("n",), self.summary),
        ]


def _second_order(
    draw: PopulationDraw,
    means_entries: np.ndarray,
    half_width: float,
    alpha_seed: int,
    means,
) -> np.ndarray:
    if half_width == 0.0:
        return draw.first_order @ means_entries.T
    return misspecified_alpha_batch(
        draw.first_order, means, MisspecSpec(half_width), alpha_seed
    )


def _run_procedure(
    config: ExperimentConfig,
    structure: InfoStructure,
    fixtures: dict,
    draw: PopulationDraw,
    alpha_seed: int,
) -> AggregationOutcome | str:
    """Dispatch one trial; returns an outcome or (for the surprisingly-popular
    baseline) the declared state label."""
    tol = monte_carlo_tolerance(structure.num_states, draw.n)
    means = fixtures["means"]

    if config.procedure == "action_pmba":
        second = fixtures["shares_by_signal"][draw.signal_indices]
        return action_pmba(draw.replace(second_order=second), ambiguity_tol=tol, seed=draw.seed)

    second = _second_order(draw, fixtures["entries"], config.half_width, alpha_seed, means)

    if config.procedure == "pmba_binary":
        others = draw.signal_indices != draw.signal_indices[0]
        if not others.any():
            raise DegenerateReporterError(
                "degenerate reporter pair: every sampled agent saw the same signal"
            )
        designated = (0, int(np.argmax(others)))
        enriched = draw.replace(second_order=second, designated=designated)
        return pmba_binary(enriched, ambiguity_tol=tol, seed=draw.seed)
    if config.procedure == "pmba_multi":
        return pmba_multi(draw.replace(second_order=second), ambiguity_tol=tol, seed=draw.seed)
    if config.procedure == "limited_info_pmba":
        return limited_info_pmba(draw.replace(second_order=second), ambiguity_tol=tol, seed=draw.seed)
    if config.procedure == "surprisingly_popular":
        realized = draw.first_order.mean(axis=0)
        return surprisingly_popular(realized, second[0], states=structure.states)
    raise ValueError(f"unknown procedure {config.procedure!r}")


def run_sweep(config: ExperimentConfig) -> SweepResult:
    """Run every (population size, trial) cell and aggregate recovery rates.

    Each cell's randomness derives from (master seed, size index, trial), so
    results are independent of execution order and identical across reruns.
    """
    structure = load_structure(config.structure_path)
    means = expected_belief_matrix(structure)
    fixtures = {
        "means": means,
        "entries": means.entries,
        "shares_by_signal": posterior_matrix(structure) @ vote_share_matrix(structure).T,
    }

    detail: list[dict] = []
    summary: list[dict] = []
    for n_idx, n in enumerate(config.population_sizes):
        correct = 0
        distances: list[float] = []
        errors: Counter[str] = Counter()
        for trial in range(config.trials):
            root = np.random.SeedSequence((config.seed, n_idx, trial))
            draw_seed, alpha_seed = (int(s) for s in root.generate_state(2))
            draw = sample_population(
                structure, config.correlation, n, seed=draw_seed
            )
            row = {
                "n": n,
                "trial": trial,
                "true_state": draw.true_state,
                "recovered_state": None,
                "correct": 0,
                "match_distance": None,
                "runner_up_distance": None,
                "condition_number": None,
                "error": None,
            }
            try:
                result = _run_procedure(config, structure, fixtures, draw, alpha_seed)
            except PopmeanError as exc:
                row["error"] = str(exc).split(":")[0]
                errors[row["error"]] += 1
            else:
                if isinstance(result, AggregationOutcome):
                    row["recovered_state"] = result.recovered_state
                    row["match_distance"] = result.match_distance
                    row["runner_up_distance"] = result.runner_up_distance
                    row["condition_number"] = result.condition_number
                    distances.append(result.match_distance)
                else:
                    row["recovered_state"] = result
                if row["recovered_state"] == draw.true_state:
                    row["correct"] = 1
                    correct += 1
            detail.append(row)
        summary.append(
            {
                "n": n,
                "trials": config.trials,
                "recovery_rate": correct / config.trials,
                "mean_match_distance": (
                    sum(distances) / len(distances) if distances else None
                ),
                "errors": "; ".join(
                    f"{phrase}={count}" for phrase, count in sorted(errors.items())
                ),
            }
        )
    return SweepResult(detail=tuple(detail), summary=tuple(summary))


# ---------------------------------------------------------------------------
# lipman
# ---------------------------------------------------------------------------

def run_lipman(m: int, mirrored: bool = False) -> tuple[list[OutputTable], bool]:
    """Build the matched pair, report agreement depth and both posteriors, and
    assert the identification failure (same order-m hierarchies, different
    pooled posteriors)."""
    base, modified = build_lipman(m, mirrored=mirrored)
    agree = hierarchies_equal_up_to(base, LIPMAN_ANCHOR, modified, LIPMAN_ANCHOR, m)
    disagreement = first_disagreement_order(base, LIPMAN_ANCHOR, modified, LIPMAN_ANCHOR)
    post_base = full_info_posterior_exact(base, LIPMAN_ANCHOR)
    post_modified = full_info_posterior_exact(modified, LIPMAN_ANCHOR)
    ok = agree and disagreement is not None and post_base != post_modified

    effective = m if m == 2 or m % 2 == 1 else m + 1
    rows = [
        {"item": "m", "value": m},
        {"item": "effective_order", "value": effective},
        {"item": "base_states", "value": base.num_ground},
        {"item": "modified_states", "value": modified.num_ground},
        {"item": "x", "value": lipman_constant(m)},
        {"item": "mirrored", "value": mirrored},
        {"item": "hierarchies_equal_up_to_m", "value": agree},
        {"item": "first_disagreement_order", "value": disagreement},
        {"item": "posterior_base", "value": " ".join(str(p) for p in post_base)},
        {"item": "posterior_modified", "value": " ".join(str(p) for p in post_modified)},
        {"item": "identification_fails", "value": ok},
    ]
    return [OutputTable("lipman", ("item",), tuple(rows))], ok


# ---------------------------------------------------------------------------
# assumptions / recover
# ---------------------------------------------------------------------------

def run_assumptions(structure_path: str) -> list[OutputTable]:
    """Evaluate the aggregation assumptions on a structure file."""
    structure = load_structure(structure_path)
    report = check_assumptions(structure)
    rows = [
        {"item": "structure", "value": structure_path},
        {"item": "num_states", "value": report.num_states},
        {"item": "num_signals", "value": report.num_signals},
        {"item": "posterior_rank", "value": report.posterior_rank},
        {"item": "distinct_means", "value": report.distinct_means},
    ]
    for (a, b), flag in sorted(report.informative.items()):
        rows.append({"item": f"informative.{a}|{b}", "value": flag})
    for (a, b), dist in sorted(report.tv_distance.items()):
        rows.append({"item": f"tv_distance.{a}|{b}", "value": dist})
    rows.append({"item": "passes", "value": report.passes()})
    return [OutputTable("assumptions", ("item",), tuple(rows))]


def _parse_profile(text: str) -> str | tuple[int, ...]:
    if "," in text:
        return tuple(int(part) for part in text.split(","))
    return text


def run_recover(model_path: str, profile_text: str) -> tuple[list[OutputTable], bool]:
    """Hierarchy-based recovery on a partition-model file, checked against the
    full-information posterior."""
    model = load_partition_model(model_path)
    profile = _parse_profile(profile_text)
    result = recover_from_hierarchy(model, profile)
    expected = full_info_posterior_exact(model, profile)
    matches = result.exact_posterior == expected

    rows = [
        {"item": "model", "value": model_path},
        {"item": "profile", "value": profile_text},
        {"item": "players", "value": model.num_players},
        {"item": "ground_states", "value": model.num_ground},
        {"item": "closure_size", "value": len(result.closure)},
    ]
    for label, value in zip(model.payoff_states.labels, result.exact_posterior):
        rows.append({"item": f"posterior.{label}", "value": value})
    rows.append({"item": "matches_full_info", "value": matches})
    return [OutputTable("recover", ("item",), tuple(rows))], matches


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _add_output_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", default=None, help="output file (relative paths resolve against $" + OUT_DIR_VAR + ")")
    parser.add_argument("--format", choices=("csv", "kv"), default=None, help="output format (default csv)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="popmean",
        description="Population-mean belief aggregation experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("example1", help="reproduce the three-state demonstration tables")
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE,
                   help="per-entry tolerance for the table comparisons")
    _add_output_flags(p)

    p = sub.add_parser("sweep", help="seeded Monte Carlo recovery sweep")
    p.add_argument("--config", required=True, help="sweep configuration file")
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    p.add_argument("--trials", type=int, default=None, help="override the trial count")
    _add_output_flags(p)

    p = sub.add_parser("lipman", help="matched model pair: same low-order hierarchies, different posteriors")
    p.add_argument("m", type=int, help="agreement order (>= 2)")
    _add_output_flags(p)

    p = sub.add_parser("assumptions", help="run the assumption checks on a structure file")
    p.add_argument("structure", help="structure file")
    _add_output_flags(p)

    p = sub.add_parser("recover", help="hierarchy-based posterior recovery on a partition model")
    p.add_argument("model", help="partition-model file")
    p.add_argument("profile", help="ground-state name or comma-separated cell indices")
    _add_output_flags(p)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "example1":
            tables, ok = run_example1(tolerance=args.tolerance)
            fmt, out = args.format or "csv", args.out
        elif args.command == "sweep":
            config = load_config(args.config).override(
                seed=args.seed, trials=args.trials, out=args.out, format=args.format
            )
            tables, ok = run_sweep(config).tables(), True
            fmt, out = config.format, config.out
        elif args.command == "lipman":
            if args.m < 2:
                raise ValueError("m must be at least 2")
            tables, ok = run_lipman(args.m)
            fmt, out = args.format or "csv", args.out
        elif args.command == "assumptions":
            tables, ok = run_assumptions(args.structure), True
            fmt, out = args.format or "csv", args.out
        else:
            tables, ok = run_recover(args.model, args.profile)
            fmt, out = args.format or "csv", args.out
    except (PopmeanError, ValueError, OSError) as exc:
        print(f"popmean {args.command}: {exc}", file=sys.stderr)
        return 2
    _write(_render(tables, fmt), out)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
