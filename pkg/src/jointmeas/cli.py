"""Command-line front end.

Subcommands::

    jointmeas verify       randomized falsification sweep over strategies
    jointmeas curve        boundary curve of a dimensionless relation
    jointmeas experiments  theoretical curves of the neutron / photon experiments
    jointmeas lemmas       fuzz the real-vector lemmas

Numbers are written with 17 significant digits (as strings in JSON) so that
identical inputs produce byte-identical files.  Exit status: 0 pass,
1 a universally valid relation was violated, 2 configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import math
import sys
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from . import relations, tolerances
from .sweep import PRNG_NAME, STRATEGIES, SWEEP_RELATIONS, ConfigError, RunRecord, SweepConfig, fmt, run_lemmas, run_verify

log = logging.getLogger("jointmeas")

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2
EXPERIMENTS = ("erhart", "rozema")
CURVE_HEADER = ("parameter", "eps_a_tilde", "eps_b_tilde", "slack")


# Library-level entry points


def cmd_verify(config: SweepConfig) -> RunRecord:
    return run_verify(config)


def cmd_lemmas(seed: int, n_instances: int, dims: Sequence[int]) -> RunRecord:
    return run_lemmas(seed, n_instances, dims)


def cmd_curve(relation_id: str, c_tilde: float, n_points: int, fmt_name: str = "csv", out_path=None, branch=None) -> str:
    """Render a boundary curve; written to ``out_path`` when given, returned either way."""
    curve = relations.boundary_curve(relation_id, c_tilde, n_points, branch)
    rows = [(p[0], p[1], p[2], s) for p, s in zip(curve.points, curve.slacks())]
    meta = {"relation": relation_id, "c_tilde": fmt(c_tilde), "branch": curve.branch, "n_points": str(n_points)}
    text = render_rows(CURVE_HEADER, rows, fmt_name, meta)
    if out_path is not None:
        write_text(out_path, text)
    return text


def experiment_points(which: str, n_points: int) -> list[tuple[float, float, float, float]]:
    """Theoretical ``(parameter, eps_a, eta_b, slack)`` rows of an experiment.

    ``erhart``: the neutron spin prediction ``(2 sin(phi/2), sqrt(2) cos(phi))``
    for ``phi`` in ``[0, pi/2]`` with ``C = 1``.  ``rozema``: the ideal
    saturating photon strategy ``(2 sin(u/2), 2 sin((pi/2 - u)/2))``.
    Slack is against the same-spectrum bound.
    """
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    grid = np.linspace(0.0, math.pi / 2, n_points)
    if which == "erhart":
        eps, eta = 2 * np.sin(grid / 2), math.sqrt(2) * np.cos(grid)
    elif which == "rozema":
        eps, eta = 2 * np.sin(grid / 2), 2 * np.sin((math.pi / 2 - grid) / 2)
    else:
        raise ValueError(f"unknown experiment {which!r}; choose from {EXPERIMENTS}")
    slack = relations.same_spectrum_lhs(eps, eta, 1.0) - 1.0
    return [tuple(float(v) for v in row) for row in zip(grid, eps, eta, slack)]


def cmd_experiments(which: str, n_points: int, fmt_name: str = "csv", out_path=None) -> str:
    rows = experiment_points(which, n_points)
    text = render_rows(("parameter", "eps_a", "eta_b", "slack"), rows, fmt_name, {"experiment": which, "c_ab": "1"})
    if out_path is not None:
        write_text(out_path, text)
    return text


# Rendering


def render_rows(header, rows, fmt_name: str, meta: dict) -> str:
    if fmt_name == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([fmt(v) for v in row] for row in rows)
        return buf.getvalue()
    if fmt_name == "json":
        payload = {"metadata": meta, "points": [dict(zip(header, (fmt(v) for v in row))) for row in rows]}
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    raise ValueError(f"unknown format {fmt_name!r}")


def render_record(record: RunRecord, fmt_name: str) -> str:
    if fmt_name == "json":
        return json.dumps(record.to_dict(), indent=2, sort_keys=True) + "\n"
    rows = [(rel, record.violations[rel], fmt(record.min_slack.get(rel, math.nan))) for rel in sorted(record.violations)]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("relation", "violations", "min_slack"))
    writer.writerows(rows)
    return buf.getvalue()


def write_text(path, text: str) -> None:
    if str(path) == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from exc


# Config file


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; a section header is optional."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    parser = configparser.ConfigParser()
    try:
        if not text.lstrip().startswith("["):
            text = "[jointmeas]\n" + text
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    values: dict[str, str] = {}
    for section in parser.sections():
        values.update(parser[section])
    return values


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in str(text).replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"expected a list of integers, got {text!r}") from exc


def _str_list(text: str) -> list[str]:
    return [x for x in str(text).replace(",", " ").split() if x]


def sweep_config_from(args: argparse.Namespace, file_values: dict) -> SweepConfig:
    """Merge config-file values with command-line flags (flags win)."""
    merged = {k.replace("-", "_"): v for k, v in file_values.items()}
    for key, attr in (("seed", "seed"), ("dims", "dims"), ("n_instances", "n"), ("relations", "relation"), ("strategy", "strategy")):
        value = getattr(args, attr, None)
        if value is not None:
            merged[key] = value
    unknown = set(merged) - {"seed", "dims", "n_instances", "relations", "strategy", "max_ancilla", "near_a_fraction"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        kwargs = {}
        if "seed" in merged:
            kwargs["seed"] = int(merged["seed"])
        if "dims" in merged:
            kwargs["dims"] = tuple(merged["dims"]) if isinstance(merged["dims"], list) else tuple(_int_list(merged["dims"]))
        if "n_instances" in merged:
            kwargs["n_instances"] = int(merged["n_instances"])
        if "relations" in merged:
            rel = merged["relations"]
            kwargs["relations"] = tuple(rel) if isinstance(rel, list) else tuple(_str_list(rel))
        if "strategy" in merged:
            kwargs["strategy"] = str(merged["strategy"])
        if "max_ancilla" in merged:
            kwargs["max_ancilla"] = int(merged["max_ancilla"])
        if "near_a_fraction" in merged:
            kwargs["near_a_fraction"] = float(merged["near_a_fraction"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return SweepConfig(**kwargs)


# argparse wiring


def _dims_arg(text: str) -> list[int]:
    try:
        return _int_list(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jointmeas", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def outputs(p, default_format="csv"):
        p.add_argument("--format", choices=("csv", "json"), default=default_format)
        p.add_argument("--out", default="-", help="output path, '-' for stdout (default)")

    p = sub.add_parser("verify", help="randomized falsification sweep")
    p.add_argument("--config", help="key = value file with sweep settings")
    p.add_argument("--seed", type=int)
    p.add_argument("--dims", type=_dims_arg, help="comma-separated dimensions, e.g. 2,3,4")
    p.add_argument("--n", type=int, help="number of instances")
    p.add_argument("--relation", action="append", choices=SWEEP_RELATIONS, help="repeatable; default all")
    p.add_argument("--strategy", choices=STRATEGIES)
    outputs(p, "json")

    p = sub.add_parser("curve", help="boundary curve of a dimensionless relation")
    p.add_argument("--relation", default="branciard", choices=sorted(relations.CURVE_BRANCHES))
    p.add_argument("--c-tilde", type=float, default=1.0)
    p.add_argument("--n", type=int, default=101, help="points per arc")
    p.add_argument("--branch", help="lower, upper or contour (relation dependent)")
    outputs(p)

    p = sub.add_parser("experiments", help="theoretical curves of the two experiments")
    p.add_argument("which", choices=EXPERIMENTS)
    p.add_argument("--n", type=int, default=101)
    outputs(p)

    p = sub.add_parser("lemmas", help="fuzz the real-vector lemmas")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=100000, help="instances per lemma, split over the dimensions")
    p.add_argument("--dims", type=_dims_arg, default=[3, 4, 5, 6, 7, 8])
    outputs(p, "json")
    return parser


def _run(args: argparse.Namespace) -> int:
    if args.command == "verify":
        file_values = read_config_file(args.config) if args.config else {}
        cfg = sweep_config_from(args, file_values)
        log.info("verify: %d instances, dims %s, strategy %s, %s", cfg.n_instances, list(cfg.dims), cfg.strategy, PRNG_NAME)
        record = cmd_verify(cfg)
        write_text(args.out, render_record(record, args.format))
        _summarize(record)
        return EXIT_OK if record.passed else EXIT_VIOLATION
    if args.command == "lemmas":
        record = cmd_lemmas(args.seed, args.n, args.dims)
        write_text(args.out, render_record(record, args.format))
        _summarize(record)
        return EXIT_OK if record.passed else EXIT_VIOLATION
    if args.command == "curve":
        try:
            cmd_curve(args.relation, args.c_tilde, args.n, args.format, args.out, args.branch)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return EXIT_OK
    if args.command == "experiments":
        try:
            cmd_experiments(args.which, args.n, args.format, args.out)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return EXIT_OK
    raise ConfigError(f"unknown command {args.command!r}")


def _summarize(record: RunRecord) -> None:
    status = "PASS" if record.passed else "FAIL"
    counts = ", ".join(f"{k}={v}" for k, v in sorted(record.violations.items()))
    print(f"{status} n={record.n_instances} violations: {counts} ({record.wall_time:.2f} s)", file=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        tolerances.get()  # surfaces malformed environment overrides before any work
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
