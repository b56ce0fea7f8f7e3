"""Command-line entry point: ``moledit <command> ...``.

Exit codes: 0 success, 1 usage error, 2 data error. Logs go to stderr;
results go to the requested files or stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .apply import parse_anchor, rank_applications
from .actions import decode_template
from .dataset import coverage, default_jobs, extract_all, library_stats, load_split, write_report
from .errors import MoleditError
from .molgraph import map_correspondence, strip_maps
from .smiles import parse_molecule, parse_reaction, write_molecule
from .template import TemplateLibrary
from .wl import Strategy, canonical_atom_order

log = logging.getLogger("moledit")

DATA_DIR_ENV = "MOLEDIT_DATA_DIR"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _anchor(text: str):
    try:
        return parse_anchor(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _probability(text: str) -> float:
    try:
        p = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < p <= 1.0:
        raise argparse.ArgumentTypeError("p must be in (0, 1]")
    return p


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def resolve_input(path: str) -> Path:
    """Relative paths that do not exist are looked up under $MOLEDIT_DATA_DIR."""
    p = Path(path)
    if not p.exists() and not p.is_absolute() and os.environ.get(DATA_DIR_ENV):
        alt = Path(os.environ[DATA_DIR_ENV]) / p
        if alt.exists():
            return alt
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="moledit", description="Molecule-edit reaction templates.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    strategies = [s.value for s in Strategy]

    p = sub.add_parser("extract", help="extract a template library from a reaction file")
    p.add_argument("--input", required=True)
    p.add_argument("--strategy", choices=strategies, default="wl")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=_positive, default=None)
    p.add_argument("--results", help="optional per-reaction JSONL (id, key or skip reason)")

    p = sub.add_parser("coverage", help="test-set coverage of a library")
    p.add_argument("--library", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--strategy", choices=strategies, default="wl")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=_positive, default=None)
    p.add_argument("--timing", action="store_true", help="include wall_time in the report")

    p = sub.add_parser("apply", help="apply a template to a product")
    p.add_argument("--product", required=True)
    p.add_argument("--template", required=True, help="template key, or integer id with --library")
    p.add_argument("--anchor", required=True, type=_anchor, help="atom:<i> or bond:<i>,<j>")
    p.add_argument("--p", type=_probability, default=1.0)
    p.add_argument("--library")

    p = sub.add_parser("canon-order", help="print the canonical atom order as map numbers")
    p.add_argument("--reaction", required=True)
    p.add_argument("--strategy", choices=strategies, default="wl")
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("stats", help="summary of a template library")
    p.add_argument("--library", required=True)
    return parser


def _cmd_extract(args) -> int:
    split = load_split(resolve_input(args.input))
    jobs = args.jobs or default_jobs()
    lib, results = extract_all(split, args.strategy, args.seed, jobs)
    lib.write(args.out)
    failed = sum(1 for r in results if r.key is None)
    log.info("%d templates from %d reactions (%d failed)", len(lib), len(results), failed)
    if args.results:
        with open(args.results, "w", encoding="utf-8", newline="\n") as fh:
            for r in results:
                fh.write(json.dumps({"id": r.id, "key": r.key, "reason": r.reason}, sort_keys=True) + "\n")
    return 0


def _cmd_coverage(args) -> int:
    lib = TemplateLibrary.read(resolve_input(args.library))
    test = load_split(resolve_input(args.test))
    report = coverage(lib, test, args.strategy, args.seed, args.jobs or default_jobs())
    write_report(report, args.report, include_timing=args.timing)
    log.info(
        "coverage %.4f (key hits %.4f) over %d reactions in %.2fs",
        report.coverage, report.key_hit_coverage, report.n_evaluated, report.wall_time,
    )
    return 0


def _cmd_apply(args) -> int:
    product = parse_molecule(args.product)
    text = args.template
    if "|" in text:
        template, tid = decode_template(text), text
    else:
        if not args.library:
            raise UsageError("--template given as an id needs --library")
        try:
            tid = int(text)
        except ValueError:
            raise UsageError(f"--template {text!r} is neither a key nor an integer id") from None
        template = TemplateLibrary.read(resolve_input(args.library)).by_id(tid).template
    for pred in rank_applications(product, template, args.anchor, args.p, tid):
        print(f"{write_molecule(strip_maps(pred.substrates), canonical=True)}\t{pred.score!r}")
    return 0


def _cmd_canon_order(args) -> int:
    rxn = map_correspondence(parse_reaction(args.reaction))
    order = canonical_atom_order(rxn, args.strategy, args.seed)
    # unmapped (leaving-group) atoms print as 0
    print(" ".join(str(rxn.substrates.atoms[s].atom_map) for s in order.order))
    return 0


def _cmd_stats(args) -> int:
    lib = TemplateLibrary.read(resolve_input(args.library))
    print(json.dumps(library_stats(lib), sort_keys=True, indent=2))
    return 0


COMMANDS = {
    "extract": _cmd_extract,
    "coverage": _cmd_coverage,
    "apply": _cmd_apply,
    "canon-order": _cmd_canon_order,
    "stats": _cmd_stats,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"moledit: error: {exc}", file=sys.stderr)
        return 1
    except (MoleditError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"moledit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
