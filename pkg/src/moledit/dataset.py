"""Dataset loading, parallel template extraction and coverage reports."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import errors
from .actions import Template, decode_template
from .apply import apply_template
from .errors import BadHeader, MoleditError
from .molgraph import map_correspondence, molecules_isomorphic
from .smiles import parse_reaction
from .template import TemplateLibrary, extract_template, library_build
from .wl import Strategy, canonical_atom_order

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

# every reason bucket a report can carry, so reports always list all of them
REASON_CODES = tuple(
    sorted(
        {
            "malformed_row",
            "duplicate_id",
            *(
                cls.code
                for cls in vars(errors).values()
                if isinstance(cls, type) and issubclass(cls, MoleditError) and cls is not MoleditError
            ),
            "error",
        }
    )
)


@dataclass(frozen=True)
class ReactionRecord:
    id: str
    smiles: str
    rxn_class: int | None = None


@dataclass
class DatasetSplit:
    name: str
    reactions: list[ReactionRecord]
    skipped: Counter = field(default_factory=Counter)
    n_rows: int = 0


def _split_name(path: Path) -> str:
    stem = path.stem.lower()
    if "test" in stem:
        return "test"
    if "val" in stem:
        return "valid"
    return "train"


def _find_column(header: list[str], given, fallback) -> int | None:
    if given is None:
        return fallback
    if isinstance(given, int):
        return given
    if given in header:
        return header.index(given)
    raise BadHeader(f"column {given!r} not found in header {header}")


def load_split(
    path,
    name: str | None = None,
    delimiter: str | None = None,
    id_col: str | int | None = None,
    rxn_col: str | int | None = None,
    class_col: str | int | None = None,
) -> DatasetSplit:
    """Read a delimited reaction file with a header row.

    The delimiter is sniffed between comma and tab when not given. Without
    explicit column flags the reaction column is the first header containing
    ``>``, ids come from an ``id`` column (or the row number) and classes from
    a ``class`` column when present. Rows that fail to parse are counted in
    ``skipped`` and left out.
    """
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise BadHeader(f"{path}: empty file or missing header")
    if delimiter is None:
        delimiter = "\t" if lines[0].count("\t") > lines[0].count(",") else ","
    rows = list(csv.reader(lines, delimiter=delimiter))
    header = [h.strip() for h in rows[0]]
    lowered = [h.lower() for h in header]
    guess_rxn = next((k for k, h in enumerate(header) if ">" in h), None)
    if guess_rxn is None:
        guess_rxn = next((k for k, h in enumerate(lowered) if "rxn" in h or "reaction" in h), None)
    guess_id = lowered.index("id") if "id" in lowered else None
    guess_class = lowered.index("class") if "class" in lowered else None
    r_col = _find_column(header, rxn_col, guess_rxn)
    if r_col is None:
        raise BadHeader(f"{path}: cannot tell which column holds reaction SMILES")
    i_col = _find_column(header, id_col, guess_id)
    c_col = _find_column(header, class_col, guess_class)

    split = DatasetSplit(name or _split_name(path), [])
    seen: set[str] = set()
    for k, row in enumerate(rows[1:]):
        if not row or all(not c.strip() for c in row):
            continue
        split.n_rows += 1
        if len(row) <= max(c for c in (r_col, i_col, c_col) if c is not None):
            split.skipped["malformed_row"] += 1
            continue
        rid = row[i_col].strip() if i_col is not None else str(k)
        smiles = row[r_col].strip()
        rclass = None
        if c_col is not None and row[c_col].strip():
            try:
                rclass = int(row[c_col])
            except ValueError:
                rclass = None
        if rid in seen:
            split.skipped["duplicate_id"] += 1
            continue
        try:
            parse_reaction(smiles)
        except MoleditError as exc:
            log.debug("row %s: %s", rid, exc)
            split.skipped[exc.code] += 1
            continue
        seen.add(rid)
        split.reactions.append(ReactionRecord(rid, smiles, rclass))
    log.info("%s: %d reactions, %d skipped", path, len(split.reactions), sum(split.skipped.values()))
    return split


# -- extraction ---------------------------------------------------------------


@dataclass(frozen=True)
class ExtractResult:
    pos: int
    id: str
    key: str | None
    reason: str | None = None
    center_atoms: tuple[int, ...] = ()


def reaction_seed(seed, rid: str) -> int:
    """Per-reaction seed, independent of worker scheduling."""
    digest = hashlib.sha256(f"{seed}:{rid}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _extract_one(job) -> tuple[ExtractResult, Template | None]:
    pos, rid, smiles, strategy, seed = job
    try:
        rxn = map_correspondence(parse_reaction(smiles))
        s = reaction_seed(seed, rid) if strategy == Strategy.RANDOM else None
        ex = extract_template(rxn, canonical_atom_order(rxn, strategy, s))
    except MoleditError as exc:
        return ExtractResult(pos, rid, None, exc.code), None
    return ExtractResult(pos, rid, ex.key, None, ex.center_atoms), ex.template


def _warm_up() -> None:
    # compile the kernels once in the parent so forked workers inherit them
    from . import _kernels
    import numpy as np

    _kernels.refine(np.array([1, 1], dtype=np.int64), np.array([0, 1, 2]), np.array([1, 0]), np.array([2, 2]), 1)


def _run(fn, jobs_list, jobs: int):
    if jobs <= 1 or len(jobs_list) < 2:
        return [fn(j) for j in jobs_list]
    _warm_up()
    chunk = max(1, len(jobs_list) // (jobs * 8))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, jobs_list, chunksize=chunk))


def default_jobs() -> int:
    return os.cpu_count() or 1


def extract_all(
    split: DatasetSplit,
    strategy: Strategy | str = Strategy.WL,
    seed=0,
    jobs: int = 1,
) -> tuple[TemplateLibrary, list[ExtractResult]]:
    """Extract every reaction and fold the templates into a sealed library.

    Output does not depend on ``jobs``: results are reduced in input order
    and template ids are assigned by sorted key.
    """
    strategy = Strategy(strategy)
    work = [(pos, r.id, r.smiles, strategy, seed) for pos, r in enumerate(split.reactions)]
    out = _run(_extract_one, work, jobs)
    out.sort(key=lambda x: x[0].pos)
    lib = library_build((res.pos, res.id, t) for res, t in out if t is not None)
    return lib.seal(), [res for res, _ in out]


# -- coverage -----------------------------------------------------------------


@dataclass
class CoverageReport:
    n_templates: int
    n_test: int
    n_covered: int
    n_key_hit: int
    skipped: dict[str, int]
    strategy: str
    wall_time: float = 0.0

    @property
    def n_evaluated(self) -> int:
        return self.n_test - sum(self.skipped.values())

    @property
    def coverage(self) -> float:
        """Applied-hit rate: key present and its template reproduces S."""
        return self.n_covered / self.n_evaluated if self.n_evaluated > 0 else 0.0

    @property
    def key_hit_coverage(self) -> float:
        return self.n_key_hit / self.n_evaluated if self.n_evaluated > 0 else 0.0

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "n_templates": self.n_templates,
            "n_test": self.n_test,
            "n_evaluated": self.n_evaluated,
            "n_covered": self.n_covered,
            "n_key_hit": self.n_key_hit,
            "coverage": self.coverage,
            "key_hit_coverage": self.key_hit_coverage,
            "skipped": {code: int(self.skipped.get(code, 0)) for code in REASON_CODES},
            "strategy": self.strategy,
        }
        if include_timing:
            d["wall_time"] = self.wall_time
        return d


_LIBRARY: dict[str, Template] = {}


def _set_library(templates: dict[str, Template]) -> None:
    global _LIBRARY
    _LIBRARY = templates


def _cover_one(job) -> tuple[str, bool, bool]:
    """Returns (skip reason or "", key hit, applied hit)."""
    pos, rid, smiles, strategy, seed = job
    res, _ = _extract_one(job)
    if res.key is None:
        return res.reason or "error", False, False
    t = _LIBRARY.get(res.key)
    if t is None:
        return "", False, False
    rxn = map_correspondence(parse_reaction(smiles))
    assignment = {f"c{k}": i for k, i in enumerate(res.center_atoms)}
    try:
        out = apply_template(rxn.product, t, assignment)
    except MoleditError:
        return "", True, False
    return "", True, molecules_isomorphic(out, rxn.substrates)


def coverage(
    library: TemplateLibrary,
    test: DatasetSplit,
    strategy: Strategy | str = Strategy.WL,
    seed=0,
    jobs: int = 1,
) -> CoverageReport:
    """Fraction of extractable test reactions the library covers.

    A reaction is a key hit when its extracted key is in the library, and
    covered when applying the library's template at the reaction's own
    center assignment gives back its substrates.
    """
    if not library.sealed:
        raise RuntimeError("library must be sealed")
    start = time.perf_counter()
    strategy = Strategy(strategy)
    templates = {key: e.template for key, e in library.entries.items()}
    _set_library(templates)
    work = [(pos, r.id, r.smiles, strategy, seed) for pos, r in enumerate(test.reactions)]
    if jobs <= 1 or len(work) < 2:
        out = [_cover_one(j) for j in work]
    else:
        _warm_up()
        chunk = max(1, len(work) // (jobs * 8))
        with ProcessPoolExecutor(max_workers=jobs, initializer=_set_library, initargs=(templates,)) as pool:
            out = list(pool.map(_cover_one, work, chunksize=chunk))
    skipped = Counter(test.skipped)
    n_key = n_cov = 0
    for reason, key_hit, applied in out:
        if reason:
            skipped[reason] += 1
        n_key += key_hit
        n_cov += applied
    return CoverageReport(
        n_templates=len(library),
        n_test=test.n_rows,
        n_covered=n_cov,
        n_key_hit=n_key,
        skipped=dict(skipped),
        strategy=strategy.value,
        wall_time=time.perf_counter() - start,
    )


def write_report(report: CoverageReport, path, include_timing: bool = False) -> None:
    """Canonical JSON (sorted keys); timing is left out unless asked for so
    identical inputs give identical bytes."""
    text = json.dumps(report.to_dict(include_timing), sort_keys=True, indent=2) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def library_stats(lib: TemplateLibrary) -> dict:
    kinds = Counter(e.template.kind for e in lib.entries.values())
    sizes = Counter(e.template.n_center for e in lib.entries.values())
    counts = sorted((e.count for e in lib.entries.values()), reverse=True)
    top = sorted(lib.entries.values(), key=lambda e: (-e.count, e.id))[:10]
    return {
        "n_templates": len(lib),
        "n_reactions": sum(counts),
        "singletons": sum(1 for c in counts if c == 1),
        "by_kind": dict(sorted(kinds.items())),
        "by_n_center": {str(k): v for k, v in sorted(sizes.items())},
        "top": [{"id": e.id, "count": e.count, "key": e.template.key} for e in top],
    }
