"""Applying templates to product molecules and scoring enumerated sites."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .actions import Template
from .errors import AnchorMismatch, InvalidResult, NoValidSite, SlotUnassigned
from .molgraph import Molecule
from .workgraph import WorkGraph, apply_action


@dataclass(frozen=True)
class AtomSite:
    atom: int


@dataclass(frozen=True)
class BondSite:
    atoms: tuple[int, int]


Anchor = AtomSite | BondSite


def parse_anchor(text: str) -> Anchor:
    """``atom:<i>`` or ``bond:<i>,<j>``."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "atom":
            return AtomSite(int(rest))
        if kind == "bond":
            i, j = rest.split(",")
            return BondSite((int(i), int(j)))
    except ValueError:
        pass
    raise ValueError(f"bad anchor {text!r}; expected atom:<i> or bond:<i>,<j>")


@dataclass(frozen=True)
class RankedPrediction:
    substrates: Molecule
    score: float
    template_id: int | str
    site_assignment: tuple[tuple[str, int], ...]


def _compatible(product: Molecule, i: int, slot_sig) -> bool:
    el, chg, ar, _ = slot_sig
    a = product.atoms[i]
    return a.element == el and a.charge == chg and a.aromatic == ar


def _anchor_atoms(product: Molecule, t: Template, anchor: Anchor) -> list[int]:
    if isinstance(anchor, AtomSite):
        if t.kind != "atom":
            raise AnchorMismatch("bond template needs a bond anchor")
        atoms = [anchor.atom]
    else:
        if t.kind != "bond":
            raise AnchorMismatch("atom template needs an atom anchor")
        i, j = anchor.atoms
        if not (0 <= i < len(product) and 0 <= j < len(product)) or product.bond(i, j) is None:
            raise AnchorMismatch(f"atoms {i} and {j} are not bonded")
        atoms = [i, j]
    for i in atoms:
        if not 0 <= i < len(product):
            raise AnchorMismatch(f"atom {i} out of range")
    return atoms


def match_sites(product: Molecule, t: Template, anchor: Anchor) -> list[dict[str, int]]:
    """All assignments of center slots to product atoms that extend ``anchor``.

    Slots beyond the anchor are filled by a depth-first search that requires
    the recorded element/charge/aromaticity and the recorded bonds between
    center slots. Without a signature only the anchor slots can be filled.
    """
    fixed = _anchor_atoms(product, t, anchor)
    sig = t.center_signature
    if sig is not None:
        for k, i in enumerate(fixed):
            if not _compatible(product, i, sig.atoms[k]):
                raise AnchorMismatch(f"anchor atom {i} does not match slot c{k}")
        if len(fixed) == 2:
            want = {(x, y): o for x, y, o in sig.bonds}
            if (0, 1) in want and product.bond(*fixed).order != want[(0, 1)]:
                raise AnchorMismatch("anchor bond order differs from the template")
    if t.n_center <= len(fixed):
        return [{f"c{k}": i for k, i in enumerate(fixed[: t.n_center])}]
    if sig is None:
        raise AnchorMismatch("template has no center signature to extend the anchor")

    bonds_to: dict[int, list[tuple[int, float]]] = {}
    for x, y, order in sig.bonds:
        bonds_to.setdefault(y, []).append((x, order))
        bonds_to.setdefault(x, []).append((y, order))

    results: list[tuple[int, ...]] = []
    assigned = list(fixed)

    def extend(k: int):
        if k == t.n_center:
            results.append(tuple(assigned))
            return
        used = set(assigned)
        for i in range(len(product)):
            if i in used or not _compatible(product, i, sig.atoms[k]):
                continue
            ok = True
            for other, order in bonds_to.get(k, ()):
                if other < k:
                    b = product.bond(i, assigned[other])
                    if b is None or b.order != order:
                        ok = False
                        break
            if ok:
                assigned.append(i)
                extend(k + 1)
                assigned.pop()

    extend(len(fixed))
    results.sort()
    return [{f"c{k}": i for k, i in enumerate(r)} for r in results]


def apply_template(product: Molecule, t: Template, assignment: Mapping[str, int]) -> Molecule:
    """Run the template's actions on a copy of ``product``; returns substrates."""
    g = WorkGraph.from_molecule(product)
    slots: dict[str, int] = {}
    for k in range(t.n_center):
        name = f"c{k}"
        if name not in assignment:
            raise SlotUnassigned(f"slot {name} is not assigned")
        i = assignment[name]
        if not 0 <= i < len(product):
            raise InvalidResult(f"slot {name} points outside the product")
        slots[name] = i
    if len(set(slots.values())) != len(slots):
        raise InvalidResult("two center slots assigned to the same atom")
    for action in t.actions:
        apply_action(g, action, slots)
    return g.to_molecule()


def rank_applications(
    product: Molecule,
    t: Template,
    anchor: Anchor,
    p: float,
    template_id: int | str = -1,
) -> list[RankedPrediction]:
    """Apply ``t`` at every valid extension of ``anchor``; each gets score p/k."""
    if not 0.0 < p <= 1.0:
        raise ValueError("p must be in (0, 1]")
    outcomes = []
    for assignment in match_sites(product, t, anchor):
        try:
            mol = apply_template(product, t, assignment)
        except InvalidResult:
            continue
        outcomes.append((assignment, mol))
    if not outcomes:
        raise NoValidSite("no enumerated site produced a valid result")
    k = len(outcomes)
    score = p if k == 1 else p / k
    preds = [
        RankedPrediction(mol, score, template_id, tuple(sorted(a.items(), key=lambda kv: int(kv[0][1:]))))
        for a, mol in outcomes
    ]
    preds.sort(key=lambda r: (-r.score, [i for _, i in r.site_assignment]))
    return preds


def top_k(candidates: Iterable[tuple[Anchor, int | str, float]], k: int) -> list[tuple[Anchor, int | str, float]]:
    """Highest-probability ``(site, template, p)`` triples, ties by input order."""
    indexed = list(enumerate(candidates))
    indexed.sort(key=lambda x: (-x[1][2], x[0]))
    return [c for _, c in indexed[:k]]
