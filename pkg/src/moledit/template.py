"""Molecule-edit template extraction and the deduplicated template library."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

from .actions import (
    AddAtom,
    CenterSignature,
    EditAction,
    EditAtom,
    EditBond,
    Template,
    decode_template,
    encode_template,
)
from .diff import ReactionState
from .errors import EmptyCenter, NonTerminating
from .molgraph import Reaction
from .wl import CanonicalOrder, Strategy, canonical_atom_order

MAX_SWEEPS = 64


@dataclass(frozen=True)
class Extraction:
    """Result of running the extraction loop on one reaction."""

    template: Template
    center_atoms: tuple[int, ...]  # product atom indices, in slot order c0, c1, ...

    @property
    def key(self) -> str:
        return self.template.key

    @property
    def assignment(self) -> dict[str, int]:
        return {f"c{k}": i for k, i in enumerate(self.center_atoms)}


def _state_for(rxn: Reaction) -> ReactionState:
    if not rxn.validated:
        raise ValueError("reaction must go through map_correspondence first")
    return ReactionState(rxn)


def diff_atom_action(rxn: Reaction, atom: int, order: CanonicalOrder | None = None) -> EditAction | None:
    """Atom action that moves P toward S at substrate atom ``atom`` (P unmodified)."""
    state = _state_for(rxn)
    order = order or canonical_atom_order(rxn)
    rank_of = {s: k for k, s in enumerate(order.order)}
    return state.step_atom(atom, rank_of)


def diff_bond_action(rxn: Reaction, a: int, b: int) -> EditAction | None:
    """Bond action on substrate atoms ``(a, b)`` when both already exist in P."""
    state = _state_for(rxn)
    if not (state.present(a) and state.present(b)):
        return None
    return state.step_bond(a, b)


def _signature(rxn: Reaction, center: list[int]) -> CenterSignature:
    P = rxn.product
    atoms = tuple(
        (P.atoms[i].element, P.atoms[i].charge, P.atoms[i].aromatic, P.num_hs(i)) for i in center
    )
    bonds = []
    for x in range(len(center)):
        for y in range(x + 1, len(center)):
            b = P.bond(center[x], center[y])
            if b is not None:
                bonds.append((x, y, b.order))
    return CenterSignature(atoms, tuple(bonds))


def extract_template(rxn: Reaction, order: CanonicalOrder | None = None) -> Extraction:
    """Run the sweep loop until the edited product equals the substrates.

    Each sweep visits atoms in canonical order; at every atom the first
    applicable atom action is applied, then bond actions to partners in
    canonical order.
    """
    state = _state_for(rxn)
    if order is None:
        order = canonical_atom_order(rxn)
    seq = order.order
    rank_of = {s: k for k, s in enumerate(seq)}
    S = rxn.substrates
    sweeps = 0
    while not state.matches():
        sweeps += 1
        if sweeps > MAX_SWEEPS:
            raise NonTerminating("sweep limit reached")
        before = len(state.actions)
        for a in seq:
            state.step_atom(a, rank_of)
            if not state.present(a):
                continue
            wa = state.widx[a]
            partners = {state.ident[k] for k in state.work.adj[wa]}
            partners.update(k for k in S.adjacency[a] if state.present(k))
            partners.discard(a)
            for b in sorted(partners, key=rank_of.__getitem__):
                state.step_bond(a, b)
        if len(state.actions) == before:
            # the graphs differ (checked above) but no action can close the gap,
            # e.g. a cis/trans tag present only in P
            raise NonTerminating("a full sweep found no applicable action")
    if not state.actions:
        raise EmptyCenter("product and substrates are identical")
    center = state.center
    kind = "bond" if len(center) >= 2 and rxn.product.bond(center[0], center[1]) is not None else "atom"
    template = Template(len(center), tuple(state.actions), kind, _signature(rxn, center))
    return Extraction(template, tuple(center))


# -- library ------------------------------------------------------------------


@dataclass
class LibraryEntry:
    template: Template
    count: int
    example: str
    example_pos: int  # input position of ``example``; the smallest one wins
    id: int = -1


@dataclass
class TemplateLibrary:
    entries: dict[str, LibraryEntry] = field(default_factory=dict)
    sealed: bool = False

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, key: str) -> bool:
        return key in self.entries

    def add(self, template: Template, example: str, pos: int = 0, count: int = 1):
        if self.sealed:
            raise RuntimeError("library is sealed")
        key = template.key
        entry = self.entries.get(key)
        if entry is None:
            self.entries[key] = LibraryEntry(template, count, example, pos)
        else:
            entry.count += count
            if pos < entry.example_pos:
                entry.template, entry.example, entry.example_pos = template, example, pos

    def seal(self) -> TemplateLibrary:
        for k, key in enumerate(sorted(self.entries)):
            self.entries[key].id = k
        self.sealed = True
        return self

    def by_id(self, template_id: int) -> LibraryEntry:
        for e in self.entries.values():
            if e.id == template_id:
                return e
        raise KeyError(template_id)

    def sorted_entries(self) -> list[tuple[str, LibraryEntry]]:
        return sorted(self.entries.items(), key=lambda kv: kv[1].id)

    # -- JSON lines -------------------------------------------------------------

    def to_jsonl(self) -> str:
        if not self.sealed:
            raise RuntimeError("seal the library before writing it")
        lines = []
        for key, e in self.sorted_entries():
            t = e.template
            obj = {
                "id": e.id,
                "key": key,
                "n_center": t.n_center,
                "kind": t.kind,
                "actions": [action_to_json(a) for a in t.actions],
                "signature": t.center_signature.to_json() if t.center_signature else None,
                "count": e.count,
                "example": e.example,
            }
            lines.append(json.dumps(obj, sort_keys=True, separators=(",", ":")))
        return "".join(line + "\n" for line in lines)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_jsonl())

    @classmethod
    def read(cls, path) -> TemplateLibrary:
        lib = cls()
        with open(path, encoding="utf-8") as fh:
            for pos, line in enumerate(fh):
                if not line.strip():
                    continue
                obj = json.loads(line)
                t = decode_template(obj["key"])
                sig = obj.get("signature")
                if sig is not None:
                    t = Template(t.n_center, t.actions, t.kind, CenterSignature.from_json(sig))
                lib.entries[obj["key"]] = LibraryEntry(t, int(obj["count"]), obj.get("example", ""), pos, int(obj["id"]))
        lib.sealed = True
        return lib


def action_to_json(a: EditAction) -> dict:
    if isinstance(a, AddAtom):
        return {
            "type": "AddAtom", "element": a.element, "formal_charge": a.formal_charge,
            "num_h": a.num_h, "aromatic": a.aromatic, "bond_order": a.bond_order,
            "attach_slot": a.attach_slot,
        }
    if isinstance(a, EditAtom):
        return {
            "type": "EditAtom", "charge_delta": a.charge_delta, "h_delta": a.h_delta,
            "aromatic_change": a.aromatic_change, "chirality_change": a.chirality_change,
            "slot": a.slot,
        }
    return {
        "type": "EditBond", "order_delta": a.order_delta, "stereo_change": a.stereo_change,
        "direction_change": a.direction_change, "slot_pair": list(a.slot_pair),
    }


def library_build(results: Iterable[tuple[int, str, Template]]) -> TemplateLibrary:
    """Build an unsealed library from ``(position, example id, template)`` triples."""
    lib = TemplateLibrary()
    for pos, example, template in results:
        lib.add(template, example, pos)
    return lib


def library_merge(a: TemplateLibrary, b: TemplateLibrary) -> TemplateLibrary:
    out = TemplateLibrary()
    for lib in (a, b):
        for e in lib.entries.values():
            out.add(e.template, e.example, e.example_pos, e.count)
    return out


__all__ = [
    "Extraction",
    "LibraryEntry",
    "Strategy",
    "TemplateLibrary",
    "decode_template",
    "diff_atom_action",
    "diff_bond_action",
    "encode_template",
    "extract_template",
    "library_build",
    "library_merge",
]
