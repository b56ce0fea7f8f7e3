"""Mutable molecule used while extracting and applying templates.

All hydrogen counts are explicit here, so adding or removing bonds never
changes an atom's H count implicitly. Stereo tags carry the neighbor list
they were defined against; when that neighborhood changes the tag goes
stale and reads as "no stereo".

Chirality and cis/trans edits are expressed in a *rank frame*: neighbors
ordered by (canonical rank in the current graph, index). Extraction and
application both compute this frame on isomorphic working graphs, which is
what makes a stored ``+``/``-`` or ``c``/``t`` mean the same thing in both.
"""

from __future__ import annotations

from dataclasses import replace

from .actions import AddAtom, EditAction, EditAtom, EditBond
from .elements import valence_ok
from .errors import InvalidResult, SlotUnassigned
from .smiles import canonical_emission_order
from .molgraph import (
    Atom,
    Bond,
    BondStereo,
    Chirality,
    Molecule,
    canonical_ranks,
    flip,
    flip_stereo,
    permutation_parity,
)

LEGAL_ORDERS = (0.0, 1.0, 1.5, 2.0, 3.0)
_CHIR_CODE = {Chirality.CW: "+", Chirality.CCW: "-", Chirality.NONE: "0"}
_CODE_CHIR = {"+": Chirality.CW, "-": Chirality.CCW, "0": Chirality.NONE}
_STEREO_CODE = {BondStereo.CIS: "c", BondStereo.TRANS: "t"}
_CODE_STEREO = {"c": BondStereo.CIS, "t": BondStereo.TRANS}


class WorkGraph:
    __slots__ = (
        "element", "isotope", "charge", "hs", "aromatic", "chir", "chir_ref",
        "atom_map", "adj", "bonds", "_ranks", "_pos",
    )

    def __init__(self):
        self.element: list[int] = []
        self.isotope: list[int | None] = []
        self.charge: list[int] = []
        self.hs: list[int] = []
        self.aromatic: list[bool] = []
        self.chir: list[Chirality] = []
        self.chir_ref: list[tuple[int, ...] | None] = []
        self.atom_map: list[int] = []
        self.adj: list[set[int]] = []
        # (i, j) with i < j -> [order, stereo, ref_i, ref_j]
        self.bonds: dict[tuple[int, int], list] = {}
        self._ranks: list[int] | None = None
        self._pos: dict[int, int] | None = None

    @classmethod
    def from_molecule(cls, mol: Molecule) -> WorkGraph:
        g = cls()
        for i, a in enumerate(mol.atoms):
            g.element.append(a.element)
            g.isotope.append(a.isotope)
            g.charge.append(a.charge)
            g.hs.append(mol.num_hs(i))
            g.aromatic.append(a.aromatic)
            g.chir.append(a.chirality)
            g.chir_ref.append(tuple(mol.chiral_frame(i)) if a.chirality else None)
            g.atom_map.append(a.atom_map)
            g.adj.append(set(mol.adjacency[i]))
        for b in mol.bonds:
            refs = mol.stereo_refs(b) if b.stereo else None
            if refs is None:
                g.bonds[(b.begin, b.end)] = [b.order, BondStereo.NONE, None, None]
            else:
                g.bonds[(b.begin, b.end)] = [b.order, b.stereo, refs[0], refs[1]]
        return g

    def __len__(self) -> int:
        return len(self.element)

    # -- queries -------------------------------------------------------------

    def order(self, i: int, j: int) -> float:
        rec = self.bonds.get((i, j) if i < j else (j, i))
        return 0.0 if rec is None else rec[0]

    def frame(self, i: int) -> list[int]:
        return ([-1] if self.hs[i] else []) + sorted(self.adj[i])

    def ranks(self) -> list[int]:
        if self._ranks is None:
            self._ranks = list(canonical_ranks(self.to_molecule(check=False)).ranks)
        return self._ranks

    def _order_key(self, nbrs: list[int]):
        """Sort key over ``nbrs``: structural rank, then (only on ties) the
        position in the stereo-aware canonical SMILES, so equivalent inputs
        always pick the same neighbor."""
        r = self.ranks()
        if len({r[k] for k in nbrs}) == len(nbrs):
            return lambda k: (r[k], 0)
        if self._pos is None:
            order = canonical_emission_order(self.to_molecule(check=False))
            self._pos = {a: k for k, a in enumerate(order)}
        pos = self._pos
        return lambda k: (r[k], pos[k])

    def rank_frame(self, i: int) -> list[int]:
        nbrs = list(self.adj[i])
        return ([-1] if self.hs[i] else []) + sorted(nbrs, key=self._order_key(nbrs))

    def rank_ref(self, i: int, exclude: int) -> int | None:
        cands = [k for k in self.adj[i] if k != exclude]
        return min(cands, key=self._order_key(cands)) if cands else None

    def effective_chirality(self, i: int) -> tuple[Chirality, tuple[int, ...] | None]:
        ref = self.chir_ref[i]
        if self.chir[i] == Chirality.NONE or ref is None:
            return Chirality.NONE, None
        if sorted(ref) != self.frame(i):
            return Chirality.NONE, None
        return self.chir[i], ref

    def effective_stereo(self, i: int, j: int):
        """(stereo, ref of i, ref of j) or None when absent or stale."""
        key = (i, j) if i < j else (j, i)
        rec = self.bonds.get(key)
        if rec is None or rec[1] == BondStereo.NONE or rec[0] != 2.0:
            return None
        ri, rj = (rec[2], rec[3]) if key[0] == i else (rec[3], rec[2])
        if ri not in self.adj[i] or rj not in self.adj[j] or ri == j or rj == i:
            return None
        return rec[1], ri, rj

    # -- mutation ------------------------------------------------------------

    def _touch(self):
        self._ranks = None
        self._pos = None

    def add_atom(self, element: int, charge: int, hs: int, aromatic: bool) -> int:
        self._touch()
        self.element.append(element)
        self.isotope.append(None)
        self.charge.append(charge)
        self.hs.append(hs)
        self.aromatic.append(aromatic)
        self.chir.append(Chirality.NONE)
        self.chir_ref.append(None)
        self.atom_map.append(0)
        self.adj.append(set())
        return len(self.element) - 1

    def set_order(self, i: int, j: int, order: float):
        self._touch()
        key = (i, j) if i < j else (j, i)
        if order == 0.0:
            self.bonds.pop(key, None)
            self.adj[i].discard(j)
            self.adj[j].discard(i)
            return
        rec = self.bonds.get(key)
        if rec is None:
            self.bonds[key] = [order, BondStereo.NONE, None, None]
            self.adj[i].add(j)
            self.adj[j].add(i)
        else:
            rec[0] = order
            if order != 2.0:
                rec[1], rec[2], rec[3] = BondStereo.NONE, None, None

    def set_chirality(self, i: int, tag: Chirality):
        """Set the tag as read against the current rank frame."""
        if tag == Chirality.NONE:
            self.chir[i] = Chirality.NONE
            self.chir_ref[i] = None
        else:
            self.chir[i] = tag
            self.chir_ref[i] = tuple(self.rank_frame(i))
        self._pos = None

    def set_stereo(self, i: int, j: int, stereo: BondStereo):
        key = (i, j) if i < j else (j, i)
        rec = self.bonds[key]
        ri, rj = self.rank_ref(i, j), self.rank_ref(j, i)
        if ri is None or rj is None:
            raise InvalidResult("cis/trans tag on a bond without substituents")
        if key[0] != i:
            ri, rj = rj, ri
        rec[1], rec[2], rec[3] = stereo, ri, rj
        self._pos = None

    # -- conversion ----------------------------------------------------------

    def to_molecule(self, check: bool = True) -> Molecule:
        n = len(self)
        if check:
            self.validate()
        atoms = [
            Atom(
                element=self.element[i],
                isotope=self.isotope[i],
                charge=self.charge[i],
                explicit_h=self.hs[i],
                aromatic=self.aromatic[i],
                atom_map=self.atom_map[i],
            )
            for i in range(n)
        ]
        bonds = []
        for (i, j), (order, st, ri, rj) in self.bonds.items():
            bonds.append(Bond(i, j, order))
        mol = Molecule(atoms, bonds)
        # move stereo tags into the molecule's index frame
        for i in range(n):
            tag, ref = self.effective_chirality(i)
            if tag == Chirality.NONE:
                continue
            if permutation_parity(ref, mol.chiral_frame(i)):
                tag = flip(tag)
            atoms[i] = replace(atoms[i], chirality=tag)
        fixed = []
        for b in mol.bonds:
            eff = self.effective_stereo(b.begin, b.end)
            if eff is not None:
                st, ri, rj = eff
                li, lj = mol.stereo_refs(b)
                if ri != li:
                    st = flip_stereo(st)
                if rj != lj:
                    st = flip_stereo(st)
                b = replace(b, stereo=st)
            fixed.append(b)
        return Molecule(atoms, fixed)

    def validate(self):
        n = len(self)
        for i in range(n):
            if self.hs[i] < 0:
                raise InvalidResult(f"atom {i} has negative H count")
            total = 0.0
            for j in self.adj[i]:
                order = self.order(i, j)
                if order == 1.5 and not (self.aromatic[i] and self.aromatic[j]):
                    raise InvalidResult(f"aromatic bond {i}-{j} between non-aromatic atoms")
                total += order
            if not valence_ok(self.element[i], self.charge[i], self.aromatic[i], total, self.hs[i]):
                raise InvalidResult(f"atom {i} exceeds its valence")


# -- action application ---------------------------------------------------------


def chirality_code(tag: Chirality) -> str:
    return _CHIR_CODE[tag]


def stereo_code(st: BondStereo) -> str:
    return _STEREO_CODE[st]


def _resolve(slots: dict[str, int], name: str) -> int:
    try:
        return slots[name]
    except KeyError:
        raise SlotUnassigned(f"slot {name} has no atom") from None


def apply_action(g: WorkGraph, action: EditAction, slots: dict[str, int]) -> int | None:
    """Apply one action in place. Returns the new atom index for AddAtom.

    ``slots`` maps slot names to working indices and gains an ``a<k>`` entry
    for every added atom.
    """
    if isinstance(action, AddAtom):
        attach = _resolve(slots, action.attach_slot)
        if action.bond_order not in (1.0, 1.5, 2.0, 3.0):
            raise InvalidResult("illegal AddAtom bond order")
        new = g.add_atom(action.element, action.formal_charge, action.num_h, action.aromatic)
        g.set_order(attach, new, action.bond_order)
        slots[f"a{sum(1 for k in slots if k[0] == 'a')}"] = new
        return new
    if isinstance(action, EditAtom):
        i = _resolve(slots, action.slot)
        g._touch()
        g.charge[i] += action.charge_delta
        g.hs[i] += action.h_delta
        if g.hs[i] < 0:
            raise InvalidResult(f"negative H count on slot {action.slot}")
        if action.aromatic_change == "s":
            g.aromatic[i] = True
        elif action.aromatic_change == "c":
            g.aromatic[i] = False
        if action.chirality_change != "n":
            g.set_chirality(i, _CODE_CHIR[action.chirality_change])
        return None
    if isinstance(action, EditBond):
        i = _resolve(slots, action.slot_pair[0])
        j = _resolve(slots, action.slot_pair[1])
        if i == j:
            raise InvalidResult("bond edit on a single atom")
        new = g.order(i, j) + action.order_delta
        if new not in LEGAL_ORDERS:
            raise InvalidResult(f"bond order {new} out of range")
        if action.order_delta:
            g.set_order(i, j, new)
        if action.stereo_change != "n":
            if new != 2.0:
                raise InvalidResult("cis/trans change on a non-double bond")
            g.set_stereo(i, j, _CODE_STEREO[action.stereo_change])
        return None
    raise TypeError(f"not an edit action: {action!r}")
