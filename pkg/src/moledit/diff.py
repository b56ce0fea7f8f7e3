"""Working-graph versus substrate comparison, keyed by reaction atom identity.

A reaction atom's identity is its substrate index: every product atom maps
to exactly one substrate atom, and substrate-only atoms are the leaving
groups that AddAtom brings back.
"""

from __future__ import annotations

from .actions import AddAtom, EditAtom, EditBond
from .molgraph import BondStereo, Chirality, Reaction, flip, flip_stereo, permutation_parity
from .workgraph import WorkGraph, apply_action, chirality_code, stereo_code

EQUAL = "equal"
BLOCKED = "blocked"


class ReactionState:
    """P being edited toward S, plus the slot bookkeeping of one extraction."""

    def __init__(self, rxn: Reaction):
        self.rxn = rxn
        P, S = rxn.product, rxn.substrates
        self.S = S
        self.n_product = len(P)
        self.work = WorkGraph.from_molecule(P)
        self.ident: list[int] = list(rxn.prod_to_sub)
        self.widx: dict[int, int] = {s: w for w, s in enumerate(self.ident)}
        self.t_hs = [S.num_hs(s) for s in range(len(S))]
        self.t_nbrs = [set(S.adjacency[s]) for s in range(len(S))]
        self.slots: dict[str, int] = {}
        self.slot_of: dict[int, str] = {}
        self.center: list[int] = []  # working (= product) indices, in slot order
        self.actions: list = []

    # -- identity helpers ------------------------------------------------------

    def present(self, s: int) -> bool:
        return s in self.widx

    def _ids(self, seq) -> list[int]:
        return [-1 if k < 0 else self.ident[k] for k in seq]

    def _current_frame_ids(self, w: int) -> list[int]:
        return sorted(self._ids(self.work.frame(w)))

    def _target_frame(self, s: int) -> list[int]:
        return self.S.chiral_frame(s)

    # -- atoms -----------------------------------------------------------------

    def atom_prop_deltas(self, s: int) -> tuple[int, int, str]:
        w = self.widx[s]
        t = self.S.atoms[s]
        g = self.work
        dchg = t.charge - g.charge[w]
        dhs = self.t_hs[s] - g.hs[w]
        if t.aromatic == g.aromatic[w]:
            ar = "n"
        else:
            ar = "s" if t.aromatic else "c"
        return dchg, dhs, ar

    def chirality_status(self, s: int) -> str:
        """EQUAL, BLOCKED (neighborhood not final yet) or the code to set."""
        w = self.widx[s]
        t_tag = self.S.atoms[s].chirality
        w_tag, ref = self.work.effective_chirality(w)
        if t_tag == Chirality.NONE:
            return EQUAL if w_tag == Chirality.NONE else "0"
        t_frame = self._target_frame(s)
        if self._current_frame_ids(w) != sorted(t_frame):
            return BLOCKED
        if w_tag != Chirality.NONE:
            tag = w_tag if not permutation_parity(self._ids(ref), t_frame) else flip(w_tag)
            if tag == t_tag:
                return EQUAL
        rf = self._ids(self.work.rank_frame(w))
        want = t_tag if not permutation_parity(rf, t_frame) else flip(t_tag)
        return chirality_code(want)

    def atom_differs(self, s: int, strict_chirality: bool = True) -> bool:
        if self.atom_prop_deltas(s) != (0, 0, "n"):
            return True
        st = self.chirality_status(s)
        return st != EQUAL if strict_chirality else st not in (EQUAL, BLOCKED)

    # -- bonds -----------------------------------------------------------------

    def target_order(self, s1: int, s2: int) -> float:
        b = self.S.bond(s1, s2)
        return 0.0 if b is None else b.order

    def stereo_status(self, s1: int, s2: int) -> str:
        """Compare cis/trans of an existing pair assuming orders already agree."""
        S = self.S
        b = S.bond(s1, s2)
        w1, w2 = self.widx[s1], self.widx[s2]
        eff = self.work.effective_stereo(w1, w2)
        t_st = BondStereo.NONE if b is None or b.order != 2.0 else b.stereo
        t_refs = S.stereo_refs(b) if t_st != BondStereo.NONE else None
        if t_refs is None:
            # clearing a cis/trans tag is not expressible; the pair stays blocked
            return EQUAL if eff is None else BLOCKED
        t_ref = {b.begin: t_refs[0], b.end: t_refs[1]}
        for s, w, partner, wpartner in ((s1, w1, s2, w2), (s2, w2, s1, w1)):
            cur = {self.ident[k] for k in self.work.adj[w] if k != wpartner}
            if cur != self.t_nbrs[s] - {partner}:
                return BLOCKED
        if eff is not None:
            st, r1, r2 = eff
            if self.ident[r1] != t_ref[s1]:
                st = flip_stereo(st)
            if self.ident[r2] != t_ref[s2]:
                st = flip_stereo(st)
            if st == t_st:
                return EQUAL
        rr1 = self.ident[self.work.rank_ref(w1, w2)]
        rr2 = self.ident[self.work.rank_ref(w2, w1)]
        want = t_st
        if rr1 != t_ref[s1]:
            want = flip_stereo(want)
        if rr2 != t_ref[s2]:
            want = flip_stereo(want)
        return stereo_code(want)

    def bond_differs(self, s1: int, s2: int) -> bool:
        w1, w2 = self.widx[s1], self.widx[s2]
        if self.work.order(w1, w2) != self.target_order(s1, s2):
            return True
        return self.stereo_status(s1, s2) != EQUAL

    def matches(self) -> bool:
        """True when the working graph equals S atom for atom."""
        S = self.S
        if len(self.work) != len(S):
            return False
        for s in range(len(S)):
            if self.atom_differs(s):
                return False
        n_bonds = 0
        for (w1, w2), rec in self.work.bonds.items():
            s1, s2 = self.ident[w1], self.ident[w2]
            if rec[0] != self.target_order(s1, s2):
                return False
            n_bonds += 1
        if n_bonds != len(S.bonds):
            return False
        for b in S.bonds:
            if b.stereo != BondStereo.NONE or self._has_stereo(b.begin, b.end):
                if self.stereo_status(b.begin, b.end) != EQUAL:
                    return False
        for (w1, w2), rec in self.work.bonds.items():
            if rec[1] != BondStereo.NONE and self.work.effective_stereo(w1, w2) is not None:
                if self.stereo_status(self.ident[w1], self.ident[w2]) != EQUAL:
                    return False
        return True

    def _has_stereo(self, s1: int, s2: int) -> bool:
        return self.work.effective_stereo(self.widx[s1], self.widx[s2]) is not None

    # -- stepping (used by extraction) -----------------------------------------

    def slot_name(self, w: int) -> str:
        name = self.slot_of.get(w)
        if name is None:
            # only product atoms can be unnamed; added atoms are named on creation
            name = f"c{len(self.center)}"
            self.center.append(w)
            self.slot_of[w] = name
            self.slots[name] = w
        return name

    def _apply(self, action):
        apply_action(self.work, action, self.slots)
        self.actions.append(action)

    def step_atom(self, s: int, rank_of: dict[int, int]):
        """Emit and apply the atom action on identity ``s``, if one exists."""
        if not self.present(s):
            attach = [k for k in self.t_nbrs[s] if k in self.widx]
            if not attach:
                return None
            k = min(attach, key=rank_of.__getitem__)
            wk = self.widx[k]
            t = self.S.atoms[s]
            action = AddAtom(
                t.element, t.charge, self.t_hs[s], t.aromatic, self.target_order(s, k),
                self.slot_name(wk),
            )
            self._apply(action)
            new = len(self.work) - 1
            name = f"a{sum(1 for x in self.slots if x[0] == 'a') - 1}"
            self.slot_of[new] = name
            self.ident.append(s)
            self.widx[s] = new
            self.work.isotope[new] = t.isotope
            self.work.atom_map[new] = t.atom_map
            return action
        w = self.widx[s]
        dchg, dhs, ar = self.atom_prop_deltas(s)
        props = (dchg, dhs, ar) != (0, 0, "n")
        if not props:
            code = self.chirality_status(s)
            if code in (EQUAL, BLOCKED):
                return None
        name = self.slot_name(w)
        if props:
            apply_action(self.work, EditAtom(dchg, dhs, ar, "n", name), self.slots)
        code = self.chirality_status(s)
        if code in (EQUAL, BLOCKED):
            code = "n"
        else:
            apply_action(self.work, EditAtom(0, 0, "n", code, name), self.slots)
        action = EditAtom(dchg, dhs, ar, code, name)
        self.actions.append(action)
        return action

    def step_bond(self, s1: int, s2: int):
        w1, w2 = self.widx[s1], self.widx[s2]
        dord = self.target_order(s1, s2) - self.work.order(w1, w2)
        if dord == 0.0:
            code = self.stereo_status(s1, s2)
            if code in (EQUAL, BLOCKED):
                return None
        n1, n2 = self.slot_name(w1), self.slot_name(w2)
        if dord:
            apply_action(self.work, EditBond(dord, "n", "n", (n1, n2)), self.slots)
        code = "n"
        if self.target_order(s1, s2) == 2.0:
            st = self.stereo_status(s1, s2)
            if st not in (EQUAL, BLOCKED):
                code = st
                apply_action(self.work, EditBond(0.0, code, "n", (n1, n2)), self.slots)
        action = EditBond(dord, code, "n", (n1, n2))
        self.actions.append(action)
        return action
