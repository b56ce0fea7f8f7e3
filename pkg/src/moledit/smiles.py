"""SMILES and reaction-SMILES reading and writing.

Covers the organic subset, bracket atoms (isotope, chirality, H count,
charge, atom map), branches, ring closures including ``%nn``, dots and the
bond symbols ``- = # : / \\``. Aromaticity is taken from the input as is;
nothing is kekulized or re-perceived.

Directional single bonds are turned into a cis/trans tag on the double bond
they flank at parse time and regenerated by the writer; the stored bonds
never carry a direction.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .elements import (
    AROMATIC_BRACKET,
    AROMATIC_ORGANIC,
    ATOMIC_NUMBER,
    ORGANIC_SUBSET,
    implicit_hydrogens,
    symbol,
)
from .errors import (
    BadBracketAtom,
    EmptyInput,
    MissingSeparator,
    SmilesError,
    UnbalancedParens,
    UnclosedRing,
)
from .molgraph import (
    Atom,
    Bond,
    BondStereo,
    Chirality,
    Molecule,
    Reaction,
    canonical_ranks,
    connected_components,
    individualization_leaves,
    individualize,
    permutation_parity,
)

_BOND_SYMBOLS = {"-": 1.0, "=": 2.0, "#": 3.0, ":": 1.5, "/": 1.0, "\\": 1.0}


@dataclass(frozen=True)
class ParsedReactionText:
    reactant_part: str
    reagent_part: str
    product_part: str


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.i = 0
        self.atoms: list[dict] = []
        self.bonds: dict[tuple[int, int], tuple[float, str | None]] = {}
        self.nbr_order: list[list] = []
        self.directional: dict[frozenset, tuple[int, int, str]] = {}
        self.rings: dict[int, tuple[int, str | None, int]] = {}

    def error(self, cls, msg):
        return cls(f"{msg} at position {self.i} in {self.text!r}")

    def parse(self):
        text = self.text
        prev: int | None = None
        stack: list[int | None] = []
        pending: str | None = None
        while self.i < len(text):
            ch = text[self.i]
            if ch == "(":
                if prev is None:
                    raise self.error(SmilesError, "branch without preceding atom")
                stack.append(prev)
                self.i += 1
            elif ch == ")":
                if not stack:
                    raise self.error(UnbalancedParens, "unmatched ')'")
                if pending is not None:
                    raise self.error(SmilesError, "dangling bond symbol")
                prev = stack.pop()
                self.i += 1
            elif ch == ".":
                if pending is not None:
                    raise self.error(SmilesError, "bond symbol before '.'")
                prev = None
                self.i += 1
            elif ch in _BOND_SYMBOLS:
                if pending is not None:
                    raise self.error(SmilesError, "two consecutive bond symbols")
                pending = ch
                self.i += 1
            elif ch.isdigit() or ch == "%":
                if prev is None:
                    raise self.error(SmilesError, "ring closure without atom")
                self._ring_bond(prev, self._ring_number(), pending)
                pending = None
            elif ch == "[":
                idx = self._bracket_atom()
                self._attach(prev, idx, pending)
                pending = None
                prev = idx
            else:
                idx = self._organic_atom()
                self._attach(prev, idx, pending)
                pending = None
                prev = idx
        if stack:
            raise self.error(UnbalancedParens, "unclosed '('")
        if self.rings:
            raise self.error(UnclosedRing, f"ring bond(s) {sorted(self.rings)} never closed")
        if pending is not None:
            raise self.error(SmilesError, "trailing bond symbol")
        return self._build()

    def _ring_number(self) -> int:
        text = self.text
        if text[self.i] == "%":
            digits = text[self.i + 1 : self.i + 3]
            if len(digits) != 2 or not digits.isdigit():
                raise self.error(SmilesError, "bad %nn ring number")
            self.i += 3
            return int(digits)
        self.i += 1
        return int(text[self.i - 1])

    def _new_atom(self, **props) -> int:
        self.atoms.append(props)
        self.nbr_order.append([])
        return len(self.atoms) - 1

    def _organic_atom(self) -> int:
        text = self.text
        two = text[self.i : self.i + 2]
        if two in ("Cl", "Br"):
            self.i += 2
            return self._new_atom(element=ATOMIC_NUMBER[two], aromatic=False)
        ch = text[self.i]
        if ch in ORGANIC_SUBSET:
            self.i += 1
            return self._new_atom(element=ATOMIC_NUMBER[ch], aromatic=False)
        if ch in AROMATIC_ORGANIC:
            self.i += 1
            return self._new_atom(element=ATOMIC_NUMBER[ch.upper()], aromatic=True)
        raise self.error(SmilesError, f"unexpected character {ch!r}")

    def _bracket_atom(self) -> int:
        text = self.text
        end = text.find("]", self.i)
        if end < 0:
            raise self.error(BadBracketAtom, "unterminated bracket atom")
        body = text[self.i + 1 : end]
        self.i = end + 1
        props = _parse_bracket(body)
        if props is None:
            raise BadBracketAtom(f"bad bracket atom [{body}] in {self.text!r}")
        idx = self._new_atom(**props)
        return idx

    def _attach(self, prev: int | None, idx: int, sym: str | None):
        if prev is not None:
            self._add_bond(prev, idx, sym, prev, idx)
            self.nbr_order[idx].append(prev)
            self.nbr_order[prev].append(idx)
        elif sym is not None:
            raise self.error(SmilesError, "bond symbol without preceding atom")
        if self.atoms[idx].get("hcount"):
            self.nbr_order[idx].append(-1)

    def _add_bond(self, a: int, b: int, sym: str | None, first: int, second: int):
        key = (min(a, b), max(a, b))
        if key in self.bonds or a == b:
            raise self.error(SmilesError, "duplicate bond")
        if sym is None:
            order = 1.5 if self.atoms[a]["aromatic"] and self.atoms[b]["aromatic"] else 1.0
        else:
            order = _BOND_SYMBOLS[sym]
        self.bonds[key] = (order, sym)
        if sym in ("/", "\\"):
            self.directional[frozenset(key)] = (first, second, sym)

    def _ring_bond(self, atom: int, num: int, sym: str | None):
        if num in self.rings:
            other, other_sym, slot = self.rings.pop(num)
            if sym is not None and other_sym is not None and sym != other_sym:
                if not ({sym, other_sym} == {"/", "\\"}):
                    raise self.error(SmilesError, "conflicting ring bond symbols")
            if other_sym is not None:
                self._add_bond(other, atom, other_sym, other, atom)
            else:
                self._add_bond(other, atom, sym, atom, other)
            self.nbr_order[other][slot] = atom
            self.nbr_order[atom].append(other)
        else:
            self.rings[num] = (atom, sym, len(self.nbr_order[atom]))
            self.nbr_order[atom].append(None)

    def _build(self) -> Molecule:
        if not self.atoms:
            raise EmptyInput("no atoms")
        atoms = [
            Atom(
                element=p["element"],
                isotope=p.get("isotope"),
                charge=p.get("charge", 0),
                explicit_h=p.get("hcount"),
                aromatic=p["aromatic"],
                atom_map=p.get("atom_map", 0),
            )
            for p in self.atoms
        ]
        bonds = [Bond(a, b, order) for (a, b), (order, _) in self.bonds.items()]
        mol = Molecule(atoms, bonds)
        for i, p in enumerate(self.atoms):
            tag = p.get("chirality", Chirality.NONE)
            if tag == Chirality.NONE:
                continue
            written = self.nbr_order[i]
            frame = mol.chiral_frame(i)
            if sorted(written) != sorted(frame):
                continue
            if permutation_parity(written, frame):
                tag = Chirality.CW if tag == Chirality.CCW else Chirality.CCW
            atoms[i] = replace(atoms[i], chirality=tag)
        if self.directional:
            bonds = [replace(b, stereo=self._double_bond_stereo(mol, b)) for b in mol.bonds]
        return Molecule(atoms, bonds)

    def _side(self, x: int, u: int) -> int | None:
        rec = self.directional.get(frozenset((x, u)))
        if rec is None:
            return None
        first, _, sym = rec
        up = sym == "/"
        if first == x:
            return -1 if up else 1
        return 1 if up else -1

    def _double_bond_stereo(self, mol: Molecule, b: Bond) -> BondStereo:
        if b.order != 2.0:
            return BondStereo.NONE
        refs = mol.stereo_refs(b)
        if refs is None:
            return BondStereo.NONE
        sides = []
        for u, v, ref in ((b.begin, b.end, refs[0]), (b.end, b.begin, refs[1])):
            s = None
            for x in mol.adjacency[u]:
                if x == v:
                    continue
                sx = self._side(x, u)
                if sx is not None:
                    s = sx if x == ref else -sx
                    break
            if s is None:
                return BondStereo.NONE
            sides.append(s)
        return BondStereo.CIS if sides[0] == sides[1] else BondStereo.TRANS


def _parse_bracket(body: str) -> dict | None:
    i = 0
    n = len(body)
    props: dict = {}
    j = i
    while j < n and body[j].isdigit():
        j += 1
    if j > i:
        props["isotope"] = int(body[i:j])
    i = j
    sym = None
    for cand in (body[i : i + 2], body[i : i + 1]):
        if len(cand) == 0:
            continue
        if cand in AROMATIC_BRACKET:
            sym, aromatic = cand, True
            break
        if cand in ATOMIC_NUMBER:
            sym, aromatic = cand, False
            break
    if sym is None:
        return None
    i += len(sym)
    props["element"] = ATOMIC_NUMBER[sym.capitalize()] if aromatic else ATOMIC_NUMBER[sym]
    props["aromatic"] = aromatic
    props["chirality"] = Chirality.NONE
    if body.startswith("@@", i):
        props["chirality"] = Chirality.CW
        i += 2
    elif body.startswith("@TH1", i):
        props["chirality"] = Chirality.CCW
        i += 4
    elif body.startswith("@TH2", i):
        props["chirality"] = Chirality.CW
        i += 4
    elif body.startswith("@", i):
        if i + 1 < n and body[i + 1].isalpha() and body[i + 1] != "H":
            return None
        props["chirality"] = Chirality.CCW
        i += 1
    hcount = 0
    if i < n and body[i] == "H":
        i += 1
        j = i
        while j < n and body[j].isdigit():
            j += 1
        hcount = int(body[i:j]) if j > i else 1
        i = j
    props["hcount"] = hcount
    charge = 0
    if i < n and body[i] in "+-":
        sign = 1 if body[i] == "+" else -1
        c = body[i]
        i += 1
        j = i
        while j < n and body[j].isdigit():
            j += 1
        if j > i:
            charge = sign * int(body[i:j])
            i = j
        else:
            charge = sign
            while i < n and body[i] == c:
                charge += sign
                i += 1
    props["charge"] = charge
    if i < n and body[i] == ":":
        j = i + 1
        k = j
        while k < n and body[k].isdigit():
            k += 1
        if k == j:
            return None
        props["atom_map"] = int(body[j:k])
        i = k
    if i != n:
        return None
    return props


def parse_molecule(text: str) -> Molecule:
    text = text.strip()
    if not text:
        raise EmptyInput("empty SMILES")
    try:
        return _Parser(text).parse()
    except SmilesError:
        raise
    except ValueError as exc:
        raise SmilesError(f"{exc} in {text!r}") from exc


def split_reaction(text: str) -> ParsedReactionText:
    text = text.strip().split()[0] if text.strip() else ""
    depth = 0
    seps = []
    for k, ch in enumerate(text):
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        elif ch == ">" and depth == 0:
            seps.append(k)
    if len(seps) != 2:
        raise MissingSeparator(f"expected two '>' separators in {text!r}")
    a, b = seps
    return ParsedReactionText(text[:a], text[a + 1 : b], text[b + 1 :])


def parse_reaction(text: str) -> Reaction:
    parts = split_reaction(text)
    substrates = parse_molecule(parts.reactant_part)
    if parts.reagent_part:
        parse_molecule(parts.reagent_part)
    product = parse_molecule(parts.product_part)
    return Reaction(product, substrates)


# -- writer -------------------------------------------------------------------


def _default_hs(mol: Molecule, i: int) -> int | None:
    atom = mol.atoms[i]
    total = 0.0
    n_arom = 0
    for j in mol.adjacency[i]:
        order = mol.bond(i, j).order
        if order == 1.5:
            n_arom += 1
            total += 1.0 if atom.aromatic else 1.5
        else:
            total += order
    return implicit_hydrogens(atom.element, total, n_arom, atom.aromatic)


def _atom_token(mol: Molecule, i: int, chirality: Chirality) -> str:
    atom = mol.atoms[i]
    sym = symbol(atom.element)
    hs = mol.num_hs(i)
    organic = sym in ORGANIC_SUBSET and (not atom.aromatic or sym.lower() in AROMATIC_ORGANIC)
    if (
        organic
        and atom.isotope is None
        and atom.charge == 0
        and chirality == Chirality.NONE
        and atom.atom_map == 0
        and _default_hs(mol, i) == hs
    ):
        return sym.lower() if atom.aromatic else sym
    out = ["["]
    if atom.isotope is not None:
        out.append(str(atom.isotope))
    out.append(sym.lower() if atom.aromatic else sym)
    if chirality == Chirality.CCW:
        out.append("@")
    elif chirality == Chirality.CW:
        out.append("@@")
    if hs:
        out.append("H" if hs == 1 else f"H{hs}")
    if atom.charge:
        sign = "+" if atom.charge > 0 else "-"
        out.append(sign if abs(atom.charge) == 1 else f"{sign}{abs(atom.charge)}")
    if atom.atom_map:
        out.append(f":{atom.atom_map}")
    out.append("]")
    return "".join(out)


class _Writer:
    """Depth-first writer for one connected component."""

    def __init__(self, mol: Molecule, rank: list[int], start: int, skip_stereo=frozenset()):
        self.mol = mol
        self.rank = rank
        self.start = start
        self.skip_stereo = skip_stereo
        self.lost_stereo: list[tuple[int, int]] = []

    def _plan(self):
        mol, rank = self.mol, self.rank
        self.children: dict[int, list[int]] = {}
        self.parent: dict[int, int | None] = {self.start: None}
        self.openings: dict[int, list[int]] = {}
        self.closings: dict[int, list[int]] = {}
        self.visit_order: list[int] = []
        ring_edges: set[frozenset] = set()
        # iterative DFS emulating recursion order
        stack = [(self.start, iter(sorted(mol.adjacency[self.start], key=rank.__getitem__)))]
        self.visit_order.append(self.start)
        self.children[self.start] = []
        while stack:
            v, it = stack[-1]
            for w in it:
                if w == self.parent[v]:
                    continue
                if w in self.parent:
                    e = frozenset((v, w))
                    if e not in ring_edges:
                        ring_edges.add(e)
                        self.openings.setdefault(w, []).append(v)
                        self.closings.setdefault(v, []).append(w)
                    continue
                self.parent[w] = v
                self.children[v].append(w)
                self.children[w] = []
                self.visit_order.append(w)
                stack.append((w, iter(sorted(mol.adjacency[w], key=rank.__getitem__))))
                break
            else:
                stack.pop()
        pos = {v: k for k, v in enumerate(self.visit_order)}
        for w in self.openings:
            self.openings[w].sort(key=pos.__getitem__)
        # text order of ring digits at each atom: closings first, then openings
        self.ring_partners = {
            v: self.closings.get(v, []) + self.openings.get(v, []) for v in self.visit_order
        }
        # written direction of every bond: (first, second)
        self.written: dict[frozenset, tuple[int, int]] = {}
        for v in self.visit_order:
            for c in self.children[v]:
                self.written[frozenset((v, c))] = (v, c)
            for c in self.openings.get(v, []):
                self.written[frozenset((v, c))] = (v, c)
        self.pos = pos

    def _assign_directions(self):
        mol = self.mol
        self.dirs: dict[frozenset, str] = {}

        def side(x, u):
            e = frozenset((x, u))
            sym = self.dirs.get(e)
            if sym is None:
                return None
            first = self.written[e][0]
            up = sym == "/"
            if first == x:
                return -1 if up else 1
            return 1 if up else -1

        def set_side(x, u, s):
            e = frozenset((x, u))
            first = self.written[e][0]
            if first == x:
                self.dirs[e] = "/" if s == -1 else "\\"
            else:
                self.dirs[e] = "/" if s == 1 else "\\"

        def ref_side(u, v, ref):
            # side of ref implied by already-assigned bonds; False on conflict
            found = None
            for x in mol.adjacency[u]:
                if x == v:
                    continue
                sx = side(x, u)
                if sx is None:
                    continue
                s = sx if x == ref else -sx
                if found is not None and found != s:
                    return False
                found = s
            return found

        def first_free(u, v):
            cands = [
                x
                for x in mol.adjacency[u]
                if x != v and mol.bond(u, x).order == 1.0 and frozenset((x, u)) not in self.dirs
            ]
            return min(cands, key=self.pos.__getitem__) if cands else None

        def assign(u, v, ref, s):
            x = first_free(u, v)
            if x is None:
                return False
            set_side(x, u, s if x == ref else -s)
            return True

        def default_side(u, v, ref):
            # unconstrained: the first written bond gets "/", so the choice
            # depends on the writing order only, never on atom indices
            x = first_free(u, v)
            if x is None:
                return 1
            s = -1 if self.written[frozenset((x, u))][0] == x else 1
            return s if x == ref else -s

        stereo_bonds = [
            b for b in mol.bonds
            if b.stereo != BondStereo.NONE and b.begin in self.pos and b.end in self.pos
            and (b.begin, b.end) not in self.skip_stereo
        ]
        stereo_bonds.sort(key=lambda b: min(self.pos[b.begin], self.pos[b.end]))
        for b in stereo_bonds:
            refs = mol.stereo_refs(b)
            if refs is None:
                continue
            u, v = b.begin, b.end
            if self.pos[v] < self.pos[u]:
                u, v, refs = v, u, (refs[1], refs[0])
            su = ref_side(u, v, refs[0])
            sv = ref_side(v, u, refs[1])
            if su is False or sv is False:
                self.lost_stereo.append((u, v))
                continue
            if su is None:
                su = (sv if b.stereo == BondStereo.CIS else -sv) if sv is not None else default_side(u, v, refs[0])
                if not assign(u, v, refs[0], su):
                    self.lost_stereo.append((u, v))
                    continue
            want_v = su if b.stereo == BondStereo.CIS else -su
            if sv is None:
                if not assign(v, u, refs[1], want_v):
                    self.lost_stereo.append((u, v))
            elif sv != want_v:
                self.lost_stereo.append((u, v))

    def _bond_symbol(self, a: int, b: int) -> str:
        bond = self.mol.bond(a, b)
        d = self.dirs.get(frozenset((a, b)))
        if d is not None:
            return d
        aa, ab = self.mol.atoms[a].aromatic, self.mol.atoms[b].aromatic
        if bond.order == 2.0:
            return "="
        if bond.order == 3.0:
            return "#"
        if bond.order == 1.5:
            return "" if aa and ab else ":"
        return "-" if aa and ab else ""

    def write(self) -> str:
        self._plan()
        self._assign_directions()
        out: list[str] = []
        free_digits = list(range(1, 100))
        digit_of: dict[frozenset, int] = {}

        def ring_token(d: int) -> str:
            return str(d) if d < 10 else f"%{d}"

        # explicit stack of (atom, phase) to avoid deep recursion
        todo: list = [("atom", self.start)]
        while todo:
            kind, v = todo.pop()
            if kind == "text":
                out.append(v)
                continue
            p = self.parent[v]
            if p is not None:
                out.append(self._bond_symbol(p, v))
            order = [] if p is None else [p]
            if self.mol.num_hs(v):
                order.append(-1)
            ring_text = []
            for w in self.closings.get(v, []):
                e = frozenset((v, w))
                d = digit_of.pop(e)
                free_digits.append(d)
                free_digits.sort()
                ring_text.append(ring_token(d))
                order.append(w)
            for w in self.openings.get(v, []):
                e = frozenset((v, w))
                d = free_digits.pop(0)
                digit_of[e] = d
                ring_text.append(self._bond_symbol(v, w) + ring_token(d))
                order.append(w)
            kids = self.children[v]
            order.extend(kids)
            tag = self.mol.atoms[v].chirality
            if tag != Chirality.NONE:
                frame = self.mol.chiral_frame(v)
                if sorted(order) == sorted(frame):
                    if permutation_parity(order, frame):
                        tag = Chirality.CW if tag == Chirality.CCW else Chirality.CCW
                else:
                    tag = Chirality.NONE
            out.append(_atom_token(self.mol, v, tag))
            out.extend(ring_text)
            # push in reverse: last child written without parentheses
            for k in range(len(kids) - 1, -1, -1):
                c = kids[k]
                if k == len(kids) - 1:
                    todo.append(("atom", c))
                else:
                    todo.append(("text", ")"))
                    todo.append(("atom", c))
                    todo.append(("text", "("))
        return "".join(out)


def _non_stereogenic_bonds(mol: Molecule) -> frozenset:
    """Tagged double bonds with two symmetry-equivalent substituents on one end.

    Their cis/trans tag carries no information, and writing it would make
    canonical output depend on which equivalent atom is emitted first.
    """
    tagged = [b for b in mol.bonds if b.stereo != BondStereo.NONE]
    if not tagged:
        return frozenset()
    sym = canonical_ranks(mol, include_maps=True).ranks
    out = set()
    for b in tagged:
        for x, y in ((b.begin, b.end), (b.end, b.begin)):
            others = [k for k in mol.adjacency[x] if k != y]
            if len(others) == 2 and mol.num_hs(x) == 0 and sym[others[0]] == sym[others[1]]:
                out.add((b.begin, b.end))
    return frozenset(out)


STEREO_SEARCH_LIMIT = 128


def _emit(mol: Molecule, rank, skip=frozenset()) -> list[tuple[str, list[int]]]:
    blocks = []
    seen: set[int] = set()
    for start in sorted(range(len(mol)), key=rank.__getitem__):
        if start in seen:
            continue
        w = _Writer(mol, rank, start, skip)
        blocks.append((w.write(), w.visit_order))
        seen.update(w.visit_order)
    return blocks


def _canonical_blocks(mol: Molecule, include_maps: bool) -> list[tuple[str, list[int]]]:
    """Components in canonical text order, each with its emission order.

    Without stereo tags one individualization path is enough. With tags,
    equivalent atoms can still be written in stereo-inequivalent ways (ring
    centers such as 1,4-disubstituted cyclohexanes), so every tie-break
    path is tried, up to ``STEREO_SEARCH_LIMIT``, and the smallest text wins.
    """
    skip = _non_stereogenic_bonds(mol)
    has_stereo = any(a.chirality != Chirality.NONE for a in mol.atoms) or any(
        b.stereo != BondStereo.NONE and (b.begin, b.end) not in skip for b in mol.bonds
    )
    base = np.asarray(canonical_ranks(mol, include_maps).ranks, dtype=np.int64)
    csr = mol.csr()
    if has_stereo:
        leaves = individualization_leaves(base, *csr, limit=STEREO_SEARCH_LIMIT)
    else:
        leaves = [individualize(base, *csr)]
    best = None
    for leaf in leaves:
        blocks = sorted(_emit(mol, [int(r) for r in leaf], skip), key=lambda t: t[0])
        text = ".".join(t for t, _ in blocks)
        if best is None or text < best[0]:
            best = (text, blocks)
    return best[1]


def write_molecule(mol: Molecule, canonical: bool = False) -> str:
    if len(mol) == 0:
        return ""
    if canonical:
        return ".".join(t for t, _ in _canonical_blocks(mol, include_maps=True))
    return ".".join(t for t, _ in _emit(mol, list(range(len(mol)))))


def canonical_smiles(text: str) -> str:
    return write_molecule(parse_molecule(text), canonical=True)


def canonical_emission_order(mol: Molecule) -> list[int]:
    """Atom indices in the order the canonical writer emits them (maps ignored)."""
    if len(mol) == 0:
        return []
    return [i for _, order in _canonical_blocks(mol, include_maps=False) for i in order]


def reaction_to_smiles(substrates: Molecule, product: Molecule, canonical: bool = False) -> str:
    return f"{write_molecule(substrates, canonical)}>>{write_molecule(product, canonical)}"


__all__ = [
    "ParsedReactionText",
    "canonical_emission_order",
    "canonical_smiles",
    "connected_components",
    "parse_molecule",
    "parse_reaction",
    "split_reaction",
    "write_molecule",
]
