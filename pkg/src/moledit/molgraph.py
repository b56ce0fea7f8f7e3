"""Molecular graph model: atoms, bonds, reactions and canonical ranks.

Hydrogens are never nodes. Unbracketed atoms get their H count from the
default valence rules; bracket atoms carry it explicitly.

Stereo is stored in an *index frame*:

* a chiral atom's tag is read against its neighbors sorted by atom index,
  with a single hydrogen (if any) placed first;
* a cis/trans double bond is read against the lowest-index neighbor on each
  side.

Anything that reorders atoms must go through :func:`renumber`, which
recomputes both.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .elements import implicit_hydrogens
from .errors import (
    DuplicateMapNumber,
    ElementMismatch,
    ProductAtomMissingFromSubstrates,
    UnmappedProductAtom,
    ValenceOverflow,
)


class Chirality(enum.IntEnum):
    NONE = 0
    CW = 1
    CCW = 2


class BondStereo(enum.IntEnum):
    NONE = 0
    CIS = 1
    TRANS = 2


class BondDir(enum.IntEnum):
    NONE = 0
    UP = 1
    DOWN = 2


@dataclass(frozen=True, slots=True)
class Atom:
    element: int
    isotope: int | None = None
    charge: int = 0
    explicit_h: int | None = None
    aromatic: bool = False
    chirality: Chirality = Chirality.NONE
    atom_map: int = 0


@dataclass(frozen=True, slots=True)
class Bond:
    begin: int
    end: int
    order: float
    stereo: BondStereo = BondStereo.NONE
    direction: BondDir = BondDir.NONE

    def other(self, i: int) -> int:
        return self.end if i == self.begin else self.begin


def permutation_parity(seq: Sequence, target: Sequence) -> int:
    """0 if ``seq`` is an even permutation of ``target``, else 1."""
    pos = {v: i for i, v in enumerate(target)}
    perm = [pos[v] for v in seq]
    parity = 0
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        parity ^= (length - 1) & 1
    return parity


def flip(tag: Chirality) -> Chirality:
    if tag == Chirality.CW:
        return Chirality.CCW
    if tag == Chirality.CCW:
        return Chirality.CW
    return tag


def flip_stereo(st: BondStereo) -> BondStereo:
    if st == BondStereo.CIS:
        return BondStereo.TRANS
    if st == BondStereo.TRANS:
        return BondStereo.CIS
    return st


class Molecule:
    """Immutable labeled multigraph (possibly several components)."""

    __slots__ = ("atoms", "bonds", "implicit_h", "adjacency", "_bond_index")

    def __init__(self, atoms: Iterable[Atom], bonds: Iterable[Bond]):
        self.atoms: tuple[Atom, ...] = tuple(atoms)
        n = len(self.atoms)
        norm = []
        index: dict[tuple[int, int], int] = {}
        nbrs: list[list[int]] = [[] for _ in range(n)]
        for b in bonds:
            if b.begin == b.end:
                raise ValueError("bond endpoints must differ")
            if b.begin > b.end:
                b = replace(b, begin=b.end, end=b.begin)
            key = (b.begin, b.end)
            if key in index:
                raise ValueError(f"duplicate bond {key}")
            index[key] = len(norm)
            norm.append(b)
            nbrs[b.begin].append(b.end)
            nbrs[b.end].append(b.begin)
        self.bonds: tuple[Bond, ...] = tuple(norm)
        self._bond_index = index
        self.adjacency: tuple[tuple[int, ...], ...] = tuple(tuple(sorted(x)) for x in nbrs)
        self.implicit_h: tuple[int, ...] = tuple(self._implicit_h(i) for i in range(n))

    def _implicit_h(self, i: int) -> int:
        atom = self.atoms[i]
        if atom.explicit_h is not None:
            return 0
        total = 0.0
        n_arom = 0
        for j in self.adjacency[i]:
            order = self.bond(i, j).order
            if order == 1.5:
                n_arom += 1
                total += 1.0 if atom.aromatic else 1.5
            else:
                total += order
        hs = implicit_hydrogens(atom.element, total, n_arom, atom.aromatic)
        if hs is None:
            raise ValenceOverflow(f"atom {i} exceeds its default valence")
        return hs

    def __len__(self) -> int:
        return len(self.atoms)

    def __repr__(self) -> str:
        from .smiles import write_molecule

        return f"Molecule({write_molecule(self)!r})"

    def bond(self, i: int, j: int) -> Bond | None:
        k = self._bond_index.get((i, j) if i < j else (j, i))
        return None if k is None else self.bonds[k]

    def num_hs(self, i: int) -> int:
        atom = self.atoms[i]
        return atom.explicit_h if atom.explicit_h is not None else self.implicit_h[i]

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    def chiral_frame(self, i: int) -> list[int]:
        return ([-1] if self.num_hs(i) else []) + list(self.adjacency[i])

    def stereo_refs(self, bond: Bond) -> tuple[int, int] | None:
        left = [k for k in self.adjacency[bond.begin] if k != bond.end]
        right = [k for k in self.adjacency[bond.end] if k != bond.begin]
        if not left or not right:
            return None
        return left[0], right[0]

    def map_numbers(self) -> list[int]:
        return [a.atom_map for a in self.atoms]

    def csr(self, edge_label=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = len(self.atoms)
        indptr = np.zeros(n + 1, dtype=np.int64)
        indices = []
        labels = []
        for i in range(n):
            indptr[i + 1] = indptr[i] + len(self.adjacency[i])
            for j in self.adjacency[i]:
                indices.append(j)
                b = self.bond(i, j)
                labels.append(int(b.order * 2) if edge_label is None else edge_label(b))
        return indptr, np.asarray(indices, dtype=np.int64), np.asarray(labels, dtype=np.int64)


def atom_invariant(mol: Molecule, i: int) -> tuple[int, ...]:
    """(element, charge, aromatic, degree, H count, isotope) of atom ``i``."""
    a = mol.atoms[i]
    return (a.element, a.charge, int(a.aromatic), mol.degree(i), mol.num_hs(i), a.isotope or 0)


def invariant_labels(rows: Sequence[tuple]) -> np.ndarray:
    """Dense 1-based ranks of invariant tuples in sorted tuple order."""
    uniq = sorted(set(rows))
    pos = {t: k + 1 for k, t in enumerate(uniq)}
    return np.asarray([pos[t] for t in rows], dtype=np.int64)


@dataclass(frozen=True)
class AtomRanks:
    ranks: tuple[int, ...]
    n_classes: int


def canonical_ranks(mol: Molecule, include_maps: bool = False) -> AtomRanks:
    n = len(mol)
    if n == 0:
        return AtomRanks((), 0)
    rows = [atom_invariant(mol, i) + ((mol.atoms[i].atom_map,) if include_maps else ()) for i in range(n)]
    indptr, indices, elabels = mol.csr()
    ranks = _kernels.refine(invariant_labels(rows), indptr, indices, elabels, n)
    return AtomRanks(tuple(int(r) for r in ranks), int(ranks.max()))


def individualize(ranks: np.ndarray, indptr: np.ndarray, indices: np.ndarray, elabels: np.ndarray) -> np.ndarray:
    """Split tied classes until every node has its own rank (1-based).

    Within a tied class the lowest-index node is split off first; for nodes
    that are true automorphs the choice does not affect the result up to
    isomorphism. The order of ``ranks`` is preserved.
    """
    ranks = np.asarray(ranks, dtype=np.int64)
    n = len(ranks)
    while True:
        counts = np.bincount(ranks)
        tied = np.nonzero(counts > 1)[0]
        if tied.size == 0:
            return ranks
        cls = tied[0]
        pick = int(np.nonzero(ranks == cls)[0][0])
        labels = ranks * 2
        labels[pick] -= 1
        ranks = _kernels.refine(labels, indptr, indices, elabels, n)


def individualization_leaves(
    ranks: np.ndarray, indptr: np.ndarray, indices: np.ndarray, elabels: np.ndarray, limit: int = 128
) -> list[np.ndarray]:
    """Discrete rankings reachable by splitting every tied class at every member.

    Branching stops once ``limit`` leaves exist; later ties then take the
    lowest-index member only, as ``individualize`` does.
    """
    n = len(ranks)
    leaves: list[np.ndarray] = []
    stack = [np.asarray(ranks, dtype=np.int64)]
    while stack:
        cur = stack.pop()
        counts = np.bincount(cur)
        tied = np.nonzero(counts > 1)[0]
        if tied.size == 0:
            leaves.append(cur)
            continue
        members = np.nonzero(cur == tied[0])[0]
        if len(leaves) + len(stack) + len(members) > limit:
            members = members[:1]
        for pick in members[::-1]:
            labels = cur * 2
            labels[int(pick)] -= 1
            stack.append(_kernels.refine(labels, indptr, indices, elabels, n))
    return leaves


def total_order(mol: Molecule, include_maps: bool = True) -> list[int]:
    """Discrete canonical ranks (0-based) by individualize-and-refine."""
    if len(mol) == 0:
        return []
    ranks = np.asarray(canonical_ranks(mol, include_maps).ranks, dtype=np.int64)
    return [int(r) - 1 for r in individualize(ranks, *mol.csr())]


def connected_components(mol: Molecule) -> list[Molecule]:
    n = len(mol)
    comp = [-1] * n
    groups: list[list[int]] = []
    for start in range(n):
        if comp[start] >= 0:
            continue
        comp[start] = len(groups)
        stack, members = [start], []
        while stack:
            v = stack.pop()
            members.append(v)
            for w in mol.adjacency[v]:
                if comp[w] < 0:
                    comp[w] = comp[start]
                    stack.append(w)
        groups.append(sorted(members))
    return [submolecule(mol, g) for g in groups]


def submolecule(mol: Molecule, keep: Sequence[int]) -> Molecule:
    """Induced subgraph on ``keep`` (must be ascending), stereo frames preserved."""
    pos = {old: new for new, old in enumerate(keep)}
    atoms = [mol.atoms[i] for i in keep]
    bonds = [
        replace(b, begin=pos[b.begin], end=pos[b.end])
        for b in mol.bonds
        if b.begin in pos and b.end in pos
    ]
    return Molecule(atoms, bonds)


def renumber(mol: Molecule, order: Sequence[int]) -> Molecule:
    """Reorder atoms so new atom ``k`` is old atom ``order[k]``."""
    pos = {old: new for new, old in enumerate(order)}
    bonds = [replace(b, begin=pos[b.begin], end=pos[b.end]) for b in mol.bonds]
    atoms = list(mol.atoms)
    atoms = [atoms[i] for i in order]
    out = Molecule(atoms, bonds)
    fixed_atoms = list(out.atoms)
    for new, old in enumerate(order):
        tag = mol.atoms[old].chirality
        if tag == Chirality.NONE:
            continue
        mapped = [-1 if k < 0 else pos[k] for k in mol.chiral_frame(old)]
        if permutation_parity(mapped, out.chiral_frame(new)):
            fixed_atoms[new] = replace(fixed_atoms[new], chirality=flip(tag))
    fixed_bonds = []
    for b in out.bonds:
        if b.stereo != BondStereo.NONE:
            ob = mol.bond(order[b.begin], order[b.end])
            old_refs = mol.stereo_refs(ob)
            new_refs = out.stereo_refs(b)
            st = b.stereo
            if old_refs is None or new_refs is None:
                st = BondStereo.NONE
            else:
                # old refs are keyed to (ob.begin, ob.end); align with new endpoints
                ref_of = {pos[ob.begin]: pos[old_refs[0]], pos[ob.end]: pos[old_refs[1]]}
                if ref_of[b.begin] != new_refs[0]:
                    st = flip_stereo(st)
                if ref_of[b.end] != new_refs[1]:
                    st = flip_stereo(st)
            b = replace(b, stereo=st)
        fixed_bonds.append(b)
    return Molecule(fixed_atoms, fixed_bonds)


def strip_maps(mol: Molecule) -> Molecule:
    if not any(a.atom_map for a in mol.atoms):
        return mol
    return Molecule([replace(a, atom_map=0) for a in mol.atoms], mol.bonds)


def molecules_isomorphic(a: Molecule, b: Molecule) -> bool:
    from .smiles import write_molecule

    if len(a) != len(b) or len(a.bonds) != len(b.bonds):
        return False
    return write_molecule(strip_maps(a), canonical=True) == write_molecule(strip_maps(b), canonical=True)


@dataclass(frozen=True)
class Reaction:
    """Product ``P`` and substrates ``S`` linked by shared atom maps.

    ``prod_to_sub[i]`` is the substrate index of product atom ``i``; it is
    only filled in by :func:`map_correspondence`.
    """

    product: Molecule
    substrates: Molecule
    prod_to_sub: tuple[int, ...] = ()
    sub_to_prod: dict[int, int] = field(default_factory=dict)
    validated: bool = False

    def substrate_only(self) -> list[int]:
        return [i for i in range(len(self.substrates)) if i not in self.sub_to_prod]


def _drop_spectator_components(S: Molecule, product_maps: set[int]) -> Molecule:
    n = len(S)
    comp = [-1] * n
    keep: list[int] = []
    for start in range(n):
        if comp[start] >= 0:
            continue
        comp[start] = start
        stack, members = [start], []
        while stack:
            v = stack.pop()
            members.append(v)
            for w in S.adjacency[v]:
                if comp[w] < 0:
                    comp[w] = start
                    stack.append(w)
        if any(S.atoms[v].atom_map in product_maps for v in members):
            keep.extend(members)
    if len(keep) == n:
        return S
    return submolecule(S, sorted(keep))


def map_correspondence(rxn: Reaction) -> Reaction:
    """Validate atom maps and link product atoms to substrate atoms.

    Reactant molecules that contribute no atom to the product are dropped
    from ``S`` first; they can never be reached by edit actions.
    """
    P = rxn.product
    product_maps = {a.atom_map for a in P.atoms if a.atom_map}
    S = _drop_spectator_components(rxn.substrates, product_maps)
    sub_by_map: dict[int, int] = {}
    for i, a in enumerate(S.atoms):
        if a.atom_map:
            if a.atom_map in sub_by_map:
                raise DuplicateMapNumber(f"map {a.atom_map} repeated among substrates")
            sub_by_map[a.atom_map] = i
    seen: set[int] = set()
    prod_to_sub = []
    for i, a in enumerate(P.atoms):
        if a.atom_map == 0:
            raise UnmappedProductAtom(f"product atom {i} has no atom map")
        if a.atom_map in seen:
            raise DuplicateMapNumber(f"map {a.atom_map} repeated in product")
        seen.add(a.atom_map)
        j = sub_by_map.get(a.atom_map)
        if j is None:
            raise ProductAtomMissingFromSubstrates(f"map {a.atom_map} not found in substrates")
        s = S.atoms[j]
        if s.element != a.element or (s.isotope or 0) != (a.isotope or 0):
            raise ElementMismatch(f"map {a.atom_map}: element/isotope differ")
        prod_to_sub.append(j)
    sub_to_prod = {j: i for i, j in enumerate(prod_to_sub)}
    return Reaction(P, S, tuple(prod_to_sub), sub_to_prod, True)
