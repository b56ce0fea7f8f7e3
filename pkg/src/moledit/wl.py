"""Three-graph Weisfeiler-Lehman labels and canonical atom orders.

Every reaction atom gets a triple ``(l_C, l_S, l_P)``: its refined label in
the reaction-center graph, in the substrates and in the product, with 0
where the atom does not occur in that graph. Sorting atoms by the triple
gives the canonical order used for template extraction.

Labels are order-preserving refinement ranks (see ``_kernels``), so ties
between two atoms are broken by their nearest structural difference. That
keeps, for example, the order of leaving-group atoms independent of the
rest of the molecule they are attached to.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .diff import ReactionState
from .errors import EmptyCenter
from .molgraph import Molecule, Reaction, atom_invariant, individualize, invariant_labels
from .smiles import canonical_emission_order

_NO_ATOM = (0, 0, 0, 0, 0, 0)


class Strategy(str, enum.Enum):
    WL = "wl"
    SMILES = "smiles"
    RANDOM = "random"
    INPUT = "input"


@dataclass(frozen=True)
class ReactionCenterGraph:
    atoms: tuple[int, ...]  # substrate indices (reaction atom identities)
    edges: dict[tuple[int, int], tuple[float, float]]  # (a, b) a < b -> (order in P, order in S)


@dataclass(frozen=True)
class WLTriple:
    l_C: int
    l_S: int
    l_P: int

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.l_C, self.l_S, self.l_P)


@dataclass(frozen=True)
class CanonicalOrder:
    order: tuple[int, ...]
    strategy: Strategy
    seed: object = None


def wl_refine(
    n: int,
    edges,
    initial_labels,
    max_rounds: int | None = None,
) -> np.ndarray:
    """Refine node labels over an undirected labeled graph.

    ``edges`` is an iterable of ``(u, v, label)``. Returns 1-based labels
    whose order refines the order of ``initial_labels``.
    """
    nbrs: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for u, v, lab in edges:
        nbrs[u].append((v, lab))
        nbrs[v].append((u, lab))
    indptr = np.zeros(n + 1, dtype=np.int64)
    indices, elabels = [], []
    for u in range(n):
        indptr[u + 1] = indptr[u] + len(nbrs[u])
        for v, lab in nbrs[u]:
            indices.append(v)
            elabels.append(lab)
    rounds = max(1, n if max_rounds is None else max_rounds)
    return _kernels.refine(
        np.asarray(initial_labels, dtype=np.int64),
        indptr,
        np.asarray(indices, dtype=np.int64),
        np.asarray(elabels, dtype=np.int64),
        rounds,
    )


def molecule_labels(mol: Molecule) -> np.ndarray:
    rows = [atom_invariant(mol, i) for i in range(len(mol))]
    edges = [(b.begin, b.end, int(b.order * 2)) for b in mol.bonds]
    return wl_refine(len(mol), edges, invariant_labels(rows))


def reaction_center(rxn: Reaction) -> ReactionCenterGraph:
    state = ReactionState(rxn)
    P, S = rxn.product, rxn.substrates
    center: set[int] = set()
    for w in range(len(P)):
        s = state.ident[w]
        if state.atom_differs(s):
            center.add(s)
    pairs: set[tuple[int, int]] = set()
    for b in P.bonds:
        s1, s2 = state.ident[b.begin], state.ident[b.end]
        pairs.add((min(s1, s2), max(s1, s2)))
    for b in S.bonds:
        if state.present(b.begin) and state.present(b.end):
            pairs.add((b.begin, b.end))
    for s1, s2 in pairs:
        if state.bond_differs(s1, s2):
            center.update((s1, s2))
    for s in rxn.substrate_only():
        if any(k in state.widx for k in S.adjacency[s]):
            center.add(s)
    if not center:
        raise EmptyCenter("product and substrates are identical")
    edges: dict[tuple[int, int], tuple[float, float]] = {}
    for s1 in center:
        for s2 in S.adjacency[s1]:
            if s2 in center and s1 < s2:
                edges[(s1, s2)] = (0.0, S.bond(s1, s2).order)
    for b in P.bonds:
        s1, s2 = state.ident[b.begin], state.ident[b.end]
        if s1 in center and s2 in center:
            key = (min(s1, s2), max(s1, s2))
            edges[key] = (b.order, edges.get(key, (0.0, 0.0))[1])
    return ReactionCenterGraph(tuple(sorted(center)), edges)


def wl_triples(rxn: Reaction, center: ReactionCenterGraph | None = None) -> dict[int, WLTriple]:
    P, S = rxn.product, rxn.substrates
    if center is None:
        center = reaction_center(rxn)
    l_S = molecule_labels(S)
    l_P_prod = molecule_labels(P)
    l_P = {rxn.prod_to_sub[i]: int(l_P_prod[i]) for i in range(len(P))}

    idx = {s: k for k, s in enumerate(center.atoms)}
    rows = []
    for s in center.atoms:
        p = rxn.sub_to_prod.get(s)
        inv_p = atom_invariant(P, p) if p is not None else _NO_ATOM
        rows.append(inv_p + atom_invariant(S, s))
    edges = [
        (idx[a], idx[b], int(op * 2) * 8 + int(os * 2))
        for (a, b), (op, os) in sorted(center.edges.items())
    ]
    l_C_arr = wl_refine(len(center.atoms), edges, invariant_labels(rows))
    l_C = {s: int(l_C_arr[k]) for k, s in enumerate(center.atoms)}

    return {
        s: WLTriple(l_C.get(s, 0), int(l_S[s]), l_P.get(s, 0))
        for s in range(len(S))
    }


def canonical_atom_order(rxn: Reaction, strategy: Strategy | str = Strategy.WL, seed=None) -> CanonicalOrder:
    strategy = Strategy(strategy)
    P, S = rxn.product, rxn.substrates
    sub_only = rxn.substrate_only()
    if strategy == Strategy.WL:
        center = reaction_center(rxn)
        triples = wl_triples(rxn, center)
        in_center = set(center.atoms)
        rows = [
            triples[s].as_tuple() + (0 if s in in_center else 1, S.atoms[s].atom_map)
            for s in range(len(S))
        ]
        # remaining ties (e.g. symmetric unmapped leaving-group atoms) are
        # split by individualization over S, not by input position
        ranks = individualize(invariant_labels(rows), *S.csr())
        order = sorted(range(len(S)), key=lambda s: ranks[s])
    elif strategy == Strategy.SMILES:
        prod = [rxn.prod_to_sub[i] for i in canonical_emission_order(P)]
        keep = set(sub_only)
        order = prod + [s for s in canonical_emission_order(S) if s in keep]
    elif strategy == Strategy.RANDOM:
        order = list(range(len(S)))
        random.Random(0 if seed is None else seed).shuffle(order)
    else:
        order = list(rxn.prod_to_sub) + sub_only
    return CanonicalOrder(tuple(order), strategy, seed)
