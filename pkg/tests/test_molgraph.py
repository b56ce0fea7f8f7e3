from __future__ import annotations

import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from moledit.errors import (
    DuplicateMapNumber,
    ElementMismatch,
    ProductAtomMissingFromSubstrates,
    UnmappedProductAtom,
    ValenceOverflow,
)
from moledit.molgraph import (
    Atom,
    Bond,
    Molecule,
    canonical_ranks,
    connected_components,
    map_correspondence,
    molecules_isomorphic,
    renumber,
    submolecule,
    total_order,
)
from moledit.smiles import parse_molecule, parse_reaction, write_molecule

from conftest import ESTERIFICATION


def _automorphic_pairs(mol: Molecule) -> set[tuple[int, int]]:
    """Brute-force oracle: pairs (i, j) related by some graph automorphism."""
    n = len(mol)
    labels = [(a.element, a.charge, a.aromatic, mol.num_hs(i)) for i, a in enumerate(mol.atoms)]
    edges = {(b.begin, b.end): b.order for b in mol.bonds}
    edges.update({(b.end, b.begin): b.order for b in mol.bonds})
    pairs = set()
    for perm in itertools.permutations(range(n)):
        if any(labels[i] != labels[perm[i]] for i in range(n)):
            continue
        if all(edges.get((perm[i], perm[j])) == o for (i, j), o in edges.items()):
            pairs.update((i, perm[i]) for i in range(n))
    return pairs


def test_components():
    assert len(connected_components(parse_molecule("CCO"))) == 1
    comps = connected_components(parse_molecule("CC(=O)Cl.OCC"))
    assert sorted(len(c) for c in comps) == [3, 4]
    assert connected_components(Molecule([], [])) == []


def test_ranks_benzene_and_single_atom():
    assert len(set(canonical_ranks(parse_molecule("c1ccccc1")).ranks)) == 1
    assert canonical_ranks(parse_molecule("C")).n_classes == 1


@pytest.mark.parametrize("smiles", ["CCO", "CC(C)O", "c1ccncc1", "OC(=O)CC(=O)O", "C1CC1C"])
def test_ranks_match_automorphism_oracle(smiles):
    mol = parse_molecule(smiles)
    ranks = canonical_ranks(mol).ranks
    auto = _automorphic_pairs(mol)
    for i in range(len(mol)):
        for j in range(len(mol)):
            assert (ranks[i] == ranks[j]) == ((i, j) in auto), (smiles, i, j)


def test_ethanol_three_classes():
    assert canonical_ranks(parse_molecule("CCO")).n_classes == 3


def test_total_order_is_a_permutation():
    mol = parse_molecule("c1ccccc1CC(=O)O")
    order = total_order(mol)
    assert sorted(order) == list(range(len(mol)))


def test_isomorphic():
    assert molecules_isomorphic(parse_molecule("OCC"), parse_molecule("CCO"))
    assert not molecules_isomorphic(parse_molecule("CCO"), parse_molecule("COC"))


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from(["CC(=O)Oc1ccccc1C(=O)O", "N[C@@H](Cc1ccccc1)C(=O)O", "C/C=C/C(=O)Cl", "c1ccc2[nH]ccc2c1"]),
    st.randoms(use_true_random=False),
)
def test_isomorphic_under_permutation(smiles, rnd):
    mol = parse_molecule(smiles)
    order = list(range(len(mol)))
    rnd.shuffle(order)
    assert molecules_isomorphic(mol, renumber(mol, order))


def test_submolecule_keeps_stereo():
    mol = parse_molecule("N[C@@H](C)C(=O)O.Cl")
    sub = submolecule(mol, [0, 1, 2, 3, 4, 5])
    assert molecules_isomorphic(sub, parse_molecule("N[C@@H](C)C(=O)O"))


def test_valence_overflow_on_construction():
    with pytest.raises(ValenceOverflow):
        Molecule([Atom(6)] + [Atom(9)] * 5, [Bond(0, k, 1.0) for k in range(1, 6)])


def test_ester_correspondence():
    rxn = map_correspondence(parse_reaction(ESTERIFICATION))
    S = rxn.substrates
    only = rxn.substrate_only()
    assert [S.atoms[s].element for s in only] == [17]
    assert sorted(S.atoms[rxn.prod_to_sub[i]].atom_map for i in range(len(rxn.product))) == [1, 2, 3, 4, 5, 6]


def test_identity_correspondence():
    rxn = map_correspondence(parse_reaction("[CH4:1]>>[CH4:1]"))
    assert rxn.prod_to_sub == (0,) or list(rxn.prod_to_sub) == [0]


@pytest.mark.parametrize(
    "text, exc",
    [
        ("[CH3:1][OH:2]>>[CH3:1][OH:1]", DuplicateMapNumber),
        ("[CH3:1][OH:2]>>[CH3:1]O", UnmappedProductAtom),
        ("[CH3:1][OH:2]>>[CH3:1][OH:3]", ProductAtomMissingFromSubstrates),
        ("[CH3:1][OH:2]>>[CH3:1][NH2:2]", ElementMismatch),
    ],
)
def test_correspondence_errors(text, exc):
    with pytest.raises(exc):
        map_correspondence(parse_reaction(text))


def test_spectator_component_dropped():
    rxn = map_correspondence(parse_reaction("[CH3:1][OH:2].CCO>>[CH3:1][O-:2]"))
    assert len(rxn.substrates) == 2


def test_renumber_round_trip():
    rng = random.Random(0)
    mol = parse_molecule("C[C@H](N)C(=O)O/C=C/C")
    for _ in range(10):
        order = list(range(len(mol)))
        rng.shuffle(order)
        back = renumber(mol, order)
        assert write_molecule(back, canonical=True) == write_molecule(mol, canonical=True)


def test_csr_shape():
    mol = parse_molecule("CC=O")
    indptr, indices, labels = mol.csr()
    assert indptr.tolist() == [0, 1, 3, 4]
    assert sorted(np.asarray(labels).tolist()) == [2, 2, 4, 4]
