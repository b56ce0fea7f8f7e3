from __future__ import annotations

import random

import pytest

from moledit.actions import AddAtom, EditAtom, EditBond, decode_template, encode_template
from moledit.apply import apply_template
from moledit.errors import EmptyCenter, MalformedKey, NonTerminating
from moledit.molgraph import map_correspondence, molecules_isomorphic
from moledit.smiles import parse_reaction
from moledit.template import (
    TemplateLibrary,
    diff_atom_action,
    diff_bond_action,
    extract_template,
    library_build,
    library_merge,
)
from moledit.wl import canonical_atom_order

from conftest import ESTERIFICATION, ESTER_KEY, permuted_reaction

# hand-written reactions that exercise chirality and double-bond geometry
STEREO = {
    "mitsunobu": "[OH:1][C@@H:2]([CH3:3])[CH2:4][c:5]1[cH:6][cH:7][cH:8][cH:9][cH:10]1.[OH:11][C:12](=[O:13])[c:14]1[cH:15][cH:16][cH:17][cH:18][cH:19]1>>[O:11]([C@H:2]([CH3:3])[CH2:4][c:5]1[cH:6][cH:7][cH:8][cH:9][cH:10]1)[C:12](=[O:13])[c:14]1[cH:15][cH:16][cH:17][cH:18][cH:19]1",
    "isomerize": "[CH3:1]/[CH:2]=[CH:3]/[C:4](=[O:5])[OH:6]>>[CH3:1]/[CH:2]=[CH:3]\\[C:4](=[O:5])[OH:6]",
    "semired": "[CH3:1][C:2]#[C:3][CH2:4][OH:5]>>[CH3:1]/[CH:2]=[CH:3]\\[CH2:4][OH:5]",
    "epimer": "[NH2:1][C@@H:2]([CH3:3])[C:4](=[O:5])[OH:6]>>[NH2:1][C@H:2]([CH3:3])[C:4](=[O:5])[OH:6]",
    "wittig": "[O:1]=[CH:2][c:3]1[cH:4][cH:5][cH:6][cH:7][cH:8]1.c1ccc(cc1)P(c1ccccc1)(c1ccccc1)=[CH:9][C:10](=[O:11])[O:12][CH3:13]>>[c:3]1([cH:4][cH:5][cH:6][cH:7][cH:8]1)/[CH:2]=[CH:9]/[C:10](=[O:11])[O:12][CH3:13]",
    "asym_red": "[CH3:1][C:2](=[O:3])[CH2:4][CH3:5]>>[CH3:1][C@@H:2]([OH:3])[CH2:4][CH3:5]",
    "ring_chiral": "[CH3:7][C:1]1([CH3:8])[CH2:2][CH2:3][C:4](=[O:9])[CH2:5][CH2:6]1>>[CH3:7][C:1]1([CH3:8])[CH2:2][CH2:3][C@H:4]([OH:9])[CH2:5][CH2:6]1",
    "chiral_sub": "Cl[CH2:1][c:2]1[cH:3][cH:4][cH:5][cH:6][cH:7]1.[NH2:8][C@@H:9]([CH3:10])[C:11](=[O:12])[O:13][CH3:14]>>[CH2:1]([c:2]1[cH:3][cH:4][cH:5][cH:6][cH:7]1)[NH:8][C@@H:9]([CH3:10])[C:11](=[O:12])[O:13][CH3:14]",
    "cis_to_trans_ring": "[CH3:1][C@H:2]1[CH2:3][CH2:4][C@@H:5]([OH:7])[CH2:6][CH2:8]1>>[CH3:1][C@H:2]1[CH2:3][CH2:4][C@H:5]([OH:7])[CH2:6][CH2:8]1",
}


def _rxn(text):
    return map_correspondence(parse_reaction(text))


def test_ester_key_and_actions():
    ex = extract_template(_rxn(ESTERIFICATION))
    assert ex.key == ESTER_KEY
    t = ex.template
    assert t.n_center == 2 and t.kind == "bond"
    assert [type(a) for a in t.actions] == [AddAtom, EditBond, EditAtom]
    P = _rxn(ESTERIFICATION).product
    assert sorted(P.atoms[i].atom_map for i in ex.center_atoms) == [2, 4]


def test_ester_diff_actions():
    rxn = _rxn(ESTERIFICATION)
    S = rxn.substrates
    by_map = {a.atom_map: s for s, a in enumerate(S.atoms)}
    cl = next(s for s, a in enumerate(S.atoms) if a.element == 17)
    add = diff_atom_action(rxn, cl)
    assert add == AddAtom(17, 0, 0, False, 1.0, "c0")
    edit = diff_atom_action(rxn, by_map[4])
    assert isinstance(edit, EditAtom) and edit.h_delta == 1 and edit.charge_delta == 0
    assert diff_atom_action(rxn, by_map[1]) is None
    assert diff_bond_action(rxn, by_map[2], by_map[4]).order_delta == -1.0
    assert diff_bond_action(rxn, by_map[1], by_map[2]) is None
    assert diff_bond_action(rxn, by_map[2], cl) is None  # Cl is absent from P


def test_aromatization_bond_delta():
    rxn = _rxn("[CH2:1]1[CH2:2][CH2:3][CH2:4][CH2:5][CH2:6]1>>[cH:1]1[cH:2][cH:3][cH:4][cH:5][cH:6]1")
    assert diff_bond_action(rxn, 0, 1).order_delta == -0.5
    back = _rxn("[cH:1]1[cH:2][cH:3][cH:4][cH:5][cH:6]1>>[CH2:1]1[CH2:2][CH2:3][CH2:4][CH2:5][CH2:6]1")
    assert diff_bond_action(back, 0, 1).order_delta == 0.5


def test_identity_reaction_has_no_template():
    with pytest.raises(EmptyCenter):
        extract_template(_rxn("[CH3:1][OH:2]>>[CH3:1][OH:2]"))


def test_unclearable_stereo_does_not_terminate():
    # P gains a trans tag that S lacks; no action can remove it
    with pytest.raises(NonTerminating):
        extract_template(_rxn("[CH3:1][CH:2]=[CH:3][CH3:4]>>[CH3:1]/[CH:2]=[CH:3]/[CH3:4]"))


def test_leaving_group_isotope_is_not_recorded():
    rxn = _rxn("[CH3:1][C:2](=[O:3])[37Cl].[OH:4][CH3:5]>>[CH3:1][C:2](=[O:3])[O:4][CH3:5]")
    ex = extract_template(rxn)
    out = apply_template(rxn.product, ex.template, ex.assignment)
    assert molecules_isomorphic(out, parse_reaction("CC(=O)Cl.OC>>C").substrates)
    assert not molecules_isomorphic(out, rxn.substrates)


def test_key_round_trip_on_corpus(corpus_reactions):
    for rxn in corpus_reactions:
        key = extract_template(rxn).key
        assert encode_template(decode_template(key)) == key


@pytest.mark.parametrize(
    "key",
    [
        "0|atom|",
        "",
        "2|bond",
        "2|ring|EA:dchg=0,dhs=1,ar=n,chir=n@c0",
        "2|bond|EB:dord=-1,st=n,dir=n@c0,c1",
        "1|atom|EA:dchg=0,dhs=1,ar=q,chir=n@c0",
        "1|atom|EA:dchg=0,dhs=1,ar=n,chir=n@c3",
    ],
)
def test_malformed_keys(key):
    with pytest.raises(MalformedKey):
        decode_template(key)


def test_replay_reproduces_substrates(corpus_reactions):
    for rxn in corpus_reactions:
        ex = extract_template(rxn)
        out = apply_template(rxn.product, decode_template(ex.key), ex.assignment)
        assert molecules_isomorphic(out, rxn.substrates)


@pytest.mark.parametrize("strategy", ["random", "smiles", "input"])
def test_other_strategies_replay(corpus_reactions, strategy):
    for rxn in corpus_reactions[::5]:
        ex = extract_template(rxn, canonical_atom_order(rxn, strategy, 7))
        out = apply_template(rxn.product, ex.template, ex.assignment)
        assert molecules_isomorphic(out, rxn.substrates)


@pytest.mark.parametrize("name", sorted(STEREO))
def test_stereo_reactions(name):
    text = STEREO[name]
    rxn = _rxn(text)
    ex = extract_template(rxn)
    out = apply_template(rxn.product, decode_template(ex.key), ex.assignment)
    assert molecules_isomorphic(out, rxn.substrates)
    rng = random.Random(5)
    for _ in range(10):
        assert extract_template(_rxn(permuted_reaction(text, rng))).key == ex.key


def test_epimerization_flips_chirality_only():
    t = extract_template(_rxn(STEREO["epimer"])).template
    assert t.n_center == 1 and t.kind == "atom"
    (a,) = t.actions
    assert isinstance(a, EditAtom) and a.chirality_change in "+-"


def test_library_merge_and_dedupe(corpus_reactions):
    results = [(k, f"r{k}", extract_template(r).template) for k, r in enumerate(corpus_reactions)]
    lib = library_build(results).seal()
    assert sum(e.count for e in lib.entries.values()) == len(results)
    assert len(lib) == len({t.key for _, _, t in results})
    empty = TemplateLibrary()
    assert library_merge(lib, empty).seal().to_jsonl() == lib.to_jsonl()
    half = len(results) // 2
    a = library_build(results[:half])
    b = library_build(results[half:])
    assert library_merge(a, b).seal().to_jsonl() == library_merge(b, a).seal().to_jsonl() == lib.to_jsonl()


def test_library_ids_and_examples(corpus_reactions):
    results = [(k, f"r{k}", extract_template(r).template) for k, r in enumerate(corpus_reactions)]
    lib = library_build(reversed(results)).seal()
    keys = sorted(lib.entries)
    assert [lib.entries[k].id for k in keys] == list(range(len(keys)))
    first = {}
    for pos, rid, t in results:
        first.setdefault(t.key, rid)
    assert {k: e.example for k, e in lib.entries.items()} == first
    assert lib.by_id(0).template.key == keys[0]


def test_jsonl_round_trip(tmp_path, corpus_reactions):
    results = [(k, f"r{k}", extract_template(r).template) for k, r in enumerate(corpus_reactions)]
    lib = library_build(results).seal()
    path = tmp_path / "lib.jsonl"
    lib.write(path)
    again = TemplateLibrary.read(path)
    assert again.to_jsonl() == lib.to_jsonl()
    assert path.read_bytes().endswith(b"\n") and b"\r" not in path.read_bytes()
