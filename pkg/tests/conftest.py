from __future__ import annotations

import csv
import random
from dataclasses import replace
from pathlib import Path

import pytest

from moledit.actions import CenterSignature, EditAtom, EditBond, Template
from moledit.molgraph import Molecule, map_correspondence, renumber
from moledit.smiles import parse_reaction, write_molecule

DATA = Path(__file__).parent / "data"
FIXTURE = DATA / "fixture_200.csv"

ESTERIFICATION = "[CH3:1][C:2](=[O:3])Cl.[OH:4][CH2:5][CH3:6]>>[CH3:1][C:2](=[O:3])[O:4][CH2:5][CH3:6]"
ESTER_KEY = (
    "2|bond|AA:el=17,chg=0,hs=0,ar=0,ord=1.0@c0;EB:dord=-1.0,st=n,dir=n@c0,c1;"
    "EA:dchg=0,dhs=1,ar=n,chir=n@c1"
)
# double Suzuki with two different boronic acids: both B atoms leave, and
# they look the same from inside the reaction center
BORON = (
    "OB(O)[c:1]1[cH:2][cH:3][c:4]([F:5])[cH:6][cH:7]1.OB(O)[c:8]1[cH:9][cH:10][cH:11][cH:12][cH:13]1."
    "Br[c:14]1[cH:15][cH:16][c:17](Br)[cH:18][cH:19]1>>"
    "[F:5][c:4]1[cH:3][cH:2][c:1]([cH:7][cH:6]1)-[c:14]1[cH:15][cH:16][c:17]([cH:18][cH:19]1)"
    "-[c:8]1[cH:9][cH:10][cH:11][cH:12][cH:13]1"
)
# cyclopropanation: two ring CH2 carbons are equivalent in the product only
CYCLOPROPYL = (
    "[CH2:1]=[CH:2][c:3]1[cH:4][cH:5][cH:6][cH:7][cH:8]1.I[CH2:9]I>>"
    "[CH2:1]1[CH2:9][CH:2]1[c:3]1[cH:4][cH:5][cH:6][cH:7][cH:8]1"
)

# C-F bond cleavage: c0 is the carbon, c1 any fluorine bonded to it
DEFLUORINATE = Template(
    2,
    (
        EditBond(-1.0, "n", "n", ("c0", "c1")),
        EditAtom(0, 1, "n", "n", "c0"),
        EditAtom(0, 1, "n", "n", "c1"),
    ),
    "atom",
    CenterSignature(((6, 0, False, 0), (9, 0, False, 0)), ((0, 1, 1.0),)),
)

# S=O to S-O(-): c0 is sulfur, c1 one of the oxo oxygens
SULFONYL = Template(
    2,
    (EditBond(-1.0, "n", "n", ("c0", "c1")), EditAtom(1, 0, "n", "n", "c0"), EditAtom(-1, 0, "n", "n", "c1")),
    "atom",
    CenterSignature(((16, 0, False, 0), (8, 0, False, 0)), ((0, 1, 2.0),)),
)


def fixture_rows() -> list[dict]:
    with open(FIXTURE, newline="") as fh:
        return list(csv.DictReader(fh))


def fixture_reactions() -> list[str]:
    return [r["reactants>reagents>production"] for r in fixture_rows()]


def permuted_reaction(text: str, rng: random.Random, relabel_maps: bool = True) -> str:
    """Same reaction written with shuffled atom order and (optionally) map numbers."""
    rxn = parse_reaction(text)
    n = max((a.atom_map for a in rxn.product.atoms), default=0)
    perm = list(range(1, n + 1))
    if relabel_maps:
        rng.shuffle(perm)
    new_map = {k + 1: perm[k] for k in range(n)}

    def shuffle(mol: Molecule) -> Molecule:
        mol = Molecule([replace(a, atom_map=new_map.get(a.atom_map, 0)) for a in mol.atoms], mol.bonds)
        order = list(range(len(mol)))
        rng.shuffle(order)
        return renumber(mol, order)

    return write_molecule(shuffle(rxn.substrates)) + ">>" + write_molecule(shuffle(rxn.product))


@pytest.fixture(scope="session")
def corpus() -> list[str]:
    return fixture_reactions()


@pytest.fixture(scope="session")
def corpus_reactions(corpus):
    return [map_correspondence(parse_reaction(t)) for t in corpus]


_CRITERIA: list[str] = []


def pytest_runtest_logreport(report):
    if report.when == "call" or report.skipped:
        _CRITERIA.extend(line for line in report.capstdout.splitlines() if line.startswith("[criterion"))


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split()[1].rstrip("]"))):
            terminalreporter.write_line(line)
