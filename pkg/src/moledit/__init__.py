"""Molecule-edit retrosynthesis templates from atom-mapped reactions."""

from __future__ import annotations

from .actions import AddAtom, CenterSignature, EditAtom, EditBond, Template, decode_template, encode_template
from .apply import AtomSite, BondSite, RankedPrediction, apply_template, match_sites, rank_applications, top_k
from .dataset import CoverageReport, DatasetSplit, coverage, extract_all, load_split, write_report
from .molgraph import Atom, Bond, Molecule, Reaction, map_correspondence, molecules_isomorphic
from .smiles import canonical_smiles, parse_molecule, parse_reaction, write_molecule
from .template import Extraction, TemplateLibrary, extract_template, library_build, library_merge
from .wl import Strategy, canonical_atom_order, reaction_center, wl_triples

__version__ = "0.1.0"

__all__ = [
    "AddAtom", "Atom", "AtomSite", "Bond", "BondSite", "CenterSignature", "CoverageReport",
    "DatasetSplit", "EditAtom", "EditBond", "Extraction", "Molecule", "RankedPrediction",
    "Reaction", "Strategy", "Template", "TemplateLibrary", "apply_template", "canonical_atom_order",
    "canonical_smiles", "coverage", "decode_template", "encode_template", "extract_all",
    "extract_template", "library_build", "library_merge", "load_split", "map_correspondence",
    "match_sites", "molecules_isomorphic", "parse_molecule", "parse_reaction", "rank_applications",
    "reaction_center", "top_k", "wl_triples", "write_molecule", "write_report",
]
