"""SMILES parsing, atom featurization, fingerprints and ligand properties."""

from .features import ATOM_TYPES, NUM_FEATURES, featurize_atoms
from .fingerprint import Fingerprint, jaccard_distance, morgan_fingerprint
from .graph import AROMATIC, DOUBLE, SINGLE, TRIPLE, Atom, Bond, MolecularGraph
from .properties import DESCRIPTORS, FEATURE_TAGS, LigandPropertySet, extract_ligand_properties
from .rings import sssr
from .smiles import parse_smiles

__all__ = [
    "AROMATIC",
    "ATOM_TYPES",
    "Atom",
    "Bond",
    "DESCRIPTORS",
    "DOUBLE",
    "FEATURE_TAGS",
    "Fingerprint",
    "LigandPropertySet",
    "MolecularGraph",
    "NUM_FEATURES",
    "SINGLE",
    "TRIPLE",
    "extract_ligand_properties",
    "featurize_atoms",
    "jaccard_distance",
    "morgan_fingerprint",
    "parse_smiles",
    "sssr",
]
