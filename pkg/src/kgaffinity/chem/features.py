"""74-slot integer atom features.

Layout (rows of the returned matrix):

====================  =====  ========
block                 slots  offset
====================  =====  ========
element one-hot        43      0
degree 0-10            11     43
implicit H 0-6          7     54
formal charge           1     61
radical electrons       1     62
hybridization           5     63
aromatic                1     68
total H 0-4             5     69
====================  =====  ========

Values outside a one-hot block's range leave the block all zero.
"""

from __future__ import annotations

import numpy as np

from .graph import DOUBLE, TRIPLE, MolecularGraph

ATOM_TYPES = (
    "C", "N", "O", "S", "F", "Si", "P", "Cl", "Br", "Mg", "Na", "Ca", "Fe", "As", "Al",
    "I", "B", "V", "K", "Tl", "Yb", "Sb", "Sn", "Ag", "Pd", "Co", "Se", "Ti", "Zn", "H",
    "Li", "Ge", "Cu", "Au", "Ni", "Cd", "In", "Mn", "Zr", "Cr", "Pt", "Hg", "Pb",
)
HYBRIDIZATIONS = ("sp", "sp2", "sp3", "sp3d", "sp3d2")

BLOCKS = {
    "element": (0, 43),
    "degree": (43, 11),
    "implicit_h": (54, 7),
    "charge": (61, 1),
    "radical": (62, 1),
    "hybridization": (63, 5),
    "aromatic": (68, 1),
    "total_h": (69, 5),
}
ONE_HOT_BLOCKS = ("element", "degree", "implicit_h", "hybridization", "total_h")
NUM_FEATURES = 74

_TYPE_INDEX = {s: i for i, s in enumerate(ATOM_TYPES)}


def hybridization(graph: MolecularGraph, i: int) -> str:
    atom = graph.atoms[i]
    orders = [order for _, order in graph.neighbors[i]]
    if atom.symbol in ("S", "P"):
        coordination = len(orders) + atom.total_h
        if coordination == 5:
            return "sp3d"
        if coordination >= 6:
            return "sp3d2"
    doubles = orders.count(DOUBLE)
    if TRIPLE in orders or doubles >= 2:
        return "sp"
    if doubles == 1 or atom.aromatic:
        return "sp2"
    return "sp3"


def _one_hot(col: np.ndarray, block: str, value: int) -> None:
    offset, width = BLOCKS[block]
    if 0 <= value < width:
        col[offset + value] = 1


def atom_features(graph: MolecularGraph, i: int) -> np.ndarray:
    atom = graph.atoms[i]
    col = np.zeros(NUM_FEATURES, dtype=np.int64)
    t = _TYPE_INDEX.get(atom.symbol)
    if t is not None:
        col[t] = 1
    _one_hot(col, "degree", graph.degree(i))
    _one_hot(col, "implicit_h", atom.implicit_h)
    col[BLOCKS["charge"][0]] = atom.charge
    col[BLOCKS["radical"][0]] = atom.radical
    _one_hot(col, "hybridization", HYBRIDIZATIONS.index(hybridization(graph, i)))
    col[BLOCKS["aromatic"][0]] = int(atom.aromatic)
    _one_hot(col, "total_h", atom.total_h)
    return col


def featurize_atoms(graph: MolecularGraph) -> np.ndarray:
    """Integer feature matrix of shape (74, n_atoms); column i describes atom i."""
    if not graph.atoms:
        return np.zeros((NUM_FEATURES, 0), dtype=np.int64)
    return np.stack([atom_features(graph, i) for i in range(len(graph.atoms))], axis=1)
