from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

SINGLE, DOUBLE, TRIPLE, AROMATIC = "single", "double", "triple", "aromatic"
BOND_ORDERS = (SINGLE, DOUBLE, TRIPLE, AROMATIC)
# aromatic bonds count as 1 towards valence; the pi contribution is handled per atom
VALENCE_CONTRIBUTION = {SINGLE: 1, DOUBLE: 2, TRIPLE: 3, AROMATIC: 1}


@dataclass(frozen=True)
class Atom:
    symbol: str
    charge: int = 0
    aromatic: bool = False
    implicit_h: int = 0
    radical: int = 0
    explicit_h: int = 0
    isotope: int | None = None
    chirality: str | None = None
    atom_class: int | None = None
    bracket: bool = False

    @property
    def total_h(self) -> int:
        return self.implicit_h + self.explicit_h


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: str

    def other(self, i: int) -> int:
        return self.b if i == self.a else self.a


@dataclass(frozen=True)
class MolecularGraph:
    """Atoms and bonds of a ligand; hydrogens are implicit unless written as [H]."""

    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    smiles: str | None = field(default=None, compare=False)

    def __len__(self) -> int:
        return len(self.atoms)

    @cached_property
    def neighbors(self) -> tuple[tuple[tuple[int, str], ...], ...]:
        """Per atom: (neighbor index, bond order) pairs in bond-insertion order."""
        nb: list[list[tuple[int, str]]] = [[] for _ in self.atoms]
        for bond in self.bonds:
            nb[bond.a].append((bond.b, bond.order))
            nb[bond.b].append((bond.a, bond.order))
        return tuple(tuple(x) for x in nb)

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])

    def adjacency(self, self_loops: bool = True) -> np.ndarray:
        n = len(self.atoms)
        A = np.zeros((n, n), dtype=np.float64)
        for bond in self.bonds:
            A[bond.a, bond.b] = A[bond.b, bond.a] = 1.0
        if self_loops:
            A[np.diag_indices(n)] = 1.0
        return A

    def permute(self, perm) -> "MolecularGraph":
        """Relabel atoms so that new atom ``perm[i]`` is old atom ``i``."""
        perm = list(perm)
        if sorted(perm) != list(range(len(self.atoms))):
            raise ValueError("perm must be a permutation of atom indices")
        atoms = [None] * len(self.atoms)
        for old, new in enumerate(perm):
            atoms[new] = self.atoms[old]
        bonds = tuple(Bond(perm[b.a], perm[b.b], b.order) for b in self.bonds)
        return MolecularGraph(tuple(atoms), bonds, self.smiles)
