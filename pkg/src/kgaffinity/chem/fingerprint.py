"""Circular (Morgan-style) fingerprints with a stable 64-bit hash.

Bit positions are specific to this package; only distances computed between
fingerprints produced here are meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elements import ELEMENTS
from .graph import BOND_ORDERS, MolecularGraph

_MASK64 = (1 << 64) - 1
_SEED = 0x9E3779B97F4A7C15
_ATOMIC_NUMBER = {s: z for z, s in enumerate(ELEMENTS, start=1)}
_BOND_CODE = {order: k + 1 for k, order in enumerate(BOND_ORDERS)}


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def hash_ints(values) -> int:
    """Order-sensitive 64-bit hash of a sequence of (possibly negative) ints."""
    h = _SEED
    for v in values:
        h = splitmix64(h ^ (int(v) & _MASK64))
    return h


@dataclass(frozen=True)
class Fingerprint:
    bits: np.ndarray  # bool, length nbits
    radius: int

    @property
    def nbits(self) -> int:
        return int(self.bits.shape[0])

    def count(self) -> int:
        return int(self.bits.sum())

    def on_bits(self) -> np.ndarray:
        return np.flatnonzero(self.bits)


def initial_invariants(graph: MolecularGraph) -> list[int]:
    out = []
    for i, atom in enumerate(graph.atoms):
        out.append(
            hash_ints(
                (
                    _ATOMIC_NUMBER.get(atom.symbol, 0),
                    graph.degree(i),
                    atom.charge,
                    atom.total_h,
                    int(atom.aromatic),
                )
            )
        )
    return out


def morgan_identifiers(graph: MolecularGraph, radius: int) -> list[int]:
    """Every environment identifier from rounds 0..radius (with repeats)."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    ids = initial_invariants(graph)
    collected = list(ids)
    for r in range(1, radius + 1):
        new = []
        for i in range(len(graph.atoms)):
            env = sorted((_BOND_CODE[order], ids[j]) for j, order in graph.neighbors[i])
            flat = [r, ids[i]]
            for code, ident in env:
                flat.append(code)
                flat.append(ident)
            new.append(hash_ints(flat))
        ids = new
        collected.extend(ids)
    return collected


def morgan_fingerprint(graph: MolecularGraph, radius: int = 2, nbits: int = 2048) -> Fingerprint:
    """Fold all circular environment identifiers up to ``radius`` into ``nbits`` bits."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if nbits < 64:
        raise ValueError("nbits must be >= 64")
    bits = np.zeros(nbits, dtype=bool)
    for ident in morgan_identifiers(graph, radius):
        bits[ident % nbits] = True
    return Fingerprint(bits, radius)


def jaccard_distance(a: Fingerprint, b: Fingerprint) -> float:
    """1 - |a & b| / |a | b|; two empty fingerprints are at distance 0."""
    if a.nbits != b.nbits:
        raise ValueError("fingerprints differ in length")
    union = int(np.count_nonzero(a.bits | b.bits))
    if union == 0:
        return 0.0
    return 1.0 - int(np.count_nonzero(a.bits & b.bits)) / union
