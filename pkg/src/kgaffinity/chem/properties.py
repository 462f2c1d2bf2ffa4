"""Ligand property descriptors and chemical-feature tags.

Counting rules:

* donor: N or O carrying at least one hydrogen
* acceptor: N or O that is not positively charged (has a lone pair)
* rotatable bond: acyclic single bond between two heavy atoms that each have
  at least one other heavy neighbour
* heteroatom: any element other than C and H
* rings: smallest set of smallest rings; a ring is aromatic when every ring
  bond is aromatic and a carbocycle when every ring atom is carbon
* stereocenter: atom with a recorded tetrahedral mark
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .graph import AROMATIC, SINGLE, MolecularGraph
from .rings import ring_bond_flags, sssr

DESCRIPTORS = (
    "num_hbd",
    "num_hba",
    "num_aromatic_carbocycles",
    "num_aromatic_heterocycles",
    "num_aliphatic_carbocycles",
    "num_aliphatic_heterocycles",
    "num_rotatable_bonds",
    "num_stereocenters",
    "num_heteroatoms",
    "num_positive_atoms",
    "num_negative_atoms",
)
FEATURE_TAGS = ("hydrophobe", "positively_charged", "negatively_charged", "donor", "acceptor", "aromatic")


@dataclass(frozen=True)
class LigandPropertySet:
    descriptors: dict[str, int] = field(default_factory=dict)
    features: frozenset[str] = frozenset()

    def to_text(self) -> str:
        lines = [f"{name}\t{self.descriptors[name]}" for name in DESCRIPTORS]
        lines.append("chemical_features\t" + ",".join(t for t in FEATURE_TAGS if t in self.features))
        return "\n".join(lines) + "\n"


def _classify_rings(graph: MolecularGraph) -> dict[str, int]:
    bond_order = {}
    for b in graph.bonds:
        bond_order[(b.a, b.b)] = bond_order[(b.b, b.a)] = b.order
    counts = dict.fromkeys(
        ("num_aromatic_carbocycles", "num_aromatic_heterocycles",
         "num_aliphatic_carbocycles", "num_aliphatic_heterocycles"), 0)
    for ring in sssr(graph):
        cycle = list(ring) + [ring[0]]
        aromatic = all(bond_order[(u, v)] == AROMATIC for u, v in zip(cycle, cycle[1:]))
        carbo = all(graph.atoms[i].symbol == "C" for i in ring)
        key = f"num_{'aromatic' if aromatic else 'aliphatic'}_{'carbocycles' if carbo else 'heterocycles'}"
        counts[key] += 1
    return counts


def extract_ligand_properties(graph: MolecularGraph) -> LigandPropertySet:
    atoms = graph.atoms
    heavy = [a.symbol != "H" for a in atoms]
    d = dict.fromkeys(DESCRIPTORS, 0)

    for atom in atoms:
        if atom.symbol in ("N", "O"):
            if atom.total_h > 0:
                d["num_hbd"] += 1
            if atom.charge <= 0:
                d["num_hba"] += 1
        if atom.symbol not in ("C", "H"):
            d["num_heteroatoms"] += 1
        if atom.charge > 0:
            d["num_positive_atoms"] += 1
        elif atom.charge < 0:
            d["num_negative_atoms"] += 1
        if atom.chirality is not None:
            d["num_stereocenters"] += 1

    heavy_degree = [sum(1 for j, _ in nb if heavy[j]) for nb in graph.neighbors]
    for bond, cyclic in zip(graph.bonds, ring_bond_flags(graph)):
        if (
            bond.order == SINGLE
            and not cyclic
            and heavy[bond.a]
            and heavy[bond.b]
            and heavy_degree[bond.a] >= 2
            and heavy_degree[bond.b] >= 2
        ):
            d["num_rotatable_bonds"] += 1
    d.update(_classify_rings(graph))

    tags = set()
    for i, atom in enumerate(atoms):
        if atom.symbol in ("Cl", "Br", "I"):
            tags.add("hydrophobe")
        elif atom.symbol == "C" and all(atoms[j].symbol in ("C", "H") for j, _ in graph.neighbors[i]):
            tags.add("hydrophobe")
        if atom.aromatic:
            tags.add("aromatic")
    if d["num_positive_atoms"]:
        tags.add("positively_charged")
    if d["num_negative_atoms"]:
        tags.add("negatively_charged")
    if d["num_hbd"]:
        tags.add("donor")
    if d["num_hba"]:
        tags.add("acceptor")
    return LigandPropertySet(d, frozenset(tags))
