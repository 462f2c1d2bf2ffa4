"""Regenerate the bundled fixtures in src/kgaffinity/data/.

The complexes and knowledge-graph sample are synthetic: random residue
strings, drug-like SMILES from the test corpus and random pK labels, laid
out in the same file formats as real data.  Counts are written to
``manifest.txt`` at creation time.
"""

import sys
from collections import Counter
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))
sys.path.insert(0, str(ROOT / "src"))

from molecules import DRUG_SMILES  # noqa: E402

from kgaffinity.chem import extract_ligand_properties, parse_smiles  # noqa: E402
from kgaffinity.datasets import ComplexSample, write_complexes  # noqa: E402
from kgaffinity.kg import KnowledgeGraph, ligand_property_triples, write_triples  # noqa: E402

AA = "ACDEFGHIKLMNPQRSTVWY"
OUT = ROOT / "src" / "kgaffinity" / "data"


def main(seed: int = 20240501) -> None:
    rng = np.random.default_rng(seed)
    seqs = {}
    for k in range(12):
        seqs[f"PROT{k:02d}"] = "".join(rng.choice(list(AA), int(rng.integers(60, 180))))
    # duplicated chains under new ids, so clustering has something to merge
    seqs["PROT12"] = seqs["PROT00"]
    seqs["PROT13"] = seqs["PROT05"]
    seqs["PROT14"] = seqs["PROT09"]
    ligands = {f"LIG{k:02d}": smi for k, smi in enumerate(DRUG_SMILES[:26])}

    prot_ids, lig_ids = sorted(seqs), sorted(ligands)
    pairs = set()
    while len(pairs) < 50:
        pairs.add((prot_ids[int(rng.integers(len(prot_ids)))], lig_ids[int(rng.integers(len(lig_ids)))]))
    samples = []
    for n, (p, l) in enumerate(sorted(pairs)):
        y = round(float(rng.normal(6.0, 1.5)), 2)
        samples.append(ComplexSample(f"C{n:03d}", p, seqs[p], l, ligands[l], y))
    write_complexes(samples, OUT / "complexes_50.tsv")

    kg = KnowledgeGraph()
    go_terms = {kind: [f"{kind}:GO_{kind}{k:03d}" for k in range(n)]
                for kind, n in (("BP", 14), ("CC", 8), ("MF", 10))}
    relation = {"BP": "involved_in", "CC": "located_in", "MF": "enables"}
    for p in prot_ids:
        for kind, terms in go_terms.items():
            for j in rng.choice(len(terms), int(rng.integers(1, 4)), replace=False):
                kg.add_triple(f"P:{p}", relation[kind], terms[int(j)])
    for l in lig_ids:
        props = extract_ligand_properties(parse_smiles(ligands[l]))
        for h, r, t in ligand_property_triples(l, props):
            kg.add_triple(h, r, t)
    write_triples(kg, OUT / "kg_sample.tsv")

    used_p = {s.protein_id for s in samples}
    used_l = {s.ligand_id for s in samples}
    summary = kg.summary()
    lines = [
        "# counts recorded when the fixtures were generated",
        f"complexes\t{len(samples)}",
        f"proteins\t{len(used_p)}",
        f"ligands\t{len(used_l)}",
    ]
    lines += [f"{k}\t{v}" for k, v in sorted(summary.items())]
    (OUT / "manifest.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))


if __name__ == "__main__":
    main()
