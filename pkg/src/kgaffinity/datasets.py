"""Complex datasets and the random, clustering and cold-pair split protocols."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .chem import MolecularGraph, morgan_fingerprint, parse_smiles
from .encoders import normalize_sequence, psc_features
from .errors import ContractError, FormatError, InputError, ParseError, ProtocolError

HEADER = ("id", "protein_id", "sequence", "ligand_id", "smiles", "affinity")


@dataclass(frozen=True)
class ComplexSample:
    id: str
    protein_id: str
    sequence: str
    ligand_id: str
    smiles: str
    affinity: float


@dataclass
class Dataset:
    samples: list[ComplexSample]
    graphs: dict[str, MolecularGraph] = field(default_factory=dict)  # ligand id -> graph

    def __post_init__(self):
        self.index = {s.id: i for i, s in enumerate(self.samples)}
        if len(self.index) != len(self.samples):
            raise ContractError("duplicate sample ids")
        for s in self.samples:
            if s.ligand_id not in self.graphs:
                self.graphs[s.ligand_id] = parse_smiles(s.smiles)

    def __len__(self) -> int:
        return len(self.samples)

    def __getitem__(self, sample_id: str) -> ComplexSample:
        return self.samples[self.index[sample_id]]

    def ids(self) -> list[str]:
        return [s.id for s in self.samples]

    def proteins(self) -> dict[str, str]:
        return {s.protein_id: s.sequence for s in self.samples}

    def ligands(self) -> dict[str, str]:
        return {s.ligand_id: s.smiles for s in self.samples}

    def subset(self, ids) -> list[ComplexSample]:
        return [self[i] for i in ids]


def load_complexes(path) -> Dataset:
    path = str(path)
    samples: list[ComplexSample] = []
    seen: dict[str, int] = {}
    proteins: dict[str, str] = {}
    graphs: dict[str, MolecularGraph] = {}
    smiles_of: dict[str, str] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        rows = csv.reader(fh, delimiter="\t")
        header = next(rows, None)
        if header is None or tuple(h.strip() for h in header) != HEADER:
            raise FormatError(f"header must be {' '.join(HEADER)}", 1, path)
        for lineno, row in enumerate(rows, 2):
            if not row or not any(c.strip() for c in row):
                continue
            if len(row) != len(HEADER):
                raise FormatError(f"expected {len(HEADER)} fields, got {len(row)}", lineno, path)
            sid, pid, seq, lid, smi, aff = (c.strip() for c in row)
            if not all((sid, pid, seq, lid, smi)):
                raise FormatError("empty field", lineno, path)
            if sid in seen:
                raise FormatError(f"duplicate sample id {sid!r} (first on line {seen[sid]})", lineno, path)
            try:
                y = float(aff)
            except ValueError:
                raise FormatError(f"affinity {aff!r} is not a number", lineno, path) from None
            if not math.isfinite(y):
                raise FormatError(f"affinity {aff!r} is not finite", lineno, path)
            try:
                normalize_sequence(seq)
            except InputError as exc:
                raise FormatError(f"sample {sid}: {exc}", lineno, path) from None
            if proteins.setdefault(pid, seq) != seq:
                raise FormatError(f"protein {pid!r} appears with two different sequences", lineno, path)
            if smiles_of.setdefault(lid, smi) != smi:
                raise FormatError(f"ligand {lid!r} appears with two different SMILES", lineno, path)
            if lid not in graphs:
                try:
                    graphs[lid] = parse_smiles(smi)
                except ParseError as exc:
                    raise FormatError(f"sample {sid}: unparseable SMILES: {exc}", lineno, path) from None
            seen[sid] = lineno
            samples.append(ComplexSample(sid, pid, seq, lid, smi, y))
    return Dataset(samples, graphs)


def write_complexes(samples: Sequence[ComplexSample], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(HEADER)
        for s in samples:
            w.writerow([s.id, s.protein_id, s.sequence, s.ligand_id, s.smiles, repr(s.affinity)])


# --- split containers -------------------------------------------------------------------


@dataclass
class DatasetSplit:
    """Named, disjoint sample-id sets plus the parameters that produced them."""

    partitions: dict[str, list[str]]
    protocol: str
    params: dict[str, object] = field(default_factory=dict)
    checks: dict[str, bool] = field(default_factory=dict)
    groups: dict[str, list[str]] = field(default_factory=dict)  # auxiliary domain labels

    def __getitem__(self, name: str) -> list[str]:
        return self.partitions[name]

    def get(self, name: str) -> list[str]:
        return self.partitions.get(name, [])

    def validate(self, dataset: Dataset | None = None) -> None:
        seen: dict[str, str] = {}
        for name, ids in self.partitions.items():
            for i in ids:
                if i in seen:
                    raise ContractError(f"sample {i!r} is in both {seen[i]} and {name}")
                if dataset is not None and i not in dataset.index:
                    raise ContractError(f"sample {i!r} is not in the dataset")
                seen[i] = name


def write_manifest(split: DatasetSplit, path) -> None:
    lines = [f"# protocol\t{split.protocol}"]
    lines += [f"# param\t{k}\t{v}" for k, v in sorted(split.params.items())]
    lines += [f"# check\t{k}\t{'pass' if ok else 'FAIL'}" for k, ok in sorted(split.checks.items())]
    for name, ids in split.partitions.items():
        lines += [f"{i}\t{name}" for i in ids]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path) -> DatasetSplit:
    path = str(path)
    parts: dict[str, list[str]] = {}
    protocol, params, checks = "manifest", {}, {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                fields = line[1:].strip().split("\t")
                if fields[0] == "protocol" and len(fields) == 2:
                    protocol = fields[1]
                elif fields[0] == "param" and len(fields) == 3:
                    params[fields[1]] = fields[2]
                elif fields[0] == "check" and len(fields) == 3:
                    checks[fields[1]] = fields[2] == "pass"
                continue
            fields = line.split("\t")
            if len(fields) != 2 or not all(fields):
                raise FormatError("expected sample_id<TAB>label", lineno, path)
            parts.setdefault(fields[1], []).append(fields[0])
    split = DatasetSplit(parts, protocol, params, checks)
    split.validate()
    return split


# --- random split ------------------------------------------------------------------------


def _allocate(n: int, ratios: Sequence[float]) -> list[int]:
    """Largest-remainder rounding of n * ratios."""
    exact = [n * r for r in ratios]
    sizes = [math.floor(x) for x in exact]
    rest = n - sum(sizes)
    order = sorted(range(len(ratios)), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in order[:rest]:
        sizes[i] += 1
    return sizes


_DEFAULT_NAMES = {1: ("train",), 2: ("train", "val"), 3: ("train", "val", "test")}


def random_split(dataset: Dataset, ratios: Sequence[float] = (0.9, 0.1), seed: int = 0,
                 names: Sequence[str] | None = None) -> DatasetSplit:
    if len(dataset) == 0:
        raise ContractError("empty dataset")
    ratios = [float(r) for r in ratios]
    if not ratios or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ContractError(f"ratios must be positive and sum to 1, got {ratios}")
    names = tuple(names) if names is not None else _DEFAULT_NAMES.get(len(ratios))
    if names is None or len(names) != len(ratios):
        raise ContractError("one partition name per ratio is required")
    ids = dataset.ids()
    perm = np.random.default_rng(seed).permutation(len(ids))
    sizes = _allocate(len(ids), ratios)
    parts, start = {}, 0
    for name, size in zip(names, sizes):
        parts[name] = [ids[j] for j in perm[start:start + size]]
        start += size
    return DatasetSplit(parts, "random", {"ratios": ",".join(map(str, ratios)), "seed": seed})


# --- single-linkage clustering ------------------------------------------------------------


@dataclass
class ClusterAssignment:
    labels: dict[str, int]
    gamma: float

    @property
    def count(self) -> int:
        return len(set(self.labels.values()))

    def members(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = {}
        for item, c in self.labels.items():
            out.setdefault(c, []).append(item)
        return out


def canonical_labels(items: Sequence[str], raw: Sequence[int]) -> dict[str, int]:
    """Relabel clusters densely, ordered by each cluster's smallest item id."""
    smallest: dict[int, str] = {}
    for item, c in zip(items, raw):
        if c not in smallest or item < smallest[c]:
            smallest[c] = item
    order = {c: k for k, c in enumerate(sorted(smallest, key=lambda c: smallest[c]))}
    return {item: order[c] for item, c in zip(items, raw)}


def single_linkage_clusters(items: Sequence[str], distance, gamma: float) -> ClusterAssignment:
    """Connected components of the graph linking items closer than ``gamma``.

    ``distance`` is either a precomputed symmetric matrix aligned with
    ``items`` or a callable ``distance(i, j)`` on item positions.
    """
    if gamma <= 0:
        raise ContractError(f"gamma must be positive, got {gamma}")
    items = list(items)
    n = len(items)
    if callable(distance):
        D = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                D[i, j] = D[j, i] = distance(i, j)
    else:
        D = np.asarray(distance, dtype=np.float64)
        if D.shape != (n, n):
            raise ContractError(f"distance matrix shape {D.shape} does not match {n} items")
    raw = kernels.threshold_components(D, gamma) if n else []
    return ClusterAssignment(canonical_labels(items, raw), gamma)


def protein_clusters(dataset: Dataset, gamma: float) -> ClusterAssignment:
    prots = sorted(dataset.proteins().items())
    ids = [p for p, _ in prots]
    if not ids:
        return ClusterAssignment({}, gamma)
    X = np.stack([psc_features(seq) for _, seq in prots])
    return single_linkage_clusters(ids, kernels.cosine_matrix(X), gamma)


def ligand_clusters(dataset: Dataset, gamma: float, radius: int = 2, nbits: int = 2048) -> ClusterAssignment:
    if gamma <= 0:
        raise ContractError(f"gamma must be positive, got {gamma}")
    ids = sorted(dataset.ligands())
    if not ids:
        return ClusterAssignment({}, gamma)
    bits = np.stack([morgan_fingerprint(dataset.graphs[i], radius, nbits).bits for i in ids])
    raw = kernels.jaccard_components(bits, gamma)
    return ClusterAssignment(canonical_labels(ids, raw), gamma)


def _pick_clusters(assign: ClusterAssignment, fraction: float, rng: np.random.Generator) -> set[int]:
    k = assign.count
    chosen = rng.permutation(k)[: int(round(fraction * k))]
    return {int(c) for c in chosen}


def clustering_pair_split(
    dataset: Dataset,
    gamma_protein: float = 0.001,
    gamma_ligand: float = 0.5,
    fraction: float = 0.6,
    seed: int = 0,
    target_train_fraction: float = 0.8,
    val_fraction: float = 0.1,
) -> DatasetSplit:
    """Cross-domain split on protein and ligand clusters.

    Source pairs have both their protein and ligand cluster selected, target
    pairs have neither; pairs mixing the two are dropped so that no cluster
    spans both domains.  Target pairs are split into target-train and
    target-test; target-train is pooled with source and ``val_fraction`` of
    the pool is held out for validation.
    """
    if not 0 < fraction < 1:
        raise ContractError(f"fraction must lie in (0, 1), got {fraction}")
    pc = protein_clusters(dataset, gamma_protein)
    lc = ligand_clusters(dataset, gamma_ligand)
    rng = np.random.default_rng(seed)
    sel_p = _pick_clusters(pc, fraction, rng)
    sel_l = _pick_clusters(lc, fraction, rng)

    source, target = [], []
    for s in dataset.samples:
        in_p = pc.labels[s.protein_id] in sel_p
        in_l = lc.labels[s.ligand_id] in sel_l
        if in_p and in_l:
            source.append(s.id)
        elif not in_p and not in_l:
            target.append(s.id)
    counts = (f"{pc.count} protein clusters ({len(sel_p)} selected), "
              f"{lc.count} ligand clusters ({len(sel_l)} selected)")
    if not source or not target:
        raise ProtocolError(f"empty {'source' if not source else 'target'} domain: {counts}")

    perm = rng.permutation(len(target))
    n_tt = _allocate(len(target), (target_train_fraction, 1 - target_train_fraction))[0]
    target_train = [target[j] for j in perm[:n_tt]]
    target_test = [target[j] for j in perm[n_tt:]]
    if not target_test:
        raise ProtocolError(f"empty target test set: {counts}")
    pool = source + target_train
    perm = rng.permutation(len(pool))
    n_val = _allocate(len(pool), (1 - val_fraction, val_fraction))[1]
    val = [pool[j] for j in perm[:n_val]]
    train = [pool[j] for j in perm[n_val:]]

    split = DatasetSplit(
        {"train": train, "val": val, "test": target_test},
        "cluster",
        {"gamma_protein": gamma_protein, "gamma_ligand": gamma_ligand, "fraction": fraction,
         "seed": seed, "protein_clusters": pc.count, "ligand_clusters": lc.count},
        groups={"source": source, "target_train": target_train, "target_test": target_test},
    )
    split.checks = check_cluster_split(dataset, split, pc, lc)
    return split


def check_cluster_split(dataset: Dataset, split: DatasetSplit, pc: ClusterAssignment,
                        lc: ClusterAssignment) -> dict[str, bool]:
    source = set(split.groups["source"])
    target = set(split.groups["target_train"]) | set(split.groups["target_test"])
    domain_p: dict[int, set[str]] = {}
    domain_l: dict[int, set[str]] = {}
    for s in dataset.samples:
        dom = "source" if s.id in source else "target" if s.id in target else None
        if dom is None:
            continue
        domain_p.setdefault(pc.labels[s.protein_id], set()).add(dom)
        domain_l.setdefault(lc.labels[s.ligand_id], set()).add(dom)
    return {
        "disjoint": source.isdisjoint(target),
        "protein_clusters_single_domain": all(len(d) == 1 for d in domain_p.values()),
        "ligand_clusters_single_domain": all(len(d) == 1 for d in domain_l.values()),
    }


def cold_pair_split(dataset: Dataset, seed: int = 0, fraction: float = 0.7,
                    val_share: float = 0.3) -> DatasetSplit:
    """Train on seen proteins and ligands; validate and test on pairs where both are unseen."""
    if len(dataset) == 0:
        raise ContractError("empty dataset")
    rng = np.random.default_rng(seed)
    prots = sorted(dataset.proteins())
    ligs = sorted(dataset.ligands())
    seen_p = {prots[j] for j in rng.permutation(len(prots))[: int(round(fraction * len(prots)))]}
    seen_l = {ligs[j] for j in rng.permutation(len(ligs))[: int(round(fraction * len(ligs)))]}
    train, cold = [], []
    for s in dataset.samples:
        a, b = s.protein_id in seen_p, s.ligand_id in seen_l
        if a and b:
            train.append(s.id)
        elif not a and not b:
            cold.append(s.id)
    perm = rng.permutation(len(cold))
    n_val = _allocate(len(cold), (val_share, 1 - val_share))[0] if cold else 0
    val = [cold[j] for j in perm[:n_val]]
    test = [cold[j] for j in perm[n_val:]]
    if not test:
        raise ProtocolError(
            f"cold split left no test pairs ({len(prots)} proteins, {len(ligs)} ligands, "
            f"{len(train)} train pairs)")
    split = DatasetSplit({"train": train, "val": val, "test": test}, "cold",
                         {"fraction": fraction, "val_share": val_share, "seed": seed})
    split.checks = check_cold_split(dataset, split)
    return split


def check_cold_split(dataset: Dataset, split: DatasetSplit) -> dict[str, bool]:
    train = dataset.subset(split.get("train"))
    test = dataset.subset(split.get("test"))
    return {
        "no_shared_proteins": {s.protein_id for s in train}.isdisjoint(s.protein_id for s in test),
        "no_shared_ligands": {s.ligand_id for s in train}.isdisjoint(s.ligand_id for s in test),
    }
