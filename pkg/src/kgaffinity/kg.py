"""Biochemical knowledge graph, triple scoring and nearest-entity queries.

Entity ids carry a type prefix.  Heads are proteins (``P:``) or ligands
(``L:``); protein heads link to Gene Ontology terms (``BP:``, ``CC:``,
``MF:``) and ligand heads to ligand properties (``MD:``, ``CF:``).

Head embeddings are never stored here: they come from the encoders through
the global projection.  Only tail entities and relations own table columns.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chem import LigandPropertySet
from .diffkernel import Tensor, ops
from .errors import ContractError, DimensionError, EntityLookupError, FormatError, TypeRuleError

PREFIX_TYPES = {
    "P": "protein",
    "L": "ligand",
    "BP": "BP",
    "CC": "CC",
    "MF": "MF",
    "MD": "MD",
    "CF": "CF",
}
HEAD_TYPES = ("protein", "ligand")
GO_TYPES = ("BP", "CC", "MF")
LP_TYPES = ("MD", "CF")
TAIL_TYPES = GO_TYPES + LP_TYPES
ALLOWED_TAILS = {"protein": GO_TYPES, "ligand": LP_TYPES}


def entity_type(entity_id: str) -> str:
    prefix, sep, rest = entity_id.partition(":")
    if not sep or not rest or prefix not in PREFIX_TYPES:
        raise ValueError(f"entity id {entity_id!r} lacks a known type prefix")
    return PREFIX_TYPES[prefix]


@dataclass(frozen=True)
class Triple:
    head: str
    relation: str
    tail: str


@dataclass
class KnowledgeGraph:
    entities: dict[str, tuple[str, str]] = field(default_factory=dict)  # id -> (name, type)
    relations: dict[str, int] = field(default_factory=dict)
    triples: list[Triple] = field(default_factory=list)
    _seen: set[Triple] = field(default_factory=set, repr=False)

    def add_entity(self, entity_id: str, name: str | None = None) -> str:
        kind = entity_type(entity_id)
        if entity_id not in self.entities:
            self.entities[entity_id] = (name or entity_id.partition(":")[2], kind)
        elif name is not None:
            self.entities[entity_id] = (name, kind)
        return kind

    def add_triple(self, head: str, relation: str, tail: str) -> Triple:
        h_kind, t_kind = entity_type(head), entity_type(tail)
        if h_kind not in HEAD_TYPES:
            raise TypeRuleError(f"head {head!r} must be a protein or ligand entity")
        if t_kind not in ALLOWED_TAILS[h_kind]:
            raise TypeRuleError(f"{h_kind} head {head!r} cannot link to {t_kind} tail {tail!r}")
        if not relation:
            raise FormatError("empty relation")
        triple = Triple(head, relation, tail)
        if triple in self._seen:
            raise FormatError(f"duplicate triple {head} {relation} {tail}")
        self.add_entity(head)
        self.add_entity(tail)
        self.relations.setdefault(relation, len(self.relations))
        self._seen.add(triple)
        self.triples.append(triple)
        return triple

    def __contains__(self, triple: Triple) -> bool:
        return triple in self._seen

    def tail_ids(self) -> list[str]:
        return [e for e, (_, kind) in self.entities.items() if kind in TAIL_TYPES]

    def relation_ids(self) -> list[str]:
        return list(self.relations)

    def triples_for_heads(self, heads) -> list[Triple]:
        heads = set(heads)
        return [t for t in self.triples if t.head in heads]

    def compatible_relations(self, head_kind: str, tail_type: str) -> list[str]:
        """Relations observed between a head kind and a tail type, in id order."""
        seen = {t.relation for t in self.triples
                if self.entities[t.head][1] == head_kind and self.entities[t.tail][1] == tail_type}
        return [r for r in self.relations if r in seen]

    def summary(self) -> dict[str, int]:
        kinds = Counter(kind for _, kind in self.entities.values())
        tails = Counter(self.entities[t.tail][1] for t in self.triples)
        out = {f"entities_{k}": kinds.get(k, 0) for k in HEAD_TYPES + TAIL_TYPES}
        out.update({f"triples_{k}": tails.get(k, 0) for k in TAIL_TYPES})
        out["triples_protein_go"] = sum(tails.get(k, 0) for k in GO_TYPES)
        out["triples_ligand_lp"] = sum(tails.get(k, 0) for k in LP_TYPES)
        out["triples_total"] = len(self.triples)
        out["relations"] = len(self.relations)
        return out


def ingest_triples(path, kg: KnowledgeGraph | None = None) -> KnowledgeGraph:
    """Read ``head<TAB>relation<TAB>tail`` lines.  Blank lines and ``#`` comments are skipped.

    An optional fourth column gives the tail entity's display name.
    """
    kg = KnowledgeGraph() if kg is None else kg
    path = str(path)
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) not in (3, 4) or not all(p.strip() for p in parts[:3]):
                raise FormatError(f"expected 3 tab-separated fields, got {len(parts)}", lineno, path)
            head, rel, tail = (p.strip() for p in parts[:3])
            try:
                kg.add_triple(head, rel, tail)
            except TypeRuleError as exc:
                raise TypeRuleError(str(exc), lineno, path) from None
            except FormatError as exc:
                raise FormatError(str(exc), lineno, path) from None
            except ValueError as exc:
                raise FormatError(str(exc), lineno, path) from None
            if len(parts) == 4 and parts[3].strip():
                kg.add_entity(tail, parts[3].strip())
    return kg


def write_triples(kg: KnowledgeGraph, path) -> None:
    lines = [f"{t.head}\t{t.relation}\t{t.tail}" for t in kg.triples]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def ligand_property_triples(ligand_id: str, props: LigandPropertySet) -> list[tuple[str, str, str]]:
    """Triples linking a ligand to its descriptor-value and chemical-feature entities."""
    head = ligand_id if ligand_id.startswith("L:") else f"L:{ligand_id}"
    out = [(head, name, f"MD:{name}={value}") for name, value in props.descriptors.items()]
    out.extend((head, "has_feature", f"CF:{tag}") for tag in sorted(props.features))
    return out


# --- scoring ---------------------------------------------------------------------------


def _check_widths(h, r, t) -> None:
    if not (h.shape == r.shape == t.shape) or h.ndim != 1:
        raise DimensionError(f"score: widths differ {h.shape}, {r.shape}, {t.shape}")


def score_rotate(h, r, t) -> Tensor:
    """‖h ∘ r − t‖ with a real element-wise product."""
    h, r, t = (x if isinstance(x, Tensor) else Tensor(x) for x in (h, r, t))
    _check_widths(h, r, t)
    return ops.l2_norm(ops.add(ops.hadamard(h, r), ops.scale(t, -1.0)))


def score_transe(h, r, t) -> Tensor:
    """‖h + r − t‖."""
    h, r, t = (x if isinstance(x, Tensor) else Tensor(x) for x in (h, r, t))
    _check_widths(h, r, t)
    return ops.l2_norm(ops.add(ops.add(h, r), ops.scale(t, -1.0)))


def score_for(head_kind: str):
    if head_kind == "protein":
        return score_rotate
    if head_kind == "ligand":
        return score_transe
    raise ContractError(f"no score function for head kind {head_kind!r}")


@dataclass
class KGEmbeddings:
    """Learnable tail-entity and relation tables (one column each)."""

    tails: Tensor
    relations: Tensor
    tail_index: dict[str, int]
    relation_index: dict[str, int]

    @classmethod
    def init(cls, kg: KnowledgeGraph, width: int, rng: np.random.Generator) -> "KGEmbeddings":
        bound = 0.5 / np.sqrt(width)
        tails = kg.tail_ids()
        rels = kg.relation_ids()
        T = rng.uniform(-bound, bound, size=(width, len(tails)))
        R = rng.uniform(-bound, bound, size=(width, len(rels)))
        return cls(
            Tensor(T, requires_grad=True, name="kg.tails"),
            Tensor(R, requires_grad=True, name="kg.relations"),
            {e: i for i, e in enumerate(tails)},
            {r: i for i, r in enumerate(rels)},
        )

    @property
    def width(self) -> int:
        return self.tails.shape[0]

    def tensors(self) -> list[Tensor]:
        return [self.tails, self.relations]

    def tail_column(self, entity_id: str) -> int:
        try:
            return self.tail_index[entity_id]
        except KeyError:
            raise EntityLookupError(f"no embedding for tail entity {entity_id!r}") from None

    def relation_column(self, relation: str) -> int:
        try:
            return self.relation_index[relation]
        except KeyError:
            raise EntityLookupError(f"no embedding for relation {relation!r}") from None

    def tail_vector(self, entity_id: str) -> Tensor:
        return ops.column(self.tails, self.tail_column(entity_id))

    def relation_vector(self, relation: str) -> Tensor:
        return ops.column(self.relations, self.relation_column(relation))


def _selector(indices: list[int], size: int) -> np.ndarray:
    S = np.zeros((size, len(indices)))
    S[indices, np.arange(len(indices))] = 1.0
    return S


def _stack_columns(vectors: list[Tensor]) -> Tensor:
    """Place vectors side by side as matrix columns."""
    n = len(vectors)
    out = None
    for j, v in enumerate(vectors):
        e = np.zeros(n)
        e[j] = 1.0
        term = ops.outer(v, e)
        out = term if out is None else ops.add(out, term)
    return out


def triple_scores(triples, heads: dict[str, Tensor], emb: KGEmbeddings) -> tuple[Tensor, list[str]]:
    """Vector of routed scores, one per triple, plus the score function used for each."""
    triples = list(triples)
    if not triples:
        raise ContractError("no triples to score")
    head_ids = list(dict.fromkeys(t.head for t in triples))
    for h in head_ids:
        if h not in heads:
            raise EntityLookupError(f"no head embedding supplied for {h!r}")
    H = _stack_columns([heads[h] for h in head_ids])
    head_pos = {h: i for i, h in enumerate(head_ids)}
    routes = []
    groups: dict[str, list[int]] = {"protein": [], "ligand": []}
    for i, t in enumerate(triples):
        kind = entity_type(t.head)
        if kind not in groups:
            raise ContractError(f"triple head {t.head!r} is not a protein or ligand")
        groups[kind].append(i)
        routes.append("rotate" if kind == "protein" else "transe")

    parts, order = [], []
    for kind, idx in groups.items():
        if not idx:
            continue
        sel = [triples[i] for i in idx]
        Hs = ops.matmul(H, _selector([head_pos[t.head] for t in sel], len(head_ids)))
        Rs = ops.matmul(emb.relations, _selector([emb.relation_column(t.relation) for t in sel],
                                                 emb.relations.shape[1]))
        Ts = ops.matmul(emb.tails, _selector([emb.tail_column(t.tail) for t in sel], emb.tails.shape[1]))
        moved = ops.hadamard(Hs, Rs) if kind == "protein" else ops.add(Hs, Rs)
        parts.append(ops.column_norms(ops.add(moved, ops.scale(Ts, -1.0))))
        order.extend(idx)
    scores = parts[0] if len(parts) == 1 else ops.concat(*parts)
    # restore the caller's triple order
    if order != sorted(order):
        P = np.zeros((len(order), len(order)))
        P[np.arange(len(order)), order] = 1.0
        scores = ops.matmul(scores, P)
    return scores, routes


def kge_loss(triples, heads: dict[str, Tensor], emb: KGEmbeddings) -> Tensor:
    """Mean routed score over the triples: rotation form for protein heads, translation for ligands."""
    scores, _ = triple_scores(triples, heads, emb)
    return ops.mean_masked(scores)


def margin_loss(triples, heads: dict[str, Tensor], emb: KGEmbeddings, rng: np.random.Generator,
                margin: float = 1.0) -> Tensor:
    """Optional hinge term: max(0, margin + score(true) - score(corrupted tail)), averaged.

    Tails are corrupted uniformly within the true tail's entity type.
    """
    triples = list(triples)
    by_type: dict[str, list[str]] = {}
    for e in emb.tail_index:
        by_type.setdefault(entity_type(e), []).append(e)
    corrupted = []
    for t in triples:
        pool = by_type[entity_type(t.tail)]
        corrupted.append(Triple(t.head, t.relation, pool[int(rng.integers(len(pool)))]))
    pos, _ = triple_scores(triples, heads, emb)
    neg, _ = triple_scores(corrupted, heads, emb)
    gap = ops.add(ops.add(pos, ops.scale(neg, -1.0)), np.full(len(triples), margin))
    return ops.mean_masked(ops.relu(gap))


# --- interpretability -----------------------------------------------------------------------


@dataclass(frozen=True)
class RankedEntity:
    rank: int
    relation: str
    entity_id: str
    name: str
    score: float

    def to_line(self) -> str:
        return f"{self.rank}\t{self.relation}\t{self.entity_id}\t{self.name}\t{self.score:.6g}"


def nearest_entities(
    kg: KnowledgeGraph,
    emb: KGEmbeddings,
    head_id: str,
    head_vector,
    tail_type: str,
    k: int,
) -> list[RankedEntity]:
    """Rank every tail of ``tail_type`` by its smallest score over compatible relations."""
    if k <= 0:
        raise ContractError(f"k must be positive, got {k}")
    if head_id not in kg.entities:
        raise EntityLookupError(f"unknown head entity {head_id!r}")
    kind = kg.entities[head_id][1]
    if kind not in HEAD_TYPES:
        raise ContractError(f"{head_id!r} is not a protein or ligand entity")
    if tail_type not in ALLOWED_TAILS[kind]:
        raise ContractError(f"{kind} heads never link to {tail_type} entities")
    h = np.asarray(head_vector.value if isinstance(head_vector, Tensor) else head_vector, dtype=np.float64)
    rels = kg.compatible_relations(kind, tail_type)
    cands = [e for e in emb.tail_index if kg.entities.get(e, (None, None))[1] == tail_type]
    if not rels or not cands:
        return []
    T = emb.tails.value[:, [emb.tail_index[e] for e in cands]]
    best = np.full(len(cands), np.inf)
    best_rel = np.zeros(len(cands), dtype=np.int64)
    for j, rel in enumerate(rels):
        r = emb.relations.value[:, emb.relation_column(rel)]
        moved = h * r if kind == "protein" else h + r
        s = np.linalg.norm(moved[:, None] - T, axis=0)
        better = s < best
        best[better] = s[better]
        best_rel[better] = j
    order = sorted(range(len(cands)), key=lambda i: (best[i], cands[i]))[:k]
    return [
        RankedEntity(n + 1, rels[best_rel[i]], cands[i], kg.entities[cands[i]][0], float(best[i]))
        for n, i in enumerate(order)
    ]


def format_ranking(rows: list[RankedEntity]) -> str:
    return "".join(row.to_line() + "\n" for row in rows)
