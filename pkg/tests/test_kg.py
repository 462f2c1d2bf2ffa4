import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import kgaffinity
from kgaffinity.chem import extract_ligand_properties, parse_smiles
from kgaffinity.diffkernel import Tensor
from kgaffinity.errors import ContractError, DimensionError, EntityLookupError, FormatError, TypeRuleError
from kgaffinity.kg import (
    KGEmbeddings,
    KnowledgeGraph,
    Triple,
    format_ranking,
    ingest_triples,
    kge_loss,
    ligand_property_triples,
    nearest_entities,
    score_rotate,
    score_transe,
    triple_scores,
)

from .conftest import analytic_gradient, central_difference, max_relative_error


def write(tmp_path, text, name="kg.tsv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def toy_kg(rng, n_prot=3, n_lig=3, width=4):
    kg = KnowledgeGraph()
    go = [f"{k}:t{i}" for k in ("BP", "MF") for i in range(3)]
    lp = [f"{k}:q{i}" for k in ("MD", "CF") for i in range(3)]
    for p in range(n_prot):
        for t in rng.choice(go, 3, replace=False):
            kg.add_triple(f"P:p{p}", "annot_" + t[:2], str(t))
    for l in range(n_lig):
        for t in rng.choice(lp, 3, replace=False):
            kg.add_triple(f"L:l{l}", "prop_" + t[:2], str(t))
    emb = KGEmbeddings.init(kg, width, rng)
    return kg, emb


# --- ingestion ---------------------------------------------------------------------------


def test_empty_file(tmp_path):
    kg = ingest_triples(write(tmp_path, ""))
    assert kg.triples == [] and kg.summary()["triples_total"] == 0


def test_go_head_is_rejected_with_line(tmp_path):
    with pytest.raises(TypeRuleError) as info:
        ingest_triples(write(tmp_path, "P:a\tr\tBP:x\nBP:x\tr\tP:y\n"))
    assert info.value.line == 2


def test_protein_cannot_link_to_ligand_property(tmp_path):
    with pytest.raises(TypeRuleError):
        ingest_triples(write(tmp_path, "P:a\tr\tMD:x\n"))


def test_malformed_and_duplicate_lines(tmp_path):
    with pytest.raises(FormatError) as info:
        ingest_triples(write(tmp_path, "P:a\tr\tBP:x\n\nP:a\tr\n"))
    assert info.value.line == 3
    with pytest.raises(FormatError) as info:
        ingest_triples(write(tmp_path, "P:a\tr\tBP:x\nP:a\tr\tBP:x\n"))
    assert info.value.line == 2
    with pytest.raises(FormatError):
        ingest_triples(write(tmp_path, "X:a\tr\tBP:x\n"))


def test_bundled_sample_matches_manifest():
    kg = ingest_triples(kgaffinity.data_path("kg_sample.tsv"))
    manifest = kgaffinity.read_data_manifest()
    summary = kg.summary()
    for key, value in summary.items():
        assert manifest[key] == value, key


def test_ligand_property_triples_round_trip():
    props = extract_ligand_properties(parse_smiles("CC(=O)Oc1ccccc1C(=O)O"))
    kg = KnowledgeGraph()
    for h, r, t in ligand_property_triples("aspirin", props):
        kg.add_triple(h, r, t)
    assert kg.summary()["triples_protein_go"] == 0
    assert all(t.head == "L:aspirin" for t in kg.triples)
    assert "CF:aromatic" in kg.entities


# --- score functions -------------------------------------------------------------------------


def test_rotate_examples():
    assert float(score_rotate([2.0, 3.0], [1.0, 1.0], [2.0, 3.0]).value) == 0.0
    assert float(score_rotate([1.0, 2.0], [2.0, 0.0], [0.0, 0.0]).value) == 2.0


def test_transe_examples():
    assert float(score_transe([1.0, 0.0], [0.0, 1.0], [1.0, 1.0]).value) == 0.0
    assert float(score_transe([0.0, 0.0], [0.0, 0.0], [3.0, 4.0]).value) == 5.0


def test_scores_match_independent_norms(rng):
    for _ in range(200):
        h, r, t = rng.normal(size=(3, 8))
        rot = math.sqrt(sum((h[i] * r[i] - t[i]) ** 2 for i in range(8)))
        tra = math.sqrt(sum((h[i] + r[i] - t[i]) ** 2 for i in range(8)))
        assert abs(float(score_rotate(h, r, t).value) - rot) <= 1e-12
        assert abs(float(score_transe(h, r, t).value) - tra) <= 1e-12


def test_width_mismatch():
    with pytest.raises(DimensionError):
        score_rotate([1.0, 2.0], [1.0], [1.0, 2.0])
    with pytest.raises(DimensionError):
        score_transe([1.0], [1.0], [1.0, 2.0])


vec = arrays(np.float64, 5, elements=st.floats(-100, 100))


@given(vec, vec, vec, vec)
@settings(max_examples=100, deadline=None)
def test_transe_translation_consistent(h, r, t, c):
    a = float(score_transe(h, r, t).value)
    b = float(score_transe(h + c, r, t + c).value)
    assert abs(a - b) <= 1e-9 * max(1.0, a)


@given(vec, vec, vec)
@settings(max_examples=100, deadline=None)
def test_scores_nonnegative_and_zero_at_solutions(h, r, t):
    assert float(score_rotate(h, r, t).value) >= 0
    assert float(score_transe(h, r, t).value) >= 0
    assert float(score_rotate(h, r, h * r).value) == 0.0
    assert float(score_transe(h, r, h + r).value) <= 1e-12 * max(1.0, np.abs(h).max(), np.abs(r).max())


# --- loss -----------------------------------------------------------------------------------


def set_columns(emb, kind, mapping):
    table = emb.tails if kind == "tail" else emb.relations
    index = emb.tail_index if kind == "tail" else emb.relation_index
    for key, v in mapping.items():
        table.value[:, index[key]] = v


def test_loss_zero_when_all_triples_satisfied(rng):
    kg = KnowledgeGraph()
    kg.add_triple("P:a", "r1", "BP:x")
    kg.add_triple("L:b", "r2", "MD:y")
    emb = KGEmbeddings.init(kg, 2, rng)
    h_p, h_d = np.array([1.0, 2.0]), np.array([-1.0, 0.5])
    r1, r2 = emb.relations.value[:, 0], emb.relations.value[:, 1]
    set_columns(emb, "tail", {"BP:x": h_p * r1, "MD:y": h_d + r2})
    loss = kge_loss(kg.triples, {"P:a": Tensor(h_p), "L:b": Tensor(h_d)}, emb)
    assert float(loss.value) <= 1e-15


def test_single_ligand_triple_is_five(rng):
    kg = KnowledgeGraph()
    kg.add_triple("L:b", "r", "CF:y")
    emb = KGEmbeddings.init(kg, 2, rng)
    emb.relations.value[:] = 0.0
    set_columns(emb, "tail", {"CF:y": [3.0, 4.0]})
    assert float(kge_loss(kg.triples, {"L:b": Tensor([0.0, 0.0])}, emb).value) == 5.0


def test_mixed_batch_hand_mean(rng):
    kg, emb = toy_kg(rng, 1, 1, width=3)
    heads = {"P:p0": Tensor(rng.normal(size=3)), "L:l0": Tensor(rng.normal(size=3))}
    batch = [t for t in kg.triples if t.head == "P:p0"][:2] + [t for t in kg.triples if t.head == "L:l0"][:2]
    norms = []
    for t in batch:
        h = heads[t.head].value
        r = emb.relations.value[:, emb.relation_index[t.relation]]
        tail = emb.tails.value[:, emb.tail_index[t.tail]]
        diff = h * r - tail if t.head.startswith("P:") else h + r - tail
        norms.append(math.sqrt(float(diff @ diff)))
    assert abs(float(kge_loss(batch, heads, emb).value) - sum(norms) / 4) <= 1e-12


def test_routing_per_triple(rng):
    kg, emb = toy_kg(rng)
    heads = {h: Tensor(rng.normal(size=4)) for h in {t.head for t in kg.triples}}
    scores, routes = triple_scores(kg.triples, heads, emb)
    for t, route, s in zip(kg.triples, routes, scores.value):
        fn = score_rotate if t.head.startswith("P:") else score_transe
        assert route == ("rotate" if t.head.startswith("P:") else "transe")
        expect = float(fn(heads[t.head].value, emb.relations.value[:, emb.relation_index[t.relation]],
                          emb.tails.value[:, emb.tail_index[t.tail]]).value)
        assert abs(s - expect) <= 1e-12


def test_union_is_size_weighted_mean(rng):
    kg, emb = toy_kg(rng)
    heads = {h: Tensor(rng.normal(size=4)) for h in {t.head for t in kg.triples}}
    for _ in range(20):
        order = rng.permutation(len(kg.triples))
        cut = int(rng.integers(1, len(order)))
        a = [kg.triples[i] for i in order[:cut]]
        b = [kg.triples[i] for i in order[cut:]]
        la, lb = float(kge_loss(a, heads, emb).value), float(kge_loss(b, heads, emb).value)
        lu = float(kge_loss(a + b, heads, emb).value)
        assert abs(lu - (len(a) * la + len(b) * lb) / (len(a) + len(b))) <= 1e-12


def test_unresolvable_entities(rng):
    kg, emb = toy_kg(rng)
    heads = {h: Tensor(rng.normal(size=4)) for h in {t.head for t in kg.triples}}
    with pytest.raises(EntityLookupError):
        kge_loss([Triple("P:p0", "annot_BP", "BP:missing")], heads, emb)
    with pytest.raises(EntityLookupError):
        kge_loss([Triple("P:p0", "nope", kg.triples[0].tail)], heads, emb)
    with pytest.raises(EntityLookupError):
        kge_loss(kg.triples, {}, emb)


def test_loss_gradients_match_finite_differences(rng):
    kg, emb = toy_kg(rng)
    heads = {h: Tensor(rng.normal(size=4), requires_grad=True) for h in sorted({t.head for t in kg.triples})}
    params = list(heads.values()) + emb.tensors()
    fn = lambda: kge_loss(kg.triples, heads, emb)  # noqa: E731
    assert max_relative_error(analytic_gradient(fn, params), central_difference(fn, params)) < 1e-4


# --- nearest entities -----------------------------------------------------------------------------


def brute_force_ranking(kg, emb, head, h, tail_type):
    kind = kg.entities[head][1]
    rels = sorted({t.relation for t in kg.triples
                   if kg.entities[t.head][1] == kind and kg.entities[t.tail][1] == tail_type})
    rows = []
    for e, (_, typ) in kg.entities.items():
        if typ != tail_type:
            continue
        t = emb.tails.value[:, emb.tail_index[e]]
        best = min(
            math.sqrt(sum(((h[i] * r[i] if kind == "protein" else h[i] + r[i]) - t[i]) ** 2 for i in range(len(h))))
            for r in (emb.relations.value[:, emb.relation_index[rel]] for rel in rels)
        )
        rows.append((best, e))
    return [e for _, e in sorted(rows)]


def test_planted_tail_ranks_first(rng):
    kg, emb = toy_kg(rng)
    h = rng.normal(size=4)
    r = emb.relations.value[:, emb.relation_index["annot_BP"]]
    emb.tails.value[:, emb.tail_index["BP:t1"]] = h * r
    rows = nearest_entities(kg, emb, "P:p0", h, "BP", 2)
    assert rows[0].entity_id == "BP:t1" and rows[0].score < 1e-12 and rows[0].relation == "annot_BP"


def test_k_larger_than_candidates(rng):
    kg, emb = toy_kg(rng)
    rows = nearest_entities(kg, emb, "L:l0", rng.normal(size=4), "CF", 100)
    cf = [e for e, (_, t) in kg.entities.items() if t == "CF"]
    assert len(rows) == len(cf)
    assert [r.score for r in rows] == sorted(r.score for r in rows)
    assert format_ranking(rows).count("\n") == len(rows)


def test_ranking_matches_exhaustive_enumeration(rng):
    for _ in range(10):
        kg, emb = toy_kg(rng)
        for head, tail_type in (("P:p1", "MF"), ("L:l2", "MD")):
            h = rng.normal(size=4)
            rows = nearest_entities(kg, emb, head, h, tail_type, 50)
            assert [r.entity_id for r in rows] == brute_force_ranking(kg, emb, head, h, tail_type)


def test_query_errors(rng):
    kg, emb = toy_kg(rng)
    with pytest.raises(EntityLookupError):
        nearest_entities(kg, emb, "P:unknown", np.zeros(4), "BP", 3)
    with pytest.raises(ContractError):
        nearest_entities(kg, emb, "P:p0", np.zeros(4), "BP", 0)
    with pytest.raises(ContractError):
        nearest_entities(kg, emb, "P:p0", np.zeros(4), "MD", 3)
