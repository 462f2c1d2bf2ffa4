"""Joint training loop, evaluation, prediction and explanation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ..datasets import ComplexSample, Dataset, DatasetSplit
from ..diffkernel import Adam, Tape, Tensor, ops
from ..errors import ContractError, DivergenceError
from ..fusion import AttentionWeights, explain_text, pla_loss, total_loss
from ..kg import KnowledgeGraph, RankedEntity, Triple, kge_loss, margin_loss, nearest_entities
from ..metrics import MetricsReport, evaluate
from .checkpoint import Checkpoint
from .config import RunConfig
from .model import AffinityModel, ligand_entity, protein_entity


@dataclass
class EpochLog:
    epoch: int
    pla: float
    kge: float | None
    val_rmse: float

    def to_line(self) -> str:
        kge = "none" if self.kge is None else f"{self.kge:.17g}"
        return f"epoch={self.epoch}\tpla={self.pla:.17g}\tkge={kge}\tval_rmse={self.val_rmse:.17g}"


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    model: AffinityModel  # holds the selected (best) parameters
    log: list[EpochLog] = field(default_factory=list)

    def log_text(self) -> str:
        return "".join(e.to_line() + "\n" for e in self.log)


def head_kinds(mode: str) -> tuple[str, ...]:
    return {"full": ("P", "L"), "protein-only": ("P",), "ligand-only": ("L",), "off": ()}[mode]


def batch_kge_terms(model: AffinityModel, batch: list[ComplexSample], forwards) -> tuple[list[Triple], dict[str, Tensor]]:
    """Triples headed by the batch's proteins and ligands, with their projected head vectors."""
    kinds = head_kinds(model.config.kg)
    if not kinds or not model.kg.triples:
        return [], {}
    heads: dict[str, Tensor] = {}
    for s, fwd in zip(batch, forwards):
        if "P" in kinds:
            pe = protein_entity(s.protein_id)
            if pe in model.kg.entities and pe not in heads:
                heads[pe] = model.protein_head(fwd.protein)
        if "L" in kinds:
            le = ligand_entity(s.ligand_id)
            if le in model.kg.entities and le not in heads:
                heads[le] = model.ligand_head(fwd.ligand)
    return model.kg.triples_for_heads(heads), heads


def _frozen(name: str, prefixes: list[str]) -> bool:
    return any(name.startswith(p) for p in prefixes)


def predict_values(model: AffinityModel, samples) -> np.ndarray:
    return np.array([float(model.forward_sample(s).prediction.value) for s in samples])


def _rmse(pred: np.ndarray, labels: np.ndarray) -> float:
    return math.sqrt(float(np.mean((pred - labels) ** 2)))


def train(
    config: RunConfig,
    dataset: Dataset,
    split: DatasetSplit,
    kg: KnowledgeGraph | None = None,
    on_step: Callable[[AffinityModel], None] | None = None,
) -> TrainResult:
    """Mini-batch Adam on the joint objective; keeps the lowest-validation-RMSE state."""
    train_ids, val_ids = split.get("train"), split.get("val")
    if not train_ids or not val_ids:
        raise ContractError("training needs non-empty train and val partitions")
    train_set = dataset.subset(train_ids)
    val_set = dataset.subset(val_ids)
    val_labels = np.array([s.affinity for s in val_set])

    model = AffinityModel(config, kg)
    model.register_inputs(dataset.samples)
    if config.output_bias_from_labels:
        model.decoder.b2.value = np.asarray(float(np.mean([s.affinity for s in train_set])))
    named = model.named_parameters()
    params = [t for _, t in named]
    trainable = [t for name, t in named if not _frozen(name, config.frozen)]
    opt = Adam(trainable, lr=config.lr)
    train_index = {id(t): i for i, t in enumerate(params)}
    margin_rng = np.random.default_rng([config.seed, 1])

    log: list[EpochLog] = []
    best_state, best_epoch, best_rmse = model.state(), 0, math.inf
    for epoch in range(1, config.epochs + 1):
        order = np.random.default_rng([config.seed, epoch]).permutation(len(train_set))
        pla_sum, kge_sum, kge_batches, n_batches = 0.0, 0.0, 0, 0
        for start in range(0, len(order), config.batch_size):
            batch = [train_set[j] for j in order[start:start + config.batch_size]]
            if not batch:
                raise ContractError("empty batch")
            with Tape() as tape:
                forwards = [model.forward_sample(s) for s in batch]
                l_pla = pla_loss([f.prediction for f in forwards], [s.affinity for s in batch])
                triples, heads = batch_kge_terms(model, batch, forwards)
                l_kge = kge_loss(triples, heads, model.kg_tables) if triples else None
                if l_kge is not None and config.kge_margin > 0:
                    l_kge = ops.add(l_kge, margin_loss(triples, heads, model.kg_tables, margin_rng, config.kge_margin))
                loss = total_loss(l_pla, l_kge, config.beta, config.l2, params)
            value = float(loss.value)
            if not math.isfinite(value):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch}, batch starting {start}: "
                    f"pla={float(l_pla.value)}, kge={None if l_kge is None else float(l_kge.value)}")
            grads = tape.backward(loss, params)
            opt.step([grads[train_index[id(t)]] for t in trainable])
            if on_step is not None:
                on_step(model)
            pla_sum += float(l_pla.value)
            n_batches += 1
            if l_kge is not None:
                kge_sum += float(l_kge.value)
                kge_batches += 1
        val_rmse = _rmse(predict_values(model, val_set), val_labels)
        log.append(EpochLog(epoch, pla_sum / n_batches, kge_sum / kge_batches if kge_batches else None, val_rmse))
        if val_rmse < best_rmse:
            best_state, best_epoch, best_rmse = model.state(), epoch, val_rmse
    model.load_state(best_state)
    return TrainResult(Checkpoint.from_model(model, best_epoch, best_rmse, best_state), model, log)


def mean_triple_score(model: AffinityModel, triples=None) -> float:
    """Mean routed score over triples whose heads have recorded inputs."""
    triples = model.kg.triples if triples is None else triples
    heads: dict[str, Tensor] = {}
    usable = []
    for t in triples:
        if t.head not in heads:
            try:
                heads[t.head] = model.head_vector(t.head)
            except KeyError:
                continue
        usable.append(t)
    if not usable:
        raise ContractError("no triple has an encodable head")
    return float(kge_loss(usable, heads, model.kg_tables).value)


def evaluate_checkpoint(
    checkpoint: Checkpoint | AffinityModel,
    dataset: Dataset,
    split: DatasetSplit,
    dump_path=None,
) -> dict[str, MetricsReport]:
    model = checkpoint.build_model() if isinstance(checkpoint, Checkpoint) else checkpoint
    reports, rows = {}, []
    for name, ids in split.partitions.items():
        if not ids:
            raise ContractError(f"partition {name!r} is empty")
        samples = dataset.subset(ids)
        preds = predict_values(model, samples)
        labels = np.array([s.affinity for s in samples])
        reports[name] = evaluate(preds, labels)
        rows += [f"{s.id}\t{name}\t{float(p)!r}\t{float(s.affinity)!r}" for s, p in zip(samples, preds)]
    if dump_path is not None:
        Path(dump_path).write_text("sample_id\tpartition\tprediction\tlabel\n" + "".join(r + "\n" for r in rows))
    return reports


def predict(model: AffinityModel, sequence: str, smiles: str, protein_id: str | None = None,
            pad_protein: int | None = None, pad_ligand: int | None = None) -> tuple[float, AttentionWeights | None]:
    fwd = model.forward(sequence, smiles, protein_id, pad_protein, pad_ligand)
    return float(fwd.prediction.value), fwd.alpha


def explain_sample(model: AffinityModel, sample: ComplexSample) -> str:
    fwd = model.forward_sample(sample)
    return explain_text(sample.id, float(fwd.prediction.value), fwd.alpha, model.interaction(fwd))


def explain_kg(model: AffinityModel, entity_id: str, tail_type: str, k: int) -> list[RankedEntity]:
    return nearest_entities(model.kg, model.kg_tables, entity_id, model.head_vector(entity_id), tail_type, k)
