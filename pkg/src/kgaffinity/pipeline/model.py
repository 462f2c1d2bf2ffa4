"""The affinity model: encoders, KG projections and tables, fusion and decoder."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..chem import parse_smiles
from ..diffkernel import Tensor
from ..errors import EntityLookupError
from ..encoders import (
    DenseStack,
    FileEmbeddingStore,
    LigandEncoderParams,
    LigandInput,
    LocalRepresentation,
    TrainableResidueTable,
    encode_ligand,
    encode_protein,
    global_project,
    glorot,
    normalize_sequence,
)
from ..fusion import AttentionWeights, DecoderParams, fuse, interaction_map, predict_affinity
from ..kg import KGEmbeddings, KnowledgeGraph
from .config import RunConfig


def protein_entity(protein_id: str) -> str:
    return protein_id if protein_id.startswith("P:") else f"P:{protein_id}"


def ligand_entity(ligand_id: str) -> str:
    return ligand_id if ligand_id.startswith("L:") else f"L:{ligand_id}"


@dataclass
class Forward:
    prediction: Tensor
    protein: LocalRepresentation
    ligand: LocalRepresentation
    alpha: AttentionWeights | None


class AffinityModel:
    """Owns every learnable tensor and the caches of featurized inputs."""

    def __init__(self, config: RunConfig, kg: KnowledgeGraph | None = None, rng: np.random.Generator | None = None):
        self.config = config
        rng = np.random.default_rng(config.seed) if rng is None else rng
        D = config.width
        if config.provider == "file":
            self.provider = FileEmbeddingStore(config.embedding_file)
        else:
            self.provider = TrainableResidueTable.init(rng, config.residue_width)
        self.protein = DenseStack.init(rng, [self.provider.width, *config.protein_hidden, D], "protein.dnn")
        self.ligand = LigandEncoderParams.init(rng, config.ligand_input_width, [D] * config.gcn_layers)
        self.W_kp = Tensor(glorot(rng, D, D), requires_grad=True, name="kg.protein_proj.W")
        self.b_kp = Tensor(np.zeros(D), requires_grad=True, name="kg.protein_proj.b")
        self.W_kd = Tensor(glorot(rng, D, D), requires_grad=True, name="kg.ligand_proj.W")
        self.b_kd = Tensor(np.zeros(D), requires_grad=True, name="kg.ligand_proj.b")
        self.kg = kg if kg is not None else KnowledgeGraph()
        self.kg_tables = KGEmbeddings.init(self.kg, D, rng)
        self.decoder = DecoderParams.init(rng, D, config.decoder_hidden)
        self._ligand_inputs: dict[str, LigandInput] = {}
        # head-entity inputs for KG queries: entity id -> sequence / SMILES
        self.protein_inputs: dict[str, str] = {}
        self.ligand_inputs: dict[str, str] = {}

    # -- parameters ---------------------------------------------------------------------

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        tensors = (
            self.provider.tensors()
            + self.protein.tensors()
            + self.ligand.tensors()
            + [self.W_kp, self.b_kp, self.W_kd, self.b_kd]
            + self.kg_tables.tensors()
            + self.decoder.tensors()
        )
        return [(t.name, t) for t in tensors]

    def parameters(self) -> list[Tensor]:
        return [t for _, t in self.named_parameters()]

    def state(self) -> dict[str, np.ndarray]:
        return {name: t.value.copy() for name, t in self.named_parameters()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for name, t in self.named_parameters():
            if name not in state:
                raise KeyError(f"state lacks tensor {name!r}")
            if state[name].shape != t.value.shape:
                raise ValueError(f"tensor {name!r}: stored shape {state[name].shape} != model shape {t.value.shape}")
            t.value = np.array(state[name], dtype=np.float64)

    # -- inputs ---------------------------------------------------------------------------

    def register_inputs(self, samples) -> None:
        for s in samples:
            self.protein_inputs[protein_entity(s.protein_id)] = normalize_sequence(s.sequence)
            self.ligand_inputs[ligand_entity(s.ligand_id)] = s.smiles

    def ligand_input(self, smiles: str) -> LigandInput:
        inp = self._ligand_inputs.get(smiles)
        if inp is None:
            inp = LigandInput.from_graph(parse_smiles(smiles))
            self._ligand_inputs[smiles] = inp
        return inp

    # -- forward ---------------------------------------------------------------------------

    def encode_protein(self, sequence: str, protein_id: str | None = None, pad_to: int | None = None):
        c = self.config
        return encode_protein(sequence, self.provider, self.protein, c.pool_window, c.max_residues,
                              protein_id=protein_id, pad_to=pad_to)

    def encode_ligand(self, smiles: str, pad_to: int | None = None):
        return encode_ligand(self.ligand_input(smiles), self.ligand, self.config.max_atoms, pad_to)

    def protein_head(self, H_p: LocalRepresentation) -> Tensor:
        return global_project(H_p, self.W_kp, self.b_kp)

    def ligand_head(self, H_d: LocalRepresentation) -> Tensor:
        return global_project(H_d, self.W_kd, self.b_kd)

    def forward(self, sequence: str, smiles: str, protein_id: str | None = None,
                pad_protein: int | None = None, pad_ligand: int | None = None) -> Forward:
        H_p = self.encode_protein(sequence, protein_id, pad_protein)
        H_d = self.encode_ligand(smiles, pad_ligand)
        f, alpha = fuse(H_p, H_d, self.config.fusion)
        return Forward(predict_affinity(f, self.decoder), H_p, H_d, alpha)

    def forward_sample(self, sample) -> Forward:
        return self.forward(sample.sequence, sample.smiles, sample.protein_id)

    def interaction(self, fwd: Forward) -> np.ndarray:
        return interaction_map(fwd.protein, fwd.ligand).matrix.value

    def head_vector(self, entity_id: str) -> Tensor:
        """Projected embedding of a protein or ligand entity from its stored input."""
        if entity_id in self.protein_inputs:
            pid = entity_id[2:] if self.config.provider == "file" else None
            return self.protein_head(self.encode_protein(self.protein_inputs[entity_id], pid))
        if entity_id in self.ligand_inputs:
            return self.ligand_head(self.encode_ligand(self.ligand_inputs[entity_id]))
        raise EntityLookupError(f"no encodable input recorded for entity {entity_id!r}")
