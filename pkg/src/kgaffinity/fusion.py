"""Cross-attention fusion, the affinity decoder and the training objectives."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diffkernel import Tensor, ops
from .encoders import LocalRepresentation, glorot
from .errors import ContractError, DimensionError

FUSION_MODES = ("cross", "protein-attn", "ligand-attn", "concat")
DECODER_HIDDEN = 512


@dataclass
class InteractionMap:
    matrix: Tensor  # M x N
    protein_mask: np.ndarray
    ligand_mask: np.ndarray


@dataclass
class AttentionWeights:
    protein: Tensor  # length M, zero on padded fragments
    ligand: Tensor  # length N, zero on padded atoms


def interaction_map(H_p: LocalRepresentation, H_d: LocalRepresentation) -> InteractionMap:
    """Pairwise dot products between every protein fragment and every ligand atom."""
    if H_p.width != H_d.width:
        raise DimensionError(f"feature widths differ: protein {H_p.width}, ligand {H_d.width}")
    V = ops.matmul(ops.transpose(H_p.matrix), H_d.matrix)
    return InteractionMap(V, np.asarray(H_p.mask, bool), np.asarray(H_d.mask, bool))


def cross_attention(V: InteractionMap, width: int) -> AttentionWeights:
    """Dual softmax attention from the mean interaction of each fragment and each atom."""
    if width <= 0:
        raise ContractError(f"width must be positive, got {width}")
    c = 1.0 / math.sqrt(width)
    per_fragment = ops.mean_masked(V.matrix, V.ligand_mask)
    per_atom = ops.mean_masked(ops.transpose(V.matrix), V.protein_mask)
    a_p = ops.softmax_masked(ops.scale(ops.tanh(per_fragment), c), V.protein_mask)
    a_d = ops.softmax_masked(ops.scale(ops.tanh(per_atom), c), V.ligand_mask)
    return AttentionWeights(a_p, a_d)


def joint_representation(H_p: LocalRepresentation, H_d: LocalRepresentation, alpha: AttentionWeights) -> Tensor:
    """Attention-weighted column sums, protein half first."""
    if alpha.protein.shape != (H_p.length,) or alpha.ligand.shape != (H_d.length,):
        raise DimensionError("attention weights do not match the representation lengths")
    return ops.concat(ops.matmul(H_p.matrix, alpha.protein), ops.matmul(H_d.matrix, alpha.ligand))


def uniform_weights(mask: np.ndarray) -> Tensor:
    mask = np.asarray(mask, bool)
    return Tensor(mask / mask.sum())


def one_side_attention(attended: LocalRepresentation, query: Tensor, width: int) -> Tensor:
    """Softmax over columns of one side scored against the other side's global vector."""
    scores = ops.matmul(ops.transpose(attended.matrix), query)
    return ops.softmax_masked(ops.scale(ops.tanh(scores), 1.0 / math.sqrt(width)), attended.mask)


def fuse(H_p: LocalRepresentation, H_d: LocalRepresentation, mode: str = "cross"):
    """Joint vector and attention weights for the selected fusion path.

    ``concat`` max-pools both sides and has no attention weights (None).
    The one-side variants report uniform weights for the side that is only
    mean-pooled.
    """
    if H_p.width != H_d.width:
        raise DimensionError(f"feature widths differ: protein {H_p.width}, ligand {H_d.width}")
    width = H_p.width
    if mode == "cross":
        alpha = cross_attention(interaction_map(H_p, H_d), width)
    elif mode == "protein-attn":
        q = ops.mean_masked(H_d.matrix, H_d.mask)
        alpha = AttentionWeights(one_side_attention(H_p, q, width), uniform_weights(H_d.mask))
    elif mode == "ligand-attn":
        q = ops.mean_masked(H_p.matrix, H_p.mask)
        alpha = AttentionWeights(uniform_weights(H_p.mask), one_side_attention(H_d, q, width))
    elif mode == "concat":
        f = ops.concat(ops.max_masked(H_p.matrix, H_p.mask), ops.max_masked(H_d.matrix, H_d.mask))
        return f, None
    else:
        raise ContractError(f"unknown fusion mode {mode!r}; expected one of {FUSION_MODES}")
    return joint_representation(H_p, H_d, alpha), alpha


@dataclass
class DecoderParams:
    W1: Tensor  # hidden x 2D
    b1: Tensor
    w2: Tensor  # hidden
    b2: Tensor  # scalar

    @classmethod
    def init(cls, rng: np.random.Generator, width: int, hidden: int = DECODER_HIDDEN,
             output_bias: float = 0.0) -> "DecoderParams":
        return cls(
            Tensor(glorot(rng, hidden, 2 * width), requires_grad=True, name="decoder.W1"),
            Tensor(np.zeros(hidden), requires_grad=True, name="decoder.b1"),
            Tensor(glorot(rng, 1, hidden)[0], requires_grad=True, name="decoder.w2"),
            Tensor(np.asarray(float(output_bias)), requires_grad=True, name="decoder.b2"),
        )

    @property
    def input_width(self) -> int:
        return self.W1.shape[1]

    def tensors(self) -> list[Tensor]:
        return [self.W1, self.b1, self.w2, self.b2]


def predict_affinity(f: Tensor, decoder: DecoderParams) -> Tensor:
    """Two-layer MLP with a ReLU hidden layer and an unbounded scalar output."""
    if f.shape != (decoder.input_width,):
        raise DimensionError(f"decoder expects width {decoder.input_width}, got {f.shape}")
    hidden = ops.relu(ops.add(ops.matmul(decoder.W1, f), decoder.b1))
    return ops.add(ops.matmul(decoder.w2, hidden), decoder.b2)


def pla_loss(predictions, labels) -> Tensor:
    """Mean absolute error over a batch of scalar predictions."""
    predictions = list(predictions) if not isinstance(predictions, Tensor) else predictions
    if isinstance(predictions, list):
        if not predictions:
            raise ContractError("empty batch")
        predictions = ops.concat(*predictions)
    labels = np.asarray(labels, dtype=np.float64)
    if predictions.shape != labels.shape:
        raise DimensionError(f"{predictions.shape[0]} predictions vs {labels.shape[0]} labels")
    return ops.mae(predictions, labels)


def l2_penalty(params) -> Tensor:
    total = None
    for p in params:
        term = ops.sum_of_squares(p)
        total = term if total is None else ops.add(total, term)
    return Tensor(0.0) if total is None else total


def total_loss(l_pla, l_kge, beta: float, lam: float, params) -> Tensor:
    """L_PLA + beta * L_KGE + lam * sum of squared parameters.

    ``l_kge`` may be None (no triples gathered); the term then vanishes.
    """
    if beta < 0 or lam < 0:
        raise ContractError(f"beta and lambda must be nonnegative, got {beta}, {lam}")
    loss = l_pla if isinstance(l_pla, Tensor) else Tensor(float(l_pla))
    if l_kge is not None:
        loss = ops.add(loss, ops.scale(l_kge, beta))
    if lam:
        loss = ops.add(loss, ops.scale(l2_penalty(params), lam))
    return loss


def top_atoms(alpha_d: np.ndarray, fraction: float = 0.2) -> list[int]:
    """Indices of the highest-weighted atoms covering ``fraction`` of the valid atoms."""
    alpha_d = np.asarray(alpha_d)
    valid = np.flatnonzero(alpha_d > 0)
    k = max(1, math.ceil(fraction * len(valid))) if len(valid) else 0
    order = sorted(valid, key=lambda i: (-alpha_d[i], i))
    return [int(i) for i in order[:k]]


def explain_text(sample_id: str, prediction: float, alpha: AttentionWeights | None, V: np.ndarray | None) -> str:
    lines = [f"sample\t{sample_id}", f"prediction\t{prediction:.10g}"]
    if alpha is not None:
        a_p, a_d = alpha.protein.value, alpha.ligand.value
        lines.append(f"alpha_p\t{len(a_p)}")
        lines += [f"{i}\t{w:.10g}" for i, w in enumerate(a_p)]
        lines.append(f"alpha_d\t{len(a_d)}")
        lines += [f"{j}\t{w:.10g}" for j, w in enumerate(a_d)]
        lines.append("top_atoms\t" + ",".join(str(i) for i in top_atoms(a_d)))
    if V is not None:
        lines.append(f"interaction_map\t{V.shape[0]}\t{V.shape[1]}")
        lines += ["\t".join(f"{x:.10g}" for x in row) for row in V]
    return "\n".join(lines) + "\n"
