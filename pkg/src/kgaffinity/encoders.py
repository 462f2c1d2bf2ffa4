"""Protein and ligand encoders producing local (matrix) and global (vector) representations.

Local representations are feature-by-position matrices: ``D x M`` for protein
fragments and ``D x N`` for ligand atoms.  A boolean mask marks valid
columns; padding columns are kept exactly zero.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .chem import MolecularGraph, featurize_atoms
from .chem.features import NUM_FEATURES
from .diffkernel import Tensor, ops
from .errors import ContractError, EntityLookupError, FormatError, InputError

RESIDUES = "ACDEFGHIKLMNPQRSTVWYXBU"
RESIDUE_INDEX = {c: i for i, c in enumerate(RESIDUES)}
UNKNOWN_RESIDUE = "X"

EMBEDDING_MAGIC = b"KEPLAEMB"
EMBEDDING_VERSION = 1


def normalize_sequence(seq: str) -> str:
    """Upper-case a residue string; letters outside the alphabet become X."""
    if not seq:
        raise InputError("empty protein sequence")
    out = []
    for i, c in enumerate(seq):
        if not ("A" <= c <= "Z" or "a" <= c <= "z"):
            raise InputError(f"invalid residue symbol {c!r} at position {i}")
        c = c.upper()
        out.append(c if c in RESIDUE_INDEX else UNKNOWN_RESIDUE)
    return "".join(out)


def glorot(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


@dataclass
class LocalRepresentation:
    matrix: Tensor
    mask: np.ndarray

    @property
    def valid_count(self) -> int:
        return int(self.mask.sum())

    @property
    def width(self) -> int:
        return self.matrix.shape[0]

    @property
    def length(self) -> int:
        return self.matrix.shape[1]


# --- protein embedding providers -------------------------------------------------


class TrainableResidueTable:
    """Learnable ``D_p x 23`` residue embedding table."""

    mode = "trainable"

    def __init__(self, table: Tensor):
        if table.shape[1] != len(RESIDUES):
            raise ContractError(f"residue table needs {len(RESIDUES)} columns, got {table.shape[1]}")
        self.table = table

    @classmethod
    def init(cls, rng: np.random.Generator, d_p: int) -> "TrainableResidueTable":
        return cls(Tensor(rng.normal(0.0, 1.0 / np.sqrt(d_p), size=(d_p, len(RESIDUES))),
                          requires_grad=True, name="protein.residue_table"))

    @property
    def width(self) -> int:
        return self.table.shape[0]

    def tensors(self) -> list[Tensor]:
        return [self.table]

    def embed(self, protein_id: str | None, seq: str, max_len: int, pad_to: int | None = None):
        seq = normalize_sequence(seq)[:max_len]
        length = pad_to if pad_to is not None else len(seq)
        if length < len(seq):
            raise ContractError("pad_to is shorter than the sequence")
        onehot = np.zeros((len(RESIDUES), length))
        onehot[[RESIDUE_INDEX[c] for c in seq], np.arange(len(seq))] = 1.0
        return ops.matmul(self.table, onehot), len(seq)


def write_embedding_file(path, embeddings: dict[str, np.ndarray]) -> None:
    """Write per-residue matrices (``D_p x K`` each) plus a ``.idx`` text sidecar."""
    path = Path(path)
    items = list(embeddings.items())
    widths = {np.shape(m)[0] for _, m in items}
    if len(widths) > 1:
        raise ContractError(f"all matrices must share D_p, got {sorted(widths)}")
    d_p = widths.pop() if widths else 0
    index_lines = []
    with open(path, "wb") as fh:
        fh.write(EMBEDDING_MAGIC)
        fh.write(struct.pack("<IIQ", EMBEDDING_VERSION, d_p, len(items)))
        for pid, mat in items:
            raw = pid.encode("utf-8")
            mat = np.asarray(mat, dtype="<f4")
            offset = fh.tell()
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", mat.shape[1]))
            fh.write(np.ascontiguousarray(mat).tobytes())
            index_lines.append(f"{pid}\t{offset}\t{mat.shape[1]}")
    Path(str(path) + ".idx").write_text("\n".join(index_lines) + ("\n" if index_lines else ""))


class FileEmbeddingStore:
    """Precomputed per-residue matrices read from a ``KEPLAEMB`` file."""

    mode = "file"

    def __init__(self, path):
        self.path = Path(path)
        with open(self.path, "rb") as fh:
            head = fh.read(24)
            if len(head) < 24 or head[:8] != EMBEDDING_MAGIC:
                raise FormatError("not a KEPLAEMB embedding file", path=str(self.path))
            version, self.d_p, self.count = struct.unpack("<IIQ", head[8:])
            if version != EMBEDDING_VERSION:
                raise FormatError(f"unsupported embedding file version {version}", path=str(self.path))
            self.offsets = self._read_index() or self._scan(fh)
        if len(self.offsets) != self.count:
            raise FormatError(f"header declares {self.count} records, found {len(self.offsets)}",
                              path=str(self.path))
        self._cache: dict[str, np.ndarray] = {}

    @property
    def width(self) -> int:
        return self.d_p

    def tensors(self) -> list[Tensor]:
        return []

    def _read_index(self) -> dict[str, int] | None:
        idx = Path(str(self.path) + ".idx")
        if not idx.exists():
            return None
        out = {}
        for n, line in enumerate(idx.read_text().splitlines(), 1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise FormatError("malformed index line", n, str(idx))
            out[parts[0]] = int(parts[1])
        return out

    def _scan(self, fh) -> dict[str, int]:
        out = {}
        fh.seek(24)
        for _ in range(self.count):
            offset = fh.tell()
            (n,) = struct.unpack("<H", fh.read(2))
            pid = fh.read(n).decode("utf-8")
            (k,) = struct.unpack("<I", fh.read(4))
            fh.seek(4 * self.d_p * k, 1)
            out[pid] = offset
        return out

    def matrix(self, protein_id: str) -> np.ndarray:
        if protein_id in self._cache:
            return self._cache[protein_id]
        if protein_id not in self.offsets:
            raise EntityLookupError(f"no precomputed embedding for protein {protein_id!r}")
        with open(self.path, "rb") as fh:
            fh.seek(self.offsets[protein_id])
            (n,) = struct.unpack("<H", fh.read(2))
            stored = fh.read(n).decode("utf-8")
            if stored != protein_id:
                raise FormatError(f"index points at {stored!r}, expected {protein_id!r}", path=str(self.path))
            (k,) = struct.unpack("<I", fh.read(4))
            data = np.frombuffer(fh.read(4 * self.d_p * k), dtype="<f4")
        mat = data.reshape(self.d_p, k).astype(np.float64)
        self._cache[protein_id] = mat
        return mat

    def embed(self, protein_id: str | None, seq: str, max_len: int, pad_to: int | None = None):
        if protein_id is None:
            raise EntityLookupError("file-backed embeddings need a protein id")
        normalize_sequence(seq)
        mat = self.matrix(protein_id)[:, :max_len]
        valid = mat.shape[1]
        length = pad_to if pad_to is not None else valid
        if length < valid:
            raise ContractError("pad_to is shorter than the embedded sequence")
        out = np.zeros((self.d_p, length))
        out[:, :valid] = mat
        return Tensor(out), valid


# --- protein encoder ---------------------------------------------------------------


def pooling_matrix(length: int, s: int) -> np.ndarray:
    """``length x M`` matrix whose product averages non-overlapping windows of s columns."""
    m = -(-length // s)
    P = np.zeros((length, m))
    cols = np.arange(length)
    P[cols, cols // s] = 1.0 / s
    return P


def pool_smers(M_p, s: int, valid_len: int | None = None) -> LocalRepresentation:
    """Average-pool non-overlapping windows of ``s`` residue columns.

    The sequence axis is zero-padded up to a multiple of ``s``; a fragment is
    valid when it overlaps the first ``valid_len`` residues.
    """
    if s <= 0:
        raise ContractError(f"pool window must be positive, got {s}")
    M_p = M_p if isinstance(M_p, Tensor) else Tensor(M_p)
    length = M_p.shape[1]
    valid_len = length if valid_len is None else valid_len
    P = pooling_matrix(length, s)
    X = ops.matmul(M_p, P)
    mask = np.arange(P.shape[1]) * s < valid_len
    return LocalRepresentation(X, mask)


@dataclass
class DenseStack:
    """Column-wise dense layers ``H <- ReLU(W H + b)`` applied to valid columns."""

    weights: list[Tensor]
    biases: list[Tensor]

    @classmethod
    def init(cls, rng: np.random.Generator, widths: list[int], prefix: str) -> "DenseStack":
        W, b = [], []
        for k, (fan_in, fan_out) in enumerate(zip(widths, widths[1:])):
            W.append(Tensor(glorot(rng, fan_out, fan_in), requires_grad=True, name=f"{prefix}.W{k}"))
            b.append(Tensor(np.zeros(fan_out), requires_grad=True, name=f"{prefix}.b{k}"))
        return cls(W, b)

    @property
    def widths(self) -> list[int]:
        if not self.weights:
            return []
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    def tensors(self) -> list[Tensor]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out


ProteinEncoderParams = DenseStack


def encode_protein(
    seq: str,
    provider,
    params: DenseStack,
    s: int = 9,
    max_len: int = 1080,
    protein_id: str | None = None,
    pad_to: int | None = None,
) -> LocalRepresentation:
    """Residue embeddings -> s-mer pooling -> dense ReLU stack."""
    M_p, valid_len = provider.embed(protein_id, seq, max_len, pad_to)
    if M_p.shape[0] != params.widths[0]:
        raise ContractError(f"provider width {M_p.shape[0]} != encoder input width {params.widths[0]}")
    pooled = pool_smers(M_p, s, valid_len)
    ones = pooled.mask.astype(np.float64)
    H = pooled.matrix
    for W, b in zip(params.weights, params.biases):
        H = ops.relu(ops.add(ops.matmul(W, H), ops.outer(b, ones)))
    return LocalRepresentation(H, pooled.mask)


# --- ligand encoder ------------------------------------------------------------------


def normalized_adjacency(graph: MolecularGraph) -> np.ndarray:
    """Symmetric normalization D^-1/2 (A + I) D^-1/2 of the atom adjacency."""
    A = graph.adjacency(self_loops=True)
    d = A.sum(axis=1)
    inv = 1.0 / np.sqrt(d) if len(d) else d
    return A * inv[:, None] * inv[None, :]


@dataclass
class LigandInput:
    """Precomputed ligand features: 74 x n atom features and the normalized adjacency."""

    features: np.ndarray
    adjacency: np.ndarray

    @classmethod
    def from_graph(cls, graph: MolecularGraph) -> "LigandInput":
        return cls(featurize_atoms(graph).astype(np.float64), normalized_adjacency(graph))

    @property
    def n_atoms(self) -> int:
        return self.features.shape[1]

    def padded(self, n: int) -> "LigandInput":
        k = self.n_atoms
        if n < k:
            raise ContractError("cannot pad below the atom count")
        F = np.zeros((self.features.shape[0], n))
        F[:, :k] = self.features
        A = np.zeros((n, n))
        A[:k, :k] = self.adjacency
        return LigandInput(F, A)


@dataclass
class LigandEncoderParams:
    projection: Tensor  # D_d x 74, no bias
    gcn: DenseStack

    @classmethod
    def init(cls, rng: np.random.Generator, d_d: int, widths: list[int]) -> "LigandEncoderParams":
        proj = Tensor(glorot(rng, d_d, NUM_FEATURES), requires_grad=True, name="ligand.W_in")
        return cls(proj, DenseStack.init(rng, [d_d] + list(widths), "ligand.gcn"))

    def tensors(self) -> list[Tensor]:
        return [self.projection] + self.gcn.tensors()


def encode_ligand(
    ligand: MolecularGraph | LigandInput,
    params: LigandEncoderParams,
    max_atoms: int = 290,
    pad_to: int | None = None,
) -> LocalRepresentation:
    """Linear projection of atom features followed by GCN layers ReLU(W H Â + b)."""
    inp = ligand if isinstance(ligand, LigandInput) else LigandInput.from_graph(ligand)
    n = inp.n_atoms
    if n == 0:
        raise InputError("ligand has no atoms")
    if n > max_atoms:
        raise InputError(f"ligand has {n} atoms, limit is {max_atoms}")
    if pad_to is not None:
        if pad_to > max_atoms:
            raise InputError(f"pad_to {pad_to} exceeds the atom limit {max_atoms}")
        inp = inp.padded(pad_to)
    mask = np.zeros(inp.n_atoms, dtype=bool)
    mask[:n] = True
    ones = mask.astype(np.float64)
    H = ops.matmul(params.projection, inp.features)
    for W, b in zip(params.gcn.weights, params.gcn.biases):
        H = ops.relu(ops.add(ops.matmul(ops.matmul(W, H), inp.adjacency), ops.outer(b, ones)))
    return LocalRepresentation(H, mask)


# --- global projection and composition features -------------------------------------


def global_project(H: LocalRepresentation, W_k, b_k) -> Tensor:
    """h = W_k · mean(valid columns of H) + b_k."""
    return ops.add(ops.matmul(W_k, ops.mean_masked(H.matrix, H.mask)), b_k)


def psc_features(seq: str) -> np.ndarray:
    """Normalized 1-mer (23) and 2-mer (529) residue composition, concatenated."""
    seq = normalize_sequence(seq)
    n = len(RESIDUES)
    idx = np.array([RESIDUE_INDEX[c] for c in seq])
    mono = np.bincount(idx, minlength=n).astype(np.float64) / len(idx)
    di = np.zeros(n * n)
    if len(idx) > 1:
        di = np.bincount(idx[:-1] * n + idx[1:], minlength=n * n).astype(np.float64) / (len(idx) - 1)
    return np.concatenate([mono, di])
