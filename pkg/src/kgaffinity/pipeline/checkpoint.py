"""Versioned binary checkpoints.

Layout (little-endian): magic ``KEPLACKPT``, version u32, header length u64,
UTF-8 JSON header with sorted keys, then every tensor as raw float64 in the
order listed by the header.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ContractError, FormatError
from ..kg import KnowledgeGraph
from .config import RunConfig
from .model import AffinityModel

MAGIC = b"KEPLACKPT"
VERSION = 1


@dataclass
class Checkpoint:
    config: RunConfig
    epoch: int
    val_rmse: float
    state: dict[str, np.ndarray]
    triples: list[tuple[str, str, str]] = field(default_factory=list)
    entity_names: dict[str, str] = field(default_factory=dict)
    protein_inputs: dict[str, str] = field(default_factory=dict)
    ligand_inputs: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_model(cls, model: AffinityModel, epoch: int, val_rmse: float,
                   state: dict[str, np.ndarray] | None = None) -> "Checkpoint":
        kg = model.kg
        names = {e: name for e, (name, _) in kg.entities.items() if name != e.partition(":")[2]}
        return cls(
            model.config,
            epoch,
            float(val_rmse),
            {k: v.copy() for k, v in (state or model.state()).items()},
            [(t.head, t.relation, t.tail) for t in kg.triples],
            names,
            dict(model.protein_inputs),
            dict(model.ligand_inputs),
        )

    def knowledge_graph(self) -> KnowledgeGraph:
        kg = KnowledgeGraph()
        for h, r, t in self.triples:
            kg.add_triple(h, r, t)
        for e, name in self.entity_names.items():
            kg.add_entity(e, name)
        return kg

    def build_model(self) -> AffinityModel:
        model = AffinityModel(self.config, self.knowledge_graph())
        try:
            model.load_state(self.state)
        except (KeyError, ValueError) as exc:
            raise ContractError(f"checkpoint does not fit its configuration: {exc}") from None
        model.protein_inputs.update(self.protein_inputs)
        model.ligand_inputs.update(self.ligand_inputs)
        return model

    def to_bytes(self) -> bytes:
        names = list(self.state)
        header = {
            "config": self.config.to_dict(),
            "epoch": self.epoch,
            "val_rmse": self.val_rmse,
            "tensors": [{"name": n, "shape": list(self.state[n].shape)} for n in names],
            "triples": [list(t) for t in self.triples],
            "entity_names": self.entity_names,
            "protein_inputs": self.protein_inputs,
            "ligand_inputs": self.ligand_inputs,
        }
        blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
        out = io.BytesIO()
        out.write(MAGIC)
        out.write(struct.pack("<IQ", VERSION, len(blob)))
        out.write(blob)
        for n in names:
            out.write(np.ascontiguousarray(self.state[n], dtype="<f8").tobytes())
        return out.getvalue()

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes, path: str | None = None) -> "Checkpoint":
        if not data.startswith(MAGIC):
            raise FormatError("not a KEPLACKPT checkpoint", path=path)
        pos = len(MAGIC)
        if len(data) < pos + 12:
            raise FormatError("truncated checkpoint header", path=path)
        version, hlen = struct.unpack_from("<IQ", data, pos)
        if version != VERSION:
            raise FormatError(f"unsupported checkpoint version {version}", path=path)
        pos += 12
        try:
            header = json.loads(data[pos:pos + hlen].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise FormatError(f"corrupt checkpoint header: {exc}", path=path) from None
        pos += hlen
        state = {}
        for entry in header["tensors"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            end = pos + 8 * count
            if end > len(data):
                raise FormatError(f"truncated tensor {entry['name']}", path=path)
            state[entry["name"]] = np.frombuffer(data[pos:end], dtype="<f8").reshape(shape).astype(np.float64)
            pos = end
        if pos != len(data):
            raise FormatError("trailing bytes after the last tensor", path=path)
        return cls(
            RunConfig.from_dict(header["config"]),
            int(header["epoch"]),
            float(header["val_rmse"]),
            state,
            [tuple(t) for t in header["triples"]],
            header["entity_names"],
            header["protein_inputs"],
            header["ligand_inputs"],
        )

    @classmethod
    def load(cls, path) -> "Checkpoint":
        return cls.from_bytes(Path(path).read_bytes(), str(path))
