"""Run configuration read from ``key = value`` text files."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ContractError, FormatError
from ..fusion import FUSION_MODES

KG_MODES = ("full", "protein-only", "ligand-only", "off")
PROVIDER_MODES = ("trainable", "file")

# short names accepted in config files
ALIASES = {
    "D": "width",
    "s": "pool_window",
    "K": "max_residues",
    "N_max": "max_atoms",
    "beta": "beta",
    "lambda": "l2",
    "lr": "lr",
    "batch": "batch_size",
    "max_epochs": "epochs",
    "D_p": "residue_width",
    "D_d": "ligand_input_width",
}


@dataclass
class RunConfig:
    width: int = 128
    pool_window: int = 9
    max_residues: int = 1080
    max_atoms: int = 290
    beta: float = 0.1
    l2: float = 1e-5
    lr: float = 1e-4
    batch_size: int = 64
    epochs: int = 200
    seed: int = 0
    provider: str = "trainable"
    embedding_file: str = ""
    residue_width: int = 128
    protein_hidden: list[int] = field(default_factory=lambda: [512])
    ligand_input_width: int = 128
    gcn_layers: int = 3
    decoder_hidden: int = 512
    kg: str = "full"
    fusion: str = "cross"
    kge_margin: float = 0.0  # > 0 enables the negative-sampling hinge term
    frozen: list[str] = field(default_factory=list)  # parameter-name prefixes kept fixed
    output_bias_from_labels: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("width", "pool_window", "max_residues", "max_atoms", "batch_size", "epochs",
                     "residue_width", "ligand_input_width", "gcn_layers", "decoder_hidden"):
            if int(getattr(self, name)) <= 0:
                raise ContractError(f"{name} must be positive, got {getattr(self, name)}")
        if self.lr <= 0:
            raise ContractError(f"lr must be positive, got {self.lr}")
        if self.beta < 0 or self.l2 < 0 or self.kge_margin < 0:
            raise ContractError("beta, l2 and kge_margin must be nonnegative")
        if any(h <= 0 for h in self.protein_hidden):
            raise ContractError(f"protein_hidden widths must be positive, got {self.protein_hidden}")
        if self.kg not in KG_MODES:
            raise ContractError(f"kg must be one of {KG_MODES}, got {self.kg!r}")
        if self.fusion not in FUSION_MODES:
            raise ContractError(f"fusion must be one of {FUSION_MODES}, got {self.fusion!r}")
        if self.provider not in PROVIDER_MODES:
            raise ContractError(f"provider must be one of {PROVIDER_MODES}, got {self.provider!r}")
        if self.provider == "file" and not self.embedding_file:
            raise ContractError("provider=file needs embedding_file")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ContractError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, list):
                v = ",".join(str(x) for x in v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


def _convert(field_: dataclasses.Field, text: str):
    kind = field_.type if isinstance(field_.type, str) else getattr(field_.type, "__name__", "")
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    if kind == "bool":
        low = text.lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"not a boolean: {text!r}")
        return low in ("true", "1", "yes")
    if kind == "list[int]":
        return [int(x) for x in text.split(",") if x.strip()]
    if kind == "list[str]":
        return [x.strip() for x in text.split(",") if x.strip()]
    return text


def parse_config(text: str, path: str | None = None, base: RunConfig | None = None) -> RunConfig:
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    values = (base or RunConfig()).to_dict()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise FormatError("expected key = value", lineno, path)
        name = ALIASES.get(key, key)
        if name not in fields:
            raise FormatError(f"unknown config key {key!r}", lineno, path)
        try:
            values[name] = _convert(fields[name], value)
        except ValueError as exc:
            raise FormatError(f"bad value for {key}: {exc}", lineno, path) from None
    try:
        return RunConfig(**values)
    except ContractError as exc:
        raise FormatError(str(exc), None, path) from None


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), str(path))
