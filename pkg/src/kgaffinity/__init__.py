"""Knowledge-graph-enhanced protein-ligand binding affinity prediction."""

from pathlib import Path

__version__ = "0.1.0"

DATA_DIR = Path(__file__).resolve().parent / "data"


def data_path(name: str) -> Path:
    """Path of a bundled fixture file (``complexes_50.tsv``, ``kg_sample.tsv``, ``manifest.txt``)."""
    path = DATA_DIR / name
    if not path.is_file():
        raise FileNotFoundError(f"no bundled fixture named {name!r}")
    return path


def read_data_manifest() -> dict[str, int]:
    counts = {}
    for line in data_path("manifest.txt").read_text().splitlines():
        if line and not line.startswith("#"):
            key, value = line.split("\t")
            counts[key] = int(value)
    return counts
