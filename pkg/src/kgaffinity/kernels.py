"""Hot kernels for split clustering, compiled when available.

``BACKEND`` is ``"cython"`` when the extension imported and ``"python"``
otherwise.  Set ``KGAFFINITY_PURE_PYTHON=1`` to force the numpy fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

if os.environ.get("KGAFFINITY_PURE_PYTHON") == "1":
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"


def pack_fingerprints(bits: np.ndarray) -> np.ndarray:
    """Pack an (n, nbits) boolean array into (n, ceil(nbits/64)) uint64 words."""
    bits = np.asarray(bits, dtype=bool)
    n, nbits = bits.shape
    width = -(-nbits // 64) * 64
    padded = np.zeros((n, width), dtype=bool)
    padded[:, :nbits] = bits
    return np.ascontiguousarray(np.packbits(padded, axis=1).view(np.uint64))


def jaccard_matrix(bits: np.ndarray) -> np.ndarray:
    """Pairwise Jaccard distances between fingerprint rows (0 for two empty rows)."""
    return _impl.jaccard_matrix(pack_fingerprints(bits))


def cosine_matrix(X: np.ndarray) -> np.ndarray:
    """Pairwise cosine distances, clipped at 0; zero rows are at distance 1 from others."""
    return _impl.cosine_matrix(np.ascontiguousarray(X, dtype=np.float64))


def threshold_components(D: np.ndarray, gamma: float) -> np.ndarray:
    """Connected components of the graph {(i, j): D[i, j] < gamma}, labelled by first member."""
    return _impl.threshold_components(np.ascontiguousarray(D, dtype=np.float64), float(gamma))


def jaccard_components(bits: np.ndarray, gamma: float) -> np.ndarray:
    return _impl.jaccard_components(pack_fingerprints(bits), float(gamma))
