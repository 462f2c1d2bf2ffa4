"""Pure numpy implementations of the compiled kernels in ``_ckernels.pyx``."""

from __future__ import annotations

import numpy as np

_POPCOUNT8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


def _popcount_rows(words: np.ndarray) -> np.ndarray:
    return _POPCOUNT8[words.view(np.uint8)].reshape(words.shape[0], -1).sum(axis=1)


def jaccard_matrix(words: np.ndarray) -> np.ndarray:
    words = np.ascontiguousarray(words, dtype=np.uint64)
    n = words.shape[0]
    bits = np.unpackbits(words.view(np.uint8), axis=1).astype(np.float64)
    inter = bits @ bits.T
    counts = _popcount_rows(words).astype(np.float64)
    union = counts[:, None] + counts[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        d = np.where(union == 0, 0.0, 1.0 - inter / np.where(union == 0, 1.0, union))
    d[np.diag_indices(n)] = 0.0
    return d


def cosine_matrix(X: np.ndarray) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    norms = np.sqrt(np.einsum("ij,ij->i", X, X))
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    d = 1.0 - (X @ X.T) / np.outer(safe, safe)
    d = np.maximum(d, 0.0)
    d[zero[:, None] ^ zero[None, :]] = 1.0
    d[zero[:, None] & zero[None, :]] = 0.0
    d[np.diag_indices(n)] = 0.0
    return d


def _find(parent: list[int], x: int) -> int:
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        parent[x], x = root, parent[x]
    return root


def _components_from_edges(n: int, ii: np.ndarray, jj: np.ndarray) -> np.ndarray:
    parent = list(range(n))
    for a, b in zip(ii.tolist(), jj.tolist()):
        ra, rb = _find(parent, a), _find(parent, b)
        if ra != rb:
            if ra < rb:
                parent[rb] = ra
            else:
                parent[ra] = rb
    labels = np.empty(n, dtype=np.int64)
    seen: dict[int, int] = {}
    for i in range(n):
        r = _find(parent, i)
        labels[i] = seen.setdefault(r, len(seen))
    return labels


def threshold_components(D: np.ndarray, gamma: float) -> np.ndarray:
    D = np.asarray(D, dtype=np.float64)
    ii, jj = np.nonzero(np.triu(D < gamma, k=1))
    return _components_from_edges(D.shape[0], ii, jj)


def jaccard_components(words: np.ndarray, gamma: float) -> np.ndarray:
    return threshold_components(jaccard_matrix(words), gamma)
