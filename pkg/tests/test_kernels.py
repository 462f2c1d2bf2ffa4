import numpy as np
import pytest

from kgaffinity import _pykernels, kernels

try:
    from kgaffinity import _ckernels
except ImportError:  # extension not built
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


def dfs_components(D, gamma):
    n = len(D)
    labels = [-1] * n
    nxt = 0
    for start in range(n):
        if labels[start] >= 0:
            continue
        stack = [start]
        labels[start] = nxt
        while stack:
            i = stack.pop()
            for j in range(n):
                if labels[j] < 0 and D[i][j] < gamma:
                    labels[j] = nxt
                    stack.append(j)
        nxt += 1
    return labels


def same_partition(a, b):
    a, b = list(a), list(b)
    pairs_a = {(i, j) for i in range(len(a)) for j in range(len(a)) if a[i] == a[j]}
    pairs_b = {(i, j) for i in range(len(b)) for j in range(len(b)) if b[i] == b[j]}
    return pairs_a == pairs_b


def random_distances(rng, n):
    X = rng.random((n, 2))
    return np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))


def test_threshold_components_match_dfs(rng):
    for _ in range(30):
        n = int(rng.integers(1, 25))
        D = random_distances(rng, n)
        gamma = float(rng.uniform(0.05, 0.4))
        labels = kernels.threshold_components(D, gamma)
        assert same_partition(labels, dfs_components(D, gamma))
        # dense labels in order of first appearance
        firsts = [int(labels[i]) for i in range(n) if int(labels[i]) not in labels[:i]]
        assert firsts == list(range(len(firsts)))


def test_jaccard_matrix_brute_force(rng):
    bits = rng.random((12, 130)) < 0.2
    bits[3] = False
    bits[7] = False
    D = kernels.jaccard_matrix(bits)
    for i in range(12):
        for j in range(12):
            inter = np.sum(bits[i] & bits[j])
            union = np.sum(bits[i] | bits[j])
            expect = 0.0 if union == 0 else 1.0 - inter / union
            assert D[i, j] == pytest.approx(expect, abs=1e-15)
    assert D[3, 7] == 0.0


def test_cosine_matrix_brute_force(rng):
    X = rng.random((9, 20))
    X[4] = 0.0
    D = kernels.cosine_matrix(X)
    for i in range(9):
        for j in range(9):
            if i == j:
                assert D[i, j] == 0.0
                continue
            ni, nj = np.linalg.norm(X[i]), np.linalg.norm(X[j])
            if ni == 0 or nj == 0:
                assert D[i, j] == 1.0
            else:
                assert D[i, j] == pytest.approx(max(0.0, 1 - X[i] @ X[j] / (ni * nj)), abs=1e-14)


def test_jaccard_components_equal_matrix_route(rng):
    for _ in range(10):
        bits = rng.random((30, 64)) < 0.15
        gamma = float(rng.uniform(0.3, 0.9))
        a = kernels.jaccard_components(bits, gamma)
        b = kernels.threshold_components(kernels.jaccard_matrix(bits), gamma)
        assert list(a) == list(b)


@needs_ext
def test_backends_agree(rng):
    for _ in range(10):
        bits = rng.random((20, 200)) < 0.1
        words = kernels.pack_fingerprints(bits)
        assert np.array_equal(_ckernels.jaccard_matrix(words), _pykernels.jaccard_matrix(words))
        X = rng.random((15, 30))
        assert np.allclose(_ckernels.cosine_matrix(X), _pykernels.cosine_matrix(X), atol=1e-14)
        D = random_distances(rng, 20)
        assert list(_ckernels.threshold_components(D, 0.2)) == list(_pykernels.threshold_components(D, 0.2))
        assert list(_ckernels.jaccard_components(words, 0.8)) == list(_pykernels.jaccard_components(words, 0.8))
