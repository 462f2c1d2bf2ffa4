"""Ring perception: cyclic bonds and a smallest set of smallest rings."""

from __future__ import annotations

from collections import deque

from .graph import MolecularGraph


def _adjacency(n: int, edges: list[tuple[int, int]]) -> list[list[tuple[int, int]]]:
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for k, (a, b) in enumerate(edges):
        adj[a].append((b, k))
        adj[b].append((a, k))
    return adj


def bridge_edges(n: int, edges: list[tuple[int, int]]) -> set[int]:
    """Indices of edges whose removal disconnects their component (iterative Tarjan)."""
    adj = _adjacency(n, edges)
    disc = [-1] * n
    low = [0] * n
    bridges: set[int] = set()
    timer = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = timer
        timer += 1
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            v, parent_edge, it = stack[-1]
            advanced = False
            for w, k in it:
                if k == parent_edge:
                    continue
                if disc[w] == -1:
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, k, iter(adj[w])))
                    advanced = True
                    break
                low[v] = min(low[v], disc[w])
            if advanced:
                continue
            stack.pop()
            if stack:
                u = stack[-1][0]
                low[u] = min(low[u], low[v])
                if low[v] > disc[u]:
                    bridges.add(parent_edge)
    return bridges


def ring_bond_flags(graph: MolecularGraph) -> list[bool]:
    edges = [(b.a, b.b) for b in graph.bonds]
    bridges = bridge_edges(len(graph.atoms), edges)
    return [k not in bridges for k in range(len(edges))]


def ring_atom_flags(graph: MolecularGraph) -> list[bool]:
    flags = [False] * len(graph.atoms)
    for bond, cyclic in zip(graph.bonds, ring_bond_flags(graph)):
        if cyclic:
            flags[bond.a] = flags[bond.b] = True
    return flags


def _shortest_cycle_through(adj, n: int, edge: tuple[int, int], k_skip: int) -> list[int] | None:
    """Shortest path between the endpoints of ``edge`` avoiding the edge itself."""
    src, dst = edge
    prev = [-1] * n
    seen = [False] * n
    seen[src] = True
    q = deque([src])
    while q:
        v = q.popleft()
        if v == dst:
            break
        for w, k in sorted(adj[v]):
            if k == k_skip or seen[w]:
                continue
            seen[w] = True
            prev[w] = v
            q.append(w)
    if not seen[dst]:
        return None
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    return path[::-1]


def sssr(graph: MolecularGraph) -> list[tuple[int, ...]]:
    """Smallest set of smallest rings as atom-index cycles.

    Candidate rings are the shortest cycles through each ring bond; they are
    accepted in size order when linearly independent (over GF(2)) of the
    rings already chosen, until the cycle rank is reached.  This is exact for
    the fused and bridged ring systems found in drug-like ligands.
    """
    n = len(graph.atoms)
    edges = [(b.a, b.b) for b in graph.bonds]
    if not edges:
        return []
    adj = _adjacency(n, edges)
    cyclic = ring_bond_flags(graph)
    edge_index = {}
    for k, (a, b) in enumerate(edges):
        edge_index[(a, b)] = edge_index[(b, a)] = k

    # cycle rank = E - V + C over the atoms that take part
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    components = len({find(i) for i in range(n)})
    rank = len(edges) - n + components
    if rank == 0:
        return []

    candidates = {}
    for k, (a, b) in enumerate(edges):
        if not cyclic[k]:
            continue
        path = _shortest_cycle_through(adj, n, (a, b), k)
        if path is None:
            continue
        mask = 1 << k
        for u, v in zip(path, path[1:]):
            mask |= 1 << edge_index[(u, v)]
        candidates.setdefault(mask, tuple(path))

    rings: list[tuple[int, ...]] = []
    basis: dict[int, int] = {}  # pivot bit -> reduced vector
    for mask, path in sorted(candidates.items(), key=lambda kv: (len(kv[1]), sorted(kv[1]))):
        v = mask
        while v:
            pivot = v.bit_length() - 1
            if pivot in basis:
                v ^= basis[pivot]
            else:
                basis[pivot] = v
                rings.append(path)
                break
        if len(rings) == rank:
            break
    return rings
