"""Communication-network topologies for distributed training.

Nodes are dense 0-based integers. Graphs are undirected, simple (no
self-loops) and must be connected; every constructor validates this.
Neighbor lists are kept sorted ascending so per-neighbor iteration order,
and hence every downstream computation, is reproducible.
"""

from dataclasses import dataclass, field

import numpy as np


class InvalidTopologyError(ValueError):
    """Raised for graphs that violate the network invariants."""


class InvalidEdgeError(InvalidTopologyError):
    """Raised for malformed edges (out of range, duplicate, self-loop)."""


@dataclass(frozen=True)
class Network:
    """Undirected connected communication graph.

    Attributes:
        node_count: number of nodes V.
        edges: sorted tuple of undirected edges (u, v) with u < v.
        neighbors: per-node tuple of sorted neighbor ids.
    """

    node_count: int
    edges: tuple = field(default_factory=tuple)
    neighbors: tuple = field(default_factory=tuple)

    def degree(self, v: int) -> int:
        return len(self.neighbors[v])

    def adjacency_matrix(self) -> np.ndarray:
        """Dense symmetric boolean adjacency with empty diagonal."""
        adj = np.zeros((self.node_count, self.node_count), dtype=bool)
        for u, v in self.edges:
            adj[u, v] = adj[v, u] = True
        return adj


def _validate_and_build(n: int, edges) -> Network:
    if n < 1:
        raise InvalidTopologyError(f"need at least 1 node, got {n}")
    seen = set()
    neighbors = [[] for _ in range(n)]
    canon = []
    for e in edges:
        u, v = int(e[0]), int(e[1])
        if not (0 <= u < n and 0 <= v < n):
            raise InvalidEdgeError(f"edge ({u},{v}) out of range for n={n}")
        if u == v:
            raise InvalidEdgeError(f"self-loop at node {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise InvalidEdgeError(f"duplicate edge ({u},{v})")
        seen.add(key)
        canon.append(key)
        neighbors[u].append(v)
        neighbors[v].append(u)
    canon.sort()
    if n > 1:
        if any(len(b) == 0 for b in neighbors):
            raise InvalidTopologyError("isolated node: every node needs >= 1 neighbor")
        if not _connected(n, neighbors):
            raise InvalidTopologyError("graph is not connected")
    return Network(
        node_count=n,
        edges=tuple(canon),
        neighbors=tuple(tuple(sorted(b)) for b in neighbors),
    )


def _connected(n: int, neighbors) -> bool:
    """Breadth-first reachability from node 0."""
    visited = [False] * n
    visited[0] = True
    queue = [0]
    while queue:
        u = queue.pop()
        for w in neighbors[u]:
            if not visited[w]:
                visited[w] = True
                queue.append(w)
    return all(visited)


def build_complete(n: int) -> Network:
    """Fully connected graph on ``n`` >= 2 nodes."""
    if n < 2:
        raise InvalidTopologyError(f"complete graph needs n >= 2, got {n}")
    edges = [(u, v) for u in range(n) for v in range(u + 1, n)]
    return _validate_and_build(n, edges)


def build_regular(n: int, k: int, seed: int = 0) -> Network:
    """Connected k-regular graph on ``n`` nodes.

    Deterministic circulant construction: each node links to its k//2
    nearest ring neighbors on each side; odd ``k`` additionally links
    diametrically opposite nodes (requires even ``n``). ``seed`` is accepted
    for interface stability but the construction is deterministic.
    """
    del seed
    if k < 1 or k >= n:
        raise InvalidTopologyError(f"need 1 <= k < n, got k={k}, n={n}")
    if (n * k) % 2 != 0:
        raise InvalidTopologyError(f"no {k}-regular graph on {n} nodes (n*k odd)")
    edges = set()
    for off in range(1, k // 2 + 1):
        for i in range(n):
            j = (i + off) % n
            edges.add((min(i, j), max(i, j)))
    if k % 2 == 1:
        half = n // 2
        for i in range(half):
            edges.add((i, i + half))
    net = _validate_and_build(n, sorted(edges))
    if any(net.degree(v) != k for v in range(n)):
        raise InvalidTopologyError(f"circulant construction failed for n={n}, k={k}")
    return net


def build_from_edge_list(n: int, edges) -> Network:
    """Network with exactly the given undirected edges, validated."""
    return _validate_and_build(n, edges)


def load_edge_list(path) -> Network:
    """Parse the edge-list text format: first line "n m", then m lines "u v"."""
    with open(path, "r", encoding="utf-8") as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise InvalidTopologyError(f"{path}: expected header 'n m'")
    try:
        n, m = int(tokens[0]), int(tokens[1])
    except ValueError as exc:
        raise InvalidTopologyError(f"{path}: malformed header 'n m'") from exc
    if len(tokens) != 2 + 2 * m:
        raise InvalidTopologyError(
            f"{path}: expected {m} edges ({2 * m} endpoints), got {len(tokens) - 2} tokens"
        )
    try:
        flat = [int(t) for t in tokens[2:]]
    except ValueError as exc:
        raise InvalidTopologyError(f"{path}: non-integer endpoint") from exc
    edges = list(zip(flat[0::2], flat[1::2]))
    return _validate_and_build(n, edges)


def normalized_degree(net: Network, v: int) -> float:
    """Degree of ``v`` divided by the most achievable neighbor count V-1."""
    if not 0 <= v < net.node_count:
        raise InvalidTopologyError(f"node {v} out of range")
    if net.node_count < 2:
        raise InvalidTopologyError("normalized degree undefined for a 1-node network")
    return net.degree(v) / (net.node_count - 1)


def network_degree(net: Network) -> float:
    """Mean normalized degree over all nodes."""
    return sum(normalized_degree(net, v) for v in range(net.node_count)) / net.node_count
