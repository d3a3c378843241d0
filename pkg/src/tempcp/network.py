"""Temporal networks stored as dense per-layer adjacency matrices.

The on-disk edge-list format is plain text: lines starting with ``#`` are
comments, the first data line is ``n L``, and every following line is
``layer i j`` with 0-indexed integers.  Duplicate edge lines collapse to a
single edge, and ``(i, j)`` implies ``(j, i)``.
"""

from __future__ import annotations

import numpy as np

__all__ = ["TemporalNetwork", "EdgeListError", "load_network", "save_network"]


class EdgeListError(ValueError):
    """Malformed or invalid edge-list data, with file/line context when known."""

    def __init__(self, message: str, path=None, line: int | None = None):
        prefix = ""
        if path is not None:
            prefix = f"{path}: "
        if line is not None:
            prefix += f"line {line}: "
        super().__init__(prefix + message)
        self.path = path
        self.line = line


class TemporalNetwork:
    """An undirected simple network on a fixed node set, one layer per time step.

    Every layer shares the same ``n`` nodes; isolated nodes are legal and keep
    their row in every layer.  The adjacency tensor has shape ``(L, n, n)``,
    is symmetric per layer with a zero diagonal, and is frozen after
    construction, so instances can be shared read-only between chains.

    All node and layer indices in this package are 0-based.
    """

    __slots__ = ("n", "L", "adj")

    def __init__(self, adj):
        adj = np.ascontiguousarray(adj, dtype=np.uint8)
        if adj.ndim != 3 or adj.shape[1] != adj.shape[2]:
            raise ValueError(f"adjacency must have shape (L, n, n), got {adj.shape}")
        L, n, _ = adj.shape
        if L < 1 or n < 1:
            raise ValueError("need at least one node and one layer")
        if adj.max() > 1:
            raise ValueError("adjacency entries must be 0 or 1")
        if (adj != adj.transpose(0, 2, 1)).any():
            raise ValueError("every layer must be symmetric")
        if any(adj[ell].diagonal().any() for ell in range(L)):
            raise ValueError("self-edges are not allowed")
        self.n = int(n)
        self.L = int(L)
        adj.setflags(write=False)
        self.adj = adj

    @classmethod
    def from_edges(cls, n: int, L: int, edges) -> "TemporalNetwork":
        """Build a network from an iterable of (layer, i, j) triples."""
        adj = np.zeros((L, n, n), dtype=np.uint8)
        for layer, i, j in edges:
            if not (0 <= layer < L):
                raise ValueError(f"layer index {layer} out of range [0, {L})")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"node index out of range [0, {n}): ({i}, {j})")
            if i == j:
                raise ValueError(f"self-edge ({i}, {i}) in layer {layer}")
            adj[layer, i, j] = 1
            adj[layer, j, i] = 1
        return cls(adj)

    def edge_count(self, layer: int) -> int:
        """Number of unordered adjacent pairs in ``layer``."""
        if not (0 <= layer < self.L):
            raise ValueError(f"layer index {layer} out of range [0, {self.L})")
        return int(self.adj[layer].sum()) // 2

    def edge_counts(self) -> np.ndarray:
        return np.array([self.edge_count(ell) for ell in range(self.L)])

    def density(self, layer: int) -> float:
        pairs = self.n * (self.n - 1) // 2
        return self.edge_count(layer) / pairs if pairs else 0.0

    def edges(self):
        """Yield (layer, i, j) with i < j, sorted."""
        for ell in range(self.L):
            ii, jj = np.nonzero(np.triu(self.adj[ell], k=1))
            for i, j in zip(ii.tolist(), jj.tolist()):
                yield ell, i, j

    def __eq__(self, other):
        if not isinstance(other, TemporalNetwork):
            return NotImplemented
        return self.n == other.n and self.L == other.L and np.array_equal(self.adj, other.adj)

    def __hash__(self):
        return hash((self.n, self.L, self.adj.tobytes()))

    def __repr__(self):
        return f"TemporalNetwork(n={self.n}, L={self.L}, edges={self.edge_counts().tolist()})"


def load_network(path) -> TemporalNetwork:
    """Read an edge-list file and return a validated :class:`TemporalNetwork`.

    Raises :class:`EdgeListError` with the offending line number on malformed
    input, out-of-range indices, or self-edges.
    """
    header = None
    adj = None
    n = L = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if header is None:
                if len(parts) != 2:
                    raise EdgeListError("header must be 'n L'", path, lineno)
                try:
                    n, L = int(parts[0]), int(parts[1])
                except ValueError:
                    raise EdgeListError("header must contain two integers", path, lineno) from None
                if n < 1 or L < 1:
                    raise EdgeListError(f"n and L must be positive, got n={n} L={L}", path, lineno)
                header = (n, L)
                adj = np.zeros((L, n, n), dtype=np.uint8)
                continue
            if len(parts) != 3:
                raise EdgeListError("edge line must be 'layer i j'", path, lineno)
            try:
                layer, i, j = (int(p) for p in parts)
            except ValueError:
                raise EdgeListError("edge line must contain three integers", path, lineno) from None
            if not (0 <= layer < L):
                raise EdgeListError(f"layer index {layer} out of range [0, {L})", path, lineno)
            if not (0 <= i < n and 0 <= j < n):
                raise EdgeListError(f"node index out of range [0, {n}): ({i}, {j})", path, lineno)
            if i == j:
                raise EdgeListError(f"self-edge ({i}, {i})", path, lineno)
            adj[layer, i, j] = 1
            adj[layer, j, i] = 1
    if header is None:
        raise EdgeListError("empty file: missing 'n L' header", path)
    return TemporalNetwork(adj)


def save_network(net: TemporalNetwork, path) -> None:
    """Write ``net`` in the edge-list format with sorted (layer, i, j) lines."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{net.n} {net.L}\n")
        for layer, i, j in net.edges():
            fh.write(f"{layer} {i} {j}\n")
