"""Group assignments over node-layers and their sufficient statistics.

A node-layer's memberships in groups ``1..k-1`` are packed into an integer
bit pattern (bit ``r-1`` holds group ``r``); group 0 is implicit and contains
every node-layer, so ``k = 1`` means "no stored groups".  The edge
probability model only ever consults the *highest common group* of a pair,
i.e. the largest label whose bit is set in the AND of the two patterns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .moves import MoveKind, MoveProposal

__all__ = [
    "GroupAssignment",
    "SufficientStats",
    "highest_common_group",
    "compute_stats",
    "apply_move",
    "save_assignment",
    "load_assignment",
]

MAX_K = 64  # patterns live in int64 bit masks


class GroupAssignment:
    """Membership patterns for all node-layers plus the group count ``k``."""

    __slots__ = ("k", "patterns")

    def __init__(self, k: int, patterns):
        patterns = np.array(patterns, dtype=np.int64)
        if patterns.ndim != 2:
            raise ValueError(f"patterns must have shape (L, n), got {patterns.shape}")
        if not (1 <= k <= MAX_K):
            raise ValueError(f"k must be in [1, {MAX_K}], got {k}")
        if patterns.min(initial=0) < 0 or patterns.max(initial=0) >= (1 << (k - 1)):
            raise ValueError(f"patterns must be in [0, 2^(k-1)) for k={k}")
        self.k = int(k)
        self.patterns = patterns

    @classmethod
    def empty(cls, n: int, L: int, k: int = 1) -> "GroupAssignment":
        return cls(k, np.zeros((L, n), dtype=np.int64))

    @classmethod
    def random(cls, n: int, L: int, k: int, rng: np.random.Generator) -> "GroupAssignment":
        """Each indicator Bernoulli(1/2), i.e. patterns uniform on [0, 2^(k-1))."""
        if k - 1 <= 62:
            pats = rng.integers(0, 1 << (k - 1), size=(L, n), dtype=np.int64)
        else:  # compose two draws; a single one would overflow int64
            lo = rng.integers(0, 1 << 62, size=(L, n), dtype=np.int64)
            hi = rng.integers(0, 1 << (k - 63), size=(L, n), dtype=np.int64)
            pats = lo | (hi << 62)
        return cls(k, pats)

    @property
    def n(self) -> int:
        return self.patterns.shape[1]

    @property
    def L(self) -> int:
        return self.patterns.shape[0]

    def copy(self) -> "GroupAssignment":
        return GroupAssignment(self.k, self.patterns.copy())

    def indicator(self, r: int) -> np.ndarray:
        """Boolean (L, n) membership array for stored group ``r`` (1..k-1)."""
        if not (1 <= r < self.k):
            raise ValueError(f"group label {r} out of range [1, {self.k})")
        return (self.patterns >> (r - 1)) & 1 == 1

    def member(self, r: int, i: int, layer: int) -> bool:
        if r == 0:
            return True
        return bool((int(self.patterns[layer, i]) >> (r - 1)) & 1)

    def pattern(self, i: int, layer: int) -> int:
        return int(self.patterns[layer, i])

    def group_sizes(self, layer: int) -> list[int]:
        """Members of each stored group 1..k-1 in ``layer``."""
        return [int(self.indicator(r)[layer].sum()) for r in range(1, self.k)]

    def __eq__(self, other):
        if not isinstance(other, GroupAssignment):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.patterns, other.patterns)

    def __repr__(self):
        return f"GroupAssignment(k={self.k}, n={self.n}, L={self.L})"


def highest_common_group(g: GroupAssignment, i: int, j: int, layer: int) -> int:
    """Largest group containing both node-layers (i, layer) and (j, layer)."""
    if i == j:
        raise ValueError("highest_common_group needs two distinct nodes")
    common = int(g.patterns[layer, i]) & int(g.patterns[layer, j])
    return common.bit_length()


def _hcg_vector(common: np.ndarray, k: int) -> np.ndarray:
    """Highest-set-bit labels (0 if none) for an int64 array of ANDed patterns."""
    h = np.zeros(common.shape, dtype=np.int64)
    for b in range(k - 1):
        h[(common >> b) & 1 == 1] = b + 1
    return h


@dataclass(eq=False)
class SufficientStats:
    """Everything the likelihood and group-evolution prior need.

    ``t[r, ell]`` counts unordered node pairs in layer ``ell`` whose highest
    common group is ``r``; ``m[r, ell]`` counts the adjacent subset of those
    pairs.  ``n1[r, ell]`` is the size of stored group ``r`` in ``ell``, and
    ``c00/c11[r, ell]`` count nodes whose group-``r`` indicator stays 0/1
    from layer ``ell-1`` to ``ell``.  Rows 0 of ``n1``/``c00``/``c11`` and
    column 0 of ``c00``/``c11`` are structurally unused and kept at zero.
    """

    t: np.ndarray
    m: np.ndarray
    n1: np.ndarray
    c00: np.ndarray
    c11: np.ndarray

    @property
    def k(self) -> int:
        return self.t.shape[0]

    @property
    def L(self) -> int:
        return self.t.shape[1]

    def copy(self) -> "SufficientStats":
        return SufficientStats(
            self.t.copy(), self.m.copy(), self.n1.copy(), self.c00.copy(), self.c11.copy()
        )

    def __eq__(self, other):
        if not isinstance(other, SufficientStats):
            return NotImplemented
        return (
            np.array_equal(self.t, other.t)
            and np.array_equal(self.m, other.m)
            and np.array_equal(self.n1, other.n1)
            and np.array_equal(self.c00, other.c00)
            and np.array_equal(self.c11, other.c11)
        )


def _layer_pair_counts(net, patterns_layer: np.ndarray, k: int, layer: int):
    n = patterns_layer.shape[0]
    common = patterns_layer[:, None] & patterns_layer[None, :]
    h = _hcg_vector(common, k)
    iu = np.triu_indices(n, k=1)
    hv = h[iu]
    t = np.bincount(hv, minlength=k).astype(np.int64)
    m = np.bincount(hv, weights=net.adj[layer][iu], minlength=k).astype(np.int64)
    return t, m


def compute_stats(net, g: GroupAssignment) -> SufficientStats:
    """Full recomputation of all sufficient statistics from scratch."""
    if g.n != net.n or g.L != net.L:
        raise ValueError(
            f"assignment dimensioned ({g.n}, {g.L}) does not match network ({net.n}, {net.L})"
        )
    k, L, n = g.k, g.L, g.n
    t = np.zeros((k, L), dtype=np.int64)
    m = np.zeros((k, L), dtype=np.int64)
    n1 = np.zeros((k, L), dtype=np.int64)
    c00 = np.zeros((k, L), dtype=np.int64)
    c11 = np.zeros((k, L), dtype=np.int64)
    for ell in range(L):
        t[:, ell], m[:, ell] = _layer_pair_counts(net, g.patterns[ell], k, ell)
    for r in range(1, k):
        ind = g.indicator(r)
        n1[r] = ind.sum(axis=1)
        for ell in range(1, L):
            c00[r, ell] = int((~ind[ell - 1] & ~ind[ell]).sum())
            c11[r, ell] = int((ind[ell - 1] & ind[ell]).sum())
    return SufficientStats(t, m, n1, c00, c11)


def _refresh_layer(stats: SufficientStats, net, g: GroupAssignment, layer: int) -> None:
    """Recompute the cells of ``stats`` affected by a change inside ``layer``."""
    k, L, n = g.k, g.L, g.n
    stats.t[:, layer], stats.m[:, layer] = _layer_pair_counts(net, g.patterns[layer], k, layer)
    for r in range(1, k):
        ind = g.indicator(r)
        stats.n1[r, layer] = int(ind[layer].sum())
        if layer >= 1:
            stats.c00[r, layer] = int((~ind[layer - 1] & ~ind[layer]).sum())
            stats.c11[r, layer] = int((ind[layer - 1] & ind[layer]).sum())
        if layer + 1 < L:
            stats.c00[r, layer + 1] = int((~ind[layer] & ~ind[layer + 1]).sum())
            stats.c11[r, layer + 1] = int((ind[layer] & ind[layer + 1]).sum())


def _toggle(g: GroupAssignment, stats: SufficientStats, move: MoveProposal, net) -> None:
    r, layer, i = move.r, move.layer, move.node
    k, L, n = g.k, g.L, g.n
    if not (1 <= r < k):
        raise ValueError(f"group label {r} out of range [1, {k})")
    bit = 1 << (r - 1)
    old = int(g.patterns[layer, i])
    adding = move.kind == MoveKind.ADD_NODE
    if adding == bool(old & bit):
        raise ValueError(f"{move.kind.name} at (layer={layer}, node={i}, r={r}) is not applicable")
    new = old ^ bit

    pl = g.patterns[layer]
    h_old = _hcg_vector(old & pl, k)
    h_new = _hcg_vector(new & pl, k)
    mask = h_old != h_new
    mask[i] = False
    if mask.any():
        arow = net.adj[layer, i].astype(np.float64)
        stats.t[:, layer] += np.bincount(h_new[mask], minlength=k)
        stats.t[:, layer] -= np.bincount(h_old[mask], minlength=k)
        stats.m[:, layer] += np.bincount(h_new[mask], weights=arow[mask], minlength=k).astype(np.int64)
        stats.m[:, layer] -= np.bincount(h_old[mask], weights=arow[mask], minlength=k).astype(np.int64)

    sign = 1 if adding else -1
    stats.n1[r, layer] += sign
    if layer >= 1:
        b_prev = (int(g.patterns[layer - 1, i]) >> (r - 1)) & 1
        stats.c00[r, layer] -= sign * (1 - b_prev)
        stats.c11[r, layer] += sign * b_prev
    if layer + 1 < L:
        b_next = (int(g.patterns[layer + 1, i]) >> (r - 1)) & 1
        stats.c00[r, layer + 1] -= sign * (1 - b_next)
        stats.c11[r, layer + 1] += sign * b_next
    g.patterns[layer, i] = new


def _add_group(g: GroupAssignment, stats: SufficientStats, r: int) -> None:
    k, L, n = g.k, g.L, g.n
    if not (1 <= r <= k):
        raise ValueError(f"insertion position {r} out of range [1, {k}]")
    if k >= MAX_K:
        raise ValueError(f"cannot exceed {MAX_K} groups")
    P = g.patterns
    low_mask = (1 << (r - 1)) - 1
    P[:] = ((P >> (r - 1)) << r) | (P & low_mask)
    g.k = k + 1
    stats.t = np.insert(stats.t, r, 0, axis=0)
    stats.m = np.insert(stats.m, r, 0, axis=0)
    stats.n1 = np.insert(stats.n1, r, 0, axis=0)
    c00_row = np.zeros(L, dtype=np.int64)
    c00_row[1:] = n
    stats.c00 = np.insert(stats.c00, r, c00_row, axis=0)
    stats.c11 = np.insert(stats.c11, r, 0, axis=0)


def _remove_group(g: GroupAssignment, stats: SufficientStats, r: int) -> None:
    k = g.k
    if not (1 <= r < k):
        raise ValueError(f"group label {r} out of range [1, {k})")
    if g.indicator(r).any():
        raise ValueError(f"cannot remove non-empty group {r}")
    P = g.patterns
    low_mask = (1 << (r - 1)) - 1
    P[:] = ((P >> r) << (r - 1)) | (P & low_mask)
    g.k = k - 1
    stats.t = np.delete(stats.t, r, axis=0)
    stats.m = np.delete(stats.m, r, axis=0)
    stats.n1 = np.delete(stats.n1, r, axis=0)
    stats.c00 = np.delete(stats.c00, r, axis=0)
    stats.c11 = np.delete(stats.c11, r, axis=0)


def _multi_swap(g: GroupAssignment, stats: SufficientStats, move: MoveProposal, net) -> None:
    layer, pa, pb = move.layer, move.pat_a, move.pat_b
    width = 1 << (g.k - 1)
    if not (0 <= pa < width and 0 <= pb < width):
        raise ValueError(f"patterns ({pa}, {pb}) out of range for k={g.k}")
    if pa == pb:
        return
    pl = g.patterns[layer]
    sel_a = pl == pa
    sel_b = pl == pb
    pl[sel_a] = pb
    pl[sel_b] = pa
    _refresh_layer(stats, net, g, layer)


def apply_move(g: GroupAssignment, stats: SufficientStats, move: MoveProposal, net) -> None:
    """Apply ``move`` in place, keeping ``stats`` identical to a fresh recompute.

    Raises ``ValueError`` on moves that are invalid for the current state
    (e.g. removing a non-empty group or toggling a membership to its current
    value).
    """
    if move.kind == MoveKind.NOOP:
        return
    if move.kind in (MoveKind.ADD_NODE, MoveKind.REMOVE_NODE):
        _toggle(g, stats, move, net)
    elif move.kind == MoveKind.ADD_GROUP:
        _add_group(g, stats, move.r)
    elif move.kind == MoveKind.REMOVE_GROUP:
        _remove_group(g, stats, move.r)
    elif move.kind == MoveKind.MULTI_SWAP:
        _multi_swap(g, stats, move, net)
    else:
        raise ValueError(f"unknown move kind {move.kind}")


def save_assignment(g: GroupAssignment, path) -> None:
    """Write ``k <value>`` then one ``layer node pattern`` line per node-layer."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"k {g.k}\n")
        for ell in range(g.L):
            for i in range(g.n):
                fh.write(f"{ell} {i} {int(g.patterns[ell, i])}\n")


def load_assignment(path) -> GroupAssignment:
    k = None
    triples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if k is None:
                if len(parts) != 2 or parts[0] != "k":
                    raise ValueError(f"{path}: line {lineno}: expected 'k <value>' header")
                k = int(parts[1])
                continue
            if len(parts) != 3:
                raise ValueError(f"{path}: line {lineno}: expected 'layer node pattern'")
            triples.append((int(parts[0]), int(parts[1]), int(parts[2])))
    if k is None:
        raise ValueError(f"{path}: missing 'k <value>' header")
    if not triples:
        raise ValueError(f"{path}: no node-layer records")
    L = max(t[0] for t in triples) + 1
    n = max(t[1] for t in triples) + 1
    if len(triples) != n * L:
        raise ValueError(f"{path}: expected {n * L} node-layer records, found {len(triples)}")
    patterns = np.zeros((L, n), dtype=np.int64)
    for ell, i, pat in triples:
        patterns[ell, i] = pat
    return GroupAssignment(k, patterns)
