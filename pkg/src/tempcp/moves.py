"""MCMC move proposals and their exact proposal probabilities.

Three families of moves drive the samplers: single node-layer membership
toggles (which double as empty-group removals when drawn from layer 0),
empty-group insertions at a uniform label position, and within-layer pattern
swaps that exchange the memberships of every node-layer whose full pattern
equals one chosen pattern with those equal to another.

The functions here are the slow, readable reference implementations used by
the enumeration oracle and the proposal-measure tests; the production
samplers draw the same distributions inside the compiled kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

__all__ = [
    "MoveKind",
    "MoveProposal",
    "MODE_MAIN",
    "MODE_FIXED_K",
    "MODE_NO_MULTI_NODE",
    "group_addition_rate",
    "propose_standard",
    "propose_group_addition",
    "propose_multi_node",
    "propose_move",
    "proposal_log_prob",
]

MODE_MAIN = "main"
MODE_FIXED_K = "fixed-k"
MODE_NO_MULTI_NODE = "no-multi-node"


class MoveKind(IntEnum):
    NOOP = 0
    ADD_NODE = 1
    REMOVE_NODE = 2
    ADD_GROUP = 3
    REMOVE_GROUP = 4
    MULTI_SWAP = 5


@dataclass(frozen=True)
class MoveProposal:
    """One proposed move.

    ``r`` is a group label (1..k-1 for node moves, 1..k for group insertion),
    ``layer``/``node`` locate a membership toggle, and ``pat_a``/``pat_b`` are
    the two full patterns exchanged by a multi-node swap.  Unused fields are
    -1.
    """

    kind: MoveKind
    r: int = -1
    layer: int = -1
    node: int = -1
    pat_a: int = -1
    pat_b: int = -1

    @classmethod
    def noop(cls) -> "MoveProposal":
        return cls(MoveKind.NOOP)


def group_addition_rate(k: int, n: int) -> float:
    """Probability that a non-multi-node step proposes a group addition."""
    return 1.0 / (2.0 * k * (n + 1))


def propose_standard(g, rng: np.random.Generator, fixed_k: bool = False) -> MoveProposal:
    """Draw a standard move: toggle one membership, or remove an empty group.

    Layer and group are uniform.  In layer 0 an add/remove coin is flipped
    and the node-layer is drawn uniformly from the eligible set; a saturated
    or empty eligible set yields a no-op, except that (in variable-k mode) a
    group that is empty in *every* layer is proposed for removal.
    """
    n, L, k = g.n, g.L, g.k
    layer = int(rng.integers(L))
    if k == 1:
        return MoveProposal.noop()
    r = 1 + int(rng.integers(k - 1))
    ind = g.indicator(r)
    if layer == 0:
        if rng.random() < 0.5:  # add
            absent = np.flatnonzero(~ind[0])
            if absent.size == 0:
                return MoveProposal.noop()
            i = int(absent[rng.integers(absent.size)])
            return MoveProposal(MoveKind.ADD_NODE, r=r, layer=0, node=i)
        members = np.flatnonzero(ind[0])
        if members.size == 0:
            if fixed_k or ind.any():
                return MoveProposal.noop()
            return MoveProposal(MoveKind.REMOVE_GROUP, r=r)
        i = int(members[rng.integers(members.size)])
        return MoveProposal(MoveKind.REMOVE_NODE, r=r, layer=0, node=i)
    i = int(rng.integers(n))
    if ind[layer, i]:
        return MoveProposal(MoveKind.REMOVE_NODE, r=r, layer=layer, node=i)
    return MoveProposal(MoveKind.ADD_NODE, r=r, layer=layer, node=i)


def propose_group_addition(g, rng: np.random.Generator, k_max: int) -> MoveProposal:
    """Insert a new empty group at a uniform position in 1..k (no-op at the cap)."""
    if g.k >= k_max:
        return MoveProposal.noop()
    r = 1 + int(rng.integers(g.k))
    return MoveProposal(MoveKind.ADD_GROUP, r=r)


def _uniform_pattern(k: int, rng: np.random.Generator) -> int:
    if k - 1 <= 62:
        return int(rng.integers(1 << (k - 1)))
    lo = int(rng.integers(1 << 62))
    hi = int(rng.integers(1 << (k - 63)))
    return lo | (hi << 62)


def propose_multi_node(g, rng: np.random.Generator, restrict_layer1: bool = False) -> MoveProposal:
    """Draw two uniform pattern subsets and a layer for a pattern swap."""
    pat_a = _uniform_pattern(g.k, rng)
    pat_b = _uniform_pattern(g.k, rng)
    if restrict_layer1:
        if g.L < 2:
            return MoveProposal.noop()
        layer = 1 + int(rng.integers(g.L - 1))
    else:
        layer = int(rng.integers(g.L))
    return MoveProposal(MoveKind.MULTI_SWAP, layer=layer, pat_a=pat_a, pat_b=pat_b)


def propose_move(
    g,
    rng: np.random.Generator,
    mode: str = MODE_MAIN,
    multi_node_prob: float = 0.0,
    k_max: int = 64,
    restrict_layer1: bool = False,
) -> MoveProposal:
    """Draw one move from the mixture of the configured sampler mode.

    Group bookkeeping is tied to the first layer: the addition branch draws a
    layer uniformly and only materializes a proposal when it lands on layer 0
    (mirroring the removal path), so both directions of a group-count change
    carry the same 1/L proposal factor.
    """
    if mode == MODE_FIXED_K:
        return propose_standard(g, rng, fixed_k=True)
    if mode == MODE_MAIN and rng.random() < multi_node_prob:
        return propose_multi_node(g, rng, restrict_layer1)
    if rng.random() < 1.0 - group_addition_rate(g.k, g.n):
        return propose_standard(g, rng, fixed_k=False)
    if int(rng.integers(g.L)) != 0:
        return MoveProposal.noop()
    return propose_group_addition(g, rng, k_max)


def _standard_move_log_prob(g, move: MoveProposal) -> float:
    """Log probability of a concrete standard move given the standard branch."""
    n, L, k = g.n, g.L, g.k
    if k == 1:
        raise ValueError("no standard moves exist at k=1")
    base = -math.log(L) - math.log(k - 1)
    if move.kind == MoveKind.REMOVE_GROUP:
        # layer 0, remove coin; the group is empty so the move is then forced
        return base - math.log(2.0)
    ind = g.indicator(move.r)
    n1_first = int(ind[0].sum())
    if move.layer == 0:
        if move.kind == MoveKind.ADD_NODE:
            eligible = n - n1_first
        else:
            eligible = n1_first
        if eligible == 0:
            return -math.inf
        return base - math.log(2.0) - math.log(eligible)
    return base - math.log(n)


def proposal_log_prob(
    g,
    move: MoveProposal,
    mode: str = MODE_MAIN,
    multi_node_prob: float = 0.0,
    k_max: int = 64,
    restrict_layer1: bool = False,
) -> float:
    """Exact log probability of drawing ``move`` from state ``g``.

    This is the mechanical probability of the concrete draw, i.e. the product
    of the mixture weight and the within-branch selection probabilities.  For
    a multi-node swap it is the probability of the ordered pair
    ``(pat_a, pat_b)``; the unordered swap is twice as likely when the two
    patterns differ.  No-op proposals are not supported here (their total
    probability is whatever mass is left over).
    """
    n, k = g.n, g.k
    rate = group_addition_rate(k, n)
    if mode == MODE_FIXED_K:
        if move.kind in (MoveKind.ADD_GROUP, MoveKind.REMOVE_GROUP, MoveKind.MULTI_SWAP):
            return -math.inf
        return _standard_move_log_prob(g, move)
    mix_standard = math.log1p(-rate)
    mix_addition = math.log(rate)
    if mode == MODE_MAIN:
        if multi_node_prob > 0.0:
            mix_standard += math.log1p(-multi_node_prob)
            mix_addition += math.log1p(-multi_node_prob)
        if move.kind == MoveKind.MULTI_SWAP:
            if multi_node_prob <= 0.0:
                return -math.inf
            n_layers = g.L - 1 if restrict_layer1 else g.L
            if n_layers < 1:
                return -math.inf
            return (
                math.log(multi_node_prob)
                - math.log(n_layers)
                - 2.0 * (k - 1) * math.log(2.0)
            )
    elif move.kind == MoveKind.MULTI_SWAP:
        return -math.inf
    if move.kind == MoveKind.ADD_GROUP:
        if k >= k_max:
            return -math.inf
        return mix_addition - math.log(g.L) - math.log(k)
    return mix_standard + _standard_move_log_prob(g, move)
