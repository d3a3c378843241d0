"""Exact posterior enumeration on tiny instances and comparison utilities.

The enumerator walks every assignment (optionally every group count up to a
cap), accumulates the unnormalized joint weight of each state in log space
with a max-shift normalization, and exposes the normalized probabilities.
It is the ground truth for the sampler correctness tests.

``log_likelihood_factorial`` is an intentionally independent route to the
marginal likelihood, built on integer factorials rather than lgamma tables,
so a table bug cannot hide behind a shared code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels, model
from .groups import GroupAssignment, compute_stats
from .model import JTable
from .moves import MODE_FIXED_K, MoveKind, MoveProposal, proposal_log_prob

__all__ = [
    "ExactPosterior",
    "StateSpaceError",
    "enumerate_posterior",
    "state_code",
    "log_likelihood_factorial",
    "tv_distance",
    "tv_to_empirical",
    "occupancy_layout",
    "proposal_ratio_check",
]


class StateSpaceError(ValueError):
    """The requested enumeration exceeds the configured state budget."""


def state_code(patterns: np.ndarray, k: int) -> int:
    """Layer-major base-2^(k-1) packing of a pattern grid (matches kernels)."""
    width = 1 << (k - 1)
    code = 0
    for p in np.asarray(patterns).ravel():
        code = code * width + int(p)
    return code


@dataclass
class ExactPosterior:
    """Normalized posterior over (k, assignment) states.

    ``probs[i]`` is a dense array over all pattern grids at ``ks[i]`` groups,
    indexed by :func:`state_code`.  ``log_norm`` is the log normalization
    constant of the unnormalized joint weights.
    """

    n: int
    L: int
    ks: list[int]
    probs: list[np.ndarray]
    log_norm: float

    def prob(self, k: int, patterns) -> float:
        if k not in self.ks:
            return 0.0
        return float(self.probs[self.ks.index(k)][state_code(patterns, k)])

    def prob_of(self, g: GroupAssignment) -> float:
        return self.prob(g.k, g.patterns)

    def support_size(self) -> int:
        return sum(arr.size for arr in self.probs)

    def total(self) -> float:
        return float(sum(arr.sum() for arr in self.probs))

    def items(self, threshold: float = 0.0):
        """Yield ((k, code), prob); guard against huge supports before using."""
        for k, arr in zip(self.ks, self.probs):
            for code, p in enumerate(arr):
                if p > threshold:
                    yield (k, code), float(p)


def enumerate_posterior(
    net,
    jt: JTable,
    k: int | None = None,
    k_cap: int | None = None,
    max_states: int = 10_000_000,
) -> ExactPosterior:
    """Exact posterior by full enumeration.

    Pass ``k`` for the fixed-count posterior P(g | A, k) or ``k_cap`` for the
    variable-count posterior P(g, k | A) truncated at ``k <= k_cap``.  The
    Poisson k prior is always folded into the weights; under a fixed k it is
    a constant that normalization removes.
    """
    if (k is None) == (k_cap is None):
        raise ValueError("pass exactly one of k or k_cap")
    ks = [k] if k is not None else list(range(1, k_cap + 1))
    n, L = net.n, net.L
    total = sum((1 << (kk - 1)) ** (n * L) for kk in ks)
    if total > max_states:
        raise StateSpaceError(
            f"state space of {total} assignments exceeds the budget of {max_states}"
        )
    logj, lg = _tables_for(net, jt, max(ks))
    logws = []
    for kk in ks:
        out = np.empty((1 << (kk - 1)) ** (n * L), dtype=np.float64)
        kernels.enumerate_logw(net.adj, kk, logj, lg, out)
        logws.append(out)
    shift = max(float(arr.max()) for arr in logws)
    z = sum(float(np.exp(arr - shift).sum()) for arr in logws)
    log_norm = shift + math.log(z)
    probs = [np.exp(arr - log_norm) for arr in logws]
    return ExactPosterior(n, L, ks, probs, log_norm)


def _tables_for(net, jt: JTable, k_hi: int):
    if jt.n_max < net.n:
        raise ValueError(f"J table covers n_max={jt.n_max} < n={net.n}")
    max_arg = max(net.n * (net.n - 1) // 2 + 3, net.n + 3, k_hi + 1)
    return jt.log_j, model.lgamma_table(max_arg)


def log_likelihood_factorial(net, g: GroupAssignment) -> float:
    """Marginal likelihood via exact integer factorials (cross-check route)."""
    stats = compute_stats(net, g)
    total = 0.0
    for r in range(g.k):
        for ell in range(g.L):
            t = int(stats.t[r, ell])
            m = int(stats.m[r, ell])
            total += math.log(
                math.factorial(m) * math.factorial(t - m) / math.factorial(t + 1)
            )
    return total


def tv_distance(p, q) -> float:
    """Total-variation distance between two mappings key -> probability."""
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(x, 0.0) - q.get(x, 0.0)) for x in keys)


def occupancy_layout(exact: ExactPosterior):
    """(offsets, k_cap, total slots) for a kernel occupancy array over ``exact``.

    offsets[k] is where k's block starts; ks must be contiguous from 1 or a
    single fixed k (whose offset is 0).
    """
    if len(exact.ks) == 1:
        k = exact.ks[0]
        offsets = np.zeros(k + 1, dtype=np.int64)
        return offsets, k, exact.probs[0].size
    if exact.ks != list(range(1, len(exact.ks) + 1)):
        raise ValueError("occupancy layout needs ks = 1..k_cap")
    offsets = np.zeros(len(exact.ks) + 1, dtype=np.int64)
    pos = 0
    for k, arr in zip(exact.ks, exact.probs):
        offsets[k] = pos
        pos += arr.size
    return offsets, exact.ks[-1], pos


def tv_to_empirical(
    exact: ExactPosterior, occupancy: np.ndarray, n_samples: int, overflow: int = 0
) -> float:
    """TV between the exact posterior and kernel occupancy counts.

    ``occupancy`` must follow :func:`occupancy_layout`; ``overflow`` counts
    samples whose k exceeded the tracked cap (mass the oracle assigns zero).
    """
    expected = sum(arr.size for arr in exact.probs)
    if occupancy.size != expected:
        raise ValueError(f"occupancy has {occupancy.size} slots, support needs {expected}")
    acc = overflow / n_samples
    pos = 0
    for arr in exact.probs:
        block = occupancy[pos : pos + arr.size] / n_samples
        acc += float(np.abs(arr - block).sum())
        pos += arr.size
    return 0.5 * acc


def _apply_to_copy(g: GroupAssignment, move: MoveProposal, net) -> GroupAssignment:
    from .groups import apply_move

    g2 = g.copy()
    stats = compute_stats(net, g2)
    apply_move(g2, stats, move, net)
    return g2


def reverse_move(move: MoveProposal) -> MoveProposal:
    if move.kind == MoveKind.ADD_NODE:
        return MoveProposal(MoveKind.REMOVE_NODE, r=move.r, layer=move.layer, node=move.node)
    if move.kind == MoveKind.REMOVE_NODE:
        return MoveProposal(MoveKind.ADD_NODE, r=move.r, layer=move.layer, node=move.node)
    if move.kind == MoveKind.ADD_GROUP:
        return MoveProposal(MoveKind.REMOVE_GROUP, r=move.r)
    if move.kind == MoveKind.REMOVE_GROUP:
        return MoveProposal(MoveKind.ADD_GROUP, r=move.r)
    if move.kind == MoveKind.MULTI_SWAP:
        return move
    raise ValueError(f"no reverse for {move.kind}")


def proposal_ratio_check(
    g: GroupAssignment,
    move: MoveProposal,
    net,
    mode: str = MODE_FIXED_K,
    multi_node_prob: float = 0.0,
    k_max: int = 64,
) -> tuple[float, float]:
    """Exact log proposal probabilities (forward, reverse) under the mode.

    The forward probability is evaluated at ``g`` and the reverse at the
    post-move state; both come from the mechanical proposal measure, which
    carries the layer factor 1/L on group additions and removals alike.
    """
    fwd = proposal_log_prob(g, move, mode, multi_node_prob, k_max)
    g2 = _apply_to_copy(g, move, net)
    rev = proposal_log_prob(g2, reverse_move(move), mode, multi_node_prob, k_max)
    return fwd, rev
