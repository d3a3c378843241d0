"""Forward sampling: assignments from the prior, edge tables, and networks.

The layer-to-layer evolution of one group's indicator row factorizes per
indicator value s: the number of flips d among the n_s nodes that had value
s has probability J(d, n_s) (these weights sum to one over d), and the
flipped subset is uniform.  Sampling d by inverse CDF on the pre-floor J
values therefore reproduces the transition distribution exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .groups import GroupAssignment
from .model import JTable
from .network import TemporalNetwork

__all__ = [
    "OmegaTable",
    "sample_first_layer",
    "sample_transition",
    "sample_assignment",
    "sample_network",
    "make_planted_instance",
]


@dataclass(frozen=True)
class OmegaTable:
    """Edge probability per highest-common-group class and layer: values[r, ell]."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise ValueError(f"omega table must have shape (k, L), got {vals.shape}")
        if (vals < 0.0).any() or (vals > 1.0).any():
            raise ValueError("edge probabilities must lie in [0, 1]")
        object.__setattr__(self, "values", vals)

    @property
    def k(self) -> int:
        return self.values.shape[0]

    @property
    def L(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_levels(cls, levels, L: int) -> "OmegaTable":
        """Constant-in-time table from per-class probabilities [omega_0, ...]."""
        levels = np.asarray(levels, dtype=np.float64)
        return cls(np.repeat(levels[:, None], L, axis=1))

    @classmethod
    def uniform(cls, k: int, L: int, rng: np.random.Generator) -> "OmegaTable":
        """Every omega[r, ell] independent uniform on [0, 1] (the flat prior)."""
        return cls(rng.random((k, L)))


def sample_first_layer(k: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Layer-0 patterns: per group, a uniform size then a uniform subset."""
    pats = np.zeros(n, dtype=np.int64)
    for r in range(1, k):
        size = int(rng.integers(0, n + 1))
        members = rng.permutation(n)[:size]
        pats[members] |= 1 << (r - 1)
    return pats


def _sample_flip_count(jt: JTable, n_s: int, rng: np.random.Generator) -> int:
    if n_s == 0:
        return 0
    u = rng.random()
    acc = 0.0
    for d in range(n_s + 1):
        acc += np.exp(jt.log_j_raw[d, n_s])
        if u < acc:
            return d
    return n_s


def sample_transition(prev_row: np.ndarray, jt: JTable, rng: np.random.Generator) -> np.ndarray:
    """Evolve one group's boolean indicator row to the next layer."""
    prev_row = np.asarray(prev_row, dtype=bool)
    new_row = prev_row.copy()
    for s in (False, True):
        idx = np.flatnonzero(prev_row == s)
        d = _sample_flip_count(jt, idx.size, rng)
        if d:
            flip = rng.permutation(idx)[:d]
            new_row[flip] = ~s
    return new_row


def sample_assignment(
    k: int, n: int, L: int, jt: JTable, rng: np.random.Generator
) -> GroupAssignment:
    """Draw a full assignment from the prior over (g | k)."""
    if jt.n_max < n:
        raise ValueError(f"J table covers n_max={jt.n_max} < n={n}")
    pats = np.zeros((L, n), dtype=np.int64)
    pats[0] = sample_first_layer(k, n, rng)
    for r in range(1, k):
        bit = 1 << (r - 1)
        row = (pats[0] & bit) != 0
        for ell in range(1, L):
            row = sample_transition(row, jt, rng)
            pats[ell][row] |= bit
    return GroupAssignment(k, pats)


def sample_network(g: GroupAssignment, omega, rng: np.random.Generator) -> TemporalNetwork:
    """Independent edges with probability omega[h(i,j,ell), ell] per pair.

    ``omega`` is an :class:`OmegaTable` or the string ``"uniform"``, which
    draws each class/layer probability uniformly first.
    """
    n, L, k = g.n, g.L, g.k
    if isinstance(omega, str):
        if omega != "uniform":
            raise ValueError(f"unknown omega spec {omega!r}")
        omega = OmegaTable.uniform(k, L, rng)
    if omega.k != k or omega.L != L:
        raise ValueError(
            f"omega table shaped {omega.values.shape} does not match (k={k}, L={L})"
        )
    adj = np.zeros((L, n, n), dtype=np.uint8)
    for ell in range(L):
        pats = g.patterns[ell]
        common = pats[:, None] & pats[None, :]
        h = np.zeros((n, n), dtype=np.int64)
        for b in range(k - 1):
            h[(common >> b) & 1 == 1] = b + 1
        probs = omega.values[h, ell]
        draws = rng.random((n, n)) < probs
        upper = np.triu(draws, k=1)
        adj[ell] = (upper | upper.T).astype(np.uint8)
    return TemporalNetwork(adj)


def make_planted_instance(
    n: int,
    L: int,
    core_fraction: float,
    omega_core: float,
    omega_base: float,
    persistence: float,
    rng: np.random.Generator,
):
    """Synthetic k=2 instance with a drifting planted core.

    The core starts as a uniform subset of ceil(core_fraction * n) nodes and
    each membership flips independently with probability 1 - persistence per
    layer step.  Edges inside the core appear with probability omega_core,
    all other pairs with omega_base.
    """
    if not (0.0 <= core_fraction <= 1.0):
        raise ValueError("core_fraction must be in [0, 1]")
    if not (0.0 <= persistence <= 1.0):
        raise ValueError("persistence must be in [0, 1]")
    size = int(np.ceil(core_fraction * n))
    pats = np.zeros((L, n), dtype=np.int64)
    row = np.zeros(n, dtype=bool)
    row[rng.permutation(n)[:size]] = True
    pats[0][row] = 1
    for ell in range(1, L):
        flips = rng.random(n) < (1.0 - persistence)
        row = row ^ flips
        pats[ell][row] = 1
    g = GroupAssignment(2, pats)
    omega = OmegaTable.from_levels([omega_base, omega_core], L)
    net = sample_network(g, omega, rng)
    return net, g
