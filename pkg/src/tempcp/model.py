"""Log-space probability model: J-integral table, likelihood, and priors.

All probabilities live in natural-log space as plain floats; ``-inf`` marks
impossible events and no function here ever returns NaN.  Factorials and
binomial coefficients go through lgamma.

The group-evolution prior is built on the integrals

    J(k1, k2) = integral_0^1 x^k1 (x - 1) / (x^(k2+1) - 1) dx ,

equal on [0, 1) to the singularity-free form x^k1 / sum_{j=0}^{k2} x^j,
which is smooth and bounded, so a fixed-order Gauss-Legendre rule is
essentially exact.  As a function of k1 at fixed k2, J is the marginal
distribution of the number of membership flips among k2 nodes between
consecutive layers: sum_{d=0}^{k2} J(d, k2) = 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "JTable",
    "build_jtable",
    "save_jtable",
    "load_jtable",
    "cached_jtable",
    "lgamma_table",
    "log_marginal_likelihood",
    "log_first_layer_prior",
    "log_transition",
    "log_F",
    "log_k_prior",
    "log_joint",
]

DEFAULT_ORDER = 64
DEFAULT_FLOOR_LOG = -16.0
_CACHE_VERSION = 1


@dataclass(frozen=True)
class JTable:
    """Precomputed log J(k1, k2) for 0 <= k1 <= k2 <= n_max.

    ``log_j`` has the underflow floor applied (tiny values clamped up to
    ``exp(floor_log)``, from the first sub-threshold k1 onward within each
    k2 column); ``log_j_raw`` keeps the unclamped quadrature values, which
    the generative sampler's inverse-CDF needs.  Entries with k1 > k2 are
    NaN and must never be read.
    """

    n_max: int
    order: int
    floor_log: float
    log_j: np.ndarray
    log_j_raw: np.ndarray
    floored: np.ndarray

    def value(self, k1: int, k2: int) -> float:
        if not (0 <= k1 <= k2 <= self.n_max):
            raise ValueError(f"need 0 <= k1 <= k2 <= {self.n_max}, got ({k1}, {k2})")
        return float(self.log_j[k1, k2])


def build_jtable(
    n_max: int, order: int = DEFAULT_ORDER, floor_log: float = DEFAULT_FLOOR_LOG
) -> JTable:
    """Fill the J table by Gauss-Legendre quadrature on [0, 1].

    The k2-th denominator sum_{j<=k2} x^j is evaluated by the Horner-style
    recurrence D_k2 = D_{k2-1} * x + 1, and the whole table reduces to one
    matrix product between the x^k1 rows and the 1/D_k2 rows.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    nodes, weights = np.polynomial.legendre.leggauss(order)
    x = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    denom = np.empty((n_max + 1, order))
    denom[0] = 1.0
    for k2 in range(1, n_max + 1):
        denom[k2] = denom[k2 - 1] * x + 1.0
    powers = np.empty((n_max + 1, order))
    powers[0] = 1.0
    for k1 in range(1, n_max + 1):
        powers[k1] = powers[k1 - 1] * x
    j_lin = (powers * w) @ (1.0 / denom).T  # j_lin[k1, k2]
    j_lin[0, 0] = 1.0  # integrand is identically 1
    invalid = np.tril_indices(n_max + 1, k=-1)  # rows k1 > cols k2

    log_raw = np.log(j_lin)
    log_raw[0, 0] = 0.0
    log_floored, floored = _apply_floor(j_lin, floor_log)
    log_raw[invalid] = np.nan
    log_floored[invalid] = np.nan
    return JTable(n_max, order, floor_log, log_floored, log_raw, floored)


def _apply_floor(j_lin: np.ndarray, floor_log: float):
    """Clamp each k2 column to exp(floor_log) from the first entry below it.

    All k1 at or past the first sub-threshold index are set *equal* to the
    floor, matching the per-column cutoff-index policy.
    """
    n1 = j_lin.shape[0]
    threshold = math.exp(floor_log)
    log_j = np.log(j_lin)
    log_j[0, 0] = 0.0
    floored = np.zeros_like(j_lin, dtype=bool)
    for k2 in range(n1):
        col = j_lin[: k2 + 1, k2]
        below = np.flatnonzero(col < threshold)
        if below.size:
            cut = below[0]
            log_j[cut : k2 + 1, k2] = floor_log
            floored[cut : k2 + 1, k2] = True
    return log_j, floored


def save_jtable(jt: JTable, path) -> None:
    """Persist a table as an ``.npz`` archive.

    Layout: arrays ``log_j``, ``log_j_raw``, ``floored`` plus a JSON ``meta``
    string holding ``{version, n_max, order, floor_log}``.  Loading rejects a
    file whose version or key parameters differ from what was asked for.
    """
    meta = json.dumps(
        {
            "version": _CACHE_VERSION,
            "n_max": jt.n_max,
            "order": jt.order,
            "floor_log": jt.floor_log,
        }
    )
    np.savez_compressed(
        path,
        log_j=jt.log_j,
        log_j_raw=jt.log_j_raw,
        floored=jt.floored,
        meta=np.frombuffer(meta.encode("utf-8"), dtype=np.uint8),
    )


def load_jtable(path) -> JTable:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
        if meta.get("version") != _CACHE_VERSION:
            raise ValueError(f"unsupported J-table cache version {meta.get('version')}")
        return JTable(
            int(meta["n_max"]),
            int(meta["order"]),
            float(meta["floor_log"]),
            data["log_j"],
            data["log_j_raw"],
            data["floored"],
        )


def cached_jtable(
    n_max: int,
    cache_dir=None,
    order: int = DEFAULT_ORDER,
    floor_log: float = DEFAULT_FLOOR_LOG,
) -> JTable:
    """Build a table, or reuse the cache file keyed by (n_max, order, floor)."""
    if cache_dir is None:
        return build_jtable(n_max, order, floor_log)
    import os

    os.makedirs(cache_dir, exist_ok=True)
    name = f"jtable_v{_CACHE_VERSION}_n{n_max}_o{order}_f{floor_log:g}.npz"
    path = os.path.join(cache_dir, name)
    if os.path.exists(path):
        try:
            jt = load_jtable(path)
            if jt.n_max == n_max and jt.order == order and jt.floor_log == floor_log:
                return jt
        except (ValueError, OSError, KeyError):
            pass  # stale or corrupt cache: rebuild
    jt = build_jtable(n_max, order, floor_log)
    save_jtable(jt, path)
    return jt


def lgamma_table(max_arg: int) -> np.ndarray:
    """lg[x] = lgamma(x) for integer x in 0..max_arg (lg[0] is +inf, unused)."""
    lg = np.empty(max_arg + 1)
    lg[0] = np.inf
    for x in range(1, max_arg + 1):
        lg[x] = math.lgamma(x)
    return lg


def _log_binom(a: int, b: int) -> float:
    return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)


def log_marginal_likelihood(stats) -> float:
    """log P(A | g, k): product over layers and classes of m!(t-m)!/(t+1)!.

    Classes with t = 0 contribute 0.  Raises if any m exceeds its t.
    """
    t = stats.t
    m = stats.m
    if (m > t).any() or (m < 0).any():
        raise ValueError("inconsistent sufficient statistics: need 0 <= m <= t")
    total = 0.0
    for r in range(stats.k):
        for ell in range(stats.L):
            tv, mv = int(t[r, ell]), int(m[r, ell])
            total += (
                math.lgamma(mv + 1) + math.lgamma(tv - mv + 1) - math.lgamma(tv + 2)
            )
    return total


def log_first_layer_prior(g) -> float:
    """log of the uniform-size, uniform-fill prior over layer-0 assignments."""
    n = g.n
    total = 0.0
    for r in range(1, g.k):
        n1 = int(g.indicator(r)[0].sum())
        total += math.lgamma(n1 + 1) + math.lgamma(n - n1 + 1) - math.lgamma(n + 2)
    return total


def log_transition(jt: JTable, ns, css) -> float:
    """log probability of one group's row evolving between consecutive layers.

    ``ns = (n0, n1)`` counts nodes with indicator 0/1 in the earlier layer and
    ``css = (c00, c11)`` counts those whose indicator stayed put.  Each side
    contributes -log C(n_s, c_ss) + log J(n_s - c_ss, n_s); an empty side
    contributes log J(0, 0) = 0.
    """
    total = 0.0
    for n_s, c_ss in zip(ns, css):
        if not (0 <= c_ss <= n_s):
            raise ValueError(f"stay count {c_ss} out of range [0, {n_s}]")
        total += jt.value(n_s - c_ss, n_s) - _log_binom(n_s, c_ss)
    return total


def log_F(g, stats, jt: JTable) -> float:
    """log of the full group-evolution factor: layers 2.., groups 1..k-1."""
    n = g.n
    total = 0.0
    for ell in range(1, stats.L):
        for r in range(1, stats.k):
            n1_prev = int(stats.n1[r, ell - 1])
            total += log_transition(
                jt,
                (n - n1_prev, n1_prev),
                (int(stats.c00[r, ell]), int(stats.c11[r, ell])),
            )
    return total


def log_k_prior(k: int) -> float:
    """Poisson(1) prior on the group count: log e^-1 / (k-1)!."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return -1.0 - math.lgamma(k)


def log_joint(net, g, stats, jt: JTable) -> float:
    """Unnormalized log posterior weight of (g, k) given the network.

    Diagnostic / oracle quantity only; the samplers' acceptance ratios use
    just the likelihood and group-evolution terms.
    """
    if g.n != net.n or g.L != net.L:
        raise ValueError("assignment does not match network dimensions")
    return (
        log_k_prior(g.k)
        + log_marginal_likelihood(stats)
        + log_first_layer_prior(g)
        + log_F(g, stats, jt)
    )
