"""Posterior samplers: chain state, multi-run orchestration, and consensus.

Three modes share one step kernel:

- ``main``: multi-node moves with probability p, then standard moves vs
  group additions split 1 - 1/(2k(n+1)) : 1/(2k(n+1));
- ``no-multi-node``: the same two-way split without multi-node moves;
- ``fixed-k``: standard moves only, with the empty-group-removal branch
  turned into a no-op so k never changes.

Each run gets an independent child stream of the configured seed, an initial
assignment with every indicator Bernoulli(1/2) at ``init_k`` groups, and
emits one record per ``thin`` steps.  Runs are deterministic given the
config.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import kernels
from .groups import GroupAssignment
from .model import JTable, build_jtable, lgamma_table
from .moves import MODE_FIXED_K, MODE_MAIN, MODE_NO_MULTI_NODE, MoveKind
from .network import TemporalNetwork

__all__ = [
    "SamplerConfig",
    "SampleRecord",
    "RunResult",
    "ChainState",
    "run",
    "consensus",
    "save_records",
    "load_records",
    "save_manifest",
    "load_manifest",
]

_MODE_CODES = {MODE_MAIN: 0, MODE_FIXED_K: 1, MODE_NO_MULTI_NODE: 2}
RECORDS_FORMAT_VERSION = 1


@dataclass
class SamplerConfig:
    steps: int
    runs: int = 1
    init_k: int = 4
    multi_node_prob: float = 1e-3
    thin: int = 1
    seed: int = 0
    k_max: int = 64
    mode: str = MODE_MAIN
    restrict_multi_node_layer1: bool = False
    burn_in: int = 0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if not (0.0 <= self.multi_node_prob <= 1.0):
            raise ValueError("multi_node_prob must be in [0, 1]")
        if not (1 <= self.k_max <= 64):
            raise ValueError("k_max must be in [1, 64]")
        if not (1 <= self.init_k <= self.k_max):
            raise ValueError(f"init_k must be in [1, k_max={self.k_max}]")
        if self.mode not in _MODE_CODES:
            raise ValueError(f"mode must be one of {sorted(_MODE_CODES)}")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")

    def to_dict(self) -> dict:
        return {
            "steps": self.steps,
            "runs": self.runs,
            "init_k": self.init_k,
            "multi_node_prob": self.multi_node_prob,
            "thin": self.thin,
            "seed": self.seed,
            "k_max": self.k_max,
            "mode": self.mode,
            "restrict_multi_node_layer1": self.restrict_multi_node_layer1,
            "burn_in": self.burn_in,
        }


@dataclass
class SampleRecord:
    run: int
    step: int
    k: int
    assignment: GroupAssignment
    log_joint: float


@dataclass
class RunResult:
    run: int
    records: list[SampleRecord]
    proposed: np.ndarray  # (len(MoveKind),) counts per move kind
    accepted: np.ndarray
    final_k: int
    cap_hits: int

    @property
    def acceptance_rate(self) -> float:
        total = int(self.proposed.sum())
        return float(self.accepted.sum()) / total if total else 0.0

    @property
    def modal_k(self) -> int:
        counts = Counter(rec.k for rec in self.records)
        best = max(counts.values())
        return min(k for k, c in counts.items() if c == best)


class ChainState:
    """Kernel-facing array bundle for one chain.

    The arrays use ``k_max`` fixed-width rows so group insertions never
    reallocate; only rows below the current k are meaningful.
    """

    def __init__(self, net: TemporalNetwork, assignment: GroupAssignment, k_max: int = 64):
        if assignment.n != net.n or assignment.L != net.L:
            raise ValueError("assignment does not match network dimensions")
        if assignment.k > k_max:
            raise ValueError(f"assignment has k={assignment.k} above k_max={k_max}")
        L, n = net.L, net.n
        self.net = net
        self.k_max = int(k_max)
        self.pat = assignment.patterns.copy()
        self.t = np.zeros((k_max, L), dtype=np.int64)
        self.m = np.zeros((k_max, L), dtype=np.int64)
        self.n1 = np.zeros((k_max, L), dtype=np.int64)
        self.c00 = np.zeros((k_max, L), dtype=np.int64)
        self.c11 = np.zeros((k_max, L), dtype=np.int64)
        self.S = np.zeros(k_max, dtype=np.int64)
        self.kbox = np.array([assignment.k], dtype=np.int64)
        kernels.recompute_stats(
            net.adj, self.pat, assignment.k, self.t, self.m, self.n1, self.c00, self.c11, self.S
        )

    @property
    def k(self) -> int:
        return int(self.kbox[0])

    def to_assignment(self) -> GroupAssignment:
        return GroupAssignment(self.k, self.pat.copy())

    def state_args(self):
        return (
            self.net.adj, self.pat, self.t, self.m, self.n1,
            self.c00, self.c11, self.S, self.kbox,
        )


def make_tables(net: TemporalNetwork, jtable: JTable | None = None, k_max: int = 64):
    """(log J, lgamma) table pair sized for this network."""
    jt = jtable if jtable is not None else build_jtable(net.n)
    if jt.n_max < net.n:
        raise ValueError(f"J table covers n_max={jt.n_max} < n={net.n}")
    max_arg = max(net.n * (net.n - 1) // 2 + 3, net.n + 3, k_max + 1)
    return jt.log_j, lgamma_table(max_arg)


def _record_capacity(config: SamplerConfig) -> int:
    if config.burn_in >= config.steps:
        return 0
    return config.steps // config.thin - config.burn_in // config.thin


def run(
    config: SamplerConfig,
    net: TemporalNetwork,
    jtable: JTable | None = None,
) -> list[RunResult]:
    """Run ``config.runs`` independent chains and return their results."""
    logj, lg = make_tables(net, jtable, config.k_max)
    mode = _MODE_CODES[config.mode]
    L, n = net.L, net.n
    n_rec = _record_capacity(config)
    children = np.random.SeedSequence(config.seed).spawn(config.runs)
    results = []
    for run_id in range(config.runs):
        rng = np.random.default_rng(children[run_id])
        init = GroupAssignment.random(n, L, config.init_k, rng)
        state = ChainState(net, init, config.k_max)
        rec_pat = np.zeros((n_rec, L, n), dtype=np.int64)
        rec_k = np.zeros(n_rec, dtype=np.int64)
        rec_lj = np.zeros(n_rec, dtype=np.float64)
        counters = np.zeros((kernels.N_MOVE_KINDS + 1, 2), dtype=np.int64)
        dummy_occ = np.zeros(1, dtype=np.int64)
        dummy_off = np.zeros(1, dtype=np.int64)
        got, _ = kernels.run_chain(
            *state.state_args(), logj, lg,
            mode, config.multi_node_prob, config.restrict_multi_node_layer1, config.k_max,
            config.steps, config.thin, config.burn_in, rng,
            rec_pat, rec_k, rec_lj, counters,
            dummy_occ, dummy_off, 0, False,
        )
        assert got == n_rec
        records = [
            SampleRecord(
                run=run_id,
                step=(config.burn_in // config.thin + 1 + j) * config.thin,
                k=int(rec_k[j]),
                assignment=GroupAssignment(int(rec_k[j]), rec_pat[j].copy()),
                log_joint=float(rec_lj[j]),
            )
            for j in range(n_rec)
        ]
        results.append(
            RunResult(
                run=run_id,
                records=records,
                proposed=counters[: kernels.N_MOVE_KINDS, 0].copy(),
                accepted=counters[: kernels.N_MOVE_KINDS, 1].copy(),
                final_k=state.k,
                cap_hits=int(counters[kernels.N_MOVE_KINDS, 0]),
            )
        )
    return results


def all_records(results: list[RunResult]) -> list[SampleRecord]:
    recs = []
    for res in results:
        recs.extend(res.records)
    return recs


def consensus(records, per_group: bool = False) -> GroupAssignment:
    """Most frequent assignment across records sharing the modal group count.

    The modal k breaks ties toward the smaller k.  With ``per_group`` False
    (default) each node-layer takes its most frequent full pattern, ties
    toward the numerically smallest pattern; with ``per_group`` True each
    stored group's indicator is decided by independent per-group majority
    (ties toward non-membership).
    """
    records = list(records)
    if not records:
        raise ValueError("consensus needs at least one record")
    k_counts = Counter(rec.k for rec in records)
    best = max(k_counts.values())
    k_star = min(k for k, c in k_counts.items() if c == best)
    subset = [rec for rec in records if rec.k == k_star]
    L, n = subset[0].assignment.L, subset[0].assignment.n
    stacked = np.stack([rec.assignment.patterns for rec in subset])  # (R, L, n)
    out = np.zeros((L, n), dtype=np.int64)
    if per_group:
        for r in range(1, k_star):
            ones = ((stacked >> (r - 1)) & 1).sum(axis=0)
            out |= (ones * 2 > len(subset)).astype(np.int64) << (r - 1)
    else:
        for ell in range(L):
            for i in range(n):
                votes = Counter(stacked[:, ell, i].tolist())
                top = max(votes.values())
                out[ell, i] = min(p for p, c in votes.items() if c == top)
    return GroupAssignment(k_star, out)


def save_records(records, path) -> None:
    """One line per record: run step k log_joint then the layer-major patterns."""
    records = list(records)
    if not records:
        raise ValueError("no records to save")
    L, n = records[0].assignment.L, records[0].assignment.n
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# tempcp records v{RECORDS_FORMAT_VERSION}\n")
        fh.write(f"# n {n} L {L}\n")
        fh.write("# run step k log_joint pattern...\n")
        for rec in records:
            pats = " ".join(str(int(p)) for p in rec.assignment.patterns.ravel())
            fh.write(f"{rec.run} {rec.step} {rec.k} {rec.log_joint!r} {pats}\n")


def load_records(path) -> list[SampleRecord]:
    n = L = None
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 4 and parts[0] == "n" and parts[2] == "L":
                    n, L = int(parts[1]), int(parts[3])
                continue
            if n is None:
                raise ValueError(f"{path}: missing '# n <n> L <L>' header")
            parts = line.split()
            if len(parts) != 4 + n * L:
                raise ValueError(f"{path}: record has {len(parts)} fields, expected {4 + n * L}")
            run_id, step, k = int(parts[0]), int(parts[1]), int(parts[2])
            lj = float(parts[3])
            pats = np.array([int(p) for p in parts[4:]], dtype=np.int64).reshape(L, n)
            records.append(SampleRecord(run_id, step, k, GroupAssignment(k, pats), lj))
    if not records:
        raise ValueError(f"{path}: no records found")
    return records


def save_manifest(config: SamplerConfig, path, network_path=None, extra: dict | None = None) -> None:
    doc = {"format": "tempcp-manifest", "version": RECORDS_FORMAT_VERSION}
    doc.update(config.to_dict())
    if network_path is not None:
        doc["network"] = str(network_path)
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
