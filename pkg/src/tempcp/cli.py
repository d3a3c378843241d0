"""Command-line interface: infer, consensus, generate, render.

Exit codes: 0 success, 1 usage error, 2 data validation error, 3 runtime
failure.  Set ``TEMPCP_JTABLE_CACHE`` to a directory to reuse precomputed
J tables between invocations.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .generate import OmegaTable, make_planted_instance, sample_assignment, sample_network
from .groups import GroupAssignment, load_assignment, save_assignment
from .model import build_jtable, cached_jtable
from .moves import MODE_FIXED_K, MODE_MAIN, MODE_NO_MULTI_NODE
from .network import EdgeListError, load_network, save_network
from .render import render_heatmap, render_permuted_adjacency
from .sampler import (
    SamplerConfig,
    all_records,
    consensus,
    load_records,
    run,
    save_manifest,
    save_records,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _jtable_for(n: int):
    cache_dir = os.environ.get("TEMPCP_JTABLE_CACHE")
    if cache_dir:
        return cached_jtable(n, cache_dir)
    return build_jtable(n)


def cmd_infer(args) -> int:
    net = load_network(args.network)
    init_k = args.k if args.k is not None else args.init_k
    config = SamplerConfig(
        steps=args.steps,
        runs=args.runs,
        init_k=init_k,
        multi_node_prob=args.mnp,
        thin=args.thin,
        seed=args.seed,
        k_max=args.k_max,
        mode=args.mode,
        restrict_multi_node_layer1=args.restrict_mn_layer1,
        burn_in=args.burn_in,
    )
    jt = _jtable_for(net.n)
    results = run(config, net, jt)
    os.makedirs(args.out, exist_ok=True)
    records_path = os.path.join(args.out, "records.txt")
    manifest_path = os.path.join(args.out, "manifest.json")
    save_records(all_records(results), records_path)
    save_manifest(config, manifest_path, network_path=args.network, extra={"n": net.n, "L": net.L})
    total_cap_hits = 0
    for res in results:
        print(
            f"run {res.run}: accept rate {res.acceptance_rate:.4f}, "
            f"final k {res.final_k}, modal k {res.modal_k}, records {len(res.records)}"
        )
        total_cap_hits += res.cap_hits
    if total_cap_hits:
        print(f"warning: {total_cap_hits} group additions rejected at k_max={config.k_max}")
    print(f"wrote {records_path} and {manifest_path}")
    return EXIT_OK


def cmd_consensus(args) -> int:
    records = load_records(args.records)
    result = consensus(records, per_group=args.per_group)
    used = sum(1 for rec in records if rec.k == result.k)
    save_assignment(result, args.out)
    print(f"modal k: {result.k} (consensus over {used}/{len(records)} records)")
    for ell in range(result.L):
        sizes = result.group_sizes(ell)
        print(f"layer {ell}: group sizes {sizes}")
    print(f"wrote {args.out}")
    return EXIT_OK


def _parse_omega(text: str, k: int, L: int):
    if text == "uniform":
        return "uniform"
    levels = [float(part) for part in text.split(",")]
    if len(levels) != k:
        raise ValueError(f"expected {k} omega levels for k={k}, got {len(levels)}")
    return OmegaTable.from_levels(levels, L)


def cmd_generate(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.planted:
        if args.omega == "uniform":
            raise ValueError("planted instances need explicit '--omega core,base' levels")
        levels = [float(part) for part in args.omega.split(",")]
        if len(levels) != 2:
            raise ValueError("planted instances take exactly two omega levels: core,base")
        omega_core, omega_base = levels
        net, truth = make_planted_instance(
            args.n, args.L, args.core_frac, omega_core, omega_base, args.persistence, rng
        )
    else:
        jt = _jtable_for(args.n)
        truth = sample_assignment(args.k, args.n, args.L, jt, rng)
        omega = _parse_omega(args.omega, args.k, args.L)
        net = sample_network(truth, omega, rng)
    net_path = f"{args.out}.edges"
    truth_path = f"{args.out}.assign"
    save_network(net, net_path)
    save_assignment(truth, truth_path)
    print(f"n={net.n} L={net.L} edges per layer {net.edge_counts().tolist()}")
    print(f"wrote {net_path} and {truth_path}")
    return EXIT_OK


def cmd_render(args) -> int:
    g = load_assignment(args.assignment)
    if args.target == "heatmap":
        ppm, csv_path = render_heatmap(g, args.out, scale=args.scale)
        print(f"wrote {ppm} and {csv_path}")
        return EXIT_OK
    if args.network is None:
        raise ValueError("permuted-adjacency rendering needs --network")
    net = load_network(args.network)
    layers = [args.layer] if args.layer is not None else None
    images, csv_path = render_permuted_adjacency(net, g, args.out, layers=layers, scale=args.scale)
    print(f"wrote {' '.join(images)} and {csv_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tempcp", description=__doc__)
    parser.add_argument("--version", action="version", version=f"tempcp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("infer", help="sample group assignments for a network")
    p.add_argument("--network", required=True, help="edge-list file")
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--steps", type=int, default=1_000_000)
    p.add_argument("--init-k", type=int, default=4, dest="init_k")
    p.add_argument("--k", type=int, default=None, help="group count (fixed-k mode, also sets init)")
    p.add_argument("--mnp", type=float, default=1e-3, help="multi-node move probability")
    p.add_argument("--thin", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--burn-in", type=int, default=0, dest="burn_in")
    p.add_argument("--k-max", type=int, default=64, dest="k_max")
    p.add_argument(
        "--mode",
        choices=[MODE_MAIN, MODE_FIXED_K, MODE_NO_MULTI_NODE],
        default=MODE_MAIN,
    )
    p.add_argument(
        "--restrict-mn-layer1",
        action="store_true",
        dest="restrict_mn_layer1",
        help="draw multi-node layers from 2..L (exact-stationarity variant)",
    )
    p.add_argument("--out", default="tempcp-out", help="output directory")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("consensus", help="extract the consensus assignment from records")
    p.add_argument("--records", required=True)
    p.add_argument("--out", default="consensus.assign")
    p.add_argument("--per-group", action="store_true", dest="per_group")
    p.set_defaults(func=cmd_consensus)

    p = sub.add_parser("generate", help="sample synthetic networks from the model")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--omega", default="uniform", help="'uniform' or comma list per class")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--planted", action="store_true", help="planted-core fixture (k=2)")
    p.add_argument("--core-frac", type=float, default=0.3, dest="core_frac")
    p.add_argument("--persistence", type=float, default=0.95)
    p.add_argument("--out", default="synthetic")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("render", help="render heat maps or permuted adjacency matrices")
    p.add_argument("target", choices=["heatmap", "adjacency"])
    p.add_argument("--assignment", required=True)
    p.add_argument("--network", default=None)
    p.add_argument("--layer", type=int, default=None)
    p.add_argument("--scale", type=int, default=8)
    p.add_argument("--out", default="render")
    p.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (EdgeListError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
