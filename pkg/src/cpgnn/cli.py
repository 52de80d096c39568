"""Command-line front end.

Subcommands:
  gen            synthesize a benchmark graph (edge list, labels, features,
                 metadata) controlled by a target compatibility matrix
  run            execute an experiment spec (JSON) and write result artifacts
  stats          print dataset statistics (nodes, edges, classes, features, h)
  theorem-check  verify the identity-compatibility propagation path matches
                 softmax((A + I) X theta) on random instances
  sweep-h        run the method set across homophily levels

Exit codes: 0 success, 1 input error, 2 training failure, 3 verification
failure. CPGNN_THREADS caps split-level worker threads for `run`.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .datasets import (load_dataset, dataset_stats, write_edge_list,
                       write_features, write_labels)
from .errors import (ConvergenceError, GenerationError, InputError,
                     TrainingError, VerificationError)
from .experiments import ExperimentSpec, run_experiment, sweep_h, theorem_check
from .graph import empirical_compatibility, homophily_ratio
from .synth import (SynthConfig, gaussian_pools, generate, make_target_compat,
                    transfer_features)

__all__ = ["entry", "main"]


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cpgnn", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic benchmark graph")
    g.add_argument("--classes", type=int, help="number of classes (with --class-size)")
    g.add_argument("--class-size", type=int, help="nodes per class (with --classes)")
    g.add_argument("--class-sizes", type=str,
                   help="comma-separated per-class sizes (alternative)")
    g.add_argument("--n0", type=int, default=70, help="bootstrap chain length")
    g.add_argument("--m", type=int, default=6, help="edges added per new node")
    g.add_argument("--h", type=float, help="target compatibility diagonal")
    g.add_argument("--compat-file", type=str,
                   help="CSV with an explicit target compatibility matrix")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-prefix", type=str, required=True)
    g.add_argument("--featureless", action="store_true",
                   help="skip the feature file")
    g.add_argument("--feature-dim", type=int, default=0,
                   help="surrogate feature width (default max(classes, 16))")
    g.add_argument("--mean-separation", type=float, default=1.0,
                   help="per-class mean offset of the surrogate features")

    r = sub.add_parser("run", help="run an experiment spec")
    r.add_argument("spec", type=str, help="path to the experiment JSON")

    s = sub.add_parser("stats", help="print dataset statistics")
    s.add_argument("prefix", type=str, nargs="?",
                   help="path prefix: <prefix>.edges and <prefix>.labels")
    s.add_argument("--edges", type=str, help="edge-list file (overrides prefix)")
    s.add_argument("--labels", type=str, help="label file (overrides prefix)")
    s.add_argument("--features", type=str, help="feature file (optional)")

    t = sub.add_parser("theorem-check", help="run the equivalence check")
    t.add_argument("--n", type=int, default=50, help="max nodes per instance")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--instances", type=int, default=20)
    t.add_argument("--tol", type=float, default=1e-9)

    w = sub.add_parser("sweep-h", help="accuracy across homophily levels")
    w.add_argument("spec", type=str, help="path to the experiment JSON")
    return ap


def _class_sizes(args) -> tuple[int, ...]:
    if args.class_sizes:
        try:
            return tuple(int(tok) for tok in args.class_sizes.split(","))
        except ValueError:
            raise InputError(f"bad --class-sizes {args.class_sizes!r}") from None
    if args.classes is None or args.class_size is None:
        raise InputError("gen needs --class-sizes or both --classes and --class-size")
    return (args.class_size,) * args.classes


def _cmd_gen(args) -> int:
    sizes = _class_sizes(args)
    c = len(sizes)
    if (args.h is None) == (args.compat_file is None):
        raise InputError("gen needs exactly one of --h or --compat-file")
    if args.compat_file:
        compat = np.loadtxt(args.compat_file, delimiter=",", dtype=np.float64, ndmin=2)
    else:
        compat = make_target_compat(c, args.h)
    cfg = SynthConfig(class_sizes=sizes, seed_nodes=args.n0,
                      edges_per_node=args.m, target_compat=compat,
                      rng_seed=args.seed)
    g, labels = generate(cfg)

    prefix = args.out_prefix
    out_dir = os.path.dirname(prefix)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    write_edge_list(prefix + ".edges", g)
    write_labels(prefix + ".labels", labels)

    meta = {
        "class_sizes": list(sizes),
        "seed_nodes": args.n0,
        "edges_per_node": args.m,
        "rng_seed": args.seed,
        "target_compat": compat.tolist(),
        "nodes": g.n,
        "edges": g.num_edges,
        "measured_h": homophily_ratio(g, labels),
        "measured_compat": empirical_compatibility(g, labels).tolist(),
    }
    if args.featureless:
        meta["feature_mode"] = "none"
    else:
        dim = args.feature_dim or max(c, 16)
        ref = gaussian_pools(c, max(sizes), dim, args.mean_separation,
                             rng_seed=args.seed + 1)
        x = transfer_features(labels, ref, rng_seed=args.seed + 2)
        write_features(prefix + ".features", x)
        meta["feature_mode"] = "gaussian-surrogate"
        meta["feature_dim"] = dim
        meta["mean_separation"] = args.mean_separation
    with open(prefix + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {prefix}.edges / .labels"
          + ("" if args.featureless else " / .features")
          + f" ({g.n} nodes, {g.num_edges} edges, measured h "
          f"{meta['measured_h']:.4f})")
    return 0


def _cmd_run(args) -> int:
    spec = ExperimentSpec.from_json(args.spec)
    table = run_experiment(spec)
    print(f"{'method':<24} {'accuracy':>18} {'splits':>7}")
    for name in table.methods:
        mean, std, n_ok = table.mean_std(name)
        if n_ok == 0:
            print(f"{name:<24} {'all splits failed':>18} {0:>7}")
        else:
            print(f"{name:<24} {mean:>9.4f} ± {std:.4f} {n_ok:>7}")
    print(f"artifacts in {spec.output_dir}/")
    return 0


def _cmd_stats(args) -> int:
    edges = args.edges or (args.prefix + ".edges" if args.prefix else None)
    labels = args.labels or (args.prefix + ".labels" if args.prefix else None)
    if not edges or not labels:
        raise InputError("stats needs a prefix or --edges and --labels")
    features = args.features
    if features is None and args.prefix and os.path.exists(args.prefix + ".features"):
        features = args.prefix + ".features"
    ds = load_dataset(edges, labels, features)
    for key, value in dataset_stats(ds).items():
        print(f"{key}: {value}")
    return 0


def _cmd_theorem(args) -> int:
    diff = theorem_check(max_n=args.n, seed=args.seed, instances=args.instances)
    print(f"max absolute belief difference over {args.instances} instances: {diff:.3e}")
    if diff >= args.tol:
        raise VerificationError(
            f"equivalence check failed: {diff:.3e} >= tolerance {args.tol:.1e}")
    print(f"PASS (< {args.tol:.1e})")
    return 0


def _cmd_sweep(args) -> int:
    spec = ExperimentSpec.from_json(args.spec)
    series = sweep_h(spec)
    for name, triples in series.items():
        for h, mean, std in triples:
            print(f"{name:<24} h={h:<4} {mean:.4f} ± {std:.4f}")
    print(f"artifacts in {spec.output_dir}/")
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handler = {
        "gen": _cmd_gen,
        "run": _cmd_run,
        "stats": _cmd_stats,
        "theorem-check": _cmd_theorem,
        "sweep-h": _cmd_sweep,
    }[args.command]
    return handler(args)


def entry(argv=None) -> int:
    """Console-script entry point mapping errors to exit codes."""
    try:
        return main(argv)
    except (InputError, GenerationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (TrainingError, ConvergenceError) as exc:
        print(f"training failure: {exc}", file=sys.stderr)
        return 2
    except VerificationError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(entry())
