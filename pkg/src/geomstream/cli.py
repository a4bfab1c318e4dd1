"""Command line interface.

Subcommands: ``gen`` (write a stream file), ``validate`` (check one),
``run`` (experiment vs the exact oracle), ``separation`` (insertion-only
vs turnstile table), ``oracle`` (exact optimum of a stream file).
``GEOMSTREAM_SEED`` overrides configured seeds.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .generators import (gen_apd, gen_augmented_indexing, gen_bounded_degree,
                         gen_disk_indexing, gen_random_disks,
                         gen_random_unit_intervals, gen_random_weighted,
                         sample_apd_instance)
from .harness import (ALGORITHMS, ExperimentConfig, check_report,
                      run_experiment, separation_demo)
from .oracles import (exact_mis_intervals, exact_wmis_disks,
                      exact_wmis_intervals, snapshot_from_updates)
from .streamfile import read_stream, validate_stream, write_stream

GEN_KINDS = ("unit", "weighted", "disks", "bounded", "augmented_indexing",
             "disk_indexing", "apd")


def _seed(args) -> int:
    env = os.environ.get("GEOMSTREAM_SEED")
    return int(env) if env is not None else args.seed


def cmd_gen(args) -> int:
    import random
    seed = _seed(args)
    kind = args.kind
    if kind == "unit":
        g = gen_random_unit_intervals(args.n, seed, args.churn)
    elif kind == "weighted":
        g = gen_random_weighted(args.n, seed, args.w_max, args.churn)
    elif kind == "disks":
        g = gen_random_disks(args.n, seed, args.churn, args.w_max)
    elif kind == "bounded":
        g = gen_bounded_degree(args.n, seed, args.kappa_max, args.w_ratio,
                               args.churn)
    elif kind == "augmented_indexing":
        rng = random.Random(seed)
        x = [rng.randint(0, 1) for _ in range(args.n)]
        g = gen_augmented_indexing(x, rng.randrange(args.n))
    elif kind == "disk_indexing":
        rng = random.Random(seed)
        x = [rng.randint(0, 1) for _ in range(args.n)]
        g = gen_disk_indexing(x, rng.randrange(args.n))
    else:
        x, part, jstar = sample_apd_instance(args.apd_s, args.apd_t, seed)
        g = gen_apd(args.apd_s, args.apd_t, x, part, jstar)
    write_stream(args.out, g.updates)
    printable = {k: v for k, v in g.meta.items()
                 if isinstance(v, (int, str, float))}
    print(f"wrote {len(g.updates)} events to {args.out} {printable}")
    return 0


def cmd_validate(args) -> int:
    errors = validate_stream(args.path, unit=args.unit)
    if errors:
        for e in errors:
            print(e, file=sys.stderr)
        return 1
    print("ok")
    return 0


def cmd_run(args) -> int:
    cfg = ExperimentConfig(
        algorithm=args.algo, eps=args.eps, seed=_seed(args),
        trials=args.trials, n=args.n, w_max=args.w_max, churn=args.churn,
        kappa_max=args.kappa_max, w_ratio_max=args.w_ratio)
    report = run_experiment(cfg, out_json=args.out, out_csv=args.csv)
    agg = report["aggregate"]
    print(f"{args.algo}: success {agg['success_fraction']:.2f} "
          f"(threshold {agg['threshold']:.2f}), mean ratio "
          f"{agg['mean_ratio']:.3f}, sketch bytes {agg['peak_sketch_bytes']}")
    if args.check:
        return 0 if check_report(report) else 1
    return 0


def cmd_separation(args) -> int:
    demo = separation_demo(seed=_seed(args), trials=args.trials)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(demo, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(f"{'':>10} {'insertion-only':>16} {'turnstile':>12}")
    print(f"{'worst':>10} {demo['worst_ins_only_ratio']:>16.3f} "
          f"{demo['worst_turnstile_ratio']:>12.3f}")
    print(f"{'bound':>10} {demo['ins_only_bound']:>16.3f} "
          f"{demo['turnstile_bound']:>12.3f}")
    print(f"adversarial-deletion worst ratio: "
          f"{demo['adversarial_worst_ratio']:.3f}")
    ok = (demo["worst_ins_only_ratio"] <= demo["ins_only_bound"]
          and demo["worst_turnstile_ratio"] <= demo["turnstile_bound"])
    return 0 if ok else 1


def cmd_oracle(args) -> int:
    updates, meta = read_stream(args.path)
    snap = snapshot_from_updates(updates)
    if meta["kind"] == "interval":
        alpha = exact_mis_intervals(snap)
        beta = exact_wmis_intervals(snap)
    else:
        beta = exact_wmis_disks(snap)
        alpha = exact_wmis_disks(
            [s.__class__(s.kind, s.center, s.radius, 1) for s in snap])
    print(json.dumps({"alpha": alpha, "beta": beta, "shapes": len(snap)}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geomstream")
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="generate a stream file")
    g.add_argument("--kind", choices=GEN_KINDS, required=True)
    g.add_argument("--n", type=int, default=1000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--churn", type=float, default=0.0)
    g.add_argument("--w-max", type=int, default=64)
    g.add_argument("--kappa-max", type=int, default=8)
    g.add_argument("--w-ratio", type=int, default=16)
    g.add_argument("--apd-s", type=int, default=8)
    g.add_argument("--apd-t", type=int, default=3)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_gen)

    v = sub.add_parser("validate", help="validate a stream file")
    v.add_argument("path")
    v.add_argument("--unit", action="store_true",
                   help="require unit-length intervals")
    v.set_defaults(fn=cmd_validate)

    r = sub.add_parser("run", help="run estimator-vs-oracle trials")
    r.add_argument("--algo", choices=ALGORITHMS, required=True)
    r.add_argument("--eps", type=float, default=0.25)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--trials", type=int, default=10)
    r.add_argument("--n", type=int, default=1000)
    r.add_argument("--w-max", type=int, default=64)
    r.add_argument("--churn", type=float, default=0.0)
    r.add_argument("--kappa-max", type=int, default=8)
    r.add_argument("--w-ratio", type=int, default=16)
    r.add_argument("--out", default=None, help="JSON report path")
    r.add_argument("--csv", default=None, help="CSV aggregate path")
    r.add_argument("--check", action="store_true",
                   help="exit nonzero unless the success threshold is met")
    r.set_defaults(fn=cmd_run)

    s = sub.add_parser("separation",
                       help="insertion-only vs turnstile comparison")
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--trials", type=int, default=20)
    s.add_argument("--out", default=None)
    s.set_defaults(fn=cmd_separation)

    o = sub.add_parser("oracle", help="exact optimum of a stream file")
    o.add_argument("path")
    o.set_defaults(fn=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
