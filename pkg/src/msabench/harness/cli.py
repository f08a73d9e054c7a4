"""Command line entry point: ``msabench run|verify|plot|oracle``."""

import argparse
import os
import sys

import numpy as np

from .. import dataset
from ..errors import MsaError
from ..oracle import minor_subspace
from . import verify as verify_mod
from .config import parse_config, serialize_config
from .output import emit_svg_plot, mean_final_errors, median_final_errors, read_csv, write_csv
from .runner import all_traces, run_experiment


def write_results(cfg, results, outdir):
    """Write results.csv, results.svg, config.txt and checkpoints under ``outdir``."""
    os.makedirs(os.path.join(outdir, "checkpoints"), exist_ok=True)
    traces = all_traces(results)
    sigmas = [(alg, res.run, s) for res in results for alg, s in res.sigmas.items()]
    fp = results[0].fingerprint
    write_csv(traces, os.path.join(outdir, "results.csv"), fp, sigmas)
    if any(tr.points for tr in traces):
        emit_svg_plot(traces, os.path.join(outdir, "results.svg"))
    with open(os.path.join(outdir, "config.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_config(cfg))
    for res in results:
        for alg, text in sorted(res.checkpoints.items()):
            path = os.path.join(outdir, "checkpoints", f"{alg}-run{res.run}.txt")
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        if cfg.save_datasets:
            os.makedirs(os.path.join(outdir, "datasets"), exist_ok=True)
            dataset.save(res.dataset, os.path.join(outdir, "datasets", f"run{res.run}.msa"))
    return traces


def cmd_run(args):
    with open(args.config, encoding="utf-8") as fh:
        cfg = parse_config(fh.read())
    outdir = args.output or cfg.output
    results = run_experiment(cfg, workers=args.workers)
    traces = write_results(cfg, results, outdir)
    med, mean = median_final_errors(traces), mean_final_errors(traces)
    print(f"fingerprint {results[0].fingerprint}")
    for alg in med:
        diverged = sum(1 for tr in traces if tr.algorithm == alg and tr.diverged_at is not None)
        print(f"{alg:<13} median final error {med[alg]:.4e}  mean {mean[alg]:.4e}  diverged runs {diverged}")
    print(f"wrote {os.path.join(outdir, 'results.csv')}")
    return 0


def cmd_verify(args):
    if (args.n is None) != (args.t is None):
        raise SystemExit("msabench verify: error: --n and --t must be given together")
    return verify_mod.main(args.seed, args.n, args.t, args.trials)


def cmd_plot(args):
    traces, _ = read_csv(args.csv)
    emit_svg_plot(traces, args.svg)
    print(f"wrote {args.svg}")
    return 0


def cmd_oracle(args):
    data = dataset.load(args.dataset)
    C = dataset.empirical_covariance(data.X)
    basis = minor_subspace(C, args.m)
    print(f"n = {data.n}  T = {data.T}  seed = {data.seed}")
    print("minor eigenvalues (ascending): " + " ".join(repr(float(v)) for v in basis.values))
    print("basis vectors (columns):")
    with np.printoptions(precision=8, suppress=True, linewidth=120):
        print(basis.vectors)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="msabench", description="Minor subspace analysis benchmark.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the experiment described by a config file")
    r.add_argument("config")
    r.add_argument("--output", default=None, help="output directory (overrides the config)")
    r.add_argument("--workers", type=int, default=None, help="parallel runs (overrides the config)")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run the oracle property suite")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--n", type=int, default=None)
    v.add_argument("--t", type=int, default=None)
    v.add_argument("--trials", type=int, default=50)
    v.set_defaults(func=cmd_verify)

    pl = sub.add_parser("plot", help="render a results CSV as an SVG plot")
    pl.add_argument("csv")
    pl.add_argument("svg")
    pl.set_defaults(func=cmd_plot)

    o = sub.add_parser("oracle", help="exact minor subspace of a saved dataset")
    o.add_argument("dataset")
    o.add_argument("--m", type=int, required=True)
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MsaError, OSError) as exc:
        print(f"msabench {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
