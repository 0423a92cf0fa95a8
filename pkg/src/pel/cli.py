"""Command-line entry point: ``pel <subcommand> --config PATH --out DIR [--set k=v ...]``."""

import argparse
import csv
import sys
from pathlib import Path

from . import bench
from .config import ConfigError, parse_config
from .gradcheck import TOLERANCE, run_suite
from .model import DivergenceError, save_model
from .prototype_bank import save_bank
from .synth_data import generate, save_csv
from .trainer import evaluate, train

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_GRADCHECK = 4


def cmd_gen_data(config, spec, out):
    train_ds, test_ds = generate(spec)
    save_csv(train_ds, out / "train.csv")
    save_csv(test_ds, out / "test.csv")
    print(f"wrote {len(train_ds)} train / {len(test_ds)} test rows "
          f"({train_ds.n_corrupted} corrupted) to {out}")
    return EXIT_OK


def cmd_train(config, spec, out):
    train_ds, test_ds = generate(spec)
    model, bank, log = train(config, train_ds, test_ds, spec.n_classes)
    log.to_csv(out / "metrics.csv")
    save_model(model, out / "model.npz")
    if bank is not None:
        save_bank(bank, out / "bank.txt")
    print(f"{config.strategy}: test accuracy {evaluate(model, test_ds):.4f} "
          f"after {config.epochs} epochs")
    return EXIT_OK


def cmd_sweep_beta(config, spec, out):
    rows = bench.beta_sweep(config, spec)
    bench.write_sweep_csv(rows, out / "beta_sweep.csv")
    for r in rows:
        print(f"beta={r.beta:g}  accuracy={r.accuracy:.4f}  {r.error}")
    return EXIT_OK


def cmd_bench_noise(config, spec, out):
    cells = bench.run_noise_benchmark(config, spec)
    summary = bench.summarize_noise(cells)
    bench.write_noise_csv(cells, summary, out)
    for rate, strategy, mean, std, n_ok, n_failed in summary:
        print(f"rate={rate:<4g} {strategy:<16} mean={mean:.4f} std={std:.4f} ok={n_ok} failed={n_failed}")
    return EXIT_OK


def cmd_gradcheck(config, spec, out, perturb=0.0):
    report = run_suite(perturb=perturb)
    worst = 0.0
    with open(out / "gradcheck.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "parameter", "max_relative_error"])
        for seed, groups in report.items():
            for name, err in groups.items():
                w.writerow([seed, name, repr(err)])
                print(f"seed {seed}  {name:<18} max rel err {err:.3e}")
                worst = max(worst, err)
    ok = worst < TOLERANCE
    print(f"gradcheck {'PASS' if ok else 'FAIL'}: worst {worst:.3e} (tolerance {TOLERANCE:g})")
    return EXIT_OK if ok else EXIT_GRADCHECK


COMMANDS = {
    "train": cmd_train,
    "sweep-beta": cmd_sweep_beta,
    "bench-noise": cmd_bench_noise,
    "gradcheck": cmd_gradcheck,
    "gen-data": cmd_gen_data,
}


def build_parser():
    p = argparse.ArgumentParser(prog="pel", description=__doc__)
    p.add_argument("subcommand", choices=sorted(COMMANDS))
    p.add_argument("--config", help="key=value config file (defaults used when omitted)")
    p.add_argument("--out", required=True, help="output directory, created if absent")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key; may repeat")
    p.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config, spec = parse_config(args.config, args.overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    command = COMMANDS[args.subcommand]
    try:
        if args.subcommand == "gradcheck":
            return command(config, spec, out, perturb=args.perturb)
        return command(config, spec, out)
    except DivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
