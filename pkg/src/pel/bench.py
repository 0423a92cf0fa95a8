"""Experiment grids: beta sweeps and the label-noise benchmark.

Cells are independent (own seed, model and bank). They can run in worker
processes (``PEL_WORKERS``); results are always assembled in cell order.
"""

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .synth_data import generate
from .trainer import STRATEGIES, evaluate, run_beta_sweep, train

WORKERS_ENV = "PEL_WORKERS"


def worker_count():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _map(fn, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class NoiseCell:
    rate: float
    strategy: str
    replicate: int
    seed: int
    accuracy: float
    error: str = ""


def _noise_cell(args):
    config, spec, rate, strategy, replicate = args
    seed = config.seed + replicate
    data_spec = replace(spec, seed=spec.seed + replicate, mislabel_rate=rate)
    try:
        train_ds, test_ds = generate(data_spec)
        model, _, _ = train(config.replace(strategy=strategy, seed=seed),
                            train_ds, test_ds, data_spec.n_classes)
        acc = evaluate(model, test_ds)
        return NoiseCell(rate, strategy, replicate, seed, acc)
    except (ArithmeticError, ValueError) as exc:
        return NoiseCell(rate, strategy, replicate, seed, float("nan"), str(exc))


def run_noise_benchmark(config, spec, rates=None, strategies=STRATEGIES, replicates=None,
                        workers=None):
    """Train every (rate, strategy, replicate) cell on shared data and seeds.

    Replicate ``r`` uses data seed ``spec.seed + r`` and model seed
    ``config.seed + r`` for every strategy, so strategies are compared on
    identical data. Corruption follows ``spec.noise_mode``.
    """
    rates = tuple(config.noise_rates if rates is None else rates)
    replicates = config.replicates if replicates is None else replicates
    workers = worker_count() if workers is None else workers
    jobs = [(config, spec, r, s, k) for r in rates for s in strategies for k in range(replicates)]
    return _map(_noise_cell, jobs, workers)


def summarize_noise(cells):
    """Collapse replicates into ``(rate, strategy, mean, std, n_ok, n_failed)`` rows."""
    keys = []
    for c in cells:
        if (c.rate, c.strategy) not in keys:
            keys.append((c.rate, c.strategy))
    rows = []
    for rate, strategy in keys:
        accs = np.array([c.accuracy for c in cells
                         if c.rate == rate and c.strategy == strategy and not c.error])
        n_failed = sum(1 for c in cells if c.rate == rate and c.strategy == strategy and c.error)
        mean = float(accs.mean()) if accs.size else float("nan")
        std = float(accs.std(ddof=1)) if accs.size > 1 else float("nan")
        rows.append((rate, strategy, mean, std, int(accs.size), n_failed))
    return rows


def degradation_slope(summary, strategy):
    """Least-squares slope of mean accuracy against noise rate (negative = degrades)."""
    pts = [(r, m) for r, s, m, *_ in summary if s == strategy and np.isfinite(m)]
    rates, means = zip(*pts)
    return float(np.polyfit(rates, means, 1)[0])


def write_noise_csv(cells, summary, out_dir):
    with open(os.path.join(out_dir, "noise_replicates.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rate", "strategy", "replicate", "seed", "test_accuracy", "error"])
        for c in cells:
            w.writerow([repr(c.rate), c.strategy, c.replicate, c.seed, repr(c.accuracy), c.error])
    with open(os.path.join(out_dir, "noise_grid.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rate", "strategy", "mean_accuracy", "std_accuracy", "n_ok", "n_failed"])
        for rate, strategy, mean, std, n_ok, n_failed in summary:
            w.writerow([repr(rate), strategy, repr(mean), repr(std), n_ok, n_failed])


def beta_sweep(config, spec, betas=None):
    """Run the beta sweep on the dataset described by ``spec``."""
    train_ds, test_ds = generate(spec)
    return run_beta_sweep(config, config.betas if betas is None else betas,
                          train_ds, test_ds, spec.n_classes)


def write_sweep_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["beta", "test_accuracy", "error"])
        for r in rows:
            w.writerow([repr(r.beta), repr(r.accuracy), r.error])
