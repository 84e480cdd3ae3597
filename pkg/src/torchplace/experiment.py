"""Repeated ADMM runs with per-iteration confidence intervals."""
from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from .admm import AdmmConfig, AdmmResult, run_admm
from .qubo import LinearConstraintSystem


@dataclass(frozen=True)
class ExperimentReport:
    """Statistics over ``k`` completed runs, aligned by iteration."""

    k: int
    torches_mean: np.ndarray
    torches_ci: np.ndarray
    violations_mean: np.ndarray
    violations_ci: np.ndarray
    runs: list[AdmmResult]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iteration", "torches_mean", "torches_ci95", "violations_mean", "violations_ci95"])
        for it in range(len(self.torches_mean)):
            writer.writerow([it + 1, f"{self.torches_mean[it]:.6g}", f"{self.torches_ci[it]:.6g}",
                             f"{self.violations_mean[it]:.6g}", f"{self.violations_ci[it]:.6g}"])
        return buf.getvalue()


def mean_ci(samples, confidence: float = 0.95, axis: int = 0):
    """Mean and Student-t confidence half-width (k - 1 degrees of freedom)."""
    samples = np.asarray(samples, dtype=np.float64)
    k = samples.shape[axis]
    mean = samples.mean(axis=axis)
    if k < 2:
        return mean, np.zeros_like(mean)
    sem = samples.std(axis=axis, ddof=1) / np.sqrt(k)
    return mean, stats.t.ppf(0.5 + confidence / 2, k - 1) * sem


def run_seeds(seed: int, repeats: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(repeats)]


def _one(args):
    c, cfg = args
    return run_admm(c, cfg)


def run_experiment(c: LinearConstraintSystem, cfg: AdmmConfig, repeats: int = 10,
                   seed: int = 0, workers: int = 1) -> ExperimentReport:
    """Run ADMM ``repeats`` times with seeds derived from ``seed``."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    jobs = [(c, replace(cfg, solver=cfg.solver.with_seed(s))) for s in run_seeds(seed, repeats)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_one, jobs))
    else:
        runs = [_one(job) for job in jobs]

    # early-exit runs are padded with their last value so every run spans the same iterations
    length = max(len(r.trace) for r in runs)

    def padded(name):
        rows = []
        for r in runs:
            col = r.trace.column(name)
            rows.append(np.concatenate([col, np.repeat(col[-1:], length - len(col))]))
        return np.array(rows)

    t_mean, t_ci = mean_ci(padded("torches"))
    v_mean, v_ci = mean_ci(padded("violations"))
    return ExperimentReport(len(runs), t_mean, t_ci, v_mean, v_ci, runs)
