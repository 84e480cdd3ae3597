"""ADMM driver that learns Lagrange multipliers for the covering constraints.

Each iteration solves one QUBO for the torch bits ``x``, then updates the
integer surplus ``z``, the multipliers ``lam`` and the penalty weight ``mu``.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .qubo import LinearConstraintSystem, build_admm_step_qubo
from .solvers import SolverConfig, solve

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ("iteration", "torches", "violations", "primal_residual", "mu", "energy")


@dataclass(frozen=True)
class AdmmConfig:
    """ADMM hyperparameters.

    ``gamma`` weighs the negative-surplus penalty in the Lagrangian. The
    z-update used here, max(0, Dx - 1), does not depend on it, so it has no
    effect on the iterates; it is kept so runs record the full setting.

    ``anchor_scale`` is passed to ``build_admm_step_qubo``; values below 1
    trade slower feasibility for fewer torches.
    """

    mu0: float = 0.01
    rho: float = 1.1
    budget: int = 30
    gamma: float = 1.0
    solver: SolverConfig = field(default_factory=SolverConfig)
    early_exit: bool = False
    warm_start: bool = True
    anchor_scale: float = 1.0

    def __post_init__(self):
        if self.mu0 <= 0:
            raise ValueError("mu0 must be positive")
        if self.rho < 1:
            raise ValueError("rho must be >= 1")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if self.anchor_scale <= 0:
            raise ValueError("anchor_scale must be positive")


@dataclass
class AdmmState:
    x: np.ndarray
    z: np.ndarray
    lam: np.ndarray
    mu: float
    iteration: int = 0

    @classmethod
    def initial(cls, n: int, mu0: float) -> AdmmState:
        return cls(np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64),
                   np.zeros(n, dtype=np.float64), float(mu0))


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    torches: int
    violations: int
    primal_residual: float
    mu: float
    energy: float


@dataclass
class IterationTrace:
    records: list[IterationRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, k):
        return self.records[k]

    def __iter__(self):
        return iter(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for r in self.records:
            writer.writerow([r.iteration, r.torches, r.violations,
                             repr(r.primal_residual), repr(r.mu), repr(r.energy)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> IterationTrace:
        rows = csv.DictReader(io.StringIO(text))
        return cls([IterationRecord(int(r["iteration"]), int(r["torches"]), int(r["violations"]),
                                    float(r["primal_residual"]), float(r["mu"]), float(r["energy"]))
                    for r in rows])


@dataclass
class AdmmResult:
    state: AdmmState
    trace: IterationTrace
    xs: list[np.ndarray]
    best_feasible: np.ndarray | None
    best_feasible_iteration: int | None

    @property
    def x(self) -> np.ndarray:
        """The reported answer: best feasible iterate if any, else the last iterate."""
        return self.best_feasible if self.best_feasible is not None else self.state.x

    @property
    def feasible(self) -> bool:
        return self.best_feasible is not None


def residual(c: LinearConstraintSystem, x, z) -> np.ndarray:
    """c(x, z) = Dx - 1 - z."""
    x = np.asarray(x)
    if x.shape != (c.n,):
        raise ValueError(f"x has shape {x.shape}, expected ({c.n},)")
    z = c.check(z, "z")
    return c.d @ x - c.rhs - z


def update_z(c: LinearConstraintSystem, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (c.n,):
        raise ValueError(f"x has shape {x.shape}, expected ({c.n},)")
    return np.maximum(0, c.d @ x - c.rhs)


def update_multipliers(state: AdmmState, c: LinearConstraintSystem) -> np.ndarray:
    return state.lam + state.mu * residual(c, state.x, state.z)


def update_mu(mu: float, rho: float, primal: float, dual_like: float) -> float:
    """Residual-balancing rule with a factor-10 margin."""
    if primal > 10.0 * mu * dual_like:
        return mu * rho
    if dual_like > 10.0 * mu * primal:
        return mu / rho
    return mu


def run_admm(c: LinearConstraintSystem, cfg: AdmmConfig = AdmmConfig(), callback=None) -> AdmmResult:
    """Run exactly ``cfg.budget`` iterations (fewer only with ``early_exit``).

    The sub-solver seed changes every iteration (derived from the configured
    seed), and with ``warm_start`` the previous x seeds one of its restarts.
    """
    n = c.n
    state = AdmmState.initial(n, cfg.mu0)
    trace = IterationTrace()
    xs = []
    best, best_it = None, None
    seeds = np.random.SeedSequence(cfg.solver.seed).generate_state(cfg.budget)
    stable = 0

    for k in range(cfg.budget):
        x_prev, z_prev = state.x, state.z
        qubo = build_admm_step_qubo(c, state.z, state.lam, state.mu, cfg.anchor_scale)
        result = solve(qubo, cfg.solver.with_seed(int(seeds[k])),
                       init=x_prev if cfg.warm_start else None)
        x = result.x
        z = update_z(c, x)
        mu_used = state.mu
        state = AdmmState(x, z, state.lam, state.mu, k + 1)
        state.lam = update_multipliers(state, c)
        primal = float(np.linalg.norm(residual(c, x_prev, z_prev)))
        dual_like = float(np.linalg.norm(c.d @ (z_prev - z)))
        state.mu = update_mu(state.mu, cfg.rho, primal, dual_like)

        violations = c.violations(x)
        torches = int(x.sum())
        record = IterationRecord(k + 1, torches, violations,
                                 float(np.linalg.norm(residual(c, x, z))), mu_used, result.energy)
        trace.records.append(record)
        xs.append(x)
        logger.debug("iteration %d: torches=%d violations=%d mu=%.5g", k + 1, torches, violations, mu_used)
        if callback is not None:
            callback(state, record)

        if violations == 0 and (best is None or torches < int(best.sum())):
            best, best_it = x.copy(), k + 1
        if cfg.early_exit:
            prev = trace[-2] if len(trace) > 1 else None
            if violations == 0 and prev is not None and prev.violations == 0 and prev.torches == torches:
                stable += 1
            else:
                stable = 0
            if stable >= 2:  # three consecutive feasible iterations with the same count
                break

    return AdmmResult(state, trace, xs, best, best_it)
