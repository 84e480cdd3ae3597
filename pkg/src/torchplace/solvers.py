"""QUBO minimizers: simulated annealing, tabu search, their hybrid, and brute force.

All solvers are deterministic given the instance and ``SolverConfig.seed``.
The inner loops are numba kernels working on the linear terms ``h = diag(Q)``
and the symmetric zero-diagonal couplings ``W = Q + Q^T - 2 diag(Q)``;
flipping bit i changes the energy by ``(1 - 2 x_i) * (h_i + W_i . x)``.
"""
from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numba
import numpy as np
from scipy import sparse

from .qubo import QuboInstance, energy

MAX_EXHAUSTIVE = 25
_EPS = 1e-9


class CapacityError(ValueError):
    """Instance too large for exhaustive enumeration."""


class SolverKind(str, enum.Enum):
    SA = "sa"
    TABU = "tabu"
    TABU_SA = "tabusa"
    EXHAUSTIVE = "exhaustive"


@dataclass(frozen=True)
class SAParams:
    sweeps: int = 1000
    beta_start: float = 0.1
    beta_end: float = 10.0
    restarts: int = 10

    def __post_init__(self):
        if self.sweeps < 1 or self.restarts < 1:
            raise ValueError("SA sweeps and restarts must be positive")
        if not 0 < self.beta_start < self.beta_end:
            raise ValueError("need 0 < beta_start < beta_end")


@dataclass(frozen=True)
class TabuParams:
    max_iterations: int | None = None  # None: 50 * n
    tenure: int | None = None  # None: min(20, n // 4), at least 1
    restarts: int = 4

    def __post_init__(self):
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.tenure is not None and self.tenure < 0:
            raise ValueError("tenure must be non-negative")
        if self.restarts < 1:
            raise ValueError("restarts must be positive")


@dataclass(frozen=True)
class SolverConfig:
    kind: SolverKind = SolverKind.TABU_SA
    seed: int = 0
    sa: SAParams = field(default_factory=SAParams)
    tabu: TabuParams = field(default_factory=TabuParams)

    def __post_init__(self):
        object.__setattr__(self, "kind", SolverKind(self.kind))

    def with_seed(self, seed: int) -> SolverConfig:
        return replace(self, seed=int(seed))


@dataclass(frozen=True)
class SolveResult:
    x: np.ndarray
    energy: float
    evaluations: int


# --- kernels ----------------------------------------------------------------
# Couplings are passed in CSR form (indptr, indices, weights) so a flip only
# touches the variables that share a non-zero coupling with it.

@numba.njit(cache=True, nogil=True)
def _local_field(h, indptr, indices, weights, x):
    f = h.copy()
    for j in range(x.shape[0]):
        if x[j]:
            for p in range(indptr[j], indptr[j + 1]):
                f[indices[p]] += weights[p]
    return f


@numba.njit(cache=True, nogil=True)
def _flip(x, f, indptr, indices, weights, i):
    sign = 1.0 if x[i] == 0 else -1.0
    x[i] = 1 - x[i]
    for p in range(indptr[i], indptr[i + 1]):
        f[indices[p]] += sign * weights[p]


@numba.njit(cache=True, nogil=True)
def _descend(h, indptr, indices, weights, x, e):
    """Steepest single-flip descent to a local minimum (lowest index on ties)."""
    f = _local_field(h, indptr, indices, weights, x)
    n = x.shape[0]
    while True:
        best_i = -1
        best_d = -_EPS
        for i in range(n):
            d = f[i] if x[i] == 0 else -f[i]
            if d < best_d:
                best_d = d
                best_i = i
        if best_i < 0:
            return e
        _flip(x, f, indptr, indices, weights, best_i)
        e += best_d


@numba.njit(cache=True, nogil=True)
def _anneal(h, indptr, indices, weights, x, e, betas, u):
    n = x.shape[0]
    f = _local_field(h, indptr, indices, weights, x)
    best_x = x.copy()
    best_e = e
    for s in range(betas.shape[0]):
        beta = betas[s]
        for i in range(n):
            d = f[i] if x[i] == 0 else -f[i]
            if d <= 0.0 or u[s, i] < np.exp(-beta * d):
                _flip(x, f, indptr, indices, weights, i)
                e += d
                if e < best_e - _EPS:
                    best_e = e
                    best_x[:] = x
    best_e = _descend(h, indptr, indices, weights, best_x, best_e)
    return best_x, best_e


@numba.njit(cache=True, nogil=True)
def _tabu(h, indptr, indices, weights, x, e, max_iter, tenure):
    n = x.shape[0]
    f = _local_field(h, indptr, indices, weights, x)
    tabu_until = np.zeros(n, dtype=np.int64)
    best_x = x.copy()
    best_e = e
    for it in range(max_iter):
        move = -1
        move_d = np.inf
        for i in range(n):
            d = f[i] if x[i] == 0 else -f[i]
            if tabu_until[i] > it and not e + d < best_e - _EPS:
                continue
            if d < move_d - _EPS:
                move_d = d
                move = i
        if move < 0:
            break
        _flip(x, f, indptr, indices, weights, move)
        e += move_d
        tabu_until[move] = it + 1 + tenure
        if e < best_e - _EPS:
            best_e = e
            best_x[:] = x
    return best_x, best_e


@numba.njit(cache=True, nogil=True)
def _enumerate(h, indptr, indices, weights):
    """Gray-code sweep over all 2^n states.

    Returns the minimum energy and the lexicographically smallest minimizer
    as an integer whose most significant bit is x_0.
    """
    n = h.shape[0]
    x = np.zeros(n, dtype=np.int64)
    f = h.copy()
    e = 0.0
    best_e = 0.0
    best_code = 0
    code = 0
    for k in range(1, 1 << n):
        # bit that changes between gray(k-1) and gray(k)
        b = 0
        while not (k >> b) & 1:
            b += 1
        i = n - 1 - b
        d = f[i] if x[i] == 0 else -f[i]
        _flip(x, f, indptr, indices, weights, i)
        e += d
        code ^= 1 << b
        tol = _EPS * max(1.0, abs(best_e))
        if e < best_e - tol:
            best_e = e
            best_code = code
        elif e <= best_e + tol and code < best_code:
            best_code = code
    return best_e, best_code


# --- public API -------------------------------------------------------------

def _arrays(q: QuboInstance):
    w = sparse.csr_matrix(q.coupling)
    return (np.ascontiguousarray(q.linear), w.indptr.astype(np.int64),
            w.indices.astype(np.int64), w.data.astype(np.float64))


def _result(q: QuboInstance, x, evaluations) -> SolveResult:
    x = np.asarray(x, dtype=np.int64)
    return SolveResult(x, energy(q, x), int(evaluations))


def _starts(q: QuboInstance, restarts: int, rng, init):
    starts = []
    if init is not None:
        starts.append(np.asarray(init, dtype=np.int64).copy())
    while len(starts) < restarts:
        starts.append(rng.integers(0, 2, q.n, dtype=np.int64))
    return starts


def _pick(q: QuboInstance, candidates):
    """Lowest recomputed energy; earlier candidate wins ties."""
    best, best_e = None, np.inf
    for x in candidates:
        e = energy(q, x)
        if best is None or e < best_e - _EPS * max(1.0, abs(best_e)):
            best, best_e = x, e
    return best


def simulated_annealing(q: QuboInstance, params: SAParams = SAParams(), seed: int = 0,
                        init=None) -> SolveResult:
    """Metropolis single-flip sweeps under a geometric inverse-temperature schedule.

    Each restart ends with a steepest-descent quench; ``init`` (if given) is
    used as the first restart's starting state.
    """
    if q.n == 0:
        return _result(q, np.zeros(0), 0)
    rng = np.random.default_rng(seed)
    arrays = _arrays(q)
    betas = np.geomspace(params.beta_start, params.beta_end, params.sweeps)
    found = []
    for x0 in _starts(q, params.restarts, rng, init):
        u = rng.random((params.sweeps, q.n))
        x, _ = _anneal(*arrays, x0, energy(q, x0) - q.offset, betas, u)
        found.append(x)
    return _result(q, _pick(q, found), params.restarts * params.sweeps * q.n)


def tabu_search(q: QuboInstance, params: TabuParams = TabuParams(), seed: int = 0,
                init=None) -> SolveResult:
    """Steepest single-flip tabu search with aspiration on new bests."""
    if q.n == 0:
        return _result(q, np.zeros(0), 0)
    rng = np.random.default_rng(seed)
    arrays = _arrays(q)
    n = q.n
    max_iter = params.max_iterations or 50 * n
    tenure = params.tenure if params.tenure is not None else max(1, min(20, n // 4))
    tenure = min(tenure, n - 1)
    found = []
    for x0 in _starts(q, params.restarts, rng, init):
        x, _ = _tabu(*arrays, x0, energy(q, x0) - q.offset, max_iter, tenure)
        found.append(x)
    return _result(q, _pick(q, found), params.restarts * max_iter * n)


def exhaustive(q: QuboInstance) -> SolveResult:
    """Global minimum by enumeration; lexicographically smallest x on ties."""
    n = q.n
    if n > MAX_EXHAUSTIVE:
        raise CapacityError(f"exhaustive search is limited to n <= {MAX_EXHAUSTIVE}, got n = {n}")
    if n == 0:
        return _result(q, np.zeros(0), 0)
    arrays = _arrays(q)
    _, code = _enumerate(*arrays)
    x = np.array([(code >> (n - 1 - i)) & 1 for i in range(n)], dtype=np.int64)
    return _result(q, x, (1 << n) - 1)


def solve_hybrid(q: QuboInstance, cfg: SolverConfig, init=None) -> SolveResult:
    """Run SA and tabu concurrently on derived seeds; keep the better (SA on ties)."""
    sa_cfg, tabu_cfg = hybrid_components(cfg)
    with ThreadPoolExecutor(max_workers=2) as pool:
        sa = pool.submit(simulated_annealing, q, cfg.sa, sa_cfg.seed, init)
        tabu = pool.submit(tabu_search, q, cfg.tabu, tabu_cfg.seed, init)
        r_sa, r_tabu = sa.result(), tabu.result()
    best = r_tabu if r_tabu.energy < r_sa.energy - _EPS * max(1.0, abs(r_sa.energy)) else r_sa
    return SolveResult(best.x, best.energy, r_sa.evaluations + r_tabu.evaluations)


def hybrid_components(cfg: SolverConfig) -> tuple[SolverConfig, SolverConfig]:
    """The SA and tabu configs whose results ``solve_hybrid`` combines."""
    sa_seed, tabu_seed = (int(s.generate_state(1)[0])
                          for s in np.random.SeedSequence(cfg.seed).spawn(2))
    return replace(cfg, kind=SolverKind.SA, seed=sa_seed), replace(cfg, kind=SolverKind.TABU, seed=tabu_seed)


def solve(q: QuboInstance, cfg: SolverConfig = SolverConfig(), init=None) -> SolveResult:
    kind = cfg.kind
    if kind is SolverKind.EXHAUSTIVE:
        return exhaustive(q)
    if kind is SolverKind.SA:
        return simulated_annealing(q, cfg.sa, cfg.seed, init)
    if kind is SolverKind.TABU:
        return tabu_search(q, cfg.tabu, cfg.seed, init)
    return solve_hybrid(q, cfg, init)
