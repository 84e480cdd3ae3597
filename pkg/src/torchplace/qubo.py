"""QUBO instances and the constraint embeddings used for torch placement."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .geometry import UNREACHABLE, LightParams, distance_cache
from .heightmap import Heightmap


class DimensionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QuboInstance:
    """Upper-triangular QUBO with energy ``x^T Q x + offset``.

    ``offset`` carries the constant that a builder dropped from the matrix; it
    is zero unless the builder says otherwise and never affects minimizers.
    """

    q: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        q = np.array(self.q, dtype=np.float64, copy=True)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise DimensionError(f"Q must be square, got shape {q.shape}")
        if not np.all(np.isfinite(q)):
            raise ValueError("Q has non-finite entries")
        if np.any(np.tril(q, -1)):
            raise ValueError("Q must be upper triangular")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @classmethod
    def from_symmetric(cls, m, offset=0.0) -> QuboInstance:
        """Fold a symmetric quadratic form x^T M x into upper-triangular storage."""
        m = np.asarray(m, dtype=np.float64)
        return cls(np.triu(m) + np.triu(m.T, 1), offset)

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @cached_property
    def coupling(self) -> np.ndarray:
        """Symmetric off-diagonal couplings W with W_ij = Q_ij + Q_ji, zero diagonal."""
        w = self.q + self.q.T
        np.fill_diagonal(w, 0.0)
        w.setflags(write=False)
        return w

    @cached_property
    def linear(self) -> np.ndarray:
        h = np.diag(self.q).copy()
        h.setflags(write=False)
        return h


def energy(qubo: QuboInstance, x) -> float:
    """Sum of Q_ij x_i x_j over i <= j, plus the instance offset."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (qubo.n,):
        raise DimensionError(f"x has shape {x.shape}, expected ({qubo.n},)")
    return float(x @ qubo.q @ x) + qubo.offset


@dataclass(frozen=True)
class LinearConstraintSystem:
    """The covering constraints ``D x >= 1``."""

    d: np.ndarray
    rhs: np.ndarray = field(default=None)

    def __post_init__(self):
        d = np.asarray(self.d, dtype=np.int64)
        if d.ndim != 2:
            raise DimensionError("D must be a matrix")
        rhs = np.ones(d.shape[0], dtype=np.int64) if self.rhs is None else np.asarray(self.rhs)
        if rhs.shape != (d.shape[0],):
            raise DimensionError(f"rhs has shape {rhs.shape}, expected ({d.shape[0]},)")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "rhs", rhs)

    @classmethod
    def from_coverage(cls, cov) -> LinearConstraintSystem:
        return cls(cov.d)

    @property
    def n(self) -> int:
        return self.d.shape[1]

    def check(self, v, name="vector") -> np.ndarray:
        v = np.asarray(v)
        if v.shape != (self.d.shape[0],):
            raise DimensionError(f"{name} has shape {v.shape}, expected ({self.d.shape[0]},)")
        return v

    def violations(self, x) -> int:
        return int(np.count_nonzero(self.d @ np.asarray(x, dtype=np.int64) < self.rhs))

    def feasible(self, x) -> bool:
        return self.violations(x) == 0


def augmented_lagrangian(c: LinearConstraintSystem, x, z, lam, mu: float, gamma: float = 0.0) -> float:
    """1^T x + gamma 1^T step(z) + lam^T c(x, z) + mu/2 ||c(x, z)||^2 with c = Dx - 1 - z."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    res = c.d @ x - c.rhs - z
    return float(x.sum() + gamma * np.count_nonzero(z < 0) + np.dot(lam, res) + 0.5 * mu * res @ res)


def build_admm_step_qubo(c: LinearConstraintSystem, z, lam, mu: float,
                         anchor_scale: float = 1.0) -> QuboInstance:
    """QUBO for the x-update: argmin_x of the augmented Lagrangian at fixed z, lam, mu.

    The offset is chosen so that the energy equals the Lagrangian exactly
    (for z >= 0, where the step-function term vanishes).

    ``anchor_scale`` multiplies the linear pull ``-mu D^T (1 + z)`` of the
    quadratic penalty. Only 1.0 is the exact expansion; 0.5 gives the
    half-weight variant, which penalizes over-coverage more and places fewer
    torches, but reaches feasibility more slowly.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    z = c.check(z, "z").astype(np.float64)
    lam = c.check(lam, "lambda").astype(np.float64)
    d = c.d.astype(np.float64)
    b = c.rhs + z
    gram = d.T @ d
    q = mu * np.triu(gram, 1)
    q[np.diag_indices_from(q)] = (1.0 + d.T @ lam - anchor_scale * mu * (d.T @ b)
                                  + 0.5 * mu * np.diag(gram))
    offset = float(-lam @ b + 0.5 * mu * b @ b)
    return QuboInstance(q, offset)


def slack_widths(c: LinearConstraintSystem) -> np.ndarray:
    """Bits needed per row so the surplus (Dx)_i - 1 can reach rowsum_i - 1."""
    rowsum = c.d.sum(axis=1)
    return np.array([math.ceil(math.log2(r)) if r > 1 else 0 for r in rowsum], dtype=np.int64)


def build_slack_qubo(c: LinearConstraintSystem, beta: float) -> QuboInstance:
    """Penalty QUBO 1^T x + beta ||Dx - 1 - s||^2 with binary-encoded slacks.

    Variables: the n tile bits first, then each row's slack bits in row order,
    least significant first. The offset restores the dropped constant beta*||1||^2.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    n_rows, n = c.d.shape
    widths = slack_widths(c)
    total = n + int(widths.sum())
    a = np.zeros((n_rows, total))
    a[:, :n] = c.d
    col = n
    for i, m in enumerate(widths):
        a[i, col:col + m] = -(2.0 ** np.arange(m))
        col += m
    cost = np.zeros(total)
    cost[:n] = 1.0
    rhs = c.rhs.astype(np.float64)
    gram = a.T @ a
    q = 2.0 * beta * np.triu(gram, 1)
    q[np.diag_indices_from(q)] = cost + beta * np.diag(gram) - 2.0 * beta * (a.T @ rhs)
    return QuboInstance(q, float(beta * rhs @ rhs))


def encode_slack(c: LinearConstraintSystem, x) -> np.ndarray:
    """Full slack-QUBO assignment for ``x`` with slack bits encoding max(0, Dx - 1)."""
    x = np.asarray(x, dtype=np.int64)
    surplus = np.maximum(0, c.d @ x - c.rhs)
    bits = [x]
    for s, m in zip(surplus, slack_widths(c)):
        bits.append((int(s) >> np.arange(m)) & 1)
    return np.concatenate(bits).astype(np.int64)


def build_lse_constraints(hmap: Heightmap, params: LightParams, alpha: float):
    """Linearized log-sum-exp coverage constraints ``x.u_i + v_i <= 0``, one per tile.

    Uses the offset P = radius + 1 for every tile, so that an unlit
    tile's own zero entries cannot satisfy the smoothed max on their own, and
    keeps the ``exp(-alpha P)`` factor on the constant term. Entries for
    unreachable pairs use exp(-inf) = 0.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    n = hmap.n
    if n == 1:
        return [(np.array([-1.0]), 1.0)]
    radius = params.radius
    offset = radius + 1
    cache = distance_cache(hmap, radius)
    rhs = math.exp(-alpha * radius)
    base = math.exp(-alpha * offset)
    out = []
    for i in range(n):
        dist = cache[i].dist
        reach = np.where(dist == UNREACHABLE, 0.0, np.exp(-alpha * np.maximum(dist, 0)))
        u = base - reach
        v = rhs - n * base
        out.append((u, v))
    return out


def lse_violations(constraints, x) -> int:
    x = np.asarray(x, dtype=np.float64)
    return sum(1 for u, v in constraints if x @ u + v > 0)


def export_qubo(qubo: QuboInstance) -> str:
    """Text dump: first line n, then one ``i j value`` line per non-zero entry."""
    lines = [str(qubo.n)]
    rows, cols = np.nonzero(qubo.q)
    for i, j in zip(rows, cols):
        lines.append(f"{i} {j} {float(qubo.q[i, j])!r}")
    if qubo.offset:
        lines.append(f"# offset {float(qubo.offset)!r}")
    return "\n".join(lines) + "\n"


def import_qubo(text: str) -> QuboInstance:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    n = int(lines[0])
    q = np.zeros((n, n))
    offset = 0.0
    for ln in lines[1:]:
        if ln.startswith("#"):
            parts = ln[1:].split()
            if parts and parts[0] == "offset":
                offset = float(parts[1])
            continue
        i, j, v = ln.split()
        q[int(i), int(j)] = float(v)
    return QuboInstance(q, offset)
