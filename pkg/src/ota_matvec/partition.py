"""Partitioning of the data matrix into a K x L grid and load balancing.

Worker ``(k, l)`` multiplies the ``M_k x Q_l`` block ``A[k, l]`` by the
subvector ``x[l]``. The workers of row-group ``k`` share uplink slot ``k``
and their outputs add up over the air, so assigning more column groups
costs no extra radio resources.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .numerics import as_matrix

__all__ = [
    "PartitionSpec",
    "WorkerProfile",
    "uniform_partition",
    "cycle_counts",
    "balance_columns",
    "two_group_load_ratios",
    "completion_times",
    "completion_outage",
    "completion_outage_curve",
]


@dataclass(frozen=True)
class PartitionSpec:
    row_sizes: tuple[int, ...]
    col_sizes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "row_sizes", tuple(int(m) for m in self.row_sizes))
        object.__setattr__(self, "col_sizes", tuple(int(q) for q in self.col_sizes))
        if not self.row_sizes or not self.col_sizes:
            raise ValueError("partition needs at least one row group and one column group")
        if min(self.row_sizes) < 1 or min(self.col_sizes) < 1:
            raise ValueError("every block dimension must be positive")

    @property
    def K(self) -> int:
        return len(self.row_sizes)

    @property
    def L(self) -> int:
        return len(self.col_sizes)

    @property
    def M(self) -> int:
        return sum(self.row_sizes)

    @property
    def Q(self) -> int:
        return sum(self.col_sizes)

    @property
    def J(self) -> int:
        return self.K * self.L

    @property
    def uniform_rows(self) -> bool:
        return len(set(self.row_sizes)) == 1

    @property
    def uniform_cols(self) -> bool:
        return len(set(self.col_sizes)) == 1

    def row_slices(self) -> list[slice]:
        edges = np.concatenate([[0], np.cumsum(self.row_sizes)])
        return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]

    def col_slices(self) -> list[slice]:
        edges = np.concatenate([[0], np.cumsum(self.col_sizes)])
        return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]

    def block(self, a: np.ndarray, k: int, l: int) -> np.ndarray:
        return a[self.row_slices()[k], self.col_slices()[l]]

    def blocks(self, a) -> list[list[np.ndarray]]:
        """The K x L grid of submatrices of ``a``."""
        a = as_matrix(a)
        if a.shape != (self.M, self.Q):
            raise ValueError(f"matrix shape {a.shape} does not match partition ({self.M}, {self.Q})")
        rs, cs = self.row_slices(), self.col_slices()
        return [[a[r, c] for c in cs] for r in rs]

    def partial_products(self, a, x) -> list[list[np.ndarray]]:
        """Worker outputs ``y[k][l] = A[k, l] @ x[l]``."""
        x = as_matrix(x)
        if x.shape[0] != self.Q:
            raise ValueError(f"vector length {x.shape[0]} does not match Q={self.Q}")
        xs = [x[c] for c in self.col_slices()]
        return [[blk @ xs[l] for l, blk in enumerate(row)] for row in self.blocks(a)]

    def assemble(self, a, x) -> np.ndarray:
        """Recompute ``A @ x`` as the row-group sums of the worker outputs."""
        parts = self.partial_products(a, x)
        return np.vstack([sum(row[1:], row[0]) for row in parts])


@dataclass(frozen=True)
class WorkerProfile:
    clock_speed: float
    setup_delay_mean: float = 0.0
    max_power: float = 1.0

    def __post_init__(self):
        if self.clock_speed <= 0:
            raise ValueError("clock_speed must be positive")
        if self.setup_delay_mean < 0:
            raise ValueError("setup_delay_mean must be nonnegative")
        if self.max_power <= 0:
            raise ValueError("max_power must be positive")


def uniform_partition(M: int, Q: int, K: int, L: int) -> PartitionSpec:
    if K < 1 or L < 1:
        raise ValueError("K and L must be positive")
    if M % K or Q % L:
        raise ValueError(f"cannot split {M} x {Q} evenly into {K} x {L} blocks")
    return PartitionSpec((M // K,) * K, (Q // L,) * L)


def cycle_counts(partition: PartitionSpec, tau: float = 1.0) -> np.ndarray:
    """CPU cycles ``tau * M_k * Q_l`` for each worker, as a K x L array."""
    return tau * np.outer(partition.row_sizes, partition.col_sizes).astype(float)


def two_group_load_ratios(clock_speeds: Sequence[float],
                          row_multipliers: Sequence[float],
                          L_total: int,
                          tau: float = 1.0) -> Callable[[int], np.ndarray]:
    """Load-ratio function for two column groups ``(L_1, L_total - L_1)``.

    Workers alternate between the two column groups: worker ``i`` gets
    ``row_multipliers[i]`` rows of column group ``i % 2``.
    """
    c = np.asarray(clock_speeds, dtype=float)
    mult = np.asarray(row_multipliers, dtype=float)
    if c.shape != mult.shape:
        raise ValueError("clock_speeds and row_multipliers differ in length")
    group = np.arange(len(c)) % 2

    def ratios(L_1: int) -> np.ndarray:
        widths = np.where(group == 0, L_1, L_total - L_1)
        return tau * mult * widths / c

    return ratios


def balance_columns(L_total: int, load_ratio_fn: Callable[[int], Sequence[float]]) -> int:
    """Integer ``L_1`` in ``[1, L_total - 1]`` minimising the largest load ratio.

    Ties go to the smaller ``L_1``.
    """
    if L_total < 2:
        raise ValueError("need at least two columns to split")
    best, best_val = None, np.inf
    for L_1 in range(1, L_total):
        val = float(np.max(load_ratio_fn(L_1)))
        if val < best_val:
            best, best_val = L_1, val
    return best


def completion_times(loads: Sequence[float], profiles: Sequence[WorkerProfile],
                     trials: int, rng: np.random.Generator) -> np.ndarray:
    """Per-trial overall completion time ``max_k (G_k / c_k + Z_k)``."""
    loads = np.asarray(loads, dtype=float)
    if len(loads) != len(profiles):
        raise ValueError("loads and profiles differ in length")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    compute = loads / np.array([p.clock_speed for p in profiles])
    means = np.array([p.setup_delay_mean for p in profiles])
    z = rng.standard_exponential((trials, len(loads))) * means
    return np.max(compute + z, axis=1)


def completion_outage(loads: Sequence[float], profiles: Sequence[WorkerProfile],
                      deadline: float, trials: int, rng: np.random.Generator) -> float:
    """Monte-Carlo estimate of ``Pr(max_k T_k > deadline)``."""
    if deadline <= 0:
        raise ValueError("deadline must be positive")
    t = completion_times(loads, profiles, trials, rng)
    return float(np.mean(t > deadline))


def completion_outage_curve(loads, profiles, deadlines, trials: int,
                            rng: np.random.Generator) -> np.ndarray:
    """Outage at every deadline, reusing one set of samples for the whole curve."""
    t = completion_times(loads, profiles, trials, rng)
    d = np.asarray(deadlines, dtype=float)
    return np.mean(t[:, None] > d[None, :], axis=0)
