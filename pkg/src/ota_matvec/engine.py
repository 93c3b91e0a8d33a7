"""One over-the-air round and Monte-Carlo NMSE estimation.

A round draws ``A`` and ``x`` with iid CN(0, 1) entries, lets every worker
compute and (optionally) encode its partial product, compensates each
worker's fading channel under its peak-power cap, superposes the workers of
each slot with receiver noise, and decodes. The received slot is

    z_k = sqrt(P_rx) * sum_l h[k, l] g[k, l] F_k y[k, l] + n_k,

and the platform's estimate is ``F_k_dagger z_k / sqrt(P_rx)``. The peak
power test ``|g|^2 psi <= max_power`` is applied to the normalised
coefficient ``g``, so the outage condition is ``psi / |h|^2 > max_power``.

A slot may also be split into ``segments`` equal sub-slots, each carried by
its own worker and channel. With ``segments=2`` and a two-fold repetition
code, two workers send the same result in two sub-slots and the platform
averages them.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .channel import ChannelParams, CompensationResult, compensate, sample_rayleigh_gains
from .coding import CodingScheme, build_code
from .numerics import make_rng, sample_cscg
from .partition import PartitionSpec

__all__ = [
    "RandomCode",
    "RoundResult",
    "NmseEstimate",
    "simulate_round",
    "estimate_nmse",
    "normalized_errors",
]

CodeFactory = Callable[[int, np.random.Generator], CodingScheme]
Coding = Union[None, CodingScheme, Sequence[CodingScheme], CodeFactory]


@dataclass(frozen=True)
class RandomCode:
    """Per-trial random Gaussian code with ``N_k = expansion * M_k``."""

    expansion: float
    decode_mode: str = "exact"

    def n_for(self, m_k: int) -> int:
        n = self.expansion * m_k
        if abs(n - round(n)) > 1e-9:
            raise ValueError(f"expansion {self.expansion} gives non-integer N_k for M_k={m_k}")
        return int(round(n))

    def __call__(self, m_k: int, rng: np.random.Generator) -> CodingScheme:
        n_k = self.n_for(m_k)
        if n_k == m_k and self.decode_mode == "exact":
            # A square random code only adds noise amplification.
            return build_code("identity", m_k)
        return build_code("random_gaussian", m_k, rng, n_k=n_k, decode_mode=self.decode_mode)


@dataclass(frozen=True)
class RoundResult:
    y_true: np.ndarray
    y_hat: np.ndarray
    per_worker: CompensationResult
    squared_error: float
    reference_energy: float


@dataclass(frozen=True)
class NmseEstimate:
    mean: float
    std_error: float
    trials: int


def _slot_codes(partition: PartitionSpec, coding: Coding,
                rng: np.random.Generator) -> list[CodingScheme]:
    rows = partition.row_sizes
    if coding is None:
        return [build_code("identity", m) for m in rows]
    if isinstance(coding, CodingScheme):
        if any(m != coding.m for m in rows):
            raise ValueError("a shared code needs every M_k equal to the code's input length")
        return [coding] * partition.K
    if callable(coding):
        return [coding(m, rng) for m in rows]
    codes = list(coding)
    if len(codes) != partition.K:
        raise ValueError(f"expected {partition.K} slot codes, got {len(codes)}")
    for m, c in zip(rows, codes):
        if c.m != m:
            raise ValueError(f"slot code input length {c.m} does not match M_k={m}")
    return codes


def _worker_outputs(partition: PartitionSpec, a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """M x L matrix whose column ``l`` is ``A[:, cols_l] @ x_l``."""
    if partition.uniform_cols:
        q = partition.col_sizes[0]
        return np.einsum("mlq,lq->ml", a.reshape(partition.M, partition.L, q),
                         x.reshape(partition.L, q))
    return np.column_stack([a[:, c] @ x[c, 0] for c in partition.col_slices()])


def _apply_forced(eff: np.ndarray, forced: Mapping | None) -> np.ndarray:
    if not forced:
        return eff
    eff = eff.copy()
    for key, gain in forced.items():
        idx = tuple(key) if len(key) == 3 else (key[0], key[1], slice(None))
        eff[idx] = gain
    return eff


def simulate_round(partition: PartitionSpec, coding: Coding, channel: ChannelParams,
                   max_power, rng: np.random.Generator, *, segments: int = 1,
                   forced_gains: Mapping[tuple, float] | None = None,
                   matrix: np.ndarray | None = None,
                   batched: bool | None = None) -> RoundResult:
    """Simulate one superposition phase.

    Parameters
    ----------
    coding
        ``None`` (uncoded), one :class:`CodingScheme` shared by all slots, a
        sequence of per-slot schemes, or a factory ``(M_k, rng) -> scheme``
        called afresh every round.
    max_power
        Peak power cap, scalar or broadcastable to ``(K, L, segments)``.
    forced_gains
        Maps ``(k, l)`` or ``(k, l, s)`` to an on-air gain ``h * g`` that
        replaces the compensated one.
    matrix
        Fixed ``A`` to use instead of a fresh draw.
    batched
        Force (or forbid) the stacked fast path; ``None`` picks it whenever
        all slots have equal shapes.
    """
    if segments < 1:
        raise ValueError("segments must be positive")
    K, L, M, Q = partition.K, partition.L, partition.M, partition.Q
    if matrix is None:
        a = sample_cscg(rng, (M, Q))
    else:
        a = np.asarray(matrix, dtype=np.complex128)
        if a.shape != (M, Q):
            raise ValueError(f"matrix shape {a.shape} does not match partition ({M}, {Q})")
    x = sample_cscg(rng, (Q, 1))
    codes = _slot_codes(partition, coding, rng)
    n_sizes = [c.n for c in codes]
    if any(n % segments for n in n_sizes):
        raise ValueError(f"slot lengths {n_sizes} are not divisible by segments={segments}")

    h = sample_rayleigh_gains(rng, (K, L, segments), channel.sigma_h_sq)
    noise = sample_cscg(rng, sum(n_sizes), channel.noise_psd)
    sqrt_p = math.sqrt(channel.rx_power)
    q_var = np.asarray(partition.col_sizes, dtype=float)
    y_cols = _worker_outputs(partition, a, x)

    if batched is None:
        batched = partition.uniform_rows and len(set(n_sizes)) == 1
    if batched and not (partition.uniform_rows and len(set(n_sizes)) == 1):
        raise ValueError("batched path needs equal slot shapes")

    if batched:
        m, n = partition.row_sizes[0], n_sizes[0]
        chunk = n // segments
        y_k = y_cols.reshape(K, m, L)
        f = np.stack([c.encoder for c in codes])
        f_dag = np.stack([c.decoder for c in codes])
        y_tilde = f @ y_k                                            # (K, n, L)
        mag = y_tilde.real ** 2 + y_tilde.imag ** 2
        psi = mag.reshape(K, segments, chunk, L).max(axis=2).transpose(0, 2, 1)
        f_energy = (np.abs(f) ** 2).reshape(K, segments, chunk, m).sum(axis=(2, 3))
        energy = q_var[None, :, None] * f_energy[:, None, :]
        comp = compensate(h, psi, energy, max_power)
        eff = _apply_forced(h * comp.g_hat, forced_gains)
        w = np.repeat(eff.transpose(0, 2, 1), chunk, axis=1)         # (K, n, L)
        z = sqrt_p * np.sum(w * y_tilde, axis=2) + noise.reshape(K, n)
        y_hat = (f_dag @ z[:, :, None])[:, :, 0] / sqrt_p
        y_true = y_k.sum(axis=2)
        y_hat, y_true = y_hat.reshape(M, 1), y_true.reshape(M, 1)
    else:
        psi = np.empty((K, L, segments))
        energy = np.empty((K, L, segments))
        tildes = []
        for k, (rows, c) in enumerate(zip(partition.row_slices(), codes)):
            yt = c.encoder @ y_cols[rows]
            chunk = c.n // segments
            mag = yt.real ** 2 + yt.imag ** 2
            psi[k] = mag.reshape(segments, chunk, L).max(axis=1).T
            f_energy = (np.abs(c.encoder) ** 2).reshape(segments, chunk * c.m).sum(axis=1)
            energy[k] = q_var[:, None] * f_energy[None, :]
            tildes.append(yt)
        comp = compensate(h, psi, energy, max_power)
        eff = _apply_forced(h * comp.g_hat, forced_gains)
        offsets = np.concatenate([[0], np.cumsum(n_sizes)])
        est, true = [], []
        for k, (rows, c) in enumerate(zip(partition.row_slices(), codes)):
            w = np.repeat(eff[k].T, c.n // segments, axis=0)          # (n, L)
            z = sqrt_p * np.sum(w * tildes[k], axis=1) + noise[offsets[k]:offsets[k + 1]]
            est.append(c.decoder @ z / sqrt_p)
            true.append(y_cols[rows].sum(axis=1))
        y_hat = np.concatenate(est).reshape(M, 1)
        y_true = np.concatenate(true).reshape(M, 1)

    diff = y_hat - y_true
    err = float(np.sum(diff.real ** 2 + diff.imag ** 2))
    reference = float(M * Q)  # sum_k sum_l M_k Q_l
    return RoundResult(y_true, y_hat, comp, err, reference)


def normalized_errors(partition: PartitionSpec, coding: Coding, channel: ChannelParams,
                      max_power, trials: int, seed: int, *, n_jobs: int = 1,
                      **round_kwargs) -> np.ndarray:
    """Per-trial ``squared_error / reference_energy``; trial ``t`` uses stream ``t``."""

    def run(t: int) -> float:
        r = simulate_round(partition, coding, channel, max_power, make_rng(seed, t),
                           **round_kwargs)
        return r.squared_error / r.reference_energy

    if n_jobs == 1:
        return np.array([run(t) for t in range(trials)])
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return np.array(list(pool.map(run, range(trials))))


def estimate_nmse(partition: PartitionSpec, coding: Coding, channel: ChannelParams,
                  max_power, trials: int, seed: int, *, n_jobs: int = 1,
                  **round_kwargs) -> NmseEstimate:
    """Monte-Carlo NMSE with its standard error."""
    if trials < 2:
        raise ValueError("need at least 2 trials")
    e = normalized_errors(partition, coding, channel, max_power, trials, seed,
                          n_jobs=n_jobs, **round_kwargs)
    mean = math.fsum(e) / trials
    return NmseEstimate(mean, float(np.std(e, ddof=1) / math.sqrt(trials)), trials)
