"""Analytic outage probabilities, MSE bounds and the digital baseline.

Under Rayleigh fading and CN(0, sigma^2) worker outputs of length ``n``, the
probability that a worker cannot fully compensate its channel is
``rho_n(s) = 1 - prod_{i<=n} i / (s + i)`` with ``s = sigma^2 / (sigma_h^2 P)``.

The digital coded-multiplication (CM) baseline quantises each output at
``R = alpha * eta`` bits, sends it over a dedicated channel at rate ``eta``
and recovers ``y`` when at least ``J`` of ``J_total`` workers avoid outage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .channel import ChannelParams
from .partition import PartitionSpec

__all__ = [
    "OutageParams",
    "CmParams",
    "rho",
    "individual_outage",
    "mean_mse_bound1",
    "mean_mse_bound2",
    "theorem2_epsilon",
    "coded_outage",
    "beta_asymptote",
    "asymptotic_nmse",
    "cm_outage",
    "cm_decoding_error",
    "cm_chernoff_bound",
    "kl_bernoulli",
    "cm_max_outage",
    "cm_nmse",
    "Z_MIN",
]

Z_MIN = 1.0 / 25.0
DEFAULT_Z_GRID = 1000


@dataclass(frozen=True)
class OutageParams:
    m: int
    s: float

    def __post_init__(self):
        if self.m < 1 or self.s < 0:
            raise ValueError("need m >= 1 and s >= 0")

    def probability(self) -> float:
        return rho(self.m, self.s)


@dataclass(frozen=True)
class CmParams:
    """CM baseline settings. ``j_total`` defaults to ``j_needed`` and is
    replaced by ``round(j_needed / r)`` inside :func:`cm_nmse`."""

    snr: float
    alpha: float = 1.0
    j_needed: int = 100
    j_total: int | None = None
    p_err_target: float = 1e-2

    def __post_init__(self):
        if self.snr <= 0:
            raise ValueError("snr must be positive")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if self.j_needed < 1:
            raise ValueError("j_needed must be positive")
        if self.j_total is not None and self.j_total < self.j_needed:
            raise ValueError("j_total must be at least j_needed")
        if not 0 < self.p_err_target < 1:
            raise ValueError("p_err_target must lie in (0, 1)")


def rho(n: int, s):
    """Individual outage probability ``1 - prod_{i=1}^n i / (s + i)``.

    ``s`` may be an array. Evaluated as ``-expm1(-sum log1p(s / i))`` so that
    small ``s`` keeps full relative precision.
    """
    if n < 1:
        raise ValueError("n must be positive")
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise ValueError("s must be nonnegative")
    i = np.arange(1, n + 1, dtype=float)
    log_prod = -np.sum(np.log1p(s_arr[..., None] / i), axis=-1)
    val = -np.expm1(log_prod)
    return float(val) if val.ndim == 0 else val


def _sigma_grid(partition: PartitionSpec, sigma_sq) -> np.ndarray:
    if sigma_sq is None:
        sigma_sq = np.asarray(partition.col_sizes, dtype=float)[None, :]
    return np.broadcast_to(np.asarray(sigma_sq, dtype=float), (partition.K, partition.L))


def _energy(partition: PartitionSpec, sigma: np.ndarray) -> np.ndarray:
    return np.asarray(partition.row_sizes, dtype=float)[:, None] * sigma


def _lengths(partition: PartitionSpec, code_lengths):
    if code_lengths is None:
        return list(partition.row_sizes)
    n = list(np.broadcast_to(np.asarray(code_lengths, dtype=int), (partition.K,)))
    if any(nk < mk for nk, mk in zip(n, partition.row_sizes)):
        raise ValueError("code lengths must be at least M_k")
    return n


def individual_outage(partition: PartitionSpec, channel: ChannelParams, max_power,
                      sigma_sq=None, code_lengths=None, z: float = 1.0) -> np.ndarray:
    """K x L array of outage probabilities, optionally at scaled threshold ``z``.

    With ``code_lengths`` ``N_k`` the outputs have length ``N_k`` and
    variance ``(M_k / N_k) sigma^2``.
    """
    sigma = _sigma_grid(partition, sigma_sq)
    p = np.broadcast_to(np.asarray(max_power, dtype=float), (partition.K, partition.L))
    n = _lengths(partition, code_lengths)
    out = np.empty((partition.K, partition.L))
    for k, (nk, mk) in enumerate(zip(n, partition.row_sizes)):
        s = z * (mk / nk) * sigma[k] / (channel.sigma_h_sq * p[k])
        out[k] = rho(nk, s)
    return out


def mean_mse_bound1(partition: PartitionSpec, sigma_sq, channel: ChannelParams, max_power, *,
                    code_lengths=None, normalized: bool = False) -> float:
    """``sum_kl E[||y_kl||^2] eps_kl + (N0 / P_rx) M``.

    ``sigma_sq`` is the per-entry variance of each worker output (``None``
    means ``Q_l``, the unit-variance generation used in the experiments).
    """
    sigma = _sigma_grid(partition, sigma_sq)
    energy = _energy(partition, sigma)
    eps = individual_outage(partition, channel, max_power, sigma, code_lengths)
    val = math.fsum((energy * eps).ravel()) + channel.noise_psd / channel.rx_power * partition.M
    return val / float(energy.sum()) if normalized else val


def theorem2_epsilon(m: int, s, z_grid_size: int = DEFAULT_Z_GRID, z_values=None):
    """``min_z (1/sqrt(z) - 1)/4 + (5 - 1/sqrt(z))/4 * rho_m(z s)`` over ``z in [1/25, 1]``."""
    if z_values is None:
        if z_grid_size < 2:
            raise ValueError("z_grid_size must be at least 2")
        z = np.geomspace(Z_MIN, 1.0, z_grid_size)
    else:
        z = np.asarray(z_values, dtype=float)
        if np.any((z < Z_MIN - 1e-15) | (z > 1.0)):
            raise ValueError("z values must lie in [1/25, 1]")
    s_arr = np.asarray(s, dtype=float)
    inv = 1.0 / np.sqrt(z)
    obj = 0.25 * (inv - 1.0) + (5.0 - inv) / 4.0 * rho(m, s_arr[..., None] * z)
    val = obj.min(axis=-1)
    return float(val) if val.ndim == 0 else val


def mean_mse_bound2(partition: PartitionSpec, sigma_sq, channel: ChannelParams, max_power,
                    z_grid_size: int = DEFAULT_Z_GRID, *, z_values=None, code_lengths=None,
                    normalized: bool = False) -> float:
    """Tighter bound with each outage term replaced by its z-optimised value."""
    sigma = _sigma_grid(partition, sigma_sq)
    energy = _energy(partition, sigma)
    p = np.broadcast_to(np.asarray(max_power, dtype=float), (partition.K, partition.L))
    n = _lengths(partition, code_lengths)
    total = []
    for k, (nk, mk) in enumerate(zip(n, partition.row_sizes)):
        s = (mk / nk) * sigma[k] / (channel.sigma_h_sq * p[k])
        total.extend(energy[k] * theorem2_epsilon(nk, s, z_grid_size, z_values))
    val = math.fsum(total) + channel.noise_psd / channel.rx_power * partition.M
    return val / float(energy.sum()) if normalized else val


def coded_outage(n_k: int, m_k: int, sigma_sq: float, sigma_h_sq: float, max_power: float) -> float:
    """Outage of a length-``n_k`` coded output carrying ``m_k`` symbols."""
    if not n_k >= m_k >= 1:
        raise ValueError("need n_k >= m_k >= 1")
    return rho(n_k, (m_k / n_k) * sigma_sq / (sigma_h_sq * max_power))


def beta_asymptote(n_k: int, m_k: int, sigma_sq: float, sigma_h_sq: float, max_power: float) -> float:
    """Large-``N_k`` exponent ``s (ln N_k + gamma)`` with ``s = (M_k/N_k) sigma^2 / (sigma_h^2 P)``.

    ``1 - exp(-beta)`` approximates the coded outage probability.
    """
    if n_k < 1 or m_k < 1:
        raise ValueError("n_k and m_k must be positive")
    s = (m_k / n_k) * sigma_sq / (sigma_h_sq * max_power)
    return s * (math.log(n_k) + np.euler_gamma)


def asymptotic_nmse(partition: PartitionSpec, code_lengths, channel: ChannelParams, max_power,
                    sigma_sq=None) -> float:
    """Energy-weighted average of ``beta(N_k)`` over all workers."""
    sigma = _sigma_grid(partition, sigma_sq)
    energy = _energy(partition, sigma)
    p = np.broadcast_to(np.asarray(max_power, dtype=float), (partition.K, partition.L))
    n = _lengths(partition, code_lengths)
    acc = []
    for k, (nk, mk) in enumerate(zip(n, partition.row_sizes)):
        for l in range(partition.L):
            acc.append(energy[k, l] * beta_asymptote(nk, mk, sigma[k, l], channel.sigma_h_sq, p[k, l]))
    return math.fsum(acc) / float(energy.sum())


def cm_outage(eta: float, snr: float) -> float:
    """Information outage ``1 - exp(-(2^eta - 1) / SNR)`` of a Rayleigh link."""
    if eta < 0 or snr <= 0:
        raise ValueError("need eta >= 0 and snr > 0")
    return -math.expm1(-math.expm1(eta * math.log(2.0)) / snr)


def cm_decoding_error(p_out: float, j_needed: int, j_total: int) -> float:
    """Probability that more than ``j_total - j_needed`` of ``j_total`` links fail."""
    if not 0 <= p_out <= 1:
        raise ValueError("p_out must lie in [0, 1]")
    if not 1 <= j_needed <= j_total:
        raise ValueError("need 1 <= j_needed <= j_total")
    if p_out == 0:
        return 0.0
    if p_out == 1:
        return 1.0
    n = np.arange(j_total - j_needed + 1, j_total + 1, dtype=float)
    log_terms = (gammaln(j_total + 1) - gammaln(n + 1) - gammaln(j_total - n + 1)
                 + n * math.log(p_out) + (j_total - n) * math.log1p(-p_out))
    return float(min(1.0, math.exp(logsumexp(log_terms))))


def kl_bernoulli(a: float, b: float) -> float:
    """``a log(a/b) + (1-a) log((1-a)/(1-b))`` with ``0 log 0 = 0``."""

    def term(p, q):
        if p == 0:
            return 0.0
        if q == 0:
            return math.inf
        return p * math.log(p / q)

    return term(a, b) + term(1.0 - a, 1.0 - b)


def cm_chernoff_bound(p_out: float, j_needed: int, j_total: int) -> float:
    """``exp(-J_total KL(J/J_total || 1 - p_out))``; 1 outside ``J/J_total < 1 - p_out``."""
    r_hat = j_needed / j_total
    if r_hat >= 1.0 - p_out:
        return 1.0
    return math.exp(-j_total * kl_bernoulli(r_hat, 1.0 - p_out))


def cm_max_outage(p_err_target: float, j_needed: int, j_total: int) -> float:
    """Largest per-link outage whose decoding error stays within ``p_err_target``."""
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if cm_decoding_error(mid, j_needed, j_total) <= p_err_target:
            lo = mid
        else:
            hi = mid
    return lo


def cm_nmse(code_rate: float, cm: CmParams) -> float:
    """Normalised quantisation MSE ``2^(-alpha eta)`` of the CM baseline at rate ``r``."""
    if not 0 < code_rate <= 1:
        raise ValueError("code_rate must lie in (0, 1]")
    j_total = max(cm.j_needed, int(round(cm.j_needed / code_rate)))
    p_out = cm_max_outage(cm.p_err_target, cm.j_needed, j_total)
    if p_out <= 0:
        return 1.0
    eta = math.log2(1.0 - cm.snr * math.log1p(-p_out))
    return 2.0 ** (-cm.alpha * eta)

