"""Rayleigh fading and per-worker power-constrained channel compensation.

Each worker knows its own channel ``h`` and picks a compensation coefficient
``g`` so that ``h * g = 1`` (the received contribution lines up with the
other workers of its slot). The peak transmit power ``|g|^2 * psi`` may not
exceed ``max_power``, where ``psi`` is the largest squared entry of the
vector being sent. When the cap is hit the worker minimises its own error
``|1 - h g|^2 * E[||y||^2]`` on the power boundary instead; the optimum keeps
the phase of ``1/h`` and scales the amplitude down, which makes ``h * g``
real and less than one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import as_matrix, sample_cscg

__all__ = [
    "ChannelParams",
    "CompensationResult",
    "sample_rayleigh_gains",
    "peak_power",
    "compensate",
    "mse_bound_theorem1",
]


@dataclass(frozen=True)
class ChannelParams:
    """Fading variance ``sigma_h_sq``, noise PSD ``noise_psd`` and the
    received power ``rx_power`` every aligned worker should arrive with."""

    sigma_h_sq: float = 1.0
    noise_psd: float = 1.0
    rx_power: float = 1.0

    def __post_init__(self):
        if self.sigma_h_sq <= 0:
            raise ValueError("sigma_h_sq must be positive")
        if self.noise_psd < 0:
            raise ValueError("noise_psd must be nonnegative")
        if self.rx_power <= 0:
            raise ValueError("rx_power must be positive")


@dataclass(frozen=True)
class CompensationResult:
    """Outcome of :func:`compensate`.

    Fields are scalars for scalar input and arrays (broadcast shape) for array
    input.
    """

    g_hat: complex | np.ndarray
    lagrange: float | np.ndarray
    clamped: bool | np.ndarray
    tx_power: float | np.ndarray
    effective_gain: float | np.ndarray
    individual_mse: float | np.ndarray


def sample_rayleigh_gains(rng: np.random.Generator, count, sigma_h_sq: float = 1.0) -> np.ndarray:
    """iid CN(0, sigma_h_sq) channel coefficients; ``count`` may be a shape."""
    if sigma_h_sq <= 0:
        raise ValueError(f"sigma_h_sq must be positive, got {sigma_h_sq}")
    return sample_cscg(rng, count, sigma_h_sq)


def peak_power(y_kl) -> float:
    y = as_matrix(y_kl)
    if y.size == 0:
        raise ValueError("empty vector")
    if y.shape[1] != 1:
        raise ValueError(f"expected a column vector, got shape {y.shape}")
    return float(np.max(y.real ** 2 + y.imag ** 2))


def compensate(h, psi, energy, max_power) -> CompensationResult:
    """Minimum-error compensation coefficient under the peak-power cap.

    Parameters
    ----------
    h : complex or array
        Channel coefficient(s).
    psi : float or array
        Peak squared amplitude of the transmitted vector.
    energy : float or array
        ``E[||y||^2]`` of the transmitted vector, must be positive.
    max_power : float or array
        Peak transmit power cap.

    Without the cap binding, ``g = 1/h`` and the individual error is zero.
    Otherwise the Lagrange multiplier follows in closed form from the active
    constraint, ``lambda * psi / |h|^2 = (sqrt(psi / (|h|^2 P)) - 1) * energy``,
    and the transmit power equals the cap. A zero channel leaves the worker
    silent with its whole energy lost.
    """
    h, psi, energy, max_power = np.broadcast_arrays(
        np.asarray(h, dtype=np.complex128), np.asarray(psi, dtype=float),
        np.asarray(energy, dtype=float), np.asarray(max_power, dtype=float))
    scalar = h.ndim == 0
    if np.any(energy <= 0):
        raise ValueError("energy must be positive")
    if np.any(max_power <= 0):
        raise ValueError("max_power must be positive")
    if np.any(psi < 0):
        raise ValueError("psi must be nonnegative")

    gain_sq = h.real ** 2 + h.imag ** 2
    dead = gain_sq == 0
    safe_gain_sq = np.where(dead, 1.0, gain_sq)
    required = psi / safe_gain_sq
    clamped = dead | (required > max_power)

    with np.errstate(divide="ignore", invalid="ignore"):
        excess = np.sqrt(required / max_power)
        lam_psi = np.where(clamped & ~dead, (excess - 1.0) * energy * gain_sq, 0.0)
        lagrange = np.where(dead, np.inf, np.where(clamped, lam_psi / np.where(psi > 0, psi, 1.0), 0.0))
        g_hat = np.conj(h) * energy / (gain_sq * energy + lam_psi)
        g_hat = np.where(dead, 0.0, g_hat)
        eff = np.where(clamped, np.where(dead, 0.0, 1.0 / excess), 1.0)
    tx_power = (g_hat.real ** 2 + g_hat.imag ** 2) * psi
    mse = np.where(clamped, (1.0 - eff) ** 2 * energy, 0.0)

    if scalar:
        return CompensationResult(complex(g_hat), float(lagrange), bool(clamped),
                                  float(tx_power), float(eff), float(mse))
    return CompensationResult(g_hat, lagrange, clamped, tx_power, eff, mse)


def mse_bound_theorem1(psi, gain_sq, max_power):
    """Upper bound on the individual MSE normalised by ``E[||y||^2]``.

    ``min(1, (sqrt(psi / (|h|^2 P)) - 1)^+ / 4)``; a zero gain gives 1.
    """
    psi, gain_sq, max_power = np.broadcast_arrays(
        np.asarray(psi, dtype=float), np.asarray(gain_sq, dtype=float),
        np.asarray(max_power, dtype=float))
    with np.errstate(divide="ignore"):
        root = np.sqrt(psi / max_power) / np.sqrt(gain_sq)
    val = np.minimum(1.0, 0.25 * np.maximum(0.0, root - 1.0))
    val = np.where(gain_sq <= 0, 1.0, val)
    return float(val) if val.ndim == 0 else val
