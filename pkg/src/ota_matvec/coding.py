"""Analog block codes ``(F_k, F_k_dagger)`` with ``F_k_dagger @ F_k = I``.

A row-group's blocks are encoded as ``F_k @ A[k, l]`` before they are handed
to the workers, so each worker returns ``F_k @ y[k, l]`` of length ``N_k``.
The platform decodes the superposed slot with ``F_k_dagger``. The rate
``M_k / N_k`` is the price paid in extra symbols per slot.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import block_diag

from .numerics import as_matrix, sample_cscg

__all__ = [
    "CodingScheme",
    "build_code",
    "encode",
    "decode",
    "coded_variance",
    "block_diagonal",
    "encoding_cost",
    "VARIANTS",
]

VARIANTS = ("identity", "repetition", "random_gaussian", "explicit")

_LEFT_INVERSE_TOL = 1e-8
_MAX_CONDITION = 1e12
_MAX_REDRAWS = 100


@dataclass(frozen=True, eq=False)
class CodingScheme:
    variant: str
    encoder: np.ndarray
    decoder: np.ndarray
    decode_mode: str = "exact"

    @property
    def m(self) -> int:
        return self.encoder.shape[1]

    @property
    def n(self) -> int:
        return self.encoder.shape[0]

    @property
    def rate(self) -> float:
        return self.m / self.n

    def left_inverse_residual(self) -> float:
        """Largest entry of ``|F_dagger F - I|``."""
        return float(np.max(np.abs(self.decoder @ self.encoder - np.eye(self.m))))


def build_code(variant: str, m_k: int, rng: np.random.Generator | None = None, *,
               factor: int | None = None, n_k: int | None = None,
               encoder=None, decoder=None, decode_mode: str = "exact") -> CodingScheme:
    """Construct a code for slots of ``m_k`` uncoded symbols.

    ``repetition`` stacks ``factor`` copies of the identity and averages them
    back. ``random_gaussian`` draws ``F`` with iid CN(0, 1/n_k) entries and
    uses the exact left inverse ``(F^H F)^-1 F^H``; ``decode_mode="hermitian"``
    decodes with ``F^H`` instead, which is only approximately a left inverse.
    ``explicit`` takes a user supplied ``encoder``/``decoder`` pair.
    """
    if m_k < 1:
        raise ValueError("m_k must be positive")
    if decode_mode not in ("exact", "hermitian"):
        raise ValueError(f"unknown decode mode {decode_mode!r}")

    if variant == "identity":
        eye = np.eye(m_k, dtype=np.complex128)
        return CodingScheme("identity", eye, eye.copy())

    if variant == "repetition":
        if factor is None or factor < 2:
            raise ValueError("repetition needs factor >= 2")
        eye = np.eye(m_k, dtype=np.complex128)
        return CodingScheme("repetition", np.vstack([eye] * factor),
                            np.hstack([eye] * factor) / factor)

    if variant == "random_gaussian":
        if n_k is None:
            raise ValueError("random_gaussian needs n_k")
        if n_k < m_k:
            raise ValueError(f"n_k={n_k} is smaller than m_k={m_k}")
        if rng is None:
            raise ValueError("random_gaussian needs an rng")
        for _ in range(_MAX_REDRAWS):
            f = sample_cscg(rng, (n_k, m_k), 1.0 / n_k)
            gram = f.conj().T @ f
            if np.linalg.cond(gram) <= _MAX_CONDITION:
                break
        else:
            raise RuntimeError("could not draw a well-conditioned random code")
        if decode_mode == "hermitian":
            f_dag = f.conj().T
        else:
            f_dag = np.linalg.solve(gram, f.conj().T)
        return CodingScheme("random_gaussian", f, f_dag, decode_mode)

    if variant == "explicit":
        if encoder is None or decoder is None:
            raise ValueError("explicit code needs encoder and decoder")
        f, f_dag = as_matrix(encoder), as_matrix(decoder)
        if f.shape[1] != m_k or f_dag.shape != (f.shape[1], f.shape[0]):
            raise ValueError(f"incompatible shapes {f.shape} and {f_dag.shape} for m_k={m_k}")
        if f.shape[0] < m_k:
            raise ValueError("encoder has fewer rows than m_k")
        scheme = CodingScheme("explicit", f, f_dag)
        if scheme.left_inverse_residual() > _LEFT_INVERSE_TOL:
            raise ValueError("decoder is not a left inverse of encoder")
        return scheme

    raise ValueError(f"unknown code variant {variant!r}; expected one of {VARIANTS}")


def encode(scheme: CodingScheme, a_kl) -> np.ndarray:
    a = as_matrix(a_kl)
    if a.shape[0] != scheme.m:
        raise ValueError(f"block has {a.shape[0]} rows, code expects {scheme.m}")
    return scheme.encoder @ a


def decode(scheme: CodingScheme, z_k) -> np.ndarray:
    z = as_matrix(z_k)
    if z.shape[0] != scheme.n:
        raise ValueError(f"slot has {z.shape[0]} symbols, code expects {scheme.n}")
    return scheme.decoder @ z


def coded_variance(scheme: CodingScheme, sigma_sq: float) -> float:
    """Per-entry variance of a coded output when ``y`` has variance ``sigma_sq``."""
    if sigma_sq <= 0:
        raise ValueError("sigma_sq must be positive")
    return scheme.rate * sigma_sq


def block_diagonal(schemes: Sequence[CodingScheme]) -> tuple[np.ndarray, np.ndarray]:
    """Monolithic ``(F, F_dagger)`` equivalent to per-slot coding."""
    return (block_diag(*[s.encoder for s in schemes]),
            block_diag(*[s.decoder for s in schemes]))


def encoding_cost(scheme: CodingScheme, q_cols: int) -> int:
    """Multiplications needed to form ``F_k @ A[k, l]`` for a ``q_cols``-wide block."""
    return scheme.n * scheme.m * q_cols
