"""Complex dense linear algebra and seeded random streams.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128`` with two
dimensions; column vectors have shape ``(n, 1)``.

Every Monte-Carlo trial draws from its own generator, keyed by
``(seed, stream_id)`` through :class:`numpy.random.SeedSequence`. A trial can
therefore be replayed in isolation and the result of a batch does not depend
on the order, or the thread, in which its trials were executed.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "make_rng",
    "as_matrix",
    "sample_cscg_matrix",
    "sample_cscg",
    "matmul",
    "frob_norm_sq",
]


def make_rng(seed: int, *stream_id: int) -> np.random.Generator:
    """Return the generator for stream ``stream_id`` of ``seed``.

    ``stream_id`` may be several integers (e.g. trial index followed by a
    sub-stream index); equal arguments always give identical sequences.
    """
    if seed < 0 or any(s < 0 for s in stream_id):
        raise ValueError("seed and stream ids must be nonnegative")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(stream_id))
    return np.random.Generator(np.random.PCG64(ss))


def as_matrix(a) -> np.ndarray:
    """Coerce ``a`` to a 2-D complex128 array; 1-D input becomes a column."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def sample_cscg(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """iid circularly-symmetric complex Gaussian samples of arbitrary shape."""
    if variance < 0:
        raise ValueError(f"variance must be nonnegative, got {variance}")
    scale = np.sqrt(variance / 2.0)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return scale * (re + 1j * im)


def sample_cscg_matrix(rng: np.random.Generator, rows: int, cols: int,
                       variance: float = 1.0) -> np.ndarray:
    """Draw a ``rows x cols`` matrix of iid CN(0, variance) entries.

    Real and imaginary parts are independent with variance ``variance / 2``.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"shape must be positive, got ({rows}, {cols})")
    return sample_cscg(rng, (rows, cols), variance)


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} x {b.shape}")
    return a @ b


def frob_norm_sq(a) -> float:
    """Sum of squared moduli of the entries of ``a``."""
    arr = np.asarray(a, dtype=np.complex128)
    return float(np.sum(arr.real ** 2 + arr.imag ** 2))
