"""Over-the-air distributed matrix-vector multiplication over fading channels.

Simulation of the superposition phase (``engine``), per-worker power control
(``channel``), analog block codes (``coding``), closed-form outage and MSE
bounds plus the digital coded-multiplication baseline (``closed_form``), and
the experiment runner behind the ``ota-matvec`` command (``experiments``).
"""

from .channel import ChannelParams, CompensationResult, compensate, mse_bound_theorem1
from .coding import CodingScheme, build_code, decode, encode
from .engine import NmseEstimate, RandomCode, RoundResult, estimate_nmse, simulate_round
from .numerics import make_rng
from .partition import PartitionSpec, WorkerProfile, uniform_partition

__all__ = [
    "ChannelParams",
    "CompensationResult",
    "compensate",
    "mse_bound_theorem1",
    "CodingScheme",
    "build_code",
    "decode",
    "encode",
    "NmseEstimate",
    "RandomCode",
    "RoundResult",
    "estimate_nmse",
    "simulate_round",
    "make_rng",
    "PartitionSpec",
    "WorkerProfile",
    "uniform_partition",
]

__version__ = "0.1.0"
