import math

import numpy as np
import pytest

from ota_matvec.channel import ChannelParams
from ota_matvec.coding import build_code
from ota_matvec.engine import RandomCode, estimate_nmse, normalized_errors, simulate_round
from ota_matvec.numerics import make_rng, sample_cscg_matrix
from ota_matvec.partition import PartitionSpec, uniform_partition

from oracles import single_worker_nmse

HUGE = 1e9


def test_round_bookkeeping():
    p = PartitionSpec((2, 3), (4, 1))
    r = simulate_round(p, None, ChannelParams(noise_psd=0.3), 2.0, make_rng(0))
    assert r.y_true.shape == r.y_hat.shape == (5, 1)
    assert r.reference_energy == sum(m * q for m in p.row_sizes for q in p.col_sizes)
    d = r.y_hat - r.y_true
    assert r.squared_error == pytest.approx(float(np.vdot(d, d).real), rel=1e-10)
    assert r.per_worker.g_hat.shape == (2, 2, 1)


def test_fixed_matrix_is_used():
    p = PartitionSpec((2, 3), (4, 1))
    a = sample_cscg_matrix(make_rng(1), 5, 5)
    ch = ChannelParams(noise_psd=0.0)
    r1 = simulate_round(p, None, ch, HUGE, make_rng(9), matrix=a)
    r2 = simulate_round(p, None, ch, HUGE, make_rng(9), matrix=2 * a)
    # same stream, so the same x; y_true is linear in A
    np.testing.assert_allclose(r2.y_true, 2 * r1.y_true, rtol=1e-14)
    assert np.allclose(r1.y_hat, r1.y_true)
    with pytest.raises(ValueError):
        simulate_round(p, None, ch, 1.0, make_rng(9), matrix=np.ones((4, 5)))


def test_noiseless_unclamped_is_exact():
    p = uniform_partition(40, 30, 4, 3)
    ch = ChannelParams(noise_psd=0.0)
    for t in range(20):
        r = simulate_round(p, None, ch, HUGE, make_rng(1, t))
        assert not r.per_worker.clamped.any()
        assert r.squared_error < 1e-18 * r.reference_energy


def test_noiseless_coded_is_exact():
    p = uniform_partition(20, 20, 2, 2)
    ch = ChannelParams(noise_psd=0.0)
    est = estimate_nmse(p, RandomCode(3), ch, HUGE, 50, 4)
    assert est.mean < 1e-12


def test_nmse_vanishes_without_noise_or_clamping():
    p = uniform_partition(100, 100, 10, 10)
    est = estimate_nmse(p, None, ChannelParams(noise_psd=0.0), HUGE, 200, 2)
    assert est.mean < 1e-12


def test_batched_and_looped_paths_agree():
    p = uniform_partition(20, 12, 4, 3)
    ch = ChannelParams(noise_psd=0.5, rx_power=2.0)
    for coding in (None, RandomCode(2), build_code("repetition", 5, factor=2)):
        for seg in (1, 2) if coding is not None else (1,):
            a = simulate_round(p, coding, ch, 2.0, make_rng(3, 1), batched=True, segments=seg)
            b = simulate_round(p, coding, ch, 2.0, make_rng(3, 1), batched=False, segments=seg)
            np.testing.assert_allclose(a.y_hat, b.y_hat, rtol=1e-12, atol=1e-12)
            np.testing.assert_array_equal(a.per_worker.clamped, b.per_worker.clamped)


def test_nonuniform_partition_runs_looped():
    p = PartitionSpec((2, 3, 5), (1, 4))
    r = simulate_round(p, RandomCode(2), ChannelParams(noise_psd=0.0), HUGE, make_rng(0))
    assert r.squared_error < 1e-18 * r.reference_energy
    with pytest.raises(ValueError):
        simulate_round(p, None, ChannelParams(), 1.0, make_rng(0), batched=True)


def test_coding_argument_forms():
    p = uniform_partition(6, 4, 2, 2)
    ch = ChannelParams(noise_psd=0.0)
    shared = build_code("repetition", 3, factor=2)
    per_slot = [build_code("repetition", 3, factor=2), build_code("identity", 3)]
    for coding in (shared, per_slot):
        r = simulate_round(p, coding, ch, HUGE, make_rng(0))
        assert r.squared_error < 1e-18 * r.reference_energy
    with pytest.raises(ValueError):
        simulate_round(p, [shared], ch, HUGE, make_rng(0))
    with pytest.raises(ValueError):
        simulate_round(p, build_code("identity", 2), ch, HUGE, make_rng(0))
    with pytest.raises(ValueError):
        simulate_round(p, shared, ch, HUGE, make_rng(0), segments=4)


def test_random_code_factory():
    code = RandomCode(3)(10, make_rng(0))
    assert code.n == 30 and code.variant == "random_gaussian"
    assert RandomCode(1)(10, make_rng(0)).variant == "identity"
    with pytest.raises(ValueError):
        RandomCode(1.5)(3, make_rng(0))


def test_forced_gain_overrides_on_air_gain():
    p = uniform_partition(4, 4, 1, 1)
    ch = ChannelParams(noise_psd=0.0)
    r = simulate_round(p, None, ch, HUGE, make_rng(0), forced_gains={(0, 0): 0.25})
    assert np.allclose(r.y_hat, 0.25 * r.y_true)


def test_compensation_energy_uses_code_rows():
    p = uniform_partition(4, 6, 1, 2)
    code = build_code("repetition", 4, factor=3)
    r = simulate_round(p, code, ChannelParams(), 1.0, make_rng(0))
    # uncoded energy M_k Q_l is scaled by ||F||_F^2 / M_k = 3
    assert r.per_worker.clamped.shape == (1, 2, 1)
    r2 = simulate_round(p, code, ChannelParams(), 1.0, make_rng(0), segments=3)
    assert r2.per_worker.clamped.shape == (1, 2, 3)


def test_determinism_across_jobs():
    p = uniform_partition(20, 20, 2, 2)
    ch = ChannelParams(rx_power=3.0)
    e1 = normalized_errors(p, RandomCode(2), ch, 3.0, 64, 11)
    e4 = normalized_errors(p, RandomCode(2), ch, 3.0, 64, 11, n_jobs=4)
    np.testing.assert_array_equal(e1, e4)
    a = estimate_nmse(p, None, ch, 3.0, 64, 11)
    b = estimate_nmse(p, None, ch, 3.0, 64, 11, n_jobs=3)
    assert a == b


def test_estimate_requires_two_trials():
    with pytest.raises(ValueError):
        estimate_nmse(uniform_partition(1, 1, 1, 1), None, ChannelParams(), 1.0, 1, 0)


def test_standard_error_definition():
    p = uniform_partition(4, 4, 2, 2)
    ch = ChannelParams(rx_power=2.0)
    e = normalized_errors(p, None, ch, 2.0, 300, 5)
    est = estimate_nmse(p, None, ch, 2.0, 300, 5)
    assert est.mean == pytest.approx(e.mean(), rel=1e-12)
    assert est.std_error == pytest.approx(e.std(ddof=1) / math.sqrt(300), rel=1e-12)


def test_noise_floor_small():
    p = uniform_partition(20, 10, 2, 2)
    ch = ChannelParams(noise_psd=0.2, rx_power=0.5)
    est = estimate_nmse(p, None, ch, HUGE, 3000, 6)
    expected = 0.2 / 0.5 * p.M / (p.M * p.Q)
    assert abs(est.mean - expected) <= 3 * est.std_error


def test_single_worker_matches_quadrature():
    p = uniform_partition(1, 1, 1, 1)
    power = 1.0
    est = estimate_nmse(p, None, ChannelParams(rx_power=power), power, 100_000, 3)
    expected = single_worker_nmse(power)
    assert est.mean == pytest.approx(expected, rel=0.02)
    assert abs(est.mean - expected) <= 3 * est.std_error
