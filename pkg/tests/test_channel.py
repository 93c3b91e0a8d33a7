import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ota_matvec.channel import (ChannelParams, compensate, mse_bound_theorem1,
                                peak_power, sample_rayleigh_gains)
from ota_matvec.numerics import make_rng

from oracles import min_error_by_search

pos = st.floats(1e-3, 1e3)


def lagrange_by_bisection(h, psi, energy, max_power):
    """Solve ``|h|^2 E^2 psi / (|h|^2 E + lam psi)^2 = P`` for ``lam``."""
    g2 = abs(h) ** 2
    power = lambda lam: g2 * energy ** 2 * psi / (g2 * energy + lam * psi) ** 2
    lo, hi = 0.0, 1.0
    while power(hi) > max_power:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if power(mid) > max_power:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_channel_params_validation():
    with pytest.raises(ValueError):
        ChannelParams(sigma_h_sq=0.0)
    with pytest.raises(ValueError):
        ChannelParams(noise_psd=-1.0)
    with pytest.raises(ValueError):
        ChannelParams(rx_power=0.0)


def test_rayleigh_moments_and_cdf():
    h = sample_rayleigh_gains(make_rng(2), 300_000, 2.0)
    g = np.abs(h) ** 2
    n = g.size
    assert abs(g.mean() - 2.0) < 5 * 2.0 / math.sqrt(n)
    for t in (0.5, 2.0, 5.0):
        p = 1.0 - math.exp(-t / 2.0)
        assert abs(np.mean(g <= t) - p) < 5 * math.sqrt(p * (1 - p) / n)
    # the phase is uniform
    assert abs(np.mean(np.exp(1j * np.angle(h)))) < 5 / math.sqrt(n)


def test_rayleigh_rejects_bad_variance():
    with pytest.raises(ValueError):
        sample_rayleigh_gains(make_rng(0), 3, 0.0)


def test_peak_power():
    assert peak_power([3, 4j, 1 + 1j]) == 16.0
    with pytest.raises(ValueError):
        peak_power(np.ones((2, 2)))
    with pytest.raises(ValueError):
        peak_power(np.zeros((0, 1)))


def test_unclamped_inverts_channel():
    h = 0.6 - 0.8j
    r = compensate(h, 1.0, 3.0, 10.0)
    assert not r.clamped
    assert r.g_hat == pytest.approx(1 / h)
    assert r.lagrange == 0.0
    assert r.individual_mse == 0.0
    assert r.effective_gain == 1.0


def test_clamped_hand_example():
    r = compensate(1.0, 4.0, 1.0, 1.0)
    assert r.clamped
    assert r.g_hat == pytest.approx(0.5)
    assert r.individual_mse == pytest.approx(0.25)
    assert r.tx_power == pytest.approx(1.0)
    # lambda psi / |h|^2 = (sqrt(4) - 1) E
    assert r.lagrange * 4.0 == pytest.approx(1.0)


def test_zero_channel_is_silent():
    r = compensate(0.0, 1.0, 2.5, 1.0)
    assert r.clamped and r.g_hat == 0 and r.lagrange == math.inf
    assert r.individual_mse == 2.5


def test_invalid_inputs():
    with pytest.raises(ValueError):
        compensate(1.0, 1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        compensate(1.0, 1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        compensate(1.0, -1.0, 1.0, 1.0)


def test_vectorised_matches_scalar():
    rng = make_rng(4)
    h = sample_rayleigh_gains(rng, 50)
    psi = rng.exponential(2.0, 50)
    res = compensate(h, psi, 3.0, 1.5)
    for i in range(50):
        r = compensate(h[i], psi[i], 3.0, 1.5)
        assert res.individual_mse[i] == r.individual_mse
        assert res.g_hat[i] == r.g_hat


@settings(max_examples=200, deadline=None)
@given(st.floats(-math.pi, math.pi), pos, pos, pos, pos)
def test_lagrange_matches_bisection(phase, gain, psi, energy, power):
    h = math.sqrt(gain) * complex(math.cos(phase), math.sin(phase))
    r = compensate(h, psi, energy, power)
    if r.clamped:
        lam = lagrange_by_bisection(h, psi, energy, power)
        assert r.lagrange == pytest.approx(lam, rel=1e-9)
        assert r.tx_power == pytest.approx(power, rel=1e-9)
    else:
        assert r.tx_power <= power * (1 + 1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(-math.pi, math.pi), pos, pos, pos, pos)
def test_compensation_properties(phase, gain, psi, energy, power):
    h = math.sqrt(gain) * complex(math.cos(phase), math.sin(phase))
    r = compensate(h, psi, energy, power)
    assert r.tx_power <= power * (1 + 1e-12)
    assert 0.0 <= r.effective_gain <= 1.0
    # the on-air gain is real and nonnegative
    assert abs((h * r.g_hat).imag) <= 1e-12 * max(1.0, abs(h * r.g_hat))
    assert r.individual_mse <= energy * (1 + 1e-12)
    bound = mse_bound_theorem1(psi, gain, power)
    assert r.individual_mse / energy <= bound + 1e-12


@settings(max_examples=100, deadline=None)
@given(pos, pos, pos)
def test_continuous_at_the_clamping_boundary(psi, energy, power):
    gain = psi / power
    below = compensate(math.sqrt(gain * (1 - 1e-9)), psi, energy, power)
    above = compensate(math.sqrt(gain * (1 + 1e-9)), psi, energy, power)
    assert below.clamped and not above.clamped
    assert below.individual_mse <= 1e-15 * energy + 1e-300
    assert abs(below.g_hat - above.g_hat) <= 1e-8 * abs(above.g_hat)


def test_matches_boundary_search():
    rng = make_rng(12)
    n = 2000
    h = sample_rayleigh_gains(rng, n)
    psi = rng.exponential(3.0, n)
    power = rng.uniform(0.1, 10.0, n)
    energy = rng.uniform(0.5, 20.0, n)
    r = compensate(h, psi, energy, power)
    oracle = min_error_by_search(h, psi, energy, power)
    np.testing.assert_allclose(r.individual_mse, oracle, rtol=1e-6, atol=1e-12)


def test_bound_crossing_value():
    # |h|^2 = psi / (25 P) gives sqrt(25) - 1 = 4
    assert mse_bound_theorem1(1.0, 0.02, 2.0) == 1.0
    assert mse_bound_theorem1(1.0, 0.5, 2.0) == 0.0
    assert mse_bound_theorem1(1.0, 0.0, 2.0) == 1.0
    assert mse_bound_theorem1(1.0, 0.08, 2.0) == pytest.approx(0.25 * (math.sqrt(6.25) - 1))
    g = np.array([0.001, 0.02, 0.03, 0.5, 1.0])
    np.testing.assert_array_equal(mse_bound_theorem1(1.0, g, 2.0) <= 1.0, True)
