"""
Tests for the Rayleigh multipath channel

Parameter validation, determinism, PDP shape and the Jakes statistics.
"""

import math

import numpy as np
import pytest
from scipy.special import j0

from srce.core.channel import (
    ChannelMatrix,
    ChannelParams,
    generate_channel,
    generate_taps,
    tap_autocorrelation,
)
from srce.utils.exceptions import ConfigurationException, InputValidationException


class TestChannelParams:
    """Derived quantities and validation."""

    def test_default_doppler_and_timing(self):
        """15 m/s at 2.6 GHz gives 130 Hz; a symbol lasts 80 us."""
        params = ChannelParams()
        assert params.max_doppler == pytest.approx(130.0)
        assert params.symbol_duration == pytest.approx(80e-6)

    def test_default_pdp_spans_20_db(self):
        """Normalized exponential profile, last tap 20 dB below the first."""
        pdp = ChannelParams().pdp
        assert len(pdp) == 16
        assert pdp.sum() == pytest.approx(1.0)
        assert np.all(np.diff(pdp) < 0)
        assert 10 * math.log10(pdp[0] / pdp[-1]) == pytest.approx(20.0)

    def test_single_tap_is_flat(self):
        """One tap carries all the power."""
        params = ChannelParams(num_taps=1)
        np.testing.assert_allclose(params.pdp, [1.0])

    @pytest.mark.parametrize("changes", [
        {"num_taps": 17},
        {"num_taps": 0},
        {"mobile_velocity": -1.0},
        {"carrier_freq": 0.0},
        {"pdp_decay": -0.1},
        {"num_subcarriers": 8, "num_taps": 9, "cyclic_prefix": 16},
    ])
    def test_invalid_parameters(self, changes):
        """Out-of-range parameters raise a configuration error."""
        with pytest.raises(ConfigurationException):
            ChannelParams(**changes)


class TestChannelGeneration:
    """generate_channel behavior."""

    def test_shape(self):
        """H has N rows and M columns."""
        H = generate_channel(ChannelParams(), seed=7)
        assert H.shape == (64, 20)
        assert H.num_subcarriers == 64 and H.num_symbols == 20

    def test_same_seed_is_bit_identical(self):
        """Identical seeds reproduce the channel exactly."""
        a = generate_channel(ChannelParams(), seed=123)
        b = generate_channel(ChannelParams(), seed=123)
        np.testing.assert_array_equal(a.data, b.data)

    def test_different_seeds_differ(self):
        a = generate_channel(ChannelParams(), seed=1)
        b = generate_channel(ChannelParams(), seed=2)
        assert not np.allclose(a.data, b.data)

    def test_negative_and_large_seeds_accepted(self):
        """Any 64-bit integer seeds the generator."""
        generate_channel(ChannelParams(), seed=-1)
        generate_channel(ChannelParams(), seed=2 ** 63 - 1)

    def test_zero_velocity_is_time_invariant(self):
        """Without Doppler every symbol sees the same response."""
        H = generate_channel(ChannelParams(mobile_velocity=0.0), seed=5)
        np.testing.assert_allclose(H.data, H.data[:, :1].repeat(H.num_symbols, axis=1), atol=1e-12)

    def test_frequency_response_is_dft_of_taps(self):
        """H(k, m) = sum_l h_l(m) exp(-j 2 pi k l / N)."""
        params = ChannelParams(num_subcarriers=16, num_taps=4, cyclic_prefix=4, symbols_per_frame=3)
        taps = generate_taps(params, seed=9)
        H = generate_channel(params, seed=9)
        k = np.arange(16)[:, None]
        l = np.arange(4)[None, :]
        expected = np.exp(-2j * np.pi * k * l / 16) @ taps
        np.testing.assert_allclose(H.data, expected, atol=1e-12)

    def test_channel_matrix_rejects_non_finite(self):
        with pytest.raises(InputValidationException):
            ChannelMatrix(np.array([[1.0, np.nan]]))


@pytest.mark.statistical
class TestChannelStatistics:
    """Monte-Carlo checks of the fading statistics."""

    def test_tap_autocorrelation_follows_bessel(self):
        """Normalized tap autocorrelation matches J0(2 pi f_d tau) over 10 lags."""
        params = ChannelParams()
        rho = tap_autocorrelation(params, num_realizations=10_000, max_lag=10, seed=2024)
        tau = np.arange(11) * params.symbol_duration
        expected = j0(2 * np.pi * params.max_doppler * tau)
        assert rho[0] == pytest.approx(1.0)
        np.testing.assert_allclose(rho, expected, atol=0.05)

    def test_tap_autocorrelation_at_high_doppler(self):
        """Doppler large enough to decorrelate within the lag window."""
        params = ChannelParams(mobile_velocity=300.0)
        rho = tap_autocorrelation(params, num_realizations=10_000, max_lag=10, seed=11)
        tau = np.arange(11) * params.symbol_duration
        np.testing.assert_allclose(rho, j0(2 * np.pi * params.max_doppler * tau), atol=0.05)

    def test_autocorrelation_needs_enough_realizations(self):
        with pytest.raises(InputValidationException):
            tap_autocorrelation(ChannelParams(), num_realizations=999, max_lag=3)

    def test_mean_channel_power_is_unity(self):
        """E|H|^2 = sum of the PDP = 1."""
        params = ChannelParams()
        power = np.mean([generate_channel(params, seed=s).power() for s in range(2000)])
        assert power == pytest.approx(1.0, rel=0.03)

    def test_taps_are_rayleigh_with_pdp_power(self):
        """Each tap's mean power follows the profile."""
        params = ChannelParams(num_subcarriers=16, num_taps=4, cyclic_prefix=4, symbols_per_frame=1)
        taps = np.stack([generate_taps(params, seed=s)[:, 0] for s in range(20_000)])
        np.testing.assert_allclose(np.mean(np.abs(taps) ** 2, axis=0), params.pdp, rtol=0.05)
        # zero-mean circular Gaussian: E[h^2] = 0
        assert abs(np.mean(taps[:, 0] ** 2)) < 0.05

    def test_envelope_moments_are_rayleigh(self):
        """For a Rayleigh envelope, mean = sqrt(var * pi / (4 - pi))."""
        params = ChannelParams(symbols_per_frame=1)
        envelope = np.concatenate(
            [np.abs(generate_channel(params, seed=50_000 + s).data[:, 0]) for s in range(4000)]
        )
        ratio = np.mean(envelope) / math.sqrt(np.var(envelope) * math.pi / (4 - math.pi))
        assert ratio == pytest.approx(1.0, abs=0.03)
