"""
Time-varying Rayleigh multipath channel model

Each multipath tap is an independent sum-of-sinusoids Rayleigh process with
a classical (Jakes) Doppler spectrum, weighted by an exponential power delay
profile and held constant within one OFDM symbol. The frequency response
over N subcarriers and M symbols is the channel matrix H(k, m).
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..utils.exceptions import ConfigurationException, InputValidationException
from ..utils.seeding import make_rng
from ..utils.validators import validate_positive_int

SPEED_OF_LIGHT = 3.0e8

# Last tap of the default profile sits this far below the first
_DEFAULT_PDP_SPAN_DB = 20.0


@dataclass(frozen=True)
class ChannelParams:
    """
    Physical and numerical parameters of the fading channel.

    Attributes:
        carrier_freq: Carrier frequency in Hz
        mobile_velocity: Terminal speed in m/s
        num_taps: Number of taps, delays 0..num_taps-1 sampling periods
        num_subcarriers: N, FFT size
        symbols_per_frame: M, OFDM symbols per frame
        pdp_decay: Exponential PDP rate per tap (None: 20 dB drop over the taps)
        num_sinusoids: Sum-of-sinusoids order per tap
        sample_rate: Sampling rate in Hz
        cyclic_prefix: Cyclic prefix length in samples
    """

    carrier_freq: float = 2.6e9
    mobile_velocity: float = 15.0
    num_taps: int = 16
    num_subcarriers: int = 64
    symbols_per_frame: int = 20
    pdp_decay: Optional[float] = None
    num_sinusoids: int = 16
    sample_rate: float = 1.0e6
    cyclic_prefix: int = 16

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """
        Validate channel parameters.

        Raises:
            ConfigurationException: If any parameter is out of range
        """
        for name in ("num_taps", "num_subcarriers", "symbols_per_frame", "num_sinusoids", "cyclic_prefix"):
            validate_positive_int(getattr(self, name), name)

        if not math.isfinite(self.mobile_velocity) or self.mobile_velocity < 0:
            raise ConfigurationException(
                f"Velocity must be non-negative, got {self.mobile_velocity}",
                details={"mobile_velocity": self.mobile_velocity}
            )
        if not self.carrier_freq > 0 or not self.sample_rate > 0:
            raise ConfigurationException(
                "Carrier frequency and sample rate must be positive",
                details={"carrier_freq": self.carrier_freq, "sample_rate": self.sample_rate}
            )
        if self.num_taps > self.cyclic_prefix:
            raise ConfigurationException(
                f"{self.num_taps} taps exceed the cyclic prefix of {self.cyclic_prefix}",
                details={"num_taps": self.num_taps, "cyclic_prefix": self.cyclic_prefix}
            )
        if self.num_taps > self.num_subcarriers:
            raise ConfigurationException(
                "More taps than subcarriers",
                details={"num_taps": self.num_taps, "num_subcarriers": self.num_subcarriers}
            )
        if self.pdp_decay is not None and (not math.isfinite(self.pdp_decay) or self.pdp_decay < 0):
            raise ConfigurationException(
                f"PDP decay must be finite and non-negative, got {self.pdp_decay}",
                details={"pdp_decay": self.pdp_decay}
            )

    @property
    def max_doppler(self) -> float:
        """Maximum Doppler shift f_d = v * f_c / c in Hz."""
        return self.mobile_velocity * self.carrier_freq / SPEED_OF_LIGHT

    @property
    def symbol_duration(self) -> float:
        """OFDM symbol duration (N + CP) / sample_rate in seconds."""
        return (self.num_subcarriers + self.cyclic_prefix) / self.sample_rate

    @property
    def decay_rate(self) -> float:
        """PDP decay rate actually used."""
        if self.pdp_decay is not None:
            return float(self.pdp_decay)
        if self.num_taps == 1:
            return 0.0
        return math.log(10.0 ** (_DEFAULT_PDP_SPAN_DB / 10.0)) / (self.num_taps - 1)

    @property
    def pdp(self) -> np.ndarray:
        """Positive tap powers summing to one."""
        weights = np.exp(-self.decay_rate * np.arange(self.num_taps))
        return weights / weights.sum()


@dataclass(frozen=True)
class ChannelMatrix:
    """
    Complex time-frequency channel response H(k, m).

    Attributes:
        data: Complex array, N subcarriers x M OFDM symbols
    """

    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.data.ndim != 2:
            raise InputValidationException(
                f"Channel matrix must be 2-D, got shape {self.data.shape}",
                details={"shape": list(self.data.shape)}
            )
        if not np.all(np.isfinite(self.data)):
            raise InputValidationException("Channel matrix contains non-finite entries")

    @property
    def num_subcarriers(self) -> int:
        return self.data.shape[0]

    @property
    def num_symbols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape

    def power(self) -> float:
        """Mean |H(k, m)|^2."""
        return float(np.mean(np.abs(self.data) ** 2))


def sum_of_sinusoids(
    rng: np.random.Generator,
    num_processes: int,
    times: np.ndarray,
    max_doppler: float,
    num_sinusoids: int,
) -> np.ndarray:
    """
    Draw independent unit-power Rayleigh processes sampled at `times`.

    Uses the randomized-angle construction: arrival angles
    (2*pi*n - pi + theta) / (4*M) with theta, and per-sinusoid phases uniform
    on [-pi, pi), which gives the ensemble autocorrelation J0(2*pi*f_d*tau).

    Returns:
        Complex array (num_processes, len(times)) with E|h|^2 = 1
    """
    m = num_sinusoids
    n = np.arange(1, m + 1)
    theta = rng.uniform(-np.pi, np.pi, size=(num_processes, 1))
    psi = rng.uniform(-np.pi, np.pi, size=(num_processes, m))
    phi = rng.uniform(-np.pi, np.pi, size=(num_processes, m))

    alpha = (2.0 * np.pi * n - np.pi + theta) / (4.0 * m)
    omega = 2.0 * np.pi * max_doppler * np.cos(alpha)

    # (processes, sinusoids, times)
    carriers = np.cos(omega[:, :, None] * times[None, None, :] + phi[:, :, None])
    in_phase = np.einsum("ps,pst->pt", np.cos(psi), carriers)
    quadrature = np.einsum("ps,pst->pt", np.sin(psi), carriers)
    # each quadrature has variance 1/2 with this scale
    return (in_phase + 1j * quadrature) * np.sqrt(2.0 / m)


def generate_taps(params: ChannelParams, seed: int) -> np.ndarray:
    """Time-domain taps h_l(m), shape (num_taps, symbols_per_frame), PDP-weighted."""
    params.validate()
    rng = make_rng(seed)
    times = np.arange(params.symbols_per_frame) * params.symbol_duration
    taps = sum_of_sinusoids(
        rng, params.num_taps, times, params.max_doppler, params.num_sinusoids
    )
    return taps * np.sqrt(params.pdp)[:, None]


def generate_channel(params: ChannelParams, seed: int) -> ChannelMatrix:
    """
    Generate one frame of the time-varying frequency response.

    Args:
        params: Channel parameters
        seed: Any 64-bit integer; identical seeds give bit-identical channels

    Returns:
        ChannelMatrix of shape (num_subcarriers, symbols_per_frame)
    """
    taps = generate_taps(params, seed)
    # H(k, m) = sum_l h_l(m) exp(-j 2 pi k l / N)
    response = np.fft.fft(taps, n=params.num_subcarriers, axis=0)
    return ChannelMatrix(response)


def tap_autocorrelation(params: ChannelParams, num_realizations: int, max_lag: int, seed: int = 0) -> np.ndarray:
    """
    Empirical normalized autocorrelation of a single tap at symbol-time lags.

    Args:
        params: Channel parameters (Doppler and symbol timing are used)
        num_realizations: Independent tap processes to average, at least 1000
        max_lag: Largest lag in OFDM symbols
        seed: Random seed

    Returns:
        Real vector of length max_lag + 1; entry 0 is 1
    """
    params.validate()
    if num_realizations < 1000:
        raise InputValidationException(
            f"At least 1000 realizations are required, got {num_realizations}",
            details={"num_realizations": num_realizations}
        )
    if max_lag < 0:
        raise InputValidationException(f"max_lag must be non-negative, got {max_lag}")

    rng = make_rng(seed)
    times = np.arange(max_lag + 1) * params.symbol_duration
    taps = sum_of_sinusoids(rng, num_realizations, times, params.max_doppler, params.num_sinusoids)
    reference = np.conj(taps[:, :1])
    correlation = np.mean(taps * reference, axis=0).real
    return correlation / correlation[0]
