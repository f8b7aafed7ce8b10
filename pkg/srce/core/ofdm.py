"""
OFDM frame construction and the per-subcarrier channel

This module defines the comb pilot pattern, maps bits onto the
time-frequency grid and applies Y(k, m) = H(k, m) X(k, m) + W(k, m).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelMatrix
from .constellation import Constellation
from ..utils.exceptions import InputValidationException
from ..utils.seeding import make_rng
from ..utils.validators import (
    validate_pilot_count,
    validate_same_shape,
    validate_snr_db,
)

# Noise disabled
NOISELESS_SNR_DB = math.inf

PILOT_SYMBOL = (1.0 + 1.0j) / math.sqrt(2.0)


def is_noiseless(snr_db: float) -> bool:
    """True for the +inf noiseless sentinel."""
    return snr_db == math.inf


def snr_linear(snr_db: float) -> float:
    """10^(snr_db/10); inf for the noiseless sentinel."""
    return math.inf if is_noiseless(snr_db) else 10.0 ** (snr_db / 10.0)


def noise_variance(snr_db: float) -> float:
    """sigma_n^2 = E{|X|^2} / SNR with unit transmit power."""
    return 0.0 if is_noiseless(snr_db) else 1.0 / snr_linear(snr_db)


@dataclass(frozen=True)
class PilotPattern:
    """
    Comb-type pilot arrangement, identical in every OFDM symbol.

    Attributes:
        positions: Strictly increasing pilot subcarrier indices
        pilot_symbols: Known unit-magnitude pilot symbols X_p
        num_subcarriers: N
    """

    positions: np.ndarray = field(repr=False)
    pilot_symbols: np.ndarray = field(repr=False)
    num_subcarriers: int

    def __post_init__(self):
        positions = np.asarray(self.positions)
        if positions.ndim != 1 or positions.size == 0:
            raise InputValidationException("Pilot positions must be a non-empty vector")
        if np.any(np.diff(positions) <= 0):
            raise InputValidationException("Pilot positions must be strictly increasing")
        if positions[0] < 0 or positions[-1] >= self.num_subcarriers:
            raise InputValidationException(
                "Pilot positions out of range",
                details={"num_subcarriers": self.num_subcarriers}
            )
        if np.shape(self.pilot_symbols) != positions.shape:
            raise InputValidationException("One pilot symbol is required per position")
        if not np.allclose(np.abs(self.pilot_symbols), 1.0, rtol=0, atol=1e-12):
            raise InputValidationException("Pilot symbols must have unit magnitude")

    @classmethod
    def comb(cls, num_subcarriers: int, num_pilots: int) -> "PilotPattern":
        """Equally spaced pilots starting at subcarrier 0, stride N / N_p."""
        validate_pilot_count(num_subcarriers, num_pilots)
        stride = num_subcarriers // num_pilots
        positions = np.arange(0, num_subcarriers, stride)
        return cls(
            positions=positions,
            pilot_symbols=np.full(num_pilots, PILOT_SYMBOL, dtype=complex),
            num_subcarriers=num_subcarriers,
        )

    @property
    def num_pilots(self) -> int:
        return int(len(self.positions))

    @property
    def data_positions(self) -> np.ndarray:
        """Complement of the pilot positions."""
        mask = np.ones(self.num_subcarriers, dtype=bool)
        mask[self.positions] = False
        return np.flatnonzero(mask)

    @property
    def num_data(self) -> int:
        return self.num_subcarriers - self.num_pilots


@dataclass(frozen=True)
class OfdmFrame:
    """
    One transmitted and received frame.

    Attributes:
        tx: Transmitted grid X(k, m), N x M
        rx: Received grid Y(k, m), N x M
        pattern: Pilot pattern used by tx
        snr_db: Operating SNR (NOISELESS_SNR_DB for no noise)
    """

    tx: np.ndarray = field(repr=False)
    rx: np.ndarray = field(repr=False)
    pattern: PilotPattern
    snr_db: float

    def __post_init__(self):
        if not isinstance(self.pattern, PilotPattern):
            raise InputValidationException(
                "A frame requires the pilot pattern it was built with",
                details={"pattern": type(self.pattern).__name__}
            )
        if self.pattern.num_subcarriers != np.shape(self.tx)[0]:
            raise InputValidationException(
                "Pilot pattern does not match the frame",
                details={"pattern": self.pattern.num_subcarriers, "num_subcarriers": np.shape(self.tx)[0]}
            )

    @property
    def shape(self):
        return self.tx.shape

    @property
    def noise_var(self) -> float:
        return noise_variance(self.snr_db)

    @property
    def rx_pilots(self) -> np.ndarray:
        """Y_p, shape (N_p, M)."""
        return self.rx[self.pattern.positions, :]

    @property
    def tx_pilots(self) -> np.ndarray:
        """X_p, shape (N_p, M)."""
        return self.tx[self.pattern.positions, :]


def modulate_frame(
    bits: np.ndarray,
    constellation: Constellation,
    pattern: PilotPattern,
    num_subcarriers: int,
    num_symbols: int,
) -> np.ndarray:
    """
    Place Gray-mapped data symbols and pilots on the N x M grid.

    Data symbols fill the data subcarriers column by column; surplus bits
    beyond N_d * M * bits_per_symbol are ignored.

    Raises:
        InputValidationException: If the bit stream is too short
    """
    if pattern.num_subcarriers != num_subcarriers:
        raise InputValidationException(
            "Pilot pattern does not match the subcarrier count",
            details={"pattern": pattern.num_subcarriers, "num_subcarriers": num_subcarriers}
        )
    bits = np.asarray(bits).ravel()
    needed = pattern.num_data * num_symbols * constellation.bits_per_symbol
    if bits.size < needed:
        raise InputValidationException(
            f"Need {needed} bits, got {bits.size}",
            details={"needed": needed, "given": int(bits.size)}
        )

    grid = np.empty((num_subcarriers, num_symbols), dtype=complex)
    grid[pattern.positions, :] = pattern.pilot_symbols[:, None]
    if pattern.num_data:
        symbols = constellation.map_bits(bits[:needed])
        grid[pattern.data_positions, :] = symbols.reshape(num_symbols, pattern.num_data).T
    return grid


def random_bits(rng: np.random.Generator, count: int) -> np.ndarray:
    """Uniform i.i.d. bits."""
    return rng.integers(0, 2, size=count, dtype=np.int8)


def transmit(
    tx: np.ndarray,
    channel: ChannelMatrix,
    snr_db: float,
    seed: int,
    pattern: PilotPattern,
) -> OfdmFrame:
    """
    Pass a grid through the channel and add circularly-symmetric AWGN.

    Args:
        tx: Transmitted grid X, N x M
        channel: Channel matrix H, N x M
        snr_db: SNR in dB; NOISELESS_SNR_DB disables noise
        seed: Noise seed
        pattern: Pilot pattern carried by tx

    Returns:
        OfdmFrame with rx = H * X + W

    Raises:
        ShapeMismatchException: If tx and H dimensions differ
        InputValidationException: If the SNR is NaN or the pattern does not fit tx
    """
    validate_snr_db(snr_db)
    validate_same_shape(tx, channel.data, "tx", "channel")
    rx = channel.data * tx
    if not is_noiseless(snr_db):
        rng = make_rng(seed)
        rx = rx + unit_noise(rng, tx.shape) * math.sqrt(noise_variance(snr_db))
    return OfdmFrame(tx=tx, rx=rx, pattern=pattern, snr_db=snr_db)


def unit_noise(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-variance circularly-symmetric complex Gaussian samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
