"""
Constellation domain model with Gray bit mappings

This module defines the modulation alphabets used for data subcarriers and
the constellation-dependent beta constant of the LMMSE regularizer.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, Tuple, Union

import numpy as np

from ..utils.exceptions import InputValidationException


class ConstellationKind(Enum):
    """Constellation enumeration."""
    BPSK = "BPSK"
    QPSK = "QPSK"
    QAM16 = "QAM16"

    def __str__(self) -> str:
        return self.value


# Per-axis Gray code for 4-level amplitude: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
_GRAY_AXIS_4 = {(0, 0): -3.0, (0, 1): -1.0, (1, 1): 1.0, (1, 0): 3.0}


def _bits_of(index: int, width: int) -> Tuple[int, ...]:
    return tuple((index >> (width - 1 - b)) & 1 for b in range(width))


def _point_for(kind: ConstellationKind, bits: Tuple[int, ...]) -> complex:
    if kind is ConstellationKind.BPSK:
        return complex(1 - 2 * bits[0], 0.0)
    if kind is ConstellationKind.QPSK:
        # quadrant Gray code, (0, 0) -> (1 + 1j) / sqrt(2)
        return complex(1 - 2 * bits[0], 1 - 2 * bits[1]) / np.sqrt(2.0)
    # first two bits select the in-phase level, last two the quadrature level
    return complex(_GRAY_AXIS_4[bits[0:2]], _GRAY_AXIS_4[bits[2:4]]) / np.sqrt(10.0)


@dataclass(frozen=True)
class Constellation:
    """
    A unit-average-energy modulation alphabet.

    Points are ordered by the integer value of their bit label (MSB first),
    so `points[i]` is the symbol transmitted for the bits of `i`.

    Attributes:
        kind: Constellation type
        points: Complex symbol vector with mean |point|^2 = 1
    """

    kind: ConstellationKind
    points: np.ndarray = field(repr=False)

    @classmethod
    def from_kind(cls, kind: Union[ConstellationKind, str]) -> "Constellation":
        """Build a constellation from its kind (enum or name)."""
        return _constellation_for(ConstellationKind(str(kind)))

    @property
    def bits_per_symbol(self) -> int:
        """Number of bits carried by one symbol."""
        return int(np.log2(len(self.points)))

    @property
    def bit_map(self) -> Dict[Tuple[int, ...], complex]:
        """Gray-coded bit tuple -> constellation point table."""
        k = self.bits_per_symbol
        return {_bits_of(i, k): complex(p) for i, p in enumerate(self.points)}

    @property
    def average_energy(self) -> float:
        """Mean |point|^2 over the alphabet."""
        return float(np.mean(np.abs(self.points) ** 2))

    def map_bits(self, bits: np.ndarray) -> np.ndarray:
        """
        Map a flat bit stream onto symbols.

        Args:
            bits: Array of 0/1 values whose length is a multiple of bits_per_symbol

        Returns:
            Complex symbol vector
        """
        bits = np.asarray(bits, dtype=np.int64)
        k = self.bits_per_symbol
        if bits.size % k != 0:
            raise InputValidationException(
                f"Bit count {bits.size} is not a multiple of {k}",
                details={"bits": int(bits.size), "bits_per_symbol": k}
            )
        if np.any((bits != 0) & (bits != 1)):
            raise InputValidationException("Bit stream must contain only 0 and 1")
        weights = 1 << np.arange(k - 1, -1, -1)
        indices = bits.reshape(-1, k) @ weights
        return self.points[indices]


@lru_cache(maxsize=None)
def _constellation_for(kind: ConstellationKind) -> Constellation:
    width = {ConstellationKind.BPSK: 1, ConstellationKind.QPSK: 2, ConstellationKind.QAM16: 4}[kind]
    points = np.array([_point_for(kind, _bits_of(i, width)) for i in range(1 << width)])
    points.setflags(write=False)
    return Constellation(kind=kind, points=points)
