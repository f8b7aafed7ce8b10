"""
Unit tests for constellations

Gray mapping, unit average energy and bit-stream validation.
"""

import itertools

import numpy as np
import pytest

from srce.core.constellation import Constellation, ConstellationKind
from srce.utils.exceptions import InputValidationException


class TestConstellationPoints:
    """Alphabet geometry."""

    @pytest.mark.parametrize("kind", list(ConstellationKind))
    def test_unit_average_energy(self, kind):
        """Every alphabet is normalized to unit mean energy."""
        assert Constellation.from_kind(kind).average_energy == pytest.approx(1.0, abs=1e-12)

    def test_bpsk_points(self):
        """BPSK maps 0 -> +1 and 1 -> -1."""
        c = Constellation.from_kind("BPSK")
        assert c.bits_per_symbol == 1
        np.testing.assert_array_equal(c.points, [1.0, -1.0])

    def test_qpsk_quadrants(self):
        """QPSK 00 sits in the first quadrant at (1 + 1j)/sqrt(2)."""
        c = Constellation.from_kind(ConstellationKind.QPSK)
        assert c.bit_map[(0, 0)] == pytest.approx((1 + 1j) / np.sqrt(2))
        assert c.bit_map[(1, 1)] == pytest.approx((-1 - 1j) / np.sqrt(2))
        assert np.allclose(np.abs(c.points), 1.0)

    def test_qam16_levels(self):
        """16QAM uses the +-1, +-3 grid scaled by 1/sqrt(10)."""
        c = Constellation.from_kind(ConstellationKind.QAM16)
        levels = sorted(set(np.round(c.points.real * np.sqrt(10)).astype(int)))
        assert levels == [-3, -1, 1, 3]
        assert len(set(np.round(c.points, 12))) == 16

    @pytest.mark.parametrize("kind", [ConstellationKind.QPSK, ConstellationKind.QAM16])
    def test_gray_nearest_neighbours_differ_in_one_bit(self, kind):
        """Closest points carry labels at Hamming distance one."""
        c = Constellation.from_kind(kind)
        table = c.bit_map
        spacing = min(abs(a - b) for a, b in itertools.combinations(table.values(), 2))
        for (la, pa), (lb, pb) in itertools.combinations(table.items(), 2):
            if abs(pa - pb) < spacing * (1 + 1e-9):
                assert sum(x != y for x, y in zip(la, lb)) == 1


class TestBitMapping:
    """map_bits behavior."""

    def test_map_bits_uses_msb_first_labels(self):
        """Bits 1,0 select points[2]."""
        c = Constellation.from_kind("QPSK")
        np.testing.assert_array_equal(c.map_bits([1, 0, 0, 1]), [c.points[2], c.points[1]])

    def test_bit_count_must_match_symbol_width(self):
        """A stream that does not fill whole symbols is rejected."""
        with pytest.raises(InputValidationException):
            Constellation.from_kind("QAM16").map_bits([0, 1, 1])

    def test_non_binary_values_rejected(self):
        """Values other than 0 and 1 are rejected."""
        with pytest.raises(InputValidationException):
            Constellation.from_kind("QPSK").map_bits([0, 2])
