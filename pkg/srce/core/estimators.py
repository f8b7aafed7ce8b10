"""
Classical pilot-aided channel estimators

LS at the pilots, interpolation to all subcarriers, the LMMSE filter with
the constellation constant beta, and the full MMSE filter, together with the
column-wise full-grid estimators used as baselines.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, Optional, Tuple, Union

import numpy as np
from scipy import linalg
from scipy.interpolate import CubicSpline, interp1d

from .channel import ChannelMatrix
from .constellation import Constellation
from .ofdm import OfdmFrame, PilotPattern, is_noiseless, snr_linear
from ..utils.exceptions import InputValidationException, NumericalException
from ..utils.validators import validate_same_shape, validate_snr_db


class Interpolation(Enum):
    """Interpolation across subcarriers."""
    SPLINE = "spline"
    LINEAR = "linear"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class PilotEstimate:
    """
    Channel estimate at the pilot subcarriers.

    Attributes:
        values: Complex vector of length N_p
        positions: Pilot subcarrier indices
    """

    values: np.ndarray = field(repr=False)
    positions: np.ndarray = field(repr=False)

    def __post_init__(self):
        if np.shape(self.values) != np.shape(self.positions):
            raise InputValidationException(
                "Pilot estimate and positions differ in length",
                details={"values": list(np.shape(self.values)), "positions": list(np.shape(self.positions))}
            )
        if not np.all(np.isfinite(self.values)):
            raise NumericalException("Pilot estimate contains non-finite values")

    @property
    def num_pilots(self) -> int:
        return int(len(self.values))


@dataclass(frozen=True)
class BetaConstant:
    """beta = E{|X|^2} E{|1/X|^2}, at least one by Cauchy-Schwarz."""

    value: float

    def __post_init__(self):
        if not self.value >= 1.0 - 1e-12:
            raise NumericalException(f"beta must be >= 1, got {self.value}")


@dataclass(frozen=True)
class ChannelAutocorrelation:
    """
    R_HpHp = E{h_p h_p^H} at the pilot positions.

    Filter matrices derived from R are cached per regularizer and returned
    read-only, so one instance can be shared across frames.

    Attributes:
        matrix: Hermitian N_p x N_p matrix
        sample_count: Number of pilot columns averaged
    """

    matrix: np.ndarray = field(repr=False)
    sample_count: int
    _filters: Dict[Tuple, np.ndarray] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InputValidationException(
                f"Autocorrelation must be square, got {m.shape}",
                details={"shape": list(m.shape)}
            )

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def filter_matrix(self, regularizer: np.ndarray) -> np.ndarray:
        """
        W = R (R + D)^-1 for a diagonal regularizer D (vector of its diagonal).

        Raises:
            NumericalException: If R + D is singular
        """
        regularizer = np.broadcast_to(np.asarray(regularizer, dtype=float), (self.size,))
        key = regularizer.tobytes()
        cached = self._filters.get(key)
        if cached is not None:
            return cached

        system = self.matrix + np.diag(regularizer)
        try:
            # (R + D) is Hermitian, so W^H = (R + D)^-1 R
            solved = linalg.solve(system, self.matrix, assume_a="her", check_finite=True)
        except (linalg.LinAlgError, ValueError) as e:
            raise NumericalException(
                "Regularized autocorrelation matrix is singular",
                details={"error": str(e), "regularizer_min": float(regularizer.min())}
            )
        if not np.all(np.isfinite(solved)):
            raise NumericalException("Filter matrix contains non-finite values")
        filter_matrix = solved.conj().T
        filter_matrix.setflags(write=False)
        self._filters[key] = filter_matrix
        return filter_matrix


def ls_pilot_estimate(
    rx_pilots: np.ndarray,
    tx_pilots: np.ndarray,
    positions: Optional[np.ndarray] = None,
) -> PilotEstimate:
    """
    LS estimate Y_p / X_p at the pilots.

    Raises:
        InputValidationException: On length mismatch or a zero pilot symbol
    """
    rx_pilots = np.asarray(rx_pilots, dtype=complex)
    tx_pilots = np.asarray(tx_pilots, dtype=complex)
    validate_same_shape(rx_pilots, tx_pilots, "rx_pilots", "tx_pilots")
    if np.any(tx_pilots == 0):
        raise InputValidationException("Transmitted pilot symbols must be nonzero")
    if positions is None:
        positions = np.arange(len(rx_pilots))
    return PilotEstimate(values=rx_pilots / tx_pilots, positions=np.asarray(positions))


def _interpolate_columns(
    positions: np.ndarray,
    values: np.ndarray,
    num_subcarriers: int,
    method: Interpolation = Interpolation.SPLINE,
) -> np.ndarray:
    """Interpolate (N_p, ...) pilot values to (N, ...) along axis 0."""
    if len(positions) < 2:
        raise InputValidationException(
            f"At least 2 pilots are required to interpolate, got {len(positions)}",
            details={"pilots": len(positions)}
        )
    grid = np.arange(num_subcarriers)
    method = Interpolation(str(method))

    def interpolate_real(part: np.ndarray) -> np.ndarray:
        if method is Interpolation.SPLINE and len(positions) >= 4:
            return CubicSpline(positions, part, axis=0, bc_type="not-a-knot", extrapolate=True)(grid)
        # fewer than four pilots: linear, extrapolated at the band edges
        return interp1d(positions, part, axis=0, kind="linear", fill_value="extrapolate")(grid)

    return interpolate_real(values.real) + 1j * interpolate_real(values.imag)


def interpolate_full(
    est: PilotEstimate,
    num_subcarriers: int,
    method: Union[Interpolation, str] = Interpolation.SPLINE,
) -> np.ndarray:
    """
    Interpolate a pilot estimate to all N subcarriers.

    Real and imaginary parts use independent not-a-knot cubic splines
    (linear for fewer than four pilots or when `method` is linear); the
    curve passes through every pilot value.

    Returns:
        Complex vector of length N
    """
    return _interpolate_columns(est.positions, np.asarray(est.values), num_subcarriers, method)


def beta_constant(constellation: Union[Constellation, Iterable[complex]]) -> BetaConstant:
    """
    beta = mean|x|^2 * mean|1/x|^2 over the constellation points.

    Raises:
        InputValidationException: If any point is zero
    """
    points = constellation.points if isinstance(constellation, Constellation) else np.asarray(list(constellation))
    points = np.asarray(points, dtype=complex)
    if points.size == 0 or np.any(points == 0):
        raise InputValidationException("Constellation points must be nonzero")
    power = np.abs(points) ** 2
    return BetaConstant(float(np.mean(power) * np.mean(1.0 / power)))


def empirical_autocorrelation(
    channels: Iterable[Union[ChannelMatrix, np.ndarray]],
    pattern: PilotPattern,
) -> ChannelAutocorrelation:
    """
    Sample mean of h_p h_p^H over every (realization, symbol) column.

    Raises:
        InputValidationException: If no channel is given
    """
    accumulator = np.zeros((pattern.num_pilots, pattern.num_pilots), dtype=complex)
    count = 0
    for channel in channels:
        data = channel.data if isinstance(channel, ChannelMatrix) else np.asarray(channel)
        pilots = data[pattern.positions, :]
        accumulator += pilots @ pilots.conj().T
        count += pilots.shape[1]
    if count == 0:
        raise InputValidationException("At least one channel realization is required")
    matrix = accumulator / count
    matrix = 0.5 * (matrix + matrix.conj().T)
    return ChannelAutocorrelation(matrix=matrix, sample_count=count)


def _apply_filter(filter_matrix: np.ndarray, est: PilotEstimate) -> PilotEstimate:
    return PilotEstimate(values=filter_matrix @ est.values, positions=est.positions)


def _check_dimension(est: PilotEstimate, autocorrelation: ChannelAutocorrelation) -> None:
    if autocorrelation.size != est.num_pilots:
        raise InputValidationException(
            f"Autocorrelation size {autocorrelation.size} does not match {est.num_pilots} pilots",
            details={"autocorrelation": autocorrelation.size, "pilots": est.num_pilots}
        )


def lmmse_regularizer(beta: BetaConstant, snr_db: float) -> float:
    """beta / SNR, zero for the noiseless sentinel."""
    validate_snr_db(snr_db)
    return 0.0 if is_noiseless(snr_db) else beta.value / snr_linear(snr_db)


def lmmse_estimate(
    est: PilotEstimate,
    autocorrelation: ChannelAutocorrelation,
    beta: BetaConstant,
    snr_db: float,
) -> PilotEstimate:
    """
    LMMSE estimate R (R + beta/SNR I)^-1 h_LS at the pilots.

    The noiseless sentinel returns the input unchanged.

    Raises:
        NumericalException: If the regularized matrix is singular
    """
    _check_dimension(est, autocorrelation)
    if is_noiseless(validate_snr_db(snr_db)):
        return est
    return _apply_filter(autocorrelation.filter_matrix(lmmse_regularizer(beta, snr_db)), est)


def mmse_regularizer(tx_pilots: np.ndarray, noise_var: float) -> np.ndarray:
    """Diagonal of sigma^2 (X_p X_p^H)^-1."""
    tx_pilots = np.asarray(tx_pilots, dtype=complex)
    if np.any(tx_pilots == 0):
        raise InputValidationException("Transmitted pilot symbols must be nonzero")
    if not math.isfinite(noise_var) or noise_var < 0:
        raise InputValidationException(f"Invalid noise variance {noise_var}")
    return noise_var / np.abs(tx_pilots) ** 2


def mmse_estimate(
    est: PilotEstimate,
    autocorrelation: ChannelAutocorrelation,
    tx_pilots: np.ndarray,
    noise_var: float,
) -> PilotEstimate:
    """
    MMSE estimate R (R + sigma^2 (X_p X_p^H)^-1)^-1 h_LS at the pilots.

    Raises:
        NumericalException: If the regularized matrix is singular
    """
    _check_dimension(est, autocorrelation)
    validate_same_shape(est.values, tx_pilots, "estimate", "tx_pilots")
    regularizer = mmse_regularizer(tx_pilots, noise_var)
    if noise_var == 0:
        return est
    return _apply_filter(autocorrelation.filter_matrix(regularizer), est)


def _ls_pilot_matrix(frame: OfdmFrame) -> np.ndarray:
    tx_pilots = frame.tx_pilots
    if np.any(tx_pilots == 0):
        raise InputValidationException("Transmitted pilot symbols must be nonzero")
    return frame.rx_pilots / tx_pilots


def estimate_ls_full(
    frame: OfdmFrame,
    method: Union[Interpolation, str] = Interpolation.SPLINE,
) -> ChannelMatrix:
    """LS at the pilots of every symbol, interpolated to the N x M grid."""
    pilots = _ls_pilot_matrix(frame)
    full = _interpolate_columns(frame.pattern.positions, pilots, frame.shape[0], method)
    return ChannelMatrix(full)


def estimate_lmmse_full(
    frame: OfdmFrame,
    autocorrelation: ChannelAutocorrelation,
    beta: BetaConstant,
    method: Union[Interpolation, str] = Interpolation.SPLINE,
) -> ChannelMatrix:
    """LMMSE at the pilots of every symbol (operating SNR known), interpolated."""
    pilots = _ls_pilot_matrix(frame)
    if autocorrelation.size != pilots.shape[0]:
        raise InputValidationException(
            "Autocorrelation does not match the frame's pilots",
            details={"autocorrelation": autocorrelation.size, "pilots": pilots.shape[0]}
        )
    if not is_noiseless(frame.snr_db):
        pilots = autocorrelation.filter_matrix(lmmse_regularizer(beta, frame.snr_db)) @ pilots
    full = _interpolate_columns(frame.pattern.positions, pilots, frame.shape[0], method)
    return ChannelMatrix(full)


def estimate_mmse_full(
    frame: OfdmFrame,
    autocorrelation: ChannelAutocorrelation,
    method: Union[Interpolation, str] = Interpolation.SPLINE,
) -> ChannelMatrix:
    """MMSE at the pilots of every symbol using the true noise variance, interpolated."""
    pilots = _ls_pilot_matrix(frame)
    columns = []
    for m in range(pilots.shape[1]):
        est = PilotEstimate(values=pilots[:, m], positions=frame.pattern.positions)
        columns.append(mmse_estimate(est, autocorrelation, frame.tx_pilots[:, m], frame.noise_var).values)
    full = _interpolate_columns(frame.pattern.positions, np.stack(columns, axis=1), frame.shape[0], method)
    return ChannelMatrix(full)
