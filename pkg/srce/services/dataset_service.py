"""
Dataset Service - frame simulation and dataset generation.

Every frame is identified by (replicate, split, index). Channel, bits and
unit noise are drawn from streams keyed by that identity only, so the frames
of one index at different SNRs share everything except the noise scale.
"""

import hashlib
import json
import logging
from functools import lru_cache
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from srce.config import ExperimentConfig
from srce.core.channel import ChannelMatrix, generate_channel
from srce.core.constellation import Constellation
from srce.core.dataset import (
    DatasetFile,
    complex_to_planes,
    planes_to_complex,
    read_dataset,
    stack_pairs,
    write_dataset,
)
from srce.core.estimators import ChannelAutocorrelation, empirical_autocorrelation, estimate_ls_full
from srce.core.ofdm import OfdmFrame, PilotPattern, modulate_frame, random_bits, transmit
from srce.utils.exceptions import DatasetFormatException
from srce.utils.seeding import derive_seed, make_rng, split_stream
from srce.utils.validators import validate_snr_db

logger = logging.getLogger(__name__)

_BITS_STREAM = 0
_NOISE_STREAM = 1


def pilot_pattern(config: ExperimentConfig) -> PilotPattern:
    return PilotPattern.comb(config.channel.num_subcarriers, config.pilots)


def frame_channel(config: ExperimentConfig, split: str, index: int, replicate: int = 0) -> ChannelMatrix:
    """Channel realization of one frame."""
    seed = derive_seed(config.seeds.channel, replicate, split_stream(split), index)
    return generate_channel(config.channel_params, seed)


def simulate_frame(
    config: ExperimentConfig,
    split: str,
    index: int,
    snr_db: float,
    replicate: int = 0,
) -> Tuple[ChannelMatrix, OfdmFrame]:
    """
    Draw the channel, modulate random bits and transmit one frame.

    Returns:
        (true channel, received frame)
    """
    params = config.channel_params
    pattern = pilot_pattern(config)
    constellation = Constellation.from_kind(config.modulation)
    stream = split_stream(split)

    channel = frame_channel(config, split, index, replicate)
    rng = make_rng(config.seeds.noise, replicate, stream, index, _BITS_STREAM)
    bits = random_bits(rng, pattern.num_data * params.symbols_per_frame * constellation.bits_per_symbol)
    tx = modulate_frame(bits, constellation, pattern, params.num_subcarriers, params.symbols_per_frame)
    noise_seed = derive_seed(config.seeds.noise, replicate, stream, index, _NOISE_STREAM)
    frame = transmit(tx, channel, snr_db, noise_seed, pattern=pattern)
    return channel, frame


def generate_dataset(
    config: ExperimentConfig,
    split: str,
    count: int,
    seed: int = 0,
    snr_db: Optional[float] = None,
) -> DatasetFile:
    """
    Simulate `count` (LS estimate, true channel) plane pairs.

    Args:
        config: Experiment configuration
        split: "train", "val" or "test"; splits use disjoint seed streams
        count: Number of frames
        seed: Replicate index mixed into every stream
        snr_db: Operating SNR (defaults to config.train_snr_db)

    Raises:
        DatasetFormatException: If a target plane pair does not rebuild its channel
    """
    snr_db = validate_snr_db(config.train_snr_db if snr_db is None else snr_db)
    split_stream(split)
    params = config.channel_params

    pairs = []
    for index in range(count):
        channel, frame = simulate_frame(config, split, index, snr_db, replicate=seed)
        estimate = estimate_ls_full(frame, config.interpolation)
        target = complex_to_planes(channel)
        if not np.array_equal(planes_to_complex(target).data, channel.data):
            raise DatasetFormatException(
                "Target planes do not reconstruct the transmitted channel",
                details={"split": split, "index": index}
            )
        pairs.append((complex_to_planes(estimate), target))

    metadata = {
        "split": split,
        "snr_db": float(snr_db),
        "pilots": config.pilots,
        "modulation": config.modulation.value,
        "interpolation": config.interpolation.value,
        "replicate": int(seed),
        "seeds": config.seeds.model_dump(),
        "channel": config.channel.model_dump(),
    }
    dataset = stack_pairs(pairs, params.num_subcarriers, params.symbols_per_frame, metadata)
    logger.info(f"Generated {split} dataset: {count} frames @ {snr_db} dB, {config.pilots} pilots")
    return dataset


def channel_tag(config: ExperimentConfig) -> str:
    """Short digest of the channel parameters a dataset was simulated with."""
    payload = json.dumps(config.channel.model_dump(), sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:8]


def dataset_path(output_dir: Union[str, Path], config: ExperimentConfig, split: str) -> Path:
    snr = "inf" if np.isinf(config.train_snr_db) else f"{config.train_snr_db:g}"
    name = f"{config.modulation.value}_p{config.pilots}_snr{snr}dB_ch{channel_tag(config)}"
    return Path(output_dir) / "datasets" / name / f"{split}.bin"


def load_or_generate(
    config: ExperimentConfig,
    split: str,
    count: int,
    output_dir: Optional[Union[str, Path]] = None,
    seed: int = 0,
) -> DatasetFile:
    """Read a cached dataset when it matches the request, else simulate and cache it."""
    if output_dir is None:
        return generate_dataset(config, split, count, seed)
    path = dataset_path(output_dir, config, split)
    if path.exists():
        cached = read_dataset(path)
        meta = cached.metadata
        if (
            cached.count == count
            and meta.get("replicate") == seed
            and meta.get("snr_db") == float(config.train_snr_db)
            and meta.get("pilots") == config.pilots
            and meta.get("modulation") == config.modulation.value
            and meta.get("channel") == config.channel.model_dump()
            and meta.get("seeds") == config.seeds.model_dump()
            and meta.get("interpolation") == config.interpolation.value
            and (cached.num_subcarriers, cached.num_symbols)
            == (config.channel.num_subcarriers, config.channel.symbols_per_frame)
        ):
            logger.info(f"Using cached {split} dataset {path}")
            return cached
    dataset = generate_dataset(config, split, count, seed)
    write_dataset(dataset, path)
    return dataset


@lru_cache(maxsize=32)
def _autocorrelation(config_json: str, count: int, replicate: int) -> ChannelAutocorrelation:
    config = ExperimentConfig.model_validate_json(config_json)
    pattern = pilot_pattern(config)
    channels = (
        frame_channel(config, "autocorrelation", index, replicate) for index in range(count)
    )
    return empirical_autocorrelation(channels, pattern)


def autocorrelation_for(config: ExperimentConfig, replicate: int = 0) -> ChannelAutocorrelation:
    """
    Pilot-domain autocorrelation R_HpHp from independent training-stream channels.

    Cached per (channel, pilots, seeds) so every SNR and estimator of a
    condition shares one matrix and its filter cache.
    """
    key = ExperimentConfig(
        channel=config.channel,
        pilots=config.pilots,
        seeds=config.seeds,
    ).model_dump_json()
    return _autocorrelation(key, config.dataset.autocorrelation_channels, replicate)
