"""
Tests for checkpoint persistence
"""

import numpy as np
import pytest
import yaml

from srce.core.dataset import NormalizationStats
from srce.core.sr_models import ArchitectureSpec, build_model
from srce.nn.checkpoint import Checkpoint, checkpoint_paths, load_checkpoint, save_checkpoint
from srce.nn.model import model_forward
from srce.utils.exceptions import DatasetFormatException, StorageException


@pytest.fixture
def checkpoint():
    spec = ArchitectureSpec("FSRCNN", mapping_layers=2)
    return Checkpoint(
        model=build_model(spec, seed=4),
        normalization=NormalizationStats(mean=0.01, std=0.9),
        architecture=spec.to_dict(),
        seeds={"init": 4},
        metadata={"condition": "FSRCE-2_QPSK_p8_train20dB", "train_snr_db": 20.0, "pilots": 8},
    )


class TestCheckpointPaths:
    """Stem handling."""

    def test_stem_and_suffixes(self, tmp_path):
        manifest, blob = checkpoint_paths(tmp_path / "best")
        assert (manifest.name, blob.name) == ("best.yaml", "best.bin")
        assert checkpoint_paths(tmp_path / "best.yaml") == (manifest, blob)
        assert checkpoint_paths(tmp_path / "best.bin") == (manifest, blob)


class TestSaveLoad:
    """Round trip and integrity checks."""

    def test_loaded_model_is_identical(self, checkpoint, tmp_path, rng):
        """Parameters, normalization and outputs survive exactly."""
        path = save_checkpoint(checkpoint, tmp_path / "ckpt" / "best")
        loaded = load_checkpoint(path)
        for (name, a), b in zip(checkpoint.model.parameters().items(), loaded.model.parameters().values()):
            np.testing.assert_array_equal(a, b, err_msg=name)
        assert loaded.normalization == checkpoint.normalization
        assert loaded.metadata == checkpoint.metadata
        assert loaded.architecture == checkpoint.architecture
        x = rng.standard_normal((1, 1, 12, 10))
        np.testing.assert_array_equal(model_forward(checkpoint.model, x)[0], model_forward(loaded.model, x)[0])

    def test_resave_is_byte_identical(self, checkpoint, tmp_path):
        first = save_checkpoint(checkpoint, tmp_path / "a")
        second = save_checkpoint(load_checkpoint(first), tmp_path / "b")
        assert first.read_bytes().replace(b"a.bin", b"b.bin") == second.read_bytes()
        assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()

    def test_manifest_contents(self, checkpoint, tmp_path):
        manifest = yaml.safe_load(save_checkpoint(checkpoint, tmp_path / "m").read_text())
        assert manifest["format"] == "srce-checkpoint"
        assert manifest["num_parameters"] == checkpoint.model.num_parameters == 10021
        assert manifest["parameters"][0] == {
            "name": "feature.kernel", "shape": [56, 1, 5, 5], "offset": 0, "count": 1400,
        }
        assert [row["type"] for row in manifest["layers"]][-1] == "deconv"
        assert manifest["normalization"] == {"mean": 0.01, "std": 0.9}

    def test_corrupted_blob(self, checkpoint, tmp_path):
        path = save_checkpoint(checkpoint, tmp_path / "c")
        blob = tmp_path / "c.bin"
        raw = bytearray(blob.read_bytes())
        raw[10] ^= 0x01
        blob.write_bytes(bytes(raw))
        with pytest.raises(DatasetFormatException):
            load_checkpoint(path)

    def test_wrong_format(self, checkpoint, tmp_path):
        path = save_checkpoint(checkpoint, tmp_path / "f")
        manifest = yaml.safe_load(path.read_text())
        manifest["version"] = 99
        path.write_text(yaml.safe_dump(manifest))
        with pytest.raises(DatasetFormatException):
            load_checkpoint(path)

    @pytest.mark.parametrize("document", ["- a\n- b\n", "just text\n", ""])
    def test_manifest_not_a_mapping(self, checkpoint, tmp_path, document):
        path = save_checkpoint(checkpoint, tmp_path / "n")
        path.write_text(document)
        with pytest.raises(DatasetFormatException):
            load_checkpoint(path)

    @pytest.mark.parametrize("edit", [
        lambda m: m.pop("parameters"),
        lambda m: m.pop("layers"),
        lambda m: m["parameters"][0].pop("shape"),
        lambda m: m.update(normalization={"mu": 0.0, "std": 1.0}),
        lambda m: m.update(layers=[7]),
    ])
    def test_manifest_missing_fields(self, checkpoint, tmp_path, edit):
        """A manifest with valid checksum but broken structure is a format error."""
        path = save_checkpoint(checkpoint, tmp_path / "k")
        manifest = yaml.safe_load(path.read_text())
        edit(manifest)
        path.write_text(yaml.safe_dump(manifest))
        with pytest.raises(DatasetFormatException):
            load_checkpoint(path)

    def test_missing_blob(self, checkpoint, tmp_path):
        path = save_checkpoint(checkpoint, tmp_path / "g")
        (tmp_path / "g.bin").unlink()
        with pytest.raises(StorageException):
            load_checkpoint(path)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(StorageException):
            load_checkpoint(tmp_path / "absent")
