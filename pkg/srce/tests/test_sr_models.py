"""
Tests for the SRCNN and FSRCNN-x architectures
"""

import numpy as np
import pytest

from srce.core.channel import ChannelMatrix
from srce.core.dataset import NormalizationStats
from srce.core.sr_models import (
    ArchitectureKind,
    ArchitectureSpec,
    build_model,
    infer,
    infer_two_channel,
    parameter_count,
    refine_batch,
    refine_estimate,
)
from srce.nn.model import Model
from srce.utils.exceptions import ConfigurationException, InputValidationException

UNIT_NORM = NormalizationStats(mean=0.0, std=1.0)


class TestArchitectureSpec:
    """Layer tables, names and parameter counts."""

    def test_fsrcnn4_parameter_count(self):
        """5x5x56, 1x1x12, four 3x3x12, 1x1x56 and a 9x9 transposed head."""
        spec = ArchitectureSpec(ArchitectureKind.FSRCNN, mapping_layers=4)
        assert parameter_count(spec) == 12637
        assert build_model(spec, seed=0).num_parameters == 12637

    def test_mapping_layers_add_1308_each(self):
        counts = [parameter_count(ArchitectureSpec("FSRCNN", mapping_layers=x)) for x in (2, 4, 6)]
        assert counts[0] == 10021
        assert counts[1] - counts[0] == 2616
        assert counts[2] - counts[1] == 2616

    def test_srcnn_parameter_count(self):
        spec = ArchitectureSpec("SRCNN")
        assert parameter_count(spec) == 8129
        assert build_model(spec, seed=0).num_parameters == 8129

    def test_two_channel_counts(self):
        """Two input and output channels change only the first and last layers."""
        one = parameter_count(ArchitectureSpec("FSRCNN", mapping_layers=4, channels=1))
        two = parameter_count(ArchitectureSpec("FSRCNN", mapping_layers=4, channels=2))
        assert two - one == 5 * 5 * 56 + 9 * 9 * 56 + 1

    def test_layer_table(self):
        table = ArchitectureSpec("FSRCNN", mapping_layers=2).layer_table
        assert [row.name for row in table] == ["feature", "shrink", "map1", "map2", "expand", "deconv"]
        assert [row.kernel_size for row in table] == [5, 1, 3, 3, 1, 9]
        assert table[-1].transposed and not table[-1].activation
        assert all(row.activation for row in table[:-1])

    def test_estimator_names(self):
        assert ArchitectureSpec("FSRCNN", mapping_layers=6).estimator_name == "FSRCE-6"
        assert ArchitectureSpec("srcnn").estimator_name == "SRCE"

    @pytest.mark.parametrize("kwargs", [
        {"kind": "FSRCNN", "mapping_layers": 0},
        {"kind": "VDSR"},
        {"kind": "SRCNN", "channels": 3},
    ])
    def test_invalid_specs(self, kwargs):
        with pytest.raises(ConfigurationException):
            ArchitectureSpec(**kwargs)

    def test_dict_roundtrip(self):
        spec = ArchitectureSpec("FSRCNN", mapping_layers=3, channels=2)
        assert ArchitectureSpec.from_dict(spec.to_dict()) == spec


class TestBuildModel:
    """Initialization and layer structure."""

    def test_deterministic_per_seed(self):
        spec = ArchitectureSpec("FSRCNN", mapping_layers=1)
        a, b, c = build_model(spec, 5), build_model(spec, 5), build_model(spec, 6)
        for (name, pa), pb, pc in zip(a.parameters().items(), b.parameters().values(), c.parameters().values()):
            np.testing.assert_array_equal(pa, pb)
            if name.endswith("kernel"):
                assert not np.array_equal(pa, pc)

    def test_relu_after_every_layer_but_last(self):
        model = build_model(ArchitectureSpec("SRCNN"), 0)
        kinds = [row["type"] for row in model.layer_table()]
        assert kinds == ["conv", "relu", "conv", "relu", "conv"]

    def test_deconv_head(self):
        model = build_model(ArchitectureSpec("FSRCNN", mapping_layers=1), 0)
        head = model.conv_layers[-1]
        assert head.transposed
        assert head.kernel.shape == (56, 1, 9, 9)


class TestInference:
    """infer, refine_batch and refine_estimate."""

    @pytest.fixture
    def model(self):
        return build_model(ArchitectureSpec("FSRCNN", mapping_layers=1), seed=2)

    def test_infer_preserves_shape(self, model, rng):
        plane = rng.standard_normal((16, 10))
        assert infer(model, plane, UNIT_NORM).shape == (16, 10)

    def test_normalization_is_inverted(self, rng):
        """An empty network maps any plane back to itself through z-scoring."""
        plane = rng.standard_normal((12, 12))
        out = infer(Model([]), plane, NormalizationStats(mean=0.3, std=2.0))
        np.testing.assert_allclose(out, plane)

    def test_plane_smaller_than_kernel(self, model, rng):
        with pytest.raises(InputValidationException):
            infer(model, rng.standard_normal((8, 8)), UNIT_NORM)

    def test_non_finite_plane(self, model):
        plane = np.zeros((16, 10))
        plane[3, 3] = np.nan
        with pytest.raises(InputValidationException):
            infer(model, plane, UNIT_NORM)

    def test_two_channel_model_rejected_by_infer(self, rng):
        model = build_model(ArchitectureSpec("FSRCNN", mapping_layers=1, channels=2), 0)
        with pytest.raises(InputValidationException):
            infer(model, rng.standard_normal((16, 10)), UNIT_NORM)

    def test_batch_matches_single_planes(self, model, rng):
        """Refining a stack equals refining each real and imaginary plane alone."""
        estimates = rng.standard_normal((3, 16, 10)) + 1j * rng.standard_normal((3, 16, 10))
        norm = NormalizationStats(mean=0.1, std=0.7)
        refined = refine_batch(model, estimates, norm)
        for b in range(3):
            np.testing.assert_allclose(refined[b].real, infer(model, estimates[b].real, norm), atol=1e-12)
            np.testing.assert_allclose(refined[b].imag, infer(model, estimates[b].imag, norm), atol=1e-12)

    def test_two_channel_batch(self, rng):
        model = build_model(ArchitectureSpec("SRCNN", channels=2), 0)
        estimates = rng.standard_normal((2, 12, 12)) + 1j * rng.standard_normal((2, 12, 12))
        refined = refine_batch(model, estimates, UNIT_NORM)
        planes = np.stack([estimates[1].real, estimates[1].imag])
        single = infer_two_channel(model, planes, UNIT_NORM)
        np.testing.assert_allclose(refined[1], single[0] + 1j * single[1], atol=1e-12)

    def test_refine_estimate(self, model, rng):
        estimate = ChannelMatrix(rng.standard_normal((16, 10)) + 1j * rng.standard_normal((16, 10)))
        refined = refine_estimate(model, estimate, UNIT_NORM)
        assert isinstance(refined, ChannelMatrix)
        assert refined.shape == (16, 10)
