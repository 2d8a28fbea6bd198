import pytest
import torch

from echoguide.checkpoint import load_checkpoint, save_checkpoint
from echoguide.errors import CheckpointError
from echoguide.landmarks import LandmarkConfig, build_landmark_model
from echoguide.landmarks.model import ResidualEncoder


def tiny_config(**overrides):
    defaults = dict(
        encoder_depth=18, width_multiplier=0.125, input_hw=(112, 112), pretrained=False
    )
    defaults.update(overrides)
    return LandmarkConfig(**defaults)


class TestShapeContract:
    def test_batch_of_two_112(self):
        model = build_landmark_model(tiny_config())
        out = model(torch.rand(2, 112, 112))
        assert out.shape == (2, 47, 112, 112)

    def test_96_accepted(self):
        model = build_landmark_model(tiny_config(input_hw=(96, 96)))
        out = model(torch.rand(1, 96, 96))
        assert out.shape == (1, 47, 96, 96)

    def test_100_rejected(self):
        model = build_landmark_model(tiny_config())
        with pytest.raises(ValueError, match="100"):
            model(torch.rand(1, 100, 100))

    def test_channel_dim_accepted(self):
        model = build_landmark_model(tiny_config())
        out = model(torch.rand(2, 1, 112, 112))
        assert out.shape == (2, 47, 112, 112)

    def test_rectangular_input(self):
        model = build_landmark_model(tiny_config(input_hw=(96, 112)))
        out = model(torch.rand(1, 96, 112))
        assert out.shape == (1, 47, 96, 112)

    def test_multichannel_rejected(self):
        model = build_landmark_model(tiny_config())
        with pytest.raises(ValueError):
            model(torch.rand(1, 3, 112, 112))


class TestEncoderVariants:
    @pytest.mark.parametrize("depth", [18, 34])
    def test_depths(self, depth):
        enc = ResidualEncoder(depth=depth, width=0.125)
        out = enc(torch.rand(1, 3, 64, 64))
        assert out.shape[-2:] == (2, 2)

    def test_unknown_depth_rejected(self):
        with pytest.raises(ValueError):
            ResidualEncoder(depth=50)

    def test_width_multiplier_scales_channels(self):
        full = ResidualEncoder(depth=18, width=1.0)
        half = ResidualEncoder(depth=18, width=0.5)
        assert full.out_channels == 512
        assert half.out_channels == 256

    def test_width_floor(self):
        # very small multipliers keep at least a handful of channels
        enc = ResidualEncoder(depth=18, width=0.01)
        assert enc.out_channels >= 8


class TestConfig:
    def test_defaults_derived_from_resolution(self):
        cfg = LandmarkConfig(pretrained=False)
        assert cfg.tau == pytest.approx(1.0 / (112 * 112))
        assert cfg.r_vis == pytest.approx(12.0)
        assert cfg.p_vis == pytest.approx(5.0 / (112 * 112))

    def test_defaults_scale_with_resolution(self):
        cfg = LandmarkConfig(input_hw=(56, 56), pretrained=False)
        assert cfg.tau == pytest.approx(1.0 / (56 * 56))
        assert cfg.r_vis == pytest.approx(6.0)

    def test_round_trip(self):
        cfg = tiny_config()
        restored = LandmarkConfig.from_dict(cfg.to_dict())
        assert restored.to_dict() == cfg.to_dict()
        assert restored.pretrained is False

    def test_dict_has_pinned_keys(self):
        keys = set(tiny_config().to_dict())
        assert keys == {
            "schema_version",
            "encoder_depth",
            "width_multiplier",
            "input_hw",
            "num_landmarks",
            "vis_weight_map",
            "tau",
            "r_vis",
            "p_vis",
        }

    def test_num_landmarks_default(self):
        assert tiny_config().num_landmarks == 47


class TestCheckpointRoundTrip:
    def test_save_and_load(self, tmp_path):
        cfg = tiny_config()
        model = build_landmark_model(cfg)
        ckpt = tmp_path / "ckpt"
        save_checkpoint(ckpt, cfg.to_dict(), model.state_dict())
        config, state = load_checkpoint(ckpt)
        assert config == cfg.to_dict()
        rebuilt = build_landmark_model(LandmarkConfig.from_dict(config))
        rebuilt.load_state_dict(state)
        x = torch.rand(1, 112, 112)
        model.eval()
        rebuilt.eval()
        with torch.no_grad():
            assert torch.equal(model(x), rebuilt(x))

    def test_missing_dir(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "nope")

    def test_missing_weights(self, tmp_path):
        ckpt = tmp_path / "partial"
        ckpt.mkdir()
        (ckpt / "config.json").write_text("{}")
        with pytest.raises(CheckpointError):
            load_checkpoint(ckpt)


def test_forward_backward_smoke():
    model = build_landmark_model(tiny_config())
    out = model(torch.rand(2, 112, 112))
    out.sum().backward()
    grads = [p.grad for p in model.parameters() if p.requires_grad]
    assert all(g is not None for g in grads)
