import numpy as np
import pytest
import torch

from echoguide.errors import FrozenBackboneError
from echoguide.pose import (
    AdapterPoseScorer,
    PoseRegressor,
    PoseTrainConfig,
    TrailingMeanSelector,
    build_tiny_backbone,
    evaluate_pose_fold,
    load_backbone,
    load_pose_checkpoint,
    parameter_digest,
    save_backbone,
    train_pose_scorer,
)
from echoguide.pose.adapter import assert_backbone_unchanged

from oracles import trailing_mean_argmin_oracle
from synth import make_separable_pose_samples


def quick_config(**overrides):
    defaults = dict(
        mode="images_and_landmarks",
        epochs=6,
        lr=2e-3,
        batch_size=16,
        seed=0,
        width_multiplier=0.25,
        input_hw=(32, 32),
    )
    defaults.update(overrides)
    return PoseTrainConfig(**defaults)


class TestTrailingMeanSelector:
    def test_monotone_decreasing_picks_final_epoch(self):
        selector = TrailingMeanSelector(window=5)
        fired = [selector.update(loss) for loss in [9, 8, 7, 6, 5, 4, 3, 2, 1]]
        assert selector.best_epoch == 8
        assert fired[:4] == [False] * 4
        assert all(fired[4:])

    def test_matches_oracle_on_random_sequences(self, rng):
        for _ in range(50):
            losses = list(rng.uniform(0.1, 5.0, size=int(rng.integers(5, 30))))
            selector = TrailingMeanSelector(window=5)
            for loss in losses:
                selector.update(loss)
            assert selector.best_epoch == trailing_mean_argmin_oracle(losses, 5)

    def test_short_run_never_fires(self):
        selector = TrailingMeanSelector(window=5)
        assert not any(selector.update(loss) for loss in [3, 2, 1])
        assert selector.best_epoch is None

    def test_spike_keeps_earlier_pick(self):
        selector = TrailingMeanSelector(window=3)
        for loss in [3, 2, 1, 50, 50]:
            selector.update(loss)
        assert selector.best_epoch == 2

    def test_invalid_window(self):
        with pytest.raises(ValueError):
            TrailingMeanSelector(window=0)


class TestRegressionTraining:
    def test_learns_separable_set(self, rng):
        samples = make_separable_pose_samples(16, rng=rng)
        model, result = train_pose_scorer(samples, [], quick_config())
        fold = evaluate_pose_fold(model, samples, "images_and_landmarks")
        assert fold.accuracy >= 0.9
        assert result.train_losses[-1] < result.train_losses[0]

    def test_empty_training_set_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            train_pose_scorer([], [], quick_config())

    def test_saved_epoch_follows_trailing_rule(self, rng):
        samples = make_separable_pose_samples(4, rng=rng)
        config = quick_config(epochs=7, batch_size=12)
        _, result = train_pose_scorer(samples, samples, config)
        assert result.saved_epoch == trailing_mean_argmin_oracle(result.val_losses, 5)

    def test_short_run_falls_back_to_best_epoch(self, rng, caplog):
        samples = make_separable_pose_samples(4, rng=rng)
        config = quick_config(epochs=3, batch_size=12)
        with caplog.at_level("WARNING"):
            _, result = train_pose_scorer(samples, samples, config)
        assert result.saved_epoch == int(np.argmin(result.val_losses))
        assert any("selection window" in r.message for r in caplog.records)

    def test_checkpoint_round_trip(self, tmp_path, rng):
        samples = make_separable_pose_samples(4, rng=rng)
        config = quick_config(epochs=1, batch_size=12)
        model, result = train_pose_scorer(samples, [], config, out_dir=tmp_path / "pose")
        restored, meta = load_pose_checkpoint(result.checkpoint_dir)
        assert meta["architecture"] == "regression"
        assert meta["mode"] == "images_and_landmarks"
        batch = torch.rand(2, 7, 32, 32)
        model.eval()
        with torch.no_grad():
            assert torch.equal(model(batch), restored(batch))

    def test_modes_change_input_width(self, rng):
        samples = make_separable_pose_samples(4, rng=rng)
        for mode, channels in [("images_only", 1), ("landmarks_only", 7)]:
            config = quick_config(mode=mode, epochs=1, batch_size=12)
            model, _ = train_pose_scorer(samples, [], config)
            assert model.encoder.conv1.in_channels == channels


class TestAdapterTraining:
    def adapter_config(self, **overrides):
        return quick_config(architecture="adapter", **overrides)

    def test_logits_shape(self):
        model = AdapterPoseScorer(build_tiny_backbone(), width_multiplier=0.25)
        assert model(torch.rand(4, 7, 32, 32)).shape == (4, 3)

    def test_backbone_frozen_through_training(self, rng):
        samples = make_separable_pose_samples(6, rng=rng)
        backbone = build_tiny_backbone(seed=3)
        before = parameter_digest(backbone)
        model, _ = train_pose_scorer(
            samples, [], self.adapter_config(epochs=2, batch_size=12), backbone=backbone
        )
        assert parameter_digest(model.backbone) == before

    def test_drift_detection(self):
        backbone = build_tiny_backbone()
        before = parameter_digest(backbone)
        with torch.no_grad():
            backbone.embed.weight[0, 0] += 1.0
        with pytest.raises(FrozenBackboneError):
            assert_backbone_unchanged(before, backbone)

    def test_learns_separable_set(self, rng):
        samples = make_separable_pose_samples(12, rng=rng)
        config = self.adapter_config(epochs=15, batch_size=16)
        model, result = train_pose_scorer(samples, [], config)
        fold = evaluate_pose_fold(model, samples, "images_and_landmarks", architecture="adapter")
        assert fold.accuracy >= 0.9
        assert result.train_losses[-1] < result.train_losses[0]

    def test_checkpoint_round_trip(self, tmp_path, rng):
        samples = make_separable_pose_samples(4, rng=rng)
        config = self.adapter_config(epochs=1, batch_size=12)
        model, result = train_pose_scorer(samples, [], config, out_dir=tmp_path / "adapter")
        restored, meta = load_pose_checkpoint(result.checkpoint_dir)
        assert meta["architecture"] == "adapter"
        assert meta["backbone"]["dim"] == 64
        batch = torch.rand(2, 7, 32, 32)
        model.eval()
        with torch.no_grad():
            assert torch.allclose(model(batch), restored(batch), atol=1e-6)

    def test_backbone_pluggable_by_path(self, tmp_path):
        backbone = build_tiny_backbone(seed=9)
        save_backbone(tmp_path / "bb", backbone)
        loaded = load_backbone(tmp_path / "bb")
        assert parameter_digest(loaded) == parameter_digest(backbone)


def test_unknown_architecture_rejected():
    with pytest.raises(ValueError):
        PoseTrainConfig(architecture="svm")
