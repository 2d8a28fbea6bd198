import math

import numpy as np
import pytest

from echoguide.landmarks.decode import LandmarkPrediction
from echoguide.pose import (
    build_scorer_input,
    key_points_from_predictions,
    mode_channels,
    render_blob,
    render_landmark_channels,
)
from echoguide.schema import KEY_LANDMARKS


class TestModeChannels:
    def test_counts(self):
        assert mode_channels("images_only") == 1
        assert mode_channels("landmarks_only") == 7
        assert mode_channels("images_and_landmarks") == 7

    def test_unknown_mode(self):
        with pytest.raises(ValueError, match="unknown mode"):
            mode_channels("both")


class TestRenderBlob:
    def test_unit_height_at_center(self):
        blob = render_blob((32, 32), 10, 20)
        assert blob[20, 10] == pytest.approx(1.0)
        assert float(blob.max()) == pytest.approx(1.0)

    def test_sigma_controls_falloff(self):
        blob = render_blob((32, 32), 16, 16, sigma=2.0)
        # one sigma away the value is exp(-1/2)
        assert blob[16, 18] == pytest.approx(math.exp(-0.5), abs=1e-6)
        wide = render_blob((32, 32), 16, 16, sigma=4.0)
        assert wide[16, 24] > blob[16, 24]

    def test_isotropic(self):
        blob = render_blob((33, 33), 16, 16)
        assert blob[16, 20] == pytest.approx(blob[20, 16])
        assert blob[12, 16] == pytest.approx(blob[16, 12])

    def test_subpixel_center(self):
        blob = render_blob((16, 16), 7.5, 7.5)
        assert blob[7, 7] == blob[8, 8] == blob[7, 8] == blob[8, 7]


class TestKeyPointExtraction:
    def make(self, name, visible=True):
        return LandmarkPrediction(
            name=name, x=3.0, y=4.0, peak=0.5, radius=1.0, visible=visible
        )

    def test_filters_gated_and_non_key(self):
        predictions = [
            self.make("LA"),
            self.make("RV", visible=False),
            self.make("lv_contour_17"),  # not in the key subset
            self.make("lv_contour_00"),
        ]
        points = key_points_from_predictions(predictions)
        assert set(points) == {"LA", "lv_contour_00"}
        assert points["LA"] == (3.0, 4.0)


class TestRenderChannels:
    def test_channel_order_and_zeroing(self):
        points = {"LA": (5.0, 6.0)}
        channels = render_landmark_channels(points, (16, 16))
        assert channels.shape == (6, 16, 16)
        la_slot = KEY_LANDMARKS.index("LA")
        assert channels[la_slot, 6, 5] == pytest.approx(1.0)
        for i in range(6):
            if i != la_slot:
                assert channels[i].sum() == 0.0

    def test_all_points(self):
        points = {name: (8.0, 8.0) for name in KEY_LANDMARKS}
        channels = render_landmark_channels(points, (16, 16))
        np.testing.assert_allclose(channels.max(axis=(1, 2)), 1.0, atol=1e-6)


class TestBuildScorerInput:
    def frame(self):
        return np.linspace(0, 1, 64, dtype=np.float32).reshape(8, 8)

    def test_images_only(self):
        out = build_scorer_input(self.frame(), None, "images_only")
        assert out.shape == (1, 8, 8)
        np.testing.assert_array_equal(out[0], self.frame())

    def test_images_and_landmarks(self):
        out = build_scorer_input(self.frame(), {"LA": (2, 2)}, "images_and_landmarks")
        assert out.shape == (7, 8, 8)
        np.testing.assert_array_equal(out[0], self.frame())
        assert out[1 + KEY_LANDMARKS.index("LA")].max() == pytest.approx(1.0)

    def test_landmarks_only_blanks_image(self):
        out = build_scorer_input(self.frame(), {"LA": (2, 2)}, "landmarks_only")
        assert out.shape == (7, 8, 8)
        assert out[0].sum() == 0.0
        assert out[1 + KEY_LANDMARKS.index("LA")].max() == pytest.approx(1.0)

    def test_missing_points_rejected(self):
        with pytest.raises(ValueError, match="needs key-landmark"):
            build_scorer_input(self.frame(), None, "images_and_landmarks")

    def test_empty_points_allowed(self):
        # all landmarks gated off: channels legitimately all zero
        out = build_scorer_input(self.frame(), {}, "images_and_landmarks")
        assert out.shape == (7, 8, 8)
        assert out[1:].sum() == 0.0

    def test_non_2d_frame_rejected(self):
        with pytest.raises(ValueError):
            build_scorer_input(np.zeros((3, 8, 8), dtype=np.float32), None, "images_only")
