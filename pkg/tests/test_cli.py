import csv
import json

import numpy as np
import pytest
import torch

from echoguide.checkpoint import save_checkpoint
from echoguide.cli import main
from echoguide.landmarks import LandmarkConfig, build_landmark_model
from echoguide.landmarks.train import load_landmark_checkpoint
from echoguide.pipeline import GuidanceSession
from echoguide.pose import PoseRegressor, load_pose_checkpoint

HW = (32, 32)


def make_landmark_checkpoint(tmp_path):
    config = LandmarkConfig(
        encoder_depth=18, width_multiplier=0.125, input_hw=HW, pretrained=False
    )
    torch.manual_seed(0)
    model = build_landmark_model(config)
    return save_checkpoint(tmp_path / "landmark_ckpt", config.to_dict(), model.state_dict())


def make_pose_checkpoint(tmp_path, mode="images_only"):
    torch.manual_seed(0)
    model = PoseRegressor(mode=mode, width_multiplier=0.125)
    config = {
        "schema_version": 1,
        "architecture": "regression",
        "mode": mode,
        "width_multiplier": 0.125,
        "input_hw": list(HW),
        "sigma": 2.0,
        "n_prompts": 4,
    }
    return save_checkpoint(tmp_path / "pose_ckpt", config, model.state_dict())


def write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


def write_echonet(tmp_path, rng, n_frames=40):
    videos_dir = tmp_path / "videos"
    videos_dir.mkdir(exist_ok=True)
    file_rows = ["FileName,EF,ESV,Split"]
    tracing_rows = ["FileName,X1,Y1,X2,Y2,Frame"]
    for name, ef, split in (("vid0.npy", 55.0, "TRAIN"), ("vid1.npy", 40.0, "VAL")):
        frames = rng.integers(0, 256, size=(n_frames, *HW), dtype=np.uint8)
        np.save(videos_dir / name, frames)
        file_rows.append(f"{name},{ef},10,{split}")
        for frame_index in (3, 7):
            for i in range(21):
                tracing_rows.append(
                    f"{name},{4 + i},{5 + i * 0.5},{6 + i},{7 + i * 0.5},{frame_index}"
                )
    file_table = tmp_path / "files.csv"
    file_table.write_text("\n".join(file_rows) + "\n")
    tracing_table = tmp_path / "tracings.csv"
    tracing_table.write_text("\n".join(tracing_rows) + "\n")
    return file_table, tracing_table, videos_dir


def write_sweeps(tmp_path, rng, subjects=("s01", "s02"), n_frames=12):
    entries = []
    for i, subject in enumerate(subjects):
        frames = rng.integers(0, 256, size=(n_frames, *HW), dtype=np.uint8)
        video = tmp_path / f"sweep{i}.npy"
        np.save(video, frames)
        third = n_frames // 3
        labels = (
            ["green"] * third
            + ["yellow"] * third
            + ["red"] * (n_frames - 2 * third)
        )
        entries.append(
            {
                "subject_id": subject,
                "sweep_id": f"{subject}_sweep00",
                "device": "clarius",
                "fps": 50.0,
                "video": str(video),
                "labels": labels,
            }
        )
    manifest = tmp_path / "sweeps.json"
    manifest.write_text(json.dumps(entries))
    return manifest


def echonet_config(tmp_path, rng, extra):
    file_table, tracing_table, videos_dir = write_echonet(tmp_path, rng)
    payload = {
        "file_table": str(file_table),
        "tracing_table": str(tracing_table),
        "videos_dir": str(videos_dir),
    }
    payload.update(extra)
    return payload


class TestTrainCommands:
    def test_train_landmarks(self, tmp_path, rng, capsys):
        cfg = echonet_config(
            tmp_path,
            rng,
            {
                "out_dir": str(tmp_path / "run"),
                "model": {
                    "encoder_depth": 18,
                    "width_multiplier": 0.125,
                    "input_hw": list(HW),
                    "pretrained": False,
                },
                "train": {"epochs": 1, "max_steps": 2, "batch_size": 2},
            },
        )
        config = write_config(tmp_path, "train.json", cfg)
        assert main(["train-landmarks", "--config", str(config)]) == 0
        out = capsys.readouterr().out
        assert "checkpoint:" in out
        model, loaded = load_landmark_checkpoint(tmp_path / "run")
        assert loaded.input_hw == HW

    def test_train_pose_regression(self, tmp_path, rng, capsys):
        manifest = write_sweeps(tmp_path, rng)
        config = write_config(
            tmp_path,
            "pose.json",
            {
                "sweep_manifests": [str(manifest)],
                "out_dir": str(tmp_path / "run"),
                "val_subjects": ["s02"],
                "train": {
                    "architecture": "regression",
                    "mode": "images_only",
                    "epochs": 1,
                    "batch_size": 4,
                    "width_multiplier": 0.125,
                    "input_hw": list(HW),
                },
            },
        )
        assert main(["train-pose", "--config", str(config), "--seed", "3"]) == 0
        assert "checkpoint:" in capsys.readouterr().out
        model, meta = load_pose_checkpoint(tmp_path / "run")
        assert meta["mode"] == "images_only"

    def test_train_pose_rejects_empty_split(self, tmp_path, rng):
        manifest = write_sweeps(tmp_path, rng, subjects=("s01",))
        config = write_config(
            tmp_path,
            "pose.json",
            {
                "sweep_manifests": [str(manifest)],
                "out_dir": str(tmp_path / "run"),
                "train": {"mode": "images_only", "input_hw": list(HW)},
            },
        )
        assert main(["train-pose", "--config", str(config)]) == 1

    def test_train_lvef(self, tmp_path, rng, capsys):
        cfg = echonet_config(
            tmp_path,
            rng,
            {
                "out_dir": str(tmp_path / "run"),
                "model": {
                    "variant": "tiny",
                    "input_hw": list(HW),
                    "input_frames": 8,
                    "stride": 1,
                },
                "train": {"epochs": 1, "max_steps": 2, "batch_size": 1},
            },
        )
        config = write_config(tmp_path, "lvef.json", cfg)
        assert main(["train-lvef", "--config", str(config)]) == 0
        assert "checkpoint:" in capsys.readouterr().out
        assert (tmp_path / "run" / "weights.pt").exists() or any(
            (tmp_path / "run").iterdir()
        )


class TestEvalCommands:
    def test_eval_landmarks(self, tmp_path, rng, capsys):
        checkpoint = make_landmark_checkpoint(tmp_path)
        cfg = echonet_config(
            tmp_path,
            rng,
            {"out_dir": str(tmp_path / "report"), "require_visible": False},
        )
        config = write_config(tmp_path, "eval.json", cfg)
        assert (
            main(["eval-landmarks", "--config", str(config), "--checkpoint", str(checkpoint)])
            == 0
        )
        out = capsys.readouterr().out
        assert "overall error" in out
        assert (tmp_path / "report" / "landmark_errors.csv").exists()
        assert (tmp_path / "report" / "landmark_errors.png").exists()

    def test_eval_landmarks_split_filter(self, tmp_path, rng):
        checkpoint = make_landmark_checkpoint(tmp_path)
        cfg = echonet_config(
            tmp_path,
            rng,
            {
                "out_dir": str(tmp_path / "report"),
                "require_visible": False,
                "split": "val",
            },
        )
        config = write_config(tmp_path, "eval.json", cfg)
        assert (
            main(["eval-landmarks", "--config", str(config), "--checkpoint", str(checkpoint)])
            == 0
        )
        with open(tmp_path / "report" / "landmark_errors.csv") as handle:
            rows = list(csv.reader(handle))
        # two annotated frames in the val split, so every landmark has count 2
        per_landmark = [r for r in rows[1:] if r[0] not in ("overall", "key_subset")]
        assert per_landmark and all(row[3] == "2" for row in per_landmark)

    def test_eval_pose(self, tmp_path, rng, capsys):
        checkpoint = make_pose_checkpoint(tmp_path)
        manifest = write_sweeps(tmp_path, rng)
        config = write_config(
            tmp_path,
            "eval.json",
            {"sweep_manifests": [str(manifest)], "out_dir": str(tmp_path / "report")},
        )
        assert (
            main(["eval-pose", "--config", str(config), "--checkpoint", str(checkpoint)])
            == 0
        )
        out = capsys.readouterr().out
        assert "accuracy:" in out
        report = json.loads((tmp_path / "report" / "fold_report.json").read_text())
        assert np.asarray(report["confusion"]).sum() == 24  # 2 sweeps x 12 frames
        assert (tmp_path / "report" / "confusion.csv").exists()
        assert (tmp_path / "report" / "confusion.png").exists()

    def test_eval_pose_mode_mismatch(self, tmp_path, rng):
        checkpoint = make_pose_checkpoint(tmp_path, mode="images_only")
        manifest = write_sweeps(tmp_path, rng)
        config = write_config(
            tmp_path,
            "eval.json",
            {"sweep_manifests": [str(manifest)], "out_dir": str(tmp_path / "report")},
        )
        args = ["eval-pose", "--config", str(config), "--checkpoint", str(checkpoint)]
        assert main(args + ["--mode", "images_and_landmarks"]) == 1

    def test_score_sweep(self, tmp_path, rng, capsys):
        checkpoint = make_pose_checkpoint(tmp_path)
        manifest = write_sweeps(tmp_path, rng, subjects=("s01",))
        config = write_config(
            tmp_path,
            "score.json",
            {"sweep_manifest": str(manifest), "out_dir": str(tmp_path / "report")},
        )
        assert (
            main(["score-sweep", "--config", str(config), "--checkpoint", str(checkpoint)])
            == 0
        )
        out = capsys.readouterr().out
        assert "accuracy vs labels:" in out
        with open(tmp_path / "report" / "score_trace.csv") as handle:
            rows = list(csv.reader(handle))
        assert len(rows) == 13  # header + 12 frames
        assert rows[0] == ["frame_index", "time_s", "score", "category", "truth"]
        assert {row[3] for row in rows[1:]} <= {"green", "yellow", "red"}
        assert (tmp_path / "report" / "score_trace.png").exists()
        assert (tmp_path / "report" / "confusion.png").exists()


class TestInferAndServe:
    def cascade_config(self, tmp_path, rng, extra):
        landmark = make_landmark_checkpoint(tmp_path)
        pose = make_pose_checkpoint(tmp_path)
        payload = {
            "landmark_checkpoint": str(landmark),
            "pose_checkpoint": str(pose),
        }
        payload.update(extra)
        return payload

    def test_infer_over_video(self, tmp_path, rng, capsys):
        frames = rng.integers(0, 256, size=(10, 48, 48), dtype=np.uint8)
        video = tmp_path / "clip.npy"
        np.save(video, frames)
        cfg = self.cascade_config(
            tmp_path, rng, {"video": str(video), "fps": 25.0, "out_dir": str(tmp_path / "out")}
        )
        config = write_config(tmp_path, "infer.json", cfg)
        assert main(["infer", "--config", str(config)]) == 0
        out = capsys.readouterr().out
        assert "throughput:" in out and "14 fps" in out
        lines = (tmp_path / "out" / "results.jsonl").read_text().strip().splitlines()
        assert len(lines) == 10
        first = json.loads(lines[0])
        assert first["type"] == "result"
        assert first["frame_index"] == 0
        assert len(first["landmarks"]) == 47

    def test_infer_over_sweep(self, tmp_path, rng, capsys):
        manifest = write_sweeps(tmp_path, rng, subjects=("s01",))
        cfg = self.cascade_config(
            tmp_path, rng, {"sweep_manifest": str(manifest), "out_dir": str(tmp_path / "out")}
        )
        config = write_config(tmp_path, "infer.json", cfg)
        assert main(["infer", "--config", str(config)]) == 0
        assert "s01_sweep00" in capsys.readouterr().out

    def test_serve_wiring(self, tmp_path, rng, monkeypatch, capsys):
        captured = {}

        def fake_serve(factory, port, host, sweep_root, log_dir):
            captured.update(factory=factory, port=port, host=host)

        monkeypatch.setattr("echoguide.cli.serve_stream", fake_serve)
        cfg = self.cascade_config(tmp_path, rng, {"fps": 30.0})
        config = write_config(tmp_path, "serve.json", cfg)
        assert main(["serve", "--config", str(config), "--port", "9123"]) == 0
        assert captured["port"] == 9123
        session = captured["factory"]()
        assert isinstance(session, GuidanceSession)
        assert session.fps == 30.0


class TestFoldsCommand:
    def test_nine_subjects_five_folds(self, tmp_path, capsys):
        subjects = [f"s{i:02d}" for i in range(9)]
        config = write_config(tmp_path, "folds.json", {"subjects": subjects})
        assert main(["folds", "--config", str(config), "--seed", "0"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert len(payload) == 5
        for plan in payload:
            assert len(plan["test_subjects"]) == 2
            assert len(plan["val_subjects"]) == 1
            assert len(plan["train_subjects"]) == 6

    def test_writes_folds_json(self, tmp_path, capsys):
        subjects = [f"s{i:02d}" for i in range(9)]
        config = write_config(
            tmp_path, "folds.json", {"subjects": subjects, "out_dir": str(tmp_path / "out")}
        )
        assert main(["folds", "--config", str(config)]) == 0
        assert (tmp_path / "out" / "folds.json").exists()

    def test_too_few_subjects(self, tmp_path):
        config = write_config(tmp_path, "folds.json", {"subjects": ["a", "b"]})
        assert main(["folds", "--config", str(config)]) == 1


class TestErrorHandling:
    def test_missing_config_file(self, tmp_path):
        assert main(["folds", "--config", str(tmp_path / "nope.json")]) == 1

    def test_invalid_json_config(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{broken")
        assert main(["folds", "--config", str(path)]) == 1

    def test_missing_required_key(self, tmp_path):
        config = write_config(tmp_path, "empty.json", {})
        assert main(["folds", "--config", str(config)]) == 1

    def test_missing_checkpoint_dir(self, tmp_path, rng):
        manifest = write_sweeps(tmp_path, rng)
        config = write_config(
            tmp_path,
            "eval.json",
            {"sweep_manifests": [str(manifest)], "out_dir": str(tmp_path / "r")},
        )
        args = ["eval-pose", "--config", str(config), "--checkpoint", str(tmp_path / "ghost")]
        assert main(args) == 1
