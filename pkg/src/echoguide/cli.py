"""Command-line entry points: training, evaluation, scoring, inference, serving.

Every subcommand reads a JSON config for data paths and hyperparameters;
the flags cover the knobs changed most often (checkpoint, mode, seed, port).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from echoguide.errors import (
    CheckpointError,
    FrozenBackboneError,
    InsufficientSubjectsError,
    ParseError,
    SessionError,
)
from echoguide.ingest.echonet import (
    merge_annotations,
    parse_auxiliary_landmarks,
    parse_echonet_annotations,
)
from echoguide.ingest.folds import make_subject_folds
from echoguide.ingest.sweeps import parse_sweep_manifest
from echoguide.ingest.video import read_video
from echoguide.landmarks import (
    LandmarkConfig,
    LandmarkTrainConfig,
    evaluate_landmark_error,
    predict_for_annotations,
    train_landmark_detector,
)
from echoguide.landmarks.train import load_landmark_checkpoint, make_landmark_samples
from echoguide.lvef import LvefConfig, LvefTrainConfig, train_lvef_estimator
from echoguide.pipeline import GuidanceSession, ThroughputStats, serve_stream
from echoguide.pose import (
    MODES,
    PoseTrainConfig,
    evaluate_pose_fold,
    landmark_predictor,
    load_pose_checkpoint,
    make_pose_samples,
    score_samples,
    train_pose_scorer,
)
from echoguide.pose.adapter import build_tiny_backbone, load_backbone
from echoguide.pose.evaluate import accuracy_from_confusion, confusion_matrix
from echoguide import reports

log = logging.getLogger("echoguide")

REFERENCE_FPS = 14.0  # full-scale detection+scoring throughput, for context


def _load_config(path: str) -> dict:
    try:
        payload = json.loads(Path(path).read_text())
    except OSError as err:
        raise ParseError(f"cannot read config {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ParseError(f"config {path} is not valid JSON: {err}") from err
    if not isinstance(payload, dict):
        raise ParseError(f"config {path} must hold a JSON object")
    return payload


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise ParseError(f"config missing required key {key!r}")
    return cfg[key]


def _tupled(params: dict, key: str = "input_hw") -> dict:
    if key in params:
        params = dict(params)
        params[key] = tuple(params[key])
    return params


def _seeded(params: dict, args) -> dict:
    params = dict(params)
    if getattr(args, "seed", None) is not None:
        params["seed"] = args.seed
    return params


def _load_sweeps(cfg: dict):
    manifests = cfg.get("sweep_manifests")
    if manifests is None:
        manifests = [_require(cfg, "sweep_manifest")]
    sweeps = []
    for manifest in manifests:
        sweeps.extend(parse_sweep_manifest(manifest))
    if not sweeps:
        raise ParseError("no sweep recordings found in the configured manifests")
    return sweeps


def _load_echonet(cfg: dict):
    clips, annotations = parse_echonet_annotations(
        _require(cfg, "file_table"),
        _require(cfg, "tracing_table"),
        cfg.get("videos_dir"),
    )
    if cfg.get("aux_table"):
        annotations = merge_annotations(
            annotations, parse_auxiliary_landmarks(cfg["aux_table"])
        )
    return clips, annotations


def _landmarks_fn_from_config(cfg: dict, mode: str):
    if mode == "images_only":
        return None
    checkpoint = _require(cfg, "landmark_checkpoint")
    model, config = load_landmark_checkpoint(checkpoint)
    return landmark_predictor(model, config)


def _check_mode(meta: dict, args) -> str:
    mode = meta["mode"]
    if getattr(args, "mode", None) and args.mode != mode:
        raise ParseError(
            f"checkpoint was trained with mode {mode!r}; "
            f"re-train to use {args.mode!r}"
        )
    return mode


def cmd_train_landmarks(args) -> int:
    cfg = _load_config(args.config)
    clips, annotations = _load_echonet(cfg)
    model_config = LandmarkConfig(**_tupled(cfg.get("model", {})))
    train_config = LandmarkTrainConfig(**_seeded(cfg.get("train", {}), args))

    split = {clip.clip_id: clip.split for clip in clips}
    train_ann = [a for a in annotations if split.get(a.clip_id) == "train"]
    val_ann = [a for a in annotations if split.get(a.clip_id) == "val"]
    train_samples = make_landmark_samples(clips, train_ann, model_config)
    val_samples = make_landmark_samples(clips, val_ann, model_config)
    if not val_samples:
        log.warning("no val-split clips; tracking validation on the training set")
        val_samples = train_samples

    _, result = train_landmark_detector(
        train_samples,
        val_samples,
        model_config,
        train_config,
        out_dir=_require(cfg, "out_dir"),
    )
    print(f"checkpoint: {result.checkpoint_dir}")
    print(f"final train loss: {result.train_losses[-1]:.4f}")
    print(f"final val loss:   {result.val_losses[-1]:.4f}")
    return 0


def cmd_train_pose(args) -> int:
    cfg = _load_config(args.config)
    params = _seeded(_tupled(cfg.get("train", {})), args)
    if args.mode:
        params["mode"] = args.mode
    config = PoseTrainConfig(**params)

    sweeps = _load_sweeps(cfg)
    landmarks_fn = _landmarks_fn_from_config(cfg, config.mode)
    samples = make_pose_samples(sweeps, config.input_hw, landmarks_fn)

    subjects = sorted({s.subject_id for s in samples})
    val_subjects = set(cfg.get("val_subjects") or subjects[-1:])
    train_samples = [s for s in samples if s.subject_id not in val_subjects]
    val_samples = [s for s in samples if s.subject_id in val_subjects]
    if not train_samples or not val_samples:
        raise ParseError(
            f"val_subjects {sorted(val_subjects)} leaves an empty train or val split"
        )

    backbone = None
    if config.architecture == "adapter":
        if cfg.get("backbone_checkpoint"):
            backbone = load_backbone(cfg["backbone_checkpoint"])
        else:
            backbone = build_tiny_backbone(seed=config.seed)

    _, result = train_pose_scorer(
        train_samples,
        val_samples,
        config,
        out_dir=_require(cfg, "out_dir"),
        backbone=backbone,
    )
    print(f"checkpoint: {result.checkpoint_dir}")
    print(f"saved epoch: {result.saved_epoch}")
    print(f"final train loss: {result.train_losses[-1]:.4f}")
    print(f"final val loss:   {result.val_losses[-1]:.4f}")
    return 0


def cmd_train_lvef(args) -> int:
    cfg = _load_config(args.config)
    clips, _ = _load_echonet(cfg)
    train_clips = [c for c in clips if c.split == "train"]
    if not train_clips:
        raise ParseError("no train-split clips for the LVEF estimator")
    model_config = LvefConfig(**_tupled(cfg.get("model", {})))
    train_config = LvefTrainConfig(**_seeded(cfg.get("train", {}), args))
    _, result = train_lvef_estimator(
        train_clips, model_config, train_config, out_dir=_require(cfg, "out_dir")
    )
    print(f"checkpoint: {result.checkpoint_dir}")
    print(f"final train loss: {result.train_losses[-1]:.4f}")
    return 0


def cmd_eval_landmarks(args) -> int:
    cfg = _load_config(args.config)
    model, config = load_landmark_checkpoint(args.checkpoint)
    clips, annotations = _load_echonet(cfg)
    split = cfg.get("split")
    if split is not None:
        wanted = {clip.clip_id for clip in clips if clip.split == split}
        annotations = [a for a in annotations if a.clip_id in wanted]
    predictions, scaled = predict_for_annotations(model, config, clips, annotations)
    report = evaluate_landmark_error(
        predictions, scaled, require_visible=cfg.get("require_visible", True)
    )

    out_dir = Path(_require(cfg, "out_dir"))
    csv_path = reports.write_landmark_error_csv(report, out_dir / "landmark_errors.csv")
    fig_path = reports.save_landmark_error_figure(
        report, out_dir / "landmark_errors.png"
    )
    print(f"frames evaluated: {len(predictions)}")
    print(f"overall error (px): {report.overall}")
    if report.key_subset is not None:
        print(f"key-subset error (px): {report.key_subset}")
    print(f"wrote {csv_path}")
    print(f"wrote {fig_path}")
    return 0


def cmd_eval_pose(args) -> int:
    cfg = _load_config(args.config)
    model, meta = load_pose_checkpoint(args.checkpoint)
    mode = _check_mode(meta, args)
    sweeps = _load_sweeps(cfg)
    landmarks_fn = _landmarks_fn_from_config(cfg, mode)
    samples = make_pose_samples(sweeps, tuple(meta["input_hw"]), landmarks_fn)
    result = evaluate_pose_fold(
        model,
        samples,
        mode,
        fold_index=cfg.get("fold_index", 0),
        architecture=meta["architecture"],
        sigma=meta["sigma"],
    )

    out_dir = Path(_require(cfg, "out_dir"))
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "fold_report.json").write_text(json.dumps(result.to_dict(), indent=2))
    csv_path = reports.write_confusion_csv(result.confusion, out_dir / "confusion.csv")
    fig_path = reports.save_confusion_figure(result.confusion, out_dir / "confusion.png")
    print(f"frames evaluated: {len(samples)}")
    print(f"accuracy: {result.accuracy:.4f}")
    print(f"wrote {out_dir / 'fold_report.json'}")
    print(f"wrote {csv_path}")
    print(f"wrote {fig_path}")
    return 0


def cmd_score_sweep(args) -> int:
    cfg = _load_config(args.config)
    model, meta = load_pose_checkpoint(args.checkpoint)
    mode = _check_mode(meta, args)
    sweep = _load_sweeps(cfg)[0]
    landmarks_fn = _landmarks_fn_from_config(cfg, mode)
    samples = make_pose_samples([sweep], tuple(meta["input_hw"]), landmarks_fn)
    scores, categories = score_samples(
        model, samples, mode, meta["architecture"], meta["sigma"]
    )
    truth = [s.category for s in samples]

    out_dir = Path(_require(cfg, "out_dir"))
    csv_path = reports.write_score_trace_csv(
        scores, categories, out_dir / "score_trace.csv", truth=truth, fps=sweep.fps
    )
    trace_path = reports.save_score_trace_figure(
        scores,
        out_dir / "score_trace.png",
        categories=categories,
        fps=sweep.fps,
        title=f"Pose score trace: {sweep.sweep_id}",
    )
    confusion = confusion_matrix(truth, categories)
    confusion_path = reports.save_confusion_figure(
        confusion, out_dir / "confusion.png", title=f"Confusion: {sweep.sweep_id}"
    )
    print(f"sweep: {sweep.sweep_id} ({len(samples)} frames @ {sweep.fps:g} fps)")
    print(f"accuracy vs labels: {accuracy_from_confusion(confusion):.4f}")
    print(f"wrote {csv_path}")
    print(f"wrote {trace_path}")
    print(f"wrote {confusion_path}")
    return 0


def _session_from_config(cfg: dict, fps: float) -> GuidanceSession:
    return GuidanceSession.from_checkpoints(
        _require(cfg, "landmark_checkpoint"),
        _require(cfg, "pose_checkpoint"),
        lvef_dir=cfg.get("lvef_checkpoint"),
        fps=fps,
    )


def cmd_infer(args) -> int:
    import cv2

    cfg = _load_config(args.config)
    if "video" in cfg:
        frames = read_video(cfg["video"])
        fps = float(cfg.get("fps", 50.0))
        source = cfg["video"]
    else:
        sweep = _load_sweeps(cfg)[0]
        frames = sweep.load_frames()
        fps = sweep.fps
        source = sweep.sweep_id
    session = _session_from_config(cfg, fps)
    h, w = session.landmark_config.input_hw

    out_dir = Path(_require(cfg, "out_dir"))
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / "results.jsonl"
    counts: dict[str, int] = {}
    lvef_values = []
    started = time.perf_counter()
    with open(results_path, "w") as handle:
        for index, frame in enumerate(frames):
            if frame.shape != (h, w):
                frame = cv2.resize(frame, (w, h), interpolation=cv2.INTER_LINEAR)
            result = session.process_frame(frame, index)
            counts[result.category.value] = counts.get(result.category.value, 0) + 1
            if result.lvef is not None:
                lvef_values.append(result.lvef.value)
            handle.write(json.dumps(result.to_message()) + "\n")
    elapsed = time.perf_counter() - started
    stats = ThroughputStats(
        frames_processed=len(frames),
        elapsed_seconds=elapsed - session.lvef_time_accum,
        lvef_seconds=session.lvef_time_accum,
    )

    print(f"source: {source} ({len(frames)} frames)")
    print("categories: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    if lvef_values:
        print(f"lvef estimates: {', '.join(f'{v:.1f}' for v in lvef_values)}")
    print(
        f"throughput: {stats.fps:.1f} fps detection+scoring "
        f"(reference full-scale figure: {REFERENCE_FPS:g} fps); "
        f"lvef time: {stats.lvef_seconds:.2f}s"
    )
    print(f"wrote {results_path}")
    return 0


def cmd_serve(args) -> int:
    cfg = _load_config(args.config)
    fps = float(cfg.get("fps", 50.0))
    port = args.port if args.port is not None else int(cfg.get("port", 8765))
    print(f"serving on {cfg.get('host', '127.0.0.1')}:{port}")
    serve_stream(
        lambda: _session_from_config(cfg, fps),
        port=port,
        host=cfg.get("host", "127.0.0.1"),
        sweep_root=cfg.get("sweep_root"),
        log_dir=cfg.get("log_dir"),
    )
    return 0


def cmd_folds(args) -> int:
    cfg = _load_config(args.config)
    plans = make_subject_folds(
        _require(cfg, "subjects"),
        seed=args.seed if args.seed is not None else cfg.get("seed", 0),
        n_folds=cfg.get("n_folds", 5),
    )
    payload = [
        {
            "fold_index": plan.fold_index,
            "test_subjects": sorted(plan.test_subjects),
            "val_subjects": sorted(plan.val_subjects),
            "train_subjects": sorted(plan.train_subjects),
        }
        for plan in plans
    ]
    text = json.dumps(payload, indent=2)
    if cfg.get("out_dir"):
        out = Path(cfg["out_dir"])
        out.mkdir(parents=True, exist_ok=True)
        (out / "folds.json").write_text(text)
        print(f"wrote {out / 'folds.json'}")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="echoguide",
        description="Ultrasound view guidance: landmarks, pose scoring, LVEF, serving.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, checkpoint=False, mode=False, port=False):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON config path")
        if checkpoint:
            p.add_argument("--checkpoint", required=True, help="checkpoint directory")
        if mode:
            p.add_argument("--mode", choices=MODES, help="scorer input channels")
        p.add_argument("--seed", type=int, default=None, help="override RNG seed")
        if port:
            p.add_argument("--port", type=int, default=None, help="listen port")
        p.set_defaults(func=func)
        return p

    add("train-landmarks", cmd_train_landmarks, "train the landmark detector")
    add("train-pose", cmd_train_pose, "train a pose scorer", mode=True)
    add("train-lvef", cmd_train_lvef, "train the LVEF estimator")
    add(
        "eval-landmarks",
        cmd_eval_landmarks,
        "pixel-error report for a landmark checkpoint",
        checkpoint=True,
    )
    add(
        "eval-pose",
        cmd_eval_pose,
        "accuracy and confusion for a pose checkpoint",
        checkpoint=True,
        mode=True,
    )
    add(
        "score-sweep",
        cmd_score_sweep,
        "score one recorded sweep against its labels",
        checkpoint=True,
        mode=True,
    )
    add("infer", cmd_infer, "run the full cascade over a recorded video")
    add("serve", cmd_serve, "run the streaming guidance service", port=True)
    add("folds", cmd_folds, "print subject-disjoint cross-validation folds")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (
        ParseError,
        CheckpointError,
        SessionError,
        InsufficientSubjectsError,
        FrozenBackboneError,
        ValueError,
    ) as err:
        log.error("%s", err)
        return 1


if __name__ == "__main__":
    sys.exit(main())
