"""Command-line interface for the thermal pipeline.

Subcommands cover the whole artifact life cycle: synthesizing ground
truth, imaging it through the camera model, training, running the
correction/upscaling pipeline, computing metrics, benchmarking, and
rendering SVG reports.  All commands are deterministic under a fixed
``--seed``; ``--threads`` (or ``THERMOPIPE_THREADS``) parallelizes across
files without changing any output byte.  Exit code is 0 exactly when no
per-item error occurred.
"""
from __future__ import annotations

import argparse
import glob
import hashlib
import math
import os
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import fileio
from .burst import MotionConfig, default_motion, synth_burst
from .camera import CameraParams, GrayFrame, load_camera_params, simulate_frame
from .errors import TrainingDivergedError
from .metrics import frame_metrics
from .nuc import (init_multi_nuc, init_single_nuc, multi_config_from_weights,
                  MultiNucConfig, nuc_multi, nuc_single,
                  single_config_from_weights, SingleNucConfig)
from .ops import downscale_gt
from .scenes import scene_set
from .sr import SrConfig, init_sr, sr_config_from_weights, sr_forward
from .training import SceneDataset, TrainConfig, pretrain_module, train_end_to_end

EVAL_HEADER = ("frame_id", "mae", "psnr", "ssim", "emd",
               "cwsi_gt", "cwsi_est", "cwsi_err")

_ID_SUFFIXES = ("_pred", "_gt", "_in", "_mask")


# ---------------------------------------------------------------------------
# small shared helpers


def _thread_count(value: int | None) -> int:
    if value is None:
        value = int(os.environ.get("THERMOPIPE_THREADS", "1"))
    if value < 1:
        raise ValueError(f"thread count must be >= 1, got {value}")
    return value


def _run_items(items: list, worker, threads: int, label):
    """Apply ``worker`` to every item, optionally across a thread pool.

    Results come back in input order; failures are collected as
    (label, message) instead of aborting the batch.
    """
    results = [None] * len(items)
    errors: list[tuple[str, str]] = []
    if threads <= 1:
        for i, item in enumerate(items):
            try:
                results[i] = worker(item)
            except Exception as exc:  # per-item isolation is the contract
                errors.append((label(item), str(exc)))
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(worker, item) for item in items]
            for i, fut in enumerate(futures):
                try:
                    results[i] = fut.result()
                except Exception as exc:
                    errors.append((label(items[i]), str(exc)))
    return results, errors


def _report_errors(errors: list[tuple[str, str]]) -> int:
    for name, message in errors:
        print(f"error: {name}: {message}", file=sys.stderr)
    return 1 if errors else 0


def _frame_id(path: str) -> str:
    stem = os.path.splitext(os.path.basename(path))[0]
    stem = re.sub(r"_f\d+$", "", stem)
    for suffix in _ID_SUFFIXES:
        if stem.endswith(suffix):
            return stem[: -len(suffix)]
    return stem


def _tir_files(directory: str, marker: str | None = None,
               exclude: tuple[str, ...] = ()) -> list[str]:
    """Frame files in a directory, preferring ``marker``-suffixed ones."""
    if os.path.isfile(directory):
        return [directory]
    files = sorted(glob.glob(os.path.join(directory, "*.tir")))
    files = [f for f in files
             if not any(re.search(e + r"(_f\d+)?\.tir$", f) for e in exclude)]
    if marker:
        marked = [f for f in files if re.search(marker + r"(_f\d+)?\.tir$", f)]
        if marked:
            return marked
    return files


def _parse_mode(text: str) -> tuple[str, int]:
    m = re.fullmatch(r"single|multi(\d+)?", text)
    if not m:
        raise ValueError(f"mode must be 'single' or 'multi[N]', got {text!r}")
    if text == "single":
        return "single", 1
    return "multi", int(m.group(1) or 7)


def _parse_tamb(text: str) -> float | None:
    return None if text == "auto" else float(text)


def _parse_pair(text: str, what: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"{what} must be 'lo,hi', got {text!r}")
    return float(parts[0]), float(parts[1])


def _parse_size(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"(\d+)x(\d+)", text)
    if not m:
        raise ValueError(f"size must be WxH like 320x240, got {text!r}")
    return int(m.group(2)), int(m.group(1))       # rows, cols


def _fmt(x: float) -> str:
    return f"{x:.8g}"


def _checksum(arr: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr, dtype="<f4").tobytes()).hexdigest()[:16]


def _load_temp_map(path: str) -> np.ndarray:
    rec = fileio.load_frame(path)
    if rec.kind != "temp":
        raise fileio.FrameFormatError(f"{path}: expected a temperature frame")
    return rec.values


# ---------------------------------------------------------------------------
# synth-gt


def cmd_synth_gt(args) -> int:
    h, w = _parse_size(args.size)
    lo, hi = _parse_pair(args.range, "--range")
    maps = scene_set(args.count, (h, w), seed=args.seed, kind=args.kind,
                     t_range=(lo, hi))
    os.makedirs(args.out, exist_ok=True)
    for i, m in enumerate(maps):
        fileio.save_temp(os.path.join(args.out, f"scene{i:04d}_gt.tir"), m)
    print(f"wrote {len(maps)} ground-truth maps of {h}x{w} to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    params = load_camera_params(args.camera_params)
    mode, n_frames = _parse_mode(args.mode)
    lo, hi = _parse_pair(args.tamb_range, "--tamb-range")
    files = _tir_files(args.gt)
    if not files:
        print(f"error: no frame files under {args.gt}", file=sys.stderr)
        return 1
    os.makedirs(args.out, exist_ok=True)
    t_ambs = np.random.default_rng([args.seed, 0x51]).uniform(lo, hi, len(files))

    def work(job):
        i, path = job
        gt = _load_temp_map(path)
        frame_id = _frame_id(path)
        t_amb = float(t_ambs[i])
        lr = downscale_gt(gt, args.scale)
        if mode == "single":
            frame = simulate_frame(lr, t_amb, params, frame_index=i * n_frames)
            in_names = [f"{frame_id}_in.tir"]
            fileio.save_gray(os.path.join(args.out, in_names[0]), frame)
            target = gt
        else:
            motion = default_motion(*lr.shape)
            burst = synth_burst(lr, t_amb, n_frames, motion, params,
                                seed=(args.seed * 1_000_003 + i) % 2 ** 63,
                                frame_index_base=i * n_frames)
            in_names = [f"{frame_id}_in_f{k:02d}.tir" for k in range(n_frames)]
            for name, fr in zip(in_names, burst.frames):
                fileio.save_gray(os.path.join(args.out, name), fr)
            y0 = (lr.shape[0] - motion.height) // 2
            x0 = (lr.shape[1] - motion.width) // 2
            target = gt[args.scale * y0: args.scale * (y0 + motion.height),
                        args.scale * x0: args.scale * (x0 + motion.width)]
        fileio.save_temp(os.path.join(args.out, f"{frame_id}_gt.tir"),
                         target, t_amb=t_amb)
        return (frame_id, mode, n_frames, _fmt(t_amb), ";".join(in_names),
                f"{frame_id}_gt.tir")

    rows, errors = _run_items(list(enumerate(files)), work,
                              _thread_count(args.threads), lambda j: j[1])
    rows = [r for r in rows if r is not None]
    fileio.write_csv(os.path.join(args.out, "manifest.csv"),
                     ("id", "mode", "n_frames", "t_amb", "inputs", "target"), rows)
    print(f"simulated {len(rows)}/{len(files)} scene(s) into {args.out}")
    return _report_errors(errors)


# ---------------------------------------------------------------------------
# pipeline


def _load_weight_pair(spec: str):
    paths = spec.split(",")
    if len(paths) != 2:
        raise ValueError("--weights must be '<nuc.twt>,<sr.twt>'")
    nuc_ws = fileio.load_weights(paths[0])
    sr_ws = fileio.load_weights(paths[1])
    if "sr.meta" not in sr_ws:
        raise ValueError(f"{paths[1]} is not an upscaler weight file")
    if "single.meta" in nuc_ws:
        return nuc_ws, "single", single_config_from_weights(nuc_ws), sr_ws
    if "multi.meta" in nuc_ws:
        return nuc_ws, "multi", multi_config_from_weights(nuc_ws), sr_ws
    raise ValueError(f"{paths[0]} is not a correction weight file")


def cmd_pipeline(args) -> int:
    nuc_ws, mode, nuc_cfg, sr_ws = _load_weight_pair(args.weights)
    sr_cfg = sr_config_from_weights(sr_ws)
    if args.scale is not None and args.scale != sr_cfg.scale:
        print(f"error: weights are for scale {sr_cfg.scale}, requested {args.scale}",
              file=sys.stderr)
        return 1
    if args.mode is not None and _parse_mode(args.mode)[0] != mode:
        print(f"error: weights are {mode}-frame, requested mode {args.mode}",
              file=sys.stderr)
        return 1
    t_override = _parse_tamb(args.tamb)
    files = _tir_files(args.input, marker="_in", exclude=("_gt", "_pred", "_mask"))
    if not files:
        print(f"error: no input frames under {args.input}", file=sys.stderr)
        return 1
    os.makedirs(args.out, exist_ok=True)

    if mode == "single":
        jobs = [(path, [path]) for path in files]
    else:
        groups: dict[str, list[str]] = {}
        for path in files:
            groups.setdefault(_frame_id(path), []).append(path)
        jobs = [(fid, sorted(paths)) for fid, paths in sorted(groups.items())]

    def read_gray(path: str) -> fileio.FrameRecord:
        rec = fileio.load_frame(path)
        if rec.kind != "gray":
            raise fileio.FrameFormatError(f"{path}: expected a gray-level frame")
        return rec

    def work(job):
        key, paths = job
        recs = [read_gray(p) for p in paths]
        t_amb = t_override
        if t_amb is None:
            t_amb = recs[0].t_amb
            if t_amb is None:
                raise ValueError("frame header has no ambient temperature; "
                                 "pass --tamb <value>")
        if mode == "single":
            frame = GrayFrame(recs[0].values, t_amb, gray_depth=nuc_cfg.gray_depth)
            t_lr = nuc_single(frame, None, nuc_ws, nuc_cfg)
        else:
            stack = np.stack([r.values for r in recs]).astype(np.float32)
            t_lr = nuc_multi(stack, t_amb, nuc_ws, nuc_cfg)
        out = sr_forward(t_lr, sr_ws, cfg=sr_cfg)
        frame_id = _frame_id(paths[0])
        fileio.save_temp(os.path.join(args.out, f"{frame_id}_pred.tir"),
                         out, t_amb=t_amb)
        return frame_id

    done, errors = _run_items(jobs, work, _thread_count(args.threads),
                              lambda j: j[0])
    print(f"processed {sum(d is not None for d in done)}/{len(jobs)} "
          f"item(s) into {args.out}")
    return _report_errors(errors)


# ---------------------------------------------------------------------------
# train / pretrain


def _dataset_from_args(args) -> tuple[TrainConfig, SceneDataset]:
    mode, n_frames = _parse_mode(args.mode)
    cfg = TrainConfig(scale=args.scale, nuc_mode=mode, n_frames=n_frames,
                      lr_sr=args.lr_sr, lr_nuc=args.lr_nuc,
                      batch_size=args.batch, epochs=args.epochs,
                      weight_decay=args.weight_decay, seed=args.seed,
                      val_fraction=args.val_fraction)
    maps = [_load_temp_map(p) for p in _tir_files(args.gt, marker="_gt")]
    data = SceneDataset(maps, load_camera_params(args.camera_params),
                        t_amb_range=_parse_pair(args.tamb_range, "--tamb-range"))
    return cfg, data


def _progress_printer(row) -> None:
    epoch, train_loss, val_mae, lr_sr, lr_nuc = row
    print(f"epoch {epoch:3d}  loss {train_loss:.5f}  val MAE {val_mae:.4f} °C  "
          f"lr {lr_sr:.2e}/{lr_nuc:.2e}", flush=True)


def cmd_train(args) -> int:
    cfg, data = _dataset_from_args(args)
    nuc_ws = fileio.load_weights(args.nuc_weights) if args.nuc_weights else None
    sr_ws = fileio.load_weights(args.sr_weights) if args.sr_weights else None
    progress = None if args.quiet else _progress_printer
    try:
        result = train_end_to_end(cfg, data, nuc_ws, sr_ws, progress=progress)
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    os.makedirs(args.out, exist_ok=True)
    fileio.save_weights(os.path.join(args.out, "nuc.twt"), result.nuc_weights)
    fileio.save_weights(os.path.join(args.out, "sr.twt"), result.sr_weights)
    fileio.save_weights(os.path.join(args.out, "final_nuc.twt"), result.final_nuc)
    fileio.save_weights(os.path.join(args.out, "final_sr.twt"), result.final_sr)
    fileio.save_train_log(os.path.join(args.out, "train_log.csv"), result.log)
    print(f"best val MAE {result.best_val_mae:.4f} °C over "
          f"{len(result.log.rows)} epoch(s); weights in {args.out}")
    return 0


def cmd_pretrain(args) -> int:
    cfg, data = _dataset_from_args(args)
    progress = None if args.quiet else _progress_printer
    try:
        result = pretrain_module(args.module, cfg, data, progress=progress)
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    os.makedirs(args.out, exist_ok=True)
    weights = result.nuc_weights if args.module == "nuc" else result.sr_weights
    fileio.save_weights(os.path.join(args.out, f"{args.module}.twt"), weights)
    fileio.save_train_log(os.path.join(args.out, f"{args.module}_log.csv"),
                          result.log)
    print(f"pretrained {args.module}: best val MAE {result.best_val_mae:.4f} °C; "
          f"weights in {args.out}")
    return 0


# ---------------------------------------------------------------------------
# eval


def _match_ids(pred_dir: str, gt_dir: str) -> tuple[dict, dict, list[str]]:
    preds = {_frame_id(p): p for p in _tir_files(pred_dir, marker="_pred",
                                                 exclude=("_gt", "_mask"))}
    gts = {_frame_id(p): p for p in _tir_files(gt_dir, marker="_gt",
                                               exclude=("_pred", "_mask", "_in"))}
    unmatched = sorted(set(preds) ^ set(gts))
    common = sorted(set(preds) & set(gts))
    return ({k: preds[k] for k in common}, {k: gts[k] for k in common}, unmatched)


def cmd_eval(args) -> int:
    preds, gts, unmatched = _match_ids(args.pred, args.gt)
    for frame_id in unmatched:
        print(f"error: {frame_id}: present on only one side, excluded",
              file=sys.stderr)
    if not preds:
        print("error: no matched frame pairs", file=sys.stderr)
        return 1
    masks = {}
    if args.mask:
        masks = {_frame_id(p): p for p in _tir_files(args.mask, marker="_mask")}
    t_override = _parse_tamb(args.tamb)

    def work(frame_id: str):
        pred_rec = fileio.load_frame(preds[frame_id])
        gt_rec = fileio.load_frame(gts[frame_id])
        if pred_rec.kind != "temp" or gt_rec.kind != "temp":
            raise fileio.FrameFormatError("evaluation needs temperature frames")
        t_amb = t_override
        if t_amb is None:
            t_amb = pred_rec.t_amb if pred_rec.t_amb is not None else gt_rec.t_amb
        if t_amb is None:
            raise ValueError("no ambient temperature in headers; pass --tamb")
        mask = None
        if frame_id in masks:
            mask = fileio.load_frame(masks[frame_id]).values > 0.5
        rec = frame_metrics(gt_rec.values, pred_rec.values, t_amb, mask)
        return [frame_id] + [_fmt(rec[k]) for k in EVAL_HEADER[1:]]

    ids = sorted(preds)
    rows, errors = _run_items(ids, work, _thread_count(args.threads), str)
    rows = [r for r in rows if r is not None]
    if rows:
        cols = np.array([[float(v) for v in row[1:]] for row in rows])
        mean_row = ["mean"] + [_fmt(v) for v in np.nanmean(cols, axis=0)]
        rows.append(mean_row)
        print("  ".join(f"{name}={val}" for name, val
                        in zip(EVAL_HEADER[1:], mean_row[1:])))
    fileio.write_csv(args.out, EVAL_HEADER, rows)
    code = _report_errors(errors)
    return 1 if unmatched else code


# ---------------------------------------------------------------------------
# bench


def _bench_setup(args):
    h, w = _parse_size(args.size)
    mode, n_frames = _parse_mode(args.mode)
    t_amb = 25.0
    params = CameraParams(gain_poly=(1.05, -0.002), offset_poly=(200.0, 8.0),
                          noise_sigma=2.0, seed=args.seed)
    rng = np.random.default_rng([args.seed, 0xBE])
    if args.weights:
        nuc_ws, mode_w, nuc_cfg, sr_ws = _load_weight_pair(args.weights)
        if mode_w != mode:
            raise ValueError(f"weights are {mode_w}-frame, requested {args.mode}")
        sr_cfg = sr_config_from_weights(sr_ws)
    elif mode == "single":
        nuc_cfg = SingleNucConfig()
        nuc_ws = init_single_nuc(nuc_cfg, seed=args.seed)
        sr_cfg = SrConfig(scale=args.scale)
        sr_ws = init_sr(sr_cfg, seed=args.seed + 1)
    else:
        nuc_cfg = MultiNucConfig()
        nuc_ws = init_multi_nuc(nuc_cfg, seed=args.seed)
        sr_cfg = SrConfig(scale=args.scale)
        sr_ws = init_sr(sr_cfg, seed=args.seed + 1)

    from .scenes import smooth_scene

    if mode == "single":
        scene = smooth_scene(h, w, rng)
        frame = simulate_frame(scene, t_amb, params)
        gray_in = GrayFrame(frame.values, t_amb, gray_depth=nuc_cfg.gray_depth)
        run_nuc = lambda: nuc_single(gray_in, None, nuc_ws, nuc_cfg)
    else:
        margin = 8
        scene = smooth_scene(h + 2 * margin, w + 2 * margin, rng)
        motion = MotionConfig(height=h, width=w, max_shift=margin - 1,
                              max_deg=1.0, max_px=0.25)
        burst = synth_burst(scene, t_amb, n_frames, motion, params,
                            seed=args.seed)
        stack = burst.values()
        run_nuc = lambda: nuc_multi(stack, t_amb, nuc_ws, nuc_cfg)
    t_lr = run_nuc()
    run_sr = lambda: sr_forward(t_lr, sr_ws, cfg=sr_cfg)
    run_e2e = lambda: sr_forward(run_nuc(), sr_ws, cfg=sr_cfg)
    return [("nuc", run_nuc), ("sr", run_sr), ("end_to_end", run_e2e)]


def cmd_bench(args) -> int:
    if args.reps < 3:
        print("error: --reps must be at least 3 (median of repetitions)",
              file=sys.stderr)
        return 1
    _thread_count(args.threads)   # validated; compute itself is single-worker
    stages = _bench_setup(args)
    rows = []
    for name, fn in stages:
        times, out = [], None
        for _ in range(args.reps):
            start = time.perf_counter()
            out = fn()
            times.append(time.perf_counter() - start)
        sec = float(np.median(times))
        fps = math.inf if sec == 0 else 1.0 / sec
        rows.append((name, _fmt(sec), _fmt(fps), _checksum(out)))
        print(f"{name:>11}: {sec:.4f} s/frame  ({fps:.2f} fps)  [{rows[-1][3]}]")
    if args.out:
        fileio.write_csv(args.out, ("stage", "sec_per_frame", "fps", "checksum"),
                         rows)
    return 0


# ---------------------------------------------------------------------------
# report


def cmd_report(args) -> int:
    from .report import render_report

    header, rows = fileio.read_csv(args.eval)
    if list(header) != list(EVAL_HEADER):
        print(f"error: {args.eval}: unexpected header {header}", file=sys.stderr)
        return 1
    frame_rows = [r for r in rows if r[0] != "mean"]
    preds, gts, _ = _match_ids(args.pred, args.gt)

    pairs, maes, errors = {}, {}, []
    for row in frame_rows:
        frame_id = row[0]
        if frame_id not in preds:
            errors.append((frame_id, "no frame pair for this CSV row"))
            continue
        pairs[frame_id] = (fileio.load_frame(gts[frame_id]).values,
                           fileio.load_frame(preds[frame_id]).values)
        maes[frame_id] = float(row[1])
    written = render_report(pairs, maes, args.out)
    print(f"wrote {len(written)} figure(s) to {args.out}")
    return _report_errors(errors)


# ---------------------------------------------------------------------------
# parser


def _add_threads(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads for file-level parallelism "
                        "(default: THERMOPIPE_THREADS or 1); never changes outputs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermopipe",
        description="thermal-camera simulation, correction, upscaling, and evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-gt", help="generate synthetic ground-truth maps")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--size", default="64x64", help="WxH, e.g. 64x64")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kind", choices=("smooth", "canopy", "ramp", "mixed"),
                   default="mixed")
    p.add_argument("--range", default="10,70", help="temperature range lo,hi in °C")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_gt)

    p = sub.add_parser("simulate", help="image ground truth through the camera model")
    p.add_argument("--gt", required=True, help="directory of ground-truth frames")
    p.add_argument("--camera-params", required=True)
    p.add_argument("--scale", type=int, choices=(2, 4), required=True)
    p.add_argument("--mode", default="single", help="single or multiN (e.g. multi7)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tamb-range", default="0,50")
    p.add_argument("--out", required=True)
    _add_threads(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pipeline", help="run correction + upscaling on gray frames")
    p.add_argument("--input", required=True, help="frame file or directory")
    p.add_argument("--tamb", default="auto", help="'auto' (header) or a value in °C")
    p.add_argument("--weights", required=True, help="<nuc.twt>,<sr.twt>")
    p.add_argument("--scale", type=int, choices=(2, 4), default=None)
    p.add_argument("--mode", default=None, help="validated against the weight files")
    p.add_argument("--out", required=True)
    _add_threads(p)
    p.set_defaults(func=cmd_pipeline)

    for name, fn in (("train", cmd_train), ("pretrain", cmd_pretrain)):
        p = sub.add_parser(name, help=f"{name} on simulated pairs from ground truth")
        if name == "pretrain":
            p.add_argument("--module", choices=("nuc", "sr"), required=True)
        p.add_argument("--gt", required=True)
        p.add_argument("--camera-params", required=True)
        p.add_argument("--scale", type=int, choices=(2, 4), default=2)
        p.add_argument("--mode", default="single")
        p.add_argument("--epochs", type=int, default=60)
        p.add_argument("--batch", type=int, default=8)
        p.add_argument("--lr-sr", type=float, default=1e-4)
        p.add_argument("--lr-nuc", type=float, default=4e-5)
        p.add_argument("--weight-decay", type=float, default=1e-2)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--val-fraction", type=float, default=0.2)
        p.add_argument("--tamb-range", default="0,50")
        p.add_argument("--quiet", action="store_true")
        if name == "train":
            p.add_argument("--nuc-weights", default=None,
                           help="pretrained correction weights to start from")
            p.add_argument("--sr-weights", default=None,
                           help="pretrained upscaler weights to start from")
        p.add_argument("--out", required=True)
        p.set_defaults(func=fn)

    p = sub.add_parser("eval", help="per-frame metrics against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--mask", default=None, help="optional canopy-mask directory")
    p.add_argument("--tamb", default="auto")
    p.add_argument("--out", required=True, help="metrics CSV path")
    _add_threads(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="frames-per-second of each stage")
    p.add_argument("--size", default="320x240", help="input WxH")
    p.add_argument("--scale", type=int, choices=(2, 4), default=2)
    p.add_argument("--mode", default="single")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weights", default=None, help="optional <nuc.twt>,<sr.twt>")
    p.add_argument("--out", default=None, help="optional CSV path")
    _add_threads(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="render SVG figures from an eval CSV")
    p.add_argument("--eval", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    _add_threads(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
