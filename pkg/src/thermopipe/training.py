"""Training loops for the correction and upscaling networks.

Supervision is simulation-based: each ground-truth temperature map is
downscaled, pushed through the camera model, and the pipeline is trained
to recover the original map.  The objective combines mean absolute error
in °C with a small structural dissimilarity term computed on
range-normalized maps.

Everything here is deterministic under a fixed config seed: scene order,
ambient draws, sensor noise (counter-based, keyed by sample position),
initialization, and batch shuffling.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .burst import MotionConfig, default_motion, synth_burst
from .camera import CameraParams, simulate_frame
from .errors import ContractViolationError, TrainingDivergedError
from .metrics import MetricsConfig, ssim_nchw
from .nuc import (MultiNucConfig, SingleNucConfig, init_multi_nuc,
                  init_single_nuc, multi_nuc_forward, single_nuc_forward)
from .ops import downscale_gt
from .sr import T_RANGE, SrConfig, init_sr, sr_net_forward
from .validation import check_grid2d, check_positive_int, check_scalar

__all__ = [
    "TrainConfig", "SceneDataset", "TrainLog", "TrainResult", "AdamW",
    "PlateauScheduler", "loss", "make_training_pair", "train_end_to_end",
    "pretrain_module",
]

LOG_HEADER = ("epoch", "train_loss", "val_mae", "lr_sr", "lr_nuc")

_SSIM_WEIGHT = 1e-3


@dataclass
class TrainConfig:
    """Hyper-parameters for pretraining and end-to-end fine-tuning."""

    scale: int = 2
    nuc_mode: str = "single"          # "single" | "multi"
    n_frames: int = 7                 # burst length in multi mode
    lr_sr: float = 1e-4
    lr_nuc: float = 4e-5
    plateau_factor: float = 0.5
    plateau_patience: int = 3
    plateau_threshold: float = 1e-4   # °C of validation MAE
    batch_size: int = 8
    epochs: int = 60
    weight_decay: float = 1e-2
    seed: int = 0
    val_fraction: float = 0.2
    single_cfg: SingleNucConfig | None = None
    multi_cfg: MultiNucConfig | None = None
    sr_cfg: SrConfig | None = None

    def __post_init__(self) -> None:
        if self.scale not in (2, 4):
            raise ContractViolationError(f"scale must be 2 or 4, got {self.scale}")
        if self.nuc_mode not in ("single", "multi"):
            raise ContractViolationError(f"nuc_mode must be 'single' or 'multi', got {self.nuc_mode!r}")
        check_positive_int(self.n_frames, "n_frames")
        check_positive_int(self.batch_size, "batch_size")
        check_positive_int(self.epochs, "epochs")
        for rate_name in ("lr_sr", "lr_nuc"):
            if not check_scalar(getattr(self, rate_name), rate_name) > 0.0:
                raise ContractViolationError(f"{rate_name} must be > 0")
        check_scalar(self.weight_decay, "weight_decay", lo=0.0)
        if not 0.0 < check_scalar(self.plateau_factor, "plateau_factor") < 1.0:
            raise ContractViolationError("plateau_factor must lie in (0, 1)")
        check_positive_int(self.plateau_patience, "plateau_patience")
        if not 0.0 < self.val_fraction < 1.0:
            raise ContractViolationError("val_fraction must lie in (0, 1)")
        if self.sr_cfg is not None and self.sr_cfg.scale != self.scale:
            raise ContractViolationError(
                f"sr_cfg.scale={self.sr_cfg.scale} disagrees with scale={self.scale}")

    def resolve_single(self) -> SingleNucConfig:
        return self.single_cfg if self.single_cfg is not None else SingleNucConfig()

    def resolve_multi(self) -> MultiNucConfig:
        return self.multi_cfg if self.multi_cfg is not None else MultiNucConfig()

    def resolve_sr(self) -> SrConfig:
        return self.sr_cfg if self.sr_cfg is not None else SrConfig(scale=self.scale)


@dataclass
class SceneDataset:
    """Ground-truth maps plus the camera used to image them.

    ``motion`` controls burst synthesis in multi-frame mode; when ``None``
    a default is derived from the map dimensions (output trimmed by a
    margin wide enough for small shifts and rotations).
    """

    maps: list[np.ndarray]
    camera: CameraParams
    t_amb_range: tuple[float, float] = (0.0, 50.0)
    motion: MotionConfig | None = None

    def __post_init__(self) -> None:
        if not self.maps:
            raise ContractViolationError("dataset needs at least one map")
        self.maps = [check_grid2d(m, "map") for m in self.maps]
        lo, hi = self.t_amb_range
        if not lo < hi:
            raise ContractViolationError(f"t_amb_range must be increasing, got {self.t_amb_range}")

    def resolve_motion(self, scale: int) -> MotionConfig:
        if self.motion is not None:
            return self.motion
        h, w = self.maps[0].shape
        return default_motion(h // scale, w // scale)


# ---------------------------------------------------------------------------
# objective


def _loss_nchw(pred, target, t_range: tuple[float, float] = T_RANGE):
    """MAE plus a small structural-dissimilarity penalty (graph-friendly).

    ``pred`` may be a variable; ``target`` is a plain (B,1,H,W) array.
    The structural term is computed on maps normalized by the supported
    temperature range so its signal peak is 1.
    """
    l_mae = ad.mean(ad.absolute(ad.sub(pred, target)))
    lo, hi = t_range
    inv_span = 1.0 / (hi - lo)
    pn = ad.mul(ad.sub(pred, lo), inv_span)
    tn = (np.asarray(target, dtype=np.float64) - lo) * inv_span
    mssim = ssim_nchw(pn, tn, MetricsConfig(), peak=1.0)
    dssim = ad.mul(ad.sub(1.0, mssim), 0.5)
    return ad.add(l_mae, ad.mul(dssim, _SSIM_WEIGHT))


def loss(pred_map: np.ndarray, gt_map: np.ndarray) -> float:
    """Training objective between two temperature maps, in °C-ish units.

    Zero when the maps are identical; both terms need maps at least as
    large as the structural window (11 px).
    """
    pred_map = check_grid2d(pred_map, "pred_map")
    gt_map = check_grid2d(gt_map, "gt_map")
    if pred_map.shape != gt_map.shape:
        raise ContractViolationError(
            f"shape mismatch {pred_map.shape} vs {gt_map.shape}")
    value = _loss_nchw(pred_map[None, None].astype(np.float64),
                       gt_map[None, None].astype(np.float64))
    return float(value)


# ---------------------------------------------------------------------------
# data plumbing


@dataclass
class TrainingPair:
    """One supervised sample: sensor input plus aligned ground truth."""

    gray: np.ndarray      # (h, w) uint16 for single mode, (n, h, w) for multi
    t_amb: float
    target: np.ndarray    # (H, W) float32, aligned with the reference view


def make_training_pair(gt_map: np.ndarray, scale: int, t_amb: float,
                       params: CameraParams, *, mode: str = "single",
                       n_frames: int = 7, motion: MotionConfig | None = None,
                       frame_index: int = 0, burst_seed: int | None = None) -> TrainingPair:
    """Build a supervised pair by imaging the downscaled ground truth.

    Single mode: one simulated frame of ``downscale_gt(gt_map, scale)``
    against the full map.  Multi mode: a synthetic burst whose reference
    view is a centered crop of the downscaled map; the target is the
    corresponding crop of the full-resolution map, so supervision stays
    aligned with the identity-motion reference frame.
    """
    gt_map = check_grid2d(gt_map, "gt_map")
    lr = downscale_gt(gt_map, scale)
    if mode == "single":
        frame = simulate_frame(lr, t_amb, params, frame_index=frame_index)
        return TrainingPair(gray=frame.values, t_amb=t_amb, target=gt_map)
    if mode != "multi":
        raise ContractViolationError(f"mode must be 'single' or 'multi', got {mode!r}")
    if motion is None:
        raise ContractViolationError("multi mode needs a MotionConfig")
    burst = synth_burst(lr, t_amb, n_frames, motion, params,
                        seed=burst_seed, frame_index_base=frame_index)
    y0 = (lr.shape[0] - motion.height) // 2
    x0 = (lr.shape[1] - motion.width) // 2
    target = gt_map[scale * y0: scale * (y0 + motion.height),
                    scale * x0: scale * (x0 + motion.width)]
    return TrainingPair(gray=burst.values(), t_amb=t_amb, target=np.ascontiguousarray(target))


def _build_pairs(data: SceneDataset, cfg: TrainConfig) -> list[TrainingPair]:
    """Image every map once, with disjoint noise counters per sample."""
    rng = np.random.default_rng([cfg.seed, 0x7A]);  lo, hi = data.t_amb_range
    t_ambs = rng.uniform(lo, hi, size=len(data.maps))
    motion = data.resolve_motion(cfg.scale) if cfg.nuc_mode == "multi" else None
    pairs = []
    for i, gt in enumerate(data.maps):
        pairs.append(make_training_pair(
            gt, cfg.scale, float(t_ambs[i]), data.camera, mode=cfg.nuc_mode,
            n_frames=cfg.n_frames, motion=motion,
            frame_index=i * max(1, cfg.n_frames),
            burst_seed=(cfg.seed * 1_000_003 + i) % (2 ** 63)))
    return pairs


def _split(pairs: list[TrainingPair], cfg: TrainConfig) -> tuple[list[TrainingPair], list[TrainingPair]]:
    n_val = max(1, round(cfg.val_fraction * len(pairs)))
    if n_val >= len(pairs):
        raise ContractViolationError(
            f"{len(pairs)} maps cannot support a {cfg.val_fraction:.0%} validation split")
    return pairs[:-n_val], pairs[-n_val:]


def _stack_batch(pairs: list[TrainingPair]):
    grays = np.stack([p.gray for p in pairs]).astype(np.float32)
    if grays.ndim == 3:          # per-sample 2-D inputs gain a channel axis
        grays = grays[:, None]
    t_amb = np.array([p.t_amb for p in pairs], dtype=np.float32)
    targets = np.stack([p.target for p in pairs])[:, None].astype(np.float32)
    return grays, t_amb, targets


# ---------------------------------------------------------------------------
# optimizer and scheduler


class AdamW:
    """Adam with decoupled weight decay (decay applied directly to weights).

    A step with zero gradients and zero decay leaves fresh parameters
    unchanged: both moment estimates stay at zero.
    """

    def __init__(self, params: dict[str, np.ndarray], lr: float,
                 weight_decay: float = 0.0, betas: tuple[float, float] = (0.9, 0.999),
                 eps: float = 1e-8):
        check_scalar(lr, "lr", lo=0.0)
        check_scalar(weight_decay, "weight_decay", lo=0.0)
        self.params = params
        self.lr = float(lr)
        self.weight_decay = float(weight_decay)
        self.beta1, self.beta2 = betas
        self.eps = float(eps)
        self.t = 0
        self._m = {k: np.zeros_like(v, dtype=np.float32) for k, v in params.items()}
        self._v = {k: np.zeros_like(v, dtype=np.float32) for k, v in params.items()}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name in sorted(self.params):
            g = grads.get(name)
            if g is None:
                continue
            g = g.astype(np.float32, copy=False)
            p = self.params[name]
            if self.weight_decay:
                p -= self.lr * self.weight_decay * p
            m = self._m[name]
            v = self._v[name]
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


class PlateauScheduler:
    """Halve the learning rate after ``patience`` non-improving epochs.

    An epoch improves when the tracked value drops below the best seen by
    more than ``threshold``.  Each triggered reduction resets the counter;
    the best value is remembered across reductions.
    """

    def __init__(self, patience: int = 3, factor: float = 0.5,
                 threshold: float = 1e-4):
        check_positive_int(patience, "patience")
        if not 0.0 < check_scalar(factor, "factor") < 1.0:
            raise ContractViolationError("factor must lie in (0, 1)")
        self.patience = patience
        self.factor = float(factor)
        self.threshold = float(threshold)
        self.best = math.inf
        self.stale = 0

    def step(self, value: float) -> bool:
        """Record one epoch's value; return True when a reduction fires."""
        if value < self.best - self.threshold:
            self.best = value
            self.stale = 0
            return False
        self.stale += 1
        if self.stale >= self.patience:
            self.stale = 0
            return True
        return False


# ---------------------------------------------------------------------------
# logs and results


@dataclass
class TrainLog:
    """Per-epoch record: (epoch, train_loss, val_mae, lr_sr, lr_nuc)."""

    rows: list[tuple[int, float, float, float, float]] = field(default_factory=list)

    def append(self, epoch: int, train_loss: float, val_mae: float,
               lr_sr: float, lr_nuc: float) -> None:
        if self.rows and epoch != self.rows[-1][0] + 1:
            raise ContractViolationError("log epochs must be contiguous")
        if not self.rows and epoch != 1:
            raise ContractViolationError("log must start at epoch 1")
        self.rows.append((epoch, float(train_loss), float(val_mae),
                          float(lr_sr), float(lr_nuc)))

    @property
    def val_maes(self) -> list[float]:
        return [r[2] for r in self.rows]

    @property
    def train_losses(self) -> list[float]:
        return [r[1] for r in self.rows]


@dataclass
class TrainResult:
    """Best-validation and final weights plus the epoch log."""

    nuc_weights: dict
    sr_weights: dict
    final_nuc: dict
    final_sr: dict
    log: TrainLog
    best_val_mae: float


# ---------------------------------------------------------------------------
# forward wiring


def _trainable(ws: dict) -> dict[str, np.ndarray]:
    return {k: v for k, v in ws.items() if not k.endswith(".meta")}


def _as_vars(ws: dict) -> dict:
    out = dict(ws)
    for k, v in ws.items():
        if not k.endswith(".meta"):
            out[k] = ad.Var(v)
    return out


def _collect_grads(var_ws: dict) -> dict[str, np.ndarray]:
    return {k: v.grad for k, v in var_ws.items()
            if isinstance(v, ad.Var) and v.grad is not None}


def _nuc_forward(grays, t_amb, nuc_ws, cfg: TrainConfig):
    if cfg.nuc_mode == "single":
        return single_nuc_forward(grays, t_amb, nuc_ws, cfg.resolve_single())
    return multi_nuc_forward(grays, t_amb, nuc_ws, cfg.resolve_multi())


def _pipeline_forward(grays, t_amb, nuc_ws, sr_ws, cfg: TrainConfig):
    t_lr = _nuc_forward(grays, t_amb, nuc_ws, cfg)
    return sr_net_forward(t_lr, sr_ws, cfg.resolve_sr())


def _val_mae(forward, pairs: list[TrainingPair], cfg: TrainConfig,
             batch: int = 8) -> float:
    errs = []
    for i in range(0, len(pairs), batch):
        chunk = pairs[i:i + batch]
        grays, t_amb, targets = _stack_batch(chunk)
        out = forward(grays, t_amb)
        out = out.value if isinstance(out, ad.Var) else out
        errs.extend(np.mean(np.abs(out.astype(np.float64) - targets), axis=(1, 2, 3)))
    return float(np.mean(errs))


# ---------------------------------------------------------------------------
# generic epoch loop


def _fit(train_pairs, val_pairs, cfg: TrainConfig, stores: dict[str, dict],
         optims: dict[str, AdamW], forward_train, forward_eval,
         epochs: int, progress=None) -> TrainResult:
    """Shared epoch loop: shuffle, batch, backprop, validate, schedule."""
    sched = PlateauScheduler(cfg.plateau_patience, cfg.plateau_factor,
                             cfg.plateau_threshold)
    log = TrainLog()
    best_val = math.inf
    best = {k: copy.deepcopy(v) for k, v in stores.items()}
    for epoch in range(1, epochs + 1):
        order = np.random.default_rng([cfg.seed, 0x5E, epoch]).permutation(len(train_pairs))
        total, count = 0.0, 0
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            chunk = [train_pairs[i] for i in idx]
            grays, t_amb, targets = _stack_batch(chunk)
            var_stores = {k: _as_vars(v) for k, v in stores.items()}
            out = forward_train(grays, t_amb, var_stores)
            node = _loss_nchw(out, targets)
            value = float(node.value)
            if not math.isfinite(value):
                raise TrainingDivergedError(epoch=epoch, step=start // cfg.batch_size)
            ad.backward(node)
            for k, opt in optims.items():
                opt.step(_collect_grads(var_stores[k]))
            total += value * len(chunk)
            count += len(chunk)
        val_mae = _val_mae(lambda g, t: forward_eval(g, t, stores), val_pairs, cfg)
        if not math.isfinite(val_mae):
            raise TrainingDivergedError(epoch=epoch, step=-1)
        log.append(epoch, total / max(count, 1), val_mae,
                   optims["sr"].lr if "sr" in optims else 0.0,
                   optims["nuc"].lr if "nuc" in optims else 0.0)
        if progress is not None:
            progress(log.rows[-1])
        if sched.step(val_mae):
            for opt in optims.values():
                opt.lr *= cfg.plateau_factor
        if val_mae < best_val:
            best_val = val_mae
            best = {k: copy.deepcopy(v) for k, v in stores.items()}
    return TrainResult(
        nuc_weights=best.get("nuc", {}), sr_weights=best.get("sr", {}),
        final_nuc=stores.get("nuc", {}), final_sr=stores.get("sr", {}),
        log=log, best_val_mae=best_val)


# ---------------------------------------------------------------------------
# public entry points


def _init_nuc(cfg: TrainConfig) -> dict:
    if cfg.nuc_mode == "single":
        return init_single_nuc(cfg.resolve_single(), seed=cfg.seed + 101)
    return init_multi_nuc(cfg.resolve_multi(), seed=cfg.seed + 101)


def train_end_to_end(cfg: TrainConfig, data: SceneDataset,
                     nuc_weights: dict | None = None,
                     sr_weights: dict | None = None,
                     progress=None) -> TrainResult:
    """Fine-tune the full pipeline (correction then upscaling) jointly.

    Starts from the given weight stores (typically pretrained) or fresh
    initializations.  Returns best-validation weights, final weights, and
    the per-epoch log; raises :class:`TrainingDivergedError` on non-finite
    loss.  Identical configs and data give identical results.
    """
    stores = {
        "nuc": copy.deepcopy(nuc_weights) if nuc_weights is not None else _init_nuc(cfg),
        "sr": copy.deepcopy(sr_weights) if sr_weights is not None else init_sr(cfg.resolve_sr(), seed=cfg.seed + 202),
    }
    pairs = _build_pairs(data, cfg)
    train_pairs, val_pairs = _split(pairs, cfg)
    optims = {
        "nuc": AdamW(_trainable(stores["nuc"]), cfg.lr_nuc, cfg.weight_decay),
        "sr": AdamW(_trainable(stores["sr"]), cfg.lr_sr, cfg.weight_decay),
    }

    def fwd_train(grays, t_amb, var_stores):
        return _pipeline_forward(grays, t_amb, var_stores["nuc"], var_stores["sr"], cfg)

    def fwd_eval(grays, t_amb, stores_):
        return _pipeline_forward(grays, t_amb, stores_["nuc"], stores_["sr"], cfg)

    return _fit(train_pairs, val_pairs, cfg, stores, optims,
                fwd_train, fwd_eval, cfg.epochs, progress)


def pretrain_module(which: str, cfg: TrainConfig, data: SceneDataset,
                    epochs: int | None = None, progress=None) -> TrainResult:
    """Train one stage in isolation.

    ``which`` is ``"nuc"`` (gray in, low-resolution temperature out, MAE
    loss via the combined objective's MAE-dominant form) or ``"sr"``
    (clean low-resolution temperature in, full map out).  Returns the same
    result structure as end-to-end training with the untouched store empty.
    """
    if which not in ("nuc", "sr"):
        raise ContractViolationError(f"which must be 'nuc' or 'sr', got {which!r}")
    epochs = cfg.epochs if epochs is None else check_positive_int(epochs, "epochs")
    pairs = _build_pairs(data, cfg)

    if which == "nuc":
        # Retarget supervision to the reference view at low resolution.
        lr_pairs = []
        motion = data.resolve_motion(cfg.scale) if cfg.nuc_mode == "multi" else None
        for pair, gt in zip(pairs, data.maps):
            lr = downscale_gt(gt, cfg.scale)
            if cfg.nuc_mode == "multi":
                y0 = (lr.shape[0] - motion.height) // 2
                x0 = (lr.shape[1] - motion.width) // 2
                lr = lr[y0:y0 + motion.height, x0:x0 + motion.width]
            lr_pairs.append(TrainingPair(pair.gray, pair.t_amb, np.ascontiguousarray(lr)))
        train_pairs, val_pairs = _split(lr_pairs, cfg)
        stores = {"nuc": _init_nuc(cfg)}
        optims = {"nuc": AdamW(_trainable(stores["nuc"]), cfg.lr_nuc, cfg.weight_decay)}

        def fwd_train(grays, t_amb, var_stores):
            return _nuc_forward(grays, t_amb, var_stores["nuc"], cfg)

        def fwd_eval(grays, t_amb, stores_):
            return _nuc_forward(grays, t_amb, stores_["nuc"], cfg)
    else:
        # Clean low-resolution temperature in; the camera plays no part.
        sr_pairs = [TrainingPair(downscale_gt(gt, cfg.scale).astype(np.float32),
                                 p.t_amb, gt) for p, gt in zip(pairs, data.maps)]
        train_pairs, val_pairs = _split(sr_pairs, cfg)
        stores = {"sr": init_sr(cfg.resolve_sr(), seed=cfg.seed + 202)}
        optims = {"sr": AdamW(_trainable(stores["sr"]), cfg.lr_sr, cfg.weight_decay)}

        def fwd_train(grays, t_amb, var_stores):
            return sr_net_forward(grays, var_stores["sr"], cfg.resolve_sr())

        def fwd_eval(grays, t_amb, stores_):
            return sr_net_forward(grays, stores_["sr"], cfg.resolve_sr())

    return _fit(train_pairs, val_pairs, cfg, stores, optims,
                fwd_train, fwd_eval, epochs, progress)
