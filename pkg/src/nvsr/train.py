"""Training orchestration: SR pre-training, per-video fitting, ablation.

Video fitting overfits one model to one clip.  The SRB starts from
pre-trained weights, stays frozen until a scheduled epoch, and fine-tunes
from there; all randomness derives from (seed, epoch) so a resumed run
replays the exact trajectory of an uninterrupted one.
"""

import hashlib
import time
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import tensor as tz
from .degrade import DegradationRanges, degrade, sample_params
from .errors import ConfigError, ContractError
from .media import Frame, VideoClip
from .metrics import compare_clips
from .models import (
    SRModel,
    VideoModel,
    load_model,
    reconstruct_frame,
    save_model,
    total_param_count,
)
from .optim import Adam, ParamGroup, lr_at
from .tensor import Tensor

# distinct stream tags keep per-epoch rng draws independent of history
_SHUFFLE_TAG = 0xF17
_PRETRAIN_TAG = 0x5B


@dataclass(frozen=True)
class TrainSchedule:
    """Epoch budget plus the SRB freeze point.

    srb_finetune_start = 0 trains the SRB from the beginning; a value of
    total_epochs keeps it frozen for the whole run.  One frame per
    optimization step.
    """

    total_epochs: int
    srb_finetune_start: int = 0
    seed: int = 0
    base_lr: float = 5e-4
    warmup_frac: float = 0.05
    eval_every: int = None

    def __post_init__(self):
        if self.total_epochs < 1:
            raise ConfigError(f"total_epochs must be >= 1, got {self.total_epochs}")
        if not 0 <= self.srb_finetune_start <= self.total_epochs:
            raise ConfigError(
                f"srb_finetune_start {self.srb_finetune_start} outside "
                f"[0, {self.total_epochs}]"
            )
        if self.base_lr <= 0:
            raise ConfigError(f"base_lr must be positive, got {self.base_lr}")
        if not 0 <= self.warmup_frac < 1:
            raise ConfigError(f"warmup_frac must lie in [0, 1), got {self.warmup_frac}")
        if self.eval_every is None:
            object.__setattr__(self, "eval_every", max(1, self.total_epochs // 10))
        if self.eval_every < 1:
            raise ConfigError(f"eval_every must be >= 1, got {self.eval_every}")

    def to_text(self):
        pairs = {
            "base_lr": repr(self.base_lr),
            "eval_every": self.eval_every,
            "seed": self.seed,
            "srb_finetune_start": self.srb_finetune_start,
            "total_epochs": self.total_epochs,
            "warmup_frac": repr(self.warmup_frac),
        }
        return "".join(f"{k}={pairs[k]}\n" for k in sorted(pairs))


def srb_trainable_at(epoch, schedule):
    """Whether the SRB group updates at this epoch."""
    if not 0 <= epoch < schedule.total_epochs:
        raise ContractError(f"epoch {epoch} outside [0, {schedule.total_epochs})")
    return epoch >= schedule.srb_finetune_start


def srb_checksum(model):
    """CRC over the SRB parameter bytes, for freeze verification."""
    if model.srb is None:
        raise ContractError(f"variant {model.config.variant} has no SRB")
    crc = 0
    for name, p in sorted(model.srb.named_params()):
        crc = zlib.crc32(name.encode(), crc)
        crc = zlib.crc32(np.ascontiguousarray(p.data).tobytes(), crc)
    return crc


def assert_matched_budget(baseline_config, sr_config, tolerance=0.02):
    """Comparison fairness gate: totals within 2% of each other."""
    a = total_param_count(baseline_config)
    b = total_param_count(sr_config)
    dev = abs(a - b) / max(a, b)
    if dev > tolerance:
        raise ConfigError(
            f"param counts {a} vs {b} differ by {dev:.1%}, exceeding "
            f"the {tolerance:.0%} matched-budget tolerance"
        )


@dataclass
class ExperimentRecord:
    """Append-only log of one fitting run."""

    config_hash: str
    seed: int
    epoch_losses: list = field(default_factory=list)
    evals: list = field(default_factory=list)  # (epoch, psnr_db, ms_ssim)
    wall_clock_s: float = 0.0
    checkpoint_path: str = None
    start_epoch: int = 0

    @property
    def diverged(self):
        """The exclusion rule for aggregate tables: loss ended above start."""
        return bool(self.epoch_losses) and self.epoch_losses[-1] > self.epoch_losses[0]

    @property
    def final_psnr_db(self):
        if not self.evals:
            raise ContractError("run recorded no evaluations")
        return self.evals[-1][1]

    def to_loss_csv(self):
        lines = ["epoch,loss"]
        for i, loss in enumerate(self.epoch_losses):
            lines.append(f"{self.start_epoch + i},{loss:.12f}")
        return "\n".join(lines) + "\n"

    def to_eval_csv(self):
        lines = ["epoch,psnr_db,ms_ssim"]
        for epoch, p, s in self.evals:
            lines.append(f"{epoch},{p:.12f},{s:.12f}")
        return "\n".join(lines) + "\n"


def _run_hash(config, schedule):
    text = config.to_text() + schedule.to_text()
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def _forward_kwargs(model, clip, k):
    if model.encoder is not None:
        return {"frame": clip.frames[k]}
    return {"t": clip.time_index(k)}


def evaluate_video(model, clip):
    """Reconstruct every frame and compare against the clip."""
    h, w = model.config.output_hw
    if (clip.height, clip.width) != (h, w):
        raise ConfigError(
            f"clip is {clip.height}x{clip.width}, model expects {h}x{w}"
        )
    recon = VideoClip(
        [reconstruct_frame(model, **_forward_kwargs(model, clip, k)) for k in range(len(clip))]
    )
    return compare_clips(recon, clip)


def _optimizer_extras(model, opt):
    out = {}
    for name, p in model.named_params():
        m, v, t = opt.moments(p)
        out[f"optim.{name}.m"] = m
        out[f"optim.{name}.v"] = v
        out[f"optim.{name}.t"] = np.float32(t).reshape(())
    return out


def fit_video(
    clip,
    config,
    schedule,
    pretrained_srb=None,
    checkpoint_path=None,
    resume_from=None,
    stop_after=None,
):
    """Overfit one model to one clip under the freeze schedule.

    SR variants must receive a pre-trained SRB (resumed runs carry theirs
    inside the checkpoint instead).  Returns (model, ExperimentRecord);
    when checkpoint_path is given the final weights and optimizer state
    land there, ready for resume_from.  stop_after pauses the run after
    that many epochs of the same schedule; resuming from its checkpoint
    replays the exact trajectory of an uninterrupted run.
    """
    h, w = config.output_hw
    if (clip.height, clip.width) != (h, w):
        raise ConfigError(f"clip is {clip.height}x{clip.width}, config expects {h}x{w}")
    if not config.is_sr and pretrained_srb is not None:
        raise ConfigError(f"variant {config.variant} does not take a pre-trained SRB")
    if stop_after is None:
        stop_after = schedule.total_epochs
    if not 1 <= stop_after <= schedule.total_epochs:
        raise ConfigError(
            f"stop_after {stop_after} outside [1, {schedule.total_epochs}]"
        )

    start_epoch = 0
    saved_state = None
    if resume_from is not None:
        loaded, extra = load_model(resume_from)
        if loaded.config != config:
            raise ConfigError(f"checkpoint {resume_from} was written for another config")
        if "meta.epochs_done" not in extra:
            raise ConfigError(f"{resume_from} carries no training state to resume")
        model = loaded
        start_epoch = int(np.ravel(extra["meta.epochs_done"])[0])
        if not 0 <= start_epoch < stop_after:
            raise ConfigError(
                f"checkpoint finished {start_epoch} epochs, nothing left "
                f"before epoch {stop_after}"
            )
        saved_state = extra
    else:
        if config.is_sr and pretrained_srb is None:
            raise ConfigError(f"variant {config.variant} requires a pre-trained SRB")
        model = VideoModel(config, seed=schedule.seed)
        if config.is_sr:
            model.load_srb_params(pretrained_srb)

    groups = []
    for name, params in model.param_groups().items():
        trainable = True
        if name == "srb":
            trainable = srb_trainable_at(start_epoch, schedule)
        groups.append(ParamGroup(name, params, trainable=trainable))
    opt = Adam(groups, lr=schedule.base_lr)
    if saved_state is not None:
        for name, p in model.named_params():
            key = f"optim.{name}"
            if f"{key}.m" not in saved_state:
                raise ConfigError(f"{resume_from} is missing optimizer state for {name}")
            opt.load_moments(
                p,
                saved_state[f"{key}.m"],
                saved_state[f"{key}.v"],
                int(np.ravel(saved_state[f"{key}.t"])[0]),
            )

    record = ExperimentRecord(
        config_hash=_run_hash(config, schedule), seed=schedule.seed, start_epoch=start_epoch
    )
    frozen_crc = None
    if config.is_sr and not srb_trainable_at(start_epoch, schedule):
        frozen_crc = srb_checksum(model)

    t0 = time.perf_counter()
    for epoch in range(start_epoch, stop_after):
        if config.is_sr:
            want = srb_trainable_at(epoch, schedule)
            if frozen_crc is not None and srb_checksum(model) != frozen_crc:
                raise ContractError("SRB parameters changed while frozen")
            if want and not opt.group("srb").trainable:
                opt.set_trainable("srb", True)
                frozen_crc = None
        lr = lr_at(epoch, schedule)
        order = np.random.default_rng([schedule.seed, epoch, _SHUFFLE_TAG]).permutation(len(clip))
        total = 0.0
        for k in order:
            out = model.forward(**_forward_kwargs(model, clip, int(k)))
            loss = tz.l2_loss(out, Tensor(clip.frames[int(k)].data[None]))
            loss.backward()
            opt.step(lr=lr)
            total += float(loss.data)
        record.epoch_losses.append(total / len(clip))
        if (epoch + 1) % schedule.eval_every == 0 or epoch == stop_after - 1:
            report = evaluate_video(model, clip)
            record.evals.append((epoch, report.mean_psnr, report.mean_ms_ssim))
    if config.is_sr and frozen_crc is not None and srb_checksum(model) != frozen_crc:
        raise ContractError("SRB parameters changed while frozen")
    record.wall_clock_s = time.perf_counter() - t0

    if checkpoint_path is not None:
        extras = _optimizer_extras(model, opt)
        extras["meta.epochs_done"] = np.float32(stop_after).reshape(())
        save_model(model, checkpoint_path, extra=extras)
        record.checkpoint_path = str(checkpoint_path)
    return model, record


def _area_downsample2x(hr):
    """2x2 box average; the pre-training LR source."""
    return 0.25 * (hr[:, 0::2, 0::2] + hr[:, 0::2, 1::2] + hr[:, 1::2, 0::2] + hr[:, 1::2, 1::2])


def sample_sr_pair(rng, corpus, crop_hw, ranges):
    """One (degraded LR Frame, HR Frame) training pair.

    Draw order is fixed: frame index, crop offsets, then degradation
    parameters, so trajectories are reproducible from the rng alone.
    """
    ch, cw = crop_hw
    idx = int(rng.integers(len(corpus)))
    frame = corpus[idx]
    if frame.height < ch or frame.width < cw:
        raise ConfigError(
            f"corpus frame {frame.height}x{frame.width} smaller than crop {ch}x{cw}"
        )
    oy = int(rng.integers(frame.height - ch + 1))
    ox = int(rng.integers(frame.width - cw + 1))
    hr = frame.data[:, oy : oy + ch, ox : ox + cw]
    lr = Frame(_area_downsample2x(hr.astype(np.float64)).astype(np.float32))
    return degrade(lr, sample_params(rng, ranges)), Frame(hr)


def pretrain_sr(
    corpus,
    srb_config,
    epochs,
    seed,
    ranges=None,
    crop_hw=(64, 64),
    lr=1e-4,
    on_step=None,
):
    """Train an SRB to undo 2x downsampling plus blur/color degradation.

    One epoch is len(corpus) steps; each step crops a random HR patch,
    degrades its downsampled copy, and takes an L1 Adam step.  on_step,
    when given, receives every step loss.
    """
    if not corpus:
        raise ConfigError("SR pre-training corpus is empty")
    ch, cw = crop_hw
    if ch % 2 or cw % 2 or ch < 8 or cw < 8:
        raise ConfigError(f"crop_hw must be even and >= 8, got {crop_hw}")
    if epochs < 1:
        raise ConfigError(f"epochs must be >= 1, got {epochs}")
    if ranges is None:
        ranges = DegradationRanges()
    rng = np.random.default_rng([int(seed), _PRETRAIN_TAG])
    srb = SRModel(srb_config, np.random.default_rng([int(seed), 0x5EED]))
    params = [p for _, p in srb.named_params()]
    opt = Adam([ParamGroup("srb", params)], lr=lr)
    for _ in range(epochs):
        for _ in range(len(corpus)):
            lr_frame, hr_frame = sample_sr_pair(rng, corpus, crop_hw, ranges)
            out = srb(Tensor(lr_frame.data[None]))
            loss = tz.l1_loss(out, Tensor(hr_frame.data[None]))
            loss.backward()
            opt.step()
            if on_step is not None:
                on_step(float(loss.data))
    return srb


def ablate_finetune_start(clip, config, starts, total_epochs, seeds, pretrained_srb, **schedule_kw):
    """Sweep the SRB fine-tuning start epoch.

    Each seed shares its model init across all starts (same seed, same
    construction), isolating the schedule as the only moving part.
    Returns one row per start: mean final PSNR over converged runs plus
    the divergence exclusions, already ordered like the sweep.
    """
    if not config.is_sr:
        raise ConfigError(f"ablation needs an SR variant, got {config.variant}")
    if not starts:
        raise ConfigError("no fine-tuning starts given")
    if not seeds:
        raise ConfigError("at least one seed required")
    for s in starts:
        if not 0 <= s <= total_epochs:
            raise ConfigError(f"start {s} outside [0, {total_epochs}]")
    rows = []
    for start in starts:
        finals = []
        excluded = 0
        for seed in seeds:
            schedule = TrainSchedule(
                total_epochs=total_epochs,
                srb_finetune_start=start,
                seed=seed,
                **schedule_kw,
            )
            model, record = fit_video(clip, config, schedule, pretrained_srb=pretrained_srb)
            if record.diverged:
                excluded += 1
                continue
            finals.append(record.final_psnr_db)
        rows.append(
            {
                "start": start,
                "mean_psnr_db": float(np.mean(finals)) if finals else float("nan"),
                "runs": len(seeds),
                "excluded": excluded,
            }
        )
    return rows


def ablation_table_csv(rows):
    """Wide CSV: starts across the header, PSNR and exclusions as rows."""
    header = "start," + ",".join(str(r["start"]) for r in rows)
    psnr = "mean_psnr_db," + ",".join(f"{r['mean_psnr_db']:.6f}" for r in rows)
    excl = "excluded," + ",".join(str(r["excluded"]) for r in rows)
    return header + "\n" + psnr + "\n" + excl + "\n"
