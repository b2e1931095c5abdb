"""Batch command-line interface.

Subcommands cover the whole experiment loop: generate synthetic clips,
pre-train the SR block, fit a video, evaluate and ablate, and run the
matched-budget baseline/SR comparison.  Every artifact lands under the
output directory; inputs are never modified, and rerunning a subcommand
with the same config and seed rewrites byte-identical files.

Only the standard library is imported at module level: --threads must
pin the BLAS thread count in the environment before numpy first loads,
so the heavy imports live inside the command handlers.
"""

import argparse
import os
import sys
from pathlib import Path

_THREAD_VARS = (
    "OPENBLAS_NUM_THREADS",
    "OMP_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)

_DEGRADE_TAG = 0xDE6


def _set_thread_env(n):
    # 0 requests strict determinism, which on the BLAS side means 1 thread
    os.environ.update({var: "1" if n == 0 else str(n) for var in _THREAD_VARS})


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _int_list(text):
    try:
        return [int(p.strip()) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated ints, got {text!r}")


def _load_config(args):
    from .config import ExperimentConfig, parse_config
    from .errors import ConfigError

    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file {path} does not exist")
        cfg = parse_config(path.read_text())
    else:
        cfg = ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.with_value("run.seed", args.seed)
    return cfg


def _out_dir(args, cfg):
    out = Path(args.out) if args.out else Path(cfg["paths.out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_clip(path_text, what):
    from .errors import ConfigError
    from .media import VideoClip, load_frame, load_video

    if not path_text:
        raise ConfigError(f"paths.{what} is not set")
    path = Path(path_text)
    if path.is_file():
        return load_video(path)
    if path.is_dir():
        frames = sorted(path.glob("*.png"))
        if not frames:
            raise ConfigError(f"no PNG frames in {path}")
        return VideoClip(load_frame(f) for f in frames)
    raise ConfigError(f"paths.{what} {path} does not exist")


def _load_corpus(path_text):
    from .errors import ConfigError
    from .media import load_frame, load_video

    if not path_text:
        raise ConfigError("paths.corpus_dir is not set")
    path = Path(path_text)
    if not path.is_dir():
        raise ConfigError(f"paths.corpus_dir {path} is not a directory")
    frames = [load_frame(f) for f in sorted(path.glob("*.png"))]
    for f in sorted(path.glob("*.nvsr")):
        frames.extend(load_video(f))
    if not frames:
        raise ConfigError(f"no corpus images in {path}")
    return frames


def _load_srb_artifact(args, out):
    from .errors import ConfigError
    from .models import load_srb

    path = Path(args.srb) if args.srb else out / "srb.nvck"
    if not path.is_file():
        raise ConfigError(
            f"pre-trained SRB {path} not found; run pretrain-sr first or pass --srb"
        )
    return load_srb(path)


def _write_record(out, tag, cfg, record):
    (out / f"{tag}.config.txt").write_text(cfg.serialize())
    (out / f"{tag}.loss.csv").write_text(record.to_loss_csv())
    (out / f"{tag}.evals.csv").write_text(record.to_eval_csv())


def _cmd_make_synthetic(args):
    from .media import save_video
    from .synth import make_synthetic_video

    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    clip = make_synthetic_video(
        args.kind, args.frames, args.height, args.width, cfg["run.seed"]
    )
    path = out / f"{args.kind}.nvsr"
    save_video(clip, path)
    print(f"wrote {path} ({len(clip)} frames, {clip.height}x{clip.width})")


def _cmd_pretrain_sr(args):
    from .models import save_srb
    from .train import pretrain_sr

    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    corpus = _load_corpus(cfg["paths.corpus_dir"])
    crop = cfg["pretrain.crop"]
    srb = pretrain_sr(
        corpus,
        cfg.model_config().srb,
        epochs=cfg["pretrain.epochs"],
        seed=cfg["run.seed"],
        ranges=cfg.ranges(),
        crop_hw=(crop, crop),
        lr=cfg["pretrain.lr"],
    )
    path = out / "srb.nvck"
    save_srb(srb, path)
    print(f"wrote {path} ({len(corpus)} corpus images, {cfg['pretrain.epochs']} epochs)")


def _cmd_fit(args):
    from .train import fit_video

    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    clip = _load_clip(cfg["paths.video_dir"], "video_dir")
    model_cfg = cfg.model_config()
    srb = _load_srb_artifact(args, out) if model_cfg.is_sr else None
    tag = model_cfg.variant
    model, record = fit_video(
        clip,
        model_cfg,
        cfg.schedule(),
        pretrained_srb=srb,
        checkpoint_path=out / f"{tag}.nvck",
    )
    _write_record(out, tag, cfg, record)
    print(
        f"{tag}: final psnr {record.final_psnr_db:.2f} dB "
        f"after {len(record.epoch_losses)} epochs -> {out / f'{tag}.nvck'}"
    )


def _cmd_eval(args):
    from .metrics import write_report_csv
    from .models import load_model
    from .train import evaluate_video

    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    model, _ = load_model(args.checkpoint)
    clip = _load_clip(cfg["paths.video_dir"], "video_dir")
    report = evaluate_video(model, clip)
    path = out / "eval.csv"
    write_report_csv(report, path)
    print(f"mean psnr {report.mean_psnr:.2f} dB, ms-ssim {report.mean_ms_ssim:.4f} -> {path}")


def _cmd_ablate(args):
    from .train import ablate_finetune_start, ablation_table_csv

    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    clip = _load_clip(cfg["paths.video_dir"], "video_dir")
    srb = _load_srb_artifact(args, out)
    total = cfg["schedule.total_epochs"]
    starts = args.starts if args.starts else [0, total // 6, total // 2, total]
    seeds = args.seeds if args.seeds else [cfg["run.seed"]]
    rows = ablate_finetune_start(
        clip,
        cfg.model_config(),
        starts,
        total,
        seeds,
        srb,
        base_lr=cfg["schedule.base_lr"],
        warmup_frac=cfg["schedule.warmup_frac"],
        eval_every=cfg["schedule.eval_every"],
    )
    text = ablation_table_csv(rows)
    (out / "ablation.csv").write_text(text)
    print(text, end="")


def _cmd_degrade(args):
    import numpy as np

    from .degrade import degrade, sample_params
    from .media import VideoClip, save_video

    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    clip = _load_clip(cfg["paths.video_dir"], "video_dir")
    rng = np.random.default_rng([cfg["run.seed"], _DEGRADE_TAG])
    frames = [degrade(f, sample_params(rng, cfg.ranges())) for f in clip]
    path = out / "degraded.nvsr"
    save_video(VideoClip(frames), path)
    print(f"wrote {path} ({len(frames)} frames)")


_FAMILY = {
    "nerv": ("nerv", "sr-nerv"),
    "sr-nerv": ("nerv", "sr-nerv"),
    "hnerv": ("hnerv", "sr-hnerv"),
    "sr-hnerv": ("hnerv", "sr-hnerv"),
}


def _cmd_compare(args):
    from dataclasses import replace

    from .models import solve_width_for_budget, total_param_count
    from .train import assert_matched_budget, fit_video

    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    clip = _load_clip(cfg["paths.video_dir"], "video_dir")
    template = cfg.model_config()
    base_variant, sr_variant = _FAMILY[template.variant]
    base = replace(template, variant=base_variant, strides=None)
    budget = args.budget if args.budget else total_param_count(base)
    base = replace(base, base_width=solve_width_for_budget(base, budget))
    sr = replace(template, variant=sr_variant, strides=None)
    sr = replace(sr, base_width=solve_width_for_budget(sr, budget))
    assert_matched_budget(base, sr)
    srb = _load_srb_artifact(args, out)
    schedule = cfg.schedule()

    lines = ["variant,params,psnr_db,ms_ssim"]
    for model_cfg in (base, sr):
        tag = model_cfg.variant
        _, record = fit_video(
            clip,
            model_cfg,
            schedule,
            pretrained_srb=srb if model_cfg.is_sr else None,
            checkpoint_path=out / f"{tag}.nvck",
        )
        _write_record(out, tag, cfg, record)
        _, psnr_db, ssim = record.evals[-1]
        lines.append(f"{tag},{total_param_count(model_cfg)},{psnr_db:.6f},{ssim:.6f}")
    table = "\n".join(lines) + "\n"
    (out / "compare.csv").write_text(table)
    print(table, end="")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="nvsr", description="implicit video decoders with a learned 2x upscaler"
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config file")
    common.add_argument("--out", help="output directory (default: paths.out_dir)")
    common.add_argument("--seed", type=int, help="override run.seed")
    common.add_argument(
        "--threads",
        type=_nonneg_int,
        default=0,
        help="BLAS threads; 0 = strict single-threaded determinism",
    )
    srb_flag = argparse.ArgumentParser(add_help=False)
    srb_flag.add_argument("--srb", help="pre-trained SRB checkpoint (default: OUT/srb.nvck)")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-synthetic", parents=[common], help="generate a synthetic clip")
    p.add_argument("--kind", required=True, choices=("moving-checker", "textured-noise", "gradient-drift"))
    p.add_argument("--frames", type=int, default=8)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--width", type=int, default=128)
    p.set_defaults(func=_cmd_make_synthetic)

    p = sub.add_parser("pretrain-sr", parents=[common], help="pre-train the SR block")
    p.set_defaults(func=_cmd_pretrain_sr)

    p = sub.add_parser("fit", parents=[common, srb_flag], help="overfit one video")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint on a clip")
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("ablate", parents=[common, srb_flag], help="sweep SRB fine-tuning starts")
    p.add_argument("--starts", type=_int_list, help="comma-separated start epochs")
    p.add_argument("--seeds", type=_int_list, help="comma-separated seeds")
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("degrade", parents=[common], help="apply sampled degradations to a clip")
    p.set_defaults(func=_cmd_degrade)

    p = sub.add_parser("compare", parents=[common, srb_flag], help="matched-budget baseline vs SR")
    p.add_argument("--budget", type=int, help="parameter budget (default: baseline count)")
    p.set_defaults(func=_cmd_compare)

    return parser


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--threads", type=_nonneg_int, default=0)
    known, _ = pre.parse_known_args(argv)
    _set_thread_env(known.threads)

    args = _build_parser().parse_args(argv)
    from .errors import NvsrError

    try:
        args.func(args)
    except NvsrError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
