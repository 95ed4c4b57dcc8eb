"""Command line interface.

Subcommands: ``encode``, ``decode``, ``train``, ``eval``, ``bench``.

Exit codes: 0 on success, 2 on usage or input errors, 3 on a corrupt or
incompatible container.
"""

import argparse
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

_EXIT_OK = 0
_EXIT_USAGE = 2
_EXIT_CORRUPT = 3


def _load_config(path):
    from stereocodec.config import CodecConfig

    return CodecConfig.from_file(path) if path else CodecConfig()


def _build_codec(config, checkpoint, coder_name, seed):
    from stereocodec import coders
    from stereocodec.codec import StereoVideoCodec

    coder_id = coders.CODER_IDS[coder_name]
    if checkpoint:
        return StereoVideoCodec.load_checkpoint(checkpoint, coder_id)
    return StereoVideoCodec.seeded(config, coder_id, seed)


def _ablation_mode(args) -> str | None:
    if getattr(args, "no_attention", False):
        return "no_attention"
    if getattr(args, "no_shift", False):
        return "no_shift"
    return None


def cmd_encode(args) -> int:
    from stereocodec import data

    try:
        config = _load_config(args.config)
        clip = data.load_frames(args.input)
        codec = _build_codec(config, args.checkpoint, args.coder, args.seed)
    except (ValueError, OSError) as exc:
        print(f"encode: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    codec.frame_codec.ablation_mode = _ablation_mode(args)
    result = codec.encode_file(clip, args.output, gop_size=args.gop)
    total_bits = 8 * result["container_bytes"]
    frames = clip["L"].shape[0]
    h, w = clip["L"].shape[-2:]
    print(f"encoded {frames} frame pairs ({w}x{h}) to {args.output}: "
          f"{result['container_bytes']} bytes, "
          f"{total_bits / (2.0 * w * h * frames):.4f} bpp")
    return _EXIT_OK


def cmd_decode(args) -> int:
    from stereocodec import coders, data
    from stereocodec.codec import StereoVideoCodec
    from stereocodec.config import CodecConfig
    from stereocodec.container import ContainerError, read_container

    try:
        header, records = read_container(args.input)
    except OSError as exc:
        print(f"decode: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    except ContainerError as exc:
        print(f"decode: {exc}", file=sys.stderr)
        return _EXIT_CORRUPT
    try:
        if args.checkpoint:
            codec = StereoVideoCodec.load_checkpoint(args.checkpoint, header.coder_id)
        elif header.weights_source != 0:
            raise ContainerError("container needs an external checkpoint; "
                                 "pass --checkpoint")
        else:
            config = CodecConfig.from_text(header.config_text)
            codec = StereoVideoCodec.seeded(config, header.coder_id, args.seed)
        codec.check_compatible(header)
        decoded = codec.decode_records(header, records)
    except ContainerError as exc:
        print(f"decode: {exc}", file=sys.stderr)
        return _EXIT_CORRUPT
    except (ValueError, OSError) as exc:
        print(f"decode: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    data.save_frames(args.output, decoded)
    print(f"decoded {header.frame_count} frame pairs to {args.output}")
    return _EXIT_OK


def _frame_data_source(root: Path):
    from stereocodec import data
    from stereocodec.pipeline import VIEWS

    import torch

    clip_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not clip_dirs:
        clips = [data.load_frames(root)]
    else:
        clips = [data.load_frames(d) for d in clip_dirs]

    def source(batch_size, rng):
        picks = rng.integers(0, len(clips), size=batch_size)
        frames = min(c[VIEWS[0]].shape[0] for c in clips)
        batch = {v: [] for v in VIEWS}
        for i in picks:
            start = rng.integers(0, clips[i][VIEWS[0]].shape[0] - frames + 1)
            for v in VIEWS:
                batch[v].append(clips[i][v][start: start + frames])
        return {v: torch.stack(batch[v]) for v in VIEWS}

    return source


def _synthetic_source(height, width, frames):
    from stereocodec import data

    params = data.SceneParams(height=height, width=width, frames=frames)

    def source(batch_size, rng):
        return data.clip_batch(rng, batch_size, params)

    return source


def cmd_train(args) -> int:
    from stereocodec import train as training
    from stereocodec.codec import StereoVideoCodec

    try:
        config = _load_config(args.config)
        if args.init:
            codec = StereoVideoCodec.load_checkpoint(args.init)
        else:
            codec = StereoVideoCodec.seeded(config, seed=args.seed)
        if args.data == "synthetic":
            source = _synthetic_source(64, 64, 3)
        else:
            source = _frame_data_source(Path(args.data))
    except (ValueError, OSError) as exc:
        print(f"train: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    schedule = training.default_stage_schedule()
    stage_cfg = schedule[args.stage]
    if args.iterations is not None:
        stage_cfg.iterations = args.iterations
    if args.lr is not None:
        stage_cfg.lr = args.lr
    if args.batch_size is not None:
        stage_cfg.batch_size = args.batch_size

    def log(iteration, loss):
        if iteration % max(1, stage_cfg.iterations // 20) == 0:
            print(f"stage {args.stage} iter {iteration}: loss {loss:.4f}")

    try:
        losses = training.run_stage(codec, source, stage_cfg, args.lam,
                                    seed=args.seed, callback=log)
    except training.TrainingDiverged as exc:
        print(f"train: {exc}", file=sys.stderr)
        return 1
    codec.save_checkpoint(args.out)
    print(f"stage {args.stage} done: first loss {losses[0]:.4f}, "
          f"last loss {losses[-1]:.4f}; saved {args.out}")
    return _EXIT_OK


def _run_codec_bin(codec_bin, arguments) -> None:
    cmd = [str(codec_bin)] + [str(a) for a in arguments]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(f"{' '.join(cmd)} failed ({proc.returncode}): "
                           f"{proc.stderr.strip()}")


def cmd_eval(args) -> int:
    import torch

    from stereocodec import data, evaluate

    try:
        name, _, path = args.dataset.partition(":")
        root = Path(path or name)
        if not root.is_dir():
            raise ValueError(f"dataset directory not found: {root}")
        lambdas = [float(x) for x in args.lambdas.split(",") if x]
        if not lambdas:
            raise ValueError("need at least one lambda")
        variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    except ValueError as exc:
        print(f"eval: {exc}", file=sys.stderr)
        return _EXIT_USAGE

    preset = evaluate.DATASET_PRESETS.get(name)
    gop = args.gop or (preset.gop_size if preset else 8)
    sequence_dirs = sorted(p for p in root.iterdir() if p.is_dir()) or [root]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    work = out_dir / "streams"
    work.mkdir(exist_ok=True)

    rows = []
    for seq_dir in sequence_dirs:
        clip = data.load_frames(seq_dir)
        frames = clip["L"].shape[0]
        h, w = clip["L"].shape[-2:]
        for label in variants:
            for lam in lambdas:
                tag = f"{seq_dir.name}_{label}_{lam:g}"
                stream = work / f"{tag}.svc"
                decode_dir = work / tag
                enc_args = ["encode", "--input", seq_dir, "--output", stream,
                            "--gop", gop, "--lambda", lam]
                if args.config:
                    enc_args += ["--config", args.config]
                if args.checkpoint_template:
                    enc_args += ["--checkpoint",
                                 args.checkpoint_template.format(lam=lam)]
                if label == "no_attention":
                    enc_args.append("--no-attention")
                elif label == "no_shift":
                    enc_args.append("--no-shift")
                dec_args = ["decode", "--input", stream, "--output", decode_dir]
                if args.checkpoint_template:
                    dec_args += ["--checkpoint",
                                 args.checkpoint_template.format(lam=lam)]
                try:
                    _run_codec_bin(args.codec_bin, enc_args)
                    _run_codec_bin(args.codec_bin, dec_args)
                except RuntimeError as exc:
                    print(f"eval: {exc}", file=sys.stderr)
                    return 1
                decoded = data.load_frames(decode_dir)
                mse = float(torch.mean(
                    (torch.cat([decoded[v] for v in ("L", "R")])
                     - torch.cat([clip[v] for v in ("L", "R")])) ** 2)) * 255.0 ** 2
                rows.append({
                    "label": label,
                    "sequence": seq_dir.name,
                    "lambda": lam,
                    "bpp": evaluate.bits_per_pixel(8 * stream.stat().st_size, w, h, frames),
                    "psnr": evaluate.psnr_from_mse(mse),
                })
    table = evaluate.emit_report(out_dir, rows, anchor_label=args.anchor)
    for label, per_seq in table.items():
        for sequence, value in per_seq.items():
            print(f"BD-rate {label} vs {args.anchor} on {sequence}: {value:+.2f}%")
    print(f"report written to {out_dir}")
    return _EXIT_OK


def cmd_bench(args) -> int:
    from stereocodec._kernels import load_backend

    rng = np.random.default_rng(0)
    values = rng.standard_normal(args.symbols)
    values = np.round(values * args.scale).astype(np.int32)
    results = {}
    for name in ("cython", "pure"):
        try:
            impl = load_backend(name)
        except ImportError:
            print(f"{name}: unavailable")
            continue
        start = time.perf_counter()
        encoded = impl.encode_signed(values)
        mid = time.perf_counter()
        decoded, _ = impl.decode_signed(encoded, 0, values.size)
        end = time.perf_counter()
        if not np.array_equal(decoded, values):
            print(f"{name}: round-trip mismatch", file=sys.stderr)
            return 1
        results[name] = (mid - start, end - mid)
        print(f"{name:>6}: encode {values.size / (mid - start) / 1e6:7.2f} Msym/s, "
              f"decode {values.size / (end - mid) / 1e6:7.2f} Msym/s "
              f"({len(encoded)} bytes)")
    if len(results) == 2:
        enc_speedup = results["pure"][0] / results["cython"][0]
        dec_speedup = results["pure"][1] / results["cython"][1]
        print(f"cython speedup: encode {enc_speedup:.1f}x, decode {dec_speedup:.1f}x")
    return _EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stereocodec",
                                     description="learned stereo video codec")
    sub = parser.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="encode a frame directory to a container")
    enc.add_argument("--input", required=True, help="directory of left_NNNN.png/right_NNNN.png frames")
    enc.add_argument("--output", required=True, help="output container path")
    enc.add_argument("--gop", type=int, default=None, help="intra period")
    enc.add_argument("--lambda", dest="lam", type=float, default=256.0,
                     help="rate-distortion weight (selects a checkpoint when "
                          "--checkpoint contains '{lam}')")
    enc.add_argument("--config", default=None, help="codec config file")
    enc.add_argument("--checkpoint", default=None, help="trained weights")
    enc.add_argument("--coder", choices=("bypass", "range"), default="bypass")
    enc.add_argument("--seed", type=int, default=0, help="seed for default weights")
    enc.add_argument("--no-attention", action="store_true",
                     help="ablation: disable matching attention scores")
    enc.add_argument("--no-shift", action="store_true",
                     help="ablation: disable disparity shifts")
    enc.set_defaults(func=cmd_encode)

    dec = sub.add_parser("decode", help="decode a container to PNG frames")
    dec.add_argument("--input", required=True)
    dec.add_argument("--output", required=True)
    dec.add_argument("--checkpoint", default=None)
    dec.add_argument("--seed", type=int, default=0)
    dec.set_defaults(func=cmd_decode)

    tr = sub.add_parser("train", help="train one stage")
    tr.add_argument("--stage", type=int, required=True, choices=(1, 2, 3, 4))
    tr.add_argument("--config", default=None)
    tr.add_argument("--data", default="synthetic",
                    help="'synthetic' or a directory of frame directories")
    tr.add_argument("--out", required=True, help="output checkpoint path")
    tr.add_argument("--init", default=None, help="checkpoint to start from")
    tr.add_argument("--lambda", dest="lam", type=float, default=256.0)
    tr.add_argument("--iterations", type=int, default=None)
    tr.add_argument("--lr", type=float, default=None)
    tr.add_argument("--batch-size", type=int, default=None)
    tr.add_argument("--seed", type=int, default=0)
    tr.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="rate-distortion evaluation sweep")
    ev.add_argument("--codec-bin", required=True,
                    help="path to the stereocodec executable to benchmark")
    ev.add_argument("--dataset", required=True, help="name:path or path")
    ev.add_argument("--lambdas", required=True, help="comma-separated values")
    ev.add_argument("--anchor", default="full", help="anchor variant label")
    ev.add_argument("--variants", default="full",
                    help="comma-separated: full,no_attention,no_shift")
    ev.add_argument("--config", default=None)
    ev.add_argument("--checkpoint-template", default=None,
                    help="checkpoint path template with '{lam}'")
    ev.add_argument("--gop", type=int, default=None)
    ev.add_argument("--out", required=True)
    ev.set_defaults(func=cmd_eval)

    be = sub.add_parser("bench", help="benchmark the serializer kernels")
    be.add_argument("--symbols", type=int, default=2_000_000)
    be.add_argument("--scale", type=float, default=4.0)
    be.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
