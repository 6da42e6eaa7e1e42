"""Command-line pipeline driver.

Subcommands: embed, extract, attack, eval, scan-demo, scan-bench.
Exit codes: 0 success, 2 usage error, 3 validation error, 4 codec
unavailable, 5 internal invariant violation.  All randomness flows from
--seed; identical command lines on identical inputs produce byte-identical
outputs (the H.264 attack excepted, it delegates to an external codec).
"""

import argparse
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import distortion, embedder, matching, metrics, pipeline, scanning, ssm
from .distortion import CodecUnavailableError, DistortionSpec
from .tensor_io import (
    TensorIOError,
    load_frames,
    load_watermark,
    save_frames,
    save_watermark,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_CODEC = 4
EXIT_INTERNAL = 5


def _write_text_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile(
        "w", dir=path.parent, suffix=".tmp", delete=False
    ) as fh:
        fh.write(text)
        tmp = fh.name
    Path(tmp).replace(path)


def _build_parser():
    parser = argparse.ArgumentParser(prog="vidmark", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_embed = sub.add_parser("embed", help="embed a watermark into a video")
    p_embed.add_argument("--video", required=True, help="input PNG frame dir or .y4m")
    p_embed.add_argument("--watermark", required=True, help="watermark PNG")
    p_embed.add_argument("--out", required=True, help="output frame dir or .y4m")
    p_embed.add_argument("--key", required=True, help="extraction key file to write")
    p_embed.add_argument("--dump-plan", help="write the assignment plan (i j k lines)")
    p_embed.add_argument("--delta", type=float, default=embedder.DEFAULT_DELTA)
    p_embed.add_argument("--bit-depth", type=int, default=embedder.DEFAULT_BIT_DEPTH)
    p_embed.add_argument("--patch-size", type=int, default=16)
    p_embed.add_argument("--seed", type=int, default=0)
    p_embed.add_argument("--threads", type=int, default=1)

    p_extract = sub.add_parser("extract", help="blind-extract a watermark")
    p_extract.add_argument("--video", required=True)
    p_extract.add_argument("--key", required=True)
    p_extract.add_argument("--out", required=True, help="recovered watermark PNG")
    p_extract.add_argument("--dump-positions", help="write slot -> index lines")
    p_extract.add_argument("--threads", type=int, default=1)

    p_attack = sub.add_parser("attack", help="apply a distortion")
    p_attack.add_argument("--video", required=True)
    p_attack.add_argument("--kind", required=True, choices=distortion.KINDS)
    p_attack.add_argument("--out", required=True)
    p_attack.add_argument("--record", help="write the realized attack record")
    p_attack.add_argument("--ratio", type=float, help="erase area fraction")
    p_attack.add_argument("--kernel", type=int, help="blur kernel size")
    p_attack.add_argument("--sigma", type=float, help="noise std (omit to sample)")
    p_attack.add_argument("--angle", type=float, help="rotation degrees (omit to sample)")
    p_attack.add_argument("--crf", type=int, default=24)
    p_attack.add_argument("--seed", type=int, default=0)

    p_eval = sub.add_parser("eval", help="report quality metrics")
    p_eval.add_argument("--orig", required=True)
    p_eval.add_argument("--marked", required=True)
    p_eval.add_argument("--wm", required=True)
    p_eval.add_argument("--rec", required=True)
    p_eval.add_argument("--weight", type=float, default=metrics.DEFAULT_LAMBDA,
                        help="watermark loss weight (lambda)")
    p_eval.add_argument("--summary", action="store_true",
                        help="append a single machine-readable line")

    p_demo = sub.add_parser("scan-demo", help="print a scan order, one index per line")
    p_demo.add_argument("--kind", required=True,
                        choices=["2d", "3d-local", "3d-local-reverse", "3d-vanilla"])
    p_demo.add_argument("--dims", type=int, nargs="+", required=True,
                        help="H W for 2d; F H W for 3d kinds")

    p_bench = sub.add_parser("scan-bench", help="report scan kernel throughput")
    p_bench.add_argument("--length", type=int, default=4096)
    p_bench.add_argument("--channels", type=int, default=4)
    p_bench.add_argument("--state", type=int, default=8)
    p_bench.add_argument("--block-dims", type=int, nargs=4, metavar=("F", "H", "W", "D"),
                         help="also time one 3D block forward at these dims")
    p_bench.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_embed(args):
    video = load_frames(args.video)
    wm = load_watermark(args.watermark, patch_size=args.patch_size)
    marked, plan_, cfg = pipeline.embed_video(
        video, wm, delta=args.delta, bit_depth=args.bit_depth,
        patch_size=args.patch_size, seed=args.seed, threads=args.threads,
    )
    save_frames(marked, args.out)
    import io

    buf = io.StringIO()
    embedder.write_key(cfg, video.samples.shape, buf)
    _write_text_atomic(args.key, buf.getvalue())
    if args.dump_plan:
        buf = io.StringIO()
        matching.dump_plan(plan_, buf)
        _write_text_atomic(args.dump_plan, buf.getvalue())
    return EXIT_OK


def _cmd_extract(args):
    with open(args.key) as fh:
        cfg, shape = embedder.read_key(fh)
    video = load_frames(args.video)
    if video.samples.shape != shape:
        raise ValueError(
            f"video shape {video.samples.shape} does not match key {shape}"
        )
    recovered, decoded = pipeline.extract_video(video, cfg, threads=args.threads)
    save_watermark(recovered, args.out)
    if args.dump_positions:
        lines = [
            f"{d.slot[0]},{d.slot[1]} -> {d.index} ({d.confidence:.4f})"
            for d in decoded
        ]
        _write_text_atomic(args.dump_positions, "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_attack(args):
    video = load_frames(args.video)
    spec = DistortionSpec(
        kind=args.kind, ratio=args.ratio, kernel=args.kernel, sigma=args.sigma,
        angle=args.angle, crf=args.crf, seed=args.seed,
    )
    realized = distortion.realize(spec, frame_shape=(video.height, video.width))
    attacked = distortion.apply(video, realized)
    save_frames(attacked, args.out)
    if args.record:
        _write_text_atomic(args.record, distortion.spec_to_record(realized))
    return EXIT_OK


def _cmd_eval(args):
    report = metrics.evaluate(
        load_frames(args.orig), load_frames(args.marked),
        load_watermark(args.wm, patch_size=1), load_watermark(args.rec, patch_size=1),
        weight=args.weight,
    )
    sys.stdout.write(metrics.format_report(report))
    if args.summary:
        v, w = report.video, report.watermark
        sys.stdout.write(
            f"SUMMARY video_psnr={v.psnr:.4f} video_ssim={v.ssim:.6f} "
            f"wm_psnr={w.psnr:.4f} wm_ssim={w.ssim:.6f} l_total={report.l_total:.8f}\n"
        )
    return EXIT_OK


def _cmd_scan_demo(args):
    if args.kind == "2d":
        if len(args.dims) != 2:
            raise ValueError("2d scan needs --dims H W")
        order = scanning.scan_2d_freq(*args.dims)
    else:
        if len(args.dims) != 3:
            raise ValueError("3d scans need --dims F H W")
        if args.kind == "3d-vanilla":
            order = scanning.scan_3d_vanilla(*args.dims)
        else:
            direction = "reverse" if args.kind.endswith("reverse") else "forward"
            order = scanning.scan_3d_local(*args.dims, direction=direction)
    sys.stdout.write("\n".join(str(i) for i in order.forward) + "\n")
    return EXIT_OK


def _cmd_scan_bench(args):
    rng = np.random.default_rng(args.seed)
    x = rng.normal(size=(args.length, args.channels))
    proj = ssm.ScanProjection(args.channels, args.state, seed=args.seed)
    params = ssm.input_projection(x, proj)
    start = time.perf_counter()
    reps = 0
    while time.perf_counter() - start < 0.5:
        ssm.selective_scan(x, params)
        reps += 1
    elapsed = time.perf_counter() - start
    rate = reps * args.length * args.channels / elapsed
    sys.stdout.write(
        f"selective_scan L={args.length} D={args.channels} N={args.state}: "
        f"{rate:.0f} elements/s ({reps} runs)\n"
    )
    if args.block_dims:
        f, h, w, d = args.block_dims
        block = ssm.SfMamba3d(d, args.state, seed=args.seed)
        vol = rng.normal(size=(f, h, w, d))
        start = time.perf_counter()
        block.forward(vol)
        elapsed = time.perf_counter() - start
        rate = f * h * w * d / elapsed
        sys.stdout.write(
            f"sfmamba3d {f}x{h}x{w}x{d}: {rate:.0f} elements/s ({elapsed:.3f} s)\n"
        )
    return EXIT_OK


_COMMANDS = {
    "embed": _cmd_embed,
    "extract": _cmd_extract,
    "attack": _cmd_attack,
    "eval": _cmd_eval,
    "scan-demo": _cmd_scan_demo,
    "scan-bench": _cmd_scan_bench,
}


def dispatch(argv):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except CodecUnavailableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CODEC
    except (TensorIOError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (FloatingPointError, RuntimeError, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
