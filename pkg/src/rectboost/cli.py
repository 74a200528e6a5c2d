"""Command-line interface: train, detect, eval, augment, bench."""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .boosting import Cascade, CascadeConfig, train_cascade
from .channels import build_channels
from .detector import merge_detections, scan
from .evaluation import (
    detection_rate_at_fp,
    evaluate_curves,
    test_error_at,
    write_detections,
)
from .model_io import load_model, save_model
from .pgm import load_pgm, save_pgm
from .synth import augment, synth_corpus, synth_negative_images


def _load_dir(path) -> list[np.ndarray]:
    files = sorted(Path(path).glob("*.pgm"))
    if not files:
        raise SystemExit(f"no .pgm files in {path}")
    return [load_pgm(f) for f in files]


def cmd_train(args):
    if args.synth is not None:
        corpus = synth_corpus(args.synth, args.pos_count, args.neg_count)
        positives = corpus.positives
        neg_images = synth_negative_images(args.synth, count=40, size=100)
    else:
        if not args.pos or not args.neg:
            raise SystemExit("provide --pos and --neg directories, or --synth SEED")
        positives = np.stack(_load_dir(args.pos))
        neg_images = _load_dir(args.neg)
    kind = "haar" if args.features == "haar" else (
        "rect-joint" if args.joint else "rect-single"
    )
    cfg = CascadeConfig(
        rounds_per_layer=args.rounds,
        target_d=args.target_d,
        max_layers=args.layers,
        feature_kind=kind,
        joint_k=args.joint or 2,
    )
    cascade = train_cascade(positives, neg_images, cfg, seed=args.seed)
    save_model(cascade, args.out)
    for entry in cascade.training_log:
        print(entry)
    print(f"saved {len(cascade.stages)}-stage {kind} model to {args.out}")


def cmd_detect(args):
    cascade = load_model(args.model)
    img = load_pgm(args.image)
    dets = merge_detections(scan(img, cascade, scale_factor=args.scale, step=args.step))
    write_detections(dets, args.out)
    print(f"{len(dets)} detections written to {args.out}")


def cmd_eval(args):
    model = load_model(args.model)
    pos = np.stack(_load_dir(args.pos))
    neg = np.stack(_load_dir(args.neg))
    fig_path = Path(args.roc).with_suffix(".png")
    points = evaluate_curves(model, pos, neg, csv_path=args.roc, fig_path=fig_path)
    theta = model.stages[-1].threshold
    err = test_error_at(model, pos, neg, theta)
    print(f"curve: {len(points)} points -> {args.roc} (figure: {fig_path})")
    print(f"test error at operating threshold {theta:.6g}: {err:.4f}")
    print(f"detection rate at <=50 false positives: {detection_rate_at_fp(points, 50):.4f}")


def cmd_augment(args):
    src = sorted(Path(args.indir).glob("*.pgm"))
    if not src:
        raise SystemExit(f"no .pgm files in {args.indir}")
    out_dir = Path(args.outdir)
    out_dir.mkdir(parents=True, exist_ok=True)
    patches = np.stack([load_pgm(f) for f in src])
    result = augment(patches, args.flags, args.seed)
    for f, patch in zip(src, result):
        save_pgm(out_dir / f.name, patch)
    print(f"augmented {len(src)} patches with flags {args.flags!r} into {out_dir}")


def cmd_bench(args):
    cascade = load_model(args.model)
    img = load_pgm(args.image)
    t0 = time.perf_counter()
    build_channels(img)
    channel_ms = (time.perf_counter() - t0) * 1000.0

    from .detector import iround, pyramid_sizes

    n_windows = 0
    for j, size in enumerate(pyramid_sizes(img.shape[1], img.shape[0], cascade.window)):
        stride = max(1, iround(1.2**j))
        nx = (img.shape[1] - size) // stride + 1
        ny = (img.shape[0] - size) // stride + 1
        n_windows += nx * ny
    t0 = time.perf_counter()
    scan(img, cascade)
    elapsed = time.perf_counter() - t0
    print(f"channel build: {channel_ms:.2f} ms")
    print(f"scan: {n_windows} windows in {elapsed:.3f} s "
          f"({n_windows / elapsed:.0f} windows/sec)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rectboost",
                                description="boosted-cascade detector toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a cascade model")
    t.add_argument("--pos", help="directory of 24x24 positive PGM patches")
    t.add_argument("--neg", help="directory of negative PGM images")
    t.add_argument("--synth", type=int, default=None, metavar="SEED",
                   help="use the deterministic synthetic corpus")
    t.add_argument("--features", choices=["rect", "haar"], default="rect")
    t.add_argument("--joint", type=int, default=None, metavar="K",
                   help="joint weak learners of cardinality K (rect only)")
    t.add_argument("--rounds", type=int, default=20, metavar="T")
    t.add_argument("--layers", type=int, default=1, metavar="L")
    t.add_argument("--target-d", type=float, default=0.995, metavar="D")
    t.add_argument("--out", required=True, metavar="MODEL.json")
    t.add_argument("--seed", type=int, default=0, metavar="S")
    t.add_argument("--pos-count", type=int, default=500)
    t.add_argument("--neg-count", type=int, default=500)
    t.set_defaults(func=cmd_train)

    d = sub.add_parser("detect", help="scan an image with a trained model")
    d.add_argument("--model", required=True)
    d.add_argument("--image", required=True, metavar="IMG.pgm")
    d.add_argument("--scale", type=float, default=1.2)
    d.add_argument("--step", type=float, default=1.0)
    d.add_argument("--out", required=True, metavar="DETS.txt")
    d.set_defaults(func=cmd_detect)

    e = sub.add_parser("eval", help="threshold-sweep curve on a patch test set")
    e.add_argument("--model", required=True)
    e.add_argument("--pos", required=True)
    e.add_argument("--neg", required=True)
    e.add_argument("--roc", required=True, metavar="OUT.csv")
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("augment", help="apply R/M/L manipulations to patches")
    a.add_argument("--in", dest="indir", required=True, metavar="DIR")
    a.add_argument("--out", dest="outdir", required=True, metavar="DIR")
    a.add_argument("--flags", default="", metavar="RML")
    a.add_argument("--seed", type=int, default=0, metavar="S")
    a.set_defaults(func=cmd_augment)

    b = sub.add_parser("bench", help="timing of channel build and scanning")
    b.add_argument("--image", required=True, metavar="IMG.pgm")
    b.add_argument("--model", required=True, metavar="MODEL.json")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
