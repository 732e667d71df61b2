"""Command-line entry point: ``trackboost {track,boost,pipeline,eval,synth,sample}``.

Exit codes: 0 success, 1 bad input or usage, 2 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

import yaml

from . import dataio
from .boost import MODES
from .config import ConfigError, PipelineConfig, load_config
from .core import FrameSize, InvariantViolation
from .evaluation import evaluate
from .pipeline import boost_videos, track_videos
from .synth import AssetError, PlacementError, generate_dataset

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _frame_size(text: str) -> FrameSize:
    try:
        w, h = text.lower().split("x")
        return FrameSize(int(w), int(h))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT, got {text!r}") from None


def _config(args) -> PipelineConfig:
    return load_config(args.config) if args.config else PipelineConfig()


def _report(diag: dataio.Diagnostics, what: str) -> None:
    if diag.counts:
        print(f"{what}: {diag.summary()}", file=sys.stderr)


def _load_detections(args):
    """Returns (sequences, image_ids) from COCO (with annotations) or MOT input."""
    if args.mot:
        if args.frame_size is None:
            raise UsageError("--mot needs --frame-size")
        seq, diag = dataio.read_mot_detections(args.mot, args.frame_size)
        _report(diag, args.mot)
        image_ids = {(args.video_id, f): f + 1 for f, _ in seq}
        return {args.video_id: seq}, image_ids
    if not (args.annotations and args.detections):
        raise UsageError("need --annotations and --detections (or --mot)")
    gt, gdiag = dataio.read_coco_groundtruth(args.annotations)
    _report(gdiag, args.annotations)
    sequences, ddiag = dataio.read_coco_detections(args.detections, gt)
    _report(ddiag, args.detections)
    return sequences, gt.image_ids


def cmd_track(args) -> int:
    cfg = _config(args)
    sequences, image_ids = _load_detections(args)
    results = track_videos(sequences, cfg.tracker, workers=args.workers)
    dataio.write_tracked(args.output, results, image_ids)
    return EXIT_OK


def cmd_boost(args) -> int:
    results, image_ids = dataio.read_tracked(args.input)
    mode = args.mode or _config(args).boost_mode
    dataio.write_boosted(args.output, boost_videos(results, mode), image_ids)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _config(args)
    sequences, image_ids = _load_detections(args)
    results = track_videos(sequences, cfg.tracker, workers=args.workers)
    mode = args.mode or cfg.boost_mode
    dataio.write_boosted(args.output, boost_videos(results, mode), image_ids)
    return EXIT_OK


def cmd_eval(args) -> int:
    gt, gdiag = dataio.read_coco_groundtruth(args.annotations)
    _report(gdiag, args.annotations)
    sequences, ddiag = dataio.read_coco_detections(args.detections, gt)
    _report(ddiag, args.detections)
    dets = {(v, f): list(d) for v, seq in sequences.items() for f, d in seq}
    threshold = args.iou_threshold if args.iou_threshold is not None else _config(args).iou_threshold
    report = evaluate(dets, gt.boxes, threshold)
    sys.stdout.write(report.to_text())
    if args.output:
        Path(args.output).write_text(report.to_json() + "\n")
    if args.text_output:
        Path(args.text_output).write_text(report.to_text())
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = _config(args).synth
    if args.seed is not None:
        cfg = replace(cfg, rng_seed=args.seed)
    if args.num_samples is not None:
        cfg = replace(cfg, num_samples=args.num_samples)
    generate_dataset(cfg, args.output_dir, workers=args.workers)
    return EXIT_OK


def cmd_sample(args) -> int:
    gt, diag = dataio.read_coco_groundtruth(args.annotations)
    _report(diag, args.annotations)
    doc = dataio.sample_annotations(gt, args.k)
    Path(args.output).write_text(json.dumps(doc, indent=1) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trackboost", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = _Parser(add_help=False)
    common.add_argument("--config", help="pipeline config file (YAML or JSON)")
    common.add_argument("--seed", type=int, default=None, help="seed for any randomness")

    det_input = _Parser(add_help=False)
    det_input.add_argument("--annotations", help="COCO annotations (frames, sizes, image ids)")
    det_input.add_argument("--detections", help="COCO results file")
    det_input.add_argument("--mot", help="MOT-challenge CSV instead of COCO input")
    det_input.add_argument("--frame-size", type=_frame_size, help="WIDTHxHEIGHT for --mot")
    det_input.add_argument("--video-id", default="video", help="video id for --mot input")
    det_input.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("track", parents=[common, det_input], help="detections -> tracked document")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("boost", parents=[common], help="tracked document -> boosted COCO results")
    p.add_argument("--input", required=True)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_boost)

    p = sub.add_parser("pipeline", parents=[common, det_input], help="track and boost in one pass")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("eval", parents=[common], help="AP@IoU report")
    p.add_argument("--annotations", required=True)
    p.add_argument("--detections", required=True, help="raw or boosted COCO results")
    p.add_argument("--iou-threshold", type=float, default=None)
    p.add_argument("--output", help="write the JSON report here")
    p.add_argument("--text-output", help="write the key: value report here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--num-samples", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sample", parents=[common], help="evenly subsample annotated frames")
    p.add_argument("--annotations", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_sample)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"trackboost: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (dataio.ParseError, ConfigError, AssetError, PlacementError, OSError, ValueError, yaml.YAMLError) as exc:
        print(f"trackboost: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
