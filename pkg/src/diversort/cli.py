"""Command-line entry point: ``diversort {track,eval,simulate,features}``."""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence

from . import __version__, kernels
from .appearance import crop_box, extract_features, read_image
from .core_io import (Detection, TrackerConfig, ensure_parent, iter_in_file_order, load_detections,
                      load_features, write_features, write_tracks)
from .metrics import evaluate, load_labelled
from .simulate import builtin_scenario, builtin_scenarios, generate, load_scenario_config
from .tracker import run_sequence

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _frame_image(images_dir: str, frame: int):
    path = os.path.join(images_dir, f"{frame:06d}.ppm")
    if not os.path.exists(path):
        raise FileNotFoundError(f"missing image for frame {frame}: {path}")
    return read_image(path)


def _featurize_frame(images_dir: str, frame: int, dets: Sequence[Detection], pool) -> List[Detection]:
    if not dets:
        return []
    image = _frame_image(images_dir, frame)
    crops = [crop_box(image, d.box) for d in dets]
    vectors = list(pool.map(extract_features, crops)) if pool else [extract_features(c) for c in crops]
    return [d.with_feature(v) for d, v in zip(dets, vectors)]


def _threads(value: Optional[int]) -> int:
    return value if value and value > 0 else (os.cpu_count() or 1)


def cmd_track(args) -> int:
    if (args.features is None) == (args.images is None):
        raise UsageError("exactly one of --features or --images is required")
    overrides = {"identity_recovery_enabled": False} if args.no_identity_recovery else {}
    config = TrackerConfig.from_file(args.config, **overrides) if args.config \
        else TrackerConfig(**overrides)
    detections = load_detections(args.detections)
    featurize = None
    pool = None
    if args.features:
        detections = load_features(args.features, detections)
    else:
        workers = _threads(args.threads)
        pool = ThreadPoolExecutor(workers) if workers > 1 else None
        featurize = lambda frame, dets: _featurize_frame(args.images, frame, dets, pool)
    try:
        result = run_sequence(detections, config, emit=args.emit, streaming=args.streaming,
                              featurize=featurize)
    finally:
        if pool:
            pool.shutdown()
    ensure_parent(args.out)
    write_tracks(args.out, result.rows)
    if args.manifest:
        manifest = {
            "inputs": {"detections": args.detections, "features": args.features, "images": args.images,
                       "config": args.config},
            "config": config.as_dict(),
            "tracker_version": __version__,
            "kernel_backend": kernels.BACKEND,
            "mode": "streaming" if args.streaming else "batch",
            "emit": args.emit,
            "frame_timing_ms": result.timings_ms,
            "merges": [{"frame": m.frame, "absorbed": m.absorbed, "surviving": m.surviving}
                       for m in result.merges],
        }
        ensure_parent(args.manifest)
        with open(args.manifest, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")
    return EXIT_OK


def cmd_eval(args) -> int:
    if not 0 < args.iou_min <= 1:
        raise UsageError(f"--iou-min must lie in (0, 1], got {args.iou_min}")
    report = evaluate(load_labelled(args.gt), load_labelled(args.result), args.iou_min)
    sys.stdout.write(report.to_table())
    sys.stdout.write(report.to_key_values())
    if args.out:
        ensure_parent(args.out)
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_key_values())
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.list:
        for name in sorted(builtin_scenarios()):
            print(name)
        return EXIT_OK
    if (args.scenario is None) == (args.config is None):
        raise UsageError("exactly one of --scenario or --config is required")
    if args.out is None:
        raise UsageError("--out is required")
    if args.scenario:
        try:
            config = builtin_scenario(args.scenario, args.seed)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
    else:
        config = load_scenario_config(args.config)
        if args.seed is not None:
            config.seed = args.seed
    for kind, path in generate(config, args.out).items():
        print(f"{kind}: {path}")
    return EXIT_OK


def cmd_features(args) -> int:
    detections = load_detections(args.detections)
    workers = _threads(args.threads)
    vectors = []
    with ThreadPoolExecutor(workers) as pool:
        for frame, dets in detections.items():
            vectors.extend(_featurize_frame(args.images, frame, dets, pool if workers > 1 else None))
    # sidecar rows follow detection-file row order
    by_row = sorted(vectors, key=lambda d: d.row)
    ensure_parent(args.out)
    write_features(args.out, [d.feature for d in by_row])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="diversort", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("track", help="run the tracker over a detection file")
    p.add_argument("--detections", required=True)
    p.add_argument("--features")
    p.add_argument("--images", help="directory of %%06d.ppm frames to extract features from")
    p.add_argument("--config", help="flat key = value tracker config")
    p.add_argument("--out", required=True)
    p.add_argument("--emit", choices=("tentative", "confirmed"), default="confirmed")
    p.add_argument("--no-identity-recovery", action="store_true")
    p.add_argument("--streaming", action="store_true",
                   help="do not rewrite ids of already emitted frames after a merge")
    p.add_argument("--manifest")
    p.add_argument("--threads", type=int, default=0)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="score a result file against ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--result", required=True)
    p.add_argument("--iou-min", type=float, default=0.5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="write a synthetic scenario")
    p.add_argument("--scenario")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--list", action="store_true", help="list built-in scenarios")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("features", help="extract appearance features for each detection")
    p.add_argument("--detections", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=0)
    p.set_defaults(func=cmd_features)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"diversort: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"diversort: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
