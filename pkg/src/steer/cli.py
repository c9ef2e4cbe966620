"""Command-line entry points: annotate, stats, mix, anchors, synth, serve."""

from __future__ import annotations

import argparse
import json
import sys

from .geometry import build_anchor_set
from .pipeline import annotate_corpus, build_mix, corpus_stats
from .segmenter import SegmenterConfig
from .sim import NoiseConfig
from .synth import PRESETS, SynthSpec, synth_corpus


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="steer",
        description="Relabel robot demonstration logs into composable, language-indexed skills.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("annotate", help="segment and relabel a corpus of episodes")
    p.add_argument("--input", required=True, help="episode corpus (one JSON record per line)")
    p.add_argument("--output", required=True, help="where to write segment records")
    p.add_argument("--config", help="JSON file of segmenter threshold overrides")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--report", help="write the run report (JSON) here")
    # flag overrides win over the config file
    p.add_argument("--open-threshold", type=float)
    p.add_argument("--closed-threshold", type=float)
    p.add_argument("--reorient-dwell", type=int)
    p.add_argument("--lift-height", type=float)
    p.add_argument("--smoothing-window", type=int)

    p = sub.add_parser("stats", help="recompute totals from a segment file")
    p.add_argument("--input", required=True)

    p = sub.add_parser("mix", help="build a normalized dataset-mixing manifest")
    p.add_argument(
        "--source", action="append", required=True, metavar="PATH:WEIGHT",
        help="corpus path and weight, repeatable",
    )
    p.add_argument("--output", required=True)
    p.add_argument("--mode", choices=["augment", "replace"], default="augment")

    p = sub.add_parser("anchors", help="print or export the anchor direction table")
    p.add_argument("--output", help="write JSON here instead of printing a table")

    p = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    p.add_argument("--output", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--preset", choices=sorted(PRESETS), default="round_trip")
    p.add_argument("--spec", help="JSON synth spec file (overrides --preset)")
    p.add_argument("--steps", type=int, help="pad episodes to at least this many steps")
    p.add_argument("--noise-quat-deg", type=float, default=0.0)
    p.add_argument("--noise-pos-m", type=float, default=0.0)
    p.add_argument("--noise-aperture", type=float, default=0.0)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("serve", help="run the session gateway")
    p.add_argument("--port", type=int, default=8425)
    p.add_argument("--persist", help="directory for per-session history files")

    return parser


def _segmenter_config(args: argparse.Namespace) -> SegmenterConfig:
    values: dict = {}
    if args.config:
        with open(args.config) as f:
            values.update(json.load(f))
    for key in ("open_threshold", "closed_threshold", "reorient_dwell",
                "lift_height", "smoothing_window"):
        flag = getattr(args, key)
        if flag is not None:
            values[key] = flag
    return SegmenterConfig(**values)


def _cmd_annotate(args) -> int:
    report = annotate_corpus(
        args.input, args.output,
        config=_segmenter_config(args),
        workers=args.workers,
        report_path=args.report,
    )
    print(report.to_json())
    return 0


def _cmd_stats(args) -> int:
    print(corpus_stats(args.input).to_json())
    return 0


def _cmd_mix(args) -> int:
    sources = []
    for item in args.source:
        path, sep, weight = item.rpartition(":")
        if not sep:
            raise ValueError(f"--source must look like PATH:WEIGHT, got {item!r}")
        sources.append((path, float(weight)))
    manifest = build_mix(sources, mode=args.mode)
    with open(args.output, "w") as f:
        f.write(manifest.to_json() + "\n")
    print(manifest.to_json())
    return 0


def _cmd_anchors(args) -> int:
    anchors = build_anchor_set()
    if args.output:
        with open(args.output, "w") as f:
            f.write(anchors.to_json() + "\n")
        return 0
    print(f"{'id':>3}  {'direction':>24}  class")
    for anchor in anchors:
        x, y, z = (f"{c:+.3f}" for c in anchor.direction)
        print(f"{anchor.id:>3}  ({x}, {y}, {z})  {anchor.semantic_class.value}")
    print(
        "\n26 anchors: the 27 component combinations of {-1, 0, 1}^3 include "
        "the zero vector, which has no direction."
    )
    return 0


def _cmd_synth(args) -> int:
    if args.spec:
        with open(args.spec) as f:
            spec = SynthSpec.from_json(f.read())
    else:
        spec = PRESETS[args.preset]()
    noise = NoiseConfig(
        quat_axis_deg=args.noise_quat_deg,
        position_m=args.noise_pos_m,
        aperture=args.noise_aperture,
    )
    if noise.active or args.steps is not None:
        spec = SynthSpec(
            mix=spec.mix,
            objects=spec.objects,
            noise=noise if noise.active else spec.noise,
            min_steps=args.steps if args.steps is not None else spec.min_steps,
        )
    n = synth_corpus(spec, args.count, args.seed, args.output, workers=args.workers)
    print(f"wrote {n} episodes to {args.output}")
    return 0


def _cmd_serve(args) -> int:
    from .gateway import serve

    server = serve(args.port, persist_dir=args.persist)
    print(f"gateway listening on 127.0.0.1:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


_COMMANDS = {
    "annotate": _cmd_annotate,
    "stats": _cmd_stats,
    "mix": _cmd_mix,
    "anchors": _cmd_anchors,
    "synth": _cmd_synth,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (OSError, ValueError) as e:
        print(f"steer {args.command}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
