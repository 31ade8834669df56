"""Command-line batch front end.

Exit codes: 0 success, 1 runtime/data error, 2 usage error. All
diagnostics go to standard error; metric values go to standard output.
The TJP_LOG environment variable (error | info | debug) sets verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .errors import TjpError

UNSUPPORTED_METRICS = ("qabf", "qcv")


def _setup_logging():
    level = os.environ.get("TJP_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO,
              "debug": logging.DEBUG}
    logging.basicConfig(stream=sys.stderr,
                        level=levels.get(level, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tjp",
        description="Deterministic degradation corpus factory for "
                    "2D/3D biomedical images.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="extract multi-scale windows")
    p.add_argument("--source", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", required=True, type=int)

    p = sub.add_parser("degrade", help="apply one degradation to an array")
    p.add_argument("--task", required=True,
                   choices=["mask", "deform", "lowres", "noise"])
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--no-preview", action="store_true",
                   help="skip the rendered PNG preview")

    p = sub.add_parser("pipeline", help="sample then apply all four tasks")
    p.add_argument("--source", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=None,
                   help="worker processes (default: available cores)")
    p.add_argument("--preview", action="store_true",
                   help="render per-patch PNG previews")

    p = sub.add_parser("metrics", help="print a metric value")
    p.add_argument("metric",
                   choices=["psnr", "ssim", "dice", "hd95", "sdlogj",
                            *UNSUPPORTED_METRICS])
    p.add_argument("arrays", nargs="+", metavar="ARRAY")
    p.add_argument("--label", type=int, default=1)
    p.add_argument("--max", dest="max_val", type=float, default=1.0)

    p = sub.add_parser("verify", help="regenerate a manifest and compare bytes")
    p.add_argument("--manifest", required=True)
    return parser


def _cmd_metrics(args) -> int:
    from . import metrics
    from .corpus_io import read_array
    from .deformation import field_from_components

    if args.metric in UNSUPPORTED_METRICS:
        print(f"tjp: metric {args.metric!r} is unsupported (no reference "
              "definition available)", file=sys.stderr)
        return 2
    if args.metric == "sdlogj":
        if len(args.arrays) not in (2, 3):
            print("tjp: sdlogj needs one component array per axis (2 or 3)",
                  file=sys.stderr)
            return 2
        comps = [read_array(p) for p in args.arrays]
        sd, nonpos = metrics.sdlogj(field_from_components(comps))
        print(f"{sd} {nonpos}")
        return 0
    if len(args.arrays) != 2:
        print(f"tjp: metrics {args.metric} needs exactly two arrays",
              file=sys.stderr)
        return 2
    a, b = (read_array(p) for p in args.arrays)
    if args.metric == "psnr":
        value = metrics.psnr(a, b, args.max_val)
    elif args.metric == "ssim":
        value = metrics.ssim(a, b, args.max_val)
    elif args.metric == "dice":
        value = metrics.dice(metrics.LabelGrid(a.values),
                             metrics.LabelGrid(b.values), args.label)
    else:
        value = metrics.hd95(metrics.LabelGrid(a.values),
                             metrics.LabelGrid(b.values), args.label)
    print(value)
    return 0


def dispatch(argv) -> int:
    """Run one CLI invocation; returns the process exit code."""
    _setup_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    from . import pipeline as pl

    try:
        if args.command == "sample":
            path = pl.run_sample(args.source, args.config, args.out, args.seed)
            print(f"wrote {path}", file=sys.stderr)
        elif args.command == "degrade":
            path = pl.run_degrade(args.task, args.in_path, args.config,
                                  args.out, args.seed,
                                  preview=not args.no_preview)
            print(f"wrote {path}", file=sys.stderr)
        elif args.command == "pipeline":
            path = pl.run_pipeline(args.source, args.config, args.out,
                                   args.seed, jobs=args.jobs,
                                   preview=args.preview)
            print(f"wrote {path}", file=sys.stderr)
        elif args.command == "metrics":
            return _cmd_metrics(args)
        elif args.command == "verify":
            results = pl.run_verify(args.manifest)
            failed = 0
            for desc, ok, detail in results:
                status = "PASS" if ok else "FAIL"
                suffix = f" ({detail})" if detail else ""
                print(f"{status} {desc}{suffix}")
                failed += 0 if ok else 1
            if failed:
                print(f"tjp: {failed}/{len(results)} entries failed",
                      file=sys.stderr)
                return 1
        return 0
    except (TjpError, OSError) as exc:
        print(f"tjp: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
