"""Command-line entry point: ``chronomap {synth,run,profile,plot}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import synth
from .data import default_schema, load_dataset, write_dataset
from .errors import ChronomapError, PipelineError
from .pipeline import RunConfig, run_pipeline, write_profiles
from .plots import plot_figures
from .profiling import DEFAULT_PROBES, parse_probes
from .som import SomConfig

log = logging.getLogger("chronomap")


def _pair(text):
    a, sep, b = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected START:END, got {text!r}")
    return float(a), float(b)


def _probes(text):
    try:
        return parse_probes(text)
    except (ValueError, IndexError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_profile_flags(p):
    p.add_argument("--alpha", type=float, default=0.05, help="chi-square significance level")
    p.add_argument("--tv-threshold", type=float, default=1.0, help="highlight cells with test value above this")
    p.add_argument("--gap", type=float, default=20.0, help="coherence flag threshold, percentage points")
    p.add_argument("--probes", type=_probes, default=list(DEFAULT_PROBES),
                   help="comma-separated Day@HH:MM list (default Sat/Sun/Wed at 10:00, 16:00, 21:00)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chronomap", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate weekly.csv, individual.csv, labels.csv and schema.txt")
    p.add_argument("--synth", default="default", help="generator config JSON, or 'default'")
    p.add_argument("--flip", type=float, help="override every archetype's flip probability")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path)
    p.add_argument("--dump-config", type=Path, help="write the default generator config here and exit")

    p = sub.add_parser("run", help="full pipeline")
    src = p.add_argument_group("input")
    src.add_argument("--weekly", type=Path)
    src.add_argument("--individual", type=Path)
    src.add_argument("--schema", type=Path)
    src.add_argument("--synth", help="generator config JSON, or 'default'")
    p.add_argument("--units", type=int, default=10)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--lr", type=_pair, default=(0.5, 0.01), help="START:END")
    p.add_argument("--radius", type=_pair, default=(5.0, 0.5), help="START:END")
    p.add_argument("--init", choices=("sample", "uniform"), default="sample")
    cut = p.add_mutually_exclusive_group(required=True)
    cut.add_argument("--superclasses", type=int)
    cut.add_argument("--variance", type=float, help="smallest k reaching this explained variance")
    p.add_argument("--variance-level", choices=("codevectors", "individuals"), default="codevectors")
    p.add_argument("--linkage", choices=("ward", "single", "complete"), default="ward")
    _add_profile_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("profile", help="profile an existing person -> superclass assignment")
    p.add_argument("--weekly", type=Path, required=True)
    p.add_argument("--individual", type=Path, required=True)
    p.add_argument("--schema", type=Path)
    p.add_argument("--assignment", type=Path, required=True, help="CSV with person_id and superclass columns")
    _add_profile_flags(p)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("plot", help="re-render the SVG figures of a run directory")
    p.add_argument("--out", type=Path, required=True)
    return parser


def _cmd_synth(args):
    if args.dump_config:
        args.dump_config.write_text(synth.default_config_text(), encoding="utf-8")
        return 0
    if args.out is None:
        raise ChronomapError("--out is required unless --dump-config is given")
    gen = synth.default_config() if args.synth == "default" else synth.load_config(args.synth)
    if args.flip is not None:
        for a in gen.archetypes:
            a.flip = args.flip
    dataset, labels = synth.synth_generate(gen, args.seed, default_schema())
    args.out.mkdir(parents=True, exist_ok=True)
    write_dataset(dataset, args.out)
    synth.write_labels(labels, args.out / "labels.csv")
    print(f"wrote {len(dataset)} persons to {args.out}")
    return 0


def _cmd_run(args):
    som = SomConfig(units=args.units, epochs=args.epochs, lr_start=args.lr[0], lr_end=args.lr[1],
                    radius_start=args.radius[0], radius_end=args.radius[1], seed=args.seed,
                    init=args.init)
    config = RunConfig(
        out=args.out, weekly=args.weekly, individual=args.individual, schema=args.schema,
        synth=args.synth, som=som, superclasses=args.superclasses, variance=args.variance,
        variance_level=args.variance_level, linkage=args.linkage, probes=args.probes,
        alpha=args.alpha, tv_threshold=args.tv_threshold, gap=args.gap, seed=args.seed,
    )
    run_pipeline(config)
    print((args.out / "report.txt").read_text(encoding="utf-8"), end="")
    return 0


def _cmd_profile(args):
    dataset, _ = load_dataset(args.weekly, args.individual, args.schema)
    with open(args.assignment, newline="", encoding="utf-8") as fh:
        labels = {r["person_id"]: r["superclass"] for r in csv.DictReader(fh)}
    selection = write_profiles(dataset, labels, args.out, args.probes, args.alpha,
                               args.tv_threshold, args.gap)
    print(f"kept_questions = {','.join(selection.kept)}")
    print(f"dropped_questions = {','.join(selection.dropped)}")
    return 0


def _cmd_plot(args):
    for path in plot_figures(args.out):
        print(path)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"synth": _cmd_synth, "run": _cmd_run, "profile": _cmd_profile, "plot": _cmd_plot}
    try:
        return handler[args.command](args)
    except PipelineError as exc:
        print(f"chronomap: {exc}", file=sys.stderr)
        return 1
    except (ChronomapError, OSError) as exc:
        print(f"chronomap: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
