"""Command-line entry point: ``racinggan run|bench|plot``.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from .config import ConfigError, RunConfig, apply_overrides, dump_config, load_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

log = logging.getLogger("racinggan")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML run configuration")
    p.add_argument("--out-dir", help="output directory (overrides output.out_dir)")
    p.add_argument("--iterations", type=int)
    p.add_argument("--formulation", choices=["standard_bce", "paper_literal"])
    p.add_argument("--hinge-convention", choices=["lag_penalty", "lead_penalty"])
    p.add_argument("--batch-size", type=int)
    p.add_argument("--optimizer", choices=["sgd", "adam"])
    p.add_argument("--lr-d", type=float)
    p.add_argument("--lr-g", type=float)
    p.add_argument("--latent-dim", type=int)
    p.add_argument("--no-plots", action="store_true", help="skip SVG output")
    p.add_argument("--set", dest="sets", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override any config field; VALUE is parsed as YAML")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="racinggan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="train and analyse one (variant, seed)")
    _add_common(run)
    run.add_argument("--variant", choices=["gan1", "gan2", "gan3", "gan4", "custom"])
    run.add_argument("--seed", type=int)

    bench = sub.add_parser("bench", help="all variants x all seeds, plus summary tables")
    _add_common(bench)
    bench.add_argument("--seeds", type=int, nargs="+")
    bench.add_argument("--variants", nargs="+", choices=["gan1", "gan2", "gan3", "gan4"])

    plot = sub.add_parser("plot", help="render loss-curve SVGs from trace CSVs")
    plot.add_argument("traces", nargs="+", type=Path)
    plot.add_argument("--out-dir", type=Path, help="directory for SVGs (default: next to each CSV)")

    sub.add_parser("show-config", help="print the default configuration as YAML")
    return parser


def _overrides(args) -> dict:
    ov = {
        "output.out_dir": args.out_dir,
        "experiment.iterations": args.iterations,
        "loss.formulation": args.formulation,
        "loss.hinge_convention": args.hinge_convention,
        "experiment.batch_size": args.batch_size,
        "experiment.optimizer": args.optimizer,
        "experiment.lr_d": args.lr_d,
        "experiment.lr_g": args.lr_g,
        "experiment.latent_dim": args.latent_dim,
    }
    if args.no_plots:
        ov["output.plots"] = False
    for item in args.sets:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        ov[key.strip()] = yaml.safe_load(raw)
    if getattr(args, "variant", None):
        ov["experiment.variant"] = args.variant
    if getattr(args, "seed", None) is not None:
        ov["experiment.seed"] = args.seed
    if getattr(args, "seeds", None):
        ov["bench.seeds"] = args.seeds
    if getattr(args, "variants", None):
        ov["bench.variants"] = args.variants
    return ov


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    return apply_overrides(cfg, _overrides(args))


def cmd_run(args) -> int:
    from .bench import run_one

    cfg = _resolve_config(args)
    cfg.experiment_spec()
    out = Path(cfg.output.out_dir)
    summary = run_one(cfg)
    if not summary.ok:
        print(f"racinggan: numerical failure: {summary.error}", file=sys.stderr)
        return EXIT_NUMERIC
    (out / "config.yaml").write_text(dump_config(cfg))
    rep = summary.report
    print(f"{summary.variant} seed {summary.seed}: " + ", ".join(
        f"{k}={'--' if v is None else v}" for k, v in rep.iterations.items()))
    print("containment: " + ", ".join(f"G{i + 1}={c:.3f}" for i, c in enumerate(summary.containment)))
    return EXIT_OK


def cmd_bench(args) -> int:
    from .bench import run_bench
    from .report import format_tables

    cfg = _resolve_config(args)
    for v in cfg.bench.variants:
        cfg.experiment_spec(v)
    out = Path(cfg.output.out_dir)
    summary = run_bench(cfg, out)
    (out / "config.yaml").write_text(dump_config(cfg))
    sys.stdout.write(format_tables(summary))
    failed = [r for r in summary.runs if not r.ok]
    for r in failed:
        print(f"racinggan: {r.variant} seed {r.seed} failed: {r.error}", file=sys.stderr)
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_plot(args) -> int:
    from .plotting import plot_trace_file

    status = EXIT_OK
    for path in args.traces:
        out = (args.out_dir / path.with_suffix(".svg").name) if args.out_dir else None
        try:
            written = plot_trace_file(path, out)
        except (OSError, ValueError) as exc:
            print(f"racinggan: cannot plot {path}: {exc}", file=sys.stderr)
            status = EXIT_CONFIG
            continue
        print(written)
    return status


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "bench":
            return cmd_bench(args)
        if args.command == "plot":
            return cmd_plot(args)
        sys.stdout.write(dump_config(RunConfig()))
        return EXIT_OK
    except ConfigError as exc:
        print(f"racinggan: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
