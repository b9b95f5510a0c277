"""Command line: ``softremish {train,bench,curves}``.

Exit codes: 0 success, 2 usage or configuration error, 3 data error,
4 diverged training.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import bench
from .activations import ALL_KINDS, SOFTREMISH, Tag
from .config import (
    _bool,
    activations_from,
    benchmark_config_from,
    defaults,
    dump_config,
    read_config_file,
    train_config_from,
)
from .errors import ConfigError, DataError, DivergedTrainingError, InvalidRangeError
from .trainer import load_data, train

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 2, 3, 4

log = logging.getLogger("softremish")


def _common(p: argparse.ArgumentParser):
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="key=value settings file (flags override it)")
    p.add_argument("--activation", action="append", choices=[t.value for t in Tag], type=str.lower,
                   default=S, help="activation name; repeat for several")
    p.add_argument("--alpha", type=float, default=S, help="SoftReMish inner slope (default 2)")
    p.add_argument("--out", default=S, help="output directory (default ./results)")
    p.add_argument("-q", "--quiet", action="store_true", help="only print the final summary")


def _training(p: argparse.ArgumentParser):
    S = argparse.SUPPRESS
    p.add_argument("--epochs", type=int, default=S)
    p.add_argument("--batch", type=int, default=S)
    p.add_argument("--seed", type=int, default=S, help="base seed; run i of a sweep uses seed+i")
    p.add_argument("--lr", type=float, default=S)
    p.add_argument("--optimizer", choices=["sgd", "adam"], type=str.lower, default=S)
    p.add_argument("--precision", choices=["single", "double"], type=str.lower, default=S)
    p.add_argument("--data-dir", dest="data_dir", default=S, help="directory with the MNIST IDX files")
    p.add_argument("--synthetic", type=int, default=S, help="train on N synthetic images instead of MNIST")
    p.add_argument("--data-seed", dest="data_seed", type=int, default=S)
    p.add_argument("--sweep-dense", dest="sweep_dense", type=_bool, default=S, metavar="{true,false}")
    p.add_argument("--deterministic", type=_bool, default=S, metavar="{true,false}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="softremish", description="Benchmark activation functions on a small MNIST CNN."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the CNN once")
    _common(p)
    _training(p)

    p = sub.add_parser("bench", help="sweep activations x repeats and write comparison tables")
    _common(p)
    _training(p)
    p.add_argument("--repeats", type=int, default=argparse.SUPPRESS)

    p = sub.add_parser("curves", help="write activation / derivative curves as CSV")
    _common(p)
    p.add_argument("--order", type=int, choices=[0, 1, 2], default=argparse.SUPPRESS)
    p.add_argument("--range", nargs=2, type=float, metavar=("LO", "HI"), default=argparse.SUPPRESS)
    p.add_argument("--samples", type=int, default=argparse.SUPPRESS)
    return parser


def resolve_settings(args: argparse.Namespace) -> tuple[dict, set]:
    """Defaults < config file < flags.  Also returns the keys set explicitly."""
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "quiet")}
    if "range" in flags:
        flags["range"] = tuple(flags["range"])
    from_file = read_config_file(args.config) if hasattr(args, "config") else {}
    settings = defaults()
    settings.update(from_file)
    settings.update(flags)
    return settings, set(from_file) | set(flags)


def _print_report(report):
    print(f"{'activation':<16}{'max_val_acc':>12}{'min_val_loss':>15}{'min_train_loss':>16}{'wall_s':>9}")
    for r in report.runs:
        if r.ok:
            rep = r.report
            print(f"{r.activation.label + ' #' + str(r.seed):<16}{rep.max_val_accuracy:>12.4f}"
                  f"{rep.min_val_loss:>15.6e}{rep.min_train_loss:>16.6e}{rep.wall_time:>9.1f}")
        else:
            print(f"{r.activation.label + ' #' + str(r.seed):<16}  DIVERGED: {r.error}")


def cmd_train(args, settings, explicit) -> int:
    if "activation" not in explicit:
        settings["activation"] = [SOFTREMISH.name]
    if len(settings["activation"]) != 1:
        raise ConfigError("train takes exactly one --activation")
    cfg = train_config_from(settings)
    out = Path(settings["out"])
    train_ds, val_ds = load_data(cfg)
    config_text = dump_config(settings)
    name = bench.run_file_name(cfg.activation, cfg.seed)
    try:
        report = train(cfg, train_ds, val_ds)
    except DivergedTrainingError as exc:
        bench.write_text(out / name, bench.run_metrics_text(cfg, None, str(exc)))
        bench.write_text(out / "config.txt", config_text)
        print(f"{cfg.activation}: training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    bench.write_text(out / name, bench.run_metrics_text(cfg, report))
    bench.write_text(out / "config.txt", config_text)
    print(f"{cfg.activation} seed={cfg.seed} epochs={cfg.epochs} "
          f"train/val={len(train_ds)}/{len(val_ds)}")
    print(f"{'epoch':>5}{'train_loss':>14}{'val_loss':>14}{'val_acc':>10}")
    for e in report.epochs:
        print(f"{e.epoch:>5}{e.train_loss:>14.6e}{e.val_loss:>14.6e}{e.val_accuracy:>10.4f}")
    print(f"max val accuracy {report.max_val_accuracy:.4f}, min train loss "
          f"{report.min_train_loss:.6e}, min val loss {report.min_val_loss:.6e}, "
          f"{report.wall_time:.1f}s")
    print(f"wrote {out / name}")
    return EXIT_OK


def cmd_bench(args, settings, explicit) -> int:
    cfg = benchmark_config_from(settings)
    train_ds, val_ds = load_data(cfg.base)
    report = bench.run_benchmark(cfg, train_ds, val_ds)
    bench.write_benchmark(report, cfg.out, dump_config(settings))
    _print_report(report)
    print()
    print(bench.table1_text(report), end="")
    print()
    print(bench.table2_text(report), end="")
    print(f"\nranking by validation accuracy: {' > '.join(report.ranking()) or '-'}")
    print(f"wrote {cfg.out / bench.TABLE1}, {cfg.out / bench.TABLE2}, {cfg.out / bench.RUNS}")
    if report.failures:
        print(f"{len(report.failures)} run(s) diverged", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_curves(args, settings, explicit) -> int:
    kinds = activations_from(settings) if "activation" in explicit else tuple(
        k if k.tag is not Tag.SOFTREMISH else type(k)(Tag.SOFTREMISH, settings["alpha"]) for k in ALL_KINDS
    )
    orders = (settings["order"],) if settings["order"] is not None else (0, 1, 2)
    lo, hi = settings["range"]
    n = settings["samples"]
    try:
        written = bench.write_curves(Path(settings["out"]), kinds, orders, lo, hi, n)
    except InvalidRangeError as exc:
        raise ConfigError(str(exc)) from None
    for p in written:
        print(p)
    return EXIT_OK


COMMANDS = {"train": cmd_train, "bench": cmd_bench, "curves": cmd_curves}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        settings, explicit = resolve_settings(args)
        return COMMANDS[args.command](args, settings, explicit)
    except ConfigError as exc:
        print(f"softremish {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"softremish {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DivergedTrainingError as exc:
        print(f"softremish {args.command}: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
