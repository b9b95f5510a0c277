"""Activation sweeps and the table / record / curve files they produce.

Files written here are byte-for-byte reproducible: they hold no timestamps or
wall-clock timings, numbers use fixed C-locale formats, and keys keep a fixed
order.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .activations import ALL_KINDS, ActivationKind, sample_curve
from .config import BenchmarkConfig
from .errors import DivergedTrainingError
from .mnist import Dataset
from .trainer import TrainConfig, TrainReport, train

log = logging.getLogger(__name__)

TABLE1 = "table1_accuracy.csv"
TABLE2 = "table2_loss.csv"
RUNS = "runs.jsonl"


def fmt_acc(x: float) -> str:
    return "NA" if x is None or not math.isfinite(x) else f"{x:.9g}"


def fmt_loss(x: float) -> str:
    return "NA" if x is None or not math.isfinite(x) else f"{x:.6e}"


@dataclass
class RunResult:
    activation: ActivationKind
    seed: int
    report: Optional[TrainReport] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.report is not None

    def record(self) -> dict:
        rec = {"type": "run", "activation": self.activation.label, "alpha": self.activation.alpha,
               "seed": self.seed, "status": "ok" if self.ok else "diverged"}
        if self.ok:
            rec.update(
                max_val_accuracy=self.report.max_val_accuracy,
                min_train_loss=self.report.min_train_loss,
                min_val_loss=self.report.min_val_loss,
                epochs=[e.__dict__ for e in self.report.epochs],
            )
        else:
            rec["error"] = self.error
        return rec


@dataclass
class ActivationSummary:
    activation: ActivationKind
    runs: int
    failed: int
    best_val_accuracy: float = math.nan
    mean_val_accuracy: float = math.nan
    best_val_loss: float = math.nan
    mean_val_loss: float = math.nan
    best_train_loss: float = math.nan
    mean_train_loss: float = math.nan
    rank: Optional[int] = None


@dataclass
class BenchmarkReport:
    config: BenchmarkConfig
    runs: list[RunResult] = field(default_factory=list)

    def summaries(self) -> list[ActivationSummary]:
        rows = []
        for act in self.config.activations:
            mine = [r for r in self.runs if r.activation == act]
            ok = [r.report for r in mine if r.ok]
            s = ActivationSummary(act, len(mine), len(mine) - len(ok))
            if ok:
                accs = [r.max_val_accuracy for r in ok]
                vls = [r.min_val_loss for r in ok]
                tls = [r.min_train_loss for r in ok]
                s.best_val_accuracy, s.mean_val_accuracy = max(accs), math.fsum(accs) / len(accs)
                s.best_val_loss, s.mean_val_loss = min(vls), math.fsum(vls) / len(vls)
                s.best_train_loss, s.mean_train_loss = min(tls), math.fsum(tls) / len(tls)
            rows.append(s)
        ranked = sorted(
            (s for s in rows if math.isfinite(s.best_val_accuracy)),
            key=lambda s: -s.best_val_accuracy,
        )
        for i, s in enumerate(ranked, start=1):
            s.rank = i
        return rows

    def ranking(self) -> list[str]:
        return [s.activation.label for s in sorted(
            (s for s in self.summaries() if s.rank is not None), key=lambda s: s.rank)]

    @property
    def failures(self) -> list[RunResult]:
        return [r for r in self.runs if not r.ok]


def run_seeds(base_seed: int, repeats: int) -> list[int]:
    return [base_seed + i for i in range(repeats)]


def run_benchmark(cfg: BenchmarkConfig, train_ds: Dataset, val_ds: Dataset) -> BenchmarkReport:
    """Train every activation ``repeats`` times; divergent runs are recorded, not raised."""
    report = BenchmarkReport(cfg)
    for act in cfg.activations:
        for seed in run_seeds(cfg.base.seed, cfg.repeats):
            run_cfg = replace(cfg.base, activation=act, seed=seed)
            try:
                result = RunResult(act, seed, report=train(run_cfg, train_ds, val_ds))
            except DivergedTrainingError as exc:
                log.warning("%s seed %d diverged: %s", act.label, seed, exc)
                result = RunResult(act, seed, error=str(exc))
            report.runs.append(result)
    return report


# --------------------------------------------------------------------------
# writers


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=False, allow_nan=True, separators=(",", ":"))


def _csv(rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _alpha(act: ActivationKind) -> str:
    return "" if act.alpha is None else f"{act.alpha:g}"


def table1_text(report: BenchmarkReport) -> str:
    rows = [("activation", "alpha", "validation_accuracy", "validation_accuracy_mean", "rank", "runs", "failed")]
    for s in report.summaries():
        rows.append((
            s.activation.name, _alpha(s.activation), fmt_acc(s.best_val_accuracy),
            fmt_acc(s.mean_val_accuracy), "" if s.rank is None else str(s.rank), str(s.runs), str(s.failed),
        ))
    return _csv(rows)


def table2_text(report: BenchmarkReport) -> str:
    rows = [("activation", "alpha", "validation_loss", "training_loss_min",
             "validation_loss_mean", "training_loss_min_mean")]
    for s in report.summaries():
        rows.append((
            s.activation.name, _alpha(s.activation), fmt_loss(s.best_val_loss), fmt_loss(s.best_train_loss),
            fmt_loss(s.mean_val_loss), fmt_loss(s.mean_train_loss),
        ))
    return _csv(rows)


def run_metrics_text(cfg: TrainConfig, report: Optional[TrainReport], error: Optional[str] = None) -> str:
    """Line-delimited JSON: a config record, one record per epoch, then a summary."""
    lines = [_dumps({"type": "config", "config": cfg.to_dict()})]
    if report is not None:
        for e in report.epochs:
            lines.append(_dumps({"type": "epoch", **e.__dict__}))
        lines.append(_dumps({"type": "summary", "status": "ok", **report.summary()}))
    else:
        lines.append(_dumps({"type": "summary", "status": "diverged", "error": error}))
    return "\n".join(lines) + "\n"


def run_file_name(act: ActivationKind, seed: int) -> str:
    return f"metrics_{act.label}_seed{seed}.jsonl"


def write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_benchmark(report: BenchmarkReport, out: Path, config_text: str) -> list[Path]:
    out = Path(out)
    written = []
    for r in report.runs:
        cfg = replace(report.config.base, activation=r.activation, seed=r.seed)
        p = out / "runs" / run_file_name(r.activation, r.seed)
        write_text(p, run_metrics_text(cfg, r.report, r.error))
        written.append(p)
    runs_text = "".join(_dumps(r.record()) + "\n" for r in report.runs)
    for name, text in ((RUNS, runs_text), (TABLE1, table1_text(report)),
                       (TABLE2, table2_text(report)), ("config.txt", config_text)):
        write_text(out / name, text)
        written.append(out / name)
    return written


def curve_text(kind: ActivationKind, order: int, lo: float, hi: float, n: int) -> str:
    curve = sample_curve(kind, order, lo, hi, n)
    rows = [("x", "y")]
    rows.extend((repr(float(x)), repr(float(y))) for x, y in zip(curve.xs, curve.ys))
    return _csv(rows)


def curve_file_name(kind: ActivationKind, order: int) -> str:
    return f"fig{order + 1}_{kind.label}.csv"


def write_curves(
    out: Path,
    kinds: Sequence[ActivationKind] = ALL_KINDS,
    orders: Sequence[int] = (0, 1, 2),
    lo: float = -5.0,
    hi: float = 5.0,
    n: int = 1001,
) -> list[Path]:
    written = []
    for order in orders:
        for kind in kinds:
            p = Path(out) / curve_file_name(kind, order)
            write_text(p, curve_text(kind, order, lo, hi, n))
            written.append(p)
    return written
