"""Threshold sweeps: pattern counts per min_util, as table and figure."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from .closure import count_generators, huci_miner
from .dataset import TransactionDatabase, format_utility
from .mining import MiningStats, mine_hui, resolve_min_util


@dataclass
class BenchRow:
    min_util: str  # as given on the command line
    min_util_abs: int
    n_hui: int
    n_huci: int
    n_hg: int
    self_generated_only: bool  # printed as '-' in the HG column
    seconds: float
    peak_lists: int

    @property
    def n_huci_hg(self) -> int:
        return self.n_huci + self.n_hg


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)
    scale: int = 1
    dataset: str = ""

    COLUMNS = ("min_util", "min_util_abs", "n_hui", "n_huci", "n_hg", "n_huci_hg",
               "self_generated_only", "seconds", "peak_lists")

    def records(self) -> list[dict]:
        out = []
        for r in self.rows:
            d = asdict(r)
            d["min_util_abs"] = format_utility(r.min_util_abs, self.scale)
            d["n_huci_hg"] = r.n_huci_hg
            d["seconds"] = round(r.seconds, 4)
            out.append({c: d[c] for c in self.COLUMNS})
        return out

    def to_json(self) -> str:
        return json.dumps({"dataset": self.dataset, "rows": self.records()}, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=self.COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.records())
        return buf.getvalue()

    def to_text(self) -> str:
        head = f"{'min_util':>10} {'#HUI':>8} {'#HUCI':>8} {'#HG':>8} {'#HUCI+HG':>9} {'time(s)':>8}"
        lines = [head]
        for r, rec in zip(self.rows, self.records()):
            hg = "-" if r.self_generated_only else str(r.n_hg)
            lines.append(f"{r.min_util:>10} {r.n_hui:>8} {r.n_huci:>8} {hg:>8} {r.n_huci_hg:>9} {rec['seconds']:>8.3f}")
        return "\n".join(lines) + "\n"


def run_bench(db: TransactionDatabase, thresholds: Sequence, *, dataset: str = "", **mine_opts) -> BenchReport:
    if not thresholds:
        raise ValueError("bench needs at least one threshold")
    report = BenchReport(scale=db.scale, dataset=dataset)
    for spec in thresholds:
        min_util = resolve_min_util(spec, db)
        stats = MiningStats()
        start = time.perf_counter()
        huis = mine_hui(db, min_util, stats=stats, **mine_opts)
        closed = huci_miner(huis)
        elapsed = time.perf_counter() - start
        n_hg = count_generators(closed)
        report.rows.append(BenchRow(
            min_util=str(spec),
            min_util_abs=min_util,
            n_hui=len(huis),
            n_huci=len(closed),
            n_hg=n_hg,
            self_generated_only=bool(closed) and n_hg == 0,
            seconds=elapsed,
            peak_lists=stats.peak_lists,
        ))
    return report


def plot_bench(report: BenchReport, path) -> Path:
    """Counts against threshold, log-scaled when the spread is wide."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = sorted(report.rows, key=lambda r: r.min_util_abs)
    x = [r.min_util_abs / report.scale for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    series = [
        ("#HUI", [r.n_hui for r in rows], "o-"),
        ("#HUCI", [r.n_huci for r in rows], "s-"),
        ("#HG", [r.n_hg for r in rows], "^--"),
        ("#HUCI+HG", [r.n_huci_hg for r in rows], "d:"),
    ]
    for label, ys, style in series:
        ax.plot(x, ys, style, label=label)
    top = max((r.n_hui for r in rows), default=0)
    if top > 100 and min((r.n_huci for r in rows), default=0) > 0:
        ax.set_yscale("log")
    ax.set_xlabel("min_util")
    ax.set_ylabel("number of patterns")
    if report.dataset:
        ax.set_title(report.dataset)
    ax.legend(frameon=False)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


__all__ = ["BenchRow", "BenchReport", "run_bench", "plot_bench"]
