"""Command-line front end.

Subcommands: ``mine``, ``rules``, ``verify``, ``bench`` and ``gen``.
Exit codes: 0 ok, 1 usage error, 2 input error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .closure import closed_json, closed_line, huci_miner
from .dataset import (DatabaseError, format_utility, generate_synthetic, read_database,
                      serialize_quantity_format, serialize_spmf)
from .mining import THREADS_ENV, hui_json, hui_lines, mine_hui, resolve_min_util
from .oracle import DEFAULT_MAX_ITEMS, OracleCapError, verify
from .report import plot_bench, run_bench
from .rules import as_fraction, generate_valid_rules, rule_line, rules_json

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2, 3

log = logging.getLogger("hucimine")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    mode: str
    input: str | None = None
    utilities: str | None = None
    input_format: str = "spmf"
    scale: int = 1
    min_util: str | None = None
    min_conf: str = "0.5"
    output: str | None = None
    output_format: str = "text"
    seed: int = 7
    threads: int = 1
    use_eucs: bool = True
    prune_rutil: bool = True
    max_items: int = DEFAULT_MAX_ITEMS
    thresholds: list[str] = field(default_factory=list)
    figure: str | None = None

    def validate(self):
        if self.mode in ("hui", "huci", "rules") and self.min_util is None:
            raise UsageError("--min-util is required")
        if self.mode in ("hui", "huci", "rules", "bench") and self.input is None:
            raise UsageError("--input is required")
        if self.input_format == "quantity2file" and self.input and not self.utilities:
            raise UsageError("--utilities is required with --format quantity2file")
        if self.mode == "bench" and not self.thresholds:
            raise UsageError("--thresholds needs at least one value")
        try:
            conf = as_fraction(self.min_conf)
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"bad --min-conf {self.min_conf!r}") from None
        if not 0 <= conf <= 1:
            raise UsageError("--min-conf must be in [0, 1]")
        if self.threads < 1:
            raise UsageError("--threads must be positive")

    @property
    def mine_opts(self) -> dict:
        return {"use_eucs": self.use_eucs, "prune_rutil": self.prune_rutil, "threads": self.threads}


def _load(cfg: RunConfig):
    return read_database(cfg.input, cfg.utilities, cfg.input_format, scale=cfg.scale)


def _threshold(cfg: RunConfig, db) -> int:
    try:
        return resolve_min_util(cfg.min_util, db)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (" ".join(map(str, v)) if isinstance(v, list) else v) for k, v in row.items()})
    return buf.getvalue()


def _emit(cfg: RunConfig, text: str):
    if cfg.output:
        Path(cfg.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _lines(lines) -> str:
    lines = list(lines)
    return "\n".join(lines) + ("\n" if lines else "")


def _mine(cfg: RunConfig) -> int:
    db = _load(cfg)
    min_util = _threshold(cfg, db)
    log.info("min_util resolved to %s", format_utility(min_util, db.scale))
    huis = mine_hui(db, min_util, **cfg.mine_opts)
    fmt = cfg.output_format
    if cfg.mode == "hui":
        if fmt == "json":
            out = json.dumps(hui_json(huis), indent=2)
        elif fmt == "csv":
            out = _csv(hui_json(huis))
        else:
            out = _lines(hui_lines(huis))
    elif cfg.mode == "huci":
        closed = huci_miner(huis)
        if fmt == "json":
            out = json.dumps(closed_json(closed, db.scale), indent=2)
        elif fmt == "csv":
            out = _csv(closed_json(closed, db.scale))
        else:
            out = _lines(closed_line(c, db.scale) for c in closed)
    else:
        rules = generate_valid_rules(huis, cfg.min_conf)
        if fmt == "json":
            out = json.dumps(rules_json(rules, db.scale), indent=2)
        elif fmt == "csv":
            out = _csv(rules_json(rules, db.scale))
        else:
            out = _lines(rule_line(r, db.scale) for r in rules)
    _emit(cfg, out)
    return EXIT_OK


def _verify(cfg: RunConfig) -> int:
    if cfg.input:
        db = _load(cfg)
    else:
        db = generate_synthetic(12, min(8, cfg.max_items), 4, quantity_max=5, seed=cfg.seed)
    if cfg.min_util is None:
        cfg.min_util = "10%"
    min_util = _threshold(cfg, db)
    huis = mine_hui(db, min_util, **cfg.mine_opts)
    closed = huci_miner(huis)
    rules = generate_valid_rules(huis, cfg.min_conf)
    report = verify(db, min_util, as_fraction(cfg.min_conf), huis=huis, closed=closed, rules=rules,
                    max_items=cfg.max_items)
    if cfg.output_format == "text":
        out = f"verdict: {report.verdict}\n" + "".join(
            f"{m.kind} {m.category} {m.subject}\n" for m in report.mismatches)
    else:
        out = report.to_json() + "\n"
    _emit(cfg, out)
    return EXIT_OK if report.passed else EXIT_VERIFY


def _bench(cfg: RunConfig) -> int:
    db = _load(cfg)
    try:
        for spec in cfg.thresholds:
            resolve_min_util(spec, db)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = run_bench(db, cfg.thresholds, dataset=Path(cfg.input).name, **cfg.mine_opts)
    out = {"json": report.to_json() + "\n", "csv": report.to_csv()}.get(cfg.output_format, report.to_text())
    _emit(cfg, out)
    figure = cfg.figure
    if figure is None and cfg.output:
        figure = str(Path(cfg.output).with_suffix(".png"))
    if figure:
        plot_bench(report, figure)
    return EXIT_OK


def _gen(args) -> int:
    db = generate_synthetic(args.transactions, args.items, args.avg_len, quantity_max=args.quantity_max,
                            utility_params=(args.mu, args.sigma), seed=args.seed)
    if args.format == "spmf":
        text = serialize_spmf(db)
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return EXIT_OK
    if not args.output or not args.utilities:
        raise UsageError("quantity2file output needs --output and --utilities paths")
    tx, ut = serialize_quantity_format(db)
    Path(args.output).write_text(tx, encoding="utf-8")
    Path(args.utilities).write_text(ut, encoding="utf-8")
    return EXIT_OK


# -- argument parsing -----------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _input_args(p, required=True):
    p.add_argument("--input", "-i", required=required, help="transaction file")
    p.add_argument("--utilities", "-u", help="utility table (quantity2file format)")
    p.add_argument("--format", dest="input_format", choices=["spmf", "quantity2file"], default="spmf")
    p.add_argument("--scale", type=int, default=1,
                   help="fixed-point factor for fractional external utilities")


def _run_args(p):
    p.add_argument("--output", "-o", help="output path (default: stdout)")
    p.add_argument("--output-format", choices=["text", "json", "csv"], default="text")
    p.add_argument("--threads", type=int, default=1,
                   help=f"worker threads for the search (capped by ${THREADS_ENV})")
    p.add_argument("--no-eucs", dest="use_eucs", action="store_false",
                   help="disable pair co-occurrence pruning")
    p.add_argument("--no-rutil-prune", dest="prune_rutil", action="store_false",
                   help="disable remaining-utility pruning")


MIN_UTIL_HELP = ("absolute utility, or P%% of the total transaction utility "
                 "(rounded up to the next integer utility unit)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hucimine", description="High-utility closed itemsets, generators and rules.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("mine", help="mine HUIs or closed HUIs with generators")
    _input_args(p)
    p.add_argument("--min-util", required=True, help=MIN_UTIL_HELP)
    p.add_argument("--mode", choices=["hui", "huci", "rules"], default="huci")
    p.add_argument("--min-conf", default="0.5")
    _run_args(p)

    p = sub.add_parser("rules", help="valid utility-based association rules")
    _input_args(p)
    p.add_argument("--min-util", required=True, help=MIN_UTIL_HELP)
    p.add_argument("--min-conf", required=True)
    _run_args(p)

    p = sub.add_parser("verify", help="check the engine against the brute-force oracle")
    _input_args(p, required=False)
    p.add_argument("--min-util", help=MIN_UTIL_HELP + "; default 10%%")
    p.add_argument("--min-conf", default="0.5")
    p.add_argument("--max-items", type=int, default=DEFAULT_MAX_ITEMS, help="oracle enumeration cap")
    p.add_argument("--seed", type=int, default=7, help="seed of the generated database when --input is absent")
    _run_args(p)
    p.set_defaults(output_format="json")

    p = sub.add_parser("bench", help="pattern counts over a threshold sweep")
    _input_args(p)
    p.add_argument("--thresholds", required=True, help="comma-separated list, e.g. 0.1%%,0.05%%")
    p.add_argument("--figure", help="PNG path (default: next to --output)")
    _run_args(p)

    p = sub.add_parser("gen", help="write a synthetic database")
    p.add_argument("--transactions", type=int, default=1000)
    p.add_argument("--items", type=int, default=100)
    p.add_argument("--avg-len", type=float, default=10)
    p.add_argument("--quantity-max", type=int, default=10)
    p.add_argument("--mu", type=float, default=0.0, help="log-normal location of external utilities")
    p.add_argument("--sigma", type=float, default=1.0, help="log-normal scale of external utilities")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["spmf", "quantity2file"], default="spmf")
    p.add_argument("--output", "-o")
    p.add_argument("--utilities", "-u", help="utility table path (quantity2file)")
    return parser


def config_from_args(args) -> RunConfig:
    mode = {"mine": getattr(args, "mode", None), "rules": "rules", "verify": "verify", "bench": "bench"}[args.command]
    thresholds = [t.strip() for t in getattr(args, "thresholds", "").split(",") if t.strip()] \
        if getattr(args, "thresholds", None) else []
    return RunConfig(
        mode=mode,
        input=args.input,
        utilities=args.utilities,
        input_format=args.input_format,
        scale=args.scale,
        min_util=getattr(args, "min_util", None),
        min_conf=str(getattr(args, "min_conf", "0.5")),
        output=args.output,
        output_format=args.output_format,
        seed=getattr(args, "seed", 7),
        threads=args.threads,
        use_eucs=args.use_eucs,
        prune_rutil=args.prune_rutil,
        max_items=getattr(args, "max_items", DEFAULT_MAX_ITEMS),
        thresholds=thresholds,
        figure=getattr(args, "figure", None),
    )


def run(cfg: RunConfig) -> int:
    cfg.validate()
    if cfg.mode == "verify":
        return _verify(cfg)
    if cfg.mode == "bench":
        return _bench(cfg)
    return _mine(cfg)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors, --help, --version
        return exc.code or 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "gen":
            return _gen(args)
        return run(config_from_args(args))
    except UsageError as exc:
        print(f"hucimine: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DatabaseError, OSError, OracleCapError, UnicodeDecodeError) as exc:
        print(f"hucimine: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
