"""Quantitative transaction databases: parsing, serialization, generation.

Utilities are kept as integers.  External utilities that are not integral
(0.01, 2.5, ...) are handled through a fixed-point ``scale``: every item
carries an integer *unit value* ``round(external_utility * scale)`` and all
derived utilities are expressed in those scaled units.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from functools import cached_property
from typing import Hashable, Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

Item = Hashable


class DatabaseError(ValueError):
    """Raised for malformed or inconsistent database input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class ItemInfo:
    id: Item
    external_utility: Decimal | int = 1


@dataclass(frozen=True)
class Transaction:
    tid: int
    entries: tuple[tuple[Item, int], ...]

    @property
    def items(self) -> tuple[Item, ...]:
        return tuple(item for item, _ in self.entries)


def item_sort_key(item: Item):
    # ints sort numerically, everything else by its string form
    if isinstance(item, (int, np.integer)):
        return (0, int(item), "")
    return (1, 0, str(item))


def _to_decimal(value) -> Decimal:
    if isinstance(value, Decimal):
        return value
    try:
        return Decimal(str(value))
    except InvalidOperation:
        raise DatabaseError(f"not a number: {value!r}") from None


@dataclass(frozen=True)
class TransactionDatabase:
    """Immutable utility table plus transaction table.

    Build instances through :meth:`build`, the parsers, or
    :func:`generate_synthetic`; the constructor trusts its arguments.
    """

    items: tuple[ItemInfo, ...]
    transactions: tuple[Transaction, ...]
    scale: int = 1

    @classmethod
    def build(cls, utilities, transactions, scale: int = 1) -> "TransactionDatabase":
        """Validate and assemble a database.

        ``utilities`` maps item id to external utility; ``transactions`` is a
        sequence of ``(tid, [(item, quantity), ...])`` pairs or of bare entry
        lists (tids are then assigned 1, 2, ...).  Zero-quantity entries are
        dropped with a warning.
        """
        if scale < 1:
            raise DatabaseError("scale must be a positive integer")
        infos = []
        for item, eu in dict(utilities).items():
            eu = _to_decimal(eu)
            if eu < 0:
                raise DatabaseError(f"negative external utility for item {item!r}")
            if eu == eu.to_integral_value():
                eu = int(eu)
            infos.append(ItemInfo(item, eu))
        known = {info.id for info in infos}

        built = []
        seen_tids = set()
        for pos, tx in enumerate(transactions, start=1):
            if isinstance(tx, Transaction):
                tid, entries = tx.tid, tx.entries
            elif len(tx) == 2 and isinstance(tx[0], (int, np.integer)) and not isinstance(tx[1], (int, np.integer)):
                tid, entries = int(tx[0]), tx[1]
            else:
                tid, entries = pos, tx
            if tid in seen_tids:
                raise DatabaseError(f"duplicate tid {tid}")
            seen_tids.add(tid)
            kept = []
            present = set()
            for item, qty in entries:
                if item not in known:
                    raise DatabaseError(f"transaction {tid}: unknown item {item!r}")
                if item in present:
                    raise DatabaseError(f"transaction {tid}: duplicate item {item!r}")
                if int(qty) != qty:
                    raise DatabaseError(f"transaction {tid}: non-integer quantity {qty!r}")
                qty = int(qty)
                if qty < 0:
                    raise DatabaseError(f"transaction {tid}: negative quantity for {item!r}")
                present.add(item)
                if qty == 0:
                    log.warning("transaction %s: dropping zero-quantity entry for %r", tid, item)
                    continue
                kept.append((item, qty))
            built.append(Transaction(tid, tuple(kept)))

        db = cls(tuple(infos), tuple(built), scale)
        db.unit_values  # fail early on non-representable utilities
        return db

    # -- lookups -------------------------------------------------------

    @cached_property
    def unit_values(self) -> dict[Item, int]:
        """Integer utility of one unit of each item, in scaled units."""
        out = {}
        for info in self.items:
            scaled = _to_decimal(info.external_utility) * self.scale
            if scaled != scaled.to_integral_value():
                raise DatabaseError(
                    f"external utility {info.external_utility} of item {info.id!r} "
                    f"is not representable at scale {self.scale}"
                )
            out[info.id] = int(scaled)
        return out

    @cached_property
    def _by_tid(self) -> dict[int, Transaction]:
        return {t.tid: t for t in self.transactions}

    @cached_property
    def _utility_rows(self) -> dict[int, dict[Item, int]]:
        units = self.unit_values
        return {t.tid: {i: q * units[i] for i, q in t.entries} for t in self.transactions}

    def transaction(self, tid: int) -> Transaction:
        try:
            return self._by_tid[tid]
        except KeyError:
            raise KeyError(f"unknown tid {tid}") from None

    def utilities_of(self, tid: int) -> dict[Item, int]:
        """Item -> utility mapping of one transaction."""
        self.transaction(tid)
        return self._utility_rows[tid]

    @property
    def item_ids(self) -> list[Item]:
        return [info.id for info in self.items]

    def occurring_items(self) -> list[Item]:
        seen = {i for t in self.transactions for i, _ in t.entries}
        return sorted(seen, key=item_sort_key)

    def __len__(self) -> int:
        return len(self.transactions)

    def summary(self) -> dict:
        lengths = [len(t.entries) for t in self.transactions]
        return {
            "transactions": len(self.transactions),
            "items": len(self.items),
            "occurring_items": len(self.occurring_items()),
            "avg_length": (sum(lengths) / len(lengths)) if lengths else 0.0,
            "max_length": max(lengths, default=0),
            "total_utility": total_utility(self),
            "scale": self.scale,
        }


# -- utility measures ---------------------------------------------------


def item_utility(db: TransactionDatabase, item: Item, tid: int) -> int:
    return db.utilities_of(tid).get(item, 0)


def _containing(db: TransactionDatabase, itemset: Iterable[Item]):
    wanted = set(itemset)
    for t in db.transactions:
        row = db._utility_rows[t.tid]
        if wanted.issubset(row.keys()):
            yield row


def itemset_utility(db: TransactionDatabase, itemset: Iterable[Item]) -> int:
    """Utility of ``itemset`` summed over the transactions containing it."""
    wanted = set(itemset)
    if not wanted:
        return 0
    return sum(row[i] for row in _containing(db, wanted) for i in wanted)


def transaction_utility(db: TransactionDatabase, tid: int) -> int:
    return sum(db.utilities_of(tid).values())


def total_utility(db: TransactionDatabase) -> int:
    return sum(sum(row.values()) for row in db._utility_rows.values())


@dataclass(frozen=True)
class Support:
    count: int
    ratio: float | None  # None when the database is empty

    def __iter__(self):
        return iter((self.count, self.ratio))


def support(db: TransactionDatabase, itemset: Iterable[Item]) -> Support:
    count = sum(1 for _ in _containing(db, itemset))
    ratio = count / len(db) if len(db) else None
    return Support(count, ratio)


def format_utility(value: int, scale: int = 1) -> str:
    """Render a scaled integer utility in the database's natural units."""
    if scale == 1:
        return str(value)
    text = format(Decimal(value) / Decimal(scale), "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text


def utility_number(value: int, scale: int = 1):
    """JSON-friendly utility: int at scale 1, float otherwise."""
    return value if scale == 1 else value / scale


# -- parsers --------------------------------------------------------------


def _parse_item(token: str) -> Item:
    token = token.strip()
    if re.fullmatch(r"[+-]?\d+", token):
        return int(token)
    return token


def _lines(text: str):
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line[0] in "#%@":
            continue
        yield n, line


def parse_spmf(text: str) -> TransactionDatabase:
    """Parse ``i1 i2 ... ik:TU:u1 u2 ... uk`` lines.

    The per-item utilities already include the external utility, so each
    item gets external utility 1 and the quantities carry the utilities.
    """
    transactions = []
    items: set[Item] = set()
    for n, line in _lines(text):
        parts = line.split(":")
        if len(parts) != 3:
            raise DatabaseError("expected 'items:TU:utilities'", n)
        try:
            tx_items = [_parse_item(tok) for tok in parts[0].split()]
            tu = int(parts[1])
            utils = [int(tok) for tok in parts[2].split()]
        except ValueError as exc:
            raise DatabaseError(f"bad number ({exc})", n) from None
        if len(tx_items) != len(utils):
            raise DatabaseError(f"{len(tx_items)} items but {len(utils)} utilities", n)
        if sum(utils) != tu:
            raise DatabaseError(f"declared TU {tu} != sum of utilities {sum(utils)}", n)
        if len(set(tx_items)) != len(tx_items):
            raise DatabaseError("duplicate item in transaction", n)
        if any(u < 0 for u in utils):
            raise DatabaseError("negative utility", n)
        items.update(tx_items)
        transactions.append((len(transactions) + 1, list(zip(tx_items, utils))))
    utilities = {i: 1 for i in sorted(items, key=item_sort_key)}
    return TransactionDatabase.build(utilities, transactions)


_ENTRY = re.compile(r"^\s*([^()\s,;]+)\s*\(\s*([^()]*)\s*\)\s*$")


def parse_quantity_format(transactions: str, utilities: str, scale: int = 1) -> TransactionDatabase:
    """Parse the two-file format.

    ``transactions`` holds ``tid;item(qty),item(qty),...`` lines and
    ``utilities`` holds ``item,external_utility`` CSV lines (an optional
    header row is skipped).
    """
    table: dict[Item, Decimal] = {}
    for n, line in _lines(utilities):
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 2:
            raise DatabaseError("expected 'item,external_utility'", n)
        try:
            value = Decimal(fields[1])
        except InvalidOperation:
            if not table:  # header row
                continue
            raise DatabaseError(f"bad external utility {fields[1]!r}", n) from None
        item = _parse_item(fields[0])
        if item in table:
            raise DatabaseError(f"item {item!r} listed twice", n)
        if value < 0:
            raise DatabaseError(f"negative external utility for {item!r}", n)
        table[item] = value

    rows = []
    for n, line in _lines(transactions):
        if ";" not in line:
            raise DatabaseError("expected 'tid;item(qty),...'", n)
        head, body = line.split(";", 1)
        try:
            tid = int(head.strip().lstrip("tT"))
        except ValueError:
            raise DatabaseError(f"bad tid {head!r}", n) from None
        entries = []
        for chunk in filter(None, (c.strip() for c in body.split(","))):
            m = _ENTRY.match(chunk)
            if not m:
                raise DatabaseError(f"bad entry {chunk!r}", n)
            item = _parse_item(m.group(1))
            try:
                qty = int(m.group(2))
            except ValueError:
                raise DatabaseError(f"bad quantity in {chunk!r}", n) from None
            if item not in table:
                raise DatabaseError(f"item {item!r} missing from utility table", n)
            if qty < 0:
                raise DatabaseError(f"negative quantity in {chunk!r}", n)
            if any(item == e[0] for e in entries):
                raise DatabaseError(f"duplicate item {item!r}", n)
            entries.append((item, qty))
        rows.append((tid, entries))
    return TransactionDatabase.build(table, rows, scale=scale)


def serialize_spmf(db: TransactionDatabase) -> str:
    lines = []
    for t in db.transactions:
        row = db.utilities_of(t.tid)
        items = " ".join(str(i) for i, _ in t.entries)
        utils = " ".join(str(row[i]) for i, _ in t.entries)
        lines.append(f"{items}:{sum(row.values())}:{utils}")
    return "\n".join(lines) + ("\n" if lines else "")


def serialize_quantity_format(db: TransactionDatabase) -> tuple[str, str]:
    tx = "".join(
        f"{t.tid};" + ",".join(f"{i}({q})" for i, q in t.entries) + "\n" for t in db.transactions
    )
    ut = "".join(f"{info.id},{info.external_utility}\n" for info in db.items)
    return tx, ut


def read_database(path, utilities_path=None, fmt: str = "spmf", scale: int = 1) -> TransactionDatabase:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if fmt == "spmf":
        return parse_spmf(text)
    if fmt == "quantity2file":
        if utilities_path is None:
            raise DatabaseError("quantity2file format needs a utility table")
        with open(utilities_path, encoding="utf-8") as fh:
            return parse_quantity_format(text, fh.read(), scale=scale)
    raise DatabaseError(f"unknown format {fmt!r}")


# -- synthetic data -----------------------------------------------------------


def generate_synthetic(
    n_transactions: int,
    n_items: int,
    avg_len: float,
    quantity_max: int = 10,
    utility_params: Sequence[float] = (0.0, 1.0),
    seed: int = 0,
    n_patterns: int | None = None,
    avg_pattern_len: float = 4.0,
) -> TransactionDatabase:
    """Random quantitative database in the style of the IBM Quest generator.

    Transaction lengths are Poisson(``avg_len``) clipped to ``[1, n_items]``.
    Transactions are filled from a pool of correlated *potential patterns*
    (mean length ``avg_pattern_len``, picked with exponentially distributed
    weights), so frequent co-occurrences exist as in T10I4D100K.  Quantities
    are uniform in ``[1, quantity_max]``; external utilities are log-normal
    with ``utility_params = (mu, sigma)``, clamped to ``[0.01, 10]`` and
    rounded to cents (database scale 100).
    """
    if n_transactions < 0 or n_items < 1 or avg_len <= 0 or quantity_max < 1:
        raise ValueError("n_items, avg_len and quantity_max must be positive")
    if avg_len > n_items:
        raise ValueError(f"avg_len {avg_len} exceeds n_items {n_items}")
    rng = np.random.default_rng(seed)
    mu, sigma = utility_params

    raw = rng.lognormal(mu, sigma, size=n_items)
    prices = np.clip(np.round(raw, 2), 0.01, 10.0)
    utilities = {i + 1: Decimal(f"{p:.2f}") for i, p in enumerate(prices)}

    if n_patterns is None:
        n_patterns = 2 * n_items
    patterns = []
    prev = np.empty(0, dtype=np.int64)
    for _ in range(n_patterns):
        size = int(np.clip(rng.poisson(avg_pattern_len), 1, n_items))
        # half of each pattern is borrowed from the previous one
        n_shared = min(len(prev), int(rng.exponential(0.5) * size), size)
        shared = rng.choice(prev, size=n_shared, replace=False) if n_shared else prev[:0]
        fresh = rng.choice(n_items, size=min(n_items, size + n_shared), replace=False)
        fresh = np.setdiff1d(fresh, shared, assume_unique=True)
        pattern = np.concatenate([shared, rng.permutation(fresh)[: size - n_shared]])
        patterns.append(pattern)
        prev = pattern
    weights = rng.exponential(1.0, size=n_patterns)
    weights /= weights.sum()
    corruption = np.clip(rng.normal(0.5, 0.1, size=n_patterns), 0.0, 1.0)

    lengths = np.clip(rng.poisson(avg_len, size=n_transactions), 1, n_items)
    rows = []
    for tid, target in enumerate(lengths, start=1):
        chosen: dict[int, None] = {}
        attempts = 0
        while len(chosen) < target:
            attempts += 1
            if attempts > 8 * target:
                for i in rng.permutation(n_items):
                    chosen.setdefault(int(i))
                    if len(chosen) >= target:
                        break
                break
            k = rng.choice(n_patterns, p=weights)
            pat = patterns[k]
            keep = pat[rng.random(len(pat)) >= corruption[k] * rng.random()]
            for i in keep:
                chosen.setdefault(int(i))
        picked = list(chosen)[:target]
        qty = rng.integers(1, quantity_max + 1, size=len(picked))
        rows.append((tid, [(i + 1, int(q)) for i, q in zip(sorted(picked), qty)]))
    return TransactionDatabase.build(utilities, rows, scale=100)


def example_database() -> TransactionDatabase:
    """The nine-transaction example database with items A..H."""
    from importlib import resources

    data = resources.files("hucimine") / "data"
    return parse_quantity_format(
        (data / "example_transactions.txt").read_text(encoding="utf-8"),
        (data / "example_utilities.csv").read_text(encoding="utf-8"),
    )


def average_length(db: TransactionDatabase) -> float:
    if not db.transactions:
        return 0.0
    return sum(len(t.entries) for t in db.transactions) / len(db.transactions)


__all__ = [
    "DatabaseError",
    "ItemInfo",
    "Transaction",
    "TransactionDatabase",
    "Support",
    "item_utility",
    "itemset_utility",
    "transaction_utility",
    "total_utility",
    "support",
    "parse_spmf",
    "parse_quantity_format",
    "serialize_spmf",
    "serialize_quantity_format",
    "read_database",
    "generate_synthetic",
    "example_database",
    "format_utility",
    "utility_number",
    "item_sort_key",
    "average_length",
]
