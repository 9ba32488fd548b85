"""High-utility itemset mining with utility-lists.

Depth-first search over itemsets ordered by ascending TWU.  Three pruning
devices are used, none of which changes the output:

* items whose TWU is below ``min_util`` never enter the search;
* an itemset is not extended when ``sum_iutil + sum_rutil < min_util``;
* a pairwise co-occurrence TWU table skips joins of item pairs whose
  combined TWU is already below ``min_util``.
"""

from __future__ import annotations

import logging
import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy import sparse

from .dataset import Item, TransactionDatabase, format_utility, item_sort_key, total_utility, utility_number

log = logging.getLogger(__name__)

THREADS_ENV = "HUCIMINE_MAX_THREADS"


# -- threshold handling ---------------------------------------------------------

_PCT = re.compile(r"^\s*([0-9]*\.?[0-9]+)\s*%\s*$")


def resolve_min_util(spec, db: TransactionDatabase) -> int:
    """Absolute threshold in the database's scaled units.

    ``spec`` is a number (natural units) or a string such as ``"20"`` or
    ``"0.5%"``; percentages are taken of the total utility and rounded up.
    """
    if isinstance(spec, str):
        m = _PCT.match(spec)
        if m:
            pct = Fraction(m.group(1))
            if not 0 < pct <= 100:
                raise ValueError(f"percentage threshold must be in (0, 100], got {spec!r}")
            return math.ceil(pct * total_utility(db) / 100)
        try:
            spec = Fraction(spec.strip())
        except ValueError:
            raise ValueError(f"bad min_util {spec!r}") from None
    value = Fraction(str(spec)) if isinstance(spec, float) else Fraction(spec)
    if value < 0:
        raise ValueError("min_util must be non-negative")
    return math.ceil(value * db.scale)


# -- TWU ------------------------------------------------------------------------


@dataclass
class TwuTable:
    twu: dict[Item, int]
    order: list[Item]  # ascending TWU, ties by item id

    @property
    def rank(self) -> dict[Item, int]:
        return {item: r for r, item in enumerate(self.order)}

    def sort(self, itemset: Iterable[Item]) -> tuple[Item, ...]:
        rank = self.rank
        return tuple(sorted(itemset, key=rank.__getitem__))

    def __getitem__(self, item):
        return self.twu[item]

    def __len__(self):
        return len(self.twu)


def compute_twu(db: TransactionDatabase) -> TwuTable:
    twu: dict[Item, int] = {}
    for t in db.transactions:
        row = db.utilities_of(t.tid)
        tu = sum(row.values())
        for item in row:
            twu[item] = twu.get(item, 0) + tu
    order = sorted(twu, key=lambda i: (twu[i], item_sort_key(i)))
    return TwuTable(twu, order)


def itemset_twu(db: TransactionDatabase, itemset: Iterable[Item]) -> int:
    wanted = set(itemset)
    total = 0
    for t in db.transactions:
        row = db.utilities_of(t.tid)
        if wanted.issubset(row.keys()):
            total += sum(row.values())
    return total


# -- utility-lists ------------------------------------------------------------


class UtilityList:
    """Tid-sorted (tid, iutil, rutil) triples of one itemset."""

    __slots__ = ("itemset", "tids", "iutils", "rutils", "sum_iutil", "sum_rutil")

    def __init__(self, itemset: tuple, tids, iutils, rutils):
        self.itemset = tuple(itemset)
        self.tids = np.asarray(tids, dtype=np.int64)
        self.iutils = np.asarray(iutils, dtype=np.int64)
        self.rutils = np.asarray(rutils, dtype=np.int64)
        self.sum_iutil = int(self.iutils.sum())
        self.sum_rutil = int(self.rutils.sum())

    @property
    def elements(self) -> list[tuple[int, int, int]]:
        return list(zip(self.tids.tolist(), self.iutils.tolist(), self.rutils.tolist()))

    @property
    def support(self) -> int:
        return len(self.tids)

    def __len__(self):
        return len(self.tids)

    def __repr__(self):
        return f"UtilityList({self.itemset!r}, n={len(self)}, iutil={self.sum_iutil}, rutil={self.sum_rutil})"


def build_initial_lists(db: TransactionDatabase, twu: TwuTable, min_util: int) -> list[UtilityList]:
    """One utility-list per item with ``twu >= min_util``, in TWU order.

    Remaining utilities only count surviving items.
    """
    if min_util < 0:
        raise ValueError("min_util must be non-negative")
    promising = [i for i in twu.order if twu.twu[i] >= min_util]
    rank = {item: r for r, item in enumerate(promising)}
    cols: list[tuple[list, list, list]] = [([], [], []) for _ in promising]
    for t in db.transactions:
        row = db.utilities_of(t.tid)
        kept = sorted((rank[i], u) for i, u in row.items() if i in rank)
        remaining = sum(u for _, u in kept)
        for r, u in kept:
            remaining -= u
            tids, iu, ru = cols[r]
            tids.append(t.tid)
            iu.append(u)
            ru.append(remaining)
    lists = []
    for item, (tids, iu, ru) in zip(promising, cols):
        order = np.argsort(tids, kind="stable")
        lists.append(UtilityList((item,), np.asarray(tids)[order], np.asarray(iu)[order], np.asarray(ru)[order]))
    return lists


def join_lists(px: UtilityList, py: UtilityList, prefix: UtilityList | None = None) -> UtilityList:
    """Utility-list of ``px.itemset + last(py)``."""
    if px.itemset[:-1] != py.itemset[:-1] or px.itemset[-1] == py.itemset[-1]:
        raise ValueError(f"prefix mismatch joining {px.itemset} and {py.itemset}")
    if prefix is not None and prefix.itemset != px.itemset[:-1]:
        raise ValueError(f"prefix {prefix.itemset} does not match {px.itemset[:-1]}")
    if prefix is None and len(px.itemset) > 1:
        raise ValueError("joining lists longer than one item needs the prefix list")

    xt, yt = px.tids, py.tids
    if len(xt) == 0 or len(yt) == 0:
        empty = np.empty(0, dtype=np.int64)
        return UtilityList(px.itemset + py.itemset[-1:], empty, empty, empty)
    pos = np.searchsorted(yt, xt)
    np.minimum(pos, len(yt) - 1, out=pos)
    hit = yt[pos] == xt
    ix = np.flatnonzero(hit)
    iy = pos[hit]
    iutils = px.iutils[ix] + py.iutils[iy]
    if prefix is not None and len(ix):
        ip = np.searchsorted(prefix.tids, xt[ix])
        iutils -= prefix.iutils[ip]
    return UtilityList(px.itemset + py.itemset[-1:], xt[ix], iutils, py.rutils[iy])


# -- mined itemsets -------------------------------------------------------------


@dataclass(slots=True)
class HuiRecord:
    itemset: tuple
    support_count: int
    utility: int
    closed: bool = True
    key: bool = True

    @property
    def items(self) -> frozenset:
        return frozenset(self.itemset)

    def __len__(self):
        return len(self.itemset)


class LeveledHuiSet:
    """High-utility itemsets partitioned by length (``levels[k]`` is H_k)."""

    def __init__(self, records: Iterable[HuiRecord] = (), *, min_util: int | None = None,
                 order: TwuTable | None = None, item_lists: dict | None = None, scale: int = 1):
        self.min_util = min_util
        self.order = order
        self.item_lists = item_lists or {}
        self.scale = scale
        self.levels: dict[int, list[HuiRecord]] = {}
        self._index: dict[frozenset, HuiRecord] = {}
        for rec in records:
            key = frozenset(rec.itemset)
            if len(key) != len(rec.itemset):
                raise ValueError(f"itemset with repeated items: {rec.itemset}")
            if key in self._index:
                raise ValueError(f"duplicate itemset {rec.itemset}")
            self._index[key] = rec
            self.levels.setdefault(len(key), []).append(rec)
        rank = order.rank if order is not None else None
        for level in self.levels.values():
            level.sort(key=lambda r: _itemset_key(r.itemset, rank))

    @property
    def max(self) -> int:
        return max(self.levels, default=0)

    def level(self, k: int) -> list[HuiRecord]:
        return self.levels.get(k, [])

    def lookup(self, itemset: Iterable[Item]) -> HuiRecord | None:
        return self._index.get(frozenset(itemset))

    def __contains__(self, itemset) -> bool:
        return frozenset(itemset) in self._index

    def __iter__(self) -> Iterator[HuiRecord]:
        for k in sorted(self.levels):
            yield from self.levels[k]

    def __len__(self):
        return len(self._index)

    def as_dict(self) -> dict[frozenset, tuple[int, int]]:
        return {k: (r.support_count, r.utility) for k, r in self._index.items()}


def _itemset_key(itemset: Sequence, rank: dict | None):
    if rank is None:
        return tuple(item_sort_key(i) for i in itemset)
    return tuple(rank[i] for i in itemset)


@dataclass
class MiningStats:
    joins: int = 0
    skipped_by_eucs: int = 0
    pruned_extensions: int = 0
    peak_lists: int = 0


# -- search ---------------------------------------------------------------------


def _cooccurrence_pairs(db, lists: list[UtilityList], min_util: int) -> set[tuple]:
    """Item pairs (as ranks) whose joint TWU reaches ``min_util``."""
    rank = {ul.itemset[0]: r for r, ul in enumerate(lists)}
    rows, cols, weights = [], [], []
    for n, t in enumerate(db.transactions):
        row = db.utilities_of(t.tid)
        tu = sum(row.values())
        for i in row:
            r = rank.get(i)
            if r is not None:
                rows.append(n)
                cols.append(r)
        weights.append(tu)
    shape = (len(db.transactions), len(lists))
    incidence = sparse.csr_matrix((np.ones(len(rows), dtype=np.int64), (rows, cols)), shape=shape)
    weighted = sparse.diags(np.asarray(weights, dtype=np.int64)) @ incidence
    pair_twu = (incidence.T @ weighted).tocoo()
    keep = (pair_twu.data >= min_util) & (pair_twu.row < pair_twu.col)
    return set(zip(pair_twu.row[keep].tolist(), pair_twu.col[keep].tolist()))


class _Search:
    def __init__(self, min_util: int, pairs: set | None, rank: dict, prune_rutil: bool):
        self.min_util = min_util
        self.pairs = pairs
        self.rank = rank
        self.prune_rutil = prune_rutil
        self.found: list[HuiRecord] = []
        self.stats = MiningStats()
        self._live = 0

    def run(self, prefix: UtilityList | None, exts: list[UtilityList]):
        self._live += len(exts)
        self.stats.peak_lists = max(self.stats.peak_lists, self._live)
        for i, x in enumerate(exts):
            self.visit(prefix, x, exts[i + 1:])
        self._live -= len(exts)

    def visit(self, prefix, x: UtilityList, rest: list[UtilityList]):
        min_util = self.min_util
        if x.sum_iutil >= min_util:
            self.found.append(HuiRecord(x.itemset, len(x), x.sum_iutil))
        if self.prune_rutil and x.sum_iutil + x.sum_rutil < min_util:
            self.stats.pruned_extensions += 1
            return
        rx = self.rank[x.itemset[-1]]
        children = []
        for y in rest:
            if self.pairs is not None and (rx, self.rank[y.itemset[-1]]) not in self.pairs:
                self.stats.skipped_by_eucs += 1
                continue
            self.stats.joins += 1
            xy = join_lists(x, y, prefix)
            if len(xy):
                children.append(xy)
        if children:
            self.run(x, children)


def _thread_count(threads: int | None) -> int:
    n = threads if threads is not None else 1
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            log.warning("ignoring non-integer %s=%r", THREADS_ENV, cap)
    return max(1, n)


def mine_hui(
    db: TransactionDatabase,
    min_util: int,
    *,
    use_eucs: bool = True,
    prune_rutil: bool = True,
    threads: int | None = None,
    stats: MiningStats | None = None,
) -> LeveledHuiSet:
    """All itemsets with positive support and utility >= ``min_util``.

    ``threads > 1`` spreads first-item subtrees over a thread pool; the
    result is identical to the sequential run.
    """
    if min_util < 0:
        raise ValueError("min_util must be non-negative")
    twu = compute_twu(db)
    lists = build_initial_lists(db, twu, min_util)
    rank = {ul.itemset[0]: r for r, ul in enumerate(lists)}
    pairs = _cooccurrence_pairs(db, lists, min_util) if use_eucs and lists else None

    n_threads = _thread_count(threads)

    def subtree(i: int) -> _Search:
        s = _Search(min_util, pairs, rank, prune_rutil)
        s.visit(None, lists[i], lists[i + 1:])
        return s

    if n_threads > 1 and len(lists) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            parts = list(pool.map(subtree, range(len(lists))))
    else:
        whole = _Search(min_util, pairs, rank, prune_rutil)
        whole.run(None, lists)
        parts = [whole]

    records = [rec for part in parts for rec in part.found]
    if stats is not None:
        for part in parts:
            stats.joins += part.stats.joins
            stats.skipped_by_eucs += part.stats.skipped_by_eucs
            stats.pruned_extensions += part.stats.pruned_extensions
            stats.peak_lists = max(stats.peak_lists, part.stats.peak_lists)
    item_lists = {ul.itemset[0]: ul for ul in lists}
    return LeveledHuiSet(records, min_util=min_util, order=twu, item_lists=item_lists, scale=db.scale)


# -- output -------------------------------------------------------------------


def format_itemset(itemset: Iterable, sep: str = " ") -> str:
    return sep.join(str(i) for i in itemset)


def hui_lines(huis: LeveledHuiSet) -> Iterator[str]:
    for rec in huis:
        yield f"{format_itemset(rec.itemset)} #SUP: {rec.support_count} #UTIL: {format_utility(rec.utility, huis.scale)}"


def hui_json(huis: LeveledHuiSet) -> list[dict]:
    return [
        {"itemset": list(rec.itemset), "support": rec.support_count,
         "utility": utility_number(rec.utility, huis.scale),
         "closed": rec.closed, "key": rec.key}
        for rec in huis
    ]


__all__ = [
    "TwuTable",
    "UtilityList",
    "HuiRecord",
    "LeveledHuiSet",
    "MiningStats",
    "compute_twu",
    "itemset_twu",
    "build_initial_lists",
    "join_lists",
    "mine_hui",
    "resolve_min_util",
    "hui_lines",
    "hui_json",
    "format_itemset",
]
