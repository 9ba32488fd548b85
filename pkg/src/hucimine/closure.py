"""High-utility closed itemsets, their high-utility generators, unit arrays.

Post-processing over a complete :class:`LeveledHuiSet`.  Levels are
visited bottom-up: comparing each k-itemset with its (k-1)-subsets of equal
support clears the ``key`` flag of the larger and the ``closed`` flag of
the smaller.  Once the flags of level k-1 are final its closed itemsets
collect their generators from a pool of pending non-closed keys, after
which the level's own non-closed keys join the pool.

See ``docs/key_detection.md`` for why (k-1)-subsets are enough.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Iterator, Mapping

import numpy as np

from .dataset import Item, TransactionDatabase, format_utility, utility_number
from .mining import HuiRecord, LeveledHuiSet, UtilityList, format_itemset


class ClosureError(RuntimeError):
    """Internal inconsistency; indicates a bug upstream of the check."""


@dataclass
class ClosedRecord:
    itemset: tuple
    support_count: int
    utility: int
    unit_array: tuple = ()
    generators: list[tuple] = field(default_factory=list)

    @property
    def self_generated(self) -> bool:
        return not self.generators

    @property
    def items(self) -> frozenset:
        return frozenset(self.itemset)


class GeneratorPool:
    """Pending high-utility generators, indexed by their leading item."""

    def __init__(self):
        self._by_item: dict[Item, dict[frozenset, HuiRecord]] = {}
        self._size = 0

    def add(self, rec: HuiRecord):
        bucket = self._by_item.setdefault(rec.itemset[0], {})
        key = frozenset(rec.itemset)
        if key not in bucket:
            bucket[key] = rec
            self._size += 1

    def absorb(self, level: Iterable[HuiRecord]):
        for rec in level:
            if rec.key and not rec.closed:
                self.add(rec)

    def subsets_of(self, itemset: tuple) -> list[HuiRecord]:
        """Pool members that are proper subsets of ``itemset``."""
        target = frozenset(itemset)
        found = []
        for item in itemset:
            for key, rec in self._by_item.get(item, {}).items():
                if len(key) < len(target) and key <= target:
                    found.append(rec)
        return found

    def remove(self, rec: HuiRecord):
        bucket = self._by_item[rec.itemset[0]]
        del bucket[frozenset(rec.itemset)]
        if not bucket:
            del self._by_item[rec.itemset[0]]
        self._size -= 1

    def by_length(self) -> dict[int, list[HuiRecord]]:
        out: dict[int, list[HuiRecord]] = {}
        for rec in self:
            out.setdefault(len(rec.itemset), []).append(rec)
        return out

    def __iter__(self) -> Iterator[HuiRecord]:
        for bucket in self._by_item.values():
            yield from bucket.values()

    def __len__(self):
        return self._size

    def __contains__(self, itemset) -> bool:
        key = frozenset(itemset)
        return any(key in bucket for bucket in self._by_item.values())


def assign_generators(
    ch_level: Iterable[ClosedRecord],
    pool: GeneratorPool,
    level: Iterable[HuiRecord] = (),
    *,
    remove: bool = True,
    check_support: bool = True,
    rank: Mapping | None = None,
) -> list[ClosedRecord]:
    """Move every pool member below a closed itemset into its generators.

    ``level`` is the set of HUIs the closed itemsets were drawn from; its
    non-closed keys enter the pool afterwards.
    """
    ch_level = list(ch_level)
    for ch in ch_level:
        found = pool.subsets_of(ch.itemset)
        if rank is not None:
            found.sort(key=lambda r: (len(r.itemset), [rank[i] for i in r.itemset]))
        for g in found:
            if check_support and g.support_count != ch.support_count:
                raise ClosureError(
                    f"generator {g.itemset} (support {g.support_count}) assigned to "
                    f"{ch.itemset} (support {ch.support_count})"
                )
            if remove:
                pool.remove(g)
            ch.generators.append(g.itemset)
    pool.absorb(level)
    return ch_level


def _closed_of(level: list[HuiRecord]) -> list[ClosedRecord]:
    return [ClosedRecord(h.itemset, h.support_count, h.utility) for h in level if h.closed]


def huci_miner(
    huis: LeveledHuiSet,
    db: TransactionDatabase | None = None,
    *,
    remove_assigned: bool = True,
    check_support: bool = True,
) -> list[ClosedRecord]:
    """Closed itemsets of ``huis`` with their generators and unit arrays.

    Unit arrays come from the singleton utility-lists carried by ``huis``;
    pass ``db`` when the set was built without them.
    """
    top = huis.max
    if top == 0:
        return []
    for k, level in huis.levels.items():
        for h in level:
            if len(h.itemset) != k:
                raise ClosureError(f"{h.itemset} filed under level {k}")
            h.closed = True
            h.key = True

    rank = huis.order.rank if huis.order is not None else None
    pool = GeneratorPool()
    closed: list[ClosedRecord] = []

    for k in range(2, top + 1):
        for h in huis.level(k):
            for sub in combinations(h.itemset, k - 1):
                below = huis.lookup(sub)
                if below is not None and below.support_count == h.support_count:
                    h.key = False
                    below.closed = False
        prev = huis.level(k - 1)
        closed += assign_generators(_closed_of(prev), pool, prev,
                                    remove=remove_assigned, check_support=check_support, rank=rank)

    last = huis.level(top)
    closed += assign_generators(_closed_of(last), pool, last,
                                remove=remove_assigned, check_support=check_support, rank=rank)

    source = huis if huis.item_lists else db
    if source is None:
        raise ValueError("unit arrays need either utility-lists on the HUI set or the database")
    for rec in closed:
        rec.unit_array = compute_unit_array(source, rec.itemset)
        if sum(rec.unit_array) != rec.utility:
            raise ClosureError(f"unit array of {rec.itemset} does not sum to {rec.utility}")
    return closed


# -- utility unit arrays ------------------------------------------------------


def _intersect_tids(lists: list[UtilityList]) -> np.ndarray:
    lists = sorted(lists, key=len)
    tids = lists[0].tids
    for ul in lists[1:]:
        if not len(tids):
            break
        pos = np.searchsorted(ul.tids, tids)
        np.minimum(pos, max(len(ul.tids) - 1, 0), out=pos)
        tids = tids[ul.tids[pos] == tids] if len(ul.tids) else tids[:0]
    return tids


def compute_unit_array(source, itemset: Iterable[Item]) -> tuple[int, ...]:
    """Local utility of every item of ``itemset`` over the transactions holding it.

    ``source`` is a :class:`LeveledHuiSet` (or a mapping item -> singleton
    :class:`UtilityList`) or, as a fallback, the database itself.
    """
    itemset = tuple(itemset)
    if isinstance(source, TransactionDatabase):
        wanted = set(itemset)
        sums = dict.fromkeys(itemset, 0)
        hits = 0
        for t in source.transactions:
            row = source.utilities_of(t.tid)
            if wanted.issubset(row.keys()):
                hits += 1
                for i in itemset:
                    sums[i] += row[i]
        if not hits:
            raise ValueError(f"itemset {itemset} has zero support")
        return tuple(sums[i] for i in itemset)

    item_lists = source.item_lists if isinstance(source, LeveledHuiSet) else source
    try:
        lists = [item_lists[i] for i in itemset]
    except KeyError as exc:
        raise ValueError(f"no utility-list for item {exc.args[0]!r}") from None
    tids = _intersect_tids(lists) if lists else np.empty(0, dtype=np.int64)
    if not len(tids):
        raise ValueError(f"itemset {itemset} has zero support")
    return tuple(int(ul.iutils[np.searchsorted(ul.tids, tids)].sum()) for ul in lists)


def local_utility_value(record: ClosedRecord, itemset: Iterable[Item]) -> int:
    pos = {item: n for n, item in enumerate(record.itemset)}
    try:
        return sum(record.unit_array[pos[i]] for i in set(itemset))
    except KeyError as exc:
        raise ValueError(f"{exc.args[0]!r} is not in {record.itemset}") from None


def expand_class(record: ClosedRecord, min_util: int) -> list[HuiRecord]:
    """High-utility members of the closed itemset's equivalence class.

    Every itemset between a generator and the closed itemset shares its
    support; utilities are read off the unit array.
    """
    gens = record.generators or [record.itemset]
    full = record.items
    seen: dict[frozenset, HuiRecord] = {}
    gen_keys = {frozenset(g) for g in gens}
    for g in gens:
        base = frozenset(g)
        extra = [i for i in record.itemset if i not in base]
        for n in range(len(extra) + 1):
            for add in combinations(extra, n):
                members = base.union(add)
                if members in seen:
                    continue
                u = local_utility_value(record, members)
                if u < min_util:
                    continue
                ordered = tuple(i for i in record.itemset if i in members)
                seen[members] = HuiRecord(ordered, record.support_count, u,
                                          closed=members == full, key=members in gen_keys)
    return sorted(seen.values(), key=lambda r: (len(r.itemset), [record.itemset.index(i) for i in r.itemset]))


# -- output -------------------------------------------------------------------


def closed_line(rec: ClosedRecord, scale: int = 1) -> str:
    ua = ",".join(format_utility(u, scale) for u in rec.unit_array)
    gens = " | ".join(format_itemset(g) for g in rec.generators)
    return (
        f"CLOSED: {format_itemset(rec.itemset)} #SUP: {rec.support_count} "
        f"#UTIL: {format_utility(rec.utility, scale)} #UA: {ua} #GEN: [{gens}]"
    )


def closed_json(records: Iterable[ClosedRecord], scale: int = 1) -> list[dict]:
    return [
        {
            "itemset": list(r.itemset),
            "support": r.support_count,
            "utility": utility_number(r.utility, scale),
            "unit_array": [utility_number(u, scale) for u in r.unit_array],
            "generators": [list(g) for g in r.generators],
            "self_generated": r.self_generated,
        }
        for r in records
    ]


def dumps_closed(records: Iterable[ClosedRecord], scale: int = 1) -> str:
    return json.dumps(closed_json(records, scale), indent=2, default=str)


def count_generators(records: Iterable[ClosedRecord]) -> int:
    return sum(len(r.generators) for r in records)


__all__ = [
    "ClosedRecord",
    "ClosureError",
    "GeneratorPool",
    "assign_generators",
    "huci_miner",
    "compute_unit_array",
    "local_utility_value",
    "expand_class",
    "closed_line",
    "closed_json",
    "dumps_closed",
    "count_generators",
]
