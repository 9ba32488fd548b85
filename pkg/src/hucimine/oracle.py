"""Brute-force reference implementations for differential testing.

Everything here enumerates the power set of occurring items and applies the
definitions literally, with transaction bitsets for containment.  Nothing is
imported from the mining or closure code.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable

from .dataset import Item, TransactionDatabase, item_sort_key

DEFAULT_MAX_ITEMS = 16

UTILITY_FIRST = "utility-first"
SUPPORT_FIRST = "support-first"


class OracleCapError(ValueError):
    pass


class _Universe:
    """Support bitsets and utilities of every itemset with positive support."""

    def __init__(self, db: TransactionDatabase, max_items: int = DEFAULT_MAX_ITEMS):
        units = db.unit_values
        rows = [{i: q * units[i] for i, q in t.entries} for t in db.transactions]
        self.items = sorted({i for row in rows for i in row}, key=item_sort_key)
        if len(self.items) > max_items:
            raise OracleCapError(f"{len(self.items)} occurring items exceed the oracle cap of {max_items}")
        self.rows = rows
        self.all_tx = (1 << len(rows)) - 1
        self.masks = {i: sum(1 << n for n, row in enumerate(rows) if i in row) for i in self.items}
        self.table: dict[frozenset, tuple[int, int]] = {}
        n = len(self.items)
        tx_of = [self.all_tx] * (1 << n)
        for s in range(1, 1 << n):
            low = s & -s
            tx_of[s] = tx_of[s ^ low] & self.masks[self.items[low.bit_length() - 1]]
            if not tx_of[s]:
                continue
            members = [self.items[b] for b in range(n) if s >> b & 1]
            self.table[frozenset(members)] = (bin(tx_of[s]).count("1"), self._utility(members, tx_of[s]))

    def _utility(self, members, mask) -> int:
        total = 0
        for n, row in enumerate(self.rows):
            if mask >> n & 1:
                total += sum(row[i] for i in members)
        return total

    def tx_mask(self, itemset) -> int:
        mask = self.all_tx
        for i in itemset:
            mask &= self.masks.get(i, 0)
        return mask

    def support(self, itemset) -> int:
        return bin(self.tx_mask(itemset)).count("1")

    def closure(self, itemset) -> frozenset:
        mask = self.tx_mask(itemset)
        if not mask:
            raise ValueError(f"{sorted(itemset, key=item_sort_key)} has zero support")
        return frozenset(i for i in self.items if self.masks[i] & mask == mask)

    def luv(self, item, itemset) -> int:
        mask = self.tx_mask(itemset)
        return sum(row[item] for n, row in enumerate(self.rows) if mask >> n & 1)


def bruteforce_huis(db: TransactionDatabase, min_util: int, max_items: int = DEFAULT_MAX_ITEMS) -> dict[frozenset, tuple[int, int]]:
    """``{itemset: (support, utility)}`` for every itemset with utility >= min_util."""
    uni = _Universe(db, max_items)
    return {x: v for x, v in uni.table.items() if v[1] >= min_util}


def bruteforce_closure(db: TransactionDatabase, itemset: Iterable[Item]) -> frozenset:
    """Intersection of all transactions containing ``itemset``."""
    wanted = set(itemset)
    containing = [set(t.items) for t in db.transactions if wanted.issubset(t.items)]
    if not containing:
        raise ValueError(f"{sorted(wanted, key=item_sort_key)} has zero support")
    return frozenset(set.intersection(*containing))


@dataclass
class OracleClosed:
    itemset: frozenset
    support: int
    utility: int
    unit_array: dict
    generators: frozenset  # excludes the closed itemset itself
    self_generated: bool


def _proper_subsets(itemset: frozenset):
    items = sorted(itemset, key=item_sort_key)
    for n in range(1, len(items)):
        for sub in combinations(items, n):
            yield frozenset(sub)


def bruteforce_closures_and_generators(
    db: TransactionDatabase,
    min_util: int,
    ordering: str = UTILITY_FIRST,
    max_items: int = DEFAULT_MAX_ITEMS,
) -> dict[frozenset, OracleClosed]:
    """Closed high-utility itemsets with generators under either composition order.

    ``utility-first``: a generator is a high-utility itemset with no proper
    high-utility subset of equal support.  ``support-first``: a generator is
    an itemset with no proper subset of equal support, kept only if it is
    high utility.
    """
    if ordering not in (UTILITY_FIRST, SUPPORT_FIRST):
        raise ValueError(f"unknown ordering {ordering!r}")
    uni = _Universe(db, max_items)
    table = uni.table

    def is_generator(x: frozenset) -> bool:
        sup, util = table[x]
        if util < min_util:
            return False
        for z in _proper_subsets(x):
            zs, zu = table[z]
            if zs == sup and (ordering == SUPPORT_FIRST or zu >= min_util):
                return False
        return True

    out = {}
    for x, (sup, util) in table.items():
        if util < min_util or uni.closure(x) != x:
            continue
        gens = frozenset(z for z in _proper_subsets(x) if table[z][0] == sup and is_generator(z))
        out[x] = OracleClosed(
            itemset=x,
            support=sup,
            utility=util,
            unit_array={i: uni.luv(i, x) for i in x},
            generators=gens,
            self_generated=is_generator(x),
        )
    return out


def bruteforce_rules(db: TransactionDatabase, min_util: int, min_conf, max_items: int = DEFAULT_MAX_ITEMS) -> dict:
    """``{(antecedent, consequent): (support, confidence, u(union), u(antecedent))}``."""
    min_conf = Fraction(repr(min_conf)) if isinstance(min_conf, float) else Fraction(min_conf)
    huis = bruteforce_huis(db, min_util, max_items)
    out = {}
    for union, (s_union, u_union) in huis.items():
        for x in _proper_subsets(union):
            if x not in huis:
                continue
            s_x, u_x = huis[x]
            conf = Fraction(s_union, s_x)
            if conf >= min_conf:
                out[(x, union - x)] = (s_union, conf, u_union, u_x)
    return out


# -- verification -------------------------------------------------------------


@dataclass
class Mismatch:
    kind: str  # missing | extra | value-mismatch
    category: str  # hui | closed | generator | rule
    subject: str
    expected: object = None
    actual: object = None


@dataclass
class OracleReport:
    mismatches: list[Mismatch] = field(default_factory=list)
    checked: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "pass" if not self.mismatches else "fail"

    @property
    def passed(self) -> bool:
        return not self.mismatches

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "checked": self.checked,
            "mismatches": [asdict(m) for m in self.mismatches],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=str)


def _name(itemset) -> str:
    return "{" + ",".join(str(i) for i in sorted(itemset, key=item_sort_key)) + "}"


def _diff(report: OracleReport, category: str, expected: dict, actual: dict, label=_name):
    for key in expected.keys() - actual.keys():
        report.mismatches.append(Mismatch("missing", category, label(key), expected[key], None))
    for key in actual.keys() - expected.keys():
        report.mismatches.append(Mismatch("extra", category, label(key), None, actual[key]))
    for key in expected.keys() & actual.keys():
        if expected[key] != actual[key]:
            report.mismatches.append(Mismatch("value-mismatch", category, label(key), expected[key], actual[key]))


def _rule_name(key) -> str:
    return f"{_name(key[0])} ==> {_name(key[1])}"


def verify(
    db: TransactionDatabase,
    min_util: int,
    min_conf=None,
    *,
    huis=None,
    closed=None,
    rules=None,
    max_items: int = DEFAULT_MAX_ITEMS,
) -> OracleReport:
    """Diff engine outputs against the brute-force results.

    ``huis`` is any iterable of records with ``itemset``, ``support_count``
    and ``utility``; ``closed`` additionally needs ``unit_array`` and
    ``generators``; ``rules`` needs the rule fields.  Outputs left as None
    are not checked.
    """
    report = OracleReport()
    if huis is not None:
        expected = bruteforce_huis(db, min_util, max_items)
        actual = {frozenset(r.itemset): (r.support_count, r.utility) for r in huis}
        report.checked["huis"] = len(expected)
        _diff(report, "hui", expected, actual)

    if closed is not None:
        oracle = bruteforce_closures_and_generators(db, min_util, UTILITY_FIRST, max_items)
        expected = {k: (c.support, c.utility, c.unit_array) for k, c in oracle.items()}
        actual = {}
        actual_gens = {}
        for r in closed:
            key = frozenset(r.itemset)
            actual[key] = (r.support_count, r.utility, dict(zip(r.itemset, r.unit_array)))
            actual_gens[key] = {frozenset(g) for g in r.generators}
        report.checked["closed"] = len(expected)
        _diff(report, "closed", expected, actual)
        for key in expected.keys() & actual.keys():
            want = oracle[key].generators
            got = actual_gens[key]
            for g in want - got:
                report.mismatches.append(Mismatch("missing", "generator", f"{_name(g)} in {_name(key)}"))
            for g in got - want:
                report.mismatches.append(Mismatch("extra", "generator", f"{_name(g)} in {_name(key)}"))
            if not got and not oracle[key].self_generated:
                report.mismatches.append(Mismatch("value-mismatch", "generator", _name(key),
                                                  "not self-generated", "self-generated"))

    if rules is not None:
        if min_conf is None:
            raise ValueError("checking rules needs min_conf")
        expected = bruteforce_rules(db, min_util, min_conf, max_items)
        actual = {
            (frozenset(r.antecedent), frozenset(r.consequent)):
                (r.support_count, Fraction(r.confidence), r.utility_union, r.utility_antecedent)
            for r in rules
        }
        if len(actual) != len(list(rules)):
            report.mismatches.append(Mismatch("extra", "rule", "duplicate rules emitted"))
        report.checked["rules"] = len(expected)
        _diff(report, "rule", expected, actual, _rule_name)
    report.mismatches.sort(key=lambda m: (m.category, m.subject, m.kind))
    return report


__all__ = [
    "DEFAULT_MAX_ITEMS",
    "UTILITY_FIRST",
    "SUPPORT_FIRST",
    "OracleCapError",
    "OracleClosed",
    "Mismatch",
    "OracleReport",
    "bruteforce_huis",
    "bruteforce_closure",
    "bruteforce_closures_and_generators",
    "bruteforce_rules",
    "verify",
]
