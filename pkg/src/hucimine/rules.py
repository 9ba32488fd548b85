"""Valid utility-based association rules.

A rule ``X ==> Y`` is valid when both ``X`` and ``X u Y`` are high-utility
itemsets and its confidence reaches ``min_conf``.  The consequent itself
need not be high utility.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable

from .dataset import Item, TransactionDatabase, format_utility, support, utility_number
from .mining import LeveledHuiSet, format_itemset


@dataclass(frozen=True)
class UtilityRule:
    antecedent: tuple
    consequent: tuple
    support_count: int
    confidence: Fraction
    utility_union: int
    utility_antecedent: int

    @property
    def union(self) -> frozenset:
        return frozenset(self.antecedent) | frozenset(self.consequent)


def as_fraction(value) -> Fraction:
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def generate_valid_rules(huis: LeveledHuiSet, min_conf) -> list[UtilityRule]:
    min_conf = as_fraction(min_conf)
    if not 0 <= min_conf <= 1:
        raise ValueError(f"min_conf must be in [0, 1], got {min_conf}")
    rank = huis.order.rank if huis.order is not None else None
    rules = []
    for union in huis:
        k = len(union.itemset)
        for n in range(1, k):
            for ante in combinations(union.itemset, n):
                x = huis.lookup(ante)
                if x is None:
                    continue
                # cross-multiplied: supp(union) / supp(x) >= p / q
                if union.support_count * min_conf.denominator < min_conf.numerator * x.support_count:
                    continue
                cons = tuple(i for i in union.itemset if i not in ante)
                rules.append(UtilityRule(
                    x.itemset, cons, union.support_count,
                    Fraction(union.support_count, x.support_count),
                    union.utility, x.utility,
                ))
    if rank is not None:
        rules.sort(key=lambda r: (len(r.union), sorted(_ranks(r.union, rank)),
                                  len(r.antecedent), _ranks(r.antecedent, rank)))
    return rules


def _ranks(itemset, rank):
    return [rank[i] for i in itemset]


def rule_confidence(source, antecedent: Iterable[Item], consequent: Iterable[Item]) -> Fraction:
    """Exact confidence from either a database or a mined HUI set."""
    ante = frozenset(antecedent)
    both = ante | frozenset(consequent)
    if isinstance(source, TransactionDatabase):
        s_ante = support(source, ante).count
        s_both = support(source, both).count
    else:
        x, xy = source.lookup(ante), source.lookup(both)
        if x is None or xy is None:
            raise KeyError("both the antecedent and the union must be in the HUI set")
        s_ante, s_both = x.support_count, xy.support_count
    if s_ante == 0:
        raise ZeroDivisionError(f"antecedent {sorted(ante, key=str)} has zero support")
    return Fraction(s_both, s_ante)


def rule_line(rule: UtilityRule, scale: int = 1) -> str:
    return (
        f"{format_itemset(rule.antecedent, ',')} ==> {format_itemset(rule.consequent, ',')} "
        f"#SUP: {rule.support_count} #CONF: {float(rule.confidence):.6g} "
        f"#UTIL: {format_utility(rule.utility_union, scale)}"
    )


def rules_json(rules: Iterable[UtilityRule], scale: int = 1) -> list[dict]:
    return [
        {
            "antecedent": list(r.antecedent),
            "consequent": list(r.consequent),
            "support": r.support_count,
            "confidence": float(r.confidence),
            "confidence_ratio": [r.confidence.numerator, r.confidence.denominator],
            "utility_union": utility_number(r.utility_union, scale),
            "utility_antecedent": utility_number(r.utility_antecedent, scale),
        }
        for r in rules
    ]


def dumps_rules(rules: Iterable[UtilityRule], scale: int = 1) -> str:
    return json.dumps(rules_json(rules, scale), indent=2, default=str)


__all__ = ["UtilityRule", "generate_valid_rules", "rule_confidence", "rule_line", "rules_json", "dumps_rules"]
