import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hucimine.mining import LeveledHuiSet, mine_hui
from hucimine.oracle import bruteforce_rules
from hucimine.rules import as_fraction, dumps_rules, generate_valid_rules, rule_confidence, rule_line

from conftest import db_and_threshold, fs


def rule_map(rules):
    return {(frozenset(r.antecedent), frozenset(r.consequent)):
            (r.support_count, r.confidence, r.utility_union, r.utility_antecedent) for r in rules}


def find(rules, ante, cons):
    return next((r for r in rules if r.antecedent and set(r.antecedent) == set(ante)
                 and set(r.consequent) == set(cons)), None)


def test_a_implies_ce(example_huis):
    rule = find(generate_valid_rules(example_huis, 0.7), "A", "CE")
    assert (rule.support_count, rule.confidence, rule.utility_union, rule.utility_antecedent) == (2, 1, 38, 21)


def test_e_implies_d_threshold(example_huis):
    five_sevenths = Fraction(5, 7)
    assert find(generate_valid_rules(example_huis, five_sevenths), "E", "D").confidence == five_sevenths
    assert find(generate_valid_rules(example_huis, 0.71), "E", "D") is not None
    assert find(generate_valid_rules(example_huis, 0.72), "E", "D") is None


def test_example_count_at_07(example_huis):
    rules = generate_valid_rules(example_huis, 0.7)
    assert len(rules) == 21
    assert rule_line(rules[0]) == "B ==> F #SUP: 2 #CONF: 1 #UTIL: 23"
    assert rule_line(find(rules, "D", "FE")) == "D ==> F,E #SUP: 4 #CONF: 0.8 #UTIL: 36"


def test_consequent_need_not_be_hui(example_huis):
    rules = generate_valid_rules(example_huis, 0.7)
    rule = find(rules, "A", "C")
    assert example_huis.lookup(("C",)) is None and rule is not None


def test_matches_bruteforce_on_example(example_db, example_huis):
    for conf in (0, 0.5, 0.7, 0.8, 1):
        assert rule_map(generate_valid_rules(example_huis, conf)) == bruteforce_rules(example_db, 20, conf)


def test_empty_hui_set():
    assert generate_valid_rules(LeveledHuiSet(), 0.5) == []


def test_invalid_min_conf(example_huis):
    with pytest.raises(ValueError):
        generate_valid_rules(example_huis, 1.5)
    with pytest.raises(ValueError):
        generate_valid_rules(example_huis, -0.1)


def test_as_fraction_exact():
    assert as_fraction(0.7) == Fraction(7, 10)
    assert as_fraction("2/3") == Fraction(2, 3)
    assert as_fraction(1) == 1


def test_rule_confidence(example_db, example_huis):
    assert rule_confidence(example_db, "E", "D") == Fraction(5, 7)
    assert rule_confidence(example_huis, "E", "D") == Fraction(5, 7)
    with pytest.raises(ZeroDivisionError):
        rule_confidence(example_db, "Z", "A")
    with pytest.raises(KeyError):
        rule_confidence(example_huis, "C", "A")


def test_json_output(example_huis):
    data = json.loads(dumps_rules(generate_valid_rules(example_huis, 0.7)))
    ed = next(d for d in data if d["antecedent"] == ["E"] and d["consequent"] == ["D"])
    assert ed["confidence_ratio"] == [5, 7] and ed["utility_union"] == 37 and ed["utility_antecedent"] == 22


def test_rules_have_hui_antecedent_and_union(example_huis):
    for r in generate_valid_rules(example_huis, 0):
        assert r.antecedent and r.consequent
        assert not set(r.antecedent) & set(r.consequent)
        assert r.union in example_huis and fs(r.antecedent) in example_huis


@settings(max_examples=80, deadline=None)
@given(db_and_threshold(), st.sampled_from([0, 0.25, 0.5, 2 / 3, 0.8, 1]))
def test_differential(case, conf):
    db, min_util = case
    assert rule_map(generate_valid_rules(mine_hui(db, min_util), conf)) == bruteforce_rules(db, min_util, conf)


@settings(max_examples=40, deadline=None)
@given(db_and_threshold())
def test_raising_confidence_only_removes(case):
    db, min_util = case
    huis = mine_hui(db, min_util)
    previous = None
    for conf in (0, 0.3, 0.6, 0.9, 1):
        current = set(rule_map(generate_valid_rules(huis, conf)))
        if previous is not None:
            assert current <= previous
        previous = current
