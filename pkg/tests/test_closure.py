import random

import pytest
from hypothesis import given, settings

from hucimine.closure import (
    ClosedRecord,
    ClosureError,
    GeneratorPool,
    assign_generators,
    closed_json,
    closed_line,
    compute_unit_array,
    expand_class,
    huci_miner,
    local_utility_value,
)
from hucimine.dataset import TransactionDatabase
from hucimine.mining import HuiRecord, LeveledHuiSet, compute_twu, mine_hui
from hucimine.oracle import bruteforce_closure, bruteforce_closures_and_generators, bruteforce_huis

from conftest import EXAMPLE_CLOSED, EXAMPLE_HUIS, db_and_threshold, fs, random_database


def closed_map(records):
    return {r.items: {frozenset(g) for g in r.generators} for r in records}


def by_name(records, name):
    return next(r for r in records if r.items == fs(name))


def test_example_listing(example_db, example_huis):
    closed = huci_miner(example_huis)
    assert closed_map(closed) == {fs(k): {fs(g) for g in v} for k, v in EXAMPLE_CLOSED.items()}
    for rec in closed:
        hui = example_huis.lookup(rec.itemset)
        assert (rec.support_count, rec.utility) == (hui.support_count, hui.utility)
    assert [len(r.generators) for r in closed if r.self_generated] == [0, 0, 0, 0]
    assert {"".join(r.itemset) for r in closed if r.self_generated} == {"G", "F", "E", "FE"}


def test_example_flags(example_huis):
    huci_miner(example_huis)
    flags = {"".join(r.itemset): (r.closed, r.key) for r in example_huis}
    assert flags["AE"] == (False, False)
    assert flags["AFE"] == (False, True)
    assert flags["FE"] == (True, True)
    assert flags["BDE"] == (False, False)


def test_only_singletons():
    db = TransactionDatabase.build({"A": 3, "B": 4}, [[("A", 1), ("B", 1)], [("A", 2)]])
    huis = LeveledHuiSet([HuiRecord(("A",), 2, 9), HuiRecord(("B",), 1, 4)], order=compute_twu(db))
    closed = huci_miner(huis, db)
    assert [(r.itemset, r.generators) for r in closed] == [(("B",), []), (("A",), [])]
    assert all(r.self_generated for r in closed)


def test_empty_input():
    assert huci_miner(LeveledHuiSet()) == []


def test_inconsistent_levels_rejected(example_huis):
    example_huis.levels[2].append(HuiRecord(("A", "C", "E"), 2, 38))
    with pytest.raises(ClosureError):
        huci_miner(example_huis)


def test_missing_unit_array_source():
    huis = LeveledHuiSet([HuiRecord(("A",), 1, 3)])
    with pytest.raises(ValueError, match="unit arrays"):
        huci_miner(huis)


def rec(name, sup, util):
    return HuiRecord(tuple(name), sup, util, closed=False, key=True)


def test_assign_level_two():
    pool = GeneratorPool()
    for r in (rec("B", 2, 20), rec("D", 5, 22), rec("A", 2, 21)):
        pool.add(r)
    level = [ClosedRecord(tuple("BF"), 2, 23), ClosedRecord(tuple("DE"), 5, 37), ClosedRecord(tuple("FE"), 5, 36)]
    out = assign_generators(level, pool)
    assert [r.generators for r in out] == [[("B",)], [("D",)], []]
    assert [r.itemset for r in pool] == [("A",)]


def test_assign_level_four():
    pool = GeneratorPool()
    pool.add(rec("BE", 1, 21))
    pool.add(rec("AFE", 1, 20))
    level = [ClosedRecord(tuple("BDFE"), 1, 24), ClosedRecord(tuple("ACFE"), 1, 25)]
    out = assign_generators(level, pool)
    assert [r.generators for r in out] == [[tuple("BE")], [tuple("AFE")]]
    assert len(pool) == 0


def test_assign_empty_pool_and_absorb():
    pool = GeneratorPool()
    level = [ClosedRecord(tuple("BF"), 2, 23)]
    hui_level = [rec("BE", 1, 21), HuiRecord(tuple("BF"), 2, 23, closed=True, key=False),
                 HuiRecord(tuple("FE"), 5, 36, closed=True, key=True)]
    out = assign_generators(level, pool, hui_level)
    assert out[0].generators == []
    assert [r.itemset for r in pool] == [tuple("BE")]
    assert tuple("BE") in pool and 2 in pool.by_length()


def test_assign_support_mismatch_raises():
    pool = GeneratorPool()
    pool.add(rec("B", 2, 20))
    with pytest.raises(ClosureError, match="support"):
        assign_generators([ClosedRecord(tuple("BDFE"), 1, 24)], pool)


def test_unit_array_example(example_db, example_huis):
    assert compute_unit_array(example_huis, "ACE") == (21, 10, 7)
    assert compute_unit_array(example_db, "ACE") == (21, 10, 7)
    assert compute_unit_array(example_huis, "G") == (22,)
    assert compute_unit_array(example_huis.item_lists, ("B", "F")) == (20, 3)


def test_unit_array_bf_against_direct_sum(example_db):
    # luv(x, BF) summed over the transactions containing both B and F
    tids = [t.tid for t in example_db.transactions if {"B", "F"} <= set(t.items)]
    want = tuple(sum(example_db.utilities_of(t)[i] for t in tids) for i in "BF")
    assert compute_unit_array(example_db, "BF") == want == (20, 3)
    assert sum(want) == 23


def test_unit_array_zero_support(example_db, example_huis):
    with pytest.raises(ValueError, match="zero support"):
        compute_unit_array(example_huis, "AG")
    with pytest.raises(ValueError, match="zero support"):
        compute_unit_array(example_db, "AG")


def test_local_utility_value(example_huis):
    closed = huci_miner(example_huis)
    ace = by_name(closed, "ACE")
    assert local_utility_value(ace, "AE") == 28
    assert local_utility_value(ace, "C") == 10
    for r in closed:
        assert local_utility_value(r, r.itemset) == r.utility == sum(r.unit_array)
        assert len(r.unit_array) == len(r.itemset) and min(r.unit_array) >= 0
    with pytest.raises(ValueError):
        local_utility_value(ace, "AB")


def test_expand_acfe(example_huis):
    closed = huci_miner(example_huis)
    members = {"".join(r.itemset): r.utility for r in expand_class(by_name(closed, "ACFE"), 20)}
    assert members == {"AFE": 20, "ACFE": 25}
    assert members == {k: v for k, v in EXAMPLE_HUIS.items() if set(k) <= set("ACFE")
                       and example_huis.lookup(k).support_count == 1}


def test_expand_self_generated(example_huis):
    closed = huci_miner(example_huis)
    fe = by_name(closed, "FE")
    assert [(r.itemset, r.utility) for r in expand_class(fe, 20)] == [(tuple("FE"), 36)]


def test_expand_union_is_lossless(example_huis):
    closed = huci_miner(example_huis)
    union = {}
    for r in closed:
        for m in expand_class(r, 20):
            assert m.support_count == r.support_count
            union[m.items] = m.utility
    assert union == {fs(k): v for k, v in EXAMPLE_HUIS.items()}


def test_output_formats(example_huis):
    closed = huci_miner(example_huis)
    assert closed_line(by_name(closed, "ACFE")) == "CLOSED: A C F E #SUP: 1 #UTIL: 25 #UA: 12,5,2,6 #GEN: [A F E]"
    assert closed_line(by_name(closed, "G")) == "CLOSED: G #SUP: 2 #UTIL: 22 #UA: 22 #GEN: []"
    js = closed_json(closed)
    assert js[0] == {"itemset": ["G"], "support": 2, "utility": 22, "unit_array": [22],
                     "generators": [], "self_generated": True}


def test_removal_disabled_attaches_b_to_bdfe(example_huis):
    closed = huci_miner(example_huis, remove_assigned=False, check_support=False)
    assert ("B",) in by_name(closed, "BDFE").generators
    with pytest.raises(ClosureError):
        huci_miner(example_huis, remove_assigned=False)


# -- invariants over random databases -------------------------------------------


def supports(db, itemset):
    return sum(1 for t in db.transactions if set(itemset) <= set(t.items))


@settings(max_examples=80, deadline=None)
@given(db_and_threshold())
def test_matches_oracle(case):
    db, min_util = case
    closed = huci_miner(mine_hui(db, min_util))
    oracle = bruteforce_closures_and_generators(db, min_util)
    assert closed_map(closed) == {k: set(v.generators) for k, v in oracle.items()}
    for r in closed:
        o = oracle[r.items]
        assert (r.support_count, r.utility) == (o.support, o.utility)
        assert dict(zip(r.itemset, r.unit_array)) == o.unit_array
        assert r.self_generated == o.self_generated


@settings(max_examples=60, deadline=None)
@given(db_and_threshold())
def test_generator_support_and_definition(case):
    db, min_util = case
    huis = bruteforce_huis(db, min_util)
    for r in huci_miner(mine_hui(db, min_util)):
        for g in r.generators:
            g = frozenset(g)
            assert g < r.items
            assert supports(db, g) == r.support_count
            assert huis[g][1] >= min_util
            assert not any(z < g and huis[z][0] == r.support_count for z in huis)


@settings(max_examples=60, deadline=None)
@given(db_and_threshold())
def test_idempotent_on_closed_output(case):
    db, min_util = case
    huis = mine_hui(db, min_util)
    closed = huci_miner(huis)
    again = LeveledHuiSet((HuiRecord(r.itemset, r.support_count, r.utility) for r in closed),
                          order=huis.order, item_lists=huis.item_lists)
    rerun = huci_miner(again)
    assert {r.items for r in rerun} == {r.items for r in closed}
    assert all(r.self_generated for r in rerun)
    assert {r.items: r.unit_array for r in rerun} == {r.items: r.unit_array for r in closed}


@settings(max_examples=60, deadline=None)
@given(db_and_threshold())
def test_key_flags_follow_min_subset_support(case):
    db, min_util = case
    huis = mine_hui(db, min_util)
    huci_miner(huis)
    for h in huis:
        subs = [huis.lookup(h.items - {x}) for x in h.itemset] if len(h.itemset) > 1 else []
        subs = [s.support_count for s in subs if s is not None]
        expect_key = not subs or h.support_count != min(subs)
        assert h.key == expect_key, h


@settings(max_examples=60, deadline=None)
@given(db_and_threshold())
def test_equal_support_means_same_class(case):
    db, min_util = case
    huis = mine_hui(db, min_util)

    def tids(x):
        return {t.tid for t in db.transactions if set(x) <= set(t.items)}

    for r in huci_miner(huis):
        for x in r.itemset:
            rest = r.items - {x}
            if rest and rest in huis:
                assert (tids(r.items) == tids(rest)) == (supports(db, r.items) == supports(db, rest))


@settings(max_examples=60, deadline=None)
@given(db_and_threshold())
def test_closure_of_every_hui_is_reported(case):
    db, min_util = case
    huis = mine_hui(db, min_util)
    closed = {r.items for r in huci_miner(huis)}
    for h in huis:
        assert bruteforce_closure(db, h.itemset) in closed


@settings(max_examples=60, deadline=None)
@given(db_and_threshold())
def test_generator_local_utility_below_class_members(case):
    db, min_util = case
    huis = mine_hui(db, min_util)
    for r in huci_miner(huis):
        luv = dict(zip(r.itemset, r.unit_array))
        members = [h.items for h in huis if h.items <= r.items and h.support_count == r.support_count]
        for g in map(frozenset, r.generators):
            for other in members:
                if g < other:
                    lo, hi = local_utility_value(r, g), local_utility_value(r, other)
                    assert lo <= hi
                    if all(luv[i] > 0 for i in other - g):
                        assert lo < hi


def test_lossless_on_random_databases():
    rng = random.Random(5)
    for _ in range(60):
        db = random_database(rng)
        min_util = rng.randint(1, sum(sum(db.utilities_of(t.tid).values()) for t in db.transactions))
        huis = mine_hui(db, min_util)
        union = {}
        for r in huci_miner(huis):
            for m in expand_class(r, min_util):
                union[m.items] = (m.support_count, m.utility)
        assert union == {h.items: (h.support_count, h.utility) for h in huis}
