import random

import pytest
from hypothesis import strategies as st

from hucimine.dataset import TransactionDatabase, example_database, total_utility
from hucimine.mining import mine_hui

# the twenty itemsets of the worked example at min_util 20, with utilities
EXAMPLE_HUIS = {
    "A": 21, "B": 20, "D": 22, "G": 22, "E": 22, "F": 20,
    "AC": 31, "AE": 28, "BE": 21, "DF": 24, "BF": 23, "DE": 37, "FE": 36,
    "ACE": 38, "AFE": 20, "DFE": 36, "BDE": 23, "BFE": 22, "ACFE": 25, "BDFE": 24,
}

# closed itemset -> generators, from the worked listing
EXAMPLE_CLOSED = {
    "G": [], "F": [], "E": [], "BF": ["B"], "DE": ["D"], "FE": [],
    "ACE": ["A"], "DFE": ["DF"], "BDFE": ["BE"], "ACFE": ["AFE"],
}


def fs(letters):
    return frozenset(letters)


@pytest.fixture(scope="session")
def example_db():
    return example_database()


@pytest.fixture
def example_huis(example_db):
    return mine_hui(example_db, 20)


def random_database(rng: random.Random, max_items=8, max_tx=12, max_qty=5, max_eu=10):
    n_items = rng.randint(1, max_items)
    items = [chr(ord("A") + i) for i in range(n_items)]
    utilities = {i: rng.randint(1, max_eu) for i in items}
    rows = []
    for _ in range(rng.randint(1, max_tx)):
        chosen = rng.sample(items, rng.randint(1, n_items))
        rows.append([(i, rng.randint(1, max_qty)) for i in chosen])
    return TransactionDatabase.build(utilities, rows)


def fuzz_corpus(n=200, seed=20240521):
    """(db, min_util, min_conf) triples within the acceptance bounds."""
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        db = random_database(rng)
        min_util = rng.randint(1, total_utility(db))
        min_conf = rng.choice([0, 0.25, 0.5, 2 / 3, 0.8, 1])
        out.append((db, min_util, min_conf))
    return out


@st.composite
def databases(draw, max_items=6, max_tx=8, max_qty=5, max_eu=10):
    n_items = draw(st.integers(1, max_items))
    items = [chr(ord("A") + i) for i in range(n_items)]
    utilities = {i: draw(st.integers(1, max_eu)) for i in items}
    rows = draw(st.lists(
        st.lists(st.sampled_from(items), min_size=1, max_size=n_items, unique=True),
        min_size=1, max_size=max_tx,
    ))
    qty = st.integers(1, max_qty)
    return TransactionDatabase.build(utilities, [[(i, draw(qty)) for i in row] for row in rows])


@st.composite
def db_and_threshold(draw, **kw):
    db = draw(databases(**kw))
    return db, draw(st.integers(1, max(1, total_utility(db))))
