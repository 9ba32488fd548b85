"""High-utility itemset mining with closed itemsets, generators and rules."""

__version__ = "0.1.0"

from .closure import (ClosedRecord, GeneratorPool, assign_generators, compute_unit_array,
                      expand_class, huci_miner, local_utility_value)
from .dataset import (TransactionDatabase, example_database, generate_synthetic, item_utility,
                      itemset_utility, parse_quantity_format, parse_spmf, read_database, support,
                      total_utility, transaction_utility)
from .mining import (HuiRecord, LeveledHuiSet, UtilityList, build_initial_lists, compute_twu,
                     join_lists, mine_hui, resolve_min_util)
from .rules import UtilityRule, generate_valid_rules, rule_confidence
