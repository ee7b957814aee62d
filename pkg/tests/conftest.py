import numpy as np
import pytest

from rftlab import GrowthTree, grow_tree_from_parents
from rftlab.tree import FrozenTree


def as_growth(frozen: FrozenTree) -> GrowthTree:
    """Replay a frozen tree back into a mutable GrowthTree."""
    return grow_tree_from_parents(frozen.parent[3 : frozen.n + 1].tolist())


@pytest.fixture
def growth_of():
    return as_growth
