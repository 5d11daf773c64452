import random
from pathlib import Path

import pytest

from hopkit import Entity, Relation, ReasoningInstance, Triplet, make_chain

GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture
def example_chain():
    """The running composer/spouse example used by every golden file."""
    return make_chain(
        "It Goes Like It Goes", "composer", "David Shire", "spouse", "Didi Conn"
    )


@pytest.fixture
def golden_dir():
    return GOLDEN_DIR


def random_chain(rng: random.Random, n_hops: int | None = None) -> ReasoningInstance:
    """A valid chain with distinct entity labels and label-safe characters."""
    if n_hops is None:
        n_hops = rng.choice([1, 2, 3])
    entities = [f"E{rng.randrange(10**6)}-{i}" for i in range(n_hops + 1)]
    relations = [f"rel{rng.randrange(100)}" for _ in range(n_hops)]
    hops = tuple(
        Triplet(Entity(entities[i]), Relation(relations[i]), Entity(entities[i + 1]))
        for i in range(n_hops)
    )
    return ReasoningInstance(hops=hops, source_id=f"chain-{rng.randrange(10**9)}")
