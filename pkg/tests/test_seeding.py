import numpy as np

from hsicmap.seeding import generator, spawn_seeds


def test_children_are_reproducible_and_prefix_stable():
    assert spawn_seeds(7, 5) == spawn_seeds(7, 5)
    assert spawn_seeds(7, 3) == spawn_seeds(7, 5)[:3]
    assert len(set(spawn_seeds(7, 50))) == 50
    assert spawn_seeds(7, 2) != spawn_seeds(8, 2)


def test_generator_streams_repeat():
    a = generator(spawn_seeds(0, 1)[0]).standard_normal(4)
    b = generator(spawn_seeds(0, 1)[0]).standard_normal(4)
    np.testing.assert_array_equal(a, b)
