import numpy as np

from vortexflow.rng import LCG

FIRST_U64 = [1442695040888963407, 1876011003808476466, 11166244414315200793]


def test_first_values_frozen():
    rng = LCG(0)
    assert [rng.next_u64() for _ in range(3)] == FIRST_U64


def test_uniform_from_top_bits():
    a, b = LCG(7), LCG(7)
    assert a.uniform() == (b.next_u64() >> 11) * 2.0 ** -53


def test_reproducible_and_in_range():
    a, b = LCG(42), LCG(42)
    xa, xb = a.uniform(-1, 2, (4, 5)), b.uniform(-1, 2, (4, 5))
    assert np.array_equal(xa, xb)
    assert xa.min() >= -1 and xa.max() < 2
    assert not np.array_equal(LCG(43).uniform(size=(4, 5)), LCG(42).uniform(size=(4, 5)))


def test_normal_moments():
    z = LCG(1).normal(20000)
    assert abs(z.mean()) < 0.03 and abs(z.std() - 1) < 0.03
    assert isinstance(LCG(1).normal(), float)


def test_integer_range():
    rng = LCG(5)
    vals = {rng.integer(2, 6) for _ in range(200)}
    assert vals == {2, 3, 4, 5}
