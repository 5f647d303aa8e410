import numpy as np

from hmmimo.rng import STAGES, stream


def test_streams_reproducible():
    a = stream(1, 2, "fading").standard_normal(5)
    b = stream(1, 2, "fading").standard_normal(5)
    np.testing.assert_array_equal(a, b)


def test_streams_distinct():
    draws = {(d, s): stream(0, d, s).integers(0, 2 ** 62) for d in range(4) for s in STAGES}
    assert len(set(draws.values())) == len(draws)
