import numpy as np
import pytest

from rarepath.rng import derive_seed, stream


def test_same_key_same_stream():
    assert np.array_equal(stream(5, 3, "x").random(10), stream(5, 3, "x").random(10))


def test_keys_separate_streams():
    draws = {tuple(stream(5, *key).random(4)) for key in [(), (0,), (1,), ("x",), (0, "x"), (0, "y")]}
    assert len(draws) == 6
    assert not np.array_equal(stream(5).random(4), stream(6).random(4))


def test_stream_does_not_depend_on_creation_order():
    late = [stream(9, i, "t") for i in range(5)][::-1]
    early = [stream(9, i, "t") for i in reversed(range(5))]
    for a, b in zip(late, early):
        assert a.integers(0, 2**62) == b.integers(0, 2**62)


def test_derive_seed():
    s = derive_seed(1, "cohort")
    assert 0 <= s < 2**64
    assert s == derive_seed(1, "cohort") != derive_seed(1, "forest")


def test_full_64_bit_seeds():
    stream(2**64 - 1, 7).random()


def test_negative_key_rejected():
    with pytest.raises(ValueError):
        stream(1, -3)
