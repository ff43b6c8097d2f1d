import numpy as np

from gbspe.rng import NS_OUTER, NS_REPLICA, NS_SIDE, derive_rng


def test_same_key_same_stream():
    a = derive_rng(42, NS_OUTER, 3).random(10)
    b = derive_rng(42, NS_OUTER, 3).random(10)
    assert np.array_equal(a, b)


def test_namespaces_are_independent():
    streams = [
        derive_rng(42, NS_OUTER, 0).random(10),
        derive_rng(42, NS_SIDE, 0).random(10),
        derive_rng(42, NS_REPLICA, 0).random(10),
        derive_rng(43, NS_OUTER, 0).random(10),
        derive_rng(42, NS_OUTER, 1).random(10),
    ]
    for i in range(len(streams)):
        for j in range(i + 1, len(streams)):
            assert not np.array_equal(streams[i], streams[j])
