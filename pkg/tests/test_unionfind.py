import doctest
import random

import oracles
from trustmesh import unionfind
from trustmesh.unionfind import UnionFind


def test_doctests():
    assert doctest.testmod(unionfind).failed == 0


def test_groups_match_components():
    rng = random.Random(0)
    for _ in range(50):
        n = rng.randint(1, 12)
        pairs = {(rng.randrange(n), rng.randrange(n)) for _ in range(rng.randint(0, n))}
        uf = UnionFind(range(n))
        for a, b in pairs:
            uf.union(a, b)
        linked = pairs | {(b, a) for a, b in pairs}
        expected = oracles.connected_components(n, lambda i, j: (i, j) in linked)
        assert sorted(sorted(g) for g in uf.groups()) == expected
