"""Seeded random problem instances shared by solver and acceptance tests."""
import numpy as np

from cwefs.graph import GraphSet, build_affinity, build_laplacian


def random_instance(seed, ch=None, n=None, k=None, d=None):
    """Non-negative features in [0, 1], random binary labels, q=5 graphs."""
    rng = np.random.default_rng(seed)
    ch = ch if ch is not None else int(rng.choice([1, 2, 4]))
    n = n if n is not None else int(rng.integers(8, 31))
    k = k if k is not None else int(rng.choice([2, 3]))
    dims = [d if d is not None else int(rng.integers(2, 16)) for _ in range(ch)]
    Xs = [rng.uniform(size=(dv, n)) for dv in dims]
    Y = (rng.uniform(size=(k, n)) < 0.5).astype(float)
    q = min(5, n - 1)
    graphs = GraphSet(
        tuple(build_laplacian(build_affinity(x, q)) for x in Xs),
        build_laplacian(build_affinity(Y, q)),
    )
    return (Xs, Y), graphs


def suite(count=20, base=1000):
    """``count`` instances cycling ch over {1, 2, 4} and k over {2, 3}."""
    out = []
    for i in range(count):
        ch = (1, 2, 4)[i % 3]
        k = (2, 3)[i % 2]
        out.append(random_instance(base + i, ch=ch, k=k))
    return out
