"""
Heat-kernel neighbour graphs
============================

Affinity graphs link each instance to its q nearest neighbours (in either
direction) with weight exp(-d^2 / sigma^2). Their Laplacians penalise latent
codes that differ across linked instances.
"""

import numpy as np

from cwefs import build_affinity, build_laplacian

###############################################################################
# Three points on a line at 0, 1 and 10 with q = 1. Points 0 and 1 are mutual
# nearest neighbours; 10's nearest is 1, so that pair is linked too.
graph = build_affinity(np.array([[0.0, 1.0, 10.0]]), q=1, sigma=1.0)
np.set_printoptions(precision=4, suppress=True)
print(graph.S)
# the (1, 10) weight is exp(-81): tiny but present in the sparsity pattern
print(graph.S > 0)

###############################################################################
# The Laplacian L = G - S has zero row sums and a non-negative quadratic form.
lap = build_laplacian(graph)
print(lap.L)
print("row sums:", lap.L.sum(axis=1))

rng = np.random.default_rng(0)
pts = rng.uniform(size=(4, 30))
lap = build_laplacian(build_affinity(pts, q=5))
print("smallest eigenvalue:", np.linalg.eigvalsh(lap.L).min())

###############################################################################
# Scaling every point and sigma by the same factor leaves the graph unchanged.
same = build_affinity(7.0 * pts, q=5, sigma=7.0)
print("identical after rescaling:", np.allclose(same.S, lap.S))
