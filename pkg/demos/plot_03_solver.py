"""
Fitting the channel-weighted factorization
==========================================

Alternating multiplicative updates drive the objective down monotonically.
The channel weights come from a closed-form step that favours channels
with smaller reconstruction cost.
"""

import numpy as np

from cwefs import HyperParams, build_graphs, generate_synthetic, normalize_features, solve

data, _ = generate_synthetic(ch=3, d_per_channel=20, n=60, k=3,
                             relevant_per_channel=4, noise_sigma=0.05, seed=1)
data = normalize_features(data)
graphs = build_graphs(data, q=5, sigma=1.0)

###############################################################################
# Run with the default weights (0.1 on every regulariser, gamma = 2).
state = solve(data, graphs, HyperParams(max_iters=200), seed=0)
trace = np.array(state.objective_trace)
print("sweeps:", len(trace) - 1)
for i in (0, 1, 5, 20, len(trace) - 1):
    print(f"  sweep {i:>3}: {trace[i]:.6f}")
print("monotone:", bool(np.all(np.diff(trace) <= 1e-9 * trace[:-1])))
print("channel weights:", np.round(state.alpha, 4))

###############################################################################
# A larger gamma pushes the weights toward uniform.
for gamma in (1.5, 2.0, 8.0):
    st = solve(data, graphs, HyperParams(gamma=gamma, max_iters=200), seed=0)
    print(f"gamma {gamma}: alpha = {np.round(st.alpha, 4)}")
