"""
Planted multi-channel data
==========================

Build a small synthetic dataset whose features are generated from a shared
non-negative latent representation, then look at what was planted.
"""

import numpy as np

from cwefs import generate_synthetic, normalize_features

###############################################################################
# Three channels of 20 features each; 4 rows per channel carry signal.
data, truth = generate_synthetic(ch=3, d_per_channel=20, n=60, k=3,
                                 relevant_per_channel=4, noise_sigma=0.05, seed=0)
print("channels:", data.ch, "features per channel:", data.feature_counts)
print("instances:", data.n, "labels:", data.k)

###############################################################################
# Relevant rows are the only ones with planted loadings, so they carry most of
# the energy. Noise rows are clipped Gaussian and much weaker.
for v, x in enumerate(data.X):
    rel = sorted(f for c, f in truth.relevant_features if c == v)
    energy = np.linalg.norm(x, axis=1)
    mask = np.zeros(x.shape[0], bool)
    mask[rel] = True
    print(f"channel {v}: relevant rows {rel}, "
          f"mean norm relevant {energy[mask].mean():.3f} vs other {energy[~mask].mean():.3f}")

###############################################################################
# Labels come from thresholding raw scores; the solver needs binary labels and
# features scaled to [0, 1] per row.
print("positive rate per label:", data.labels_binary.mean(axis=1))
data = normalize_features(data)
print("feature range after normalization:", min(x.min() for x in data.X), max(x.max() for x in data.X))

###############################################################################
# Subjects are contiguous blocks of instances, which the subject-wise split
# keeps together.
print("subjects:", sorted(set(data.subject_ids)))
