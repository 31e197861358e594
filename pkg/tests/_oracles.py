"""Independent reference implementations used as test oracles.

These are deliberately naive (pure Python loops, exact fractions) and share
no code with the package.
"""
from fractions import Fraction

import numpy as np


def mlknn_exact(train_X, train_Y, test_X, K, s=1):
    """ML-KNN with exact rational arithmetic.

    ``train_X``/``test_X`` are lists of coordinate tuples (one per instance),
    ``train_Y`` is a list of label tuples. Returns ``(priors, cond1, cond0,
    posteriors)`` where ``posteriors[i][j]`` is P(H_j = 1 | counts) for test
    instance ``i``.
    """
    s = Fraction(s)
    n = len(train_X)
    L = len(train_Y[0])

    def d2(a, b):
        return sum((Fraction(x) - Fraction(y)) ** 2 for x, y in zip(a, b))

    def knn(point, exclude=None):
        cand = sorted((d2(point, train_X[t]), t) for t in range(n) if t != exclude)
        return [t for _, t in cand[:K]]

    priors = [(s + sum(y[j] for y in train_Y)) / (2 * s + n) for j in range(L)]
    c1 = [[0] * (K + 1) for _ in range(L)]
    c0 = [[0] * (K + 1) for _ in range(L)]
    for i in range(n):
        nb = knn(train_X[i], exclude=i)
        for j in range(L):
            c = sum(train_Y[t][j] for t in nb)
            (c1 if train_Y[i][j] == 1 else c0)[j][c] += 1
    cond1 = [[(s + c1[j][c]) / (s * (K + 1) + sum(c1[j])) for c in range(K + 1)] for j in range(L)]
    cond0 = [[(s + c0[j][c]) / (s * (K + 1) + sum(c0[j])) for c in range(K + 1)] for j in range(L)]

    post = []
    for x in test_X:
        nb = knn(x)
        row = []
        for j in range(L):
            c = sum(train_Y[t][j] for t in nb)
            p1 = priors[j] * cond1[j][c]
            p0 = (1 - priors[j]) * cond0[j][c]
            row.append(p1 / (p1 + p0))
        post.append(row)
    return priors, cond1, cond0, post


def rank_positions(scores):
    """0-based position of each label: count of labels ranked strictly ahead,
    where ahead means higher score, or equal score and lower index."""
    k = len(scores)
    return [sum(1 for m in range(k) if scores[m] > scores[j] or (scores[m] == scores[j] and m < j))
            for j in range(k)]


def metrics_bruteforce(pred, scores, truth):
    """All six metrics by explicit enumeration; inputs are k x n nested lists."""
    k, n = len(truth), len(truth[0])
    hl = sum(pred[j][i] != truth[j][i] for j in range(k) for i in range(n)) / (k * n)

    rl, cv, ap = [], [], []
    for i in range(n):
        s = [scores[j][i] for j in range(k)]
        t = [truth[j][i] for j in range(k)]
        rel = [j for j in range(k) if t[j] == 1]
        irr = [j for j in range(k) if t[j] == 0]
        if rel and irr:
            bad = 0.0
            for a in rel:
                for b in irr:
                    if s[a] < s[b]:
                        bad += 1
                    elif s[a] == s[b]:
                        bad += 0.5
            rl.append(bad / (len(rel) * len(irr)))
        if rel:
            pos = rank_positions(s)
            cv.append(max(pos[j] for j in rel))
            prec = []
            for j in rel:
                r = pos[j] + 1
                prec.append(sum(1 for m in rel if pos[m] + 1 <= r) / r)
            ap.append(sum(prec) / len(prec))

    def f1(tp, fp, fn):
        return 0.0 if 2 * tp + fp + fn == 0 else 2 * tp / (2 * tp + fp + fn)

    per, TP, FP, FN = [], 0, 0, 0
    for j in range(k):
        tp = sum(1 for i in range(n) if pred[j][i] == 1 and truth[j][i] == 1)
        fp = sum(1 for i in range(n) if pred[j][i] == 1 and truth[j][i] == 0)
        fn = sum(1 for i in range(n) if pred[j][i] == 0 and truth[j][i] == 1)
        per.append(f1(tp, fp, fn))
        TP, FP, FN = TP + tp, FP + fp, FN + fn

    mean = lambda xs: sum(xs) / len(xs) if xs else None  # noqa: E731
    return {
        "hamming_loss": hl,
        "ranking_loss": mean(rl),
        "coverage": mean(cv),
        "average_precision": mean(ap),
        "macro_f1": sum(per) / k,
        "micro_f1": f1(TP, FP, FN),
    }


def friedman_by_hand(ranks):
    """Chi-square and F statistic from a K x N list-of-lists rank table."""
    K, N = len(ranks), len(ranks[0])
    R = [sum(row) / N for row in ranks]
    chi2 = 12 * N / (K * (K + 1)) * (sum(r * r for r in R) - K * (K + 1) ** 2 / 4)
    den = N * (K - 1) - chi2
    return chi2, ((N - 1) * chi2 / den if den > 0 else float("inf"))


def grid_minimum(costs, gamma, points=10_000):
    """Brute-force minimum of sum(alpha**gamma * e) over a simplex grid."""
    e = np.asarray(costs, float)
    if e.size == 2:
        a = np.linspace(0, 1, points)
        return float(np.min(a**gamma * e[0] + (1 - a) ** gamma * e[1]))
    h = 1
    while (h + 1) * (h + 2) // 2 < points:
        h += 1
    i, j = np.meshgrid(np.arange(h + 1), np.arange(h + 1), indexing="ij")
    ok = i + j <= h
    a1, a2 = i[ok] / h, j[ok] / h
    a3 = 1 - a1 - a2
    return float(np.min(a1**gamma * e[0] + a2**gamma * e[1] + np.clip(a3, 0, 1) ** gamma * e[2]))
