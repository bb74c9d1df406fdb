"""Independent brute-force reference implementations used by the tests.

Everything here enumerates indicator sums with plain Python loops and ints,
deliberately sharing no code with the library paths under test.
"""

from fair_context.errors import EmptyConditionCell, EmptyGroup


def brute_dp(pred, s):
    rates = []
    for g in (0, 1):
        hits = total = 0
        for p, si in zip(pred, s):
            if si == g:
                total += 1
                hits += 1 if p == 1 else 0
        if total == 0:
            raise EmptyGroup(g)
        rates.append(hits / total)
    return abs(rates[0] - rates[1])


def brute_rate_diff(pred, y, s, j):
    rates = []
    for g in (0, 1):
        hits = total = 0
        for p, yi, si in zip(pred, y, s):
            if si == g and yi == j:
                total += 1
                hits += 1 if p == 1 else 0
        if total == 0:
            raise EmptyConditionCell(g, j)
        rates.append(hits / total)
    return abs(rates[0] - rates[1])


def brute_eop(pred, y, s):
    return brute_rate_diff(pred, y, s, 1)


def brute_eod(pred, y, s):
    return brute_rate_diff(pred, y, s, 0) + brute_rate_diff(pred, y, s, 1)


def brute_accuracy(pred, y):
    return sum(1 for p, yi in zip(pred, y) if p == yi) / len(y)


def brute_f1(pred, y):
    tp = sum(1 for p, yi in zip(pred, y) if p == 1 and yi == 1)
    fp = sum(1 for p, yi in zip(pred, y) if p == 1 and yi == 0)
    fn = sum(1 for p, yi in zip(pred, y) if p == 0 and yi == 1)
    denom = 2 * tp + fp + fn
    return 0.0 if denom == 0 else 2 * tp / denom


def brute_knn(context_X, context_y, query_row, k):
    """Neighbor vote with explicit (distance, index) sorting on standardized
    features, mirroring the documented tie rule."""
    n = len(context_X)
    m = len(context_X[0])
    means = [sum(row[j] for row in context_X) / n for j in range(m)]
    sds = []
    for j in range(m):
        var = sum((row[j] - means[j]) ** 2 for row in context_X) / n
        sds.append(var ** 0.5)
    cols = [j for j in range(m) if sds[j] != 0.0]

    def standardize(row):
        return [(row[j] - means[j]) / sds[j] for j in cols]

    q = standardize(query_row)
    scored = []
    for i, row in enumerate(context_X):
        r = standardize(row)
        d = sum((a - b) ** 2 for a, b in zip(q, r))
        scored.append((d, i))
    scored.sort()
    kk = min(k, n)
    chosen = [i for _, i in scored[:kk]]
    return sum(context_y[i] for i in chosen) / kk


def brute_pareto(points):
    """Indices of non-dominated (accuracy up, unfairness down) points."""
    front = []
    for i, (acc_i, unf_i) in enumerate(points):
        dominated = False
        for j, (acc_j, unf_j) in enumerate(points):
            if i == j:
                continue
            if acc_j >= acc_i and unf_j <= unf_i and (acc_j > acc_i or unf_j < unf_i):
                dominated = True
                break
        if not dominated:
            front.append(i)
    return front
