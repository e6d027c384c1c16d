"""Independent reference implementations used as test oracles.

Everything here is written from the problem statement alone (entry-by-entry
matrix scans, O(n^2) pair counting, central finite differences) and stays
deliberately naive so it shares no code path with the package.
"""

import numpy as np

# entry states of the signed matrix as a learner sees them
PLUS, MINUS, UNKNOWN, NULL = "+", "-", "?", "0"


def entry_matrix(network, split):
    """Dense matrix of visible entry states."""
    states = [[NULL] * network.num_targets for _ in range(network.num_users)]
    for e in network.edges:
        key = (e.user, e.target)
        if key in split.train_spam:
            states[e.user][e.target] = MINUS
        elif key in split.train_normal:
            states[e.user][e.target] = PLUS
        else:
            states[e.user][e.target] = UNKNOWN
    return states


def brute_force_pairs(network, split, level, xi):
    """All (user, higher, lower) ranking triples by entry-wise rule scans.

    level is "spam" or "normal".  At the spam level an entry marked "-"
    outranks "+" and null entries; a "?" entry joins only when its column
    holds strictly more than xi visible "-" entries, outranking "+", null,
    and weak-evidence "?" entries.  The normal level swaps the roles of
    "+" and "-".
    """
    states = entry_matrix(network, split)
    hi_mark = MINUS if level == "spam" else PLUS
    lo_mark = PLUS if level == "spam" else MINUS
    evidence = [
        sum(1 for u in range(network.num_users) if states[u][t] == hi_mark)
        for t in range(network.num_targets)
    ]
    triples = set()
    for u in range(network.num_users):
        row = states[u]
        for i in range(network.num_targets):
            for j in range(network.num_targets):
                if i == j:
                    continue
                i_known_higher = row[i] == hi_mark
                i_aux = row[i] == UNKNOWN and evidence[i] > xi
                j_lower = row[j] in (lo_mark, NULL)
                j_weak = row[j] == UNKNOWN and evidence[j] <= xi
                if (i_known_higher and j_lower) or (i_aux and (j_lower or j_weak)):
                    triples.add((u, i, j))
    return triples


def pair_count_auc(scores, labels):
    """O(n^2) Mann-Whitney AUC: wins + half-ties over all pos/neg pairs."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                total += 1.0
            elif p == n:
                total += 0.5
    return total / (len(pos) * len(neg))


def central_difference(f, x, step=1e-5):
    """Per-component central finite differences of a scalar function."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for k in range(x.size):
        up = x.copy()
        down = x.copy()
        up[k] += step
        down[k] -= step
        grad[k] = (f(up) - f(down)) / (2 * step)
    return grad


def assert_gradients_close(analytic, numeric, rel=1e-5, abs_tol=1e-8):
    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    gap = np.abs(analytic - numeric)
    bound = np.maximum(abs_tol, rel * np.abs(numeric))
    assert np.all(gap <= bound), f"gradient mismatch: max gap {gap.max():.3e}"
