"""Shared test helpers: exhaustive stable-matching oracle for tiny markets."""

import numpy as np

from matchlab.preferences import UNMATCHED


def priority_key(market, i, f):
    # Firms rank by score, breaking equal scores toward the lower index.
    return (market.scores[i, f], -i)


def is_stable(market, assignment, caps):
    n, m = market.scores.shape
    rank = market.preferences.rank
    rosters = [[i for i in range(n) if assignment[i] == f] for f in range(m)]
    for i in range(n):
        cur = assignment[i]
        cur_rank = rank[i, cur] if cur != UNMATCHED else m + 1
        for f in range(m):
            if not market.applied[i, f] or f == cur:
                continue
            if rank[i, f] >= cur_rank:
                continue
            if len(rosters[f]) < caps[f]:
                return False
            worst = min(rosters[f], key=lambda j: priority_key(market, j, f))
            if priority_key(market, i, f) > priority_key(market, worst, f):
                return False
    return True


def enumerate_stable(market):
    """All stable assignments, by recursion over applicants with capacity pruning."""
    n, m = market.scores.shape
    caps = market.capacities
    options = [
        [UNMATCHED] + [f for f in range(m) if market.applied[i, f]] for i in range(n)
    ]
    stable = []
    assignment = np.full(n, UNMATCHED, dtype=np.int64)
    load = np.zeros(m, dtype=np.int64)

    def recurse(i):
        if i == n:
            if is_stable(market, assignment, caps):
                stable.append(assignment.copy())
            return
        for choice in options[i]:
            if choice != UNMATCHED and load[choice] >= caps[choice]:
                continue
            assignment[i] = choice
            if choice != UNMATCHED:
                load[choice] += 1
            recurse(i + 1)
            if choice != UNMATCHED:
                load[choice] -= 1
            assignment[i] = UNMATCHED

    recurse(0)
    return stable
