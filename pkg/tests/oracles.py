"""Slow reference implementations used only as test oracles.

Nothing here shares code with the package kernels.
"""

from __future__ import annotations

import itertools
import math
from collections import deque


def edit_distance_by_search(a, b) -> int:
    """Shortest edit script by breadth-first search over token lists.

    Edits are single-token insert, delete and substitute; inserted or
    substituted tokens are drawn from the union of both alphabets, which is
    enough to reach ``b``.
    """
    a, b = tuple(a), tuple(b)
    alphabet = sorted(set(a) | set(b), key=repr)
    seen = {a: 0}
    queue = deque([a])
    while queue:
        cur = queue.popleft()
        d = seen[cur]
        if cur == b:
            return d
        nxt = []
        for i in range(len(cur) + 1):
            for t in alphabet:
                nxt.append(cur[:i] + (t,) + cur[i:])
        for i in range(len(cur)):
            nxt.append(cur[:i] + cur[i + 1 :])
            for t in alphabet:
                if t != cur[i]:
                    nxt.append(cur[:i] + (t,) + cur[i + 1 :])
        for s in nxt:
            # no useful script passes through a list longer than both ends
            if s not in seen and len(s) <= max(len(a), len(b)):
                seen[s] = d + 1
                queue.append(s)
    raise AssertionError("unreachable")


def edit_distance_table(a, b) -> int:
    """Full-table Wagner-Fischer recurrence."""
    rows = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        rows[i][0] = i
    for j in range(len(b) + 1):
        rows[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            rows[i][j] = min(
                rows[i - 1][j] + 1,
                rows[i][j - 1] + 1,
                rows[i - 1][j - 1] + (a[i - 1] != b[j - 1]),
            )
    return rows[-1][-1]


def _is_subsequence(sub, seq) -> bool:
    it = iter(seq)
    return all(any(x == y for y in it) for x in sub)


def lcs_by_enumeration(a, b) -> int:
    """Largest subset of ``a`` (kept in order) that is a subsequence of ``b``."""
    for k in range(min(len(a), len(b)), 0, -1):
        for idx in itertools.combinations(range(len(a)), k):
            if _is_subsequence([a[i] for i in idx], b):
                return k
    return 0


def cosine_direct(names_a, names_b) -> float:
    keys = sorted(set(names_a) | set(names_b))
    va = [names_a.count(k) for k in keys]
    vb = [names_b.count(k) for k in keys]
    na = math.sqrt(sum(x * x for x in va))
    nb = math.sqrt(sum(x * x for x in vb))
    if na == 0 and nb == 0:
        return 1.0
    if na == 0 or nb == 0:
        return 0.0
    return sum(x * y for x, y in zip(va, vb)) / (na * nb)


def seq_score_oracle(lines_a, lines_b) -> float:
    longest = max(len(lines_a), len(lines_b))
    if longest == 0:
        return 1.0
    return 1.0 - math.sqrt(edit_distance_by_search(lines_a, lines_b) / longest)


def lcs_score_oracle(candidate, target) -> float:
    if not target:
        return 1.0 if not candidate else 0.0
    return min(1.0, lcs_by_enumeration(candidate, target) / len(target))
