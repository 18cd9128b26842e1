"""Independent reference implementations shared by the unit and acceptance tests."""

import math
from pathlib import Path

FIXTURES = Path(__file__).parent / "fixtures"


def brute_force_lof(X, k, Q=None):
    """Textbook LOF with plain loops; neighbours ordered by (distance, row index)."""
    n = len(X)

    def dist(a, b):
        return math.sqrt(sum((float(u) - float(v)) ** 2 for u, v in zip(a, b)))

    def neighbours(p, exclude=None):
        cand = sorted((dist(p, X[j]), j) for j in range(n) if j != exclude)
        return cand[:k]

    nb = [neighbours(X[i], i) for i in range(n)]
    kdist = [nb[i][-1][0] for i in range(n)]
    lrd = [1.0 / (sum(max(kdist[j], d) for d, j in nb[i]) / k) for i in range(n)]
    if Q is None:
        return [sum(lrd[j] for _, j in nb[i]) / k / lrd[i] for i in range(n)]
    out = []
    for q in Q:
        nq = neighbours(q)
        lq = 1.0 / (sum(max(kdist[j], d) for d, j in nq) / k)
        out.append(sum(lrd[j] for _, j in nq) / k / lq)
    return out


def fnv_oracle(s: str) -> int:
    h = 2166136261
    for byte in s.encode():
        h ^= byte
        h = (h * 16777619) % 2 ** 32
    return h


def golden_listing():
    """(offset, size, mnemonic) rows of the committed reference disassembly."""
    rows = []
    for line in (FIXTURES / "fixture.listing.txt").read_text().splitlines():
        if line.startswith("#") or not line.strip():
            continue
        off, size, mnem = line.split("\t")
        rows.append((int(off, 16), int(size), mnem))
    return rows
