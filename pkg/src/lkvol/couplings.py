"""Signed pairings of curvature-tensor index pairs.

A coupling pairs ``e`` distinct coordinate indices twice over: once as lower
pairs and once as upper pairs, arranged in e/2 columns.  The sign is the
parity of the permutation taking the flattened lower sequence to the
flattened upper sequence.  Swapping the two entries of any single pair, or
permuting whole columns, gives an equivalent coupling; enumeration produces
one canonical representative per equivalence class, and ``multiplicity``
counts how many ordered index tuples collapse onto each class (4^(e/2) pair
orderings times (e/2)! column orders).

``raw_coupling_sum`` spells out the sum over all ordered tuples.  It exists
as a test oracle for the canonical enumeration and is far too slow for
production use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations

import numpy as np

from .errors import InputError


def pair_partitions(items: tuple[int, ...]):
    """All partitions of ``items`` into unordered pairs, canonically ordered.

    Each pair is (small, large) and pairs are emitted sorted by first element.
    """
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for i, partner in enumerate(rest):
        for sub in pair_partitions(rest[:i] + rest[i + 1 :]):
            yield ((first, partner),) + sub


def perm_sign(src: tuple[int, ...], dst: tuple[int, ...]) -> int:
    """Sign of the permutation taking the sequence ``src`` to ``dst``."""
    pos = {v: i for i, v in enumerate(src)}
    perm = [pos[v] for v in dst]
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


@dataclass(frozen=True)
class Coupling:
    lower: tuple[tuple[int, int], ...]
    upper: tuple[tuple[int, int], ...]
    sign: int

    @property
    def flat_lower(self) -> tuple[int, ...]:
        return tuple(i for pair in self.lower for i in pair)

    @property
    def flat_upper(self) -> tuple[int, ...]:
        return tuple(i for pair in self.upper for i in pair)


@dataclass(frozen=True)
class CouplingTable:
    n: int
    e: int
    couplings: tuple[Coupling, ...]
    multiplicity: int  # ordered-tuple representatives per canonical coupling


@lru_cache(maxsize=None)
def enumerate_couplings(n: int, e: int) -> CouplingTable:
    """Canonical duplicate-free couplings of degree ``e`` on ``n`` indices."""
    if e % 2 != 0:
        raise InputError(f"coupling degree must be even, got {e}")
    if not 0 <= e <= n:
        raise InputError(f"degree {e} out of range for dimension {n}")
    if e == 0:
        return CouplingTable(n, 0, (Coupling((), (), 1),), 1)
    half = e // 2
    couplings = []
    for subset in combinations(range(n), e):
        for lower in pair_partitions(subset):
            for upper_partition in pair_partitions(subset):
                for assignment in permutations(range(half)):
                    upper = tuple(upper_partition[k] for k in assignment)
                    flat_l = tuple(i for pair in lower for i in pair)
                    flat_u = tuple(i for pair in upper for i in pair)
                    couplings.append(
                        Coupling(lower=lower, upper=upper, sign=perm_sign(flat_l, flat_u))
                    )
    multiplicity = 4**half * math.factorial(half)
    return CouplingTable(n, e, tuple(couplings), multiplicity)


def raw_coupling_sum(r_mixed: np.ndarray, n: int, e: int) -> float:
    """Sum over all ordered index tuples (test oracle; exponential cost).

    ``r_mixed[p, q, r, s]`` is read as the entry with upper indices (p, q) and
    lower indices (r, s).
    """
    if e == 0:
        return 1.0
    total = 0.0
    for subset in combinations(range(n), e):
        for p in permutations(subset):
            for q in permutations(subset):
                sign = perm_sign(p, q)
                prod = 1.0
                for k in range(0, e, 2):
                    prod *= r_mixed[q[k], q[k + 1], p[k], p[k + 1]]
                total += sign * prod
    return total


def canonical_coupling_sum(r_mixed: np.ndarray, n: int, e: int) -> float:
    """Reference (slow, single-point) evaluation of the canonical sum."""
    total = 0.0
    for c in enumerate_couplings(n, e).couplings:
        prod = float(c.sign)
        for (u1, u2), (l1, l2) in zip(c.upper, c.lower):
            prod *= r_mixed[u1, u2, l1, l2]
        total += prod
    return total
