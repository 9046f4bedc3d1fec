import numpy as np
import pytest

from lkvol.couplings import (
    Coupling,
    canonical_coupling_sum,
    enumerate_couplings,
    pair_partitions,
    perm_sign,
    raw_coupling_sum,
)
from lkvol.errors import InputError


def random_pair_antisymmetric(rng, n):
    """Random tensor antisymmetric within the upper pair and the lower pair."""
    t = rng.normal(size=(n, n, n, n))
    t = 0.5 * (t - t.transpose(1, 0, 2, 3))
    t = 0.5 * (t - t.transpose(0, 1, 3, 2))
    return t


def test_pair_partitions_count():
    assert len(list(pair_partitions((0, 1, 2, 3)))) == 3
    assert len(list(pair_partitions((0, 1, 2, 3, 4, 5)))) == 15
    assert list(pair_partitions(())) == [()]


def test_perm_sign():
    assert perm_sign((0, 1, 2), (0, 1, 2)) == 1
    assert perm_sign((0, 1, 2), (1, 0, 2)) == -1
    assert perm_sign((0, 1, 2, 3), (1, 0, 3, 2)) == 1


def test_degree_zero_single_empty_coupling():
    table = enumerate_couplings(3, 0)
    assert table.couplings == (Coupling((), (), 1),)
    assert table.multiplicity == 1


def test_odd_degree_rejected():
    with pytest.raises(InputError):
        enumerate_couplings(4, 3)


def test_n2_e2_canonical_list():
    table = enumerate_couplings(2, 2)
    assert table.couplings == (Coupling(((0, 1),), ((0, 1),), 1),)
    assert table.multiplicity == 4


def test_n4_e4_count_matches_exhaustive_classes():
    from itertools import combinations, permutations

    # Collapse all ordered tuples to canonical forms and count distinct ones.
    classes = set()
    for subset in combinations(range(4), 4):
        for p in permutations(subset):
            for q in permutations(subset):
                cols = []
                for k in range(0, 4, 2):
                    lower = tuple(sorted((p[k], p[k + 1])))
                    upper = tuple(sorted((q[k], q[k + 1])))
                    cols.append((lower, upper))
                classes.add(tuple(sorted(cols)))
    table = enumerate_couplings(4, 4)
    assert len(table.couplings) == len(classes) == 18


def test_no_duplicate_canonical_forms():
    for n, e in [(2, 2), (3, 2), (4, 2), (4, 4), (5, 4)]:
        table = enumerate_couplings(n, e)
        seen = set()
        for c in table.couplings:
            key = (tuple(sorted(zip(c.lower, (tuple(sorted(u)) for u in c.upper)))),)
            assert key not in seen
            seen.add(key)


def test_signs_match_permutation_parity():
    for c in enumerate_couplings(4, 4).couplings:
        assert c.sign == perm_sign(c.flat_lower, c.flat_upper)


@pytest.mark.parametrize("n,e,count", [(2, 2, 50), (4, 2, 20), (4, 4, 20)])
def test_raw_sum_equals_multiplicity_times_canonical(n, e, count):
    rng = np.random.default_rng(100 + n + e)
    table = enumerate_couplings(n, e)
    for _ in range(count):
        t = random_pair_antisymmetric(rng, n)
        raw = raw_coupling_sum(t, n, e)
        canonical = canonical_coupling_sum(t, n, e)
        assert raw == pytest.approx(table.multiplicity * canonical, rel=1e-12, abs=1e-12)
