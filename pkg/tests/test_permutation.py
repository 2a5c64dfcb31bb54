import math
from collections import Counter

import numpy as np
import pytest

from spikeperm import (RandomStream, Sample, TestConfig, c_statistic, mc_null,
                       permutation_test, permute_sample)
from spikeperm.permutation import decide, exact_null, fisher_yates, quantile_rank


def small_sample(seed=0, n=6, T=1.0):
    rng = np.random.default_rng(seed)
    x1 = [rng.uniform(0, T, rng.poisson(8)) for _ in range(n)]
    x2 = [np.clip(a + rng.normal(0, 0.01, a.size), 0, T) for a in x1]
    return Sample.from_arrays(x1, x2, T)


def test_config_validation():
    for bad in ({"alpha": 0}, {"alpha": 1}, {"B": 0}, {"delta": -1}, {"seed": -1}):
        with pytest.raises(ValueError):
            TestConfig(**bad)


def test_quantile_rank():
    assert quantile_rank(0.05, 999) == 950
    assert quantile_rank(0.05, 500) == 476
    assert quantile_rank(0.999, 10) == 1


def test_decide_ties_never_reject():
    q, p, reject = decide(5, [5] * 99, 0.05)
    assert q == 5 and p == 1.0 and not reject


def test_decide_extreme():
    q, p, reject = decide(1000, list(range(99)), 0.05)
    assert reject and p == pytest.approx(0.01)


def test_fisher_yates_uniform_small_n():
    perms = fisher_yates(RandomStream(7).spawn_keys(np.arange(60000)), 3)
    counts = Counter(map(tuple, perms))
    assert len(counts) == 6
    # chi-square with 5 dof; 20.5 is its 0.999 quantile
    exp = 10000
    assert sum((c - exp) ** 2 / exp for c in counts.values()) < 20.5


def test_fisher_yates_rows_independent_of_batch():
    keys = RandomStream(3).spawn_keys(np.arange(10))
    assert np.array_equal(fisher_yates(keys, 7)[4:], fisher_yates(keys[4:], 7))


def test_permute_sample():
    s = small_sample()
    pi = np.array([1, 0, 2, 3, 4, 5])
    t = permute_sample(s, pi)
    assert t[0].x2 == s[1].x2 and t[0].x1 == s[0].x1
    with pytest.raises(ValueError):
        permute_sample(s, [0, 0, 1, 2, 3, 4])


def test_mc_null_matches_direct_permutation():
    s = small_sample(1)
    rng = RandomStream(11)
    null = mc_null(s, 0.05, 20, rng)
    perms = fisher_yates(rng.spawn_keys(np.arange(20)), s.n)
    direct = [c_statistic(permute_sample(s, p), 0.05) for p in perms]
    assert np.allclose(null, direct)


def test_mc_null_converges_to_exact():
    s = small_sample(2, n=5)
    exact = np.sort(exact_null(s, 0.05))
    mc = mc_null(s, 0.05, 20000, RandomStream(1))
    # compare distribution functions at every support point
    for v in np.unique(exact):
        assert abs(np.mean(mc <= v) - np.mean(exact <= v)) < 0.02


def test_identity_permutation_included_in_exact():
    s = small_sample(3, n=4)
    assert exact_null(s, 0.05)[0] == c_statistic(s, 0.05)


def test_strong_dependence_rejects():
    res = permutation_test(small_sample(4, n=30), TestConfig(0.05, 0.05, 500, 1))
    assert res.reject and res.p_value == pytest.approx(1 / 501)


def test_constant_statistic_never_rejects():
    s = Sample.from_arrays([[]] * 10, [[]] * 10, 1.0)
    res = permutation_test(s, TestConfig(B=200))
    assert not res.reject and res.p_value == 1.0


def test_seed_determinism():
    s = small_sample(5, n=12)
    cfg = TestConfig(0.05, 0.05, 300, 9)
    a = permutation_test(s, cfg, keep_null=True)
    b = permutation_test(s, cfg, keep_null=True)
    assert np.array_equal(a.permuted_statistics, b.permuted_statistics)
    assert a.statistic == b.statistic and a.p_value == b.p_value


def test_level_under_null():
    # exchangeable trials: rejection rate at most alpha up to MC error
    rng = np.random.default_rng(8)
    rej = 0
    N = 300
    for k in range(N):
        s = Sample.from_arrays([rng.uniform(0, 1, rng.poisson(5)) for _ in range(15)],
                               [rng.uniform(0, 1, rng.poisson(5)) for _ in range(15)], 1.0)
        rej += permutation_test(s, TestConfig(0.1, 0.05, 99, k)).reject
    assert rej / N <= 0.1 + 3 * math.sqrt(0.09 / N)


def test_needs_two_trials():
    s = Sample.from_arrays([[0.1]], [[0.1]], 1.0)
    with pytest.raises(ValueError):
        permutation_test(s, TestConfig())
