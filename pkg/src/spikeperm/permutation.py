"""Monte-Carlo permutation test of independence between the two coordinates.

Permutations act on the second coordinate only. The observed statistic is
pooled with the ``B`` permuted ones: the quantile is the
``ceil((1 - alpha)(B + 1))``-th order statistic of the ``B + 1`` values,
the p-value is ``(1 + #{null >= observed}) / (B + 1)`` and the test rejects
when the observed value is strictly above the quantile.

All ``B`` statistics are read off one precomputed matrix
``Phi[i, j] = phi(X_i^1, X_j^2)``: a permuted ``C_n`` is
``mean_i Phi[i, pi(i)]``.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import Sample, TrialPair, coincidence_matrix
from .rng import as_stream, uniforms


@dataclass(frozen=True)
class TestConfig:
    alpha: float = 0.05
    delta: float = 0.1
    B: int = 5000
    seed: int = 0

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.delta >= 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if int(self.B) != self.B or self.B < 1:
            raise ValueError(f"B must be a positive integer, got {self.B}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def to_dict(self):
        return {"alpha": self.alpha, "delta": self.delta, "B": self.B, "seed": self.seed}


@dataclass(frozen=True)
class TestResult:
    statistic: float
    quantile: float
    p_value: float
    reject: bool
    permuted_statistics: np.ndarray = None

    __test__ = False


def permute_sample(sample, pi):
    """Trial ``i`` of the result is ``(X_i^1, X_{pi[i]}^2)``.

    ``pi`` is a 0-based permutation of ``range(n)``.
    """
    pi = np.asarray(pi)
    n = sample.n
    if pi.shape != (n,) or not np.array_equal(np.sort(pi), np.arange(n)):
        raise ValueError("pi must be a bijection on range(n)")
    return Sample(tuple(TrialPair(sample[i].x1, sample[int(pi[i])].x2) for i in range(n)))


def fisher_yates(keys, n):
    """One uniform permutation of ``range(n)`` per stream key.

    Row ``k`` depends only on ``keys[k]``: step ``s`` of the shuffle uses
    counter ``s`` of that stream.
    """
    keys = np.asarray(keys, dtype=np.uint64)
    B = keys.size
    perms = np.tile(np.arange(n, dtype=np.int64), (B, 1))
    if n < 2 or B == 0:
        return perms
    u = uniforms(keys[:, None], np.arange(n - 1, dtype=np.uint64)[None, :])
    rows = np.arange(B)
    for s, i in enumerate(range(n - 1, 0, -1)):
        j = np.minimum((u[:, s] * (i + 1)).astype(np.int64), i)
        held = perms[rows, j]
        perms[rows, j] = perms[:, i]
        perms[:, i] = held
    return perms


def permuted_diag_sums(phi, perms):
    """``sum_i Phi[i, perm[i]]`` for each row of ``perms`` (int64)."""
    n = phi.shape[0]
    return phi[np.arange(n)[None, :], perms].sum(axis=1)


def null_diag_sums(phi, B, rng):
    """Integer numerators of ``B`` permuted ``C_n`` values."""
    stream = as_stream(rng)
    keys = stream.spawn_keys(np.arange(B))
    return permuted_diag_sums(phi, fisher_yates(keys, phi.shape[0]))


def _phi(sample, delta):
    r1, r2 = sample.ragged()
    return coincidence_matrix(r1, r2, delta)


def mc_null(sample, delta, B, rng):
    """``C_n`` of ``B`` uniformly permuted copies of ``sample``.

    Permutation ``k`` is drawn from child stream ``k`` of ``rng``.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    phi = _phi(sample, delta)
    return null_diag_sums(phi, B, rng) / phi.shape[0]


def exact_null(sample, delta):
    """``C_n`` under all ``n!`` permutations, in lexicographic order (n <= 8)."""
    n = sample.n
    if n > 8:
        raise ValueError("exact enumeration is limited to n <= 8")
    phi = _phi(sample, delta)
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    return permuted_diag_sums(phi, perms) / n


def quantile_rank(alpha, B):
    """1-based rank ``ceil((1 - alpha)(B + 1))`` clamped to ``[1, B + 1]``."""
    k = math.ceil((1.0 - alpha) * (B + 1) - 1e-9)
    return min(max(k, 1), B + 1)


def decide(observed, null, alpha):
    """Quantile, p-value and decision from an observed value and its null draws.

    Works on any totally ordered numbers; callers pass integer sums to keep
    ties exact.
    """
    null = np.asarray(null)
    B = null.size
    pooled = np.sort(np.append(null, observed))
    q = pooled[quantile_rank(alpha, B) - 1]
    p = (1 + int(np.count_nonzero(null >= observed))) / (B + 1)
    return q, p, bool(observed > q)


def run_from_phi(phi, alpha, B, rng, keep_null=False):
    n = phi.shape[0]
    obs = int(np.trace(phi))
    null = null_diag_sums(phi, B, rng)
    q, p, reject = decide(obs, null, alpha)
    return TestResult(obs / n, float(q) / n, p, reject, null / n if keep_null else None)


def permutation_test(sample, cfg, rng=None, keep_null=False):
    """Run the permutation test on ``sample``.

    The permutation streams come from ``rng`` when given, else from
    ``cfg.seed``.
    """
    if sample.n < 2:
        raise ValueError("the permutation test needs n >= 2")
    rng = as_stream(cfg.seed if rng is None else rng)
    return run_from_phi(_phi(sample, cfg.delta), cfg.alpha, cfg.B, rng, keep_null)

