import itertools
import math

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import qmc

from spikeperm.dendrograms import (DiagonalError, calibrate_envelope, class_contributions,
                                   class_summary, count_dendrograms, enumerate_dendrograms,
                                   equivalence_classes, eval_cumulant_density, multiplicities,
                                   class_bound_constant, window_third_cumulant)
from spikeperm.hawkes import cumulant_bound_density, k2_density, psi

MU, A, B = 10.0, 3.0, 4.0
K1 = MU / (1 - A / B)
LP = A / (B - A)


def Psi(t):
    return psi(t, A, B)


def class_a(times):
    t = np.sort(times)
    l = t.size
    return K1 * (1 + LP / l) * np.prod([Psi(x - t[0]) for x in t[1:]])


def class_b_l3(times):
    """Sum over the three choices of the singleton leaf, by 1-D quadrature."""
    total = 0.0
    for k in range(3):
        t3 = times[k]
        t1, t2 = [times[i] for i in range(3) if i != k]
        m = min(t1, t2)
        g = lambda v: 0.5 * LP * Psi(abs(t3 - v)) + Psi(v - t3)
        dirac = g(m) * Psi(abs(t1 - t2))
        f = lambda v: g(v) * Psi(t1 - v) * Psi(t2 - v)
        # g has a kink at t3, so split there when it falls inside the range
        pieces = ((-np.inf, m),) if t3 >= m else ((-np.inf, t3), (t3, m))
        cont = sum(integrate.quad(f, lo, hi, epsabs=0, epsrel=1e-13, limit=200)[0]
                   for lo, hi in pieces)
        total += K1 * (dirac + cont)
    return total


class TestCombinatorics:
    def test_counts(self):
        assert [count_dendrograms(l) for l in range(2, 7)] == [1, 4, 26, 236, 2752]
        with pytest.raises(ValueError):
            count_dendrograms(1)

    def test_multiplicities(self):
        assert multiplicities(2) == [1]
        assert multiplicities(3) == [1, 3]
        assert multiplicities(4) == [1, 6, 4, 3, 12]
        for l in (2, 3, 4):
            assert sum(multiplicities(l)) == count_dendrograms(l)

    @pytest.mark.parametrize("l", [2, 3, 4, 5])
    def test_enumeration_distinct_and_complete(self, l):
        ds = enumerate_dendrograms(l)
        assert len(ds) == count_dendrograms(l)
        assert len({str(d) for d in ds}) == len(ds)
        assert all(sorted(d.leaves) == list(range(1, l + 1)) or sorted(d.leaves) == list(range(l))
                   for d in ds)

    def test_l5_summary_sums(self):
        assert sum(m for _, _, m in class_summary(5)) == 236

    def test_classes_members(self):
        for cls in equivalence_classes(4):
            assert len(cls.members) == cls.multiplicity
            assert len({d.shape for d in cls.members}) == 1

    def test_too_large(self):
        with pytest.raises(ValueError):
            enumerate_dendrograms(6)


class TestEvaluator:
    def test_l2_matches_k2(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            a = rng.uniform(0.1, 3)
            b = a + rng.uniform(0.2, 3)
            mu = rng.uniform(0.1, 20)
            s = rng.uniform(0.01, 3)
            got = eval_cumulant_density(2, [0.0, s], mu, a, b)
            assert got == pytest.approx(k2_density(s, mu, a, b), rel=1e-6)

    def test_l2_example(self):
        assert eval_cumulant_density(2, [0.0, 0.5], MU, A, B) == pytest.approx(181.959, rel=1e-5)

    @pytest.mark.parametrize("times", [(0.0, 0.3, 1.1), (0.2, 0.21, 0.9), (1.0, 0.1, 0.5)])
    def test_l3_classes_vs_quadrature(self, times):
        t = np.array(times)
        contrib = np.ravel(class_contributions(3, t, MU, A, B))
        assert contrib[0] == pytest.approx(class_a(t), rel=1e-10)
        assert contrib[1] == pytest.approx(class_b_l3(t), rel=1e-9)
        assert eval_cumulant_density(3, t, MU, A, B) == pytest.approx(class_a(t) + class_b_l3(t), rel=1e-9)

    def test_l4_class_a(self):
        t = np.array([0.4, 0.0, 0.9, 0.2])
        c = np.ravel(class_contributions(4, t, MU, A, B))
        assert c[0] == pytest.approx(class_a(t), rel=1e-10)
        assert np.all(c > 0)

    @pytest.mark.parametrize("l", [3, 4])
    def test_exchangeable(self, l):
        t = np.array([0.0, 0.35, 0.8, 1.7][:l])
        ref = eval_cumulant_density(l, t, MU, A, B)
        for p in itertools.permutations(range(l)):
            assert eval_cumulant_density(l, t[list(p)], MU, A, B) == pytest.approx(ref, rel=1e-12)

    def test_translation_invariant(self):
        t = np.array([0.0, 0.35, 0.8, 1.7])
        assert eval_cumulant_density(4, t + 5.0, MU, A, B) == pytest.approx(
            eval_cumulant_density(4, t, MU, A, B), rel=1e-10)

    def test_batch_matches_single(self):
        pts = np.array([[0.0, 0.3, 1.1], [0.5, 0.2, 0.1]])
        batch = eval_cumulant_density(3, pts, MU, A, B)
        assert np.allclose(batch, [eval_cumulant_density(3, p, MU, A, B) for p in pts], rtol=1e-12)

    def test_diagonal_rejected(self):
        with pytest.raises(DiagonalError):
            eval_cumulant_density(3, [0.1, 0.1, 0.5], MU, A, B)

    def test_l5_not_evaluated(self):
        with pytest.raises(ValueError):
            eval_cumulant_density(5, [0, 1, 2, 3, 4], MU, A, B)

    def test_l4_wide_spread_decays_under_envelope(self):
        for s in (1.0, 5.0, 20.0):
            t = np.array([0.0, s / 3, 2 * s / 3, s])
            v = eval_cumulant_density(4, t, MU, A, B)
            env = cumulant_bound_density(4, t, MU, A, B, class_bound_constant(4))
            assert 0 < v <= env
        assert eval_cumulant_density(4, [0, 20, 40, 60], MU, A, B) < 1e-20


class TestEnvelope:
    def test_class_bound_constants(self):
        assert class_bound_constant(3) == 4
        assert class_bound_constant(4) == 24.75
        for ell in np.linspace(0, 0.99, 12):
            assert class_bound_constant(3, ell) <= 4
            assert class_bound_constant(4, ell) <= 24.75

    @pytest.mark.parametrize("l", [3, 4])
    def test_calibrated_below_class_bound(self, l):
        rng = np.random.default_rng(l)
        pts = rng.uniform(0, 2, (200, l))
        c = calibrate_envelope(l, pts, MU, A, B)
        assert 0 < c <= class_bound_constant(l, A / B)


def test_window_third_cumulant_poisson_limit():
    # for a -> 0 every cumulant of the count equals mu w
    assert window_third_cumulant(2.0, 5.0, 1e-9, 4.0) == pytest.approx(10.0, rel=1e-6)


def test_window_third_cumulant_by_qmc():
    # off-diagonal part by scrambled Sobol points on the cube, diagonals in closed form
    w, mu, a, b = 0.5, 2.0, 1.0, 3.0
    g = qmc.Sobol(3, scramble=True, seed=1).random_base2(16) * w
    off = eval_cumulant_density(3, g, mu, a, b).mean() * w ** 3
    k1 = mu / (1 - a / b)
    c2 = a * mu / (1 - a / b) * (1 + 0.5 * a / (b - a))
    r = b - a
    i2 = 2 * c2 * (w / r + math.expm1(-r * w) / r ** 2)
    assert window_third_cumulant(w, mu, a, b) == pytest.approx(off + 3 * i2 + k1 * w, rel=2e-3)
