"""Acceptance criteria 1-10.

Each test prints one ``criterion N: PASS|FAIL`` line (collected again at the
end of the pytest run) and then asserts. Desk-scale settings and their
tolerances are stated in each test.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import kstat

from spikeperm import (HawkesParams, JitterParams, NoiseSpec, Sample, TestConfig, f_phi,
                       t_statistic)
from spikeperm.cli import main
from spikeperm.core import Ragged, diagonal_counts
from spikeperm.dendrograms import (calibrate_envelope, count_dendrograms, eval_cumulant_density,
                                   multiplicities, class_bound_constant,
                                   window_third_cumulant)
from spikeperm.harness import (NStarSearch, estimate_delta_phi_mc, estimate_power, find_n_star,
                               fit_quadratic, level_slack, tn_variance_check, type_i_experiment)
from spikeperm.hawkes import (HawkesAnalyticsInput, chain_integral, delta_phi_hawkes,
                              delta_phi_hawkes_lb, k2_density, psi, v0, v0_via_vardiff,
                              window_count_var)
from spikeperm.io import strip_timestamp
from spikeperm.jitter import indep_phi_moments, vardiff
from spikeperm.simulate import hawkes_batch, simulate_batch, trial_keys

pytestmark = pytest.mark.slow

UNIF = NoiseSpec.uniform(-0.1, 0.1)
DESK = dict(N_sim=1000, B=500)


def within(x, target, se, k=3.0):
    return abs(x - target) <= k * se


def rel_close(x, target, tol):
    return abs(x - target) <= tol * abs(target)


def disjoint_ci(hi, lo):
    """``hi`` above ``lo`` with non-overlapping 95% intervals."""
    return hi.power - hi.ci_half > lo.power + lo.ci_half


def test_c01_independent_poisson_moments(report):
    t0 = time.time()
    N = 20000
    r1, r2 = simulate_batch(JitterParams(10, 10, 0, 2.0, UNIF), trial_keys(101, N))
    phi = diagonal_counts(r1, r2, 0.1).astype(float)
    # phi' pairs X_i^1 with the independent X_{i+1}^2
    shifted = Ragged.from_list(r2.to_list()[1:] + r2.to_list()[:1])
    diff = phi - diagonal_counts(r1, shifted, 0.1)
    m = indep_phi_moments(10, 10, 0.1, 2.0)
    se = phi.std(ddof=1) / math.sqrt(N)
    checks = [within(phi.mean(), m["mean"], se), rel_close(phi.var(ddof=1), m["variance"], 0.05),
              rel_close(np.mean(diff ** 2), vardiff(10, 10, 0.1, 2.0), 0.05)]
    dt = time.time() - t0
    ok = all(checks) and dt < 30
    report(1, ok, f"mean {phi.mean():.3f} (39 +- {3 * se:.3f}), var {phi.var(ddof=1):.2f} "
                  f"(192.333 +-5%), E(phi-phi')^2 {np.mean(diff ** 2):.2f} (231.333 +-5%), {dt:.1f}s")
    assert ok


def test_c02_jitter_delta_phi(report):
    t0 = time.time()
    m = JitterParams(10, 10, 1, 2.0, UNIF)
    parts, ok = [], True
    for d, want in ((0.05, 0.9875), (0.1, 1.95)):
        est = estimate_delta_phi_mc(m, 20, 3000, 202, d)
        ok &= within(est["estimate"], want, est["stderr"])
        parts.append(f"delta={d}: {est['estimate']:.4f} +- {3 * est['stderr']:.4f} vs {want}")
    dt = time.time() - t0
    ok &= dt < 60
    report(2, ok, "; ".join(parts) + f", {dt:.1f}s")
    assert ok


def test_c03_hawkes_oracles(report):
    t0 = time.time()
    # network count over [0, 2] with mu = nu M = 10 after a warm-up of 10
    c = hawkes_batch(10.0, 3.0, 4.0, -10.0, 2.0, trial_keys(303, 100000),
                     count_window=(0.0, 2.0)).astype(float)
    se = c.std(ddof=1) / math.sqrt(c.size)
    var_want = window_count_var(10, 3, 4, 2)
    est = estimate_delta_phi_mc(HawkesParams(1, 3, 4, 10, 2.0, warmup=10.0), 10, 5000, 304, 0.1)
    want = delta_phi_hawkes(HawkesAnalyticsInput(1, 3, 4, 10, 0.1, 2.0))
    dt = time.time() - t0
    ok = (within(c.mean(), 80, se) and rel_close(c.var(ddof=1), var_want, 0.05)
          and within(est["estimate"], want, est["stderr"]) and dt < 180)
    report(3, ok, f"mean count {c.mean():.3f} (80 +- {3 * se:.3f}), var {c.var(ddof=1):.1f} "
                  f"({var_want:.2f} +-5%), Delta phi {est['estimate']:.4f} "
                  f"({want:.6f} +- {3 * est['stderr']:.4f}), {dt:.1f}s")
    assert ok


@pytest.mark.parametrize("name,model", [
    ("jitter eta=0", JitterParams(10, 10, 0, 2.0, UNIF)),
    ("independent Hawkes", HawkesParams(1, 3, 4, 10, 2.0, independent=True)),
])
def test_c04_level(report, name, model):
    t0 = time.time()
    N = 2000
    pt = type_i_experiment(model, TestConfig(0.05, 0.1, 500, 404), 100, N)
    bound = 0.05 + level_slack(0.05, N)
    dt = time.time() - t0
    ok = pt.power <= bound and dt < 300
    report(4, ok, f"{name}: rejection {pt.power:.4f} <= {bound:.4f}, {dt:.1f}s")
    assert ok


def test_c05_power_orderings(report):
    t0 = time.time()
    cfg = TestConfig(0.05, 0.1, DESK["B"], 505)
    N = DESK["N_sim"]
    tri = JitterParams(10, 10, 1, 2.0, NoiseSpec.triangular_increasing(0.1))
    a_hi = estimate_power(tri, cfg, 100, N, param="delta", value=0.1)
    a_lo = estimate_power(tri, TestConfig(0.05, 0.02, cfg.B, cfg.seed), 100, N, param="delta", value=0.02)
    # a small delta keeps the uniform-noise curve off its ceiling
    small = TestConfig(0.05, 0.02, cfg.B, cfg.seed)
    jit = JitterParams(10, 10, 1, 2.0, UNIF)
    b_lo = estimate_power(jit, small, 100, N)
    b_hi = estimate_power(jit, small, 300, N)
    c10 = estimate_power(HawkesParams(1, 3, 4, 10, 2.0), cfg, 300, N, param="M", value=10)
    c30 = estimate_power(HawkesParams(1, 3, 4, 30, 2.0), cfg, 300, N, param="M", value=30)
    ok_a = disjoint_ci(a_hi, a_lo)
    ok_b = b_hi.power >= b_lo.power - (b_lo.ci_half + b_hi.ci_half)
    ok_c = disjoint_ci(c10, c30)
    dt = time.time() - t0
    ok = ok_a and ok_b and ok_c
    report(5, ok, f"(a) triinc: {a_hi.power:.3f}+-{a_hi.ci_half:.3f} (delta .1) vs "
                  f"{a_lo.power:.3f}+-{a_lo.ci_half:.3f} (delta .02); "
                  f"(b) n=300 {b_hi.power:.3f} vs n=100 {b_lo.power:.3f}; "
                  f"(c) M=10 {c10.power:.3f}+-{c10.ci_half:.3f} vs M=30 {c30.power:.3f}+-{c30.ci_half:.3f}; "
                  f"{dt:.0f}s")
    assert ok


def test_c06_n_star_growth(report):
    t0 = time.time()
    cfg = TestConfig(0.05, 0.1, 500, 606)
    search = NStarSearch(n_lo=2, step=1, n_max=400, N_sim=500)
    Ms, ns = [4, 6, 8], []
    for M in Ms:
        ns.append(find_n_star(HawkesParams(1, 10, 20, M, 2.0), cfg, 0.2, search).n_star)
    fit = fit_quadratic(Ms, ns)
    dt = time.time() - t0
    ok = fit["c1"] > 0 and ns[2] > ns[1] > ns[0] and dt < 1800
    report(6, ok, f"n* = {dict(zip(Ms, ns))}, fit c0={fit['c0']:.2f} c1={fit['c1']:.3f}, {dt:.0f}s")
    assert ok


def test_c07_dendrogram_combinatorics(report):
    t0 = time.time()
    counts = [count_dendrograms(l) for l in (2, 3, 4)]
    mults = [multiplicities(l) for l in (2, 3, 4)]
    dt = time.time() - t0
    ok = (counts == [1, 4, 26] and mults == [[1], [1, 3], [1, 6, 4, 3, 12]]
          and [sum(m) for m in mults] == counts and dt < 1)
    report(7, ok, f"counts {counts}, multiplicities {mults}, {dt:.3f}s")
    assert ok


def test_c08_cumulant_cross_validation(report):
    t0 = time.time()
    rng = np.random.default_rng(808)
    worst = 0.0
    for _ in range(100):
        a = rng.uniform(0.1, 5)
        b = a + rng.uniform(0.1, 5)
        mu, s = rng.uniform(0.1, 20), rng.uniform(0.001, 4)
        got = eval_cumulant_density(2, [0.0, s], mu, a, b)
        worst = max(worst, abs(got / k2_density(s, mu, a, b) - 1))
    ok_l2 = worst <= 1e-6

    # third cumulant of the count in [0, 2] of a stationary path
    c = hawkes_batch(10.0, 3.0, 4.0, -20.0, 2.0, trial_keys(809, 200000),
                     count_window=(0.0, 2.0)).astype(float)
    k3_mc = kstat(c, 3)
    k3_num = window_third_cumulant(2.0, 10.0, 3.0, 4.0)
    ok_k3 = rel_close(k3_mc, k3_num, 0.10)

    # envelope constants: calibrated on one 1000-point grid, checked against
    # the per-class bound on a second one
    env = {}
    ok_env = True
    for l in (3, 4):
        for mu, a, b in ((10.0, 3.0, 4.0), (2.0, 1.0, 4.0)):
            grid = rng.uniform(0, 3, (1000, l))
            held = rng.uniform(0, 3, (1000, l))
            C = calibrate_envelope(l, grid, mu, a, b)
            C_held = calibrate_envelope(l, held, mu, a, b)
            bound = class_bound_constant(l, a / b)
            env[(l, a / b)] = C
            ok_env &= 0 < C <= bound and C_held <= bound
    dt = time.time() - t0
    ok = ok_l2 and ok_k3 and ok_env and dt < 600
    cal = ", ".join(f"C{l}(ell={e:.2f})={v:.3f}" for (l, e), v in env.items())
    report(8, ok, f"l=2 max rel err {worst:.1e}; k3 MC {k3_mc:.0f} vs integral {k3_num:.0f} "
                  f"({abs(k3_mc / k3_num - 1):.1%}); calibrated {cal}; {dt:.0f}s")
    assert ok


def test_c09_identities(report):
    t0 = time.time()
    rng = np.random.default_rng(909)
    worst_u = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 7))
        T = 1.0
        s = Sample.from_arrays([rng.uniform(0, T, rng.poisson(4)) for _ in range(n)],
                               [rng.uniform(0, T, rng.poisson(4)) for _ in range(n)], T)
        d = rng.uniform(0, 0.3)
        direct = sum(f_phi(s[i], s[j], d) for i in range(n) for j in range(n) if i != j) / (n * (n - 1))
        worst_u = max(worst_u, abs(t_statistic(s, d) - direct))
    ok_u = worst_u <= 1e-12

    worst_v = max(abs(v0(nu, ell, d, T) / v0_via_vardiff(nu, ell, d, T) - 1)
                  for nu in (0.5, 1, 3) for ell in (0.1, 0.5, 0.75, 0.95)
                  for d in (0.01, 0.1, 0.5) for T in (1, 2, 5))
    ok_v = worst_v <= 1e-10

    worst_c = 0.0
    for _ in range(20):
        a = rng.uniform(0.2, 3)
        b = a + rng.uniform(0.3, 3)
        al = np.sort(rng.uniform(0, 2, int(rng.integers(2, 5))))
        f = lambda v: np.prod([psi(x - v, a, b) for x in al])
        q = integrate.quad(f, -np.inf, al[0], epsabs=0, epsrel=1e-12, limit=200)[0]
        worst_c = max(worst_c, abs(chain_integral(al, a, b) / q - 1))
    ok_c = worst_c <= 1e-8

    ok_lb = all(delta_phi_hawkes_lb(p) <= delta_phi_hawkes(p)
                for a, b in ((1, 2), (3, 4), (2, 7), (10, 20))
                for M in (2, 10, 100) for d in (0.01, 0.1, 0.3)
                for p in [HawkesAnalyticsInput(1, a, b, M, d, max(5.0 / (b - a), 2 * d) + 0.5)])

    var_lines, ok_var = [], True
    for name, model in (("jitter", JitterParams(10, 10, 1, 2.0, UNIF)),
                        ("hawkes", HawkesParams(1, 3, 4, 10, 2.0))):
        v = tn_variance_check(model, 10, 3000, 910, 0.1)
        slack = 3 * math.hypot(v["var_tn_se"], v["bound_se"])
        ok_var &= v["var_tn"] <= v["bound"] + slack
        var_lines.append(f"{name} V[T_n] {v['var_tn']:.3f} <= {v['bound']:.3f} + {slack:.3f}")
    dt = time.time() - t0
    ok = ok_u and ok_v and ok_c and ok_lb and ok_var
    report(9, ok, f"U-stat err {worst_u:.1e}; V0/vardiff err {worst_v:.1e}; chain err {worst_c:.1e}; "
                  f"lower bound dominated {ok_lb}; " + "; ".join(var_lines) + f"; {dt:.0f}s")
    assert ok


def test_c10_determinism(report, tmp_path, capsys):
    commands = {
        "power": ["power", "--seed", "7", "--N-sim", "12", "--B", "50", "--n", "300",
                  "--grid", "0.05,0.1"],
        "typeI": ["typeI", "--seed", "7", "--model", "hawkes", "--independent", "--N-sim", "45",
                  "--B", "50", "--n", "100"],
        "nstar": ["nstar", "--seed", "7", "--Ms", "4,6", "--N-sim", "20", "--B", "50",
                  "--n-lo", "2", "--step", "4", "--n-max", "400", "--a", "10", "--b", "20"],
        "simulate": ["simulate", "--seed", "7", "--model", "hawkes", "--n", "5"],
    }
    same = {}
    for name, argv in commands.items():
        outs = []
        for w in ("1", "2"):
            path = tmp_path / f"{name}-{w}.csv"
            extra = ["--workers", w] if name != "simulate" else []
            main(argv + extra + ["--out", str(path)])
            outs.append(strip_timestamp(path.read_text()))
        capsys.readouterr()
        same[name] = outs[0] == outs[1]
    ok = all(same.values())
    report(10, ok, "byte-identical across workers=1,2: " + ", ".join(f"{k} {v}" for k, v in same.items()))
    assert ok
