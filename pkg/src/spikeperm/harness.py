"""Monte-Carlo experiments: separation and variance estimates, power, n*.

Streams are keyed as ``seed -> experiment tag -> ("sim" | "perm", replicate)``
and trials within a replicate take child ``i`` of the "sim" stream. Work is
split into fixed chunks of replicates which may run in worker processes;
chunk results are reassembled in replicate order, so outputs depend only
on the configuration and the seed.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import coincidence_matrix, t_from_parts
from .permutation import TestConfig, decide, null_diag_sums
from .rng import RandomStream, as_stream
from .simulate import HawkesParams, JitterParams, simulate_batch

Z95 = 1.96
TRIALS_PER_CHUNK = 4000


@dataclass(frozen=True)
class PowerPoint:
    param: str
    value: float
    power: float
    ci_half: float
    N_sim: int
    n: int
    B: int
    alpha: float

    def row(self):
        return [self.param, self.value, self.power, self.ci_half, self.N_sim, self.n,
                self.B, self.alpha]


POWER_HEADER = ["param", "value", "power", "ci_half", "N_sim", "n", "B", "alpha"]


def ci_half_width(p, N):
    """Half-width of the normal-approximation 95% binomial interval."""
    return Z95 * math.sqrt(p * (1 - p) / N)


def level_slack(alpha, N):
    """Three binomial standard errors at the nominal level."""
    return 3 * math.sqrt(alpha * (1 - alpha) / N)


# replicate workers


def _sim_keys(base_key, replicate, n):
    return RandomStream(base_key).spawn("sim", replicate).spawn_keys(np.arange(n))


def _simulate_replicates(model, base_key, reps, n):
    keys = np.concatenate([_sim_keys(base_key, r, n) for r in reps])
    r1, r2 = simulate_batch(model, keys)
    for k in range(len(reps)):
        yield r1.slice(k * n, (k + 1) * n), r2.slice(k * n, (k + 1) * n)


def _chunk_task(task):
    kind, model, base_key, reps, n, opts = task
    out = []
    for rep, (r1, r2) in zip(reps, _simulate_replicates(model, base_key, reps, n)):
        if kind == "test":
            phi = coincidence_matrix(r1, r2, opts["delta"])
            perm = RandomStream(base_key).spawn("perm", rep)
            obs = int(np.trace(phi))
            null = null_diag_sums(phi, opts["B"], perm)
            _, p, reject = decide(obs, null, opts["alpha"])
            out.append((reject, p))
        elif kind == "tn":
            phi = coincidence_matrix(r1, r2, opts["delta"])
            diag = np.diag(phi)
            # f on disjoint pairs of trials (2k, 2k+1): independent draws of f_phi
            i = np.arange(0, n - 1, 2)
            f = diag[i] - phi[i, i + 1]
            out.append((t_from_parts(int(diag.sum()), int(phi.sum()), n), f))
        elif kind == "counts":
            out.append((r1.sizes(), r2.sizes()))
        else:
            raise ValueError(kind)
    return out


def _run(kind, model, base, N_sim, n, opts, workers):
    per_chunk = max(1, TRIALS_PER_CHUNK // max(n, 1))
    tasks = [(kind, model, base.key, list(range(s, min(s + per_chunk, N_sim))), n, opts)
             for s in range(0, N_sim, per_chunk)]
    if workers and workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(_chunk_task, tasks))
    else:
        chunks = [_chunk_task(t) for t in tasks]
    return [item for chunk in chunks for item in chunk]


def _base(rng, tag):
    return as_stream(rng).spawn(tag)


# estimators


def estimate_delta_phi_mc(model, n, N_sim, rng, delta, workers=1, tag="delta_phi"):
    """Mean of ``T_n`` over ``N_sim`` samples of ``n`` trials, with its standard error.

    Also returns the sample variance of ``T_n`` and draws of ``f_phi`` on
    disjoint trial pairs, which feed the variance checks.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    res = _run("tn", model, _base(rng, tag), N_sim, n, {"delta": delta}, workers)
    tn = np.array([r[0] for r in res])
    f = np.concatenate([r[1] for r in res])
    sd = tn.std(ddof=1) if N_sim > 1 else float("nan")
    return {"estimate": float(tn.mean()), "stderr": float(sd / math.sqrt(N_sim)),
            "tn": tn, "f": f}


def tn_variance_check(model, n, N_sim, rng, delta, workers=1):
    """Empirical ``V[T_n]`` against ``(4/n) V[f_phi]``, with standard errors.

    The standard error of a sample variance ``s^2`` of ``N`` draws is taken
    as ``sqrt((m4 - s^4)/N)``.
    """
    est = estimate_delta_phi_mc(model, n, N_sim, rng, delta, workers, tag="tn_variance")

    def var_se(x):
        v = x.var(ddof=1)
        m4 = np.mean((x - x.mean()) ** 4)
        return float(v), float(math.sqrt(max(m4 - v * v, 0.0) / x.size))

    v_tn, se_tn = var_se(est["tn"])
    v_f, se_f = var_se(est["f"].astype(float))
    return {"var_tn": v_tn, "var_tn_se": se_tn, "var_f": v_f, "var_f_se": se_f,
            "bound": 4.0 / n * v_f, "bound_se": 4.0 / n * se_f}


def f_phi_moments(model, delta, N_pairs, rng, workers=1):
    """Mean and variance of ``f_phi(X_1, X_2)`` over independent trial pairs."""
    est = estimate_delta_phi_mc(model, 2, N_pairs, rng, delta, workers, tag="f_phi")
    f = est["f"].astype(float)
    v = f.var(ddof=1)
    m4 = np.mean((f - f.mean()) ** 4)
    return {"mean": float(f.mean()), "mean_se": float(f.std(ddof=1) / math.sqrt(f.size)),
            "variance": float(v), "variance_se": float(math.sqrt(max(m4 - v * v, 0) / f.size))}


def count_moments(model, N_sim, rng, workers=1):
    """Per-trial spike counts of both coordinates over ``N_sim`` single trials."""
    res = _run("counts", model, _base(rng, "counts"), N_sim, 1, {}, workers)
    c1 = np.concatenate([r[0] for r in res])
    c2 = np.concatenate([r[1] for r in res])
    return c1, c2


def _cfg_stream(cfg, rng):
    return as_stream(cfg.seed if rng is None else rng)


def estimate_power(model, cfg, n, N_sim, rng=None, workers=1, param="n", value=None):
    """Fraction of ``N_sim`` permutation tests that reject."""
    base = _base(_cfg_stream(cfg, rng), f"power:{param}={value if value is not None else n!r}")
    opts = {"delta": cfg.delta, "alpha": cfg.alpha, "B": cfg.B}
    res = _run("test", model, base, N_sim, n, opts, workers)
    p = sum(r[0] for r in res) / N_sim
    return PowerPoint(param, float(n if value is None else value), p, ci_half_width(p, N_sim),
                      N_sim, n, cfg.B, cfg.alpha)


def _with_param(model, cfg, n, param, value):
    if param == "delta":
        return model, replace(cfg, delta=float(value)), n
    if param == "n":
        return model, cfg, int(value)
    if param == "M":
        if not isinstance(model, HawkesParams):
            raise ValueError("an M grid needs a Hawkes model")
        return replace(model, M=int(value)), cfg, n
    if param == "eta":
        if not isinstance(model, JitterParams):
            raise ValueError("an eta grid needs a jitter model")
        return replace(model, eta=float(value)), cfg, n
    raise ValueError(f"unknown grid parameter {param!r}")


def power_curve(model, cfg, param, grid, n, N_sim, rng=None, workers=1):
    """One :class:`PowerPoint` per grid value of ``param`` (delta, n, M or eta)."""
    grid = list(grid)
    if not grid:
        raise ValueError("empty grid")
    if sorted(grid) != grid:
        raise ValueError("grid must be sorted")
    out = []
    for v in grid:
        m, c, nn = _with_param(model, cfg, n, param, v)
        out.append(estimate_power(m, c, nn, N_sim, rng, workers, param=param, value=v))
    return out


def is_null_model(model):
    if isinstance(model, JitterParams):
        return model.eta == 0
    if isinstance(model, HawkesParams):
        return model.independent
    return False


def type_i_experiment(model, cfg, n, N_sim, rng=None, workers=1):
    """Rejection rate under a null model (``eta = 0`` or independent networks)."""
    if not is_null_model(model):
        raise ValueError("type I experiments need a model satisfying independence")
    return estimate_power(model, cfg, n, N_sim, rng, workers, param="typeI", value=n)


# n* search


class SaturationError(RuntimeError):
    """Target power not reached within the search range."""

    def __init__(self, message, probes):
        super().__init__(message)
        self.probes = probes


@dataclass(frozen=True)
class NStarSearch:
    n_lo: int = 10
    step: int = 10
    n_max: int = 2000
    N_sim: int = 1000


@dataclass
class NStarResult:
    n_star: int
    probes: list = field(default_factory=list)  # (n, power, ci_half) in probe order

    def probe_text(self):
        return ";".join(f"{n}:{p!r}" for n, p, _ in self.probes)


def find_n_star(model, cfg, beta, search, rng=None, workers=1):
    """Smallest lattice ``n`` with estimated power at least ``1 - beta``.

    The lattice is ``n_lo + k step``. Indices ``0, 1, 3, 7, ...`` are probed
    until one passes, then the gap to the last failing index is bisected.
    ``model`` may also be a callable ``n -> power`` (used for testing the
    search on its own).
    """
    target = 1 - beta
    probes = []
    cache = {}

    def power(k):
        n = search.n_lo + k * search.step
        if k not in cache:
            if callable(model) and not isinstance(model, (JitterParams, HawkesParams)):
                p, ci = float(model(n)), 0.0
            else:
                pt = estimate_power(model, cfg, n, search.N_sim, rng, workers, "n", n)
                p, ci = pt.power, pt.ci_half
            cache[k] = p
            probes.append((n, p, ci))
        return cache[k]

    k_max = (search.n_max - search.n_lo) // search.step
    if k_max < 0:
        raise ValueError("n_max below n_lo")
    lo, k = -1, 0
    while power(k) < target:
        lo = k
        if k == k_max:
            raise SaturationError(f"power {1 - beta} not reached by n={search.n_max}", probes)
        k = min(2 * k + 1, k_max)
    hi = k
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if power(mid) >= target:
            hi = mid
        else:
            lo = mid
    return NStarResult(search.n_lo + hi * search.step, probes)


def fit_quadratic(Ms, nstars):
    """Least squares ``n* ~ c0 + c1 M^2`` with the standard error of ``c1``."""
    Ms = np.asarray(Ms, dtype=float)
    y = np.asarray(nstars, dtype=float)
    if Ms.size < 2 or Ms.size != y.size:
        raise ValueError("need at least two (M, n*) points")
    X = np.column_stack([np.ones_like(Ms), Ms ** 2])
    if np.linalg.matrix_rank(X) < 2:
        raise np.linalg.LinAlgError("singular design: all M equal")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = Ms.size - 2
    if dof > 0:
        s2 = float(resid @ resid) / dof
        cov = s2 * np.linalg.inv(X.T @ X)
        c1_se = float(math.sqrt(max(cov[1, 1], 0.0)))
    else:
        c1_se = float("nan")
    return {"c0": float(coef[0]), "c1": float(coef[1]), "residuals": resid, "c1_se": c1_se}


def default_test_config(alpha=0.05, delta=0.1, B=500, seed=0):
    return TestConfig(alpha=alpha, delta=delta, B=B, seed=seed)
