"""Generators for Poisson, jittered-injection and mean-field Hawkes trials.

Every trial owns one stream key. The batch functions take an array of keys
and advance all trials together with numpy, but each trial reads only its
own stream, so a trial's content is the same whether it is simulated alone
or inside any batch. The single-trial functions are thin wrappers over the
batch ones.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

from .core import Ragged, Sample, SpikeTrain, TrialPair
from .rng import as_stream, child_keys, uniforms


class SubcriticalityError(ValueError):
    """Raised when a Hawkes kernel has ``a >= b``."""


@dataclass(frozen=True)
class NoiseSpec:
    """Jitter-noise law.

    ``kind`` is ``"uniform"`` (on ``[lo, hi]``; ``lo == hi`` is a point
    mass), ``"tridec"`` (density ``2(D - x)/D^2`` on ``[0, D]``) or
    ``"triinc"`` (density ``2x/D^2`` on ``[0, D]``).
    """

    kind: str
    lo: float = 0.0
    hi: float = 0.0
    D: float = 0.0

    def __post_init__(self):
        if self.kind == "uniform":
            if not self.lo <= self.hi:
                raise ValueError("uniform noise needs lo <= hi")
        elif self.kind in ("tridec", "triinc"):
            if not self.D > 0:
                raise ValueError("triangular noise needs D > 0")
        else:
            raise ValueError(f"unknown noise kind {self.kind!r}")

    @classmethod
    def uniform(cls, lo, hi):
        return cls("uniform", lo=float(lo), hi=float(hi))

    @classmethod
    def triangular_decreasing(cls, D):
        return cls("tridec", D=float(D))

    @classmethod
    def triangular_increasing(cls, D):
        return cls("triinc", D=float(D))

    @classmethod
    def parse(cls, text):
        """Parse ``uniform:lo,hi``, ``tridec:D`` or ``triinc:D``."""
        kind, _, args = text.partition(":")
        vals = [float(v) for v in args.split(",") if v.strip()]
        kind = kind.strip()
        if kind == "uniform" and len(vals) == 2:
            return cls.uniform(*vals)
        if kind in ("tridec", "triinc") and len(vals) == 1:
            return cls(kind, D=vals[0])
        raise ValueError(f"cannot parse noise spec {text!r}")

    def __str__(self):
        if self.kind == "uniform":
            return f"uniform:{self.lo!r},{self.hi!r}"
        return f"{self.kind}:{self.D!r}"

    def to_dict(self):
        return str(self)

    @property
    def radius(self):
        """Smallest ``R`` with ``P(|xi| <= R) = 1``."""
        if self.kind == "uniform":
            return max(abs(self.lo), abs(self.hi))
        return self.D

    def ppf(self, u):
        """Inverse CDF, vectorised over ``u`` in (0, 1)."""
        u = np.asarray(u, dtype=np.float64)
        if self.kind == "uniform":
            return self.lo + u * (self.hi - self.lo)
        if self.kind == "tridec":
            return self.D * (1.0 - np.sqrt(1.0 - u))
        return self.D * np.sqrt(u)

    def pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "uniform":
            if self.hi == self.lo:
                raise ValueError("a point mass has no density")
            return np.where((x >= self.lo) & (x <= self.hi), 1.0 / (self.hi - self.lo), 0.0)
        inside = (x >= 0) & (x <= self.D)
        if self.kind == "tridec":
            return np.where(inside, 2.0 * (self.D - x) / self.D ** 2, 0.0)
        return np.where(inside, 2.0 * x / self.D ** 2, 0.0)


@dataclass(frozen=True)
class JitterParams:
    lambda1: float
    lambda2: float
    eta: float
    T: float
    noise: NoiseSpec
    margin: float = None

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "eta"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.T > 0:
            raise ValueError("T must be > 0")
        if self.margin is None:
            object.__setattr__(self, "margin", self.noise.radius)
        elif self.margin < self.noise.radius:
            raise ValueError("margin must cover the noise support radius")

    def to_dict(self):
        return {"model": "jitter", "lambda1": self.lambda1, "lambda2": self.lambda2,
                "eta": self.eta, "T": self.T, "noise": str(self.noise), "margin": self.margin}


@dataclass(frozen=True)
class HawkesParams:
    """Mean-field network observed through neurons 1 and 2.

    With ``independent=True`` the two observed trains come from two
    separately simulated networks, which is the null model.
    """

    nu: float
    a: float
    b: float
    M: int
    T: float
    warmup: float = 10.0
    independent: bool = False

    def __post_init__(self):
        _check_kernel(self.a, self.b)
        if not self.nu >= 0:
            raise ValueError("nu must be >= 0")
        if int(self.M) != self.M or self.M < 2:
            raise ValueError("M must be an integer >= 2")
        if not self.T > 0 or not self.warmup >= 0:
            raise ValueError("T must be > 0 and warmup >= 0")
        if self.warmup < 5.0 / (self.b - self.a):
            warnings.warn("warm-up shorter than 5 cluster decay times; "
                          "the process may be far from stationary", stacklevel=3)

    @property
    def ell(self):
        return self.a / self.b

    def to_dict(self):
        return {"model": "hawkes", "nu": self.nu, "a": self.a, "b": self.b, "M": self.M,
                "T": self.T, "warmup": self.warmup, "independent": self.independent}


def _check_kernel(a, b):
    if not (0 < a < b):
        raise SubcriticalityError(f"need 0 < a < b, got a={a}, b={b}")


def _group(trial_ids, times, n):
    """Ragged layout from unsorted (trial, time) pairs."""
    order = np.lexsort((times, trial_ids))
    counts = np.bincount(trial_ids, minlength=n)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return Ragged(times[order], offsets)


def poisson_points(keys, rate, t0, t1):
    """Homogeneous Poisson points on ``[t0, t1]`` for every key.

    Counter 0 gives the count by inverse CDF; counters ``1..k`` give the
    positions. Returns ``(trial_ids, times)``, unsorted within trial.
    """
    if not rate >= 0:
        raise ValueError("rate must be >= 0")
    if not t0 <= t1:
        raise ValueError("need t0 <= t1")
    keys = np.asarray(keys, dtype=np.uint64)
    mean = rate * (t1 - t0)
    if mean == 0 or keys.size == 0:
        return np.empty(0, dtype=np.int64), np.empty(0)
    counts = poisson.ppf(uniforms(keys, np.uint64(0)), mean).astype(np.int64)
    ids = np.repeat(np.arange(keys.size, dtype=np.int64), counts)
    starts = np.repeat(np.cumsum(counts) - counts, counts)
    k = np.arange(ids.size, dtype=np.int64) - starts
    u = uniforms(keys[ids], (k + 1).astype(np.uint64))
    return ids, t0 + (t1 - t0) * u


def jitter_batch(params, keys):
    """Model-1 trials, one per key, as ``(Ragged x1, Ragged x2)``."""
    keys = np.asarray(keys, dtype=np.uint64)
    n, T, m = keys.size, params.T, params.margin
    ids1, y1 = poisson_points(child_keys(keys, 0), params.lambda1, 0.0, T)
    ids2, y2 = poisson_points(child_keys(keys, 1), params.lambda2, 0.0, T)
    idz, z = poisson_points(child_keys(keys, 2), params.eta, -m, T + m)
    # index of each injected point within its trial selects its noise draw
    counts = np.bincount(idz, minlength=n)
    k = np.arange(idz.size) - np.repeat(np.cumsum(counts) - counts, counts)
    xi = params.noise.ppf(uniforms(child_keys(keys, 3)[idz], k.astype(np.uint64)))
    z2 = z + xi
    in1 = (z >= 0) & (z <= T)
    in2 = (z2 >= 0) & (z2 <= T)
    x1 = _group(np.concatenate([ids1, idz[in1]]), np.concatenate([y1, z[in1]]), n)
    x2 = _group(np.concatenate([ids2, idz[in2]]), np.concatenate([y2, z2[in2]]), n)
    return x1, x2


def hawkes_batch(mu, a, b, t_start, t_end, keys, labels=False, keep_from=None,
                 count_window=None, check_envelope=True):
    """Ogata thinning for a batch of independent univariate Hawkes paths.

    The excess intensity ``E = lambda - mu`` decays as ``exp(-b s)`` between
    points and jumps by ``a`` at each accepted point, so ``mu + E`` at the
    current time bounds the intensity until the next point. All paths start
    empty at ``t_start``. Step ``s`` of a path uses counters ``3s``,
    ``3s + 1`` (waiting time, acceptance) and ``3s + 2`` (label).

    Returns ``(trial_ids, times, label_u)`` for accepted points in
    ``[keep_from, t_end]`` (default: the whole path), where
    ``label_u`` holds the label uniforms when ``labels`` is truthy.
    With ``count_window=(lo, hi)`` only per-path counts in that window are
    returned.
    """
    _check_kernel(a, b)
    if not mu >= 0:
        raise ValueError("mu must be >= 0")
    keys = np.asarray(keys, dtype=np.uint64)
    n = keys.size
    idx = np.arange(n, dtype=np.int64)
    t = np.full(n, float(t_start))
    excess = np.zeros(n)
    keep_from = float(t_start) if keep_from is None else float(keep_from)
    out_ids, out_t, out_u = [], [], []
    counts = np.zeros(n, dtype=np.int64) if count_window is not None else None
    step = 0
    with np.errstate(divide="ignore"):
        while idx.size:
            k = keys[idx]
            c = np.uint64(3 * step)
            lam_bar = mu + excess
            w = -np.log(uniforms(k, c)) / lam_bar
            t_new = t + w
            alive = t_new <= t_end
            if not alive.all():
                idx, t_new, w, lam_bar, excess, k = (
                    idx[alive], t_new[alive], w[alive], lam_bar[alive], excess[alive], k[alive])
            decayed = excess * np.exp(-b * w)
            lam = mu + decayed
            if check_envelope and np.any(lam > lam_bar * (1 + 1e-12)):
                raise AssertionError("thinning envelope below the intensity")
            acc = uniforms(k, c + np.uint64(1)) * lam_bar <= lam
            excess = decayed + a * acc
            t = t_new
            if count_window is not None:
                hit = acc & (t_new >= count_window[0]) & (t_new <= count_window[1])
                counts[idx[hit]] += 1
            else:
                hit = acc & (t_new >= keep_from)
                if hit.any():
                    out_ids.append(idx[hit])
                    out_t.append(t_new[hit])
                    if labels:
                        out_u.append(uniforms(k[hit], c + np.uint64(2)))
            step += 1
    if count_window is not None:
        return counts
    cat = (lambda xs, dt: np.concatenate(xs) if xs else np.empty(0, dtype=dt))
    return cat(out_ids, np.int64), cat(out_t, np.float64), cat(out_u, np.float64)


def _labelled_trains(params, keys, which):
    """Trains of the given 0-based labels from one network per key."""
    mu = params.nu * params.M
    ids, t, u = hawkes_batch(mu, params.a, params.b, -params.warmup, params.T, keys,
                             labels=True, keep_from=0.0)
    lab = np.minimum((u * params.M).astype(np.int64), params.M - 1)
    return [_group(ids[lab == w], t[lab == w], keys.size) for w in which]


def hawkes_pair_batch(params, keys):
    """Model-2 trials, one per key, as ``(Ragged x1, Ragged x2)``."""
    keys = np.asarray(keys, dtype=np.uint64)
    if params.independent:
        (x1,) = _labelled_trains(params, child_keys(keys, 0), [0])
        (x2,) = _labelled_trains(params, child_keys(keys, 1), [1])
        return x1, x2
    x1, x2 = _labelled_trains(params, child_keys(keys, 0), [0, 1])
    return x1, x2


def simulate_batch(model, keys):
    if isinstance(model, JitterParams):
        return jitter_batch(model, keys)
    if isinstance(model, HawkesParams):
        return hawkes_pair_batch(model, keys)
    raise TypeError(f"unsupported model {type(model).__name__}")


def poisson_process(rate, t0, t1, rng):
    """Sorted Poisson points of intensity ``rate`` on ``[t0, t1]``."""
    key = np.array([as_stream(rng).key], dtype=np.uint64)
    _, times = poisson_points(key, rate, t0, t1)
    return np.sort(times)


def hawkes_univariate(mu, a, b, t_start, t_end, rng):
    """Sorted points of an exponential-kernel Hawkes path on ``[t_start, t_end]``."""
    key = np.array([as_stream(rng).key], dtype=np.uint64)
    _, times, _ = hawkes_batch(mu, a, b, t_start, t_end, key)
    return times


def _pair(model, rng):
    key = np.array([as_stream(rng).key], dtype=np.uint64)
    r1, r2 = simulate_batch(model, key)
    return TrialPair(SpikeTrain(r1[0], model.T), SpikeTrain(r2[0], model.T))


def jitter_trial(params, rng):
    return _pair(params, rng)


def hawkes_pair(params, rng):
    return _pair(params, rng)


def trial_keys(rng, n, start=0):
    """Keys of trials ``start .. start+n-1`` under ``rng``."""
    return as_stream(rng).spawn_keys(np.arange(start, start + n))


def iid_sample(model, n, rng):
    """``n`` independent trials; trial ``i`` uses child stream ``i`` of ``rng``."""
    if n < 2:
        raise ValueError("a sample needs n >= 2")
    r1, r2 = simulate_batch(model, trial_keys(rng, n))
    return Sample.from_arrays(r1.to_list(), r2.to_list(), model.T)

