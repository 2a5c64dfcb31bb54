"""Spike-train containers and coincidence statistics.

The coincidence count between trains ``u`` and ``v`` with delay ``delta`` is
the number of pairs with ``|u_k - v_l| <= delta`` (inclusive, exact float
comparison). From it we build the trial mean ``C_n``, the pairwise kernel
``f_phi`` and the U-statistic ``T_n``.

Statistics over many trials work on a :class:`Ragged` layout (one flat
sorted array per coordinate plus trial offsets) so that the all-pairs
matrix ``Phi[i, j] = phi(X_i^1, X_j^2)`` can be built without Python loops
over points.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np


class DuplicateTimeWarning(UserWarning):
    """A spike train holds repeated time stamps; each copy is counted."""


def _check_delta(delta):
    if not delta >= 0:
        raise ValueError(f"delta must be >= 0, got {delta}")


@dataclass(frozen=True, eq=False)
class SpikeTrain:
    """Finite point configuration on ``[0, T]``.

    Times are copied and sorted on construction. Repeated values are kept
    and trigger a :class:`DuplicateTimeWarning`.
    """

    times: np.ndarray
    T: float

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"horizon T must be > 0, got {self.T}")
        t = np.sort(np.asarray(self.times, dtype=np.float64).ravel())
        if t.size and (t[0] < 0 or t[-1] > self.T):
            raise ValueError("spike times must lie in [0, T]")
        if not np.all(np.isfinite(t)):
            raise ValueError("spike times must be finite")
        if t.size > 1 and np.any(t[1:] == t[:-1]):
            warnings.warn("duplicate spike times; each copy is counted separately",
                          DuplicateTimeWarning, stacklevel=3)
        t.flags.writeable = False
        object.__setattr__(self, "times", t)

    def __len__(self):
        return self.times.size

    def __eq__(self, other):
        return (isinstance(other, SpikeTrain) and self.T == other.T
                and np.array_equal(self.times, other.times))


@dataclass(frozen=True)
class TrialPair:
    x1: SpikeTrain
    x2: SpikeTrain

    def __post_init__(self):
        if self.x1.T != self.x2.T:
            raise ValueError("both trains of a trial must share the horizon T")

    @property
    def T(self):
        return self.x1.T


@dataclass(frozen=True)
class Sample:
    """An i.i.d. collection of trials sharing one horizon."""

    trials: tuple
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        trials = tuple(self.trials)
        if len(trials) < 1:
            raise ValueError("a sample needs at least one trial")
        T = trials[0].T
        if any(tr.T != T for tr in trials):
            raise ValueError("all trials must share the horizon T")
        object.__setattr__(self, "trials", trials)

    @classmethod
    def from_arrays(cls, x1s, x2s, T):
        if len(x1s) != len(x2s):
            raise ValueError("x1s and x2s must have the same length")
        return cls(tuple(TrialPair(SpikeTrain(a, T), SpikeTrain(b, T))
                         for a, b in zip(x1s, x2s)))

    @property
    def n(self):
        return len(self.trials)

    @property
    def T(self):
        return self.trials[0].T

    def __len__(self):
        return self.n

    def __iter__(self):
        return iter(self.trials)

    def __getitem__(self, i):
        return self.trials[i]

    def ragged(self):
        """(Ragged of first coordinates, Ragged of second coordinates)."""
        if "ragged" not in self._cache:
            self._cache["ragged"] = (
                Ragged.from_list([tr.x1.times for tr in self.trials]),
                Ragged.from_list([tr.x2.times for tr in self.trials]))
        return self._cache["ragged"]


class Ragged:
    """Concatenated per-trial sorted times with offsets.

    Trial ``i`` occupies ``times[offsets[i]:offsets[i+1]]``.
    """

    __slots__ = ("times", "offsets")

    def __init__(self, times, offsets):
        self.times = np.asarray(times, dtype=np.float64)
        self.offsets = np.asarray(offsets, dtype=np.int64)

    @classmethod
    def from_list(cls, arrays):
        arrays = [np.asarray(a, dtype=np.float64) for a in arrays]
        sizes = np.fromiter((a.size for a in arrays), dtype=np.int64, count=len(arrays))
        offsets = np.zeros(len(arrays) + 1, dtype=np.int64)
        np.cumsum(sizes, out=offsets[1:])
        times = np.concatenate(arrays) if arrays else np.empty(0)
        return cls(times, offsets)

    @property
    def n(self):
        return self.offsets.size - 1

    def __len__(self):
        return self.n

    def __getitem__(self, i):
        return self.times[self.offsets[i]:self.offsets[i + 1]]

    def sizes(self):
        return np.diff(self.offsets)

    def to_list(self):
        return [self[i] for i in range(self.n)]

    def slice(self, start, stop):
        """Trials ``start .. stop-1`` as a new Ragged (views, no copy)."""
        lo, hi = self.offsets[start], self.offsets[stop]
        return Ragged(self.times[lo:hi], self.offsets[start:stop + 1] - lo)


def _times(x):
    return x.times if isinstance(x, SpikeTrain) else np.asarray(x, dtype=np.float64)


def _window_counts(points, sorted_ref, delta):
    """For each point, how many entries of ``sorted_ref`` lie within delta."""
    hi = np.searchsorted(sorted_ref, points + delta, side="right")
    lo = np.searchsorted(sorted_ref, points - delta, side="left")
    return hi - lo


def coincidence_count(x1, x2, delta):
    """Number of pairs ``(u, v)`` in ``x1 x x2`` with ``|u - v| <= delta``.

    Both inputs must be sorted (SpikeTrain guarantees it). Each point of the
    shorter train is located in the longer one by binary search, which is the
    vectorised form of a two-pointer sweep.
    """
    _check_delta(delta)
    u, v = _times(x1), _times(x2)
    if u.size == 0 or v.size == 0:
        return 0
    if u.size > v.size:
        u, v = v, u
    return int(_window_counts(u, v, delta).sum())


def f_phi(pair_i, pair_j, delta):
    """``phi(X_i^1, X_i^2) - phi(X_i^1, X_j^2)``."""
    if pair_i.T != pair_j.T:
        raise ValueError("trials must share the horizon T")
    return (coincidence_count(pair_i.x1, pair_i.x2, delta)
            - coincidence_count(pair_i.x1, pair_j.x2, delta))


def _segment_sums(values, offsets):
    c = np.zeros(values.size + 1, dtype=np.int64)
    np.cumsum(values, out=c[1:])
    return c[offsets[1:]] - c[offsets[:-1]]


def diagonal_counts(r1, r2, delta):
    """``phi(X_i^1, X_i^2)`` for every trial, as an int64 array."""
    _check_delta(delta)
    out = np.empty(r1.n, dtype=np.int64)
    for i in range(r1.n):
        out[i] = coincidence_count(r1[i], r2[i], delta)
    return out


def coincidence_matrix(r1, r2, delta, max_cells=20_000_000):
    """All-pairs matrix ``Phi[i, j] = phi(X_i^1, X_j^2)`` (int64, n x n).

    All second-coordinate points are pooled in one sorted array together
    with a running count per trial. Each first-coordinate point then reads
    its window counts for every trial at once as a difference of two rows
    of that table, and rows are summed per trial. When the table would
    exceed ``max_cells`` entries the columns are built one trial at a time.
    """
    _check_delta(delta)
    n = r1.n
    if r2.n != n:
        raise ValueError("both coordinates must have the same number of trials")
    if r1.times.size == 0 or r2.times.size == 0:
        return np.zeros((n, n), dtype=np.int64)
    if (r2.times.size + 1) * n > max_cells or r1.times.size * n > max_cells:
        return _coincidence_matrix_columns(r1, r2, delta)
    labels = np.repeat(np.arange(n), r2.sizes())
    order = np.argsort(r2.times, kind="stable")
    pool = r2.times[order]
    running = np.zeros((pool.size + 1, n), dtype=np.int32)
    running[np.arange(1, pool.size + 1), labels[order]] = 1
    np.cumsum(running, axis=0, out=running)
    hi = np.searchsorted(pool, r1.times + delta, side="right")
    lo = np.searchsorted(pool, r1.times - delta, side="left")
    window = running[hi] - running[lo]
    acc = np.zeros((r1.times.size + 1, n), dtype=np.int64)
    np.cumsum(window, axis=0, out=acc[1:])
    return acc[r1.offsets[1:]] - acc[r1.offsets[:-1]]


def _coincidence_matrix_columns(r1, r2, delta):
    n = r1.n
    phi = np.zeros((n, n), dtype=np.int64)
    lo_pts = r1.times - delta
    hi_pts = r1.times + delta
    for j in range(n):
        ref = r2[j]
        if ref.size == 0:
            continue
        counts = (np.searchsorted(ref, hi_pts, side="right")
                  - np.searchsorted(ref, lo_pts, side="left"))
        phi[:, j] = _segment_sums(counts, r1.offsets)
    return phi


def pooled_cross_sum(r1, r2, delta):
    """``sum_{i,j} phi(X_i^1, X_j^2)`` via one sorted pool of second coordinates."""
    _check_delta(delta)
    if r1.times.size == 0 or r2.times.size == 0:
        return 0
    pool = np.sort(r2.times, kind="stable")
    return int(_window_counts(r1.times, pool, delta).sum())


def _as_ragged(sample):
    if isinstance(sample, Sample):
        return sample.ragged()
    r1, r2 = sample
    return r1, r2


def c_statistic(sample, delta):
    """Mean coincidence count over trials, ``C_n``."""
    r1, r2 = _as_ragged(sample)
    return float(diagonal_counts(r1, r2, delta).sum()) / r1.n


def cross_sum(sample, delta):
    """``sum_{i,j=1..n} phi(X_i^1, X_j^2)`` over all ordered trial pairs."""
    r1, r2 = _as_ragged(sample)
    return pooled_cross_sum(r1, r2, delta)


def t_from_parts(diag_sum, total, n):
    """``T_n`` from the diagonal sum ``n C_n`` and the cross sum."""
    return (n * diag_sum - total) / (n * (n - 1.0))


def t_statistic(sample, delta):
    """U-statistic ``T_n = (1/(n(n-1))) sum_{i != j} f_phi(X_i, X_j)``.

    Evaluated through ``n/(n-1) C_n - cross_sum/(n(n-1))``.
    """
    r1, r2 = _as_ragged(sample)
    n = r1.n
    if n < 2:
        raise ValueError("T_n needs at least two trials")
    diag = int(diagonal_counts(r1, r2, delta).sum())
    return t_from_parts(diag, pooled_cross_sum(r1, r2, delta), n)
