"""Dendrograms and numeric cumulant densities of the exponential Hawkes process.

A dendrogram on ``l`` labelled leaves is a rooted tree in which every
internal node has at least two children (series-reduced). Leaves are the
integers ``1..l``; an internal node is a tuple of children in canonical
order. The immigrant above the top node is implicit.

The off-diagonal density of the ``l``-th cumulant at distinct times is the
sum over all dendrograms of a nested integral. The immigrant and its
offspring chain down to the top node integrate to the constant
``mu / (1 - ell)`` times Lebesgue measure for the top node. Each internal
node then contributes two cases: it sits strictly below all its leaves
(a continuous integral over its position, weighted by ``psi`` from its
parent) or it coincides with one of its leaf children. In the second case
only the earliest leaf of the subtree can contribute, since ``psi``
vanishes on non-positive arguments.

Writing an internal node position as ``w = m + log(u)/r`` with ``m`` the
earliest leaf below it turns every integrand into a polynomial in ``u``
of degree below ``l``. Gauss-Legendre rules on ``u`` are therefore exact
at modest order, and the doubling check in
:func:`eval_cumulant_density` only guards against round-off.
"""

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .hawkes import chain_integral
from .simulate import _check_kernel

MAX_ENUMERATE = 5
MAX_EVALUATE = 4


class DiagonalError(ValueError):
    """Times coincide; use ``1{t_i = t_j} k_l = delta * k_{l-1}`` instead."""


def _key(node):
    if isinstance(node, int):
        return (0, node)
    return (1, tuple(_key(c) for c in node))


def canonical(node):
    """Sort children recursively so equal trees have equal representations."""
    if isinstance(node, int):
        return node
    return tuple(sorted((canonical(c) for c in node), key=_key))


def _shape(node):
    if isinstance(node, int):
        return ()
    return tuple(sorted(_shape(c) for c in node))


def _leaves(node):
    if isinstance(node, int):
        return (node,)
    return tuple(sorted(x for c in node for x in _leaves(c)))


def _height(node):
    if isinstance(node, int):
        return 0
    return 1 + max(_height(c) for c in node)


def _newick(node):
    if isinstance(node, int):
        return str(node)
    return "(" + ",".join(_newick(c) for c in node) + ")"


def _shape_text(shape):
    if shape == ():
        return "*"
    return "(" + ",".join(_shape_text(c) for c in shape) + ")"


@dataclass(frozen=True)
class Dendrogram:
    """Series-reduced rooted tree on labelled leaves ``1..l``."""

    root: tuple

    def __post_init__(self):
        if isinstance(self.root, int):
            raise ValueError("the top node must be internal")
        object.__setattr__(self, "root", canonical(self.root))
        self._validate(self.root)
        if self.leaves != tuple(range(1, len(self.leaves) + 1)):
            raise ValueError("leaf labels must be 1..l")

    def _validate(self, node):
        if isinstance(node, int):
            return
        if len(node) < 2:
            raise ValueError("internal nodes need at least two children")
        for c in node:
            self._validate(c)

    @property
    def leaves(self):
        return _leaves(self.root)

    @property
    def size(self):
        return len(self.leaves)

    @property
    def shape(self):
        return _shape(self.root)

    @property
    def height(self):
        return _height(self.root)

    def __str__(self):
        return _newick(self.root)


@dataclass(frozen=True)
class EquivalenceClass:
    """Dendrograms sharing one unlabelled shape."""

    shape: tuple
    multiplicity: int
    members: tuple = ()

    def __str__(self):
        return _shape_text(self.shape)


def count_dendrograms(l):
    """Number of dendrograms on ``l`` labelled leaves.

    Uses ``a(n) = sum_{s=1}^{n-1} C(n-1, s-1) a(s) P(n-s)``, where ``P``
    counts set partitions with a tree on each block and the sum fixes the
    block holding leaf 1.
    """
    if int(l) != l or l < 2:
        raise ValueError("l must be an integer >= 2")
    a = [0, 1]
    P = [1, 1]
    for n in range(2, l + 1):
        an = sum(math.comb(n - 1, s - 1) * a[s] * P[n - s] for s in range(1, n))
        a.append(an)
        P.append(2 * an)
    return a[l]


def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


@lru_cache(maxsize=None)
def _trees(labels):
    if len(labels) == 1:
        return (labels[0],)
    out = []
    for part in _set_partitions(list(labels)):
        if len(part) < 2:
            continue
        choices = [_trees(tuple(sorted(block))) for block in part]
        for combo in _product(choices):
            out.append(canonical(tuple(combo)))
    return tuple(out)


def _product(choices):
    if not choices:
        yield ()
        return
    for head in choices[0]:
        for tail in _product(choices[1:]):
            yield (head,) + tail


def enumerate_dendrograms(l):
    """All dendrograms on ``l`` leaves (``2 <= l <= 5``), in a fixed order."""
    if int(l) != l or l < 2:
        raise ValueError("l must be an integer >= 2")
    if l > MAX_ENUMERATE:
        raise ValueError(f"enumeration is capped at l = {MAX_ENUMERATE}")
    trees = sorted(set(_trees(tuple(range(1, l + 1)))), key=_key)
    return [Dendrogram(t) for t in trees]


def _class_order(shape):
    sizes = sorted((len(_leaves_of_shape(c)) for c in shape), reverse=True)
    return (_shape_height(shape), -len(shape), tuple(-s for s in sizes))


def _leaves_of_shape(shape):
    if shape == ():
        return [0]
    return [x for c in shape for x in _leaves_of_shape(c)]


def _shape_height(shape):
    return 0 if shape == () else 1 + max(_shape_height(c) for c in shape)


def equivalence_classes(l):
    """Shape classes of the dendrograms on ``l`` leaves (``2 <= l <= 4``).

    Classes are ordered by height, then by decreasing number of children of
    the top node, then by the largest subtree first. For ``l = 4`` this gives
    the star, one cherry plus two leaves, a triple plus one leaf, two
    cherries, and the caterpillar.
    """
    if int(l) != l or not 2 <= l <= MAX_EVALUATE:
        raise ValueError(f"classes are provided for 2 <= l <= {MAX_EVALUATE}")
    groups = {}
    for d in enumerate_dendrograms(l):
        groups.setdefault(d.shape, []).append(d)
    shapes = sorted(groups, key=_class_order)
    return [EquivalenceClass(s, len(groups[s]), tuple(groups[s])) for s in shapes]


# numeric evaluation


def _gauss_legendre(q):
    x, w = np.polynomial.legendre.leggauss(q)
    return x, w


class _Evaluator:
    """Nested-quadrature evaluation of one dendrogram over a batch of tuples."""

    def __init__(self, times, a, b, q):
        self.t = times  # (N, l)
        self.a = a
        self.r = b - a
        self.x, self.w = _gauss_legendre(q)

    def psi(self, s):
        return np.where(s > 0, self.a * np.exp(-self.r * np.maximum(s, 0.0)), 0.0)

    def leaf_time(self, label, ndim):
        t = self.t[:, label - 1]
        return t.reshape(t.shape + (1,) * (ndim - 1))

    def subtree_min(self, node, ndim):
        m = self.t[:, [i - 1 for i in _leaves(node)]].min(axis=1)
        return m.reshape(m.shape + (1,) * (ndim - 1))

    def child(self, c, pos):
        if isinstance(c, int):
            return self.psi(self.leaf_time(c, pos.ndim) - pos)
        return self.value(c, pos)

    def node_value(self, node, parent):
        """Weight of ``node`` and everything below it, given its parent position.

        ``parent`` is ``None`` for the top node. The result has the shape
        of ``parent`` (or ``(N,)`` for the top node).
        """
        top = parent is None
        ndim = 1 if top else parent.ndim
        m = self.subtree_min(node, ndim)
        total = 0.0
        # the node coincides with one of its leaf children
        for k in node:
            if not isinstance(k, int):
                continue
            tk = self.leaf_time(k, ndim)
            pos = np.broadcast_to(tk, m.shape if top else parent.shape)
            term = 1.0 if top else self.psi(tk - parent)
            for c in node:
                if c != k:
                    term = term * self.child(c, pos)
            total = total + term
        # the node lies strictly below all its leaves
        if top and all(isinstance(c, int) for c in node):
            al = np.sort(self.t[:, [c - 1 for c in node]], axis=1)
            total = total + chain_integral(al, self.a, self.a + self.r)
        else:
            total = total + self._continuous(node, parent, m)
        return total

    value = node_value

    def _continuous(self, node, parent, m):
        if parent is None:
            u_lo = np.zeros_like(m)
        else:
            u_lo = np.exp(self.r * np.minimum(parent - m, 0.0))
        half = 0.5 * (1.0 - u_lo)
        u = u_lo[..., None] + half[..., None] * (self.x + 1.0)
        pos = m[..., None] + np.log(u) / self.r
        integrand = 1.0 if parent is None else self.psi(pos - parent[..., None])
        for c in node:
            integrand = integrand * self.child(c, pos)
        weights = half[..., None] * self.w / (self.r * u)
        return np.sum(integrand * weights, axis=-1)


def _check_times(times, l):
    t = np.asarray(times, dtype=np.float64)
    if t.shape[-1] != l:
        raise ValueError(f"expected {l} times along the last axis")
    st = np.sort(t, axis=-1)
    if np.any(np.diff(st, axis=-1) == 0):
        raise DiagonalError("coincident times: reduce with 1{t_i = t_j} k_l = delta * k_{l-1}")
    return t


def eval_dendrogram(d, times, mu, a, b, q=4):
    """Contribution of one dendrogram to the cumulant density (batched over rows)."""
    _check_kernel(a, b)
    t = np.atleast_2d(_check_times(times, d.size))
    ev = _Evaluator(t, a, b, q)
    return mu / (1 - a / b) * ev.node_value(d.root, None)


def _eval_all(l, t, mu, a, b, q):
    total = np.zeros(t.shape[0])
    for d in enumerate_dendrograms(l):
        total += eval_dendrogram(d, t, mu, a, b, q)
    return total


def eval_cumulant_density(l, times, mu, a, b, quad_tol=1e-8, q=4, max_q=64):
    """Off-diagonal density of the ``l``-th cumulant at distinct ``times``.

    ``times`` may be a single tuple or an ``(N, l)`` array. The quadrature
    order is doubled until two consecutive orders agree to ``quad_tol``
    (relative).
    """
    if int(l) != l or not 2 <= l <= MAX_EVALUATE:
        raise ValueError(f"evaluation is provided for 2 <= l <= {MAX_EVALUATE}")
    _check_kernel(a, b)
    raw = np.asarray(times, dtype=np.float64)
    t = np.atleast_2d(_check_times(raw, l))
    prev = _eval_all(l, t, mu, a, b, q)
    while True:
        q2 = 2 * q
        cur = _eval_all(l, t, mu, a, b, q2)
        scale = np.maximum(np.abs(cur), np.finfo(float).tiny)
        if np.all(np.abs(cur - prev) <= quad_tol * scale) or q2 >= max_q:
            break
        prev, q = cur, q2
    return float(cur[0]) if raw.ndim == 1 else cur


def class_contributions(l, times, mu, a, b, q=4):
    """Per-class sums over member dendrograms, in :func:`equivalence_classes` order."""
    t = np.atleast_2d(_check_times(times, l))
    out = []
    for cls in equivalence_classes(l):
        out.append(sum(eval_dendrogram(d, t, mu, a, b, q) for d in cls.members))
    return np.array(out)


def window_third_cumulant(w, mu, a, b, q=16):
    """Third cumulant of the count ``N[0, w]``.

    Sums the off-diagonal density over ``[0, w]^3``, three copies of the
    second-order density on the pair diagonals, and ``k1 w`` on the full
    diagonal. The triple integral is six times the integral over the
    ordered simplex, computed with a collapsed tensor Gauss-Legendre rule.
    """
    _check_kernel(a, b)
    x, g = _gauss_legendre(q)
    x = 0.5 * (x + 1.0)
    g = 0.5 * g
    X3, X2, X1 = np.meshgrid(x, x, x, indexing="ij")
    G = (g[:, None, None] * g[None, :, None] * g[None, None, :])
    t3 = w * X3
    t2 = t3 * X2
    t1 = t2 * X1
    jac = w * t3 * t2
    pts = np.stack([t1.ravel(), t2.ravel(), t3.ravel()], axis=1)
    dens = eval_cumulant_density(3, pts, mu, a, b)
    i3 = 6.0 * np.sum(dens * (G * jac).ravel())
    ell, r = a / b, b - a
    c2 = a * mu / (1 - ell) * (1 + 0.5 * ell / (1 - ell))
    i2 = 2 * c2 * (w / r + np.expm1(-r * w) / r ** 2)
    return i3 + 3 * i2 + mu / (1 - ell) * w


def calibrate_envelope(l, times, mu, a, b):
    """Largest ratio of density to the ``C_l = 1`` envelope over the rows of ``times``."""
    from .hawkes import cumulant_bound_density
    dens = eval_cumulant_density(l, np.atleast_2d(times), mu, a, b)
    env = cumulant_bound_density(l, np.atleast_2d(times), mu, a, b, 1.0)
    return float(np.max(dens / env))


def class_bound_constant(l, ell=None):
    """Envelope constant implied by summing the per-class bounds.

    Rewritten against ``a^(l-1) mu / (1 - ell)^l exp(-r spread)`` the class
    bounds give, for ``l = 3``, ``(1-ell)^2 + ell(1-ell)/3 + 3 <= 4`` and,
    for ``l = 4``,
    ``(1-ell)^3 + ell(1-ell)^2/4 + 10(1-ell) + 3 ell/2 + 12 <= 24.75``.
    With ``ell=None`` the uniform ceiling is returned.
    """
    if l == 2:
        return 1.0 if ell is None else (1 - ell) + 0.5 * ell
    if l == 3:
        return 4.0 if ell is None else (1 - ell) ** 2 + ell * (1 - ell) / 3 + 3
    if l == 4:
        if ell is None:
            return 1 + 0.25 + 10 + 1.5 + 12
        return (1 - ell) ** 3 + 0.25 * ell * (1 - ell) ** 2 + 10 * (1 - ell) + 1.5 * ell + 12
    raise ValueError("l must be 2, 3 or 4")


def multiplicities(l):
    return [c.multiplicity for c in equivalence_classes(l)]


def class_summary(l):
    """``(label, shape text, multiplicity)`` rows for display."""
    letters = "abcdefghijklmnopqrstuvwxyz"
    if l <= MAX_EVALUATE:
        classes = equivalence_classes(l)
    else:
        counts = Counter(d.shape for d in enumerate_dendrograms(l))
        classes = [EquivalenceClass(s, m) for s, m in sorted(counts.items(),
                                                            key=lambda kv: _class_order(kv[0]))]
    return [(letters[i] if i < 26 else str(i), str(c), c.multiplicity)
            for i, c in enumerate(classes)]
