"""Closed forms for the mean-field exponential Hawkes model.

The network of ``M`` neurons is a univariate Hawkes process with baseline
``mu = nu M`` and kernel ``a exp(-b t)``, each point labelled uniformly at
random. Everything here is expressed through ``ell = a/b`` and the cluster
decay rate ``r = b - a``, so nothing cancels when ``ell`` approaches 1.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import require
from .jitter import vardiff
from .simulate import _check_kernel


def _one_minus_exp(x):
    return -np.expm1(-x)


@dataclass(frozen=True)
class HawkesAnalyticsInput:
    nu: float
    a: float
    b: float
    M: int
    delta: float
    T: float
    C: float = 1.0
    C_prime: float = 1.0

    def __post_init__(self):
        _check_kernel(self.a, self.b)
        if not self.nu >= 0 or self.M < 1:
            raise ValueError("need nu >= 0 and M >= 1")
        if not 0 <= self.delta <= self.T:
            raise ValueError("need 0 <= delta <= T")

    @property
    def ell(self):
        return self.a / self.b

    @property
    def r(self):
        return self.b - self.a

    @property
    def mu(self):
        return self.nu * self.M

    @property
    def nu_eff(self):
        # nu + a/M, recurring in the variance bounds
        return self.nu + self.a / self.M

    def to_dict(self):
        return {"nu": self.nu, "a": self.a, "b": self.b, "M": self.M, "delta": self.delta,
                "T": self.T, "C": self.C, "C_prime": self.C_prime}


def psi(t, a, b):
    """Total offspring density over all generations: ``a exp(-(b - a) t)`` for ``t > 0``."""
    _check_kernel(a, b)
    t = np.asarray(t, dtype=np.float64)
    with np.errstate(over="ignore"):
        out = np.where(t > 0, a * np.exp(-(b - a) * np.maximum(t, 0.0)), 0.0)
    return out if out.ndim else float(out)


def psi_integral(a, b):
    """``int_0^inf psi = ell / (1 - ell) = a / (b - a)``."""
    _check_kernel(a, b)
    return a / (b - a)


def k1_rate(mu, ell):
    if not 0 <= ell < 1:
        raise ValueError(f"need 0 <= ell < 1, got {ell}")
    return mu / (1 - ell)


def k2_coefficient(mu, a, b):
    """Value at 0 of the off-diagonal second cumulant density."""
    _check_kernel(a, b)
    ell = a / b
    return a * mu / (1 - ell) * (1 + 0.5 * ell / (1 - ell))


def k2_density(s, mu, a, b):
    """Off-diagonal density of the second cumulant at lag ``s``."""
    s = np.asarray(s, dtype=np.float64)
    out = k2_coefficient(mu, a, b) * np.exp(-(b - a) * np.abs(s))
    return out if out.ndim else float(out)


def cumulant_bound_density(m, times, mu, a, b, C_m=1.0):
    """Envelope ``C_m a^(m-1) mu / (1 - ell)^m exp(-r (max t - min t))``.

    ``times`` has ``m`` entries along its last axis.
    """
    if m not in (1, 2, 3, 4):
        raise ValueError("envelopes are defined for m in 1..4")
    _check_kernel(a, b)
    times = np.asarray(times, dtype=np.float64)
    if times.shape[-1] != m:
        raise ValueError(f"expected {m} times along the last axis")
    spread = times.max(axis=-1) - times.min(axis=-1)
    out = C_m * a ** (m - 1) * mu / (1 - a / b) ** m * np.exp(-(b - a) * spread)
    return out if out.ndim else float(out)


def chain_integral(alphas, a, b):
    """``int prod_i psi(alpha_i - v) dv`` for ascending ``alphas`` (last axis).

    Equals ``a / (m (b - a)) prod_{i >= 2} psi(alpha_i - alpha_1)``, where a
    tie ``alpha_i = alpha_1`` is read as the right limit ``psi(0+) = a``.
    """
    _check_kernel(a, b)
    al = np.asarray(alphas, dtype=np.float64)
    m = al.shape[-1]
    if m < 2:
        raise ValueError("need at least two points")
    if np.any(np.diff(al, axis=-1) < 0):
        raise ValueError("alphas must be sorted ascending")
    gaps = al[..., 1:] - al[..., :1]
    out = a / (m * (b - a)) * np.prod(a * np.exp(-(b - a) * gaps), axis=-1)
    return out if out.ndim else float(out)


def _delta_hypothesis(inp):
    require(inp.delta <= inp.T / 2, f"delta={inp.delta} exceeds T/2={inp.T / 2}", strict=False)


def _prefactor(inp):
    ell = inp.ell
    return inp.nu * inp.delta / inp.M * (2 - ell) * ell / (1 - ell) ** 3


def delta_phi_hawkes(inp):
    """Separation ``Delta phi`` between neurons 1 and 2 of the network."""
    _delta_hypothesis(inp)
    if inp.delta == 0:
        return 0.0
    rd = inp.r * inp.delta
    return _prefactor(inp) * (1 + (inp.r * (inp.T - inp.delta) - 1) * _one_minus_exp(rd) / rd)


def delta_phi_hawkes_factorized(inp):
    """Same quantity written as ``1 - g/(r delta) + (T - delta) g / delta``, ``g = 1 - e^{-r delta}``."""
    if inp.delta == 0:
        return 0.0
    g = _one_minus_exp(inp.r * inp.delta)
    return _prefactor(inp) * (1 - g / (inp.r * inp.delta) + (inp.T - inp.delta) * g / inp.delta)


def delta_phi_hawkes_lb(inp, strict=True):
    """Lower bound ``nu ell T (1 - e^{-r delta}) / (4 M (1 - ell)^3)``, valid for ``r T > 4``."""
    require(inp.r * inp.T > 4, f"r T = {inp.r * inp.T:.4g} must exceed 4", strict)
    _delta_hypothesis(inp)
    ell = inp.ell
    return 0.25 * inp.nu * ell * inp.T * _one_minus_exp(inp.r * inp.delta) / (inp.M * (1 - ell) ** 3)


def v0(nu, ell, delta, T):
    """Variance of ``f_phi`` in the mean-field limit (independent Poisson at ``nu/(1-ell)``)."""
    if not delta <= T:
        raise ValueError("need delta <= T")
    q = nu / (1 - ell)
    return 4 * q * q * delta * T * (1 + 2 * q * delta - delta / (2 * T) * (1 + 10.0 / 3.0 * q * delta))


def v0_via_vardiff(nu, ell, delta, T):
    q = nu / (1 - ell)
    return vardiff(q, q, delta, T)


def var_gap_bounds(inp):
    """Bounds on the excess of the two variances of ``f_phi`` over ``V0``."""
    ell, d, ne = inp.ell, inp.delta, inp.nu_eff
    base = inp.C * inp.a * inp.T / inp.M
    bracket = 1 + ne / (inp.b * (1 - ell) ** 2)
    gap_indep = base * inp.nu ** 2 * d ** 2 / (1 - ell) ** 3 * bracket
    gap_obs = base * inp.nu * d / (1 - ell) ** 2 * (1 + ne * d / (1 - ell) * bracket)
    return {"gap_indep": gap_indep, "gap_obs": gap_obs}


def _n_threshold(n, alpha, beta, strict):
    require(n >= 3 / math.sqrt(alpha * beta),
            f"n={n} is below 3/sqrt(alpha beta)={3 / math.sqrt(alpha * beta):.4g}", strict)


def crit_rhs_hawkes(inp, n, alpha, beta, strict=True):
    """Right-hand side of the Type II criterion for the network model."""
    _n_threshold(n, alpha, beta, strict)
    ell, d, ne = inp.ell, inp.delta, inp.nu_eff
    inner = 1 + d * ne / (1 - ell) * (1 + ell / (inp.M * (1 - ell) ** 2))
    return inp.C * math.sqrt(d * inp.T / (n * alpha * beta)) * ne / (1 - ell) * math.sqrt(inner)


def n_min_hawkes(inp, alpha, beta, strict=True):
    """Trials sufficient for Type II error <= beta, up to ``C_prime``; grows like ``M^2``."""
    require(inp.r * inp.T > 4, f"r T = {inp.r * inp.T:.4g} must exceed 4", strict)
    _delta_hypothesis(inp)
    if inp.nu <= 0 or inp.delta <= 0:
        return math.inf
    ell, d, ne = inp.ell, inp.delta, inp.nu_eff
    size = (inp.M + inp.a / inp.nu) ** 2 * (1 - ell) ** 4 / (ell ** 2 * inp.T)
    num = d + d * d * ne / (1 - ell) * (1 + ell / (inp.M * (1 - ell) ** 2))
    return inp.C_prime / (alpha * beta) * size * num / _one_minus_exp(inp.r * d) ** 2


def window_count_var(mu, a, b, T):
    """Variance of the number of points in a window of length ``T``."""
    _check_kernel(a, b)
    r = b - a
    c = k2_coefficient(mu, a, b)
    return mu / (1 - a / b) * T + 2 * c * (T / r - _one_minus_exp(r * T) / r ** 2)
