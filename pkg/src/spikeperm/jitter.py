"""Closed forms for the jittered-injection model.

Rates ``lambda1``, ``lambda2`` are the independent backgrounds, ``eta`` the
injected train shared by both neurons (the copy in the second neuron is
shifted by i.i.d. noise ``xi``). The constants ``C`` and ``C_prime`` of the
bounds are not determined by the theory; they default to 1 and the results
are scaling bounds, not calibrated thresholds.
"""

import math
from dataclasses import dataclass

from .errors import require
from .simulate import NoiseSpec

#: Constant of the two-moment Type II criterion, ``4 sqrt(2) / (1 - (2/3) sqrt(2))``.
EXPLICIT_C = 4 * math.sqrt(2) / (1 - 2 * math.sqrt(2) / 3)


def it_jt(delta, T):
    """``I = 2 delta T - delta^2`` and ``J = 4 delta^2 T - (10/3) delta^3``.

    ``I`` is the Lebesgue measure of ``{(u, v) in [0,T]^2 : |u - v| <= delta}``
    and ``J`` the integral of the squared section length.
    """
    if not 0 <= delta <= T:
        raise ValueError(f"need 0 <= delta <= T, got delta={delta}, T={T}")
    return 2 * delta * T - delta ** 2, 4 * delta ** 2 * T - 10.0 / 3.0 * delta ** 3


def indep_phi_moments(mu1, mu2, delta, T):
    """Mean and variance of the coincidence count of independent Poisson trains."""
    I, J = it_jt(delta, T)
    return {"mean": mu1 * mu2 * I, "variance": mu1 * mu2 * ((mu1 + mu2) * J + I)}


def vardiff(mu1, mu2, delta, T):
    """``E[(phi(X^1, X^2) - phi(X^1, X'^2))^2]`` with ``X'^2`` an independent copy."""
    I, J = it_jt(delta, T)
    return 2 * mu1 * mu2 * (I + mu1 * J)


def _abs_moment(x):
    # antiderivative of |x|
    return 0.5 * x * abs(x)


def noise_moments(noise, delta):
    """``p = P(|xi| <= delta)`` and ``m1 = E[|xi| 1{|xi| <= delta}]``."""
    if not delta >= 0:
        raise ValueError("delta must be >= 0")
    if noise.kind == "uniform":
        lo, hi = noise.lo, noise.hi
        if lo == hi:
            p = 1.0 if abs(lo) <= delta else 0.0
            return {"p": p, "m1": abs(lo) * p}
        A, B = max(lo, -delta), min(hi, delta)
        if A >= B:
            return {"p": 0.0, "m1": 0.0}
        w = hi - lo
        return {"p": (B - A) / w, "m1": (_abs_moment(B) - _abs_moment(A)) / w}
    D = noise.D
    d = min(delta, D)
    if noise.kind == "tridec":
        return {"p": (2 * D * d - d * d) / D ** 2, "m1": (D * d * d - 2 * d ** 3 / 3) / D ** 2}
    return {"p": d * d / D ** 2, "m1": 2 * d ** 3 / (3 * D ** 2)}


@dataclass(frozen=True)
class JitterAnalyticsInput:
    lambda1: float
    lambda2: float
    eta: float
    delta: float
    T: float
    noise: NoiseSpec
    C: float = 1.0
    C_prime: float = 1.0

    def __post_init__(self):
        if min(self.lambda1, self.lambda2, self.eta) < 0:
            raise ValueError("rates must be >= 0")
        if not 0 <= self.delta <= self.T:
            raise ValueError("need 0 <= delta <= T")
        if not (self.C > 0 and self.C_prime > 0):
            raise ValueError("constants must be > 0")

    @property
    def lam_max(self):
        return max(self.lambda1, self.lambda2)

    @property
    def moments(self):
        return noise_moments(self.noise, self.delta)

    def to_dict(self):
        return {"lambda1": self.lambda1, "lambda2": self.lambda2, "eta": self.eta,
                "delta": self.delta, "T": self.T, "noise": str(self.noise),
                "C": self.C, "C_prime": self.C_prime}


def _half_horizon(inp):
    require(inp.delta <= inp.T / 2, f"delta={inp.delta} exceeds T/2={inp.T / 2}", strict=False)


def delta_phi_jitter(inp):
    """Separation ``eta E[(T - |xi|) 1{|xi| <= delta}] = eta (T p - m1)``."""
    _half_horizon(inp)
    m = inp.moments
    return inp.eta * (inp.T * m["p"] - m["m1"])


def v_indep_jitter(inp):
    """Variance of ``f_phi`` when the two trials are independent.

    Both marginals are Poisson with rates ``eta + lambda1`` and
    ``eta + lambda2``, so this is :func:`vardiff` at those rates.
    """
    return vardiff(inp.eta + inp.lambda1, inp.eta + inp.lambda2, inp.delta, inp.T)


def var_bounds_jitter(inp, strict=True):
    """Upper bounds on the variance of ``f_phi`` under independence and under the model."""
    lm, d, T = inp.lam_max, inp.delta, inp.T
    require(inp.eta <= lm, f"eta={inp.eta} exceeds max(lambda1, lambda2)={lm}", strict)
    _half_horizon(inp)
    p = inp.moments["p"]
    return {"v_indep_bound": inp.C * lm ** 2 * d * T * (1 + lm * d),
            "v_obs_bound": inp.C * (1 + lm * d) * (lm ** 2 * d * T + inp.eta * T * p)}


def _n_threshold(n, alpha, beta, strict):
    require(n >= 3 / math.sqrt(alpha * beta),
            f"n={n} is below 3/sqrt(alpha beta)={3 / math.sqrt(alpha * beta):.4g}", strict)


def crit_rhs_jitter(inp, n, alpha, beta, strict=True):
    """Right-hand side of the Type II criterion: ``Delta phi`` above it implies error <= beta."""
    _n_threshold(n, alpha, beta, strict)
    lm, d, T = inp.lam_max, inp.delta, inp.T
    nab = n * alpha * beta
    return inp.C * (math.sqrt((1 + lm * d) * lm ** 2 * d * T / nab) + (1 + lm * d) / nab)


def n_min_jitter(inp, alpha, beta):
    """Trials sufficient for Type II error <= beta, up to the constant ``C_prime``.

    Returns ``math.inf`` with a warning when ``eta = 0`` or ``p = 0``, since
    there is then nothing to detect.
    """
    p = inp.moments["p"]
    if inp.eta == 0 or p == 0:
        require(False, "eta = 0 or P(|xi| <= delta) = 0: no detectable dependence", strict=False)
        return math.inf
    _half_horizon(inp)
    lm, d, ab = inp.lam_max, inp.delta, alpha * beta
    second = (1 + lm * d) / (ab * inp.eta * inp.T * p) * (1 + (lm / inp.eta) * (lm * d / p))
    return inp.C_prime * max(1 / math.sqrt(ab), second)
