"""Hypothesis checks shared by the analytic modules."""

import warnings


class HypothesisError(ValueError):
    """A theorem's assumption does not hold for the given inputs."""


class HypothesisWarning(UserWarning):
    """A theorem's assumption does not hold; the value is illustrative only."""


def require(cond, message, strict):
    """Raise (``strict``) or warn when ``cond`` is false. Returns ``cond``."""
    if not cond:
        if strict:
            raise HypothesisError(message)
        warnings.warn(message, HypothesisWarning, stacklevel=3)
    return bool(cond)
