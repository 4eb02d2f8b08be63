"""Unconstrained proposal scales for bounded parameters"""

import math

from scipy.special import logit, expit

from ..model.parameters import Support


def to_unconstrained(x: float, support: Support, upper: float = 1.0) -> float:
    """Map a value onto the real line"""
    if support is Support.TAU:
        return float(logit(x / upper))
    if support is Support.UNIT:
        return float(logit(x))
    return x


def from_unconstrained(y: float, support: Support, upper: float = 1.0) -> float:
    """Inverse of to_unconstrained"""
    if support is Support.TAU:
        return float(upper * expit(y))
    if support is Support.UNIT:
        return float(expit(y))
    return y


def log_jacobian(x: float, support: Support, upper: float = 1.0) -> float:
    """log |dx/dy| at the constrained value x"""
    if support is Support.TAU:
        if not 0.0 < x < upper:
            return -math.inf
        return math.log(x) + math.log1p(-x / upper)
    if support is Support.UNIT:
        if not 0.0 < x < 1.0:
            return -math.inf
        return math.log(x) + math.log1p(-x)
    return 0.0
