"""Independent oracles used by the tests.

Everything here is deliberately naive: direct enumeration, central finite
differences, and closed forms.  None of it shares code with the package
paths it checks.
"""

from __future__ import annotations

import math

import numpy as np


def central_diff(f, x, h):
    return (f(x + h) - f(x - h)) / (2.0 * h)


def brute_pairwise_dual_mean(outcomes, probabilities) -> float:
    """E[max of two independent draws] - E[t] by full pair enumeration."""
    x = np.asarray(outcomes, dtype=float)
    p = np.asarray(probabilities, dtype=float)
    joint = np.outer(p, p)
    best = np.maximum.outer(x, x)
    return float((joint * best).sum() - p @ x)


def brute_rank_expectation(outcomes, probabilities, w, g) -> float:
    """Expectation of g under the w-distorted measure, by explicitly
    differencing w(F) at every distinct outcome boundary."""
    x = np.asarray(outcomes, dtype=float)
    p = np.asarray(probabilities, dtype=float)
    order = np.argsort(x, kind="stable")
    x = x[order]
    p = p[order]
    values = []
    masses = []
    for xi, pi in zip(x, p):
        if values and xi == values[-1]:
            masses[-1] += pi
        else:
            values.append(xi)
            masses.append(pi)
    total = 0.0
    cum_prev = 0.0
    cum = 0.0
    for value, mass in zip(values, masses):
        cum += mass
        total += (float(w.w(min(cum, 1.0))) - float(w.w(cum_prev))) * g(value)
        cum_prev = min(cum, 1.0)
    return total


def lognormal_dual_mean(log_mean: float, log_sd: float) -> float:
    """Closed form for E[max of two iid lognormals] - mean."""
    from scipy.stats import norm

    mean = math.exp(log_mean + 0.5 * log_sd**2)
    return mean * (2.0 * norm.cdf(log_sd / math.sqrt(2.0)) - 1.0)


def quadratic_premium(mu: float, sigma: float) -> float:
    """Exact premium of u = -t^2 (any pure quadratic): sqrt(mu^2+s^2)-mu."""
    return math.sqrt(mu**2 + sigma**2) - mu
