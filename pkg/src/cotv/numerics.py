"""Deterministic numerical kernel: adaptive quadrature, a bracketing root
finder, and seeded Monte Carlo estimation.

These routines are the reference path against which every closed-form
approximation in the package is checked, so they favour predictable error
control over raw speed.  All of them are pure functions of their inputs;
randomness enters only through an explicit :class:`RngStream`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    NoBracketError,
    NonConvergenceError,
    NonFiniteError,
    ValidationError,
)

__all__ = [
    "Tolerance",
    "DEFAULT_TOLERANCE",
    "RngStream",
    "McEstimate",
    "integrate",
    "find_root",
    "expand_bracket",
    "mc_estimate",
]

_UINT64_MAX = 2**64 - 1

# Hard cap on quadrature panels, independent of the per-call depth budget.
_MAX_PANELS = 400_000


@dataclass(frozen=True)
class Tolerance:
    """Error budget shared by the quadrature and root-finding routines.

    ``abs_tol`` and ``rel_tol`` combine as ``max(abs_tol, rel_tol * |ref|)``;
    at least one must be strictly positive.  ``max_iter`` bounds bisection
    depth for quadrature and iteration count for root finding.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_iter: int = 200

    def __post_init__(self) -> None:
        if self.abs_tol < 0 or self.rel_tol < 0:
            raise ValidationError("tolerances must be non-negative")
        if self.abs_tol == 0 and self.rel_tol == 0:
            raise ValidationError("at least one of abs_tol/rel_tol must be positive")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be at least 1")

    def scale(self, reference: float) -> float:
        """Combined tolerance relative to a reference magnitude."""
        return max(self.abs_tol, self.rel_tol * abs(reference))


DEFAULT_TOLERANCE = Tolerance()


@dataclass(frozen=True)
class RngStream:
    """Named random stream.

    Identical ``(seed, stream_id)`` pairs reproduce the identical sample
    sequence bit-exactly; distinct ``stream_id`` values give statistically
    independent streams, which is the only sanctioned way to parallelise
    Monte Carlo work.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        if not 0 <= int(self.seed) <= _UINT64_MAX:
            raise ValidationError("seed must fit in an unsigned 64-bit integer")
        if int(self.stream_id) < 0:
            raise ValidationError("stream_id must be non-negative")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=int(self.seed), spawn_key=(int(self.stream_id),)
        )
        return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo estimate with its sample standard error."""

    estimate: float
    std_error: float
    n: int


# 15-point Gauss-Legendre rule; exact through polynomial degree 29.
_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(15)


def _panel(f: Callable, a: float, b: float) -> float:
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * _NODES
    y = np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)
    if not np.all(np.isfinite(y)):
        raise NonFiniteError(f"integrand returned non-finite values on [{a:g}, {b:g}]")
    return half * float(_WEIGHTS @ y)


def integrate(
    f: Callable,
    lo: float,
    hi: float,
    tol: Tolerance | None = None,
    info: dict | None = None,
) -> float:
    """Adaptive quadrature of a vectorised scalar function on ``[lo, hi]``.

    Bisects a fixed-order Gauss panel until the parent/children discrepancy
    on every subinterval fits inside its proportional share of the budget.
    The discrepancy estimate is extremely conservative for smooth
    integrands, which is what gives the package its oracle-grade headroom.
    """
    tol = tol or DEFAULT_TOLERANCE
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValidationError("integration bounds must be finite")
    if not lo < hi:
        raise ValidationError(f"integration requires lo < hi, got [{lo}, {hi}]")

    whole = _panel(f, lo, hi)
    span = hi - lo
    reference = abs(whole)
    stack: list[tuple[float, float, float, int]] = [(lo, hi, whole, 0)]
    total = 0.0
    panels = 1
    deepest = 0

    while stack:
        a, b, coarse, depth = stack.pop()
        mid = 0.5 * (a + b)
        left = _panel(f, a, mid)
        right = _panel(f, mid, b)
        panels += 2
        if panels > _MAX_PANELS:
            raise NonConvergenceError("quadrature panel budget exhausted")
        err = abs(left + right - coarse)
        if err <= tol.scale(reference) * (b - a) / span:
            total += left + right
            reference = max(reference, abs(total))
        else:
            if depth + 1 >= tol.max_iter:
                raise NonConvergenceError(
                    f"quadrature did not converge on [{a:g}, {b:g}] "
                    f"at depth {depth + 1}"
                )
            deepest = max(deepest, depth + 1)
            stack.append((a, mid, left, depth + 1))
            stack.append((mid, b, right, depth + 1))

    if info is not None:
        info["panels"] = panels
        info["max_depth"] = deepest
    return total


def find_root(
    g: Callable[[float], float],
    lo: float,
    hi: float,
    tol: Tolerance | None = None,
    info: dict | None = None,
) -> float:
    """Root of a continuous scalar function on a sign-changing bracket.

    Bisection with secant acceleration: a secant step is taken whenever the
    previous step at least halved the bracket, otherwise the next step is a
    plain bisection.  The result always lies inside ``[lo, hi]``.
    """
    tol = tol or DEFAULT_TOLERANCE
    if not lo < hi:
        raise ValidationError(f"bracket requires lo < hi, got [{lo}, {hi}]")
    fa = float(g(lo))
    fb = float(g(hi))
    if not (math.isfinite(fa) and math.isfinite(fb)):
        raise NonFiniteError("function returned non-finite value at a bracket end")
    if fa == 0.0:
        return lo
    if fb == 0.0:
        return hi
    if fa * fb > 0:
        raise NoBracketError(
            f"no sign change on [{lo:g}, {hi:g}]: g(lo)={fa:.6g}, g(hi)={fb:.6g}"
        )

    a, b = lo, hi
    use_secant = True
    for iteration in range(1, tol.max_iter + 1):
        width = b - a
        x = 0.5 * (a + b)
        if use_secant and fb != fa:
            candidate = b - fb * (b - a) / (fb - fa)
            if a < candidate < b:
                x = candidate
        fx = float(g(x))
        if not math.isfinite(fx):
            raise NonFiniteError(f"function returned non-finite value at {x:g}")
        if abs(fx) <= tol.abs_tol:
            if info is not None:
                info["iterations"] = iteration
            return x
        if fa * fx <= 0:
            b, fb = x, fx
        else:
            a, fa = x, fx
        use_secant = (b - a) <= 0.5 * width
        if (b - a) <= tol.scale(max(abs(a), abs(b))):
            if info is not None:
                info["iterations"] = iteration
            return 0.5 * (a + b)
    raise NonConvergenceError(
        f"root finding did not converge within {tol.max_iter} iterations"
    )


def expand_bracket(
    g: Callable[[float], float],
    lo: float,
    hi: float,
    factor: float = 2.0,
    max_steps: int = 60,
) -> tuple[float, float]:
    """Grow ``[lo, hi]`` geometrically until ``g`` changes sign on it.

    Expansion alternates between the lower and upper side, starting with
    the lower one, so a default non-negative bracket reaches negative
    values on the first expansion step.
    """
    a, b = float(lo), float(hi)
    fa = float(g(a))
    fb = float(g(b))
    step = max(b - a, 1e-8)
    for _ in range(max_steps):
        if fa * fb <= 0:
            return a, b
        a -= step
        fa = float(g(a))
        if fa * fb <= 0:
            return a, b
        b += step
        fb = float(g(b))
        step *= factor
    raise NoBracketError(
        f"no sign change found after {max_steps} expansions from [{lo:g}, {hi:g}]"
    )


def mc_estimate(
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    statistic: Callable[[np.ndarray], np.ndarray],
    n: int,
    rng: RngStream,
) -> McEstimate:
    """Monte Carlo mean of a per-draw statistic with its standard error.

    ``sampler(generator, n)`` must return an array whose leading axis has
    length ``n`` (each row is one draw, possibly vector-valued) and
    ``statistic`` must map it to one value per draw.
    """
    if n < 2:
        raise ValidationError("mc_estimate requires n >= 2")
    draws = np.asarray(sampler(rng.generator(), n))
    if draws.shape[0] != n:
        raise ValidationError("sampler must return one row per draw")
    values = np.asarray(statistic(draws), dtype=float)
    if values.shape != (n,):
        raise ValidationError("statistic must return exactly one value per draw")
    if not np.all(np.isfinite(values)):
        raise NonFiniteError("non-finite values in Monte Carlo sample statistic")
    estimate = float(values.mean())
    std_error = float(values.std(ddof=1) / math.sqrt(n))
    return McEstimate(estimate=estimate, std_error=std_error, n=n)
