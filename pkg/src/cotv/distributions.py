"""Service-time models and their primal and dual moments.

A service-time model provides pdf/cdf/quantile/sampler plus closed-form
primal moments where the family permits.  On top of the ordinary moments
the module computes two probability-plane dispersion measures:

* the *dual moment about the mean*, the expected improvement of the better
  of two independent draws over the single-draw mean, and
* the *dual moment about the variance*, the same construction applied to
  the squared deviation from the mean.

Both are Stieltjes integrals against the squared cdf and reduce to exact
weighted sums for discrete instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy import stats as _stats

from .errors import (
    MassError,
    MetadataMissingError,
    UndefinedCVError,
    ValidationError,
    ZeroMeanError,
)
from .numerics import DEFAULT_TOLERANCE, RngStream, Tolerance

__all__ = [
    "TAIL_MASS",
    "ServiceTimeModel",
    "ContinuousModel",
    "Degenerate",
    "Exponential",
    "Uniform",
    "LogNormal",
    "Gamma",
    "ShiftedScaled",
    "DiscreteModel",
    "DtMetadata",
    "MomentSet",
    "moments",
    "dual_moment_mean",
    "dual_moment_variance",
    "discrete_dual_moment",
    "discrete_dual_moment_variance",
    "build_dt_instance",
]

# Upper-tail mass left outside the integration window for unbounded
# supports.  1e-12 is enough for second moments but provably too loose for
# third moments of heavy lognormals at the 1e-8 agreement level, so the
# window is cut at the last representable quantile instead.
TAIL_MASS = 1e-15


class ServiceTimeModel:
    """Common interface for random service times."""

    family: str = "abstract"

    # -- distribution surface -------------------------------------------------
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def pdf(self, t):
        raise NotImplementedError

    def cdf(self, t):
        raise NotImplementedError

    def quantile(self, p):
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def variance(self) -> float:
        raise NotImplementedError

    def skewness(self) -> float:
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    # -- derived conveniences --------------------------------------------------
    def std(self) -> float:
        return math.sqrt(max(self.variance(), 0.0))

    def cv(self) -> float:
        mu = self.mean()
        if mu <= 0:
            raise UndefinedCVError(f"cv undefined for mean {mu}")
        return self.std() / mu

    @property
    def is_degenerate(self) -> bool:
        return self.variance() == 0.0

    def label(self) -> str:
        inner = ",".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}"
                         for k, v in self.params().items())
        return f"{self.family}({inner})"

    # -- sampling ----------------------------------------------------------------
    def draw(self, gen: np.random.Generator, n: int) -> np.ndarray:
        """Inverse-transform sampling; by construction consistent with cdf."""
        return np.asarray(self.quantile(gen.random(n)))

    def sample(self, stream: RngStream, n: int) -> np.ndarray:
        return self.draw(stream.generator(), n)

    # -- expectations ----------------------------------------------------------
    def integration_interval(self) -> tuple[float, float, bool]:
        """Finite window carrying all mass up to ``TAIL_MASS``."""
        lo, hi = self.support()
        truncated = False
        if not math.isfinite(hi):
            hi = float(self.quantile(1.0 - TAIL_MASS))
            truncated = True
        if not math.isfinite(lo):
            lo = float(self.quantile(TAIL_MASS))
            truncated = True
        return lo, hi, truncated

    def expect(self, g: Callable, tol: Tolerance | None = None,
               info: dict | None = None) -> float:
        """E[g(t)] by quadrature against the density."""
        from .numerics import integrate

        lo, hi, truncated = self.integration_interval()
        if info is not None:
            info["integration_interval"] = [lo, hi]
            info["truncated"] = truncated
        return integrate(lambda t: np.asarray(g(t)) * self.pdf(t), lo, hi,
                         tol or DEFAULT_TOLERANCE, info=info)

    def dual_expect(self, g: Callable, tol: Tolerance | None = None,
                    info: dict | None = None) -> float:
        """Integral of g against the squared-cdf measure d(F^2) = 2 F f dt."""
        from .numerics import integrate

        lo, hi, truncated = self.integration_interval()
        if info is not None:
            info["integration_interval"] = [lo, hi]
            info["truncated"] = truncated
        return integrate(
            lambda t: np.asarray(g(t)) * 2.0 * self.cdf(t) * self.pdf(t),
            lo, hi, tol or DEFAULT_TOLERANCE, info=info)

    def distorted_expect(self, g: Callable, w, tol: Tolerance | None = None,
                         info: dict | None = None) -> float:
        """Integral of g against the distorted measure d(w(F)) = w'(F) f dt."""
        from .numerics import integrate

        lo, hi, truncated = self.integration_interval()
        if info is not None:
            info["integration_interval"] = [lo, hi]
            info["truncated"] = truncated
        return integrate(
            lambda t: np.asarray(g(t)) * w.dw(self.cdf(t)) * self.pdf(t),
            lo, hi, tol or DEFAULT_TOLERANCE, info=info)


class ContinuousModel(ServiceTimeModel):
    """Marker base for absolutely continuous families."""


@dataclass(frozen=True)
class Exponential(ContinuousModel):
    """Exponential service time; the user-facing time of a memoryless queue."""

    rate: float

    family = "exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise ValidationError("exponential rate must be positive")

    def support(self):
        return 0.0, math.inf

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t < 0, 0.0, self.rate * np.exp(-self.rate * np.clip(t, 0, None)))

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t < 0, 0.0, -np.expm1(-self.rate * np.clip(t, 0, None)))

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        return -np.log1p(-p) / self.rate

    def mean(self):
        return 1.0 / self.rate

    def variance(self):
        return 1.0 / self.rate**2

    def skewness(self):
        return 2.0

    def params(self):
        return {"rate": self.rate}


@dataclass(frozen=True)
class Uniform(ContinuousModel):
    """Uniform service time on [lo, hi], lo >= 0."""

    lo: float
    hi: float

    family = "uniform"

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValidationError("uniform requires hi > lo")
        if self.lo < 0:
            raise ValidationError("service times carry no mass below zero")

    def support(self):
        return self.lo, self.hi

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= self.lo) & (t <= self.hi)
        return np.where(inside, 1.0 / (self.hi - self.lo), 0.0)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.clip((t - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        return self.lo + p * (self.hi - self.lo)

    def mean(self):
        return 0.5 * (self.lo + self.hi)

    def variance(self):
        return (self.hi - self.lo) ** 2 / 12.0

    def skewness(self):
        return 0.0

    def params(self):
        return {"lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class LogNormal(ContinuousModel):
    """Lognormal service time parameterised by log-mean and log-sd."""

    log_mean: float
    log_sd: float

    family = "lognormal"

    def __post_init__(self):
        if not self.log_sd > 0:
            raise ValidationError("lognormal log_sd must be positive")

    @cached_property
    def _frozen(self):
        return _stats.lognorm(s=self.log_sd, scale=math.exp(self.log_mean))

    def support(self):
        return 0.0, math.inf

    def pdf(self, t):
        return self._frozen.pdf(t)

    def cdf(self, t):
        return self._frozen.cdf(t)

    def quantile(self, p):
        return self._frozen.ppf(p)

    def mean(self):
        return math.exp(self.log_mean + 0.5 * self.log_sd**2)

    def variance(self):
        s2 = self.log_sd**2
        return math.expm1(s2) * math.exp(2 * self.log_mean + s2)

    def skewness(self):
        s2 = self.log_sd**2
        return (math.exp(s2) + 2.0) * math.sqrt(math.expm1(s2))

    def params(self):
        return {"log_mean": self.log_mean, "log_sd": self.log_sd}


@dataclass(frozen=True)
class Gamma(ContinuousModel):
    """Gamma service time with shape/rate parameterisation."""

    shape: float
    rate: float

    family = "gamma"

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ValidationError("gamma shape and rate must be positive")

    @cached_property
    def _frozen(self):
        return _stats.gamma(a=self.shape, scale=1.0 / self.rate)

    def support(self):
        return 0.0, math.inf

    def pdf(self, t):
        return self._frozen.pdf(t)

    def cdf(self, t):
        return self._frozen.cdf(t)

    def quantile(self, p):
        return self._frozen.ppf(p)

    def mean(self):
        return self.shape / self.rate

    def variance(self):
        return self.shape / self.rate**2

    def skewness(self):
        return 2.0 / math.sqrt(self.shape)

    def params(self):
        return {"shape": self.shape, "rate": self.rate}


@dataclass(frozen=True)
class ShiftedScaled(ContinuousModel):
    """Affine wrapper t = loc + scale * s around a continuous base model.

    The wrapper is the tool for building models with a prescribed mean and
    standard deviation from a standardised shape.  No sign restriction is
    placed on the resulting support: zero-mean perturbation models are a
    legitimate use.
    """

    base: ContinuousModel
    loc: float = 0.0
    scale: float = 1.0

    family = "shifted_scaled"

    def __post_init__(self):
        if not isinstance(self.base, ContinuousModel):
            raise ValidationError("shifted_scaled wraps continuous models only")
        if not self.scale > 0:
            raise ValidationError("scale must be positive")

    def support(self):
        lo, hi = self.base.support()
        return self.loc + self.scale * lo, self.loc + self.scale * hi

    def _inner(self, t):
        return (np.asarray(t, dtype=float) - self.loc) / self.scale

    def pdf(self, t):
        return self.base.pdf(self._inner(t)) / self.scale

    def cdf(self, t):
        return self.base.cdf(self._inner(t))

    def quantile(self, p):
        return self.loc + self.scale * np.asarray(self.base.quantile(p))

    def mean(self):
        return self.loc + self.scale * self.base.mean()

    def variance(self):
        return self.scale**2 * self.base.variance()

    def skewness(self):
        return self.base.skewness()

    def params(self):
        return {"base": self.base.label(), "loc": self.loc, "scale": self.scale}


@dataclass(frozen=True)
class DtMetadata:
    """Construction record of a banded discrete instance.

    ``xi`` is the zero-mean perturbation attached to baseline time ``t0``;
    the band carries total probability ``2 * psi`` anchored at cumulative
    probability ``p0``, flanked by best time ``t_min`` and worst time
    ``t_max``.
    """

    t0: float
    p0: float
    psi: float
    xi: tuple[float, ...]
    t_min: float
    t_max: float

    @property
    def n(self) -> int:
        return len(self.xi)


class DiscreteModel(ServiceTimeModel):
    """Finitely supported service time; expectations are exact sums.

    Outcomes are kept in ascending order and may repeat (tied states are
    meaningful for banded instances).  Probabilities must be non-negative
    and sum to one within 1e-12.
    """

    family = "discrete"

    def __init__(self, outcomes: Sequence[float], probabilities: Sequence[float],
                 dt_meta: DtMetadata | None = None):
        outcomes = np.asarray(outcomes, dtype=float)
        probabilities = np.asarray(probabilities, dtype=float)
        if outcomes.ndim != 1 or outcomes.shape != probabilities.shape:
            raise ValidationError("outcomes and probabilities must be 1-d and aligned")
        if outcomes.size == 0:
            raise ValidationError("at least one outcome is required")
        if np.any(np.diff(outcomes) < 0):
            raise ValidationError("outcomes must be sorted ascending")
        if np.any(probabilities < -1e-15):
            raise MassError("probabilities must be non-negative")
        total = float(probabilities.sum())
        if abs(total - 1.0) > 1e-12:
            raise MassError(f"probabilities sum to {total!r}, not 1")
        self.outcomes = outcomes
        self.probabilities = np.clip(probabilities, 0.0, None)
        self.dt_meta = dt_meta
        # distinct-value compression for cdf-based sums
        values, index = np.unique(outcomes, return_inverse=True)
        mass = np.zeros_like(values)
        np.add.at(mass, index, self.probabilities)
        self._values = values
        self._mass = mass
        self._cum = np.cumsum(mass)

    def support(self):
        return float(self.outcomes[0]), float(self.outcomes[-1])

    def pdf(self, t):
        raise ValidationError("discrete models have no density; use expect()")

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self._values, t, side="right")
        cum = np.concatenate(([0.0], self._cum))
        return cum[idx]

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        idx = np.searchsorted(self._cum, p, side="left")
        idx = np.clip(idx, 0, self._values.size - 1)
        return self._values[idx]

    def mean(self):
        return float(self.probabilities @ self.outcomes)

    def variance(self):
        mu = self.mean()
        return float(self.probabilities @ (self.outcomes - mu) ** 2)

    def skewness(self):
        mu = self.mean()
        var = self.variance()
        if var == 0.0:
            return 0.0
        third = float(self.probabilities @ (self.outcomes - mu) ** 3)
        return third / var**1.5

    def params(self):
        return {"n_outcomes": int(self.outcomes.size)}

    def integration_interval(self):
        lo, hi = self.support()
        return lo, hi, False

    def expect(self, g, tol=None, info=None):
        return float(self.probabilities @ np.asarray(g(self.outcomes), dtype=float))

    def dual_expect(self, g, tol=None, info=None):
        cum = np.concatenate(([0.0], self._cum))
        dF2 = cum[1:] ** 2 - cum[:-1] ** 2
        return float(dF2 @ np.asarray(g(self._values), dtype=float))

    def distorted_expect(self, g, w, tol=None, info=None):
        cum = np.concatenate(([0.0], self._cum))
        wcum = np.asarray(w.w(np.clip(cum, 0.0, 1.0)), dtype=float)
        dw = wcum[1:] - wcum[:-1]
        return float(dw @ np.asarray(g(self._values), dtype=float))


class Degenerate(DiscreteModel):
    """Deterministic service time: a point mass."""

    family = "degenerate"

    def __init__(self, value: float):
        if value < 0:
            raise ValidationError("service times carry no mass below zero")
        super().__init__([float(value)], [1.0])
        self.value = float(value)

    def params(self):
        return {"value": self.value}


@dataclass(frozen=True)
class MomentSet:
    """Primal and dual moments of a service-time model."""

    mu: float
    variance: float
    skewness: float
    cv: float
    m2_dual_mean: float
    m2_dual_var: float

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "variance": self.variance,
            "skewness": self.skewness,
            "cv": self.cv,
            "m2_dual_mean": self.m2_dual_mean,
            "m2_dual_var": self.m2_dual_var,
        }


def moments(model: ServiceTimeModel, tol: Tolerance | None = None) -> MomentSet:
    """Full moment set: closed-form primal part plus quadrature dual part."""
    mu = model.mean()
    if mu <= 0:
        raise UndefinedCVError(f"cv undefined for mean {mu}")
    return MomentSet(
        mu=mu,
        variance=model.variance(),
        skewness=model.skewness(),
        cv=model.cv(),
        m2_dual_mean=dual_moment_mean(model, tol),
        m2_dual_var=dual_moment_variance(model, tol),
    )


def dual_moment_mean(model: ServiceTimeModel, tol: Tolerance | None = None,
                     info: dict | None = None) -> float:
    """Dual moment about the mean: E[max of two iid draws] - E[t].

    Computed as the integral of (t - mean) against d(F^2); zero exactly for
    degenerate models.
    """
    if model.is_degenerate:
        return 0.0
    mu = model.mean()
    return model.dual_expect(lambda t: t - mu, tol, info)


def dual_moment_variance(model: ServiceTimeModel, tol: Tolerance | None = None,
                         info: dict | None = None) -> float:
    """Dual moment about the variance: integral of (t - mean)^2 against d(F^2)."""
    if model.is_degenerate:
        return 0.0
    mu = model.mean()
    return model.dual_expect(lambda t: (t - mu) ** 2, tol, info)


def _require_meta(instance: DiscreteModel) -> DtMetadata:
    meta = getattr(instance, "dt_meta", None)
    if meta is None:
        raise MetadataMissingError(
            "operation requires a banded instance built by build_dt_instance")
    return meta


def discrete_dual_moment(instance: DiscreteModel) -> float:
    """Index-order dual moment of the banded perturbation.

    For n equiprobable band states with half-mass psi this is
    ``(4 psi^2 / n^2) * sum_i xi_i * 2 i`` using index order, so tied states
    contribute separately.  With ``2 psi = 1`` it equals the pairwise
    order-statistic expectation ``E[max(xi', xi'')]`` exactly, because the
    perturbation is zero-mean.
    """
    meta = _require_meta(instance)
    xi = np.asarray(meta.xi, dtype=float)
    n = meta.n
    i = np.arange(1, n + 1)
    return float((4.0 * meta.psi**2 / n**2) * np.sum(xi * 2 * i))


def discrete_dual_moment_variance(instance: DiscreteModel) -> float:
    """Companion of :func:`discrete_dual_moment` with squared outcomes."""
    meta = _require_meta(instance)
    xi = np.asarray(meta.xi, dtype=float)
    n = meta.n
    i = np.arange(1, n + 1)
    return float((4.0 * meta.psi**2 / n**2) * np.sum(xi**2 * 2 * i))


def build_dt_instance(
    t0: float,
    xi: Sequence[float],
    p0: float = 0.5,
    psi: float = 0.5,
    t_min: float | None = None,
    t_max: float | None = None,
) -> DiscreteModel:
    """Banded discrete instance around baseline time ``t0``.

    The band holds the zero-mean perturbation ``xi`` (ascending, ties
    allowed) with equal state probability ``2 psi / n``; best time
    ``t_min`` and worst time ``t_max`` absorb the remaining mass
    ``p0 - psi`` and ``1 - p0 - psi``.  With ``2 psi = 1`` the flanks
    vanish and the result is the plain n-point instance.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.ndim != 1 or xi.size == 0:
        raise ValidationError("xi must be a non-empty 1-d sequence")
    if np.any(np.diff(xi) < 0):
        raise ValidationError("xi must be sorted ascending")
    scale = max(1.0, float(np.max(np.abs(xi))))
    if abs(float(xi.mean())) > 1e-12 * scale:
        raise ZeroMeanError(f"xi must be zero-mean, got mean {xi.mean()!r}")
    if not 0 < p0 < 1:
        raise MassError("p0 must lie strictly inside (0, 1)")
    if not 0 < psi <= min(p0, 1.0 - p0) + 1e-15:
        raise MassError("psi must satisfy 0 < psi <= min(p0, 1 - p0)")

    n = xi.size
    band = t0 + xi
    lo_mass = p0 - psi
    hi_mass = 1.0 - p0 - psi
    if t_min is None:
        t_min = float(band[0])
    if t_max is None:
        t_max = float(band[-1])
    if t_min > band[0] + 1e-15 or t_max < band[-1] - 1e-15:
        raise ValidationError("t_min/t_max must bracket the perturbed band")

    outcomes = [t_min] if lo_mass > 1e-15 else []
    probs = [lo_mass] if lo_mass > 1e-15 else []
    outcomes.extend(band.tolist())
    probs.extend([2.0 * psi / n] * n)
    if hi_mass > 1e-15:
        outcomes.append(t_max)
        probs.append(hi_mass)

    meta = DtMetadata(t0=float(t0), p0=float(p0), psi=float(psi),
                      xi=tuple(float(x) for x in xi),
                      t_min=float(t_min), t_max=float(t_max))
    return DiscreteModel(outcomes, probs, dt_meta=meta)
