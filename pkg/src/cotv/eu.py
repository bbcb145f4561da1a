"""Expected-utility valuation of service-time variability.

Every quantity comes in two flavours:

* ``exact`` evaluates expectations by quadrature (or exact sums for
  discrete models) and solves the premium indifference equation by root
  finding;
* ``second_order`` uses the closed Taylor forms, which expose the
  valuation through the risk coefficients: the premium is
  ``sigma^2/2 * u''(mu)/u'(mu)``, the cost ratio is
  ``R2 CV^2 / (2 + R2 R3 CV^2)``, and the reliability ratio is
  ``1 / (1 + R2 R3 CV^2 / 2)``.

The two paths are never mixed inside one number, so each reported value
is traceable to a single derivation.
"""

from __future__ import annotations

from dataclasses import dataclass

from .distributions import ServiceTimeModel
from .errors import (
    DerivativeZeroError,
    NotQuadraticError,
    ValidationError,
    ZeroCostError,
)
from .numerics import DEFAULT_TOLERANCE, Tolerance, expand_bracket, find_root
from .preferences import QuadraticUtility, UtilityFunction
from .reports import ValuationReport

__all__ = [
    "EconomicContext",
    "premium_exact",
    "premium_approx",
    "vot_at",
    "vot_mean",
    "cot",
    "cotv",
    "ratio_rho",
    "ratio_rho_coefficient_form",
    "ratio_eta",
    "rho_upper_bound",
    "evaluate",
]

_METHODS = ("exact", "second_order")


@dataclass(frozen=True)
class EconomicContext:
    """Marginal utility of wealth and the computational method.

    ``phi`` is strictly positive, which keeps the value of time
    ``-u'(T)/phi`` non-negative for non-increasing utilities.
    """

    phi: float = 1.0
    method: str = "exact"

    def __post_init__(self) -> None:
        if not self.phi > 0:
            raise ValidationError("phi must be strictly positive")
        if self.method not in _METHODS:
            raise ValidationError(f"method must be one of {_METHODS}")


def premium_exact(u: UtilityFunction, model: ServiceTimeModel,
                  tol: Tolerance | None = None,
                  info: dict | None = None) -> float:
    """Variability premium: the extra certain time with the same utility
    as facing the random time, solving E[u(t)] = u(mu + pi).

    Strictly decreasing utility makes the root unique.  The initial
    bracket is [0, upper support - mu]; it expands geometrically (first
    toward negative premiums) if the sign change lies outside, so
    risk-seeking inputs are still handled.
    """
    tol = tol or DEFAULT_TOLERANCE
    if model.is_degenerate:
        return 0.0
    mu = model.mean()
    expected_u = model.expect(u.u, tol, info)

    def gap(pi: float) -> float:
        return float(u.u(mu + pi)) - expected_u

    lo, hi, _ = model.integration_interval()
    upper = max(hi - mu, 1e-6)
    a, b = expand_bracket(gap, 0.0, upper)
    return find_root(gap, a, b, tol, info)


def premium_approx(u: UtilityFunction, model: ServiceTimeModel) -> float:
    """Second-order premium: sigma^2/2 times absolute risk aversion at the mean."""
    mu = model.mean()
    d1 = float(u.du(mu))
    if d1 == 0.0:
        raise DerivativeZeroError(f"u'({mu:g}) = 0: premium approximation undefined")
    return 0.5 * model.variance() * float(u.d2u(mu)) / d1


def vot_at(u: UtilityFunction, at_time: float, ctx: EconomicContext) -> float:
    """Instantaneous monetary value of time: -u'(T)/phi."""
    return -float(u.du(at_time)) / ctx.phi


def vot_mean(u: UtilityFunction, model: ServiceTimeModel, ctx: EconomicContext,
             tol: Tolerance | None = None, info: dict | None = None) -> float:
    """Average value of time over the random service time.

    Exact method aggregates the instantaneous value, E[-u'(t)/phi];
    second order expands it at the mean, VOT(mu) - sigma^2/2 u'''(mu)/phi.
    """
    mu = model.mean()
    if ctx.method == "exact":
        if model.is_degenerate:
            return vot_at(u, mu, ctx)
        return model.expect(lambda t: -u.du(t) / ctx.phi, tol, info)
    return vot_at(u, mu, ctx) - 0.5 * model.variance() * float(u.d3u(mu)) / ctx.phi


def cot(u: UtilityFunction, model: ServiceTimeModel, ctx: EconomicContext,
        tol: Tolerance | None = None, info: dict | None = None) -> float:
    """Cost of time: average value of time multiplied by the mean duration."""
    return vot_mean(u, model, ctx, tol, info) * model.mean()


def cotv(u: UtilityFunction, model: ServiceTimeModel, ctx: EconomicContext,
         tol: Tolerance | None = None, info: dict | None = None) -> float:
    """Cost of time variability.

    Exact method integrates the utility shortfall,
    E[(u(mu) - u(t))] / phi; second order monetises the premium at the
    mean value of time, pi * VOT(mu).  Both are non-negative for concave
    utilities.
    """
    mu = model.mean()
    if model.is_degenerate:
        return 0.0
    if ctx.method == "exact":
        u_mu = float(u.u(mu))
        return (u_mu - model.expect(u.u, tol, info)) / ctx.phi
    return premium_approx(u, model) * vot_at(u, mu, ctx)


def _signed_higher_order_term(u: UtilityFunction, model: ServiceTimeModel) -> float:
    """Signed R2*R3*CV^2 computed directly as -sigma^2 u'''(mu)/u'(mu).

    The direct form stays defined when u'' = 0 makes the individual
    coefficients undefined.
    """
    mu = model.mean()
    d1 = float(u.du(mu))
    if d1 == 0.0:
        raise DerivativeZeroError(f"u'({mu:g}) = 0")
    return -model.variance() * float(u.d3u(mu)) / d1


def ratio_rho(u: UtilityFunction, model: ServiceTimeModel, ctx: EconomicContext,
              tol: Tolerance | None = None, info: dict | None = None) -> float:
    """Ratio of the cost of time variability to the cost of time.

    Exact method divides the exact costs.  Second order evaluates
    (pi/mu) / (1 + R2 R3 CV^2 / 2) with the signed higher-order term, the
    pi-based restatement of the coefficient closed form; the two agree
    identically.  A degenerate model has ratio 0 by continuity.
    """
    if model.is_degenerate:
        return 0.0
    if ctx.method == "exact":
        denominator = cot(u, model, ctx, tol, info)
        if denominator <= 0:
            raise ZeroCostError(f"cost of time is {denominator:g}; ratio undefined")
        return cotv(u, model, ctx, tol, info) / denominator
    mu = model.mean()
    if mu <= 0:
        raise ZeroCostError("second-order ratio requires a positive mean time")
    return (premium_approx(u, model) / mu) / (
        1.0 + 0.5 * _signed_higher_order_term(u, model))


def ratio_rho_coefficient_form(u: UtilityFunction, model: ServiceTimeModel) -> float:
    """Cost ratio through the coefficients: R2 CV^2 / (2 + R2 R3 CV^2).

    Requires both coefficients to exist; agrees with the second-order
    :func:`ratio_rho` wherever defined (asserted by the test suite).
    """
    from .preferences import risk_coefficients

    if model.is_degenerate:
        return 0.0
    mu = model.mean()
    profile = risk_coefficients(u, mu)
    if profile.rel_prudence is None:
        raise DerivativeZeroError("coefficient form needs u''(mu) != 0")
    r2 = profile.rel_risk_aversion
    r3 = profile.rel_prudence
    cv2 = model.cv() ** 2
    return r2 * cv2 / (2.0 + r2 * r3 * cv2)


def ratio_eta(u: UtilityFunction, model: ServiceTimeModel) -> float:
    """Reliability ratio: marginal value of variability reduction relative
    to marginal value of mean reduction, 1 / (1 + R2 R3 CV^2 / 2).

    Computed through the signed higher-order term so quadratic utilities
    (third derivative zero) give exactly 1, and affine utilities stay
    defined.  A degenerate model gives 1 by continuity.
    """
    if model.is_degenerate:
        return 1.0
    return 1.0 / (1.0 + 0.5 * _signed_higher_order_term(u, model))


def rho_upper_bound(u: UtilityFunction, model: ServiceTimeModel) -> float:
    """Hard ceiling CV^2 / 2 for the cost ratio of quadratic utilities.

    Attained exactly by the pure quadratic member.  For the exponential
    model (CV = 1) the bound is the constant 1/2.
    """
    if not isinstance(u, QuadraticUtility):
        raise NotQuadraticError("the cost-ratio bound holds for quadratic utilities")
    return 0.5 * model.cv() ** 2


def evaluate(u: UtilityFunction, model: ServiceTimeModel, ctx: EconomicContext,
             tol: Tolerance | None = None) -> ValuationReport:
    """Full expected-utility valuation report for one method."""
    tol = tol or DEFAULT_TOLERANCE
    info: dict = {}
    mu = model.mean()
    sigma = model.std()
    cv = model.cv() if mu > 0 else None

    if ctx.method == "exact":
        premium = premium_exact(u, model, tol, info)
    else:
        premium = premium_approx(u, model)
    vot_mu = vot_at(u, mu, ctx)
    vot_value = vot_mean(u, model, ctx, tol)
    cot_value = vot_value * mu
    cotv_value = cotv(u, model, ctx, tol)
    if model.is_degenerate:
        rho = 0.0
    elif ctx.method == "exact":
        # keep the reported ratio literally equal to cotv / cot
        if cot_value <= 0:
            raise ZeroCostError(f"cost of time is {cot_value:g}; ratio undefined")
        rho = cotv_value / cot_value
    else:
        rho = ratio_rho(u, model, ctx, tol)
    if model.is_degenerate:
        eta = 1.0
    elif ctx.method == "exact":
        eta = vot_mu / vot_value if vot_value != 0 else None
    else:
        eta = ratio_eta(u, model)
    bound = rho_upper_bound(u, model) if isinstance(u, QuadraticUtility) else None

    report = ValuationReport(
        framework="eu",
        method=ctx.method,
        phi=ctx.phi,
        mu=mu,
        sigma=sigma,
        cv=cv,
        premium=premium,
        vot_at_mu=vot_mu,
        vot=vot_value,
        cot=cot_value,
        cotv=cotv_value,
        rho=rho,
        eta=eta,
        rho_upper_bound=bound,
        congestion_multiplier=rho + 1.0 if rho >= 0 else None,
        diagnostics={
            "utility": u.label(),
            "model": model.label(),
            **info,
        },
    )
    report.require_finite()
    return report
