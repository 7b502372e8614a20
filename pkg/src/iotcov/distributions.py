"""Distance laws, association probabilities, coverage kernels, and quadrature.

Notation used throughout: ``lam`` is the total gateway density (points/m^2),
``alpha`` the path-loss exponent (> 2).  The two radial laws are

* nearest-gateway distance:  pdf 2*pi*lam*r*exp(-pi*lam*r^2) on [0, inf)
* cluster-center distance:   Rayleigh(sigma_c) for Thomas scatter,
                             triangular 2r/R_c^2 on [0, R_c] for Matern scatter.

Everything here is a pure function of immutable inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate as _quadpack
from scipy import special as _special

from .model import ClusterModel, ConfigError, MaternCluster, ThomasCluster


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to converge; carries the best estimate."""

    def __init__(self, message: str, best_estimate: float, error_estimate: float):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and limits for the adaptive integration engine.

    Semi-infinite ranges [a, inf) are always mapped to [0, 1) through the
    fixed substitution x = a + t/(1-t) before subdivision.
    """

    abs_tol: float = 1e-9
    rel_tol: float = 1e-8
    max_subdivisions: int = 2000

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ConfigError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ConfigError("max_subdivisions must be at least 1")


DEFAULT_QUADRATURE = QuadratureSpec()


def integrate(f: Callable[[float], float], lo: float, hi: float,
              spec: QuadratureSpec = DEFAULT_QUADRATURE) -> tuple[float, float]:
    """Adaptive Gauss-Kronrod integral of ``f`` over (lo, hi); hi may be inf.

    Returns (value, error_estimate) with |error_estimate| within
    max(abs_tol, rel_tol*|value|); raises QuadratureError otherwise.
    """
    if math.isinf(hi):
        a = lo

        def transformed(t: float) -> float:
            om = 1.0 - t
            return f(a + t / om) / (om * om)

        out = _quadpack.quad(transformed, 0.0, 1.0, epsabs=spec.abs_tol,
                             epsrel=spec.rel_tol, limit=spec.max_subdivisions,
                             full_output=1)
    else:
        out = _quadpack.quad(f, lo, hi, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                             limit=spec.max_subdivisions, full_output=1)
    value, err = out[0], out[1]
    if len(out) > 3 and err > max(spec.abs_tol, spec.rel_tol * abs(value)):
        raise QuadratureError(
            f"quadrature did not converge after {spec.max_subdivisions} subdivisions: {out[3]}",
            best_estimate=value, error_estimate=err)
    return value, err


@dataclass(frozen=True)
class DistanceLaw:
    """A radial distance distribution given by its pdf and ccdf."""

    pdf: Callable[[float], float]
    ccdf: Callable[[float], float]
    support: tuple[float, float]  # (lo, hi); hi may be inf


def nearest_gw_distance_law(lam: float) -> DistanceLaw:
    """Distance from the origin to the nearest point of a PPP of density ``lam``."""
    if lam <= 0:
        raise ConfigError("lam must be positive")

    def pdf(r):
        return 2 * math.pi * lam * r * np.exp(-math.pi * lam * r * r)

    def ccdf(r):
        return np.exp(-math.pi * lam * r * r)

    return DistanceLaw(pdf=pdf, ccdf=ccdf, support=(0.0, math.inf))


def cluster_center_distance_law(model: ClusterModel) -> DistanceLaw:
    """Distance from a device to its own cluster center."""
    if isinstance(model, ThomasCluster):
        s2 = model.sigma_c ** 2

        def pdf(r):
            return (r / s2) * np.exp(-r * r / (2 * s2))

        def ccdf(r):
            return np.exp(-r * r / (2 * s2))

        return DistanceLaw(pdf=pdf, ccdf=ccdf, support=(0.0, math.inf))

    rc = model.r_c
    rc2 = rc * rc

    def pdf(r):
        return np.where(r <= rc, 2 * np.asarray(r, dtype=float) / rc2, 0.0)

    def ccdf(r):
        return np.where(r <= rc, (rc2 - np.square(r)) / rc2, 0.0)

    return DistanceLaw(pdf=pdf, ccdf=ccdf, support=(0.0, rc))


def association_probabilities(model: ClusterModel, lam: float) -> tuple[float, float]:
    """(A0, A1): probabilities that the serving GW is the own-cluster one (A0)
    or the nearest network GW (A1)."""
    if lam <= 0:
        raise ConfigError("lam must be positive")
    if isinstance(model, ThomasCluster):
        a1 = 2 * math.pi * lam * model.sigma_c ** 2 / (1 + 2 * math.pi * lam * model.sigma_c ** 2)
    else:
        x = math.pi * lam * model.r_c ** 2
        a1 = (math.exp(-x) + x - 1) / x
    return 1.0 - a1, a1


def serving_distance_pdf(tier: int, model: ClusterModel, lam: float, w) -> float:
    """Density of the serving distance conditioned on tier-0 / tier-1 association."""
    if np.any(np.asarray(w) < 0):
        raise ConfigError("w must be nonnegative")
    a0, a1 = association_probabilities(model, lam)
    r1 = nearest_gw_distance_law(lam)
    r0 = cluster_center_distance_law(model)
    if tier == 0:
        if a0 <= 0:
            raise ConfigError("tier-0 association is degenerate (A0 = 0)")
        return r1.ccdf(w) * r0.pdf(w) / a0
    if tier == 1:
        if a1 <= 0:
            raise ConfigError("tier-1 association is degenerate (A1 = 0)")
        return r0.ccdf(w) * r1.pdf(w) / a1
    raise ConfigError("tier must be 0 or 1")


def serving_distance_cdf(tier: int, model: ClusterModel, lam: float, w: float) -> float:
    """CDF of the serving distance for the given tier (closed form per model)."""
    if w <= 0:
        return 0.0
    a0, a1 = association_probabilities(model, lam)
    pil = math.pi * lam
    if isinstance(model, ThomasCluster):
        kappa = pil + 1 / (2 * model.sigma_c ** 2)
        if tier == 0:
            return -math.expm1(-kappa * w * w) / (2 * kappa * model.sigma_c ** 2) / a0
        return -math.expm1(-kappa * w * w) * (pil / kappa) / a1
    rc = model.r_c
    x = min(w, rc)
    if tier == 0:
        return -math.expm1(-pil * x * x) / (pil * rc * rc) / a0
    if w >= rc:
        return 1.0
    e = math.exp(-pil * w * w)
    num = pil * rc * rc - 1 + (pil * (w * w - rc * rc) + 1) * e
    return num / (pil * rc * rc) / a1


def theta(lam: float, alpha: float, w: float) -> float:
    """Mean residual harvest rate from PPP gateways beyond radius ``w``:
    2*pi*lam*w^(2-alpha)/(alpha-2)."""
    if w <= 0:
        raise ConfigError("w must be positive")
    if alpha <= 2:
        raise ConfigError("alpha must exceed 2")
    return 2 * math.pi * lam / (alpha - 2) * w ** (2 - alpha)


def _exp_scaled_upper_gamma(s: float, x: float) -> float:
    """exp(x) * Gamma(s, x), stable for large x (s may be <= 0)."""
    if x <= 600.0:
        return math.exp(x) * upper_incomplete_gamma(s, x)
    # asymptotic series Gamma(s,x) ~ x^(s-1) e^(-x) [1 + (s-1)/x + ...]
    total, term = 1.0, 1.0
    for k in range(1, 30):
        term *= (s - k) / x
        if abs(term) < 1e-17 * abs(total):
            break
        total += term
    return x ** (s - 1) * total


def psi(model: ClusterModel, lam: float, alpha: float, w1: float,
        variant: str = "closed_form") -> float:
    """Conditional mean harvest rate seen by a tier-1 device at serving
    distance ``w1``: own-center contribution beyond w1 plus the PPP field
    beyond w1 (units m^-alpha).

    ``variant="general"`` evaluates the defining integral by quadrature;
    ``variant="closed_form"`` uses the per-model closed expressions.  Both
    agree to 1e-8 relative.
    """
    if w1 <= 0:
        raise ConfigError("w1 must be positive")
    ppp_term = 2 * math.pi * lam / (alpha - 2) * w1 ** (2 - alpha)
    if isinstance(model, MaternCluster):
        rc = model.r_c
        if w1 >= rc:
            raise ConfigError("w1 must be below r_c for the tier-1 kernel")
    if variant == "general":
        law = cluster_center_distance_law(model)
        hi = law.support[1]
        cc = law.ccdf(w1)
        val, _ = integrate(lambda r: r ** (-alpha) * law.pdf(r), w1, hi)
        return val / cc + ppp_term
    if variant != "closed_form":
        raise ConfigError("variant must be 'general' or 'closed_form'")
    if isinstance(model, ThomasCluster):
        s2 = model.sigma_c ** 2
        x = w1 * w1 / (2 * s2)
        scaled = _exp_scaled_upper_gamma(1 - alpha / 2, x)
        return scaled / (model.sigma_c ** alpha * 2 ** (alpha / 2)) + ppp_term
    rc = model.r_c
    if rc - w1 < 1e-9 * rc:
        # 0/0 limit of (w^(2-a) - R^(2-a)) / (R^2 - w^2) at w -> R
        center = (alpha - 2) * w1 ** (-alpha) / 2
    else:
        center = (w1 ** (2 - alpha) - rc ** (2 - alpha)) / (rc * rc - w1 * w1)
    return 2 / (alpha - 2) * center + ppp_term


def rho(beta: float, alpha: float) -> float:
    """Interference exponent coefficient for the serving-distance-scaled PGFL:
    (beta^(2/alpha)/2) * int_{beta^(-2/alpha)}^inf du / (1 + u^(alpha/2))."""
    if beta <= 0:
        raise ConfigError("beta must be positive")
    if alpha <= 2:
        raise ConfigError("alpha must exceed 2")
    b2a = beta ** (2 / alpha)
    val, _ = integrate(lambda u: 1.0 / (1.0 + u ** (alpha / 2)), b2a ** -1, math.inf)
    return b2a / 2 * val


def nu(lam: float, beta: float, alpha: float, r1: float) -> float:
    """PPP interference exponent nu(r1, beta) =
    (2*pi*lam*beta^(2/alpha)*r1^2/alpha) * int_{1/beta}^inf dz/(z^(1-2/alpha)(1+z))."""
    if r1 < 0:
        raise ConfigError("r1 must be nonnegative")
    if r1 == 0:
        return 0.0
    val, _ = integrate(lambda z: 1.0 / (z ** (1 - 2 / alpha) * (1 + z)), 1 / beta, math.inf)
    return 2 * math.pi * lam * beta ** (2 / alpha) * r1 * r1 / alpha * val


def upper_incomplete_gamma(s: float, x: float) -> float:
    """Gamma(s, x) = int_x^inf t^(s-1) e^(-t) dt for real s (including s <= 0).

    Positive s uses the regularized library routine; s <= 0 descends the
    recurrence Gamma(s, x) = (Gamma(s+1, x) - x^s e^(-x)) / s from a directly
    computable anchor (Gamma(0, x) = E1(x) for integer s, the fractional part
    in (0, 1) otherwise).
    """
    if x <= 0:
        if s > 0 and x == 0:
            return float(_special.gamma(s))
        raise ConfigError("x must be positive (the integral diverges for s <= 0)")
    if s > 0:
        return float(_special.gammaincc(s, x) * _special.gamma(s))
    if s == int(s):
        val = float(_special.exp1(x))
        ss = 0.0
    else:
        frac = s - math.floor(s)  # in (0, 1)
        val = float(_special.gammaincc(frac, x) * _special.gamma(frac))
        ss = frac
    ex = math.exp(-x)
    while ss > s + 0.5:
        ss -= 1.0
        val = (val - x ** ss * ex) / ss
    return val
