"""Analytic energy / joint coverage probabilities and throughput optimization.

Coverage values compose the kernels from :mod:`iotcov.distributions`:
tier 0 means the serving gateway is the one at the device's own cluster
center, tier 1 the nearest gateway from the rest of the network.  Energy
coverage is available under two aggregate-field approximations (the second
keeps the two strongest gateways explicit as a hypo-exponential pair);
joint SINR+energy coverage is derived under approximation 1 only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from scipy import optimize as _optimize

from .distributions import (
    association_probabilities,
    cluster_center_distance_law,
    integrate,
    nearest_gw_distance_law,
    nu,
    psi,
    rho,
    serving_distance_cdf,
    theta,
    upper_incomplete_gamma,
)
from .model import (
    ConfigError,
    MaternCluster,
    SystemConfig,
    ThomasCluster,
    c_of_tau,
    overall_mixture,
    prob_gw_at_center,
)

_METRICS = ("energy", "joint", "throughput")
_SCENARIOS = ("clustered", "ppp_baseline", "overall")


@dataclass(frozen=True)
class CoverageQuery:
    """One evaluable quantity: metric, scenario, approximation, slot split."""

    metric: str
    scenario: str
    tau: float
    approximation: int = 1

    def __post_init__(self):
        if self.metric not in _METRICS:
            raise ConfigError(f"metric must be one of {_METRICS}")
        if self.scenario not in _SCENARIOS:
            raise ConfigError(f"scenario must be one of {_SCENARIOS}")
        if self.approximation not in (1, 2):
            raise ConfigError("approximation must be 1 or 2")
        if self.approximation == 2 and self.metric != "energy":
            raise ConfigError("approximation 2 is only derived for the energy metric")
        if not 0 < self.tau < 1:
            raise ConfigError("tau must lie in (0, 1)")


@dataclass(frozen=True)
class TauSearchResult:
    """Outcome of the slot-split optimization."""

    tau_star: float
    throughput_star: float  # bits/s/Hz
    evaluations: int
    grid_then_refine_trace: tuple[tuple[float, float], ...]


# ---------------------------------------------------------------------------
# shared helpers


def _threshold_radius(cfg: SystemConfig, c: float) -> float:
    """Radius A below which the mean residual field alone meets the threshold."""
    lam, alpha = cfg.lambda_total, cfg.alpha
    return (2 * math.pi * lam / (c * (alpha - 2))) ** (1 / (alpha - 2))


def _psi_root(cfg: SystemConfig, c: float) -> float | None:
    """Serving distance where the tier-1 conditional mean field equals c.

    Returns None when the mean field exceeds c on the whole support
    (coverage is then certain for every serving distance).
    """
    model, lam, alpha = cfg.cluster, cfg.lambda_total, cfg.alpha

    def gap(w: float) -> float:
        return psi(model, lam, alpha, w, variant="closed_form") - c

    if isinstance(model, MaternCluster):
        hi = model.r_c * (1 - 1e-12)
        if gap(hi) >= 0:
            return None
    else:
        hi = 1 / math.sqrt(math.pi * lam)
        for _ in range(200):
            if gap(hi) < 0:
                break
            hi *= 2
        else:
            return None
    lo = hi
    for _ in range(600):
        lo /= 2
        if gap(lo) > 0:
            break
    else:
        return 0.0
    return float(_optimize.bisect(gap, lo, hi, xtol=1e-10))


def _grow_cutoff(exponent: Callable[[float], float], start: float) -> float:
    """Double ``start`` until the decaying exponent passes 60 (weight < 1e-26)."""
    w = start
    for _ in range(200):
        if exponent(w) > 60.0:
            return w
        w *= 2
    return w


def _kappa(cfg: SystemConfig) -> float:
    """Quadratic decay coefficient of the tier-1/tier-0 Thomas serving weight."""
    return math.pi * cfg.lambda_total + 1 / (2 * cfg.cluster.sigma_c ** 2)


def _center_law_cutoff(cfg: SystemConfig) -> float:
    """Upper integration limit for the cluster-center distance law."""
    model = cfg.cluster
    if isinstance(model, MaternCluster):
        return model.r_c
    return model.sigma_c * math.sqrt(120.0)


def _two_source_survival(a: float, b: float, c: float) -> float:
    """P(X/a + Y/b >= c) for independent unit exponentials X, Y (rates a, b).

    Near-coincident rates (|1 - b/a| < 1e-6) use the analytic limit
    exp(-a*c) * (1 + a*c).
    """
    if c <= 0:
        return 1.0
    if abs(1.0 - b / a) < 1e-6:
        ac = a * c
        return math.exp(-ac) * (1 + ac)
    return (b * math.exp(-a * c) - a * math.exp(-b * c)) / (b - a)


# ---------------------------------------------------------------------------
# energy coverage, approximation 1


def energy_cov_tier1_approx1(cfg: SystemConfig, tau: float, method: str = "auto") -> float:
    """Energy coverage given tier-1 association, approximation 1.

    ``method`` selects the integral form: "general" composes the serving-
    distance law with the conditional-mean kernel; "alpha4" is the
    specialized Matern alpha=4 expression.  "auto" picks alpha4 when valid.
    """
    c = c_of_tau(cfg, tau)
    if c == 0:
        return 1.0
    model, lam, alpha = cfg.cluster, cfg.lambda_total, cfg.alpha
    is_matern4 = isinstance(model, MaternCluster) and alpha == 4
    if method == "auto":
        method = "alpha4" if is_matern4 else "general"
    if method == "alpha4":
        if not is_matern4:
            raise ConfigError("alpha4 method requires a Matern model with alpha = 4")
        return _matern_tier1_alpha4(cfg, c)
    if method != "general":
        raise ConfigError("method must be 'auto', 'general' or 'alpha4'")

    w_star = _psi_root(cfg, c)
    if w_star is None:
        return 1.0
    a0, a1 = association_probabilities(model, lam)
    r1law = nearest_gw_distance_law(lam)
    r0law = cluster_center_distance_law(model)
    head = serving_distance_cdf(1, model, lam, w_star)
    if isinstance(model, MaternCluster):
        hi = model.r_c
    else:
        hi = max(w_star * (1 + 1e-9), math.sqrt(60.0 / _kappa(cfg)))

    def integrand(w: float) -> float:
        e = max(0.0, w ** alpha * (c - psi(model, lam, alpha, w, variant="closed_form")))
        return math.exp(-e) * float(r0law.ccdf(w)) * float(r1law.pdf(w)) / a1

    tail, _ = integrate(integrand, w_star, hi)
    return head + tail


def _matern_tier1_alpha4(cfg: SystemConfig, c: float) -> float:
    rc = cfg.cluster.r_c
    lam = cfg.lambda_total
    pil = math.pi * lam
    _, a1 = association_probabilities(cfg.cluster, lam)
    b = math.sqrt((pil + 1 / rc ** 2) / c)
    if rc < b:
        return (pil * rc ** 2 - 1 + math.exp(-pil * rc ** 2)) / (pil * rc ** 2 * a1)
    head = (pil * rc ** 2 - 1 + (pil * (b * b - rc * rc) + 1) * math.exp(-pil * b * b)) \
        / (pil * rc ** 2 * a1)

    def integrand(w: float) -> float:
        return math.exp(-(c * w ** 4 - w * w / rc ** 2)) \
            * 2 * pil * w * (rc * rc - w * w) / rc ** 2

    tail, _ = integrate(integrand, b, rc)
    return head + tail / a1


def energy_cov_tier0_approx1(cfg: SystemConfig, tau: float, method: str = "auto") -> float:
    """Energy coverage given tier-0 association (serving GW at the own
    cluster center), approximation 1."""
    c = c_of_tau(cfg, tau)
    if c == 0:
        return 1.0
    model, lam, alpha = cfg.cluster, cfg.lambda_total, cfg.alpha
    is_matern4 = isinstance(model, MaternCluster) and alpha == 4
    if method == "auto":
        method = "alpha4" if is_matern4 else "general"
    a_rad = _threshold_radius(cfg, c)
    if isinstance(model, MaternCluster) and a_rad >= model.r_c:
        return 1.0
    if method == "alpha4":
        if not is_matern4:
            raise ConfigError("alpha4 method requires a Matern model with alpha = 4")
        return _matern_tier0_alpha4(cfg, c, a_rad)
    if method != "general":
        raise ConfigError("method must be 'auto', 'general' or 'alpha4'")

    a0, _ = association_probabilities(model, lam)
    r1law = nearest_gw_distance_law(lam)
    r0law = cluster_center_distance_law(model)
    head = serving_distance_cdf(0, model, lam, a_rad)
    mean_coef = 2 * math.pi * lam / (alpha - 2)

    def exponent(w: float) -> float:
        e = c * w ** alpha - mean_coef * w * w
        if isinstance(model, ThomasCluster):
            e += _kappa(cfg) * w * w
        else:
            e += math.pi * lam * w * w
        return e

    hi = model.r_c if isinstance(model, MaternCluster) else _grow_cutoff(exponent, a_rad)

    def integrand(w: float) -> float:
        e = c * w ** alpha - mean_coef * w * w
        return math.exp(-e) * float(r1law.ccdf(w)) * float(r0law.pdf(w)) / a0

    tail, _ = integrate(integrand, a_rad, hi)
    return head + tail


def _matern_tier0_alpha4(cfg: SystemConfig, c: float, a_rad: float) -> float:
    rc = cfg.cluster.r_c
    lam = cfg.lambda_total
    pil = math.pi * lam
    a0, _ = association_probabilities(cfg.cluster, lam)
    sqc = math.sqrt(c)
    gamma_span = upper_incomplete_gamma(0.5, c * a_rad ** 4) \
        - upper_incomplete_gamma(0.5, c * rc ** 4)
    return (1 - math.exp(-pil * a_rad ** 2) + pil / (2 * sqc) * gamma_span) \
        / (pil * rc ** 2 * a0)


def energy_coverage(cfg: SystemConfig, tau: float, approx: int = 1) -> float:
    """Unconditional energy coverage for a device whose cluster has a GW."""
    a0, a1 = association_probabilities(cfg.cluster, cfg.lambda_total)
    if approx == 1:
        t0 = energy_cov_tier0_approx1(cfg, tau)
        t1 = energy_cov_tier1_approx1(cfg, tau)
    elif approx == 2:
        t0 = energy_cov_tier0_approx2(cfg, tau)
        t1 = energy_cov_tier1_approx2(cfg, tau)
    else:
        raise ConfigError("approx must be 1 or 2")
    return a0 * t0 + a1 * t1


def energy_cov_ppp(cfg: SystemConfig, tau: float) -> float:
    """Energy coverage when devices are placed independently of all GWs."""
    c = c_of_tau(cfg, tau)
    if c == 0:
        return 1.0
    lam, alpha = cfg.lambda_total, cfg.alpha
    pil = math.pi * lam
    a_rad = _threshold_radius(cfg, c)
    head = -math.expm1(-pil * a_rad * a_rad)
    quad_coef = (1 - 2 / (alpha - 2)) * pil

    def exponent(r: float) -> float:
        return c * r ** alpha + quad_coef * r * r

    hi = _grow_cutoff(exponent, a_rad)

    def integrand(r: float) -> float:
        return math.exp(-exponent(r)) * 2 * pil * r

    tail, _ = integrate(integrand, a_rad, hi)
    return head + tail


def energy_cov_overall(cfg: SystemConfig, tau: float, approx: int = 1) -> float:
    """Network-wide energy coverage mixing both cluster populations."""
    p_b = prob_gw_at_center(cfg)
    return overall_mixture(energy_coverage(cfg, tau, approx), energy_cov_ppp(cfg, tau), p_b)


# ---------------------------------------------------------------------------
# energy coverage, approximation 2 (two explicit sources, hypo-exponential)


def energy_cov_tier1_approx2(cfg: SystemConfig, tau: float) -> float:
    """Tier-1 energy coverage keeping both the serving GW and the cluster-center
    GW explicit; the residual field enters through its conditional mean."""
    c = c_of_tau(cfg, tau)
    if c == 0:
        return 1.0
    model, lam, alpha = cfg.cluster, cfg.lambda_total, cfg.alpha
    pil = math.pi * lam
    _, a1 = association_probabilities(model, lam)
    r1law = nearest_gw_distance_law(lam)
    r0law = cluster_center_distance_law(model)
    a_rad = _threshold_radius(cfg, c)
    head = serving_distance_cdf(1, model, lam, a_rad)
    hi0 = _center_law_cutoff(cfg)
    hi1 = math.sqrt(60.0 / pil)
    if isinstance(model, MaternCluster):
        hi1 = min(hi1, model.r_c)
    if a_rad >= hi1:
        return head

    def outer(w1: float) -> float:
        ce = c - theta(lam, alpha, w1)
        if ce <= 0 or w1 >= hi0:
            inner_val = float(r0law.ccdf(w1)) if ce <= 0 else 0.0
        else:
            a = w1 ** alpha

            def inner(r0: float) -> float:
                return _two_source_survival(a, r0 ** alpha, ce) * float(r0law.pdf(r0))

            inner_val, _ = integrate(inner, w1, hi0)
        return inner_val * float(r1law.pdf(w1))

    tail, _ = integrate(outer, a_rad, hi1)
    return head + tail / a1


def energy_cov_tier0_approx2(cfg: SystemConfig, tau: float) -> float:
    """Tier-0 energy coverage keeping the center GW and the nearest network GW
    explicit, conditioned exactly on the tier-0 association event."""
    c = c_of_tau(cfg, tau)
    if c == 0:
        return 1.0
    model, lam, alpha = cfg.cluster, cfg.lambda_total, cfg.alpha
    pil = math.pi * lam
    a0, _ = association_probabilities(model, lam)
    r1law = nearest_gw_distance_law(lam)
    r0law = cluster_center_distance_law(model)
    a_rad = _threshold_radius(cfg, c)
    hi0 = _center_law_cutoff(cfg)
    hi1 = math.sqrt(60.0 / pil)
    ccdf_a = float(r1law.ccdf(a_rad))

    def outer(w0: float) -> float:
        certain = max(0.0, float(r1law.ccdf(w0)) - ccdf_a)
        lo = max(a_rad, w0)
        if lo >= hi1:
            kernel_part = 0.0
        else:
            a = w0 ** alpha

            def inner(r1: float) -> float:
                ce = c - theta(lam, alpha, r1)
                return _two_source_survival(a, r1 ** alpha, ce) * float(r1law.pdf(r1))

            kernel_part, _ = integrate(inner, lo, hi1)
        return (certain + kernel_part) * float(r0law.pdf(w0))

    mid = min(a_rad, hi0)
    part1, _ = integrate(outer, 0.0, mid)
    part2 = 0.0
    if mid < hi0:
        part2, _ = integrate(outer, mid, hi0)
    return (part1 + part2) / a0


# ---------------------------------------------------------------------------
# joint SINR + energy coverage (approximation 1)


def joint_cov_tier1(cfg: SystemConfig, tau: float) -> float:
    """Joint coverage given tier-1 association."""
    c = c_of_tau(cfg, tau)
    model, lam, alpha, beta = cfg.cluster, cfg.lambda_total, cfg.alpha, cfg.beta
    pil = math.pi * lam
    _, a1 = association_probabilities(model, lam)
    r1law = nearest_gw_distance_law(lam)
    r0law = cluster_center_distance_law(model)
    rho_val = rho(beta, alpha)
    s2n = beta * cfg.noise / cfg.p_t
    hi0 = _center_law_cutoff(cfg)
    hi = math.sqrt(60.0 / (pil * (1 + 2 * rho_val)))
    if isinstance(model, MaternCluster):
        hi = min(hi, model.r_c)

    def integrand(w1: float) -> float:
        e = s2n * w1 ** alpha + 2 * pil * rho_val * w1 * w1
        if c > 0:
            e += max(0.0, w1 ** alpha * (c - psi(model, lam, alpha, w1, variant="closed_form")))
        if w1 >= hi0:
            return 0.0
        bw = beta * w1 ** alpha

        def inner(r0: float) -> float:
            return float(r0law.pdf(r0)) / (1 + bw * r0 ** (-alpha))

        inner_val, _ = integrate(inner, w1, hi0)
        return math.exp(-e) * float(r1law.pdf(w1)) * inner_val

    w_star = _psi_root(cfg, c) if c > 0 else None
    if w_star is None or w_star >= hi:
        val, _ = integrate(integrand, 0.0, hi)
    else:
        head, _ = integrate(integrand, 0.0, w_star)
        tail, _ = integrate(integrand, w_star, hi)
        val = head + tail
    return val / a1


def joint_cov_tier0(cfg: SystemConfig, tau: float) -> float:
    """Joint coverage given tier-0 association."""
    c = c_of_tau(cfg, tau)
    model, lam, alpha, beta = cfg.cluster, cfg.lambda_total, cfg.alpha, cfg.beta
    pil = math.pi * lam
    a0, _ = association_probabilities(model, lam)
    r1law = nearest_gw_distance_law(lam)
    r0law = cluster_center_distance_law(model)
    rho_val = rho(beta, alpha)
    s2n = beta * cfg.noise / cfg.p_t
    hi0 = _center_law_cutoff(cfg)
    if isinstance(model, ThomasCluster):
        hi0 = min(hi0, math.sqrt(60.0 / _kappa(cfg)))

    def f_w0(w: float) -> float:
        return float(r1law.ccdf(w)) * float(r0law.pdf(w)) / a0

    def seg1(w: float) -> float:
        return math.exp(-(s2n * w ** alpha + 2 * pil * rho_val * w * w)) * f_w0(w)

    if c == 0:
        val, _ = integrate(seg1, 0.0, hi0)
        return val
    a_rad = _threshold_radius(cfg, c)
    val, _ = integrate(seg1, 0.0, min(a_rad, hi0))
    coef = (rho_val - 1 / (alpha - 2)) * 2 * pil

    def exponent(w: float) -> float:
        e = (s2n + c) * w ** alpha + coef * w * w
        if isinstance(model, ThomasCluster):
            e += _kappa(cfg) * w * w
        else:
            e += pil * w * w
        return e

    hi2 = cfg.cluster.r_c if isinstance(model, MaternCluster) \
        else _grow_cutoff(exponent, a_rad)

    def seg2(w: float) -> float:
        return math.exp(-((s2n + c) * w ** alpha + coef * w * w)) * f_w0(w)

    if a_rad < hi2:
        t, _ = integrate(seg2, a_rad, hi2)
        val += t
    return val


def joint_coverage(cfg: SystemConfig, tau: float) -> float:
    """Joint coverage for a device whose cluster has a GW."""
    a0, a1 = association_probabilities(cfg.cluster, cfg.lambda_total)
    return a0 * joint_cov_tier0(cfg, tau) + a1 * joint_cov_tier1(cfg, tau)


def joint_cov_ppp(cfg: SystemConfig, tau: float) -> float:
    """Joint coverage when devices are placed independently of all GWs."""
    c = c_of_tau(cfg, tau)
    lam, alpha, beta = cfg.lambda_total, cfg.alpha, cfg.beta
    pil = math.pi * lam
    s2n = beta * cfg.noise / cfg.p_t
    nu_unit = nu(lam, beta, alpha, 1.0)

    def seg1(r: float) -> float:
        return math.exp(-(s2n * r ** alpha + (pil + nu_unit) * r * r)) * 2 * pil * r

    hi1 = math.sqrt(60.0 / (pil + nu_unit))
    if c == 0:
        val, _ = integrate(seg1, 0.0, hi1)
        return val
    a_rad = _threshold_radius(cfg, c)
    val, _ = integrate(seg1, 0.0, min(a_rad, hi1))
    quad_coef = (1 - 2 / (alpha - 2)) * pil + nu_unit

    def exponent(r: float) -> float:
        return (s2n + c) * r ** alpha + quad_coef * r * r

    hi2 = _grow_cutoff(exponent, a_rad)

    def seg2(r: float) -> float:
        return math.exp(-exponent(r)) * 2 * pil * r

    t, _ = integrate(seg2, a_rad, hi2)
    return val + t


def joint_cov_overall(cfg: SystemConfig, tau: float) -> float:
    """Network-wide joint coverage mixing both cluster populations."""
    p_b = prob_gw_at_center(cfg)
    return overall_mixture(joint_coverage(cfg, tau), joint_cov_ppp(cfg, tau), p_b)


# ---------------------------------------------------------------------------
# throughput and slot-split optimization


def throughput(cfg: SystemConfig, tau: float, scenario: str = "clustered") -> float:
    """Average downlink throughput (1 - tau) * log2(1 + beta) * P_joint, bits/s/Hz."""
    if scenario == "clustered":
        p = joint_coverage(cfg, tau)
    elif scenario == "ppp_baseline":
        p = joint_cov_ppp(cfg, tau)
    elif scenario == "overall":
        p = joint_cov_overall(cfg, tau)
    else:
        raise ConfigError(f"scenario must be one of {_SCENARIOS}")
    return (1 - tau) * math.log2(1 + cfg.beta) * p


def evaluate(cfg: SystemConfig, query: CoverageQuery) -> float:
    """Dispatch a CoverageQuery to the matching analytic expression."""
    if query.metric == "energy":
        if query.scenario == "clustered":
            return energy_coverage(cfg, query.tau, query.approximation)
        if query.scenario == "ppp_baseline":
            return energy_cov_ppp(cfg, query.tau)
        return energy_cov_overall(cfg, query.tau, query.approximation)
    if query.metric == "joint":
        if query.scenario == "clustered":
            return joint_coverage(cfg, query.tau)
        if query.scenario == "ppp_baseline":
            return joint_cov_ppp(cfg, query.tau)
        return joint_cov_overall(cfg, query.tau)
    return throughput(cfg, query.tau, query.scenario)


def optimal_tau(cfg: SystemConfig, scenario: str = "clustered",
                grid_step: float = 0.05, refine_tol: float = 1e-3,
                throughput_fn: Callable[[float], float] | None = None) -> TauSearchResult:
    """Locate the slot split maximizing throughput: coarse grid scan over
    (grid_step, 1 - grid_step), then golden-section refinement around the
    grid maximum until the bracket is narrower than ``refine_tol``.

    ``throughput_fn`` overrides the objective (test seam); the default
    evaluates :func:`throughput` for the given scenario.
    """
    if not 0 < grid_step < 0.5:
        raise ConfigError("grid_step must lie in (0, 0.5)")
    fn = throughput_fn if throughput_fn is not None else \
        (lambda t: throughput(cfg, t, scenario))

    lo = grid_step
    hi = 1 - grid_step
    n_steps = int(round((hi - lo) / grid_step))
    grid = [lo + k * grid_step for k in range(n_steps + 1)]
    grid = [t for t in grid if t <= hi + 1e-12]

    trace: list[tuple[float, float]] = []
    for t in grid:
        trace.append((t, fn(t)))
    best_i = max(range(len(trace)), key=lambda i: trace[i][1])
    if trace[best_i][1] <= 0:
        raise ArithmeticError("no interior optimum: throughput is zero on the whole grid")

    a = max(lo, grid[best_i] - grid_step)
    b = min(hi, grid[best_i] + grid_step)
    invphi = (math.sqrt(5) - 1) / 2
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = fn(x1), fn(x2)
    trace += [(x1, f1), (x2, f2)]
    while b - a > refine_tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = fn(x2)
            trace.append((x2, f2))
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = fn(x1)
            trace.append((x1, f1))
    tau_star, thr_star = max(trace, key=lambda p: p[1])
    return TauSearchResult(tau_star=tau_star, throughput_star=thr_star,
                           evaluations=len(trace),
                           grid_then_refine_trace=tuple(trace))
