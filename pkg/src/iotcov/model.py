"""Domain types and the scalar quantities every other module consumes.

All types are frozen dataclasses; every operation is a pure function, so
the whole module is safe for unrestricted concurrent use.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union


class ConfigError(ValueError):
    """A configuration or argument violates a model invariant."""


@dataclass(frozen=True)
class ThomasCluster:
    """Isotropic Gaussian device scatter around each cluster center."""

    sigma_c: float  # m, std of the Gaussian offset, > 0


@dataclass(frozen=True)
class MaternCluster:
    """Uniform device scatter on a disc around each cluster center."""

    r_c: float  # m, disc radius, > 0


ClusterModel = Union[ThomasCluster, MaternCluster]


@dataclass(frozen=True)
class FixedEnergyThreshold:
    """Receiver-activation energy that does not depend on the slot split."""

    e_rec: float  # J, >= 0


@dataclass(frozen=True)
class RateLinkedEnergyThreshold:
    """Activation energy tied to the reception phase: (1-tau)*T*(a*r_prime + b).

    ``r_prime`` is the target downlink rate driving the receiver's energy
    need; ``None`` resolves to log2(1 + beta) so the threshold is
    self-consistent with the SINR target.
    """

    a: float  # J per rate unit
    b: float  # J
    r_prime: float | None = None  # rate units


EnergyThresholdSpec = Union[FixedEnergyThreshold, RateLinkedEnergyThreshold]


@dataclass(frozen=True)
class SystemConfig:
    """Physical and geometric parameters of one network scenario.

    Densities are points/m^2, distances meters, powers watts, times seconds.
    """

    alpha: float          # path-loss exponent, > 2
    lambda_total: float   # total GW density (= lambda_bc + lambda_b)
    lambda_bc: float      # density of GWs sitting at cluster centers
    lambda_b: float       # density of independently deployed GWs
    lambda_c: float       # cluster-center density
    n1: float             # mean devices per cluster that has a GW
    n2: float             # mean devices per cluster without a GW
    cluster: ClusterModel
    p_t: float            # W, GW transmit power
    noise: float          # W, thermal noise power sigma^2
    eta: float            # harvester efficiency in [0, 1]
    slot_t: float         # s, slot duration T
    beta: float           # SINR threshold (linear)
    e_rec: EnergyThresholdSpec


def validate_config(cfg: SystemConfig) -> SystemConfig:
    """Return ``cfg`` unchanged if every invariant holds, else raise ConfigError.

    The error message names the first violated invariant.
    """
    if not cfg.alpha > 2:
        raise ConfigError("alpha must exceed 2")
    if cfg.lambda_bc < 0 or cfg.lambda_b < 0:
        raise ConfigError("lambda_bc and lambda_b must be nonnegative")
    if not cfg.lambda_total > 0:
        raise ConfigError("lambda_total must be positive")
    if not math.isclose(cfg.lambda_total, cfg.lambda_bc + cfg.lambda_b,
                        rel_tol=1e-9, abs_tol=1e-15):
        raise ConfigError("lambda_total must equal lambda_bc + lambda_b")
    if cfg.lambda_c < 0:
        raise ConfigError("lambda_c must be nonnegative")
    if cfg.lambda_bc > cfg.lambda_c * (1 + 1e-12):
        raise ConfigError("lambda_bc cannot exceed lambda_c")
    if not 0 <= cfg.eta <= 1:
        raise ConfigError("eta must lie in [0, 1]")
    if not cfg.p_t > 0:
        raise ConfigError("p_t must be positive")
    if not cfg.slot_t > 0:
        raise ConfigError("slot_t must be positive")
    if cfg.noise < 0:
        raise ConfigError("noise must be nonnegative")
    if not cfg.beta > 0:
        raise ConfigError("beta must be positive")
    if not cfg.n1 > 0:
        raise ConfigError("n1 must be positive")
    if not cfg.n2 > 0:
        raise ConfigError("n2 must be positive")

    cl = cfg.cluster
    if isinstance(cl, ThomasCluster):
        if not cl.sigma_c > 0:
            raise ConfigError("sigma_c must be positive")
    elif isinstance(cl, MaternCluster):
        if not cl.r_c > 0:
            raise ConfigError("r_c must be positive")
    else:
        raise ConfigError("cluster must be a ThomasCluster or MaternCluster")

    er = cfg.e_rec
    if isinstance(er, FixedEnergyThreshold):
        if er.e_rec < 0:
            raise ConfigError("e_rec must be nonnegative")
    elif isinstance(er, RateLinkedEnergyThreshold):
        r_prime = er.r_prime if er.r_prime is not None else math.log2(1 + cfg.beta)
        if er.a * r_prime + er.b < 0:
            raise ConfigError("rate-linked threshold must be nonnegative for all tau")
    else:
        raise ConfigError("e_rec must be a Fixed or RateLinked threshold")
    return cfg


def e_rec_at(cfg: SystemConfig, tau: float) -> float:
    """Activation energy E_rec(tau) in joules for slot split ``tau``."""
    if not 0 < tau < 1:
        raise ConfigError("tau must lie in (0, 1)")
    er = cfg.e_rec
    if isinstance(er, FixedEnergyThreshold):
        return er.e_rec
    r_prime = er.r_prime if er.r_prime is not None else math.log2(1 + cfg.beta)
    return (1 - tau) * cfg.slot_t * (er.a * r_prime + er.b)


def c_of_tau(cfg: SystemConfig, tau: float) -> float:
    """Normalized harvesting threshold C(tau) = E_rec / (eta * tau * T * P_t).

    C(tau) is the level the aggregate path-loss-weighted fading sum must
    reach for energy coverage; it is strictly decreasing in tau.
    """
    if cfg.eta == 0:
        raise ConfigError("eta must be positive for harvesting")
    return e_rec_at(cfg, tau) / (cfg.eta * tau * cfg.slot_t * cfg.p_t)


def prob_gw_at_center(cfg: SystemConfig) -> float:
    """Probability p_b that a uniformly chosen device sits in a GW-equipped cluster.

    Clusters with a GW hold N1 devices on average, the rest N2, so the
    device-level weight of GW-equipped clusters is N1*lambda_bc against
    N2*(lambda_c - lambda_bc).
    """
    denom = cfg.n1 * cfg.lambda_bc + cfg.n2 * (cfg.lambda_c - cfg.lambda_bc)
    if denom <= 0:
        raise ConfigError("lambda_c must be positive to define p_b")
    return cfg.n1 * cfg.lambda_bc / denom


def overall_mixture(chi: float, chi_bar: float, p_b: float) -> float:
    """Blend the GW-at-center metric ``chi`` with the independent-GW metric
    ``chi_bar`` using weight ``p_b``."""
    return p_b * chi + (1 - p_b) * chi_bar


def overall_mixture_from_ratios(chi: float, chi_bar: float,
                                zeta: float, gamma: float) -> float:
    """Same mixture parametrized by zeta = N2/N1 and gamma = lambda_bc/lambda_c."""
    return (zeta * chi_bar + gamma * (chi - zeta * chi_bar)) / (zeta + gamma * (1 - zeta))
