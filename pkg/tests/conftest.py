"""Shared fixtures and the acceptance-report terminal summary."""
from __future__ import annotations

import pytest

from iotcov.model import (
    MaternCluster,
    RateLinkedEnergyThreshold,
    SystemConfig,
    ThomasCluster,
    validate_config,
)


def make_config(cluster, **overrides) -> SystemConfig:
    """Reference parameter set with a chosen cluster law."""
    params = dict(
        alpha=4.0,
        lambda_total=0.01,
        lambda_bc=0.01,
        lambda_b=0.0,
        lambda_c=0.01,
        n1=10.0,
        n2=10.0,
        cluster=cluster,
        p_t=1.0,
        noise=1e-10,
        eta=0.5,
        slot_t=1.0,
        beta=1.0,
        e_rec=RateLinkedEnergyThreshold(a=1e-4, b=5e-5, r_prime=1.0),
    )
    params.update(overrides)
    return validate_config(SystemConfig(**params))


@pytest.fixture
def thomas_cfg() -> SystemConfig:
    return make_config(ThomasCluster(sigma_c=5.0))


@pytest.fixture
def matern_cfg() -> SystemConfig:
    return make_config(MaternCluster(r_c=10.0))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    try:
        from test_acceptance import REPORT_LINES
    except ImportError:
        return
    if REPORT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in REPORT_LINES:
            terminalreporter.write_line(line)
