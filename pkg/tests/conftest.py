import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from delaydiff.core import (AffineDelay, ConstantDelay, ConstantSignal, DyadicSpikeDelay,
                            PiecewiseAffineDelay, Scenario, SystemMatrix)

settings.register_profile("repo", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


def closed_form_delays():
    """Representative members of each closed-form family."""
    return {
        "constant": ConstantDelay(1.0),
        "constant-short": ConstantDelay(0.3),
        "affine": AffineDelay(0.75, 1.0),
        "affine-slow": AffineDelay(0.2, 0.5),
        "piecewise": PiecewiseAffineDelay((0.0, 1.0, 2.0), (1.0, 2.0, 1.0), (1.0, 0.0, 1.0)),
        "sawtooth": PiecewiseAffineDelay((0.0, 1.5, 3.0), (0.5, 1.2, 0.4), (0.4, -0.5, 0.1)),
        "dyadic": DyadicSpikeDelay(),
    }


@pytest.fixture
def scalar_scenario():
    return Scenario(SystemMatrix([[0.5]]), ConstantDelay(1.0), ConstantSignal((1.0,)), 30.0,
                    np.arange(301) / 10.0)


ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
