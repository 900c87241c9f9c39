import numpy as np
import pytest

from teachmind.domain import DomainConfig, NoiseConfig, Scenario, ScriptEvent
from teachmind.micro import two_door_model, two_door_prior


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def two_door():
    return two_door_model()


@pytest.fixture
def two_door_b0():
    return two_door_prior()


def noiseless_config(**overrides) -> DomainConfig:
    defaults = dict(noise=NoiseConfig(0.0, 0.0, 0.0, 0.0, 0.0))
    defaults.update(overrides)
    return DomainConfig(**defaults)


def golden_scenario() -> Scenario:
    """Fixed noiseless exchange used for golden-trace and service parity."""
    return Scenario(
        name="golden",
        config=noiseless_config(horizon=6, seed=42),
        script=(
            ScriptEvent("teacher", "utter_red", observed="heard_red"),
            ScriptEvent("teacher", "answer_yes", observed="heard_yes"),
            ScriptEvent("teacher", "point_0", observed="saw_point_0"),
        ),
        true_theta="red-ball",
    )
