import dataclasses

import numpy as np
import pytest

from predsmc import PlantModel, bundled_scenario_path, load_scenario


@pytest.fixture(scope="session")
def model5() -> PlantModel:
    """The scalar-channel example plant used throughout the shipped scenarios."""
    return PlantModel(
        A11=[[-1.0]], A12=[[1.0]], A21=[[-3.0]], A22=[[1.0]],
        B1=[[1.0]], D1=[[0.4, 0.4]], D2=[[0.4, 0.4]],
    )


def load_bundled(name: str, **replacements):
    scenario = load_scenario(bundled_scenario_path(name))
    if replacements:
        scenario = dataclasses.replace(scenario, **replacements)
    return scenario


@pytest.fixture(scope="session")
def nominal_short():
    return load_bundled("nominal", t_final=3.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
