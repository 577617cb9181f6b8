"""Shared fixtures: reference geometry and calibrated parameter sets."""

import pytest

from angiosim.config import load_lpm_parameters, preset_path
from angiosim.tree import load_tree


@pytest.fixture(scope="session")
def reference_tree():
    return load_tree(preset_path("reference_tree.yaml"))


@pytest.fixture(scope="session")
def rest_params(reference_tree):
    return load_lpm_parameters(preset_path("params_rest.yaml"), reference_tree)


@pytest.fixture(scope="session")
def hyper_params(reference_tree):
    return load_lpm_parameters(preset_path("params_hyperemia.yaml"), reference_tree)
