import logging

import pytest
from hypothesis import settings

from tracerdeconv.perfusion import ForwardModelConfig, synthesize

from tests.oracles import AIF, GRID, IMPULSE

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def model():
    return ForwardModelConfig(1.0, AIF, IMPULSE, GRID)


@pytest.fixture(scope="session")
def curves(model):
    return synthesize(model)


@pytest.fixture(autouse=True)
def _quiet_warnings(caplog):
    caplog.set_level(logging.ERROR, logger="tracerdeconv")
