import numpy as np
import pytest

from tangmax import FieldSpec, ModelCurve, RescaledCurve, generate


@pytest.fixture(scope="session")
def ball_field_small():
    """n=1 ball indicator on period 32 (R=16 convention)."""
    return generate(FieldSpec("ball_indicator"), 1, 32.0)


@pytest.fixture(scope="session")
def random_field_small():
    return generate(FieldSpec("random_phase", seed=7), 1, 32.0)


@pytest.fixture(scope="session")
def curve_quarter_16():
    return RescaledCurve(ModelCurve((0.25,)), 16.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
