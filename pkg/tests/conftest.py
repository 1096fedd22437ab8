import numpy as np
import pytest

from tribrown.models import DenseMatrixModel, MeasureModel, zero_model


@pytest.fixture
def zero():
    return zero_model()


@pytest.fixture
def atoms_pm1():
    return MeasureModel([(1.0, 0.5), (-1.0, 0.5)], kind="selfadjoint")


@pytest.fixture
def normal_3():
    return MeasureModel(
        [(0.4 + 0.3j, 0.5), (-0.8j, 0.3), (1.1 - 0.2j, 0.2)], kind="normal"
    )


@pytest.fixture
def matrix_8():
    rng = np.random.default_rng(42)
    x = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    return DenseMatrixModel(x / np.sqrt(8))
