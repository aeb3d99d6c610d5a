import numpy as np
import pytest

from dgsa.distributions import uniform_unit_space
from dgsa.functions import ModelFunction


def product_model() -> ModelFunction:
    """G = x1 + x1*x2 with its analytic gradient (1 + x2, x1)."""
    return ModelFunction(
        "product",
        2,
        lambda x: x[:, 0] + x[:, 0] * x[:, 1],
        lambda x: np.column_stack([1.0 + x[:, 1], x[:, 0]]),
    )


def triple_model() -> ModelFunction:
    """G = x1*x2*x3 with its analytic gradient."""
    return ModelFunction(
        "triple",
        3,
        lambda x: x[:, 0] * x[:, 1] * x[:, 2],
        lambda x: np.column_stack(
            [x[:, 1] * x[:, 2], x[:, 0] * x[:, 2], x[:, 0] * x[:, 1]]
        ),
    )


@pytest.fixture
def unit_square():
    return uniform_unit_space(2)


@pytest.fixture
def unit_cube3():
    return uniform_unit_space(3)
