import numpy as np
import pytest

from gce_metrology.bayes import BayesModel


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def worked_model():
    """|0>, |+> with a uniform prior and a = (0, 1)."""
    plus = np.full((2, 2), 0.5)
    zero = np.diag([1.0, 0.0])
    return BayesModel(("0", "+"), [0.5, 0.5], [zero, plus], [0.0, 1.0])
