import numpy as np
import pytest

from embedtune import SynthSpec, generate


@pytest.fixture(scope="session")
def benchmark():
    """Default synthetic benchmark (seed 0), shared across test modules."""
    return generate(SynthSpec(seed=0))


def unit_rows(rng, n, d):
    rows = rng.standard_normal((n, d))
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)
