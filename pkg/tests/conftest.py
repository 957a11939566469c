import sys
import os
sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

import numpy as np
import pytest

from graphlearn.data import RawDataset, standardize


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def correlated_columns(seed: int, n: int = 500, rho: float = 0.9) -> np.ndarray:
    """Three columns: 0 and 1 correlated at rho, 2 independent."""
    cov = np.array([[1.0, rho, 0.0], [rho, 1.0, 0.0], [0.0, 0.0, 1.0]])
    return np.random.default_rng(seed).multivariate_normal(np.zeros(3), cov, size=n)


@pytest.fixture
def small_dataset():
    values = correlated_columns(7, n=60)
    return standardize(RawDataset(values=values, column_names=("a", "b", "c")))


@pytest.fixture
def write_csv(tmp_path):
    def _write(name: str, values: np.ndarray, header=None, delimiter=","):
        path = tmp_path / name
        lines = []
        if header is not None:
            lines.append(delimiter.join(header))
        lines += [delimiter.join(format(v, ".17g") for v in row) for row in np.atleast_2d(values)]
        path.write_text("\n".join(lines) + "\n")
        return str(path)
    return _write
