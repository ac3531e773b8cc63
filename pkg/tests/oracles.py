"""Reference implementations and shared constants for the tests."""

import numpy as np

from tracerdeconv.signals import GammaParams, TimeGrid

# grid [0, 40] s at dt = 0.05 and h = gamma(10, 0.5)
GRID = TimeGrid(0.0, 0.05, 801)
IMPULSE = GammaParams(10.0, 0.5)
AIF = GammaParams(4.0, 0.25)


def naive_dft(x):
    """O(n**2) reference transform, X_k = sum_j x_j exp(-2 pi i j k / n)."""
    x = np.asarray(x, dtype=complex)
    n = x.shape[0]
    j = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(j, j) / n) @ x


def rel_l2(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))
