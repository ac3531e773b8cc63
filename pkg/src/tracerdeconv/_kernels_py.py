"""Pure-Python/numpy versions of the compiled kernels.

Used when the extension is not built, or when ``TRACERDECONV_PURE=1``.
"""

import numpy as np


def convolve_direct(a, b, dt):
    n = a.shape[0]
    out = np.empty(n)
    for j in range(n):
        # a[0..j] against b[j..0]
        out[j] = np.dot(a[: j + 1], b[j::-1])
    return out * dt


def cumulative_trapezoid(y, dt):
    out = np.zeros(y.shape[0])
    np.cumsum(0.5 * dt * (y[1:] + y[:-1]), out=out[1:])
    return out


def gradient2(y, dt):
    out = np.empty(y.shape[0])
    out[1:-1] = (y[2:] - y[:-2]) / (2.0 * dt)
    out[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * dt)
    out[-1] = (3.0 * y[-1] - 4.0 * y[-2] + y[-3]) / (2.0 * dt)
    return out
