"""Random systems and signals shared by the tests."""

import numpy as np

from ltvgain import LtvSystem, Signal, TvMatrixFn


def _tv(rng, times, rows, cols, scale=1.0):
    """Gridded matrix ``M0 + M1 sin(w t + phi)``."""
    M0 = scale * rng.standard_normal((rows, cols))
    M1 = 0.5 * scale * rng.standard_normal((rows, cols))
    w, phi = rng.uniform(0.5, 3.0), rng.uniform(0, 2 * np.pi)
    samples = M0 + M1 * np.sin(w * times + phi)[:, None, None]
    return TvMatrixFn.gridded(times, samples)


def random_ltv(seed, n_x=None, n_d=None, n_I=None, n_E=None, horizon=None, feedthrough=True):
    rng = np.random.default_rng(seed)
    n_x = n_x or int(rng.integers(1, 7))
    n_d = n_d or int(rng.integers(1, 4))
    n_I = int(rng.integers(0, 3)) if n_I is None else n_I
    n_E = int(rng.integers(0, 3)) if n_E is None else n_E
    if n_I + n_E == 0:
        n_I = 1
    horizon = horizon or float(rng.uniform(1.0, 4.0))
    times = np.linspace(0.0, horizon, 101)
    A = _tv(rng, times, n_x, n_x, 0.6)
    # shift toward stability so the test systems stay well scaled
    A = TvMatrixFn.gridded(times, A.samples - 0.5 * np.eye(n_x))
    D = _tv(rng, times, n_I, n_d, 0.5) if feedthrough else np.zeros((n_I, n_d))
    return LtvSystem.create(
        A,
        _tv(rng, times, n_x, n_d),
        _tv(rng, times, n_I, n_x),
        D,
        _tv(rng, times, n_E, n_x),
        horizon=horizon,
        dims={"n_x": n_x, "n_d": n_d, "n_I": n_I, "n_E": n_E},
    )


def smooth_signal(times, dim, seed, modes=6):
    """Sum of a few random Fourier modes; smooth enough for the quadrature to be accurate."""
    rng = np.random.default_rng(seed)
    T = times[-1]
    out = np.zeros((len(times), dim))
    for k in range(1, modes + 1):
        a = rng.standard_normal((2, dim)) / k
        out += np.outer(np.sin(np.pi * k * times / T), a[0]) + np.outer(np.cos(np.pi * k * times / T), a[1])
    return Signal(times, out)
