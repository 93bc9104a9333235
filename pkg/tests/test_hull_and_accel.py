import os
import subprocess
import sys

import numpy as np
import pytest

from artifact.hull import envelope_on_grid, supporting_chord, upper_hull_indices


def brute_envelope(x, y):
    out = np.empty_like(y)
    for i, xi in enumerate(x):
        best = y[i]
        for a in range(len(x)):
            for b in range(a + 1, len(x)):
                if x[a] <= xi <= x[b]:
                    w = (xi - x[a]) / (x[b] - x[a])
                    best = max(best, (1 - w) * y[a] + w * y[b])
        out[i] = best
    return out


def test_envelope_matches_brute_force():
    rng = np.random.default_rng(1)
    x = np.sort(rng.uniform(size=40))
    y = rng.normal(size=40)
    assert np.allclose(envelope_on_grid(x, y), brute_envelope(x, y), atol=1e-12)


def test_hull_drops_collinear_points_and_supports_chord():
    x = np.linspace(0, 1, 5)
    y = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    assert list(upper_hull_indices(x, y)) == [0, 4]
    a, b, w = supporting_chord(x, np.array([0.0, 1.0, 0.0, 1.0, 0.0]), 0.5)
    assert (a, b) == (1, 3) and w == pytest.approx(0.5)


def test_compiled_and_fallback_kernels_agree():
    rng = np.random.default_rng(2)
    x = np.linspace(0, 1, 501)
    y = np.sin(9 * x) + 0.05 * rng.normal(size=x.size)
    compiled = envelope_on_grid(x, y)
    fallback = envelope_on_grid.py_func(x, y)
    assert np.array_equal(compiled, fallback)


def test_disable_flag_selects_fallback():
    code = "from artifact._accel import NUMBA_ENABLED; print(NUMBA_ENABLED)"
    env = dict(os.environ, ARTIFACT_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "False"
