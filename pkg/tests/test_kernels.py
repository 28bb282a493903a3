import json
import os
import subprocess
import sys

import numpy as np
import pytest

from ppcm import _kernels as K

needs_numba = pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba not installed")


def draws(size=20000, seed=1):
    rng = np.random.default_rng(seed)
    return (
        rng.uniform(0, np.pi, size),
        rng.uniform(0, np.pi, size),
        rng.uniform(-7, 7, size),
        np.concatenate([[0.0] * 10, 10.0 ** rng.uniform(-14, -0.3, size - 10)]),
        10.0 ** rng.uniform(0, 16, size),
        rng.choice([1.0, 2.0], size),
    )


@needs_numba
def test_reduce_backends_bitwise_equal():
    ti, tf, eps, g, n, k = draws()
    x = np.sin(k * g)
    assert np.array_equal(K.reduce_phase_numpy(n, x), K.reduce_phase_numba(n, x))


@needs_numba
def test_ppcm_backends_agree():
    args = draws()
    a = K.ppcm_numpy(*args)
    b = K.ppcm_numba(*args)
    names = ("p_raw", "p", "log_env", "psi", "s", "curv", "f", "log_f")
    for name, u, v in zip(names, a, b):
        fin = np.isfinite(u)
        assert np.array_equal(fin, np.isfinite(v)), name
        assert np.array_equal(u[~fin], v[~fin]), name
        scale = np.maximum(np.abs(u[fin]), 1e-300)
        if name in ("p_raw", "p"):
            scale = 1.0
        assert np.max(np.abs(u[fin] - v[fin]) / scale) < 1e-10, name


def test_env_flag_selects_numpy():
    code = "import json; from ppcm import _kernels as K, phase_model as pm, math; " \
           "print(json.dumps([K.BACKEND, pm.fisher_projective(pm.ModelParams(g=6.1e-8, n=1e5))]))"
    code = code.replace(", math", "")
    env = {**os.environ, "PPCM_DISABLE_NUMBA": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, f = json.loads(out.stdout)
    assert backend == "numpy"
    from ppcm import phase_model as pm

    assert f == pytest.approx(pm.fisher_projective(pm.ModelParams(g=6.1e-8, n=1e5)), rel=1e-12)
