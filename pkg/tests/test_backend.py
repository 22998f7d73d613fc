import os
import subprocess
import sys

import numpy as np
import pytest

from nalm_bench import backend
from nalm_bench.gradcheck import random_draw
from nalm_bench.layers import ARITHMETIC_KINDS, init_weights

needs_ext = pytest.mark.skipif(not backend.compiled_available(), reason="extension not built")


@needs_ext
@pytest.mark.parametrize("kind", ARITHMETIC_KINDS)
def test_compiled_loss_and_gradient_match_the_graph(kind):
    rng = np.random.default_rng(3)
    for _ in range(5):
        model, x = random_draw(kind, rng, in_features=4, out_features=1, batch=32)
        y = rng.normal(size=(32, 1))
        fast_loss, fast = backend.mse_and_grad(model, x, y, use="compiled")
        slow_loss, slow = backend.mse_and_grad(model, x, y, use="python")
        assert fast_loss == pytest.approx(slow_loss, rel=1e-12)
        for name in slow:
            assert np.allclose(fast[name], slow[name], rtol=1e-10, atol=1e-12), name


@needs_ext
def test_compiled_adam_matches_python():
    rng = np.random.default_rng(0)
    p = rng.normal(size=20)
    states = [(p.copy(), np.zeros(20), np.zeros(20)) for _ in range(2)]
    for step in range(1, 30):
        g = rng.normal(size=20)
        for use, (pp, m, v) in zip(("python", "compiled"), states):
            backend.adam_update(pp, g, m, v, 1e-2, 0.9, 0.999, 1e-8, step, -0.1, 0.1, use=use)
    assert np.allclose(states[0][0], states[1][0], rtol=0, atol=1e-14)


def test_python_path_needs_no_extension():
    model = init_weights("nmu", 2, 1, seed=0)
    x = np.array([[1.0, 2.0]])
    loss, grads = backend.mse_and_grad(model, x, np.array([[2.0]]), use="python")
    assert np.isfinite(loss) and set(grads) == {"W"}


def _backend_name(value):
    env = dict(os.environ, NALM_BENCH_BACKEND=value)
    return subprocess.run([sys.executable, "-c", "from nalm_bench import backend; print(backend.NAME)"],
                          env=env, capture_output=True, text=True)


def test_environment_selects_the_backend():
    forced = _backend_name("python")
    assert forced.returncode == 0 and forced.stdout.strip() == "python"
    bad = _backend_name("fortran")
    assert bad.returncode != 0 and "NALM_BENCH_BACKEND" in bad.stderr
    if backend.compiled_available():
        assert _backend_name("").stdout.strip() == "compiled"
