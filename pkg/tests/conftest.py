import numpy as np
import pytest

from kgaffinity.diffkernel import Tape


def central_difference(fn, params, h=1e-5):
    """Central finite-difference gradient of scalar ``fn()`` w.r.t. each param's values."""
    out = []
    for p in params:
        g = np.zeros_like(p.value)
        flat = p.value.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = float(fn().value)
            flat[i] = orig - h
            down = float(fn().value)
            flat[i] = orig
            gflat[i] = (up - down) / (2 * h)
        out.append(g)
    return out


def analytic_gradient(fn, params):
    with Tape() as tape:
        root = fn()
    return tape.backward(root, params)


def max_relative_error(a, b, floor=1e-6):
    worst = 0.0
    for x, y in zip(a, b):
        denom = np.maximum(np.maximum(np.abs(x), np.abs(y)), floor)
        if x.size:
            worst = max(worst, float(np.max(np.abs(x - y) / denom)))
    return worst


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from .acceptance_log import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(RESULTS, key=lambda k: (int(k.rstrip("ab")), k)):
        status, detail = RESULTS[label]
        terminalreporter.write_line(f"criterion {label:>3}: {status}  {detail}")
