import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgaffinity.errors import ContractError
from kgaffinity.metrics import evaluate


def reference(p, y):
    n = len(p)
    rmse = math.sqrt(sum((a - b) ** 2 for a, b in zip(p, y)) / n)
    mae = sum(abs(a - b) for a, b in zip(p, y)) / n
    mp, my = sum(p) / n, sum(y) / n
    sxy = sum((a - mp) * (b - my) for a, b in zip(p, y))
    sxx = sum((a - mp) ** 2 for a in p)
    syy = sum((b - my) ** 2 for b in y)
    r = sxy / math.sqrt(sxx * syy)
    slope = sxy / sxx
    icpt = my - slope * mp
    sd = math.sqrt(sum((b - icpt - slope * a) ** 2 for a, b in zip(p, y)) / (n - 1))
    return rmse, mae, sd, r


def test_perfect_fit():
    rep = evaluate([1, 2, 3], [1, 2, 3])
    assert (rep.rmse, rep.mae, rep.sd, rep.r) == (0.0, 0.0, 0.0, 1.0)


def test_anti_linear_fit():
    rep = evaluate([1, 2, 3], [3, 2, 1])
    assert rep.r == -1.0 and rep.sd == 0.0


def test_random_against_reference(rng):
    p, y = rng.normal(size=50), rng.normal(size=50)
    rep = evaluate(p, y)
    for got, want in zip((rep.rmse, rep.mae, rep.sd, rep.r), reference(list(p), list(y))):
        assert abs(got - want) <= 1e-9


def test_errors_and_undefined():
    with pytest.raises(ContractError):
        evaluate([1, 2], [1, 2, 3])
    with pytest.raises(ContractError):
        evaluate([1], [1])
    rep = evaluate([1, 1, 1], [1, 2, 3])
    assert not rep.defined and math.isnan(rep.r) and math.isnan(rep.sd)
    assert json.loads(rep.to_json())["r"] is None


def test_report_serialization():
    rep = evaluate([1.0, 2.0, 2.5], [1.5, 2.0, 3.5])
    d = json.loads(rep.to_json())
    assert d["n"] == 3 and d["rmse"] == rep.rmse
    assert f"mae={rep.mae}" in rep.to_text()


series = st.lists(st.floats(-50, 50, allow_nan=False), min_size=3, max_size=30)


@given(series, st.integers(0, 2**32 - 1))
@settings(max_examples=200, deadline=None)
def test_power_mean_and_sd_bounds(p, seed):
    p = np.array(p)
    y = np.random.default_rng(seed).normal(size=len(p)) * 10
    rep = evaluate(p, y)
    assert rep.rmse >= rep.mae * (1 - 1e-12)
    if rep.defined:
        n = len(p)
        assert rep.sd <= rep.rmse * math.sqrt(n / (n - 1)) * (1 + 1e-9) + 1e-12
        assert -1 <= rep.r <= 1


@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10), st.floats(-10, 10))
@settings(max_examples=100, deadline=None)
def test_affine_invariances(seed, a, b):
    rng = np.random.default_rng(seed)
    p, y = rng.normal(size=20), rng.normal(size=20)
    base = evaluate(p, y)
    pos = evaluate(a * p + b, y)
    neg = evaluate(-a * p + b, y)
    assert abs(pos.r - base.r) <= 1e-9
    assert abs(pos.sd - base.sd) <= 1e-9
    assert abs(neg.sd - base.sd) <= 1e-9
