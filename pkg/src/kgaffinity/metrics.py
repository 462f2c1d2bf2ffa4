"""Regression metrics: RMSE, MAE, residual SD about the fitted line, Pearson R."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ContractError


@dataclass(frozen=True)
class MetricsReport:
    rmse: float
    mae: float
    sd: float
    r: float
    n: int
    defined: bool = True  # False when a zero variance leaves sd and r undefined

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        d = self.to_dict()
        for key in ("sd", "r"):
            if not math.isfinite(d[key]):
                d[key] = None
        return json.dumps(d, sort_keys=True)

    def to_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.to_dict().items())


def evaluate(predictions, labels) -> MetricsReport:
    """Compare predictions with labels.

    ``sd`` is the residual standard deviation of labels about their
    least-squares line on predictions, with an ``n - 1`` divisor.
    """
    p = np.asarray(predictions, dtype=np.float64).ravel()
    y = np.asarray(labels, dtype=np.float64).ravel()
    if p.shape != y.shape:
        raise ContractError(f"{p.size} predictions vs {y.size} labels")
    n = p.size
    if n < 2:
        raise ContractError(f"need at least 2 samples, got {n}")
    err = y - p
    rmse = math.sqrt(float(np.mean(err * err)))
    mae = float(np.mean(np.abs(err)))
    pc, yc = p - p.mean(), y - y.mean()
    sxx, syy, sxy = float(pc @ pc), float(yc @ yc), float(pc @ yc)
    if sxx == 0.0 or syy == 0.0:
        return MetricsReport(rmse, mae, math.nan, math.nan, n, defined=False)
    r = max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))
    slope = sxy / sxx
    intercept = y.mean() - slope * p.mean()
    resid = y - (intercept + slope * p)
    sd = math.sqrt(float(resid @ resid) / (n - 1))
    return MetricsReport(rmse, mae, sd, r, n)
