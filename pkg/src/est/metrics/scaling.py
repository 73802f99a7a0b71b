"""Power-law fitting: y = E * x^alpha via least squares in log-log space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PowerLawFit:
    coefficient: float  # E
    exponent: float     # alpha
    r_squared: float

    def predict(self, x):
        return self.coefficient * np.power(np.asarray(x, dtype=np.float64), self.exponent)


def fit_power_law(xs, ys) -> PowerLawFit:
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError(f"fit_power_law: mismatched inputs {xs.shape} vs {ys.shape}")
    if len(np.unique(xs)) < 2:
        raise ValueError("fit_power_law: need >=2 points with distinct x values")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("fit_power_law: all inputs must be strictly positive")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_res = float((resid ** 2).sum())
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return PowerLawFit(coefficient=float(np.exp(intercept)), exponent=float(slope), r_squared=r2)
