"""Regenerates shapiro_reference.json with scipy.stats.shapiro."""
import json

import numpy as np
from scipy import stats

rng = np.random.default_rng(20230417)
sizes = [10, 12, 15, 20, 25, 30, 40, 50, 60, 75, 90, 100, 120, 150, 200, 250, 300, 350, 400, 500]
kinds = ["normal", "uniform", "exponential", "lognormal", "bimodal"]
cases = []
for i, n in enumerate(sizes):
    kind = kinds[i % len(kinds)]
    if kind == "normal":
        xs = rng.normal(5.0, 2.0, n)
    elif kind == "uniform":
        xs = rng.uniform(0.0, 1.0, n)
    elif kind == "exponential":
        xs = rng.exponential(1.5, n)
    elif kind == "lognormal":
        xs = rng.lognormal(0.0, 0.4, n)
    else:
        xs = np.concatenate([rng.normal(-3.0, 1.0, n // 2), rng.normal(3.0, 1.0, n - n // 2)])
    xs = [float(round(v, 6)) for v in xs]
    res = stats.shapiro(xs)
    cases.append({"name": f"{kind}_{n}", "data": xs, "w": float(res.statistic), "p": float(res.pvalue)})

# fixed-seed normal draws and a strongly bimodal sample
normal20 = [float(round(v, 6)) for v in np.random.default_rng(7).normal(0.0, 1.0, 20)]
bimodal50 = [float(round(v, 6)) for v in np.concatenate([
    np.random.default_rng(11).normal(-4.0, 0.5, 25), np.random.default_rng(12).normal(4.0, 0.5, 25)])]
extra = []
for name, xs in [("normal_seed7_20", normal20), ("bimodal_50", bimodal50)]:
    res = stats.shapiro(xs)
    extra.append({"name": name, "data": xs, "w": float(res.statistic), "p": float(res.pvalue)})

with open("shapiro_reference.json", "w") as fh:
    json.dump({"generator": f"scipy {__import__('scipy').__version__}", "cases": cases, "extra": extra}, fh, indent=1)
