"""Summary statistics with bootstrap confidence intervals."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, Optional

import numpy as np

BOOTSTRAP_RESAMPLES = 1000
BOOTSTRAP_SEED = 20240521


@dataclass(frozen=True)
class SummaryStats:
    trials: int
    completed: int
    censored: int
    mean: float
    median: float
    std: float
    p05: float
    p95: float
    ci_low: float
    ci_high: float

    def as_dict(self):
        return asdict(self)


def bootstrap_mean_ci(values, level: float = 0.95, resamples: int = BOOTSTRAP_RESAMPLES,
                      seed: int = BOOTSTRAP_SEED) -> tuple[float, float]:
    """Percentile bootstrap CI of the mean.

    The input is sorted first so the interval does not depend on sample
    order.  The returned interval always contains the sample mean.
    """
    x = np.sort(np.asarray(values, dtype=float))
    if x.size == 0:
        return (float("nan"), float("nan"))
    mean = float(x.mean())
    if x.size == 1:
        return (mean, mean)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, x.size, size=(resamples, x.size))
    means = x[idx].mean(axis=1)
    alpha = (1 - level) / 2
    lo, hi = np.quantile(means, [alpha, 1 - alpha])
    return (min(float(lo), mean), max(float(hi), mean))


def summarize(values: Iterable[float], censored: Optional[Iterable[bool]] = None) -> SummaryStats:
    """Stats over completed samples; censored ones are only counted."""
    v = np.asarray(list(values), dtype=float)
    c = np.zeros(v.size, dtype=bool) if censored is None else np.asarray(list(censored), dtype=bool)
    if c.size != v.size:
        raise ValueError("values and censored flags differ in length")
    done = np.sort(v[~c])
    if done.size == 0:
        nan = float("nan")
        return SummaryStats(int(v.size), 0, int(c.sum()), nan, nan, nan, nan, nan, nan, nan)
    p05, med, p95 = np.quantile(done, [0.05, 0.5, 0.95])
    lo, hi = bootstrap_mean_ci(done)
    return SummaryStats(
        trials=int(v.size), completed=int(done.size), censored=int(c.sum()),
        mean=float(done.mean()), median=float(med), std=float(done.std(ddof=1)) if done.size > 1 else 0.0,
        p05=float(p05), p95=float(p95), ci_low=lo, ci_high=hi)
