"""Initial configurations, Monte Carlo trials and their summaries.

Every trial is a pure function of ``(master_seed, trial_index, params)``.
Trials may run in worker processes; results are always returned in
trial-index order, so the output does not depend on the worker count.
"""
from __future__ import annotations

import enum
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache, partial
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import kernels
from .engine import make_rng, trial_seed
from .protocols import (POpt, POptParams, POptState, decode_popt,
                        encode_popt, random_popt_state)
from .stats import SummaryStats, bootstrap_mean_ci, summarize

DEFAULT_SEED = 20240521
#: Seed used to build the safe snapshot for a given (n, tau, constants).
SNAPSHOT_SEED = 7


class InitKind(enum.Enum):
    SAFE = "safe"
    ALL_LEADERS = "all-leaders"
    NO_LEADER_DETECT = "no-leader-detect"
    ELECTORS_SAME_LEVEL = "electors-same-level"
    SYNCHRONIZERS_FULL = "synchronizers-full"
    UNIFORM_RANDOM = "uniform-random"


#: Kinds that are not already safe; used for convergence sweeps.
ADVERSARIAL_KINDS = [k for k in InitKind if k is not InitKind.SAFE]


def generate_initial(kind: InitKind, p: POptParams,
                     rng: Optional[np.random.Generator] = None) -> List[POptState]:
    kind = InitKind(kind)
    n = p.n
    if kind is InitKind.ALL_LEADERS:
        return [POptState.checker(1, p.r_max, 1)] * n
    if kind is InitKind.NO_LEADER_DETECT:
        return [POptState.checker(0, p.r_max, 1)] * n
    if kind is InitKind.ELECTORS_SAME_LEVEL:
        return [POptState.elector(1, 0, 1)] * n
    if kind is InitKind.SYNCHRONIZERS_FULL:
        return [POptState.synchronizer(p.b_max)] * n
    if kind is InitKind.UNIFORM_RANDOM:
        if rng is None:
            raise ValueError("uniform-random initial configurations need an rng")
        return [random_popt_state(p, rng) for _ in range(n)]
    return list(safe_snapshot(p))


@lru_cache(maxsize=64)
def safe_snapshot(p: POptParams) -> tuple:
    """A safe configuration reached by running from all-leaders checkers."""
    arr = encode_popt(generate_initial(InitKind.ALL_LEADERS, p))
    budget = 10_000 * p.n * max(1, p.m) * p.tau
    steps, hit = kernels.run_popt(arr, p, SNAPSHOT_SEED, budget, kernels.STOP_SAFE)
    if not hit:
        raise RuntimeError(f"no safe configuration within {budget} steps for {p}")
    return tuple(decode_popt(arr))


@dataclass
class TrialRecord:
    experiment: str
    master_seed: int
    trial: int
    n: int
    m: int
    tau: int
    cr: int
    cb: int
    cmid: str
    init: str
    steps: int
    parallel_time: float
    hit: bool
    duration: float
    extra: Dict[str, object] = field(default_factory=dict)

    def row(self) -> dict:
        d = asdict(self)
        extra = d.pop("extra")
        d.update(extra)
        return d


def _params_fields(p: Optional[POptParams], n: int, m: int = 0):
    if p is None:
        return dict(n=n, m=m, tau=0, cr=0, cb=0, cmid="")
    return dict(n=p.n, m=p.m, tau=p.tau, cr=p.cr, cb=p.cb, cmid=str(p.cmid))


def run_trials(fn: Callable[[int], TrialRecord], trials: int, workers: int = 1) -> List[TrialRecord]:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if workers <= 1:
        return [fn(i) for i in range(trials)]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, range(trials), chunksize=max(1, trials // (4 * workers))))


# ---------------------------------------------------------------------------
# P_opt convergence and holding
# ---------------------------------------------------------------------------


def convergence_trial(trial: int, p: POptParams, kind: InitKind, budget: int,
                      master_seed: int = DEFAULT_SEED) -> TrialRecord:
    kind = InitKind(kind)
    seed = trial_seed(master_seed, trial)
    t0 = time.perf_counter()
    pop = generate_initial(kind, p, make_rng(seed ^ 0x5EED))
    arr = encode_popt(pop)
    steps, hit = kernels.run_popt(arr, p, seed, budget, kernels.STOP_SAFE)
    return TrialRecord("converge", master_seed, trial, init=kind.value, steps=steps,
                       parallel_time=steps / p.n, hit=hit,
                       duration=time.perf_counter() - t0, **_params_fields(p, p.n))


@dataclass
class ExperimentResult:
    records: List[TrialRecord]
    stats: SummaryStats
    info: Dict[str, float] = field(default_factory=dict)


def convergence_experiment(p: POptParams, kind: InitKind, trials: int, budget: int,
                           master_seed: int = DEFAULT_SEED, workers: int = 1) -> ExperimentResult:
    """Parallel convergence times; truncated trials are counted as censored."""
    fn = partial(convergence_trial, p=p, kind=InitKind(kind), budget=budget,
                 master_seed=master_seed)
    recs = run_trials(fn, trials, workers)
    stats = summarize([r.parallel_time for r in recs], [not r.hit for r in recs])
    return ExperimentResult(recs, stats, {"censoring_rate": stats.censored / trials})


def holding_trial(trial: int, p: POptParams, horizon: int,
                  master_seed: int = DEFAULT_SEED) -> TrialRecord:
    """``horizon`` is in steps."""
    seed = trial_seed(master_seed, trial)
    t0 = time.perf_counter()
    pop = safe_snapshot(p)
    leader = next(i for i, s in enumerate(pop) if s.leader)
    arr = encode_popt(pop)
    steps, broken = kernels.run_popt(arr, p, seed, horizon, kernels.STOP_BROKEN, leader)
    return TrialRecord("hold", master_seed, trial, init=InitKind.SAFE.value, steps=steps,
                       parallel_time=steps / p.n, hit=broken,
                       duration=time.perf_counter() - t0,
                       extra={"broken": broken, "censored": not broken},
                       **_params_fields(p, p.n))


def holding_experiment(p: POptParams, trials: int, horizon: float,
                       master_seed: int = DEFAULT_SEED, workers: int = 1) -> ExperimentResult:
    """Disruption rate within ``horizon`` parallel time, from a safe snapshot.

    Unbroken trials are censored: they only bound the holding time from
    below and are excluded from the completed-time statistics.
    """
    steps = int(round(horizon * p.n))
    fn = partial(holding_trial, p=p, horizon=steps, master_seed=master_seed)
    recs = run_trials(fn, trials, workers)
    broken = [r.hit for r in recs]
    stats = summarize([r.parallel_time for r in recs], [not b for b in broken])
    return ExperimentResult(recs, stats, {"disruption_rate": sum(broken) / trials})


# ---------------------------------------------------------------------------
# Lottery game
# ---------------------------------------------------------------------------


def lottery_trial(trial: int, n: int, m: int, leaders: Optional[int] = None,
                  master_seed: int = DEFAULT_SEED) -> TrialRecord:
    """All ``leaders`` (default n) agents start undecided at level 0."""
    leaders = n if leaders is None else leaders
    seed = trial_seed(master_seed, trial)
    t0 = time.perf_counter()
    s = np.zeros((n, 3), dtype=np.int64)
    s[:leaders, 0] = 1
    # every agent interacts within O(n^2 log n) steps w.h.p.; this is generous
    budget = 1000 * n * n + 10_000
    steps, hit = kernels.run_qe(s, m, seed, budget)
    top = s[:, 2].max()
    winners = int(((s[:, 0] == 1) & (s[:, 2] == top)).sum())
    return TrialRecord("lottery", master_seed, trial, init=f"leaders={leaders}", steps=steps,
                       parallel_time=steps / n, hit=hit, duration=time.perf_counter() - t0,
                       extra={"unique_winner": winners == 1, "max_level": int(top)},
                       **_params_fields(None, n, m))


def lottery_experiment(n: int, m: Optional[int] = None, trials: int = 10_000,
                       leaders: Optional[int] = None, master_seed: int = DEFAULT_SEED,
                       workers: int = 1) -> ExperimentResult:
    """Frequency with which exactly one leader holds the maximum level."""
    m = max(1, math.ceil(math.log2(n))) if m is None else m
    fn = partial(lottery_trial, n=n, m=m, leaders=leaders, master_seed=master_seed)
    recs = run_trials(fn, trials, workers)
    wins = [1.0 if r.extra["unique_winner"] else 0.0 for r in recs]
    lo, hi = bootstrap_mean_ci(wins)
    stats = summarize([r.parallel_time for r in recs], [not r.hit for r in recs])
    return ExperimentResult(recs, stats, {"frequency": float(np.mean(wins)),
                                          "ci_low": lo, "ci_high": hi})


# ---------------------------------------------------------------------------
# Epidemic and CHVP
# ---------------------------------------------------------------------------


def epidemic_trial(trial: int, n: int, master_seed: int = DEFAULT_SEED) -> TrialRecord:
    seed = trial_seed(master_seed, trial)
    t0 = time.perf_counter()
    x = np.zeros(n, dtype=np.int64)
    x[0] = 1
    steps, hit = kernels.run_epidemic(x, seed, 1000 * n * max(1, math.ceil(math.log2(n))))
    return TrialRecord("epidemic", master_seed, trial, init="one-infected", steps=steps,
                       parallel_time=steps / n, hit=hit, duration=time.perf_counter() - t0,
                       **_params_fields(None, n))


def epidemic_experiment(ns: Sequence[int], trials: int, master_seed: int = DEFAULT_SEED,
                        workers: int = 1) -> Dict[int, ExperimentResult]:
    """Per-n propagation times with the fitted constant ``a = median / log2 n``."""
    out = {}
    for n in ns:
        recs = run_trials(partial(epidemic_trial, n=n, master_seed=master_seed), trials, workers)
        pt = np.array([r.parallel_time for r in recs])
        stats = summarize(pt, [not r.hit for r in recs])
        out[n] = ExperimentResult(recs, stats, {
            "a": stats.median / math.log2(n),
            "p99": float(np.quantile(pt, 0.99)),
        })
    return out


def chvp_trial(trial: int, n: int, l1: int, l2: int, k: int,
               master_seed: int = DEFAULT_SEED) -> TrialRecord:
    seed = trial_seed(master_seed, trial)
    t0 = time.perf_counter()
    y = np.full(n, l1, dtype=np.int64)
    budget = 100 * n * (l1 - l2 + k * max(1, math.ceil(math.log2(n)))) + n
    steps, hit, spreads = kernels.run_chvp(y, l2, seed, budget)
    return TrialRecord("chvp", master_seed, trial, init=f"y={l1}", steps=steps,
                       parallel_time=steps / n, hit=hit, duration=time.perf_counter() - t0,
                       extra={"max_spread": max(spreads, default=0), "l1": l1, "l2": l2},
                       **_params_fields(None, n))


def chvp_experiment(ns: Sequence[int], trials: int, k: int = 2, l1_factor: int = 20,
                    l2: int = 0, master_seed: int = DEFAULT_SEED,
                    workers: int = 1) -> Dict[int, ExperimentResult]:
    """Countdown from ``l1 = l1_factor * log2 n`` down to ``l2``.

    Reports ``C = p99(steps/n) / (l1 - l2 + k log2 n)`` and
    ``c' = p99(max - min spread) / log2 n``.
    """
    out = {}
    for n in ns:
        lg = math.log2(n)
        l1 = int(round(l1_factor * lg))
        recs = run_trials(partial(chvp_trial, n=n, l1=l1, l2=l2, k=k,
                                  master_seed=master_seed), trials, workers)
        pt = np.array([r.parallel_time for r in recs])
        spread = np.array([r.extra["max_spread"] for r in recs], dtype=float)
        stats = summarize(pt, [not r.hit for r in recs])
        out[n] = ExperimentResult(recs, stats, {
            "C": float(np.quantile(pt, 0.99)) / (l1 - l2 + k * lg),
            "c_spread": float(np.quantile(spread, 0.99)) / lg,
            "spread_p99": float(np.quantile(spread, 0.99)),
        })
    return out


# ---------------------------------------------------------------------------
# Two-state baseline
# ---------------------------------------------------------------------------


def twostate_trial(trial: int, n: int, master_seed: int = DEFAULT_SEED) -> TrialRecord:
    seed = trial_seed(master_seed, trial)
    t0 = time.perf_counter()
    leader = np.ones(n, dtype=np.int64)
    steps, hit = kernels.run_twostate(leader, seed, 100 * n * n)
    return TrialRecord("twostate", master_seed, trial, init="all-leaders", steps=steps,
                       parallel_time=steps / n, hit=hit, duration=time.perf_counter() - t0,
                       **_params_fields(None, n))


def twostate_experiment(ns: Sequence[int], trials: int, master_seed: int = DEFAULT_SEED,
                        workers: int = 1) -> Dict[int, ExperimentResult]:
    out = {}
    for n in ns:
        recs = run_trials(partial(twostate_trial, n=n, master_seed=master_seed), trials, workers)
        out[n] = ExperimentResult(recs, summarize([r.parallel_time for r in recs],
                                                  [not r.hit for r in recs]))
    return out


def doubling_ratios(means: Dict[int, float]) -> Dict[tuple, float]:
    ns = sorted(means)
    return {(a, b): means[b] / means[a] for a, b in zip(ns, ns[1:])}
