import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poplead import kernels
from poplead.engine import make_rng
from poplead.experiments import (InitKind, chvp_experiment, chvp_trial,
                                 convergence_experiment, convergence_trial,
                                 doubling_ratios, epidemic_experiment,
                                 epidemic_trial, generate_initial,
                                 holding_experiment, lottery_experiment,
                                 lottery_trial, safe_snapshot)
from poplead.monitors import is_safe
from poplead.protocols import POptParams, POptState
from poplead.stats import bootstrap_mean_ci, summarize

P32 = POptParams.for_population(32)


def test_all_leaders_checkers():
    p = POptParams.for_population(4)
    assert generate_initial(InitKind.ALL_LEADERS, p) == [POptState.checker(1, p.r_max, 1, 0)] * 4


def test_other_fixed_kinds():
    p = POptParams.for_population(3)
    assert generate_initial(InitKind.ELECTORS_SAME_LEVEL, p) == [POptState.elector(1, 0, 1)] * 3
    assert generate_initial(InitKind.NO_LEADER_DETECT, p) == [POptState.checker(0, p.r_max, 1)] * 3
    assert generate_initial(InitKind.SYNCHRONIZERS_FULL, p) == [POptState.synchronizer(p.b_max)] * 3
    assert is_safe(generate_initial(InitKind.SAFE, p), p)


def test_uniform_random_states_valid():
    p = POptParams.for_population(16)
    rng = make_rng(0)
    kinds = set()
    for _ in range(10_000 // 16):
        for s in generate_initial(InitKind.UNIFORM_RANDOM, p, rng):
            assert s.is_valid(p)
            kinds.add(s.kind)
    assert kinds == {"checker", "elector", "synchronizer"}
    with pytest.raises(ValueError):
        generate_initial(InitKind.UNIFORM_RANDOM, p)


def test_safe_snapshot_deterministic():
    p = POptParams.for_population(16)
    assert safe_snapshot(p) == safe_snapshot.__wrapped__(p)


def test_deadlock_stressor_small():
    p_on = POptParams.for_population(32)
    p_off = POptParams(n=32, m=5, same_level_elimination=False)
    budget = int(200 * 32 * 5)
    on = convergence_experiment(p_on, InitKind.ELECTORS_SAME_LEVEL, 20, budget)
    off = convergence_experiment(p_off, InitKind.ELECTORS_SAME_LEVEL, 20, budget)
    assert on.stats.censored == 0
    assert off.stats.censored == 20


def test_trial_reproducible_from_seed_and_index():
    a = convergence_trial(5, P32, InitKind.UNIFORM_RANDOM, 10**6, master_seed=3)
    b = convergence_trial(5, P32, InitKind.UNIFORM_RANDOM, 10**6, master_seed=3)
    assert (a.steps, a.hit) == (b.steps, b.hit)
    assert a.parallel_time == a.steps / a.n


def test_convergence_single_trial_zero_width():
    res = convergence_experiment(P32, InitKind.ALL_LEADERS, 1, 10**6)
    s = res.stats
    assert s.trials == 1 and s.p05 == s.p95 == s.median == s.mean
    assert s.ci_low == s.ci_high == s.mean


def test_convergence_censoring_reported():
    res = convergence_experiment(P32, InitKind.ALL_LEADERS, 5, 10)
    assert res.info["censoring_rate"] == 1.0 and res.stats.completed == 0


def test_convergence_n32_censoring():
    res = convergence_experiment(P32, InitKind.ALL_LEADERS, 200, 10**7)
    assert res.info["censoring_rate"] <= 0.01


def test_workers_do_not_change_results():
    a = convergence_experiment(P32, InitKind.UNIFORM_RANDOM, 6, 10**6, workers=1)
    b = convergence_experiment(P32, InitKind.UNIFORM_RANDOM, 6, 10**6, workers=2)
    assert [(r.trial, r.steps) for r in a.records] == [(r.trial, r.steps) for r in b.records]


def test_backends_agree_on_trials():
    prev = kernels.use_backend("python")
    try:
        slow = [convergence_trial(i, POptParams.for_population(8), InitKind.UNIFORM_RANDOM, 50_000)
                for i in range(3)]
    finally:
        kernels.use_backend(prev)
    fast = [convergence_trial(i, POptParams.for_population(8), InitKind.UNIFORM_RANDOM, 50_000)
            for i in range(3)]
    assert [(r.steps, r.hit) for r in slow] == [(r.steps, r.hit) for r in fast]


def test_holding_zero_horizon():
    res = holding_experiment(POptParams.for_population(16), 5, 0)
    assert res.info["disruption_rate"] == 0 and res.stats.censored == 5


def test_holding_tau_monotone():
    # small constants make disruptions observable at desk scale
    rates = [holding_experiment(POptParams.for_population(64, tau=t, cr=3, cb=6), 40, 2e3)
             .info["disruption_rate"] for t in (1, 2)]
    assert rates[0] > 0
    assert rates[1] <= rates[0]


def test_lottery_single_leader_always_wins():
    res = lottery_experiment(16, trials=200, leaders=1)
    assert res.info["frequency"] == 1.0


def test_lottery_trial_fields():
    r = lottery_trial(0, 8, 3)
    assert r.hit and 0 <= r.extra["max_level"] <= 6


def test_epidemic_n2_one_step():
    assert all(epidemic_trial(i, 2).steps == 1 for i in range(20))


def test_epidemic_tail():
    out = epidemic_experiment([64, 128], 200)
    for res in out.values():
        assert res.info["p99"] <= 3 * res.stats.median


def test_chvp_equal_levels_zero_steps():
    r = chvp_trial(0, 16, 0, 0, 2)
    assert r.steps == 0 and r.hit


def test_chvp_spread_bounded():
    out = chvp_experiment([64], 50)
    assert out[64].info["spread_p99"] <= 4 * math.log2(64)


def test_doubling_ratios():
    assert doubling_ratios({2: 1.0, 4: 3.0, 8: 3.0}) == {(2, 4): 3.0, (4, 8): 1.0}


# --- statistics -------------------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=60), st.randoms())
def test_summary_order_independent(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    a, b = summarize(values), summarize(shuffled)
    assert a == b
    assert a.p05 <= a.median <= a.p95
    assert a.ci_low <= a.mean <= a.ci_high


def test_summary_excludes_censored():
    s = summarize([1.0, 2.0, 3.0, 1000.0], [False, False, False, True])
    assert s.censored == 1 and s.completed == 3 and s.mean == 2.0


def test_bootstrap_ci_coverage_sane():
    x = np.random.default_rng(1).normal(10, 2, size=400)
    lo, hi = bootstrap_mean_ci(x)
    assert lo < 10 < hi and hi - lo < 1
