import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poplead import kernels
from poplead.engine import RunConfig, make_rng, run_until, trial_seed
from poplead.experiments import InitKind, generate_initial, safe_snapshot
from poplead.monitors import (census, correct_leader, in_ach, in_ach_ge,
                              in_ael, in_cel_ge, in_creset, is_safe,
                              measure_convergence, measure_holding)
from poplead.protocols import (POpt, POptParams, POptState, TwoState,
                               TwoStateState, decode_popt, decode_popt_index,
                               encode_popt, popt_state_count, random_popt_state)

P = POptParams(n=8, m=3)


def test_census_homogeneous_checkers():
    pop = [POptState.checker(0, P.r_max, 0)] * 8
    c = census(pop, P)
    assert c.checkers_ge == 8 and c.checkers == 8 and c.followers == 8
    assert c.election == c.electors == c.synchronizers == c.done == c.undone == 0


def test_census_one_done_leader():
    pop = [POptState.elector(1, 2, 1)] + [POptState.checker(0, P.r_mid - 1, 0)] * 7
    c = census(pop, P)
    assert c.done == 1 and c.checkers_lt == 7 and c.leaders == 1


def test_census_identities_random():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        pop = [random_popt_state(P, rng) for _ in range(5)]
        assert census(pop, P).identities_hold(5)


def test_correct_leader():
    proto = TwoState()
    mk = lambda *b: [TwoStateState(x) for x in b]  # noqa: E731
    assert correct_leader(mk(0, 1, 0), proto) == 1
    assert correct_leader(mk(1, 1, 0), proto) is None
    assert correct_leader(mk(0, 0, 0), proto) is None


def _safe_pop():
    return [POptState.checker(1, P.r_max, 1)] + [POptState.checker(0, P.r_max, d) for d in (0, 1, 0, 1, 0, 1, 0)]


def test_is_safe_examples():
    pop = _safe_pop()
    assert is_safe(pop, P)
    bad = list(pop)
    bad[3] = POptState.checker(0, P.r_mid - 1, 1)
    assert not is_safe(bad, P)
    two = list(pop)
    two[2] = POptState.checker(1, P.r_max, 1)
    assert not is_safe(two, P)
    nodetect = list(pop)
    nodetect[0] = POptState.checker(1, P.r_max, 0)
    assert not is_safe(nodetect, P)


def test_phase_sets():
    syncs = [POptState.synchronizer(P.b_max)] * 4
    assert in_cel_ge(syncs, P) and in_ael(syncs, P) and not in_ach(syncs, P)
    half = [POptState.synchronizer(P.b_max // 2 - 1)] + syncs[1:]
    assert not in_cel_ge(half, P)
    mixed = [POptState.checker(0, P.r_max, 0)] + [POptState.elector(0, 0, 0)] * 3
    assert in_creset(mixed, P)
    assert not in_ael(mixed, P) and not in_ach_ge(mixed, P)
    assert not in_creset([POptState.checker(0, P.r_max - 1, 0)] * 3, P)


@settings(max_examples=2000, deadline=None)
@given(st.lists(st.integers(0, popt_state_count(P) - 1), min_size=2, max_size=6))
def test_predicate_properties(idx):
    pop = [decode_popt_index(k, P) for k in idx]
    if is_safe(pop, P):
        assert correct_leader(pop, POpt(P)) is not None
    assert sum([in_ael(pop, P), in_ach(pop, P),
                not in_ael(pop, P) and not in_ach(pop, P)]) == 1


def test_census_identities_after_steps():
    pop = generate_initial(InitKind.UNIFORM_RANDOM, P, make_rng(1))
    proto = POpt(P)
    seen = []

    def stop(c):
        assert census(c, P).identities_hold(P.n)
        seen.append(1)
        return False

    run_until(pop, proto, RunConfig(3, 10_000, P.n), stop)
    assert len(seen) == 10_001


def test_measure_convergence_trivial_cases():
    proto = POpt(P)
    assert measure_convergence(_safe_pop(), proto, P, RunConfig(1, 100, 8)) == (0, True)
    unsafe = [POptState.checker(1, P.r_max, 1)] * 8
    assert measure_convergence(unsafe, proto, P, RunConfig(1, 0, 8)) == (0, False)


@pytest.mark.parametrize("backend", ["cython", "python"])
@pytest.mark.parametrize("kind", [InitKind.ALL_LEADERS, InitKind.UNIFORM_RANDOM])
def test_kernel_matches_generic_loop(backend, kind):
    """The kernel's incremental stop test agrees with run_until + is_safe."""
    p = POptParams(n=6, m=3, cr=4, cb=8)
    pop = generate_initial(kind, p, make_rng(2))
    seed = trial_seed(9, 0)
    ref = run_until(pop, POpt(p), RunConfig(seed, 200_000, 6), lambda c: is_safe(c, p))
    prev = kernels.use_backend(backend)
    try:
        arr = encode_popt(pop)
        got = kernels.run_popt(arr, p, seed, 200_000, kernels.STOP_SAFE)
    finally:
        kernels.use_backend(prev)
    assert ref.hit and got == (ref.steps, True)
    assert decode_popt(arr) == ref.final


def test_convergence_monte_carlo_n32():
    p = POptParams.for_population(32)
    proto = POpt(p)
    pop = generate_initial(InitKind.ALL_LEADERS, p)
    hits = sum(measure_convergence(pop, proto, p, RunConfig(trial_seed(1, i), 10**7, 32)).hit
               for i in range(100))
    assert hits >= 99


def test_measure_holding_trivial_cases():
    proto = POpt(P)
    two = [POptState.checker(1, P.r_max, 1)] * 8
    assert measure_holding(two, proto, P, RunConfig(1, 100, 8)) == (0, True)
    pop = list(safe_snapshot(POptParams.for_population(8)))
    p8 = POptParams.for_population(8)
    h = measure_holding(pop, POpt(p8), p8, RunConfig(1, 5000, 8))
    assert h == (5000, False)


def test_measure_holding_counts_handoff_as_broken():
    # the synchronizer leader is demoted while the checker is promoted: the
    # leader count stays 1 but the identity changes
    p = POptParams.raw(n=2, m=2, r_max=10, r_mid=8, b_max=10)
    pop = [POptState.synchronizer(5, leader=1), POptState.checker(0, 0, 0)]
    assert correct_leader(pop, POpt(p)) == 0
    assert measure_holding(pop, POpt(p), p, RunConfig(1, 10, 2)) == (1, True)


def test_holding_monte_carlo_n64_tau2():
    p = POptParams.for_population(64, tau=2)
    pop = list(safe_snapshot(p))
    assert is_safe(pop, p)
    proto = POpt(p)
    broken = sum(measure_holding(pop, proto, p, RunConfig(trial_seed(2, i), 10**4 * 64, 64)).broken
                 for i in range(100))
    assert broken <= 1
