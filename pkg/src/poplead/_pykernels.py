"""Pure-Python fallback for the compiled kernels.

Same signatures and semantics as ``_ckernels``.  These loops call the
reference transition functions directly, so they double as the executable
definition the compiled code is tested against.
"""
from __future__ import annotations

from .protocols import (CH, LEADER, ChvpState, EpidemicState, QEState,
                        TwoStateState, chvp_transition, decode_popt,
                        encode_popt, epidemic_transition, popt_transition,
                        qe_transition, twostate_transition)

STOP_NONE, STOP_SAFE, STOP_BROKEN = 0, 1, 2


def _decode(code, n):
    u, r = divmod(code, n - 1)
    return u, (r if r < u else r + 1)


class _ParamView:
    """Duck-typed stand-in for POptParams built from raw kernel arguments."""

    def __init__(self, r_max, r_mid, b_max, m, elim):
        self.r_max, self.r_mid, self.b_max, self.m = r_max, r_mid, b_max, m
        self.level_max = 2 * m
        self.same_level_elimination = bool(elim)


def popt_step_pair(s, u, v, r_max, r_mid, b_max, m, elim):
    p = _ParamView(r_max, r_mid, b_max, m, elim)
    states = decode_popt(s[[u, v]])
    s[[u, v]] = encode_popt(popt_transition(states[0], states[1], p))


def popt_chunk(s, codes, limit, r_max, r_mid, b_max, m, elim, stop_kind, hold_agent):
    p = _ParamView(r_max, r_mid, b_max, m, elim)
    n = s.shape[0]
    pop = decode_popt(s)

    def chge(a):
        return a.phase == CH and a.rtimer >= r_mid

    def ld(a):
        return a.leader == 1 and a.phase == CH and a.detect == 1

    n_chge = sum(map(chge, pop))
    n_lead = sum(a.leader for a in pop)
    n_ld = sum(map(ld, pop))
    hit = False
    t = 0
    for code in codes[:limit].tolist():
        u, v = _decode(code, n)
        a, b = pop[u], pop[v]
        n_chge -= chge(a) + chge(b)
        n_lead -= a.leader + b.leader
        n_ld -= ld(a) + ld(b)
        a, b = pop[u], pop[v] = popt_transition(a, b, p)
        n_chge += chge(a) + chge(b)
        n_lead += a.leader + b.leader
        n_ld += ld(a) + ld(b)
        t += 1
        if stop_kind == STOP_SAFE and n_chge == n and n_lead == 1 and n_ld == 1:
            hit = True
            break
        if stop_kind == STOP_BROKEN and (n_lead != 1 or pop[hold_agent].leader != 1):
            hit = True
            break
    s[:] = encode_popt(pop)
    return t, hit


def epidemic_chunk(x, codes, limit, target):
    n = x.shape[0]
    pop = [EpidemicState(v) for v in x.tolist()]
    cnt = sum(a.x == target for a in pop)
    hit = False
    t = 0
    for code in codes[:limit].tolist():
        u, v = _decode(code, n)
        cnt -= (pop[u].x == target) + (pop[v].x == target)
        pop[u], pop[v] = epidemic_transition(pop[u], pop[v])
        cnt += (pop[u].x == target) + (pop[v].x == target)
        t += 1
        if cnt == n:
            hit = True
            break
    x[:] = [a.x for a in pop]
    return t, hit


def chvp_chunk(y, codes, limit, l2, step0, spreads):
    n = y.shape[0]
    pop = [ChvpState(v) for v in y.tolist()]
    above = sum(a.y > l2 for a in pop)
    hit = False
    t = 0
    for code in codes[:limit].tolist():
        u, v = _decode(code, n)
        above -= (pop[u].y > l2) + (pop[v].y > l2)
        pop[u], pop[v] = chvp_transition(pop[u], pop[v])
        above += (pop[u].y > l2) + (pop[v].y > l2)
        t += 1
        if (step0 + t) % n == 0:
            ys = [a.y for a in pop]
            spreads.append(max(ys) - min(ys))
        if above == 0:
            hit = True
            break
    y[:] = [a.y for a in pop]
    return t, hit


def qe_chunk(s, codes, limit, m):
    n = s.shape[0]
    pop = [QEState(*row) for row in s.tolist()]
    undecided = sum(a.leader == 1 and a.done == 0 for a in pop)
    hit = False
    t = 0
    for code in codes[:limit].tolist():
        u, v = _decode(code, n)
        before = (pop[u].leader and not pop[u].done) + (pop[v].leader and not pop[v].done)
        pop[u], pop[v] = qe_transition(pop[u], pop[v], m)
        after = (pop[u].leader and not pop[u].done) + (pop[v].leader and not pop[v].done)
        undecided += after - before
        t += 1
        if undecided == 0:
            hit = True
            break
    s[:] = [[a.leader, a.done, a.level] for a in pop]
    return t, hit


def twostate_chunk(leader, codes, limit):
    n = leader.shape[0]
    pop = [TwoStateState(v) for v in leader.tolist()]
    cnt = sum(a.leader for a in pop)
    hit = False
    t = 0
    for code in codes[:limit].tolist():
        u, v = _decode(code, n)
        cnt -= pop[u].leader + pop[v].leader
        pop[u], pop[v] = twostate_transition(pop[u], pop[v])
        cnt += pop[u].leader + pop[v].leader
        t += 1
        if cnt <= 1:
            hit = True
            break
    leader[:] = [a.leader for a in pop]
    return t, hit


__all__ = ["popt_chunk", "popt_step_pair", "epidemic_chunk", "chvp_chunk",
           "qe_chunk", "twostate_chunk", "LEADER"]
