"""Concrete population protocols.

Every protocol here is a pure transition function over immutable agent
states plus a small :class:`~poplead.engine.Protocol` wrapper that the
engine drives.  All randomness lives in the scheduler; the transitions are
deterministic.

Integer codes used by the compiled kernels (see :func:`encode_popt`):

    phase  CH = 0, EL = 1
    mode   A = 0,  B = 1
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

import numpy as np

from .engine import Protocol

CH, EL = 0, 1
A, B = 0, 1

# Column layout of the (n, 5) int64 array used by the kernels.
LEADER, PHASE, MODE, VAL, FLAG = range(5)

# Timer scale constants.  Smallest setting with no holding disruption over
# 1e4 parallel time at n=64, tau=1 was cr=4, cb=8 (see
# benchmarks/calibrate.py); the defaults double it.
DEFAULT_CR = 8
DEFAULT_CB = 16
DEFAULT_CMID = Fraction(3, 4)


# ---------------------------------------------------------------------------
# Epidemic / CHVP / two-state baseline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EpidemicState:
    x: int


@dataclass(frozen=True)
class ChvpState:
    y: int


@dataclass(frozen=True)
class TwoStateState:
    leader: int


def epidemic_transition(a0: EpidemicState, a1: EpidemicState):
    x = max(a0.x, a1.x)
    return EpidemicState(x), EpidemicState(x)


def chvp_transition(a0: ChvpState, a1: ChvpState):
    y = max(a0.y - 1, a1.y - 1, 0)
    return ChvpState(y), ChvpState(y)


def twostate_transition(a0: TwoStateState, a1: TwoStateState):
    """Two leaders meet: the responder is demoted."""
    if a0.leader and a1.leader:
        return a0, TwoStateState(0)
    return a0, a1


class Epidemic(Protocol):
    name = "epidemic"

    def __init__(self, x_max: int = 2**31):
        self.x_max = x_max

    def transition(self, s0, s1):
        return epidemic_transition(s0, s1)

    def output(self, s):
        return 0

    def state_space_size(self):
        return self.x_max + 1


class Chvp(Protocol):
    name = "chvp"

    def __init__(self, y_max: int = 2**31):
        self.y_max = y_max

    def transition(self, s0, s1):
        return chvp_transition(s0, s1)

    def output(self, s):
        return 0

    def state_space_size(self):
        return self.y_max + 1


class TwoState(Protocol):
    name = "twostate"

    def transition(self, s0, s1):
        return twostate_transition(s0, s1)

    def output(self, s):
        return s.leader

    def state_space_size(self):
        return 2


# ---------------------------------------------------------------------------
# Quick elimination (lottery game)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QEState:
    leader: int
    done: int
    level: int


def _effective_done(leader: int, done: int) -> bool:
    # Followers never flip coins, so they count as decided for level spreading.
    return bool(done) or not leader


def qe_transition(a0: QEState, a1: QEState, m: int):
    """One quick-elimination interaction; ``a0`` is the initiator.

    The initiator of an undecided leader observes a head (level + 1, capped
    at ``2m``), the responder observes a tail (done).  Decided agents then
    run an epidemic on the level; the lower one drops out.
    """
    l0, d0, v0 = a0.leader, a0.done, a0.level
    l1, d1, v1 = a1.leader, a1.done, a1.level
    if not d0 and l0:
        v0 = min(v0 + 1, 2 * m)
    if not d1 and l1:
        d1 = 1
    if _effective_done(l0, d0) and _effective_done(l1, d1):
        if v0 < v1:
            l0, v0 = 0, v1
        elif v1 < v0:
            l1, v1 = 0, v0
    return QEState(l0, d0, v0), QEState(l1, d1, v1)


class QuickElimination(Protocol):
    name = "qe"

    def __init__(self, m: int):
        if m < 1:
            raise ValueError("m must be >= 1")
        self.m = m

    def transition(self, s0, s1):
        return qe_transition(s0, s1, self.m)

    def output(self, s):
        return s.leader

    def state_space_size(self):
        return 2 * 2 * (2 * self.m + 1)


# ---------------------------------------------------------------------------
# P_opt
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class POptParams:
    """Parameters of the time-optimal protocol.

    ``r_max = cr*tau*m``, ``r_mid = ceil(cmid*r_max)``, ``b_max = cb*tau*m``
    and the level cap is ``2m``.  ``same_level_elimination`` switches off the
    rule that demotes one of two decided leaders with equal level; it exists
    only to demonstrate the deadlock that rule prevents.
    """

    n: int
    m: int
    tau: int = 1
    cr: int = DEFAULT_CR
    cb: int = DEFAULT_CB
    cmid: Fraction = DEFAULT_CMID
    same_level_elimination: bool = True
    r_max: int = field(init=False)
    r_mid: int = field(init=False)
    b_max: int = field(init=False)
    level_max: int = field(init=False)

    def __post_init__(self):
        cmid = Fraction(self.cmid).limit_denominator(10**6)
        object.__setattr__(self, "cmid", cmid)
        if self.n < 2:
            raise ValueError(f"population size n={self.n} must be >= 2")
        if self.m < 1:
            raise ValueError(f"m={self.m} must be >= 1")
        if self.tau < 1:
            raise ValueError(f"tau={self.tau} must be >= 1")
        if self.cr < 1 or self.cb < 1:
            raise ValueError("cr and cb must be positive integers")
        if not (Fraction(3, 4) <= cmid < 1):
            raise ValueError(f"cmid={cmid} must lie in [3/4, 1)")
        r_max = self.cr * self.tau * self.m
        r_mid = math.ceil(cmid * r_max)
        b_max = self.cb * self.tau * self.m
        object.__setattr__(self, "r_max", r_max)
        object.__setattr__(self, "r_mid", r_mid)
        object.__setattr__(self, "b_max", b_max)
        object.__setattr__(self, "level_max", 2 * self.m)
        if not (r_max > r_mid > 0):
            raise ValueError(f"need r_max > r_mid > 0, got r_max={r_max}, r_mid={r_mid}")
        if b_max < 2:
            raise ValueError(f"b_max={b_max} must be >= 2")

    @classmethod
    def from_knowledge(cls, n: int, N: int, **kw) -> "POptParams":
        """Build params with ``m = ceil(log2 N)`` from an upper bound N >= n."""
        if N < n:
            raise ValueError(f"knowledge N={N} must be >= n={n}")
        return cls(n=n, m=max(1, math.ceil(math.log2(N))), **kw)

    @classmethod
    def for_population(cls, n: int, **kw) -> "POptParams":
        return cls.from_knowledge(n, n, **kw)

    @classmethod
    def raw(cls, n: int, m: int, r_max: int, r_mid: int, b_max: int,
            same_level_elimination: bool = True) -> "POptParams":
        """Params with explicit timer values (bypasses the cr/cb scaling)."""
        p = object.__new__(cls)
        for k, v in dict(n=n, m=m, tau=1, cr=0, cb=0, cmid=Fraction(r_mid, r_max),
                         same_level_elimination=same_level_elimination,
                         r_max=r_max, r_mid=r_mid, b_max=b_max,
                         level_max=2 * m).items():
            object.__setattr__(p, k, v)
        if not (r_max > r_mid > 0) or b_max < 2 or m < 1:
            raise ValueError("invalid raw timer values")
        return p


@dataclass(frozen=True)
class POptState:
    """One agent of P_opt.

    The class-specific fields are exclusive: a checker carries
    ``rtimer``/``detect``, an elector ``level``/``done`` and a synchronizer
    ``btimer``; the others are ``None``.
    """

    leader: int
    phase: int
    mode: int
    rtimer: Optional[int] = None
    detect: Optional[int] = None
    level: Optional[int] = None
    done: Optional[int] = None
    btimer: Optional[int] = None

    @classmethod
    def checker(cls, leader, rtimer, detect, mode=A):
        return cls(leader, CH, mode, rtimer=rtimer, detect=detect)

    @classmethod
    def elector(cls, leader, level, done):
        return cls(leader, EL, A, level=level, done=done)

    @classmethod
    def synchronizer(cls, btimer, leader=0):
        return cls(leader, EL, B, btimer=btimer)

    @property
    def kind(self) -> str:
        if self.phase == CH:
            return "checker"
        return "elector" if self.mode == A else "synchronizer"

    def is_valid(self, p: POptParams) -> bool:
        if self.leader not in (0, 1) or self.phase not in (CH, EL) or self.mode not in (A, B):
            return False
        fields_ = (self.rtimer, self.detect, self.level, self.done, self.btimer)
        if self.phase == CH:
            return (fields_[2:] == (None, None, None) and self.detect in (0, 1)
                    and self.rtimer is not None and 0 <= self.rtimer <= p.r_max)
        if self.mode == A:
            return (fields_[:2] == (None, None) and self.btimer is None
                    and self.done in (0, 1)
                    and self.level is not None and 0 <= self.level <= p.level_max)
        return (fields_[:4] == (None,) * 4
                and self.btimer is not None and 0 <= self.btimer <= p.b_max)


class _Agent:
    """Mutable scratch copy of a POptState used inside one interaction."""

    __slots__ = ("leader", "phase", "mode", "rtimer", "detect", "level", "done", "btimer")

    def __init__(self, s: POptState):
        self.leader, self.phase, self.mode = s.leader, s.phase, s.mode
        self.rtimer, self.detect = s.rtimer, s.detect
        self.level, self.done, self.btimer = s.level, s.done, s.btimer

    def freeze(self) -> POptState:
        return POptState(self.leader, self.phase, self.mode, self.rtimer,
                         self.detect, self.level, self.done, self.btimer)

    @property
    def elector(self):
        return self.phase == EL and self.mode == A

    @property
    def synchronizer(self):
        return self.phase == EL and self.mode == B

    def become_checker(self, p):
        self.phase = CH
        self.rtimer, self.detect = p.r_max, self.leader
        self.level = self.done = self.btimer = None

    def become_elector(self):
        self.mode = A
        self.level, self.done = 0, 0
        self.rtimer = self.detect = self.btimer = None

    def become_synchronizer(self, p):
        self.mode = B
        # synchronizers are followers by construction
        self.leader = 0
        self.btimer = p.b_max
        self.rtimer = self.detect = self.level = self.done = None

    def go_to_election(self, p):
        self.phase = EL
        if self.detect == 0:
            self.leader, self.mode = 1, A
        if self.mode == A:
            self.become_elector()
        else:
            self.become_synchronizer(p)


def _qe_in_election(a0: _Agent, a1: _Agent, m: int):
    if a0.elector and not a0.done and a0.leader:
        a0.level = min(a0.level + 1, 2 * m)
    if a1.elector and not a1.done and a1.leader:
        a1.done = 1
    if a0.elector and a1.elector and _effective_done(a0.leader, a0.done) \
            and _effective_done(a1.leader, a1.done):
        if a0.level < a1.level:
            a0.leader, a0.level = 0, a1.level
        elif a1.level < a0.level:
            a1.leader, a1.level = 0, a0.level


def popt_transition(s0: POptState, s1: POptState, p: POptParams):
    """Interaction of initiator ``s0`` with responder ``s1`` under P_opt.

    Straight-line execution: each guard sees the updates made by earlier
    statements of the same interaction.
    """
    a = (_Agent(s0), _Agent(s1))
    a0, a1 = a
    for ai in a:
        if ai.synchronizer:
            ai.leader = 0

    if a0.phase == CH and a1.phase == CH:
        a0.detect = a1.detect = max(a0.detect, a1.detect)
        a0.rtimer = a1.rtimer = max(a0.rtimer - 1, a1.rtimer - 1, 0)
        if a0.rtimer == 0:
            a0.go_to_election(p)
            a1.go_to_election(p)
    else:
        for i in (0, 1):
            o = a[1 - i]
            if a[i].phase == EL and o.phase == CH and o.rtimer >= p.r_mid:
                a[i].become_checker(p)
                break
        else:
            for i in (0, 1):
                if a[i].phase == CH and a[i].rtimer < p.r_mid and a[1 - i].phase == EL:
                    a[i].go_to_election(p)
                    break

    if a0.phase == EL and a1.phase == EL:
        if (a0.elector and a1.elector and not a0.leader and not a1.leader
                and a0.level == a1.level):
            a1.become_synchronizer(p)
        elif a0.synchronizer and a1.synchronizer:
            i = 1 if a1.btimer >= a0.btimer else 0
            a[i].become_elector()
        _qe_in_election(a0, a1, p.m)
        if (p.same_level_elimination and a0.elector and a1.elector
                and a0.leader and a1.leader and a0.done and a1.done
                and a0.level == a1.level):
            a1.leader = 0
        for ai in a:
            if ai.synchronizer:
                ai.btimer = max(ai.btimer - 1, 0)
        for ai in a:
            if ai.synchronizer and ai.btimer == 0:
                ai.become_checker(p)
    return a0.freeze(), a1.freeze()


class POpt(Protocol):
    name = "popt"

    def __init__(self, params: POptParams):
        self.params = params

    def transition(self, s0, s1):
        return popt_transition(s0, s1, self.params)

    def output(self, s):
        return s.leader

    def state_space_size(self):
        return popt_state_count(self.params)


def popt_state_count(p: POptParams) -> int:
    """Number of distinct valid agent states (closed form)."""
    checkers = 2 * 2 * 2 * (p.r_max + 1)     # leader, mode, detect
    electors = 2 * 2 * (p.level_max + 1)     # leader, done
    synchronizers = 2 * (p.b_max + 1)        # leader
    return checkers + electors + synchronizers


def enumerate_popt_states(p: POptParams) -> Iterator[POptState]:
    """Every valid state, including synchronizers with leader=1.

    Such synchronizers are unreachable after one interaction but are still
    members of the state space the closed form counts.
    """
    for leader, mode, detect in itertools.product((0, 1), (A, B), (0, 1)):
        for r in range(p.r_max + 1):
            yield POptState.checker(leader, r, detect, mode)
    for leader, done in itertools.product((0, 1), (0, 1)):
        for lv in range(p.level_max + 1):
            yield POptState.elector(leader, lv, done)
    for leader in (0, 1):
        for b in range(p.b_max + 1):
            yield POptState.synchronizer(b, leader)


def random_popt_state(p: POptParams, rng: np.random.Generator) -> POptState:
    """Uniform draw over all valid states."""
    k = int(rng.integers(popt_state_count(p)))
    return decode_popt_index(k, p)


def decode_popt_index(k: int, p: POptParams) -> POptState:
    nc = 8 * (p.r_max + 1)
    if k < nc:
        combo, r = divmod(k, p.r_max + 1)
        leader, rest = divmod(combo, 4)
        mode, detect = divmod(rest, 2)
        return POptState.checker(leader, r, detect, mode)
    k -= nc
    ne = 4 * (p.level_max + 1)
    if k < ne:
        combo, lv = divmod(k, p.level_max + 1)
        leader, done = divmod(combo, 2)
        return POptState.elector(leader, lv, done)
    k -= ne
    leader, b = divmod(k, p.b_max + 1)
    if leader > 1:
        raise IndexError("state index out of range")
    return POptState.synchronizer(b, leader)


# ---------------------------------------------------------------------------
# Array encoding for the kernels
# ---------------------------------------------------------------------------


def encode_popt(states) -> np.ndarray:
    arr = np.zeros((len(states), 5), dtype=np.int64)
    for i, s in enumerate(states):
        arr[i, LEADER], arr[i, PHASE], arr[i, MODE] = s.leader, s.phase, s.mode
        if s.phase == CH:
            arr[i, VAL], arr[i, FLAG] = s.rtimer, s.detect
        elif s.mode == A:
            arr[i, VAL], arr[i, FLAG] = s.level, s.done
        else:
            arr[i, VAL] = s.btimer
    return arr


def decode_popt(arr: np.ndarray) -> list:
    out = []
    for leader, phase, mode, val, flag in arr.tolist():
        if phase == CH:
            out.append(POptState.checker(leader, val, flag, mode))
        elif mode == A:
            out.append(POptState.elector(leader, val, flag))
        else:
            out.append(POptState.synchronizer(val, leader))
    return out
