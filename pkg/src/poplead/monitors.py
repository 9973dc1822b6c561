"""Configuration predicates and convergence/holding measurements for P_opt."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

from . import kernels
from .engine import Protocol, RunConfig
from .protocols import CH, EL, A, B, POptParams, POptState, encode_popt


@dataclass(frozen=True)
class Census:
    leaders: int
    followers: int
    checkers: int
    election: int
    electors: int
    synchronizers: int
    checkers_ge: int
    checkers_lt: int
    done: int
    undone: int

    def identities_hold(self, n: int) -> bool:
        return (self.leaders + self.followers == n
                and self.checkers + self.election == n
                and self.checkers_ge + self.checkers_lt == self.checkers
                and self.electors + self.synchronizers == self.election)


def census(pop: Sequence[POptState], p: POptParams) -> Census:
    c = dict.fromkeys(Census.__dataclass_fields__, 0)
    for s in pop:
        c["leaders" if s.leader else "followers"] += 1
        if s.phase == CH:
            c["checkers"] += 1
            c["checkers_ge" if s.rtimer >= p.r_mid else "checkers_lt"] += 1
        else:
            c["election"] += 1
            if s.mode == A:
                c["electors"] += 1
                if s.leader:
                    c["done" if s.done else "undone"] += 1
            else:
                c["synchronizers"] += 1
    return Census(**c)


def correct_leader(pop: Sequence, proto: Protocol) -> Optional[int]:
    """Index of the unique agent outputting 1, or None."""
    found = None
    for i, s in enumerate(pop):
        if proto.output(s):
            if found is not None:
                return None
            found = i
    return found


def is_safe(pop: Sequence[POptState], p: POptParams) -> bool:
    leader = None
    for s in pop:
        if s.phase != CH or s.rtimer < p.r_mid:
            return False
        if s.leader:
            if leader is not None:
                return False
            leader = s
    return leader is not None and leader.detect == 1


def in_creset(pop, p: POptParams) -> bool:
    return any(s.phase == CH and s.rtimer == p.r_max for s in pop)


def in_ach(pop, p: POptParams = None) -> bool:
    return all(s.phase == CH for s in pop)


def in_ael(pop, p: POptParams = None) -> bool:
    return all(s.phase == EL for s in pop)


def in_ach_ge(pop, p: POptParams) -> bool:
    return all(s.phase == CH and s.rtimer >= p.r_mid for s in pop)


def in_cel_ge(pop, p: POptParams) -> bool:
    return in_ael(pop) and all(2 * s.btimer >= p.b_max for s in pop if s.mode == B)


class Convergence(NamedTuple):
    steps: int
    hit: bool


class Holding(NamedTuple):
    steps: int
    broken: bool


def measure_convergence(pop0: Sequence[POptState], proto: Protocol, p: POptParams,
                        rc: RunConfig) -> Convergence:
    """Steps until the first safe configuration (one sample of the ECT)."""
    arr = encode_popt(pop0)
    steps, hit = kernels.run_popt(arr, p, rc.seed, rc.max_steps, kernels.STOP_SAFE)
    return Convergence(steps, hit)


def measure_holding(pop0: Sequence[POptState], proto: Protocol, p: POptParams,
                    rc: RunConfig) -> Holding:
    """Length of the prefix during which the initial leader stays the unique leader.

    Returns ``(0, True)`` for an initially incorrect configuration and
    ``(rc.max_steps, False)`` when leadership survives the whole budget (a
    censored observation).
    """
    v = correct_leader(pop0, proto)
    if v is None:
        return Holding(0, True)
    arr = encode_popt(pop0)
    steps, broken = kernels.run_popt(arr, p, rc.seed, rc.max_steps, kernels.STOP_BROKEN, v)
    return Holding(steps, broken)
