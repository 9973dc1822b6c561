"""Population-protocol execution under the uniformly random scheduler.

A configuration is a plain list of agent states (one per agent).  The
scheduler picks an ordered pair ``(initiator, responder)`` of distinct
agents uniformly among the ``n(n-1)`` possibilities at every step.  Pairs are
sampled as a single integer in ``[0, n(n-1))`` and decoded, which keeps the
draw exactly uniform.

Randomness comes from numpy's PCG64.  Per-trial streams are derived from
``(master_seed, trial_index)`` with :class:`numpy.random.SeedSequence`, so a
trial can be replayed on its own.
"""
from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Sequence

import numpy as np

#: Number of pair codes drawn from the generator at a time.  Fixed so that
#: the interaction sequence of a run does not depend on its step budget.
CHUNK = 4096

Population = List


class InvalidPopulation(ValueError):
    pass


class Interaction(NamedTuple):
    initiator: int
    responder: int


class Protocol(abc.ABC):
    """Transition function, output function and state-space size."""

    name = "protocol"

    @abc.abstractmethod
    def transition(self, s0, s1):
        """Return the new (initiator, responder) states."""

    @abc.abstractmethod
    def output(self, s) -> int:
        """Leader bit of a state."""

    @abc.abstractmethod
    def state_space_size(self) -> int:
        ...


@dataclass(frozen=True)
class RunConfig:
    seed: int
    max_steps: int
    n: int

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.max_steps < 0:
            raise ValueError("max_steps must be >= 0")
        if self.n < 2:
            raise InvalidPopulation(f"population size n={self.n} must be >= 2")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def trial_seed(master_seed: int, trial: int) -> int:
    """64-bit seed of trial ``trial``, a pure function of both arguments."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(trial,))
    return int(ss.generate_state(1, np.uint64)[0])


def decode_pair(code: int, n: int) -> Interaction:
    u, r = divmod(int(code), n - 1)
    return Interaction(u, r if r < u else r + 1)


def draw_interaction(rng: np.random.Generator, n: int) -> Interaction:
    if n < 2:
        raise InvalidPopulation(f"population size n={n} must be >= 2")
    return decode_pair(rng.integers(n * (n - 1)), n)


class InteractionStream:
    """Pair codes in fixed-size chunks; shared by the Python loop and the kernels."""

    def __init__(self, rng: np.random.Generator, n: int):
        if n < 2:
            raise InvalidPopulation(f"population size n={n} must be >= 2")
        self.rng = rng
        self.n = n
        self._k = n * (n - 1)

    def next_chunk(self) -> np.ndarray:
        return self.rng.integers(0, self._k, size=CHUNK, dtype=np.int64)

    def __iter__(self):
        n = self.n
        while True:
            for code in self.next_chunk().tolist():
                u, r = divmod(code, n - 1)
                yield u, (r if r < u else r + 1)


def step(pop: Sequence, proto: Protocol, e: Interaction) -> list:
    """Configuration after interaction ``e``; only the two participants change."""
    u, v = e
    if u == v or not (0 <= u < len(pop) and 0 <= v < len(pop)):
        raise InvalidPopulation(f"invalid interaction {e} for n={len(pop)}")
    new = list(pop)
    new[u], new[v] = proto.transition(pop[u], pop[v])
    return new


class RunResult(NamedTuple):
    steps: int
    final: list
    hit: bool


def run_until(pop: Sequence, proto: Protocol, rc: RunConfig,
              stop: Callable[[list], bool]) -> RunResult:
    """Run from ``pop`` until ``stop`` holds or ``rc.max_steps`` interactions.

    ``stop`` is evaluated on the initial configuration and after every
    interaction.  Steps count interactions; divide by n for parallel time.
    """
    cur = list(pop)
    if len(cur) != rc.n:
        raise InvalidPopulation(f"population has {len(cur)} agents, RunConfig says n={rc.n}")
    if stop(cur):
        return RunResult(0, cur, True)
    t = 0
    if rc.max_steps == 0:
        return RunResult(0, cur, False)
    transition = proto.transition
    for u, v in InteractionStream(make_rng(rc.seed), rc.n):
        cur[u], cur[v] = transition(cur[u], cur[v])
        t += 1
        if stop(cur):
            return RunResult(t, cur, True)
        if t >= rc.max_steps:
            return RunResult(t, cur, False)
    raise AssertionError("unreachable")
