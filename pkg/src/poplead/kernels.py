"""Fast run loops over array-encoded populations.

The compiled extension ``_ckernels`` is used when it is importable; otherwise
the pure-Python twin in ``_pykernels`` takes over.  Set ``POPLEAD_PURE=1`` to
force the fallback.  Both backends consume the same interaction stream, so a
run gives identical results on either.
"""
from __future__ import annotations

import logging
import os

import numpy as np

from . import _pykernels
from .engine import CHUNK, InteractionStream, make_rng

log = logging.getLogger(__name__)

STOP_NONE, STOP_SAFE, STOP_BROKEN = 0, 1, 2


def _load_backend():
    if os.environ.get("POPLEAD_PURE", "") not in ("", "0"):
        return _pykernels, "python"
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        log.info("compiled kernels unavailable, using pure-Python fallback")
        return _pykernels, "python"
    return _ckernels, "cython"


backend, BACKEND = _load_backend()


def use_backend(name: str):
    """Switch backend at runtime ('cython' or 'python'); returns the previous name."""
    global backend, BACKEND
    prev = BACKEND
    if name == "python":
        backend, BACKEND = _pykernels, "python"
    elif name == "cython":
        from . import _ckernels
        backend, BACKEND = _ckernels, "cython"
    else:
        raise ValueError(f"unknown backend {name!r}")
    return prev


def _drive(chunk_fn, n, seed, max_steps, initially_hit):
    """Feed chunks of pair codes to ``chunk_fn(codes, limit, steps_so_far)``."""
    if initially_hit:
        return 0, True
    stream = InteractionStream(make_rng(seed), n)
    steps = 0
    while steps < max_steps:
        codes = stream.next_chunk()
        limit = min(CHUNK, max_steps - steps)
        used, hit = chunk_fn(codes, limit, steps)
        steps += used
        if hit:
            return steps, True
    return steps, False


def popt_is_safe_array(s: np.ndarray, r_mid: int) -> bool:
    leaders = s[:, 0] == 1
    chge = (s[:, 1] == 0) & (s[:, 3] >= r_mid)
    return bool(chge.all() and leaders.sum() == 1 and s[leaders, 4][0] == 1)


def run_popt(s: np.ndarray, p, seed: int, max_steps: int, stop_kind: int,
             hold_agent: int = -1):
    """Run P_opt in place on the (n, 5) array ``s``."""
    if s.dtype != np.int64 or not s.flags.c_contiguous:
        raise ValueError("population array must be C-contiguous int64")
    n = s.shape[0]
    if stop_kind == STOP_SAFE:
        initially = popt_is_safe_array(s, p.r_mid)
    elif stop_kind == STOP_BROKEN:
        initially = not (s[:, 0].sum() == 1 and s[hold_agent, 0] == 1)
    else:
        initially = False

    def chunk(codes, limit, _):
        return backend.popt_chunk(s, codes, limit, p.r_max, p.r_mid, p.b_max, p.m,
                                  p.same_level_elimination, stop_kind, hold_agent)

    return _drive(chunk, n, seed, max_steps, initially)


def run_epidemic(x: np.ndarray, seed: int, max_steps: int):
    target = int(x.max())
    return _drive(lambda c, lim, _: backend.epidemic_chunk(x, c, lim, target),
                  x.shape[0], seed, max_steps, bool((x == target).all()))


def run_chvp(y: np.ndarray, l2: int, seed: int, max_steps: int):
    """Returns ``(steps, hit, spreads)``; spreads sampled every n steps."""
    spreads: list = []
    steps, hit = _drive(
        lambda c, lim, t0: backend.chvp_chunk(y, c, lim, l2, t0, spreads),
        y.shape[0], seed, max_steps, bool(y.max() <= l2))
    return steps, hit, spreads


def run_qe(s: np.ndarray, m: int, seed: int, max_steps: int):
    """Columns of ``s``: leader, done, level."""
    undecided = bool(((s[:, 0] == 1) & (s[:, 1] == 0)).any())
    return _drive(lambda c, lim, _: backend.qe_chunk(s, c, lim, m),
                  s.shape[0], seed, max_steps, not undecided)


def run_twostate(leader: np.ndarray, seed: int, max_steps: int):
    return _drive(lambda c, lim, _: backend.twostate_chunk(leader, c, lim),
                  leader.shape[0], seed, max_steps, bool(leader.sum() <= 1))


class PoptSession:
    """Resumable P_opt run; consumes the same stream as :func:`run_popt`."""

    def __init__(self, s: np.ndarray, p, seed: int):
        if s.dtype != np.int64 or not s.flags.c_contiguous:
            raise ValueError("population array must be C-contiguous int64")
        self.s, self.p = s, p
        self.stream = InteractionStream(make_rng(seed), s.shape[0])
        self.steps = 0
        self._codes = np.empty(0, dtype=np.int64)
        self._pos = 0

    def advance(self, k: int, stop_kind: int = STOP_NONE, hold_agent: int = -1):
        """Run up to ``k`` more interactions; returns ``(used, hit)``."""
        p, used = self.p, 0
        while used < k:
            if self._pos == len(self._codes):
                self._codes, self._pos = self.stream.next_chunk(), 0
            limit = min(len(self._codes) - self._pos, k - used)
            n_done, hit = backend.popt_chunk(
                self.s, self._codes[self._pos:], limit, p.r_max, p.r_mid, p.b_max, p.m,
                p.same_level_elimination, stop_kind, hold_agent)
            self._pos += n_done
            used += n_done
            self.steps += n_done
            if hit:
                return used, True
        return used, False
