# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.

Each ``*_chunk`` function applies the interactions encoded in ``codes`` to a
population stored in a numpy array, in place, and stops early once the
protocol-specific stop condition holds after a step.  It returns
``(consumed, hit)``.  The pure-Python twin lives in ``_pykernels.py`` and must
agree with this module interaction for interaction.
"""
from libc.stdint cimport int64_t

DEF CH = 0
DEF EL = 1
DEF MA = 0
DEF MB = 1
DEF LEADER = 0
DEF PHASE = 1
DEF MODE = 2
DEF VAL = 3
DEF FLAG = 4

# stop kinds for popt_chunk
DEF STOP_NONE = 0
DEF STOP_SAFE = 1
DEF STOP_BROKEN = 2


cdef inline int64_t imax(int64_t a, int64_t b) nogil:
    return a if a > b else b


cdef inline int64_t imin(int64_t a, int64_t b) nogil:
    return a if a < b else b


cdef inline void decode(int64_t code, int64_t n, int64_t *u, int64_t *v) nogil:
    cdef int64_t r
    u[0] = code // (n - 1)
    r = code - u[0] * (n - 1)
    v[0] = r if r < u[0] else r + 1


# ---------------------------------------------------------------------------
# P_opt
# ---------------------------------------------------------------------------

cdef inline void to_checker(int64_t[:, ::1] s, int64_t a, int64_t r_max) nogil:
    s[a, PHASE] = CH
    s[a, VAL] = r_max
    s[a, FLAG] = s[a, LEADER]


cdef inline void to_elector(int64_t[:, ::1] s, int64_t a) nogil:
    s[a, MODE] = MA
    s[a, VAL] = 0
    s[a, FLAG] = 0


cdef inline void to_synchronizer(int64_t[:, ::1] s, int64_t a, int64_t b_max) nogil:
    s[a, MODE] = MB
    s[a, LEADER] = 0
    s[a, VAL] = b_max
    s[a, FLAG] = 0


cdef inline void go_to_election(int64_t[:, ::1] s, int64_t a, int64_t b_max) nogil:
    s[a, PHASE] = EL
    if s[a, FLAG] == 0:
        s[a, LEADER] = 1
        s[a, MODE] = MA
    if s[a, MODE] == MA:
        to_elector(s, a)
    else:
        to_synchronizer(s, a, b_max)


cdef inline bint is_elector(int64_t[:, ::1] s, int64_t a) nogil:
    return s[a, PHASE] == EL and s[a, MODE] == MA


cdef inline bint is_sync(int64_t[:, ::1] s, int64_t a) nogil:
    return s[a, PHASE] == EL and s[a, MODE] == MB


cdef inline bint eff_done(int64_t[:, ::1] s, int64_t a) nogil:
    return s[a, FLAG] != 0 or s[a, LEADER] == 0


cdef void popt_step(int64_t[:, ::1] s, int64_t u, int64_t v, int64_t r_max,
                    int64_t r_mid, int64_t b_max, int64_t m, bint elim) nogil:
    cdef int64_t a[2]
    cdef int64_t i, x, y, t
    a[0] = u
    a[1] = v
    # synchronizers are followers
    for i in range(2):
        if is_sync(s, a[i]):
            s[a[i], LEADER] = 0
    if s[u, PHASE] == CH and s[v, PHASE] == CH:
        t = imax(s[u, FLAG], s[v, FLAG])
        s[u, FLAG] = t
        s[v, FLAG] = t
        t = imax(imax(s[u, VAL] - 1, s[v, VAL] - 1), 0)
        s[u, VAL] = t
        s[v, VAL] = t
        if t == 0:
            go_to_election(s, u, b_max)
            go_to_election(s, v, b_max)
    else:
        x = -1
        for i in range(2):
            if (s[a[i], PHASE] == EL and s[a[1 - i], PHASE] == CH
                    and s[a[1 - i], VAL] >= r_mid):
                to_checker(s, a[i], r_max)
                x = i
                break
        if x < 0:
            for i in range(2):
                if (s[a[i], PHASE] == CH and s[a[i], VAL] < r_mid
                        and s[a[1 - i], PHASE] == EL):
                    go_to_election(s, a[i], b_max)
                    break

    if s[u, PHASE] == EL and s[v, PHASE] == EL:
        if (is_elector(s, u) and is_elector(s, v) and s[u, LEADER] == 0
                and s[v, LEADER] == 0 and s[u, VAL] == s[v, VAL]):
            to_synchronizer(s, v, b_max)
        elif is_sync(s, u) and is_sync(s, v):
            if s[v, VAL] >= s[u, VAL]:
                to_elector(s, v)
            else:
                to_elector(s, u)
        # quick elimination among electors
        if is_elector(s, u) and s[u, FLAG] == 0 and s[u, LEADER] == 1:
            s[u, VAL] = imin(s[u, VAL] + 1, 2 * m)
        if is_elector(s, v) and s[v, FLAG] == 0 and s[v, LEADER] == 1:
            s[v, FLAG] = 1
        if is_elector(s, u) and is_elector(s, v) and eff_done(s, u) and eff_done(s, v):
            if s[u, VAL] < s[v, VAL]:
                s[u, LEADER] = 0
                s[u, VAL] = s[v, VAL]
            elif s[v, VAL] < s[u, VAL]:
                s[v, LEADER] = 0
                s[v, VAL] = s[u, VAL]
        if (elim and is_elector(s, u) and is_elector(s, v)
                and s[u, LEADER] == 1 and s[v, LEADER] == 1
                and s[u, FLAG] == 1 and s[v, FLAG] == 1
                and s[u, VAL] == s[v, VAL]):
            s[v, LEADER] = 0
        for i in range(2):
            if is_sync(s, a[i]):
                s[a[i], VAL] = imax(s[a[i], VAL] - 1, 0)
        for i in range(2):
            if is_sync(s, a[i]) and s[a[i], VAL] == 0:
                to_checker(s, a[i], r_max)


cdef inline int64_t is_chge(int64_t[:, ::1] s, int64_t a, int64_t r_mid) nogil:
    return 1 if (s[a, PHASE] == CH and s[a, VAL] >= r_mid) else 0


cdef inline int64_t is_ld(int64_t[:, ::1] s, int64_t a) nogil:
    return 1 if (s[a, LEADER] == 1 and s[a, PHASE] == CH and s[a, FLAG] == 1) else 0


def popt_step_pair(int64_t[:, ::1] s, int64_t u, int64_t v, int64_t r_max,
                   int64_t r_mid, int64_t b_max, int64_t m, bint elim):
    """Apply a single interaction (used by tests)."""
    popt_step(s, u, v, r_max, r_mid, b_max, m, elim)


def popt_chunk(int64_t[:, ::1] s, const int64_t[::1] codes, int64_t limit,
               int64_t r_max, int64_t r_mid, int64_t b_max, int64_t m, bint elim,
               int stop_kind, int64_t hold_agent):
    cdef int64_t n = s.shape[0]
    cdef int64_t t, u, v, i
    cdef int64_t n_chge = 0, n_lead = 0, n_ld = 0
    cdef bint hit = False
    for i in range(n):
        n_chge += is_chge(s, i, r_mid)
        n_lead += s[i, LEADER]
        n_ld += is_ld(s, i)
    with nogil:
        for t in range(limit):
            decode(codes[t], n, &u, &v)
            n_chge -= is_chge(s, u, r_mid) + is_chge(s, v, r_mid)
            n_lead -= s[u, LEADER] + s[v, LEADER]
            n_ld -= is_ld(s, u) + is_ld(s, v)
            popt_step(s, u, v, r_max, r_mid, b_max, m, elim)
            n_chge += is_chge(s, u, r_mid) + is_chge(s, v, r_mid)
            n_lead += s[u, LEADER] + s[v, LEADER]
            n_ld += is_ld(s, u) + is_ld(s, v)
            if stop_kind == STOP_SAFE:
                if n_chge == n and n_lead == 1 and n_ld == 1:
                    hit = True
                    break
            elif stop_kind == STOP_BROKEN:
                if n_lead != 1 or s[hold_agent, LEADER] != 1:
                    hit = True
                    break
    return (t + 1 if hit else limit), hit


# ---------------------------------------------------------------------------
# Building blocks
# ---------------------------------------------------------------------------

def epidemic_chunk(int64_t[::1] x, const int64_t[::1] codes, int64_t limit,
                   int64_t target):
    """Stop once every agent holds ``target``."""
    cdef int64_t n = x.shape[0]
    cdef int64_t t, u, v, w, i, cnt = 0
    cdef bint hit = False
    for i in range(n):
        if x[i] == target:
            cnt += 1
    with nogil:
        for t in range(limit):
            decode(codes[t], n, &u, &v)
            cnt -= (x[u] == target) + (x[v] == target)
            w = imax(x[u], x[v])
            x[u] = w
            x[v] = w
            cnt += 2 * (w == target)
            if cnt == n:
                hit = True
                break
    return (t + 1 if hit else limit), hit


def chvp_chunk(int64_t[::1] y, const int64_t[::1] codes, int64_t limit,
               int64_t l2, int64_t step0, list spreads):
    """Stop once ``max(y) <= l2``; append ``max - min`` every n global steps."""
    cdef int64_t n = y.shape[0]
    cdef int64_t t, u, v, w, i, above = 0, lo, hi
    cdef bint hit = False
    for i in range(n):
        if y[i] > l2:
            above += 1
    for t in range(limit):
        decode(codes[t], n, &u, &v)
        above -= (y[u] > l2) + (y[v] > l2)
        w = imax(imax(y[u] - 1, y[v] - 1), 0)
        y[u] = w
        y[v] = w
        above += 2 * (w > l2)
        if (step0 + t + 1) % n == 0:
            lo = y[0]
            hi = y[0]
            for i in range(1, n):
                lo = imin(lo, y[i])
                hi = imax(hi, y[i])
            spreads.append(hi - lo)
        if above == 0:
            hit = True
            break
    return (t + 1 if hit else limit), hit


def qe_chunk(int64_t[:, ::1] s, const int64_t[::1] codes, int64_t limit, int64_t m):
    """Columns: leader, done, level.  Stop once no undecided leader remains."""
    cdef int64_t n = s.shape[0]
    cdef int64_t t, u, v, i, undecided = 0
    cdef bint hit = False
    for i in range(n):
        if s[i, 0] == 1 and s[i, 1] == 0:
            undecided += 1
    with nogil:
        for t in range(limit):
            decode(codes[t], n, &u, &v)
            if s[u, 1] == 0 and s[u, 0] == 1:
                s[u, 2] = imin(s[u, 2] + 1, 2 * m)
            if s[v, 1] == 0 and s[v, 0] == 1:
                s[v, 1] = 1
                undecided -= 1
            if ((s[u, 1] == 1 or s[u, 0] == 0) and (s[v, 1] == 1 or s[v, 0] == 0)):
                if s[u, 2] < s[v, 2]:
                    s[u, 0] = 0
                    s[u, 2] = s[v, 2]
                elif s[v, 2] < s[u, 2]:
                    s[v, 0] = 0
                    s[v, 2] = s[u, 2]
            if undecided == 0:
                hit = True
                break
    return (t + 1 if hit else limit), hit


def twostate_chunk(int64_t[::1] leader, const int64_t[::1] codes, int64_t limit):
    """Stop once at most one leader remains."""
    cdef int64_t n = leader.shape[0]
    cdef int64_t t, u, v, i, cnt = 0
    cdef bint hit = False
    for i in range(n):
        cnt += leader[i]
    with nogil:
        for t in range(limit):
            decode(codes[t], n, &u, &v)
            if leader[u] == 1 and leader[v] == 1:
                leader[v] = 0
                cnt -= 1
            if cnt <= 1:
                hit = True
                break
    return (t + 1 if hit else limit), hit
