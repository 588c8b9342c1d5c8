# cython: language_level=3
"""Compiled run loops.

Every function here has a twin of the same name and signature in
``edabench._pure``.  Both consume the generator's bit stream identically
(``next_double`` for probabilities and indices, ``next_raw`` for uniform
words), so a seed yields the same run on either backend.
"""
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport floor, log, log1p, log2
from libc.stdint cimport int64_t, uint8_t, uint64_t
from libc.stdlib cimport free, malloc
from libc.string cimport memcpy
from numpy.random cimport bitgen_t

import numpy as np

from .fitness import KIND_CONSTANT, KIND_DLB, KIND_LEADING_ONES
from .models import ENTROPY_TIE_TOL

cdef enum:
    K_DLB = 0
    K_LO = 1
    K_CONST = 2

cdef double TIE_TOL = ENTROPY_TIE_TOL


cdef struct Fit:
    int kind
    Py_ssize_t k
    Py_ssize_t m
    Py_ssize_t *keep
    int64_t opt


cdef class _FitHolder:
    """Keeps the kept-position buffer alive while a kernel runs."""
    cdef Fit fit
    cdef object keep_arr

    def __init__(self, f, Py_ssize_t n):
        cdef Py_ssize_t[::1] kv
        kinds = {KIND_DLB: K_DLB, KIND_LEADING_ONES: K_LO, KIND_CONSTANT: K_CONST}
        if f.kind not in kinds:
            raise TypeError(f"fitness kind {f.kind!r} has no compiled kernel")
        f.check_length(n)
        self.fit.kind = kinds[f.kind]
        self.fit.k = f.block_size
        opt = f.optimum(n)
        self.fit.opt = -1 if opt is None else opt
        if f.neutral_positions:
            self.keep_arr = np.ascontiguousarray(f.kept_positions(n), dtype=np.intp)
            kv = self.keep_arr
            self.fit.m = kv.shape[0]
            self.fit.keep = &kv[0] if kv.shape[0] else NULL
        else:
            self.keep_arr = None
            self.fit.m = n
            self.fit.keep = NULL


cdef uint64_t ALL_ONES = 0x0101010101010101ULL
cdef uint64_t SPREAD[256]


cdef void _init_spread() noexcept:
    cdef int b, t
    for b in range(256):
        SPREAD[b] = 0
        for t in range(8):
            if (b >> t) & 1:
                SPREAD[b] |= (<uint64_t>1) << (8 * t)


_init_spread()


cdef inline Py_ssize_t leading_ones(const uint8_t *x, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t lo = 0
    cdef uint64_t w
    while lo + 8 <= m:
        memcpy(&w, x + lo, 8)
        if w != ALL_ONES:
            break
        lo += 8
    while lo < m and x[lo]:
        lo += 1
    return lo


cdef inline int64_t evaluate(const uint8_t *x, Fit *f) noexcept nogil:
    cdef Py_ssize_t lo = 0, start, i, zeros
    if f.kind == K_CONST:
        return 0
    if f.keep == NULL:
        lo = leading_ones(x, f.m)
    else:
        while lo < f.m and x[f.keep[lo]]:
            lo += 1
    if f.kind == K_LO or lo == f.m:
        return lo
    start = (lo // f.k) * f.k
    zeros = 0
    for i in range(start, start + f.k):
        if f.keep == NULL:
            zeros += 1 - x[i]
        else:
            zeros += 1 - x[f.keep[i]]
    return start + zeros - 1


cdef bitgen_t *_bitgen(object bg) except NULL:
    return <bitgen_t *> PyCapsule_GetPointer(bg.capsule, "BitGenerator")


cdef inline void random_bits(uint8_t *x, Py_ssize_t n, bitgen_t *bg) noexcept nogil:
    cdef Py_ssize_t j
    cdef uint64_t word = 0
    for j in range(n):
        if j % 64 == 0:
            word = bg.next_raw(bg.state)
        x[j] = (word >> (j % 64)) & 1


cdef inline Py_ssize_t mutate(uint8_t *x, Py_ssize_t n, double rate, double lq,
                              bitgen_t *bg, Py_ssize_t *flips) noexcept nogil:
    """Standard bit mutation by geometric skips; returns the number of flips."""
    cdef Py_ssize_t pos = -1, nf = 0, j
    cdef double u, g
    if rate >= 1.0:
        for j in range(n):
            x[j] ^= 1
            flips[j] = j
        return n
    while True:
        u = bg.next_double(bg.state)
        g = floor(log(1.0 - u) / lq)
        if <double>(pos + 1) + g >= <double>n:
            break
        pos = pos + 1 + <Py_ssize_t>g
        x[pos] ^= 1
        flips[nf] = pos
        nf += 1
    return nf


cdef inline void crossover(const uint8_t *a, const uint8_t *b, uint8_t *child,
                           Py_ssize_t n, bitgen_t *bg) noexcept nogil:
    """Take ``a[j]`` where bit ``j % 64`` of the ``j // 64``-th raw word is set, else ``b[j]``."""
    cdef Py_ssize_t j = 0, t
    cdef uint64_t word = 0, m, wa, wb
    while j < n:
        if j % 64 == 0:
            word = bg.next_raw(bg.state)
        m = SPREAD[(word >> (j % 64)) & 0xFF]
        if j + 8 <= n:
            memcpy(&wa, a + j, 8)
            memcpy(&wb, b + j, 8)
            wb = wb ^ ((wa ^ wb) & m)
            memcpy(child + j, &wb, 8)
        else:
            for t in range(n - j):
                child[j + t] = b[j + t] ^ ((a[j + t] ^ b[j + t]) & ((m >> (8 * t)) & 1))
        j += 8


cdef Py_ssize_t select(const int64_t *F, Py_ssize_t L, Py_ssize_t mu, int64_t fmax,
                       Py_ssize_t *out, Py_ssize_t *hist, Py_ssize_t *boundary,
                       bitgen_t *bg) noexcept nogil:
    """Write ``mu`` indices of the best entries of ``F`` (values in [0, fmax])."""
    cdef Py_ssize_t i, j, c, r, above = 0, tmp
    cdef int64_t cut
    for i in range(fmax + 1):
        hist[i] = 0
    for i in range(L):
        hist[F[i]] += 1
    cut = fmax
    while above + hist[cut] < mu:
        above += hist[cut]
        cut -= 1
    j = 0
    c = 0
    for i in range(L):
        if F[i] > cut:
            out[j] = i
            j += 1
        elif F[i] == cut:
            boundary[c] = i
            c += 1
    r = mu - above
    if 0 < r < c:
        for i in range(r):
            j = i + <Py_ssize_t>(bg.next_double(bg.state) * (c - i))
            tmp = boundary[i]
            boundary[i] = boundary[j]
            boundary[j] = tmp
    for i in range(r):
        out[above + i] = boundary[i]
    return mu


cdef inline double entropy(double q) noexcept nogil:
    if q <= 0.0 or q >= 1.0:
        return 0.0
    return -(q * log2(q) + (1.0 - q) * log2(1.0 - q))


cdef inline double clamp(double q, double lo, double hi) noexcept nogil:
    if q < lo:
        return lo
    if q > hi:
        return hi
    return q


cdef class _Scratch:
    """Owned C buffers for one kernel call."""
    cdef Py_ssize_t *a
    cdef Py_ssize_t *b
    cdef Py_ssize_t *c
    cdef Py_ssize_t *d

    def __cinit__(self, Py_ssize_t na, Py_ssize_t nb, Py_ssize_t nc, Py_ssize_t nd):
        self.a = <Py_ssize_t *> malloc(max(na, 1) * sizeof(Py_ssize_t))
        self.b = <Py_ssize_t *> malloc(max(nb, 1) * sizeof(Py_ssize_t))
        self.c = <Py_ssize_t *> malloc(max(nc, 1) * sizeof(Py_ssize_t))
        self.d = <Py_ssize_t *> malloc(max(nd, 1) * sizeof(Py_ssize_t))
        if not (self.a and self.b and self.c and self.d):
            raise MemoryError()

    def __dealloc__(self):
        free(self.a)
        free(self.b)
        free(self.c)
        free(self.d)


def _trace_view(trace):
    if trace is None:
        return np.zeros(1, dtype=np.int64), 0
    return trace, trace.shape[0]


def one_plus_one(f, Py_ssize_t n, double rate, int64_t budget, rng, trace=None):
    """(1+1) EA.  Returns ``(evals, iterations, success, best, best_fitness, ntrace)``."""
    cdef _FitHolder fh = _FitHolder(f, n)
    cdef Fit *fit = &fh.fit
    bgobj = rng.bit_generator
    cdef bitgen_t *bg = _bitgen(bgobj)
    x_arr = np.empty(n, dtype=np.uint8)
    cdef uint8_t[::1] xv = x_arr
    cdef uint8_t *x = &xv[0]
    tr_arr, cap = _trace_view(trace)
    cdef int64_t[::1] tr = tr_arr
    cdef Py_ssize_t tcap = cap, nt = 0, nf, i
    cdef _Scratch s = _Scratch(n, 1, 1, 1)
    cdef double lq = log1p(-rate) if rate < 1.0 else 0.0
    cdef int64_t evals = 0, iters = 0, fx, fy
    cdef bint success = False
    with bgobj.lock, nogil:
        random_bits(x, n, bg)
        fx = evaluate(x, fit)
        evals = 1
        success = fx == fit.opt
        while not success and evals < budget:
            nf = mutate(x, n, rate, lq, bg, s.a)
            fy = evaluate(x, fit)
            evals += 1
            iters += 1
            if fy >= fx:
                fx = fy
                success = fx == fit.opt
            else:
                for i in range(nf):
                    x[s.a[i]] ^= 1
            if nt < tcap:
                tr[nt] = fx
                nt += 1
    return evals, iters, bool(success), x_arr, fx, nt


def comma(f, Py_ssize_t n, Py_ssize_t mu, Py_ssize_t lam, double rate, double pc,
          int64_t budget, rng, trace=None):
    """(mu, lambda) EA / GA.  Same return layout as :func:`one_plus_one`."""
    cdef _FitHolder fh = _FitHolder(f, n)
    cdef Fit *fit = &fh.fit
    bgobj = rng.bit_generator
    cdef bitgen_t *bg = _bitgen(bgobj)
    pop_arr = np.empty((mu, n), dtype=np.uint8)
    off_arr = np.empty((lam, n), dtype=np.uint8)
    popf_arr = np.empty(mu, dtype=np.int64)
    offf_arr = np.empty(lam, dtype=np.int64)
    best_arr = np.empty(n, dtype=np.uint8)
    cdef uint8_t[:, ::1] pop = pop_arr
    cdef uint8_t[:, ::1] off = off_arr
    cdef int64_t[::1] popf = popf_arr
    cdef int64_t[::1] offf = offf_arr
    cdef uint8_t[::1] best = best_arr
    tr_arr, cap = _trace_view(trace)
    cdef int64_t[::1] tr = tr_arr
    cdef Py_ssize_t tcap = cap, nt = 0, i, o, a, b, fmax = fit.m
    cdef _Scratch s = _Scratch(n, lam, fmax + 1, lam)
    cdef double lq = log1p(-rate) if rate < 1.0 else 0.0
    cdef int64_t evals = 0, iters = 0, best_f = -1, gbest
    cdef bint success = False, done = False, do_x
    with bgobj.lock, nogil:
        for i in range(mu):
            random_bits(&pop[i, 0], n, bg)
            popf[i] = evaluate(&pop[i, 0], fit)
            evals += 1
            if popf[i] > best_f:
                best_f = popf[i]
                memcpy(&best[0], &pop[i, 0], n)
            if popf[i] == fit.opt:
                success = True
            if success or evals >= budget:
                done = True
                break
        while not done:
            for o in range(lam):
                if pc >= 1.0:
                    do_x = True
                elif pc > 0.0:
                    do_x = bg.next_double(bg.state) < pc
                else:
                    do_x = False
                a = <Py_ssize_t>(bg.next_double(bg.state) * mu)
                if do_x:
                    b = <Py_ssize_t>(bg.next_double(bg.state) * mu)
                    crossover(&pop[a, 0], &pop[b, 0], &off[o, 0], n, bg)
                else:
                    memcpy(&off[o, 0], &pop[a, 0], n)
                mutate(&off[o, 0], n, rate, lq, bg, s.a)
                offf[o] = evaluate(&off[o, 0], fit)
                evals += 1
                if offf[o] > best_f:
                    best_f = offf[o]
                    memcpy(&best[0], &off[o, 0], n)
                if offf[o] == fit.opt:
                    success = True
                if success or evals >= budget:
                    done = True
                    break
            if done:
                break
            select(&offf[0], lam, mu, fmax, s.b, s.c, s.d, bg)
            gbest = -1
            for i in range(mu):
                memcpy(&pop[i, 0], &off[s.b[i], 0], n)
                popf[i] = offf[s.b[i]]
                if popf[i] > gbest:
                    gbest = popf[i]
            iters += 1
            if nt < tcap:
                tr[nt] = gbest
                nt += 1
    return evals, iters, bool(success), best_arr, best_f, nt


def plus(f, Py_ssize_t n, Py_ssize_t mu, Py_ssize_t lam, double rate,
         int64_t budget, rng, trace=None):
    """(mu + lambda) EA with uniform tie-breaking in the merged population."""
    cdef _FitHolder fh = _FitHolder(f, n)
    cdef Fit *fit = &fh.fit
    bgobj = rng.bit_generator
    cdef bitgen_t *bg = _bitgen(bgobj)
    cdef Py_ssize_t L = mu + lam
    all_arr = np.empty((L, n), dtype=np.uint8)
    tmp_arr = np.empty((mu, n), dtype=np.uint8)
    allf_arr = np.empty(L, dtype=np.int64)
    tmpf_arr = np.empty(mu, dtype=np.int64)
    best_arr = np.empty(n, dtype=np.uint8)
    cdef uint8_t[:, ::1] allp = all_arr
    cdef uint8_t[:, ::1] tmp = tmp_arr
    cdef int64_t[::1] allf = allf_arr
    cdef int64_t[::1] tmpf = tmpf_arr
    cdef uint8_t[::1] best = best_arr
    tr_arr, cap = _trace_view(trace)
    cdef int64_t[::1] tr = tr_arr
    cdef Py_ssize_t tcap = cap, nt = 0, i, o, a, fmax = fit.m
    cdef _Scratch s = _Scratch(n, L, fmax + 1, L)
    cdef double lq = log1p(-rate) if rate < 1.0 else 0.0
    cdef int64_t evals = 0, iters = 0, best_f = -1
    cdef bint success = False, done = False
    with bgobj.lock, nogil:
        for i in range(mu):
            random_bits(&allp[i, 0], n, bg)
            allf[i] = evaluate(&allp[i, 0], fit)
            evals += 1
            if allf[i] > best_f:
                best_f = allf[i]
                memcpy(&best[0], &allp[i, 0], n)
            if allf[i] == fit.opt:
                success = True
            if success or evals >= budget:
                done = True
                break
        while not done:
            for o in range(mu, L):
                a = <Py_ssize_t>(bg.next_double(bg.state) * mu)
                memcpy(&allp[o, 0], &allp[a, 0], n)
                mutate(&allp[o, 0], n, rate, lq, bg, s.a)
                allf[o] = evaluate(&allp[o, 0], fit)
                evals += 1
                if allf[o] > best_f:
                    best_f = allf[o]
                    memcpy(&best[0], &allp[o, 0], n)
                if allf[o] == fit.opt:
                    success = True
                if success or evals >= budget:
                    done = True
                    break
            if done:
                break
            select(&allf[0], L, mu, fmax, s.b, s.c, s.d, bg)
            for i in range(mu):
                memcpy(&tmp[i, 0], &allp[s.b[i], 0], n)
                tmpf[i] = allf[s.b[i]]
            for i in range(mu):
                memcpy(&allp[i, 0], &tmp[i, 0], n)
                allf[i] = tmpf[i]
            iters += 1
            if nt < tcap:
                tr[nt] = best_f
                nt += 1
    return evals, iters, bool(success), best_arr, best_f, nt


def umda(f, Py_ssize_t n, Py_ssize_t mu, Py_ssize_t lam, double[::1] p,
         int64_t budget, rng, int64_t max_gens, uint8_t[:, ::1] X, int64_t[::1] F,
         uint8_t[::1] best, int64_t best_f):
    """Run up to ``max_gens`` UMDA generations, updating ``p`` in place.

    ``X``/``F`` receive the last sampled population.  Returns
    ``(evals, generations, success, sampled_in_last_generation, best_fitness)``.
    """
    cdef _FitHolder fh = _FitHolder(f, n)
    cdef Fit *fit = &fh.fit
    bgobj = rng.bit_generator
    cdef bitgen_t *bg = _bitgen(bgobj)
    cdef Py_ssize_t i, j, fmax = fit.m, sampled = 0
    cdef _Scratch s = _Scratch(n, mu, fmax + 1, lam)
    cdef int64_t evals = 0, gens = 0
    cdef bint success = False, done = False
    cdef double lo = 1.0 / n, hi = 1.0 - 1.0 / n
    cdef uint8_t *row
    with bgobj.lock, nogil:
        while not done and gens < max_gens:
            sampled = 0
            for i in range(lam):
                row = &X[i, 0]
                for j in range(n):
                    row[j] = bg.next_double(bg.state) < p[j]
                F[i] = evaluate(row, fit)
                evals += 1
                sampled += 1
                if F[i] > best_f:
                    best_f = F[i]
                    memcpy(&best[0], row, n)
                if F[i] == fit.opt:
                    success = True
                if success or evals >= budget:
                    done = True
                    break
            if done:
                break
            select(&F[0], lam, mu, fmax, s.b, s.c, s.d, bg)
            for j in range(n):
                s.a[j] = 0
            for i in range(mu):
                row = &X[s.b[i], 0]
                for j in range(n):
                    s.a[j] += row[j]
            for j in range(n):
                p[j] = clamp(<double>s.a[j] / mu, lo, hi)
            gens += 1
    return evals, gens, bool(success), sampled, best_f


cdef Py_ssize_t pick_min(const double *h, const uint8_t *remaining, Py_ssize_t n,
                         Py_ssize_t *ties, bitgen_t *bg) noexcept nogil:
    cdef Py_ssize_t q, nt = 0
    cdef double hmin = 1e300, lim
    for q in range(n):
        if remaining[q] and h[q] < hmin:
            hmin = h[q]
    lim = hmin + TIE_TOL
    for q in range(n):
        if remaining[q] and h[q] <= lim:
            ties[nt] = q
            nt += 1
    if nt == 1:
        return ties[0]
    return ties[<Py_ssize_t>(bg.next_double(bg.state) * nt)]


def mimic(f, Py_ssize_t n, Py_ssize_t mu, Py_ssize_t lam, Py_ssize_t[::1] order,
          double[::1] root, double[:, ::1] cond, int64_t budget, rng, int64_t max_gens,
          uint8_t[:, ::1] X, int64_t[::1] F, uint8_t[::1] best, int64_t best_f):
    """MIMIC counterpart of :func:`umda`; the chain lives in ``order``/``root``/``cond``."""
    cdef _FitHolder fh = _FitHolder(f, n)
    cdef Fit *fit = &fh.fit
    bgobj = rng.bit_generator
    cdef bitgen_t *bg = _bitgen(bgobj)
    cdef Py_ssize_t i, j, q, prev, fmax = fit.m, sampled = 0, n0, n1
    cdef _Scratch s = _Scratch(n, mu, fmax + 1, lam)
    cdef _Scratch s2 = _Scratch(n, n, n, 1)
    h_arr = np.empty(n, dtype=np.float64)
    rem_arr = np.empty(n, dtype=np.uint8)
    cdef double[::1] h = h_arr
    cdef uint8_t[::1] remaining = rem_arr
    cdef int64_t evals = 0, gens = 0
    cdef bint success = False, done = False
    cdef double lo = 1.0 / n, hi = 1.0 - 1.0 / n, w0, w1
    cdef uint8_t *row
    cdef uint8_t bit
    cdef Py_ssize_t *counts = s2.a
    cdef Py_ssize_t *ones1 = s2.b
    cdef Py_ssize_t *ties = s2.c
    with bgobj.lock, nogil:
        while not done and gens < max_gens:
            sampled = 0
            for i in range(lam):
                row = &X[i, 0]
                bit = bg.next_double(bg.state) < root[0]
                row[order[0]] = bit
                for j in range(1, n):
                    bit = bg.next_double(bg.state) < cond[j - 1, bit]
                    row[order[j]] = bit
                F[i] = evaluate(row, fit)
                evals += 1
                sampled += 1
                if F[i] > best_f:
                    best_f = F[i]
                    memcpy(&best[0], row, n)
                if F[i] == fit.opt:
                    success = True
                if success or evals >= budget:
                    done = True
                    break
            if done:
                break
            select(&F[0], lam, mu, fmax, s.b, s.c, s.d, bg)
            for j in range(n):
                counts[j] = 0
                remaining[j] = 1
            for i in range(mu):
                row = &X[s.b[i], 0]
                for j in range(n):
                    counts[j] += row[j]
            for j in range(n):
                h[j] = entropy(<double>counts[j] / mu)
            prev = pick_min(&h[0], &remaining[0], n, ties, bg)
            remaining[prev] = 0
            order[0] = prev
            root[0] = clamp(<double>counts[prev] / mu, lo, hi)
            for j in range(1, n):
                for q in range(n):
                    ones1[q] = 0
                n1 = 0
                for i in range(mu):
                    row = &X[s.b[i], 0]
                    if row[prev]:
                        n1 += 1
                        for q in range(n):
                            ones1[q] += row[q]
                n0 = mu - n1
                w0 = <double>n0 / mu
                w1 = <double>n1 / mu
                for q in range(n):
                    if not remaining[q]:
                        continue
                    h[q] = 0.0
                    if n0:
                        h[q] = h[q] + w0 * entropy(<double>(counts[q] - ones1[q]) / n0)
                    if n1:
                        h[q] = h[q] + w1 * entropy(<double>ones1[q] / n1)
                q = pick_min(&h[0], &remaining[0], n, ties, bg)
                remaining[q] = 0
                order[j] = q
                cond[j - 1, 0] = clamp(<double>(counts[q] - ones1[q]) / n0, lo, hi) if n0 else 0.5
                cond[j - 1, 1] = clamp(<double>ones1[q] / n1, lo, hi) if n1 else 0.5
                prev = q
            gens += 1
    return evals, gens, bool(success), sampled, best_f
