"""Pure-Python twins of the compiled run loops in ``_core.pyx``.

Same names, signatures, return layouts and random-stream consumption.
Used when the extension is not built, when ``EDABENCH_BACKEND=pure``, and
for custom fitness callables the compiled kernels cannot evaluate.
"""
from __future__ import annotations

import math

import numpy as np

from .models import (ChainModel, clamp, mimic_fit, mimic_sample_many, random_bits,
                     select_indices)


def mutate(x: np.ndarray, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Flip each bit independently with probability ``rate``.

    Flip positions are generated by geometric skips, one ``rng.random()`` per
    flip plus one, so the cost is proportional to the number of flips.
    """
    y = x.copy()
    n = y.size
    if rate >= 1.0:
        return y ^ 1
    lq = math.log1p(-rate)
    pos = -1
    while True:
        g = math.floor(math.log(1.0 - rng.random()) / lq)
        if pos + 1 + g >= n:
            return y
        pos += 1 + g
        y[pos] ^= 1


def crossover(a: np.ndarray, b: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    mask = random_bits(rng, a.size).astype(bool)
    return np.where(mask, a, b).astype(np.uint8)


def _optimum(f, n):
    opt = f.optimum(n)
    return -1 if opt is None else opt


def one_plus_one(f, n, rate, budget, rng, trace=None):
    f.check_length(n)
    opt = _optimum(f, n)
    cap = 0 if trace is None else trace.shape[0]
    nt = 0
    x = random_bits(rng, n)
    fx = f(x)
    evals, iters = 1, 0
    success = fx == opt
    while not success and evals < budget:
        y = mutate(x, rate, rng)
        fy = f(y)
        evals += 1
        iters += 1
        if fy >= fx:
            x, fx = y, fy
            success = fx == opt
        if nt < cap:
            trace[nt] = fx
            nt += 1
    return evals, iters, bool(success), x, fx, nt


def _initial_population(f, n, mu, budget, rng, opt, rows):
    """Evaluate up to ``mu`` random individuals into ``rows``; stop on optimum or budget."""
    best, best_f = None, -1
    evals = 0
    fit = np.empty(rows.shape[0], dtype=np.int64)
    for i in range(mu):
        rows[i] = random_bits(rng, n)
        fit[i] = f(rows[i])
        evals += 1
        if fit[i] > best_f:
            best, best_f = rows[i].copy(), fit[i]
        if fit[i] == opt or evals >= budget:
            return evals, fit, best, best_f, True
    return evals, fit, best, best_f, False


def comma(f, n, mu, lam, rate, pc, budget, rng, trace=None):
    f.check_length(n)
    opt = _optimum(f, n)
    cap = 0 if trace is None else trace.shape[0]
    nt = 0
    pop = np.empty((mu, n), dtype=np.uint8)
    evals, popf, best, best_f, done = _initial_population(f, n, mu, budget, rng, opt, pop)
    iters = 0
    off = np.empty((lam, n), dtype=np.uint8)
    offf = np.empty(lam, dtype=np.int64)
    while not done:
        for o in range(lam):
            if pc >= 1.0:
                do_x = True
            elif pc > 0.0:
                do_x = rng.random() < pc
            else:
                do_x = False
            a = int(rng.random() * mu)
            if do_x:
                b = int(rng.random() * mu)
                child = crossover(pop[a], pop[b], rng)
            else:
                child = pop[a]
            off[o] = mutate(child, rate, rng)
            offf[o] = f(off[o])
            evals += 1
            if offf[o] > best_f:
                best, best_f = off[o].copy(), offf[o]
            if offf[o] == opt or evals >= budget:
                done = True
                break
        if done:
            break
        idx = select_indices(offf, mu, rng)
        pop = off[idx].copy()
        popf = offf[idx].copy()
        iters += 1
        if nt < cap:
            trace[nt] = popf.max()
            nt += 1
    return evals, iters, bool(best_f == opt), best, int(best_f), nt


def plus(f, n, mu, lam, rate, budget, rng, trace=None):
    f.check_length(n)
    opt = _optimum(f, n)
    cap = 0 if trace is None else trace.shape[0]
    nt = 0
    allp = np.empty((mu + lam, n), dtype=np.uint8)
    evals, fit0, best, best_f, done = _initial_population(f, n, mu, budget, rng, opt, allp)
    allf = np.empty(mu + lam, dtype=np.int64)
    allf[:mu] = fit0[:mu]
    iters = 0
    while not done:
        for o in range(mu, mu + lam):
            a = int(rng.random() * mu)
            allp[o] = mutate(allp[a], rate, rng)
            allf[o] = f(allp[o])
            evals += 1
            if allf[o] > best_f:
                best, best_f = allp[o].copy(), allf[o]
            if allf[o] == opt or evals >= budget:
                done = True
                break
        if done:
            break
        idx = select_indices(allf, mu, rng)
        allp[:mu] = allp[idx]
        allf[:mu] = allf[idx]
        iters += 1
        if nt < cap:
            trace[nt] = best_f
            nt += 1
    return evals, iters, bool(best_f == opt), best, int(best_f), nt


def _score_generation(f, X, F, opt, best, best_f):
    """Evaluate sampled rows; return (rows evaluated, hit optimum, best fitness).

    Evaluation stops at the first optimum.  Built-in functions are scored as
    a block and truncated, which is indistinguishable; custom callables are
    called row by row so that no call happens after the optimum.
    """
    if f.native:
        F[:] = f.evaluate_many(X)
        hits = np.flatnonzero(F == opt) if opt >= 0 else ()
        stop = int(hits[0]) + 1 if len(hits) else X.shape[0]
    else:
        stop = X.shape[0]
        hits = ()
        for i in range(X.shape[0]):
            F[i] = f(X[i])
            if F[i] == opt:
                stop, hits = i + 1, (i,)
                break
    i = int(np.argmax(F[:stop]))
    if F[i] > best_f:
        best[:] = X[i]
        best_f = int(F[i])
    return stop, len(hits) > 0, best_f


def umda(f, n, mu, lam, p, budget, rng, max_gens, X, F, best, best_f):
    f.check_length(n)
    opt = _optimum(f, n)
    evals = gens = sampled = 0
    success = False
    while gens < max_gens:
        rows = min(lam, budget - evals)
        X[:rows] = (rng.random((rows, n)) < p).astype(np.uint8)
        sampled, success, best_f = _score_generation(f, X[:rows], F[:rows], opt, best, best_f)
        evals += sampled
        if success or evals >= budget:
            break
        idx = select_indices(F, mu, rng)
        p[:] = clamp(X[idx].sum(axis=0, dtype=np.int64) / mu, n)
        gens += 1
    return evals, gens, success, sampled, best_f


def mimic(f, n, mu, lam, order, root, cond, budget, rng, max_gens, X, F, best, best_f):
    f.check_length(n)
    opt = _optimum(f, n)
    evals = gens = sampled = 0
    success = False
    model = ChainModel(order, root[0], cond)
    while gens < max_gens:
        rows = min(lam, budget - evals)
        X[:rows] = mimic_sample_many(model, rows, rng)
        sampled, success, best_f = _score_generation(f, X[:rows], F[:rows], opt, best, best_f)
        evals += sampled
        if success or evals >= budget:
            break
        idx = select_indices(F, mu, rng)
        model = mimic_fit(X[idx], n, rng)
        order[:] = model.order
        root[0] = model.root_p
        cond[:] = model.cond_p
        gens += 1
    return evals, gens, success, sampled, best_f

