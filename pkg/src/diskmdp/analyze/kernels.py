"""Compiled inner loops for block-wise value iteration and graph fixpoints.

All kernels take the random-access arrays of one partition split into
plain columns, plus ``pos``: for every branch, the position of its target
in a value (or mask) array that holds the partition's own entries first,
followed by those of its successor partitions.
"""
from __future__ import annotations

import numba
import numpy as np

# graph fixpoint rules
EXISTS = 0        # some branch of some transition hits the set
ALL_CHOICES = 1   # every transition (at least one) has a branch in the set
STAY_AND_HIT = 2  # some transition stays inside Z and has a branch in the set

RANGE_SLACK = 1e-12


@numba.njit(cache=True)
def gauss_seidel(tc, ft, bc, fb, prob, rew, pos, active, vals, maximize, reward, eps,
                 max_sweeps):
    """In-place sweeps over the own states until the relative error drops below ``eps``.

    Returns ``(sweeps, moved, decreases, out_of_range, converged)`` where
    ``moved`` records whether any sweep had error >= eps.
    """
    n = tc.shape[0]
    sweeps = 0
    moved = False
    decreases = 0
    out_of_range = 0
    while True:
        err = 0.0
        for s in range(n):
            if not active[s]:
                continue
            nt = tc[s]
            if nt == 0:
                continue  # deadlock keeps its value
            t0 = ft[s]
            best = 0.0
            for t in range(t0, t0 + nt):
                acc = 0.0
                b0 = fb[t]
                for b in range(b0, b0 + bc[t]):
                    if reward:
                        acc += prob[b] * (rew[b] + vals[pos[b]])
                    else:
                        acc += prob[b] * vals[pos[b]]
                if t == t0:
                    best = acc
                elif maximize:
                    if acc > best:
                        best = acc
                elif acc < best:
                    best = acc
            old = vals[s]
            if best < old:
                decreases += 1
            if not reward and (best < 0.0 or best > 1.0 + RANGE_SLACK):
                out_of_range += 1
            if best > 0.0 and best != old:
                if np.isinf(best):
                    d = 1.0
                else:
                    d = abs(best - old) / max(old, best)
                if d > err:
                    err = d
            vals[s] = best
        sweeps += 1
        if err >= eps:
            moved = True
        else:
            return sweeps, moved, decreases, out_of_range, True
        if sweeps >= max_sweeps:
            return sweeps, moved, decreases, out_of_range, False


@numba.njit(cache=True)
def grow_set(tc, ft, bc, fb, pos, y, z, blocked, rule):
    """Add own states to ``y`` by ``rule`` until nothing changes; True if ``y`` grew."""
    n = tc.shape[0]
    grew_any = False
    while True:
        grew = False
        for s in range(n):
            if y[s] or blocked[s]:
                continue
            nt = tc[s]
            t0 = ft[s]
            if rule == ALL_CHOICES:
                add = nt > 0
            else:
                add = False
            for t in range(t0, t0 + nt):
                b0 = fb[t]
                hit = False
                inside = True
                for b in range(b0, b0 + bc[t]):
                    if y[pos[b]]:
                        hit = True
                    if not z[pos[b]]:
                        inside = False
                if rule == EXISTS:
                    if hit:
                        add = True
                        break
                elif rule == ALL_CHOICES:
                    if not hit:
                        add = False
                        break
                else:
                    if hit and inside:
                        add = True
                        break
            if add:
                y[s] = 1
                grew = True
        if not grew:
            return grew_any
        grew_any = True
