"""Derivative-free hill climbing over tuples of points on a sphere.

A state is a ``(k, n)`` array of ``k`` points. Each round tries every
coordinate move ``+-step`` of every point, re-projects the moved point and
keeps the best strict improvement; a round without improvement halves the
step. Moves that leave the feasible set are discarded, so every accepted
iterate is feasible and the reported value is attained.
"""

from __future__ import annotations

import numpy as np


def climb(objective, project, state, iters, step=0.1, feasible=None, min_step=1e-13,
          movable=None):
    """Maximise ``objective`` from ``state``.

    ``objective(S)`` maps a batch ``(m, k, n)`` to ``(m,)`` values,
    ``project(P)`` maps ``(m, n)`` points back onto the sphere and
    ``feasible(S)`` returns a ``(m,)`` mask. ``movable`` lists which of the
    ``k`` points may move (default all).

    Returns ``(state, value, rounds_run)``.
    """
    state = np.array(state, dtype=float)
    k, n = state.shape
    movable = range(k) if movable is None else movable
    value = float(objective(state[None])[0])
    moves = [(i, j, s) for i in movable for j in range(n) for s in (1.0, -1.0)]
    rounds = 0
    for rounds in range(1, iters + 1):
        if step < min_step or value == np.inf:
            break
        cand = np.repeat(state[None], len(moves), axis=0)
        for m, (i, j, s) in enumerate(moves):
            cand[m, i, j] += s * step
        for i in movable:
            cand[:, i] = project(cand[:, i])
        vals = objective(cand)
        ok = np.isfinite(vals) | (vals == np.inf)
        if feasible is not None:
            ok &= feasible(cand)
        vals = np.where(ok, vals, -np.inf)
        best = int(np.argmax(vals))
        if vals[best] > value:
            state, value = cand[best], float(vals[best])
            step *= 1.5
        else:
            step *= 0.5
    return state, value, rounds


def best_starts(values, count):
    """Indices of the ``count`` largest finite-or-+inf values, best first."""
    values = np.where(np.isnan(values), -np.inf, values)
    order = np.argsort(-values, kind="stable")
    return order[:count]
