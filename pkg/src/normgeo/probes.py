"""Detectors for geometric properties of a unit ball.

Every probe is one-sided. ``WITNESS_FOUND`` carries a witness that
reproduces the reported value on re-evaluation; ``NO_WITNESS_FOUND`` only
records that the search came back empty. Searches sample the unit sphere,
add the spec's distinguished points (vertices, kinks), and refine the best
starts by feasible hill climbing, so reported values are attained.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _search
from ._random import derive_seed, substream
from .angles import cos_many, tan_half
from .gfunctional import g_many
from .norms import NormSpec, as_vector, sample_sphere

DEFAULT_SAMPLES = 10_000
DEFAULT_REFINE = 200
DEFAULT_TOL = 1e-7
SPHERE_TOL = 1e-9
# Ball membership slack for decomposition witnesses; rounding only.
MEMBER_SLACK = 1e-14
# Half-lengths tried when looking for a segment through a boundary point.
SEGMENT_RADII = tuple(10.0 ** -k for k in range(6))


class Verdict(str, enum.Enum):
    WITNESS_FOUND = "witness-found"
    NO_WITNESS_FOUND = "no-witness-found"
    EXPOSED = "exposed"
    NOT_EXPOSED = "not-exposed"
    INCONCLUSIVE = "inconclusive"


@dataclass
class ProbeReport:
    property: str
    verdict: Verdict
    value: Optional[float] = None
    witness: Optional[dict] = None
    config: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "property": self.property,
            "verdict": self.verdict.value,
            "value": self.value,
            "witness": self.witness,
            "config": self.config,
            "details": self.details,
        }


def _project(spec):
    return lambda P: P / spec.norm(P)[:, None]


def _candidate_pairs(spec: NormSpec, limit: int = 4096) -> np.ndarray:
    C = spec.candidates()
    if len(C) < 2:
        return np.empty((0, 2, spec.dim))
    i, j = np.where(~np.eye(len(C), dtype=bool))
    pairs = np.stack([C[i], C[j]], axis=1)
    return pairs[:limit]


def _sample_pairs(spec, samples, seed, tag):
    X = sample_sphere(spec, samples, derive_seed(seed, tag, "x"))
    Y = sample_sphere(spec, samples, derive_seed(seed, tag, "y"))
    return np.concatenate([_candidate_pairs(spec), np.stack([X, Y], axis=1)])


def _pair_search(spec, objective, feasible, samples, refine_iters, seed, tag, starts=4, extra=None):
    """Maximise ``objective`` over feasible pairs on the unit sphere."""
    pairs = _sample_pairs(spec, samples, seed, tag)
    if extra is not None and len(extra):
        pairs = np.concatenate([np.asarray(extra, dtype=float).reshape(-1, 2, spec.dim), pairs])
    ok = feasible(pairs) if feasible is not None else np.ones(len(pairs), bool)
    vals = np.where(ok, objective(pairs), -np.inf)
    best = int(np.argmax(vals))
    best_state, best_val = pairs[best], float(vals[best])
    if not np.isfinite(best_val) and best_val < 0:
        return None, -np.inf
    if refine_iters > 0:
        for i in _search.best_starts(vals, starts):
            if not np.isfinite(vals[i]):
                continue
            state, val, _ = _search.climb(objective, _project(spec), pairs[i], refine_iters,
                                          feasible=feasible)
            if val > best_val:
                best_state, best_val = state, val
    return best_state, best_val


def _pair_witness(pair) -> dict:
    return {"x": pair[0].tolist(), "y": pair[1].tolist()}


def _check_eps(eps):
    if not 0 < eps < 2:
        raise ValueError(f"ε must lie in (0, 2), got {eps}")


def _on_sphere(spec, x0):
    x0 = as_vector(x0, spec.dim)
    if abs(float(spec.norm(x0)) - 1.0) > SPHERE_TOL:
        raise ValueError(f"x0 must lie on the unit sphere (|x0| = {float(spec.norm(x0))!r})")
    return x0


# -- convexity ------------------------------------------------------------------


def strict_convexity_probe(spec: NormSpec, samples: int = DEFAULT_SAMPLES, seed: int = 0,
                           tol: float = DEFAULT_TOL, refine_iters: int = DEFAULT_REFINE,
                           separation: float = 1e-2) -> ProbeReport:
    """Look for distinct unit vectors whose midpoint stays on the sphere.

    Maximises ``|(x + y)/2|`` over unit pairs with ``|x - y| >= separation``.
    For smooth norms it also maximises ``cos theta(x, y)`` over the same pairs:
    ``g(x, y) = |x||y|`` for a non-proportional pair is the equality case that
    strict convexity rules out.
    """
    def mid(S):
        return spec.norm((S[:, 0] + S[:, 1]) / 2)

    def sep(S):
        return spec.norm(S[:, 0] - S[:, 1]) >= separation

    pair, value = _pair_search(spec, mid, sep, samples, refine_iters, seed, "strict")
    found = value >= 1 - tol
    details = {"midpoint_deficiency": 1 - value}
    witness = _pair_witness(pair) if found else None
    if spec.smooth:
        def cosine(S):
            return cos_many(spec, S[:, 0], S[:, 1])
        cpair, cval = _pair_search(spec, cosine, sep, samples, refine_iters, seed, "strict-eq")
        eq_found = cval >= 1 - tol
        details["equality_case"] = {"max_cos": cval, "witness": _pair_witness(cpair) if eq_found else None}
        if eq_found and not found:
            found, witness = True, _pair_witness(cpair)
    return ProbeReport(
        "strict-convexity",
        Verdict.WITNESS_FOUND if found else Verdict.NO_WITNESS_FOUND,
        value, witness,
        {"samples": samples, "seed": seed, "tol": tol, "refine_iters": refine_iters,
         "separation": separation},
        details,
    )


def uc_modulus(spec: NormSpec, eps: float, samples: int = DEFAULT_SAMPLES,
               refine_iters: int = DEFAULT_REFINE, seed: int = 0, tol: float = DEFAULT_TOL,
               starts=None) -> ProbeReport:
    """Upper bound on ``delta(eps) = inf {1 - |(x+y)/2| : x, y in S, |x - y| >= eps}``.

    ``starts`` may supply extra feasible pairs, e.g. the witness found for a
    larger ``eps``, which keeps estimates along a grid monotone.
    """
    _check_eps(eps)

    def objective(S):
        return spec.norm((S[:, 0] + S[:, 1]) / 2) - 1

    def feasible(S):
        return spec.norm(S[:, 0] - S[:, 1]) >= eps

    pair, val = _pair_search(spec, objective, feasible, samples, refine_iters, seed, "uc",
                             extra=starts)
    if pair is None:
        return ProbeReport("uc-modulus", Verdict.NO_WITNESS_FOUND, None, None,
                           {"eps": eps, "samples": samples, "seed": seed, "refine_iters": refine_iters})
    delta = -val
    return ProbeReport(
        "uc-modulus",
        Verdict.WITNESS_FOUND if delta <= tol else Verdict.NO_WITNESS_FOUND,
        delta, _pair_witness(pair),
        {"eps": eps, "samples": samples, "seed": seed, "refine_iters": refine_iters, "tol": tol},
        {"separation": float(spec.norm(pair[0] - pair[1]))},
    )


def uc_modulus_grid(spec: NormSpec, eps_values, samples: int = DEFAULT_SAMPLES,
                    refine_iters: int = DEFAULT_REFINE, seed: int = 0) -> list:
    """Reports for each ``eps``, sorted by ``eps``; values are nonincreasing as ``eps`` decreases.

    The grid is walked from the largest ``eps`` down and each witness seeds
    the next search (a pair feasible for ``eps`` is feasible for any smaller one).
    """
    out = []
    carry = None
    for eps in sorted(eps_values, reverse=True):
        rep = uc_modulus(spec, eps, samples, refine_iters, seed, starts=carry)
        if rep.witness is not None:
            carry = np.array([[rep.witness["x"], rep.witness["y"]]])
        out.append(rep)
    return out[::-1]


# -- uniform non-squareness -----------------------------------------------------


def nonsquare_sup(spec: NormSpec, samples: int = DEFAULT_SAMPLES, refine_iters: int = DEFAULT_REFINE,
                  seed: int = 0, tol: float = DEFAULT_TOL) -> ProbeReport:
    """Lower bound on ``sup min(|(x+y)/2|, |(x-y)/2|)`` over unit pairs.

    The norm is uniformly non-square iff the supremum is below 1; a value
    within ``tol`` of 1 is reported as a squareness witness.
    """
    def objective(S):
        return np.minimum(spec.norm((S[:, 0] + S[:, 1]) / 2), spec.norm((S[:, 0] - S[:, 1]) / 2))

    pair, val = _pair_search(spec, objective, None, samples, refine_iters, seed, "unsq")
    found = val >= 1 - tol
    return ProbeReport(
        "nonsquare", Verdict.WITNESS_FOUND if found else Verdict.NO_WITNESS_FOUND,
        val, _pair_witness(pair),
        {"samples": samples, "seed": seed, "tol": tol, "refine_iters": refine_iters},
    )


def nonsq_angle_inf(spec: NormSpec, eps: float, samples: int = DEFAULT_SAMPLES,
                    refine_iters: int = DEFAULT_REFINE, seed: int = 0,
                    tol: float = DEFAULT_TOL) -> ProbeReport:
    """Upper bound on ``inf tan(theta(x, y)/2)`` over unit pairs with ``|x - y| >= eps``.

    A value near 0 is evidence against uniform non-squareness; a value
    bounded away from 0 is consistent with it.
    """
    _check_eps(eps)

    def objective(S):
        return -tan_half(cos_many(spec, S[:, 0], S[:, 1]))

    def feasible(S):
        return spec.norm(S[:, 0] - S[:, 1]) >= eps

    pair, val = _pair_search(spec, objective, feasible, samples, refine_iters, seed, "unsq-angle")
    value = -val
    return ProbeReport(
        "nonsquare-angle", Verdict.WITNESS_FOUND if value <= tol else Verdict.NO_WITNESS_FOUND,
        value, _pair_witness(pair) if pair is not None else None,
        {"eps": eps, "samples": samples, "seed": seed, "tol": tol, "refine_iters": refine_iters},
    )


# -- extreme and exposed points -------------------------------------------------


def exposed_check(spec: NormSpec, x0, samples: int = DEFAULT_SAMPLES,
                  refine_iters: int = DEFAULT_REFINE, seed: int = 0, tol: float = DEFAULT_TOL,
                  starts: int = 16) -> ProbeReport:
    """Classify ``x0`` through the maximisers of ``y -> g(x0, y)`` on the sphere.

    ``x0`` is exposed iff ``x0`` is the only unit ``y`` with ``g(x0, y) = 1``.
    The best ``starts`` points (``x0`` itself, the spec's distinguished points
    and sphere samples) are hill-climbed, and the local maximisers reaching
    ``1 - tol`` are collected; all within ``tol``
    of ``x0`` gives ``EXPOSED``, one farther than ``10 tol`` gives
    ``NOT_EXPOSED`` (with that maximiser as witness), anything in between is
    ``INCONCLUSIVE``.
    """
    x0 = _on_sphere(spec, x0)

    def objective(S):
        Y = S[:, 0]
        return g_many(spec, np.broadcast_to(x0, Y.shape), Y)

    pts = np.concatenate([x0[None], spec.candidates(),
                          sample_sphere(spec, samples, derive_seed(seed, "exposed"))])
    S = pts[:, None, :]
    vals = objective(S)
    ends = []
    for i in _search.best_starts(vals, starts):
        state, val, _ = _search.climb(objective, _project(spec), S[i], refine_iters)
        ends.append((state[0], val))
    maximisers = np.array([y for y, v in ends if v >= 1 - tol])
    dist = spec.norm(maximisers - x0)
    far = int(np.argmax(dist))
    if dist[far] > 10 * tol:
        verdict, witness = Verdict.NOT_EXPOSED, {"y": maximisers[far].tolist(),
                                                 "g": float(objective(maximisers[far][None, None])[0])}
    elif dist[far] <= tol:
        verdict, witness = Verdict.EXPOSED, None
    else:
        verdict, witness = Verdict.INCONCLUSIVE, {"y": maximisers[far].tolist()}
    return ProbeReport(
        "exposed", verdict, float(max(v for _, v in ends)), witness,
        {"x0": x0.tolist(), "samples": samples, "seed": seed, "tol": tol, "refine_iters": refine_iters},
        {"maximisers": int(len(maximisers)), "max_distance": float(dist[far])},
    )


def _vertex_test(spec, x0):
    """Exact extremality test on a polyhedral ball ``{x : A x <= 1}``."""
    A = spec.facets()
    vals = A @ x0
    act = vals >= 1 - 1e-9
    n = spec.dim
    if np.linalg.matrix_rank(A[act], tol=1e-9) == n:
        return None
    # a direction inside every active facet; inactive facets bound the step
    _, _, Vt = np.linalg.svd(A[act]) if act.any() else (None, None, np.eye(n))
    d = Vt[-1]
    d = d / np.abs(d).max()
    slope = np.abs(A[~act] @ d)
    room = (1 - vals[~act])[slope > 0] / slope[slope > 0]
    r = 0.5 * min(1.0, room.min() if room.size else 1.0)
    return x0 + r * d, x0 - r * d


def extreme_check(spec: NormSpec, x0, samples: int = DEFAULT_SAMPLES,
                  refine_iters: int = DEFAULT_REFINE, seed: int = 0,
                  tol: float = DEFAULT_TOL) -> ProbeReport:
    """Look for ``y != z`` in the unit ball with ``(y + z)/2 = x0``.

    Polyhedral balls get an exact vertex test. Otherwise ``y = x0 + r d``,
    ``z = x0 - r d`` is searched over directions ``d`` for each half-length
    ``r`` in ``SEGMENT_RADII`` (all well above ``tol``), minimising
    ``max(|y|, |z|) - 1``. A witness means ``x0`` is not extreme.
    """
    x0 = _on_sphere(spec, x0)
    config = {"x0": x0.tolist(), "samples": samples, "seed": seed, "tol": tol,
              "refine_iters": refine_iters}
    if spec.piecewise_linear and spec.facets() is not None:
        seg = _vertex_test(spec, x0)
        if seg is None:
            return ProbeReport("extreme", Verdict.NO_WITNESS_FOUND, None, None, config, {"exact": True})
        y, z = seg
        excess = float(max(spec.norm(y), spec.norm(z)) - 1)
        return ProbeReport("extreme", Verdict.WITNESS_FOUND, excess,
                           {"y": y.tolist(), "z": z.tolist()}, config, {"exact": True})

    rng = substream(seed, "extreme")
    D = rng.standard_normal((min(samples, 4096), spec.dim))
    D /= np.linalg.norm(D, axis=1, keepdims=True)

    def unit(P):
        return P / np.linalg.norm(P, axis=1, keepdims=True)

    best = (np.inf, None, None)
    for r in SEGMENT_RADII:
        if 2 * r <= tol:
            continue

        def objective(S, r=r):
            d = S[:, 0]
            return -(np.maximum(spec.norm(x0 + r * d), spec.norm(x0 - r * d)) - 1)

        vals = objective(D[:, None, :])
        i = int(np.argmax(vals))
        state, val, _ = _search.climb(objective, unit, D[i][None], refine_iters)
        if -val < best[0]:
            best = (-val, r, state[0])
    excess, r, d = best
    found = excess <= MEMBER_SLACK
    witness = {"y": (x0 + r * d).tolist(), "z": (x0 - r * d).tolist()} if found else None
    return ProbeReport("extreme", Verdict.WITNESS_FOUND if found else Verdict.NO_WITNESS_FOUND,
                       excess, witness, config, {"exact": False, "radius": r})


# -- Dunkl-Williams -------------------------------------------------------------


def dunkl_williams_check(spec: NormSpec, samples: int = DEFAULT_SAMPLES, seed: int = 0,
                         tol: float = 1e-9) -> ProbeReport:
    """Worst slack of ``4|x - y| / (|x| + |y|) - |x/|x| - y/|y||`` on random pairs."""
    rng = substream(seed, "dunkl-williams")
    X = rng.standard_normal((samples, spec.dim)) * np.exp(rng.uniform(-3, 3, (samples, 1)))
    Y = rng.standard_normal((samples, spec.dim)) * np.exp(rng.uniform(-3, 3, (samples, 1)))
    # a share of nearly parallel pairs, where the inequality is tightest
    k = samples // 4
    Y[:k] = X[:k] * np.exp(rng.uniform(-1, 1, (k, 1))) + 1e-3 * Y[:k]
    nx, ny = spec.norm(X), spec.norm(Y)
    lhs = spec.norm(X / nx[:, None] - Y / ny[:, None])
    rhs = 4 * spec.norm(X - Y) / (nx + ny)
    slack = rhs - lhs
    i = int(np.argmin(slack))
    worst = float(slack[i])
    return ProbeReport(
        "dunkl-williams",
        Verdict.WITNESS_FOUND if worst < -tol else Verdict.NO_WITNESS_FOUND,
        worst, {"x": X[i].tolist(), "y": Y[i].tolist(), "lhs": float(lhs[i]), "rhs": float(rhs[i])},
        {"samples": samples, "seed": seed, "tol": tol},
    )
