"""Norm angles and the angular-equivalence constant.

The norm angle from ``x`` to ``y`` is ``theta in [0, pi]`` with
``cos theta = g(x, y) / (|x| |y|)``. Two norms are angularly equivalent
when ``tan(theta_2 / 2) <= C tan(theta_1 / 2)`` for all nonzero pairs, with
``tan(pi / 2) = +inf``.

Ratio conventions for ``tan(theta_2/2) / tan(theta_1/2)`` on the extended
half-line: ``0/0 = 1``, ``inf/inf = 1``, ``t/0 = inf`` and ``inf/t = inf``
for finite ``t > 0`` (``inf/0 = inf``), ``0/t = 0`` and ``t/inf = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _search
from ._random import derive_seed
from .gfunctional import g, g_many
from .norms import NormSpec, as_vector, sample_sphere

CLAMP_TOL = 1e-12
DEFAULT_CAP = 1e6
# Pairs closer than this (or closer to antipodal) are excluded from the
# constant search: there 1 -+ cos(theta) falls to the rounding level of
# double arithmetic for norms whose sphere flattens.
DEFAULT_MIN_SEPARATION = 1e-3


def _clamp_cos(c):
    c = np.asarray(c, dtype=float)
    if np.any(np.abs(c) > 1 + CLAMP_TOL):
        raise FloatingPointError(f"cos(theta) outside [-1, 1] beyond {CLAMP_TOL}: {c}")
    return np.clip(c, -1.0, 1.0)


def tan_half(cos_theta):
    """``tan(theta/2) = sqrt((1 - cos) / (1 + cos))``, ``+inf`` at ``cos = -1``."""
    c = np.asarray(cos_theta, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(c <= -1.0, np.inf, np.sqrt((1.0 - c) / (1.0 + c)))
    return out if out.ndim else float(out)


def ratio_from_tans(t1, t2):
    """``t2 / t1`` with the module's conventions at 0 and infinity."""
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = t2 / t1
    r = np.where((t1 == 0) & (t2 == 0), 1.0, r)
    r = np.where(np.isinf(t1) & np.isinf(t2), 1.0, r)
    r = np.where((t1 == 0) & (t2 > 0), np.inf, r)
    r = np.where(np.isinf(t1) & np.isfinite(t2), 0.0, r)
    return r if r.ndim else float(r)


@dataclass(frozen=True)
class AngleReport:
    cos_theta: float
    theta: float
    tan_half: float

    def to_dict(self) -> dict:
        return {"cos_theta": self.cos_theta, "theta": self.theta, "tan_half": self.tan_half}


def cos_many(spec: NormSpec, X, Y) -> np.ndarray:
    """Vectorised ``cos theta(x, y)`` over rows; rows must be nonzero."""
    return _clamp_cos(g_many(spec, X, Y) / (spec.norm(X) * spec.norm(Y)))


def cos_angle(spec: NormSpec, x, y) -> AngleReport:
    x = as_vector(x, spec.dim)
    y = as_vector(y, spec.dim)
    if not np.any(x) or not np.any(y):
        raise ValueError("norm angles are defined for nonzero vectors only")
    c = float(_clamp_cos(g(spec, x, y).g / (float(spec.norm(x)) * float(spec.norm(y)))))
    return AngleReport(c, math.acos(c), tan_half(c))


def ae_ratio(spec1: NormSpec, spec2: NormSpec, x, y) -> float:
    """``tan(theta_2(x, y)/2) / tan(theta_1(x, y)/2)``."""
    if spec1.dim != spec2.dim:
        raise ValueError(f"dimension mismatch: {spec1.dim} vs {spec2.dim}")
    return ratio_from_tans(cos_angle(spec1, x, y).tan_half, cos_angle(spec2, x, y).tan_half)


def ae_ratio_many(spec1: NormSpec, spec2: NormSpec, X, Y) -> np.ndarray:
    return ratio_from_tans(tan_half(cos_many(spec1, X, Y)), tan_half(cos_many(spec2, X, Y)))


@dataclass(frozen=True)
class EquivEstimate:
    """Witnessed lower bound for the angular-equivalence constant.

    ``C_lower`` is the ratio attained by ``witness_pair``; ``diverged`` means
    no finite constant up to ``cap`` was found, which is evidence, not proof,
    of non-equivalence. ``at_separation_floor`` flags a witness sitting on the
    ``min_separation`` boundary: the supremum is then approached by nearly
    parallel (or antiparallel) pairs and may be larger than reported.
    """

    C_lower: float
    witness_pair: tuple
    diverged: bool
    samples_used: int
    refine_iters: int
    cap: float
    sample_max: float
    min_separation: float
    at_separation_floor: bool

    def to_dict(self) -> dict:
        return {
            "C_lower": self.C_lower,
            "witness_pair": [list(map(float, v)) for v in self.witness_pair],
            "diverged": self.diverged,
            "samples_used": self.samples_used,
            "refine_iters": self.refine_iters,
            "cap": self.cap,
            "sample_max": self.sample_max,
            "min_separation": self.min_separation,
            "at_separation_floor": self.at_separation_floor,
        }


def estimate_constant(ratio_fn, sep_norm, project, X, Y, refine_iters, cap, min_separation,
                      starts=1):
    """Shared engine: max of ``ratio_fn`` over sampled pairs, then hill climbing.

    ``sep_norm`` measures pair separation and ``project`` maps points back to
    the sampling sphere.
    """
    def feasible(S):
        a, b = S[..., 0, :], S[..., 1, :]
        return (sep_norm(a - b) >= min_separation) & (sep_norm(a + b) >= min_separation)

    def objective(S):
        return ratio_fn(S[..., 0, :], S[..., 1, :])

    pairs = np.stack([X, Y], axis=1)
    vals = np.where(feasible(pairs), objective(pairs), -np.inf)
    sample_max = float(vals.max())
    best_state, best_val = pairs[int(np.argmax(vals))], sample_max
    if refine_iters > 0 and best_val < np.inf:
        for i in _search.best_starts(vals, starts):
            state, val, _ = _search.climb(objective, project, pairs[i], refine_iters,
                                          feasible=feasible)
            if val > best_val:
                best_state, best_val = state, val
    x, y = best_state
    # the reported constant is recomputed at the witness so it is attained exactly
    C = float(ratio_fn(x[None], y[None])[0])
    floor = bool(min(float(sep_norm(x - y)), float(sep_norm(x + y))) < 1.01 * min_separation)
    return C, (x, y), sample_max, floor


def estimate_ae_constant(spec1: NormSpec, spec2: NormSpec, samples: int = 10_000, seed: int = 0,
                         refine_iters: int = 200, cap: float = DEFAULT_CAP,
                         min_separation: float = DEFAULT_MIN_SEPARATION) -> EquivEstimate:
    """Lower bound on the smallest ``C`` with ``tan(theta_2/2) <= C tan(theta_1/2)``.

    Pairs are drawn from the unit sphere of ``spec1`` (two independent
    sub-streams of ``seed``), the best pair is refined by coordinate-wise hill
    climbing on the product of spheres.
    """
    if spec1.dim != spec2.dim:
        raise ValueError(f"dimension mismatch: {spec1.dim} vs {spec2.dim}")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if not cap > 1:
        raise ValueError("cap must exceed 1")
    X = sample_sphere(spec1, samples, derive_seed(seed, "ae", "x"))
    Y = sample_sphere(spec1, samples, derive_seed(seed, "ae", "y"))
    C, pair, smax, floor = estimate_constant(
        lambda A, B: ae_ratio_many(spec1, spec2, A, B),
        spec1.norm,
        lambda P: P / spec1.norm(P)[:, None],
        X, Y, refine_iters, cap, min_separation,
    )
    return EquivEstimate(C, pair, C > cap, samples, refine_iters, cap, smax, min_separation, floor)
