"""One-sided Gateaux derivatives, the g-functional and semi-inner-product checks.

For a norm ``|.|`` and ``x != 0``::

    G+-(x, y) = lim_{t -> 0+-} (|x + t y| - |x|) / t
    g+-(x, y) = |x| G+-(x, y)
    g(x, y)   = (g+(x, y) + g-(x, y)) / 2

``[y, x] := g(x, y)`` is a semi-inner product generating the norm (it is
additive in ``y`` whenever the norm is smooth at ``x``). ``sgn(0) = 0`` is used
throughout, which makes ``g`` on l^1 equal to ``|x|_1 sum sgn(x_i) y_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._random import substream
from .norms import NormSpec, as_vector

ANALYTIC = "analytic"
FINITE_DIFFERENCE = "finite-difference"

T_MIN = 1e-12
_EPS = np.finfo(float).eps


def default_tol(spec: NormSpec) -> float:
    """1e-9 where an analytic path exists (FD is only a cross-check), else 1e-7."""
    return 1e-9 if _has_analytic(spec) else 1e-7


def _has_analytic(spec: NormSpec) -> bool:
    return type(spec).directional is not NormSpec.directional


@dataclass(frozen=True)
class GReport:
    G_plus: Optional[float]
    G_minus: Optional[float]
    g_plus: float
    g_minus: float
    g: float
    method: str
    step_used: Optional[float] = None
    fd_error: Optional[float] = None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def forward_quotient(norm, x: np.ndarray, y: np.ndarray, tol: float, t0: float = 1.0):
    """Right derivative of ``t -> norm(x + t y)`` at 0 by monotone halving.

    For a convex function the quotient ``(|x + t y| - |x|) / t`` is
    nondecreasing in ``t``, so along ``t_k = t0 2^-k`` the quotients decrease
    to ``G+`` and every iterate is an upper bound. Iteration stops when two
    successive quotients differ by less than ``tol``, when the step reaches
    ``T_MIN``, or when the rounding error of the quotient (about
    ``eps |x| / t``) exceeds the last change, since further halving only adds
    noise from then on.

    Returns ``(value, step, delta)`` where ``delta`` is the last change.
    """
    nx = norm(x)
    t = t0
    prev = (norm(x + t * y) - nx) / t
    delta = np.inf
    while t > T_MIN:
        t *= 0.5
        cur = (norm(x + t * y) - nx) / t
        delta = abs(cur - prev)
        noise = 4 * _EPS * (nx + t * norm(y)) / t
        if cur > prev + noise:
            # monotonicity broken by rounding: the previous iterate is the better one
            return prev, 2 * t, delta
        prev = cur
        if delta < tol or delta < noise:
            break
    return prev, t, delta


def gateaux(spec: NormSpec, x, y, tol: Optional[float] = None, method: str = "auto"):
    """``(G+(x, y), G-(x, y))``.

    ``method`` is ``"auto"`` (analytic when the spec has it), ``"analytic"``
    or ``"numeric"`` (monotone one-sided difference quotients).
    """
    x = as_vector(x, spec.dim)
    y = as_vector(y, spec.dim)
    if not np.any(x):
        raise ValueError("G+- is taken at x != 0; use g() for g(0, y) = 0")
    tol = default_tol(spec) if tol is None else tol
    if tol <= 0:
        raise ValueError("tol must be positive")
    if method == "auto":
        method = "analytic" if _has_analytic(spec) else "numeric"
    if method == "analytic":
        gp, gm = spec.directional(x, y)
        gp, gm = float(gp), float(gm)
    elif method == "numeric":
        gp, _, _ = forward_quotient(spec.norm, x, y, tol)
        gm, _, _ = forward_quotient(spec.norm, x, -y, tol)
        gp, gm = float(gp), -float(gm)
    else:
        raise ValueError(f"unknown method {method!r}")
    if not (np.isfinite(gp) and np.isfinite(gm)):
        raise FloatingPointError("non-finite directional derivative")
    return gp, gm


def g(spec: NormSpec, x, y, tol: Optional[float] = None, method: str = "auto") -> GReport:
    """The g-functional with its one-sided parts.

    ``g(0, y) = 0`` by the ``|x|`` prefactor; the derivatives are left unset
    there.
    """
    x = as_vector(x, spec.dim)
    y = as_vector(y, spec.dim)
    if not np.any(x):
        return GReport(None, None, 0.0, 0.0, 0.0, ANALYTIC)
    tol = default_tol(spec) if tol is None else tol
    if method == "auto":
        method = "analytic" if _has_analytic(spec) else "numeric"
    nx = float(spec.norm(x))
    if method == "numeric":
        gp, tp, dp = forward_quotient(spec.norm, x, y, tol)
        gm, tm, dm = forward_quotient(spec.norm, x, -y, tol)
        gp, gm = float(gp), -float(gm)
        return GReport(gp, gm, nx * gp, nx * gm, nx * (gp + gm) / 2, FINITE_DIFFERENCE,
                       step_used=float(max(tp, tm)), fd_error=float(nx * max(dp, dm)))
    gp, gm = gateaux(spec, x, y, tol, method)
    return GReport(gp, gm, nx * gp, nx * gm, nx * (gp + gm) / 2, ANALYTIC)


def g_many(spec: NormSpec, X, Y) -> np.ndarray:
    """Vectorised analytic ``g`` over matching rows of ``X`` and ``Y``."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    nx = spec.norm(X)
    zero = nx == 0
    Xs = np.where(zero[..., None], 1.0, X)
    gp, gm = spec.directional(Xs, Y)
    return np.where(zero, 0.0, nx * (gp + gm) / 2)


def g_parts_many(spec: NormSpec, X, Y):
    """Vectorised ``(g+, g-)``; rows of ``X`` must be nonzero."""
    nx = spec.norm(X)
    gp, gm = spec.directional(X, Y)
    return nx * gp, nx * gm


# -- semi-inner-product axioms --------------------------------------------------


@dataclass
class AxiomResult:
    name: str
    worst: float
    witness: Optional[dict]
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "worst": self.worst, "witness": self.witness, "passed": self.passed}


@dataclass
class SIPReport:
    spec: str
    trials: int
    tol: float
    axioms: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.axioms.values())

    def to_dict(self) -> dict:
        return {"spec": self.spec, "trials": self.trials, "tol": self.tol, "passed": self.passed,
                "axioms": {k: v.to_dict() for k, v in self.axioms.items()}}


def _worst(name, violation, tol, witness_of):
    i = int(np.argmax(violation))
    worst = float(violation[i])
    return AxiomResult(name, worst, witness_of(i) if worst > 0 else None, worst <= tol)


def sip_check(spec: NormSpec, trials: int = 1000, seed: int = 0, tol: float = 1e-8,
              tuples=None) -> SIPReport:
    """Check S1-S5 for ``[y, x] := g(x, y)`` on random tuples.

    * S1  ``g(x, y + z) = g(x, y) + g(x, z)``
    * S2  ``g(x, a y) = a g(x, y)``
    * S3  ``g(x, x) = |x|^2 > 0`` for ``x != 0``
    * S4  ``|g(x, y)| <= |x| |y|``
    * S5  ``g(b x, y) = b g(x, y)``

    Violations are absolute; ``x, y, z`` are unit vectors and the scalars lie
    in ``[-2, 2]``. ``tuples`` optionally adds explicit ``(x, y, z)`` triples
    (e.g. points on a kink) to the random ones.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n = spec.dim
    rng = substream(seed, "sip")
    G = rng.standard_normal((3, trials, n))
    X, Y, Z = (M / spec.norm(M)[:, None] for M in G)
    a = rng.uniform(-2, 2, trials)
    b = rng.uniform(-2, 2, trials)
    if tuples:
        extra = np.array([[as_vector(v, n) for v in t] for t in tuples])
        X, Y, Z = (np.vstack([M, extra[:, k]]) for k, M in enumerate((X, Y, Z)))
        a = np.concatenate([a, np.full(len(extra), 1.5)])
        b = np.concatenate([b, np.full(len(extra), -0.5)])

    def wit(*arrs, **scal):
        def make(i):
            d = {k: v[i].tolist() for k, v in zip("xyz", arrs)}
            d.update({k: float(v[i]) for k, v in scal.items()})
            return d
        return make

    gxy = g_many(spec, X, Y)
    gxz = g_many(spec, X, Z)
    nx, ny = spec.norm(X), spec.norm(Y)
    rep = SIPReport(spec.label(), len(X), tol)
    rep.axioms["S1"] = _worst("S1", np.abs(g_many(spec, X, Y + Z) - gxy - gxz), tol, wit(X, Y, Z))
    rep.axioms["S2"] = _worst("S2", np.abs(g_many(spec, X, a[:, None] * Y) - a * gxy), tol, wit(X, Y, alpha=a))
    gxx = g_many(spec, X, X)
    s3 = np.maximum(np.abs(gxx - nx ** 2), np.where(gxx > 0, 0.0, np.inf))
    rep.axioms["S3"] = _worst("S3", s3, tol, wit(X))
    rep.axioms["S4"] = _worst("S4", np.maximum(np.abs(gxy) - nx * ny, 0.0), tol, wit(X, Y))
    rep.axioms["S5"] = _worst("S5", np.abs(g_many(spec, b[:, None] * X, Y) - b * gxy), tol, wit(X, Y, beta=b))
    return rep


# -- inequalities between G+, G- and norm differences ---------------------------


@dataclass
class SlackReport:
    name: str
    spec: str
    trials: int
    worst_slack: float
    witness: dict
    tol: float

    @property
    def passed(self) -> bool:
        return self.worst_slack >= -self.tol

    def to_dict(self) -> dict:
        return {"name": self.name, "spec": self.spec, "trials": self.trials,
                "worst_slack": self.worst_slack, "witness": self.witness, "tol": self.tol,
                "passed": self.passed}


def _random_rows(spec, trials, seed, tag, k):
    rng = substream(seed, tag)
    M = rng.standard_normal((k, trials, spec.dim)) * np.exp(rng.uniform(-2, 2, (k, trials, 1)))
    return list(M)


def chain_slack(spec: NormSpec, trials: int = 10_000, seed: int = 0, tol: float = 1e-9) -> SlackReport:
    """Worst slack of the chain

    ``-|x||y| <= |x|(|x| - |x - y|) <= g-(x, y) <= g+(x, y) <= |x|(|x + y| - |x|) <= |x||y|``

    over random pairs with ``x != 0`` (scales spread over ``e^[-2, 2]``).
    """
    X, Y = _random_rows(spec, trials, seed, "chain", 2)
    nx, ny = spec.norm(X), spec.norm(Y)
    gp, gm = g_parts_many(spec, X, Y)
    terms = [-nx * ny, nx * (nx - spec.norm(X - Y)), gm, gp, nx * (spec.norm(X + Y) - nx), nx * ny]
    slack = np.min([(b - a) / np.maximum(1.0, nx * ny) for a, b in zip(terms, terms[1:])], axis=0)
    i = int(np.argmin(slack))
    return SlackReport("inequality-chain", spec.label(), trials, float(slack[i]),
                       {"x": X[i].tolist(), "y": Y[i].tolist()}, tol)


def additivity_slack(spec: NormSpec, trials: int = 10_000, seed: int = 0,
                     tol: float = 1e-9) -> SlackReport:
    """Worst slack of ``G+(x, y+z) <= G+(x, y) + G+(x, z)`` and
    ``G-(x, y+z) >= G-(x, y) + G-(x, z)`` over random triples."""
    X, Y, Z = _random_rows(spec, trials, seed, "additivity", 3)
    pyz, myz = spec.directional(X, Y + Z)
    py, my = spec.directional(X, Y)
    pz, mz = spec.directional(X, Z)
    scale = np.maximum(1.0, spec.norm(Y) + spec.norm(Z))
    slack = np.minimum(py + pz - pyz, myz - my - mz) / scale
    i = int(np.argmin(slack))
    return SlackReport("sub-super-additivity", spec.label(), trials, float(slack[i]),
                       {"x": X[i].tolist(), "y": Y[i].tolist(), "z": Z[i].tolist()}, tol)
