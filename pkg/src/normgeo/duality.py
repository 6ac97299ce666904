"""Dual norms, support functionals, Birkhoff orthogonality and representers.

Functionals are coefficient vectors under the standard pairing
``f(y) = sum f_i y_i``. On R^n every norm is reflexive, so for a smooth,
strictly convex norm each ``f`` has a unique representer ``x`` with
``f(y) = g(x, y)`` for all ``y`` and ``|x| = |f|_*``. It is built from the
nearest point of the hyperplane ``ker f`` to a vector ``y`` with
``f(y) != 0``: with ``z0`` that nearest point, ``x0 = y - z0`` is
Birkhoff-orthogonal to ``ker f`` and ``x = f(x0) / |x0|^2 * x0``.

On the dual space the g-functional is ``g*(phi, psi) = g(x_psi, x_phi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _search
from ._random import derive_seed, substream
from .angles import (DEFAULT_CAP, DEFAULT_MIN_SEPARATION, EquivEstimate, estimate_constant,
                     ratio_from_tans, tan_half, _clamp_cos)
from .gfunctional import g, g_many
from .norms import NormSpec, as_vector

INNER_TOL = 1e-13
MAX_ITER = 20_000


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Functional:
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", as_vector(self.coeffs))

    @property
    def dim(self) -> int:
        return self.coeffs.size

    def __call__(self, y) -> float:
        return float(self.coeffs @ np.asarray(y, dtype=float))

    def __mul__(self, alpha: float) -> "Functional":
        return Functional(alpha * self.coeffs)

    __rmul__ = __mul__


def _coeffs(f, dim) -> np.ndarray:
    return as_vector(f.coeffs if isinstance(f, Functional) else f, dim)


@dataclass(frozen=True)
class DualRep:
    f: np.ndarray
    dual_norm: float
    representer: np.ndarray
    residual: float
    iterations: int = 0

    def to_dict(self) -> dict:
        return {"f": self.f.tolist(), "dual_norm": self.dual_norm,
                "representer": self.representer.tolist(), "residual": self.residual,
                "iterations": self.iterations}


# -- dual norm and support functionals --------------------------------------------


def dual_norm(spec: NormSpec, f, samples: int = 4096, refine_iters: int = 200, seed: int = 0,
              method: str = "auto") -> float:
    """``|f|_* = sup {f(y) : |y| = 1}``.

    Every catalog norm has a closed form (conjugate exponent, ``A^-1``,
    vertex maximum, support function of the ball). ``method="numeric"``
    maximises ``f`` over sampled and hill-climbed unit vectors instead, which
    gives a lower bound.
    """
    f = _coeffs(f, spec.dim)
    if method == "auto":
        try:
            return float(spec.dual_norm(f))
        except NotImplementedError:
            method = "numeric"
    if method != "numeric":
        raise ValueError(f"unknown method {method!r}")
    if not np.any(f):
        return 0.0
    rng = substream(seed, "dual-norm")
    G = rng.standard_normal((samples, spec.dim))
    Y = np.vstack([spec.candidates(), G / spec.norm(G)[:, None], f / spec.norm(f)])
    vals = Y @ f
    i = int(np.argmax(vals))
    state, val, _ = _search.climb(lambda S: S[:, 0] @ f, lambda P: P / spec.norm(P)[:, None],
                                  Y[i][None], refine_iters)
    return float(max(val, vals[i]))


def support_functional(spec: NormSpec, x0, checks: int = 100, seed: int = 0,
                       tol: float = 1e-9) -> Functional:
    """A functional supporting the unit ball at ``x0 / |x0|``.

    Smooth norms give the gradient; piecewise norms a fixed selection (the
    uniform average of the active pieces, e.g. ``sgn(x0)`` on l^1 and the
    averaged signed argmax coordinates on l^inf). The returned ``f`` has
    ``f(x0) = |x0|`` and ``|f|_* = 1`` and is checked against
    ``G-(u, y) <= f(y) <= G+(u, y)`` on random ``y``.
    """
    x0 = as_vector(x0, spec.dim)
    if not np.any(x0):
        raise ValueError("x0 must be nonzero")
    u = x0 / spec.norm(x0)
    f = spec.support(u)
    Y = substream(seed, "support").standard_normal((checks, spec.dim))
    gp, gm = spec.directional(np.broadcast_to(u, Y.shape), Y)
    fy = Y @ f
    scale = tol * (1 + np.abs(fy))
    if np.any(fy > gp + scale) or np.any(fy < gm - scale):
        raise RuntimeError(f"support selection fails the derivative sandwich at {x0}")
    if abs(f @ u - 1) > tol or abs(dual_norm(spec, f) - 1) > tol:
        raise RuntimeError(f"support selection is not norming at {x0}")
    return Functional(f)


# -- Birkhoff orthogonality -------------------------------------------------------

_INVPHI = (math.sqrt(5) - 1) / 2


def golden_section(h, a: float, b: float, tol: float = 1e-12, max_iter: int = 500) -> float:
    """Minimiser of a unimodal ``h`` on ``[a, b]``."""
    c, d = b - _INVPHI * (b - a), a + _INVPHI * (b - a)
    fc, fd = h(c), h(d)
    for _ in range(max_iter):
        if b - a <= tol * (1 + abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = h(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = h(d)
    return (a + b) / 2


@dataclass(frozen=True)
class BirkhoffResult:
    orthogonal: bool
    lambda_star: float
    min_norm: float
    g: float
    g_orthogonal: Optional[bool]
    note: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def birkhoff_check(spec: NormSpec, x, y, tol: float = 1e-9) -> BirkhoffResult:
    """Is ``x`` Birkhoff-orthogonal to ``y`` (``|x + l y| >= |x|`` for all ``l``)?

    ``l -> |x + l y|`` is convex and exceeds ``|x|`` once ``|l| > 2|x|/|y|``,
    so a golden-section search on that interval finds the minimiser. For
    smooth norms the answer is compared with ``g(x, y) = 0``; since a norm
    deficit of ``tol`` corresponds to an angular defect of order
    ``sqrt(tol)``, that comparison uses ``|g| <= sqrt(tol) |x||y|``.
    """
    x = as_vector(x, spec.dim)
    y = as_vector(y, spec.dim)
    if not np.any(x):
        raise ValueError("x must be nonzero")
    nx = float(spec.norm(x))
    gxy = g(spec, x, y).g
    if not np.any(y):
        lam, low = 0.0, nx
    else:
        L = 2 * nx / float(spec.norm(y))
        h = lambda t: float(spec.norm(x + t * y))
        lam = golden_section(h, -L, L)
        low = h(lam)
        if nx <= low:
            lam, low = 0.0, nx
    orth = low >= nx - tol
    if spec.smooth:
        g_orth = abs(gxy) <= math.sqrt(tol) * nx * float(spec.norm(y))
        note = "smooth: agrees with g(x, y) = 0" if g_orth == orth else "smooth: DISAGREES with g(x, y) = 0"
    else:
        g_orth = None
        note = "non-smooth: g-characterisation not invoked"
    return BirkhoffResult(bool(orth), float(lam), float(low), float(gxy), g_orth, note)


# -- representers ----------------------------------------------------------------


def _require_smooth_strict(spec: NormSpec):
    if not (spec.smooth and spec.strictly_convex):
        raise ValueError(f"{spec.label()} is not smooth and strictly convex; "
                         "representers are only unique for such norms")


def nearest_in_kernel(spec: NormSpec, f: np.ndarray, y: np.ndarray, c0=None,
                      tol: float = INNER_TOL, max_iter: int = MAX_ITER):
    """``argmin_{z : f(z) = 0} |y - z|`` for a smooth strictly convex norm.

    ``ker f`` is parameterised by an orthonormal basis ``B`` and
    ``c -> |y - c B|^2 / 2`` is minimised by gradient descent with
    Barzilai-Borwein steps and a non-monotone Armijo safeguard, stopping once
    both the step and the objective change drop below ``tol`` (relative to
    ``|y|``). Returns ``(z0, iterations)``.
    """
    n = f.size
    if n == 1:
        return np.zeros(1), 0
    B = np.linalg.svd(f[None])[2][1:]
    scale = max(float(spec.norm(y)), 1e-300)

    def phi(c):
        return 0.5 * float(spec.norm(y - c @ B)) ** 2

    def grad(c):
        v = y - c @ B
        return -(float(spec.norm(v)) * spec.support(v)) @ B.T

    c = np.zeros(n - 1) if c0 is None else np.asarray(c0, dtype=float)
    fc, gc = phi(c), grad(c)
    history = [fc]
    step = 1.0
    for it in range(1, max_iter + 1):
        if not np.any(gc):
            return c @ B, it
        ref = max(history[-10:])
        while True:
            c_new = c - step * gc
            f_new = phi(c_new)
            if f_new <= ref - 1e-4 * step * float(gc @ gc) or step < 1e-30:
                break
            step *= 0.5
        g_new = grad(c_new)
        s, r = c_new - c, g_new - gc
        moved = float(np.abs(s).max())
        improved = abs(fc - f_new)
        c, fc, gc = c_new, f_new, g_new
        history.append(fc)
        if moved < tol * scale and improved < tol * scale * scale:
            return c @ B, it
        sr = float(s @ r)
        step = float(s @ s) / sr if sr > 0 else 1.0
    raise ConvergenceError(f"nearest-point search did not reach tol={tol} in {max_iter} steps")


def riesz_representer(spec: NormSpec, f, tol: float = 1e-6, seed: Optional[int] = None,
                      validate: int = 100) -> DualRep:
    """The unique ``x`` with ``f(y) = g(x, y)`` for all ``y``, by nearest-point projection.

    With ``seed=None`` the projected vector is the coefficient vector of ``f``
    and the search starts at 0; an integer ``seed`` picks a random vector and
    a random start instead (used to probe uniqueness). The result is checked
    on ``validate`` random unit vectors and against the dual norm, and
    :class:`ConvergenceError` is raised if either misses ``tol``.
    """
    _require_smooth_strict(spec)
    f = _coeffs(f, spec.dim)
    if not np.any(f):
        return DualRep(f, 0.0, np.zeros(spec.dim), 0.0)
    if seed is None:
        y, c0 = f.copy(), None
    else:
        rng = substream(seed, "riesz")
        y = rng.standard_normal(spec.dim)
        while abs(f @ y) < 1e-3 * np.linalg.norm(f) * np.linalg.norm(y):
            y = rng.standard_normal(spec.dim)
        c0 = rng.standard_normal(spec.dim - 1)
    z0, iters = nearest_in_kernel(spec, f, y, c0)
    x0 = y - z0
    x = (f @ x0) / float(spec.norm(x0)) ** 2 * x0
    dn = dual_norm(spec, f)
    Y = substream(0, "riesz-validate").standard_normal((validate, spec.dim))
    Y /= spec.norm(Y)[:, None]
    residual = float(np.abs(Y @ f - g_many(spec, np.broadcast_to(x, Y.shape), Y)).max())
    gap = abs(float(spec.norm(x)) - dn)
    if residual > tol or gap > tol:
        raise ConvergenceError(f"representer misses tol={tol}: residual {residual:.3e}, "
                               f"norm gap {gap:.3e}")
    return DualRep(f, dn, x, residual, iters)


def representers(spec: NormSpec, F) -> np.ndarray:
    """Representers of the rows of ``F``: closed form when available, else projection."""
    _require_smooth_strict(spec)
    F = np.atleast_2d(np.asarray(F, dtype=float))
    try:
        return spec.duality_map(F)
    except NotImplementedError:
        return np.array([riesz_representer(spec, f).representer for f in F])


def dual_g(spec: NormSpec, phi, psi, tol: float = 1e-6, check: bool = True) -> float:
    """``g*(phi, psi) = g(x_psi, x_phi)`` with representers from :func:`riesz_representer`.

    With ``check`` and a dual norm in the catalog, the value is compared with
    the g-functional of the dual norm evaluated directly on the coefficient
    vectors.
    """
    phi = _coeffs(phi, spec.dim)
    psi = _coeffs(psi, spec.dim)
    x_phi = riesz_representer(spec, phi, tol).representer
    x_psi = riesz_representer(spec, psi, tol).representer
    value = g(spec, x_psi, x_phi).g if np.any(x_psi) else 0.0
    if check:
        try:
            direct = dual_g_direct(spec, phi, psi)
        except NotImplementedError:
            direct = None
        if direct is not None and abs(direct - value) > 10 * tol * (1 + abs(direct)):
            raise ConvergenceError(f"dual g mismatch: representers give {value}, direct {direct}")
    return value


def dual_g_direct(spec: NormSpec, phi, psi) -> float:
    """g-functional of the dual norm (as a catalog spec) on coefficient vectors."""
    return g(spec.dual_spec(), _coeffs(phi, spec.dim), _coeffs(psi, spec.dim)).g


def dual_cos_many(spec: NormSpec, F, H) -> np.ndarray:
    """Dual norm angle cosines ``g*(phi, psi) / (|phi|_* |psi|_*)`` over rows."""
    XF, XH = representers(spec, F), representers(spec, H)
    return _clamp_cos(g_many(spec, XH, XF) / (spec.dual_norm(F) * spec.dual_norm(H)))


def dual_ae_estimate(spec1: NormSpec, spec2: NormSpec, samples: int = 10_000, seed: int = 0,
                     refine_iters: int = 200, cap: float = DEFAULT_CAP,
                     min_separation: float = DEFAULT_MIN_SEPARATION) -> EquivEstimate:
    """Angular-equivalence estimate for the dual norms.

    Functional pairs are drawn from the dual unit sphere of ``spec1``; for
    each norm ``i`` the quotient ``(1 - g*_i) / (1 + g*_i)`` is formed from
    the normalised dual g-functional ``g*_i(phi, psi) = g_i(x_psi, x_phi)``,
    and ``C`` bounds ``sqrt`` of the quotient ratio, i.e. the dual tan-half
    ratio, so it is directly comparable with the primal constant.
    """
    _require_smooth_strict(spec1)
    _require_smooth_strict(spec2)
    if spec1.dim != spec2.dim:
        raise ValueError(f"dimension mismatch: {spec1.dim} vs {spec2.dim}")

    def draw(tag):
        G = substream(derive_seed(seed, "dual-ae"), tag).standard_normal((samples, spec1.dim))
        return G / spec1.dual_norm(G)[:, None]

    def ratio(F, H):
        return ratio_from_tans(tan_half(dual_cos_many(spec1, F, H)), tan_half(dual_cos_many(spec2, F, H)))

    C, pair, smax, floor = estimate_constant(
        ratio, spec1.dual_norm, lambda P: P / spec1.dual_norm(P)[:, None],
        draw("phi"), draw("psi"), refine_iters, cap, min_separation,
    )
    return EquivEstimate(C, pair, C > cap, samples, refine_iters, cap, smax, min_separation, floor)
