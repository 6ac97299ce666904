"""Norm catalog on R^n.

Every norm here is described by an immutable spec object. Evaluation is
vectorised over the leading axes, so ``spec.norm(X)`` accepts a single
vector of shape ``(n,)`` or a stack of shape ``(k, n)``.

Catalog
-------
``Lp(p, dim)``
    ``(sum |x_i|^p)^(1/p)``; ``p = math.inf`` is the max norm. ``p = 1`` and
    ``p = inf`` are routed to the non-smooth (piecewise linear) code paths.
``WeightedLp(p, weights)``
    ``(sum w_i |x_i|^p)^(1/p)``, and ``max_i w_i |x_i|`` for ``p = inf``.
``Quadratic(A)``
    ``sqrt(x^T A x)`` for symmetric positive-definite ``A``.
``KTBlend(lam)``
    ``max{ |x|_2, lam * |x|_inf }`` on R^2 with ``1 < lam < sqrt(2)``: unit
    ball is the disk cut by the square ``|x_i| <= 1/lam``; uniformly
    non-square, not strictly convex.
``Polyhedral(functionals)``
    ``max_i |<a_i, x>|``; the row set is symmetrised on construction.
``Stadium(c)``
    Gauge of the convex hull of the two unit disks centred at ``(+-c, 0)``.

Stadium gauge
-------------
The unit ball is ``{p : dist(p, [-c, c] x {0}) <= 1}``. For ``(x, y)`` the
gauge is the smallest ``t > 0`` with ``dist((x, y), t*[-c, c] x {0}) <= t``:

* flat branch, ``|x| <= c|y|`` (nearest segment point interior): ``t = |y|``;
* round branch, otherwise: ``t`` is the positive root of
  ``(1 - c^2) t^2 + 2 c |x| t - (x^2 + y^2) = 0``, evaluated as
  ``t = (x^2 + y^2) / (c|x| + sqrt(c^2 x^2 + (1 - c^2)(x^2 + y^2)))``.

The two branches meet with matching value and gradient at ``|x| = c|y|``, so
the gauge is C^1 away from the origin: the junction points ``(+-c, +-1)`` are
extreme but not exposed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

INF = math.inf

# Relative tolerance for deciding which pieces of a max-type norm are active.
TIE_RTOL = 1e-12


def as_vector(x, dim: Optional[int] = None) -> np.ndarray:
    """Validate and return ``x`` as a read-only 1-D float array."""
    v = np.array(x, dtype=float).reshape(-1) if np.ndim(x) == 0 else np.array(x, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ValueError(f"expected a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite coordinates")
    if dim is not None and v.size != dim:
        raise ValueError(f"dimension mismatch: vector has dim {v.size}, norm has dim {dim}")
    v.setflags(write=False)
    return v


def conjugate_exponent(p: float) -> float:
    if p == 1:
        return INF
    if p == INF:
        return 1.0
    return p / (p - 1.0)


def _sign_vectors(n: int) -> np.ndarray:
    return np.array(list(itertools.product((1.0, -1.0), repeat=n)))


def _active(values: np.ndarray, top: np.ndarray) -> np.ndarray:
    return values >= top[..., None] - TIE_RTOL * np.abs(top[..., None])


def _pieces(values: np.ndarray, dirs: np.ndarray, active: np.ndarray):
    """One-sided derivatives of a max of linear pieces (max/min over the active set)."""
    gp = np.where(active, dirs, -np.inf).max(axis=-1)
    gm = np.where(active, dirs, np.inf).min(axis=-1)
    return gp, gm


class NormSpec:
    """Base class for catalog norms.

    Subclasses implement the vectorised primitives; the module-level
    functions (:func:`evaluate`, :func:`sample_sphere`, ...) validate inputs
    and call them.
    """

    dim: int
    smooth: bool = False
    strictly_convex: bool = False
    piecewise_linear: bool = False

    def norm(self, X) -> np.ndarray:
        raise NotImplementedError

    def directional(self, X, Y):
        """One-sided Gateaux derivatives ``(G+, G-)`` at nonzero rows of ``X``."""
        raise NotImplementedError

    def support(self, X) -> np.ndarray:
        """A deterministic norming functional: ``f(x) = |x|``, ``|f|_* = 1``."""
        raise NotImplementedError

    def dual_norm(self, F) -> np.ndarray:
        raise NotImplementedError

    def duality_map(self, F) -> np.ndarray:
        """Closed-form representer ``x`` with ``f(y) = g(x, y)``; smooth strictly convex norms only."""
        raise NotImplementedError(f"no closed-form duality map for {self.label()}")

    def dual_spec(self) -> "NormSpec":
        """The dual norm as a catalog spec, when it belongs to the catalog."""
        raise NotImplementedError(f"dual of {self.label()} is not in the catalog")

    def facets(self) -> Optional[np.ndarray]:
        """Rows ``a_i`` with ``|x| = max_i <a_i, x>`` for piecewise linear norms."""
        return None

    def vertices(self) -> Optional[np.ndarray]:
        return None

    def candidates(self) -> np.ndarray:
        """Distinguished unit-sphere points (vertices, kinks, junctions) used to seed searches."""
        v = self.vertices()
        return np.empty((0, self.dim)) if v is None else v

    def label(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.label()


def _fmt(v: float) -> str:
    return "inf" if v == INF else repr(float(v))


@dataclass(frozen=True)
class Lp(NormSpec):
    p: float
    dim: int

    def __post_init__(self):
        p = float(self.p)
        if math.isnan(p) or p < 1:
            raise ValueError(f"p must lie in [1, inf], got {self.p}")
        if int(self.dim) < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def smooth(self) -> bool:
        return 1 < self.p < INF or self.dim == 1

    @property
    def strictly_convex(self) -> bool:
        return 1 < self.p < INF or self.dim == 1

    @property
    def piecewise_linear(self) -> bool:
        return self.p in (1.0, INF)

    def norm(self, X):
        A = np.abs(np.asarray(X, dtype=float))
        if self.p == INF:
            return A.max(axis=-1)
        if self.p == 1:
            return A.sum(axis=-1)
        m = A.max(axis=-1)
        safe = np.where(m > 0, m, 1.0)
        return m * ((A / safe[..., None]) ** self.p).sum(axis=-1) ** (1.0 / self.p)

    def directional(self, X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        if self.p == 1:
            base = (np.sign(X) * Y).sum(axis=-1)
            extra = np.where(X == 0, np.abs(Y), 0.0).sum(axis=-1)
            return base + extra, base - extra
        if self.p == INF:
            A = np.abs(X)
            return _pieces(A, np.sign(X) * Y, _active(A, A.max(axis=-1)))
        G = (self.support(X) * Y).sum(axis=-1)
        return G, G

    def support(self, X):
        X = np.asarray(X, dtype=float)
        if self.p == 1:
            return np.sign(X)
        if self.p == INF:
            A = np.abs(X)
            act = _active(A, A.max(axis=-1))
            return np.sign(X) * act / act.sum(axis=-1, keepdims=True)
        U = X / self.norm(X)[..., None]
        return np.abs(U) ** (self.p - 1) * np.sign(U)

    def dual_norm(self, F):
        return Lp(conjugate_exponent(self.p), self.dim).norm(F)

    def dual_spec(self):
        return Lp(conjugate_exponent(self.p), self.dim)

    def duality_map(self, F):
        if not 1 < self.p < INF:
            return super().duality_map(F)
        F = np.asarray(F, dtype=float)
        q = conjugate_exponent(self.p)
        D = Lp(q, self.dim).norm(F)
        safe = np.where(D > 0, D, 1.0)[..., None]
        U = F / safe
        return safe * np.abs(U) ** (q - 1) * np.sign(U)

    def facets(self):
        if self.p == INF:
            eye = np.eye(self.dim)
            return np.vstack([eye, -eye])
        if self.p == 1:
            return _sign_vectors(self.dim)
        return None

    def vertices(self):
        return Lp(conjugate_exponent(self.p), self.dim).facets()

    def label(self):
        return f"lp:{_fmt(self.p)}:dim={self.dim}"


class _LinearImage(NormSpec):
    """Norm of the form ``x -> |T x|_base`` for an invertible ``T``."""

    _base: Lp
    _T: np.ndarray
    _Tinv: np.ndarray

    @property
    def smooth(self):
        return self._base.smooth

    @property
    def strictly_convex(self):
        return self._base.strictly_convex

    @property
    def piecewise_linear(self):
        return self._base.piecewise_linear

    def norm(self, X):
        return self._base.norm(np.asarray(X, dtype=float) @ self._T.T)

    def directional(self, X, Y):
        return self._base.directional(np.asarray(X, dtype=float) @ self._T.T,
                                      np.asarray(Y, dtype=float) @ self._T.T)

    def support(self, X):
        return self._base.support(np.asarray(X, dtype=float) @ self._T.T) @ self._T

    def dual_norm(self, F):
        return self._base.dual_norm(np.asarray(F, dtype=float) @ self._Tinv)

    def duality_map(self, F):
        return self._base.duality_map(np.asarray(F, dtype=float) @ self._Tinv) @ self._Tinv.T

    def facets(self):
        f = self._base.facets()
        return None if f is None else f @ self._T

    def vertices(self):
        v = self._base.vertices()
        return None if v is None else v @ self._Tinv.T


@dataclass(frozen=True)
class WeightedLp(_LinearImage):
    p: float
    weights: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size < 1 or not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("weights must be finite and positive")
        base = Lp(self.p, w.size)
        scale = w if base.p == INF else w ** (1.0 / base.p)
        object.__setattr__(self, "p", base.p)
        object.__setattr__(self, "weights", tuple(float(v) for v in w))
        object.__setattr__(self, "_base", base)
        object.__setattr__(self, "_T", np.diag(scale))
        object.__setattr__(self, "_Tinv", np.diag(1.0 / scale))

    @property
    def dim(self):
        return len(self.weights)

    def dual_spec(self):
        # |f|_* = |f / s|_q with s = w^(1/p), i.e. weights w^(-q/p) for finite q
        q = conjugate_exponent(self.p)
        w = np.asarray(self.weights)
        if self.p == 1:
            return WeightedLp(INF, tuple(1.0 / w))
        if self.p == INF:
            return WeightedLp(1.0, tuple(1.0 / w))
        return WeightedLp(q, tuple(w ** (-q / self.p)))

    def label(self):
        return f"wlp:{_fmt(self.p)}:w=" + ",".join(repr(w) for w in self.weights)


@dataclass(frozen=True)
class Quadratic(_LinearImage):
    A: tuple
    source: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise ValueError("A must be a non-empty square matrix")
        if not np.all(np.isfinite(A)) or not np.allclose(A, A.T, rtol=1e-12, atol=1e-14):
            raise ValueError("A must be finite and symmetric")
        try:
            L = np.linalg.cholesky(A)
        except np.linalg.LinAlgError:
            raise ValueError("A must be positive definite") from None
        object.__setattr__(self, "A", tuple(tuple(float(v) for v in row) for row in A))
        object.__setattr__(self, "_base", Lp(2.0, A.shape[0]))
        object.__setattr__(self, "_T", L.T)
        object.__setattr__(self, "_Tinv", np.linalg.inv(L.T))

    @property
    def dim(self):
        return len(self.A)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.A)

    def dual_spec(self):
        Ainv = np.linalg.inv(self.matrix)
        return Quadratic((Ainv + Ainv.T) / 2)

    def label(self):
        return f"quad:@{self.source}" if self.source else "quad:" + repr([list(r) for r in self.A])


@dataclass(frozen=True)
class KTBlend(NormSpec):
    lam: float
    dim: int = field(default=2, init=False)

    def __post_init__(self):
        lam = float(self.lam)
        if not 1 < lam < math.sqrt(2):
            raise ValueError(f"λ must lie in (1, √2), got {self.lam}")
        object.__setattr__(self, "lam", lam)

    def _parts(self, X):
        X = np.asarray(X, dtype=float)
        e = np.hypot(X[..., 0], X[..., 1])
        m = self.lam * np.abs(X).max(axis=-1)
        N = np.maximum(e, m)
        tie = TIE_RTOL * N
        return X, e, m, N, e >= N - tie, m >= N - tie

    def norm(self, X):
        return self._parts(X)[3]

    def directional(self, X, Y):
        X, e, m, N, on_disk, on_square = self._parts(X)
        Y = np.asarray(Y, dtype=float)
        safe = np.where(e > 0, e, 1.0)[..., None]
        ge = (X / safe * Y).sum(axis=-1)
        sp, sm = Lp(INF, 2).directional(X, Y)
        gp = np.maximum(np.where(on_disk, ge, -np.inf), np.where(on_square, self.lam * sp, -np.inf))
        gm = np.minimum(np.where(on_disk, ge, np.inf), np.where(on_square, self.lam * sm, np.inf))
        return gp, gm

    def support(self, X):
        X, e, m, N, on_disk, on_square = self._parts(X)
        safe = np.where(e > 0, e, 1.0)[..., None]
        f = on_disk[..., None] * (X / safe) + on_square[..., None] * self.lam * Lp(INF, 2).support(X)
        return f / (on_disk.astype(float) + on_square)[..., None]

    def corners(self) -> np.ndarray:
        """The eight points where the circle meets the square's sides."""
        a = 1.0 / self.lam
        b = math.sqrt(1.0 - a * a)
        pts = [(sa * a, sb * b) for sa in (1, -1) for sb in (1, -1)]
        pts += [(sb * b, sa * a) for sa in (1, -1) for sb in (1, -1)]
        return np.array(pts)

    def dual_norm(self, F):
        # Extreme points of the ball: disk arcs and the eight corners.
        F = np.asarray(F, dtype=float)
        r = np.hypot(F[..., 0], F[..., 1])
        safe = np.where(r > 0, r, 1.0)
        arc_ok = self.lam * np.abs(F).max(axis=-1) / safe <= 1.0
        corner = (F @ self.corners().T).max(axis=-1)
        return np.where(arc_ok, r, np.maximum(corner, 0.0))

    def candidates(self):
        return self.corners()

    def label(self):
        return f"kt:{self.lam!r}"


@dataclass(frozen=True)
class Polyhedral(NormSpec):
    functionals: tuple
    source: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        R = np.atleast_2d(np.asarray(self.functionals, dtype=float))
        if R.ndim != 2 or R.size == 0:
            raise ValueError("functionals must be a non-empty list of coefficient rows")
        if not np.all(np.isfinite(R)):
            raise ValueError("functionals must be finite")
        if np.any(np.abs(R).max(axis=1) == 0):
            raise ValueError("functionals must be nonzero")
        rows = []
        for r in np.vstack([R, 0.0 - R]):
            if not any(np.array_equal(r, s) for s in rows):
                rows.append(r)
        R = np.array(rows)
        if np.linalg.matrix_rank(R) < R.shape[1]:
            raise ValueError("functionals must span R^n (norm would vanish on a nonzero vector)")
        object.__setattr__(self, "functionals", tuple(tuple(float(v) for v in r) for r in R))
        object.__setattr__(self, "_R", R)
        object.__setattr__(self, "_V", self._enumerate_vertices(R))

    piecewise_linear = True

    @property
    def dim(self):
        return len(self.functionals[0])

    @staticmethod
    def _enumerate_vertices(R: np.ndarray) -> np.ndarray:
        # Each vertex of {x : R x <= 1} solves n linearly independent active rows.
        n = R.shape[1]
        found = []
        for idx in itertools.combinations(range(len(R)), n):
            S = R[list(idx)]
            if abs(np.linalg.det(S)) < 1e-12:
                continue
            v = np.linalg.solve(S, np.ones(n))
            if np.all(R @ v <= 1 + 1e-9) and not any(np.allclose(v, w, atol=1e-12) for w in found):
                found.append(v)
        return np.array(found)

    def norm(self, X):
        return (np.asarray(X, dtype=float) @ self._R.T).max(axis=-1)

    def directional(self, X, Y):
        V = np.asarray(X, dtype=float) @ self._R.T
        return _pieces(V, np.asarray(Y, dtype=float) @ self._R.T, _active(V, V.max(axis=-1)))

    def support(self, X):
        V = np.asarray(X, dtype=float) @ self._R.T
        act = _active(V, V.max(axis=-1))
        return (act @ self._R) / act.sum(axis=-1, keepdims=True)

    def dual_norm(self, F):
        return (np.asarray(F, dtype=float) @ self._V.T).max(axis=-1)

    def facets(self):
        return self._R.copy()

    def vertices(self):
        return self._V.copy()

    def label(self):
        return f"poly:@{self.source}" if self.source else "poly:" + repr([list(r) for r in self.functionals])


@dataclass(frozen=True)
class Stadium(NormSpec):
    c: float
    dim: int = field(default=2, init=False)

    smooth = True

    def __post_init__(self):
        c = float(self.c)
        if not 0 < c < 1:
            raise ValueError(f"c must lie in (0, 1), got {self.c}")
        object.__setattr__(self, "c", c)

    def _gauge(self, X):
        X = np.asarray(X, dtype=float)
        ax, ay = np.abs(X[..., 0]), np.abs(X[..., 1])
        r2 = ax * ax + ay * ay
        c = self.c
        denom = c * ax + np.sqrt(c * c * ax * ax + (1 - c * c) * r2)
        t_round = r2 / np.where(denom > 0, denom, 1.0)
        flat = ax <= c * ay
        return X, ax, flat, np.where(flat, ay, t_round)

    def norm(self, X):
        return self._gauge(X)[3]

    def support(self, X):
        X, ax, flat, t = self._gauge(X)
        c = self.c
        Ft = 2 * (1 - c * c) * t + 2 * c * ax
        Ft = np.where(Ft > 0, Ft, 1.0)
        gx = np.where(flat, 0.0, 2 * np.sign(X[..., 0]) * (ax - c * t) / Ft)
        gy = np.where(flat, np.sign(X[..., 1]), 2 * X[..., 1] / Ft)
        return np.stack([gx, gy], axis=-1)

    def directional(self, X, Y):
        G = (self.support(X) * np.asarray(Y, dtype=float)).sum(axis=-1)
        return G, G

    def dual_norm(self, F):
        F = np.asarray(F, dtype=float)
        return self.c * np.abs(F[..., 0]) + np.hypot(F[..., 0], F[..., 1])

    def candidates(self):
        c = self.c
        return np.array([(c, 1.0), (-c, 1.0), (c, -1.0), (-c, -1.0)])

    def label(self):
        return f"stadium:{self.c!r}"


# -- operations ---------------------------------------------------------------


def evaluate(spec: NormSpec, x) -> float:
    """``|x|`` under ``spec``."""
    return float(spec.norm(as_vector(x, spec.dim)))


def sample_sphere(spec: NormSpec, count: int, seed: int) -> np.ndarray:
    """``count`` points of the unit sphere of ``spec``, one per row.

    Isotropic Gaussian directions normalised by the spec norm. The output is
    a pure function of ``(spec, count, seed)`` and the first ``k`` rows do not
    depend on ``count``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((count, spec.dim))
    bad = np.flatnonzero(np.abs(G).max(axis=1) < 1e-12)
    while bad.size:
        G[bad] = rng.standard_normal((bad.size, spec.dim))
        bad = bad[np.abs(G[bad]).max(axis=1) < 1e-12]
    V = G / spec.norm(G)[:, None]
    # a second pass removes the last-ulp drift of the first division
    return V / spec.norm(V)[:, None]


def equiv_bounds(spec1: NormSpec, spec2: NormSpec, count: int = 10_000, seed: int = 0):
    """Sampled ``(m, M)`` with ``m |x|_1 <= |x|_2 <= M |x|_1``.

    Both values are attained on samples, so ``m`` over-estimates the true
    lower constant and ``M`` under-estimates the true upper one.
    """
    if spec1.dim != spec2.dim:
        raise ValueError(f"dimension mismatch: {spec1.dim} vs {spec2.dim}")
    V = sample_sphere(spec1, count, seed)
    ratio = spec2.norm(V) / spec1.norm(V)
    return float(ratio.min()), float(ratio.max())
