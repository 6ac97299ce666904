import math

import numpy as np
import pytest

from normgeo.duality import (ConvergenceError, Functional, birkhoff_check, dual_ae_estimate, dual_g,
                             dual_g_direct, dual_norm, golden_section, riesz_representer,
                             support_functional)
from normgeo.gfunctional import g
from normgeo.norms import INF, KTBlend, Lp, Polyhedral, Quadratic, Stadium, WeightedLp


def test_functional_action():
    f = Functional([1.0, -2.0])
    assert f([3, 1]) == 1.0
    assert (2 * f)([1, 1]) == -2.0 and f.dim == 2
    with pytest.raises(ValueError):
        Functional([1.0, math.inf])


def test_dual_norm_examples():
    assert dual_norm(Lp(3, 2), [1, 1]) == pytest.approx(2 ** (2 / 3), rel=1e-14)
    assert dual_norm(Lp(3, 2), Functional([1, 1])) == pytest.approx(1.587401, abs=1e-6)
    assert dual_norm(Lp(2, 3), [1, 2, 2]) == pytest.approx(3.0)
    assert dual_norm(Lp(1, 2), [2, -1]) == 2.0
    assert dual_norm(Quadratic([[2.0, 0.0], [0.0, 8.0]]), [2, 4]) == pytest.approx(math.sqrt(4 / 2 + 16 / 8))
    with pytest.raises(ValueError, match="dimension"):
        dual_norm(Lp(2, 2), [1, 2, 3])


@pytest.mark.parametrize("spec", [Lp(1, 2), Lp(3, 2), Lp(INF, 3), KTBlend(1.2), Stadium(0.6),
                                  Polyhedral([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]), WeightedLp(1.5, [1.0, 3.0])],
                         ids=lambda s: s.label())
def test_numeric_dual_norm_lower_bound_converges(spec):
    rng = np.random.default_rng(0)
    for f in rng.standard_normal((5, spec.dim)):
        exact = dual_norm(spec, f)
        num = dual_norm(spec, f, method="numeric", samples=4096, refine_iters=200)
        assert num <= exact * (1 + 1e-12)
        assert num >= exact * (1 - 1e-8)


def test_support_functional_examples():
    assert np.allclose(support_functional(Lp(2, 2), [0.6, 0.8]).coeffs, [0.6, 0.8])
    u = np.full(2, 2 ** (-1 / 3))
    f = support_functional(Lp(3, 2), u)
    assert np.allclose(f.coeffs, 2 ** (-2 / 3), rtol=1e-14) and f(u) == pytest.approx(1.0)
    assert np.array_equal(support_functional(Lp(INF, 2), [1, 1]).coeffs, [0.5, 0.5])
    f1 = support_functional(Lp(1, 3), [2, 0, -1])
    assert np.array_equal(f1.coeffs, [1.0, 0.0, -1.0])
    with pytest.raises(ValueError):
        support_functional(Lp(2, 2), [0, 0])


@pytest.mark.parametrize("spec", [Lp(1, 3), Lp(1.5, 3), Lp(INF, 2), KTBlend(1.2), Stadium(0.6),
                                  Quadratic([[2.0, 0.3], [0.3, 1.0]])], ids=lambda s: s.label())
def test_support_sandwich(spec):
    rng = np.random.default_rng(4)
    for x0 in list(rng.standard_normal((10, spec.dim))) + list(spec.candidates()[:2]):
        f = support_functional(spec, 3 * x0)
        assert f(3 * x0) == pytest.approx(3 * float(spec.norm(x0)), rel=1e-12)
        assert dual_norm(spec, f) == pytest.approx(1.0, abs=1e-12)
        for y in rng.standard_normal((20, spec.dim)):
            r = g(spec, x0 / float(spec.norm(x0)), y)
            assert r.G_minus - 1e-12 <= f(y) <= r.G_plus + 1e-12


def test_golden_section():
    assert golden_section(lambda t: (t - 0.3) ** 2, -2, 2) == pytest.approx(0.3, abs=1e-8)


def test_birkhoff_examples():
    r = birkhoff_check(Lp(2, 2), [1, 0], [0, 1])
    assert r.orthogonal and r.lambda_star == 0 and r.g_orthogonal
    r = birkhoff_check(Lp(3, 2), [1, 1], [1, -1])
    assert r.orthogonal and r.g == pytest.approx(0.0, abs=1e-15) and r.g_orthogonal
    r = birkhoff_check(Lp(1, 2), [1, 0], [0, 1])
    assert r.orthogonal and r.g == 0 and r.g_orthogonal is None
    assert r.note.startswith("non-smooth")
    r = birkhoff_check(Lp(2, 2), [1, 0], [1, 1])
    assert not r.orthogonal and r.lambda_star == pytest.approx(-0.5, abs=1e-6)
    with pytest.raises(ValueError):
        birkhoff_check(Lp(2, 2), [0, 0], [1, 0])


def test_birkhoff_agrees_with_g_for_smooth_norms():
    rng = np.random.default_rng(3)
    for spec in (Lp(3, 3), Lp(1.5, 2), Quadratic([[2.0, 0.5], [0.5, 1.0]])):
        for x, z in rng.standard_normal((30, 2, spec.dim)):
            # y in the kernel of the support functional at x is orthogonal to x
            f = spec.support(x)
            y = z - (f @ z) / (f @ f) * f
            r = birkhoff_check(spec, x, y)
            assert r.orthogonal and r.g_orthogonal
            r = birkhoff_check(spec, x, y + 0.3 * x)
            assert not r.orthogonal and not r.g_orthogonal


def test_riesz_examples():
    r = riesz_representer(Lp(2, 2), [3, 4])
    assert np.allclose(r.representer, [3, 4], atol=1e-9)
    r = riesz_representer(Lp(3, 2), [1, 1])
    assert np.allclose(r.representer, 2 ** (1 / 3), rtol=1e-9)
    assert Lp(3, 2).norm(r.representer) == pytest.approx(2 ** (2 / 3), rel=1e-9)
    z = riesz_representer(Lp(3, 2), [0, 0])
    assert z.dual_norm == 0 and np.array_equal(z.representer, [0, 0])


def test_riesz_rejects_nonsmooth():
    for spec in (Lp(1, 2), Lp(INF, 2), KTBlend(1.2), Stadium(0.6)):
        with pytest.raises(ValueError):
            riesz_representer(spec, [1, 0])


def _lp_representer_oracle(p, f):
    # solve f_i = |x|^(2-p) |x_i|^(p-1) sgn(x_i): x_i = c |f_i|^(q-1) sgn(f_i), |x| = |f|_q
    q = p / (p - 1)
    fq = np.sum(np.abs(f) ** q) ** (1 / q)
    v = np.abs(f) ** (q - 1) * np.sign(f)
    return v * fq / np.sum(np.abs(v) ** p) ** (1 / p)


@pytest.mark.parametrize("spec", [Lp(1.5, 4), Lp(3, 3), Lp(4, 5), WeightedLp(3, [1.0, 2.0, 0.5]),
                                  Quadratic([[2.0, 0.5], [0.5, 1.0]])], ids=lambda s: s.label())
def test_riesz_invariants(spec):
    rng = np.random.default_rng(7)
    for f in rng.standard_normal((5, spec.dim)):
        r = riesz_representer(spec, f)
        assert abs(float(spec.norm(r.representer)) - r.dual_norm) <= 1e-6
        assert r.residual <= 1e-6
        other = riesz_representer(spec, f, seed=11)
        assert np.abs(other.representer - r.representer).max() <= 1e-5
        a = rng.uniform(-3, 3)
        scaled = riesz_representer(spec, a * f)
        assert np.allclose(scaled.representer, a * r.representer, atol=1e-6)
        if isinstance(spec, Lp):
            assert np.allclose(r.representer, _lp_representer_oracle(spec.p, f), atol=1e-9)


def test_dual_g_examples():
    rng = np.random.default_rng(1)
    for phi, psi in rng.standard_normal((10, 2, 3)):
        assert dual_g(Lp(2, 3), phi, psi) == pytest.approx(phi @ psi, abs=1e-9)
        assert dual_g(Lp(3, 3), phi, phi) == pytest.approx(dual_norm(Lp(3, 3), phi) ** 2, rel=1e-9)


@pytest.mark.parametrize("p", [1.5, 3.0, 4.0])
def test_dual_g_matches_conjugate_norm(p):
    spec = Lp(p, 3)
    q = p / (p - 1)
    rng = np.random.default_rng(int(p))
    for phi, psi in rng.standard_normal((50, 2, 3)):
        direct = g(Lp(q, 3), phi, psi).g
        assert dual_g(spec, phi, psi, check=False) == pytest.approx(direct, abs=1e-6)
        assert dual_g_direct(spec, phi, psi) == pytest.approx(direct, abs=1e-12)


def test_dual_ae_estimate_identical_norms():
    assert dual_ae_estimate(Lp(2, 2), Lp(2, 2), samples=2000).C_lower == pytest.approx(1.0, abs=1e-12)
    assert dual_ae_estimate(Lp(3, 2), Lp(3, 2), samples=2000).C_lower == pytest.approx(1.0, abs=1e-12)


def test_dual_ae_estimate_rejects_nonsmooth():
    with pytest.raises(ValueError):
        dual_ae_estimate(Lp(1, 2), Lp(2, 2), samples=10)


def test_dual_ae_ratio_grows_near_axes():
    # the dual of l4 is l^(4/3), whose sphere bends sharply at the axes: for
    # nearly parallel functionals there the ratio grows like s^(-1/3)
    from normgeo.duality import dual_cos_many
    from normgeo.angles import ratio_from_tans, tan_half
    s = np.array([1e-2, 1e-4, 1e-6])
    F = np.tile([1.0, 0.0], (3, 1))
    H = np.stack([np.ones(3), s], axis=1)
    r = ratio_from_tans(tan_half(dual_cos_many(Lp(2, 2), F, H)), tan_half(dual_cos_many(Lp(4, 2), F, H)))
    assert np.all(np.diff(r) > 0) and r[-1] > 30
    assert r[-1] / r[0] == pytest.approx(1e4 ** (1 / 3), rel=0.05)


def test_convergence_error_is_runtime_error():
    assert issubclass(ConvergenceError, RuntimeError)


@pytest.mark.parametrize("spec", [Lp(1.5, 3), Lp(4, 2), WeightedLp(3, [1.0, 2.0, 0.5]),
                                  Quadratic([[2.0, 0.5], [0.5, 1.0]])], ids=lambda s: s.label())
def test_closed_form_duality_map_matches_projection(spec):
    F = np.random.default_rng(12).standard_normal((10, spec.dim))
    closed = spec.duality_map(F)
    projected = np.array([riesz_representer(spec, f).representer for f in F])
    assert np.abs(closed - projected).max() <= 1e-8
