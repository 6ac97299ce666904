"""Exit criteria at their stated tolerances; one PASS/FAIL line each in the terminal summary."""

import io
import json
import math
from contextlib import redirect_stdout

import numpy as np
import pytest

import oracles
from normgeo import cli
from normgeo.angles import estimate_ae_constant
from normgeo.duality import dual_ae_estimate, dual_g, dual_g_direct, dual_norm, riesz_representer
from normgeo.gfunctional import additivity_slack, chain_slack, g, sip_check
from normgeo.norms import INF, KTBlend, Lp, Polyhedral, Quadratic, Stadium, WeightedLp
from normgeo.probes import (Verdict, exposed_check, extreme_check, nonsq_angle_inf, nonsquare_sup,
                            strict_convexity_probe, uc_modulus)

pytestmark = pytest.mark.acceptance

CATALOG = [
    Lp(1, 3), Lp(1.5, 3), Lp(2, 2), Lp(3, 4), Lp(4, 2), Lp(INF, 3),
    WeightedLp(3, [1.0, 2.0, 0.5]), WeightedLp(1, [2.0, 1.0]), WeightedLp(INF, [1.0, 3.0]),
    Quadratic([[2.0, 0.5], [0.5, 1.0]]), KTBlend(1.2),
    Polyhedral([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]), Stadium(0.6),
]


def test_01_analytic_vs_finite_difference(record):
    worst = 0.0
    for p in (1, 1.5, 2, 3, 4, INF):
        for dim in (2, 5):
            spec = Lp(p, dim)
            rng = np.random.default_rng([dim, 99 if p == INF else int(10 * p)])
            for x, y in rng.standard_normal((1000, 2, dim)):
                a = g(spec, x, y, method="analytic").g
                n = g(spec, x, y, method="numeric").g
                worst = max(worst, abs(a - n))
    assert record(1, worst <= 1e-6, f"max |g_analytic - g_FD| = {worst:.2e} (<= 1e-6)")


def test_02_inequality_chain(record):
    reps = [chain_slack(spec, trials=10_000, seed=2) for spec in CATALOG]
    worst = min(r.worst_slack for r in reps)
    assert record(2, worst >= -1e-9, f"min slack {worst:.2e} over {len(reps)} specs x 1e4 pairs (>= -1e-9)")


def test_03_sub_super_additivity(record):
    reps = [additivity_slack(spec, trials=10_000, seed=3) for spec in CATALOG]
    worst = min(r.worst_slack for r in reps)
    assert record(3, worst >= -1e-9, f"min slack {worst:.2e} over {len(reps)} specs x 1e4 triples (>= -1e-9)")


def test_04_semi_inner_product_axioms(record):
    l3 = sip_check(Lp(3, 3), trials=1000, seed=4, tol=1e-8)
    x, y, z = [1, 1, 1], [1, 0, 0], [0, 1, 0]
    spec = Lp(INF, 3)
    lhs = g(spec, x, y).g + g(spec, x, z).g
    rhs = g(spec, x, np.add(y, z)).g
    linf = sip_check(spec, trials=100, seed=4, tuples=[(x, y, z)])
    ok = (l3.passed and lhs == 1.0 and rhs == 0.5 and not linf.axioms["S1"].passed
          and linf.axioms["S1"].witness["x"] == x)
    worst = max(a.worst for a in l3.axioms.values())
    assert record(4, ok, f"l3 worst axiom violation {worst:.1e} (<= 1e-8); "
                         f"l_inf S1: g(x,y)+g(x,z) = {lhs}, g(x,y+z) = {rhs}")


def test_05_angular_equivalence_estimator(record):
    a = estimate_ae_constant(Lp(1, 2), Lp(2, 2), samples=10_000, seed=0)
    ok_a = a.diverged and a.C_lower >= 1e3
    rows, ok_b = [], True
    for s1, s2 in ((Lp(2, 2), Lp(4, 2)), (Lp(4, 2), Lp(2, 2))):
        lo = estimate_ae_constant(s1, s2, samples=50_000, seed=0)
        hi = estimate_ae_constant(s1, s2, samples=100_000, seed=0)
        change = abs(hi.C_lower - lo.C_lower) / lo.C_lower
        ok_b &= (not lo.diverged and not hi.diverged and math.isfinite(hi.C_lower) and change < 0.05)
        rows.append(f"{s1.label()}->{s2.label()} C={hi.C_lower:.4g} change={change:.1%} "
                    f"floor={hi.at_separation_floor}")
    detail = f"(a) l1/l2 diverged={a.diverged} ratio={a.C_lower}; (b) " + "; ".join(rows)
    assert record(5, ok_a and ok_b, detail)


def test_06_modulus_of_convexity(record):
    r = uc_modulus(Lp(2, 2), 1.0)
    want = 1 - math.sqrt(1 - 1 / 4)
    assert record(6, abs(r.value - want) <= 1e-3, f"l2 eps=1 delta={r.value:.9f} vs {want:.9f}")


def test_07_non_squareness(record):
    l2 = nonsquare_sup(Lp(2, 2))
    linf = nonsquare_sup(Lp(INF, 2))
    s = Lp(INF, 2)
    x, y = np.array(linf.witness["x"]), np.array(linf.witness["y"])
    wval = min(float(s.norm((x + y) / 2)), float(s.norm((x - y) / 2)))
    square = np.allclose(np.abs(x), 1) and np.allclose(np.abs(y), 1)
    kt = nonsquare_sup(KTBlend(1.2))
    flat = strict_convexity_probe(KTBlend(1.2))
    deficiency = flat.details["midpoint_deficiency"]
    ok = (abs(l2.value - math.sqrt(2) / 2) <= 1e-3 and linf.value >= 1 - 1e-6 and wval == 1.0 and square
          and kt.value <= 0.999 and flat.verdict == Verdict.WITNESS_FOUND and deficiency <= 1e-9)
    assert record(7, ok, f"l2 {l2.value:.6f}; l_inf {linf.value} witness {x.tolist()},{y.tolist()}; "
                         f"kt {kt.value:.4f}, flat-face deficiency {deficiency:.1e}")


def test_08_angle_characterisation(record):
    l2 = nonsq_angle_inf(Lp(2, 2), 1.0)
    linf = nonsq_angle_inf(Lp(INF, 2), 1.0)
    l1 = nonsq_angle_inf(Lp(1, 2), 1.0)
    ok = abs(l2.value - 1 / math.sqrt(3)) <= 1e-3 and linf.value <= 1e-6 and l1.value <= 1e-6
    assert record(8, ok, f"l2 {l2.value:.6f} (1/sqrt3 = {1 / math.sqrt(3):.6f}); "
                         f"l_inf {linf.value:.1e}; l1 {l1.value:.1e}")


def test_09_exposed_extreme_table(record):
    table = [
        (Lp(1, 2), [1, 0], True, None),
        (Lp(INF, 2), [1, 0], False, False),
        (Lp(INF, 2), [1, 1], True, True),
        (Stadium(0.6), [0.6, 1], False, True),
    ]
    ok, parts = True, []
    for spec, x0, exposed, extreme in table:
        e = exposed_check(spec, x0).verdict == Verdict.EXPOSED
        x = extreme_check(spec, x0).verdict == Verdict.NO_WITNESS_FOUND
        oe, ox = oracles.exposed(spec, x0), oracles.extreme(spec, x0)
        ok &= e == exposed == oe and x == ox and (extreme is None or x == extreme)
        parts.append(f"{spec.label()}{tuple(x0)} exposed={e} extreme={x}")
    assert record(9, ok, "; ".join(parts) + " (oracle agrees)" if ok else "; ".join(parts))


def test_10_riesz_representation(record):
    worst_gap = worst_res = worst_two = 0.0
    for p in (1.5, 3.0):
        for k in range(20):
            dim = 2 + k % 4
            spec = Lp(p, dim)
            f = np.random.default_rng(1000 + k + int(10 * p)).standard_normal(dim)
            r = riesz_representer(spec, f)
            r2 = riesz_representer(spec, f, seed=k + 1)
            worst_gap = max(worst_gap, abs(float(spec.norm(r.representer)) - dual_norm(spec, f)))
            worst_res = max(worst_res, r.residual)
            worst_two = max(worst_two, float(np.abs(r.representer - r2.representer).max()))
    ok = worst_gap <= 1e-6 and worst_res <= 1e-6 and worst_two <= 1e-5
    assert record(10, ok, f"norm gap {worst_gap:.1e}, residual {worst_res:.1e}, two-start {worst_two:.1e}")


def test_11_dual_g(record):
    worst = 0.0
    for p in (1.5, 3.0, 4.0):
        spec = Lp(p, 3)
        rng = np.random.default_rng(int(10 * p))
        for phi, psi in rng.standard_normal((1000, 2, 3)):
            worst = max(worst, abs(dual_g(spec, phi, psi, check=False) - dual_g_direct(spec, phi, psi)))
    assert record(11, worst <= 1e-6, f"max |representer dual g - conjugate-norm g| = {worst:.1e}")


def test_12_dual_angular_equivalence(record):
    ok, rows = True, []
    for s1, s2 in ((Lp(2, 2), Lp(4, 2)), (Lp(4, 2), Lp(2, 2))):
        lo = dual_ae_estimate(s1, s2, samples=50_000, seed=0)
        hi = dual_ae_estimate(s1, s2, samples=100_000, seed=0)
        change = abs(hi.C_lower - lo.C_lower) / lo.C_lower
        ok &= not lo.diverged and not hi.diverged and change < 0.05
        rows.append(f"{s1.label()}->{s2.label()} C={hi.C_lower:.4g} change={change:.1%} "
                    f"floor={hi.at_separation_floor}")
    assert record(12, ok, "; ".join(rows))


def _cli_bytes(argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cli.main(argv)
    return code, buf.getvalue()


CLI_RUNS = [
    ["g", "--norm", "lp:3:dim=2", "--x", "1,1", "--y", "1,0", "--method", "numeric"],
    ["angle", "--norm", "kt:1.2", "--norm2", "stadium:0.6", "--x", "1,0.2", "--y=-0.3,1"],
    ["ae-estimate", "--norm1", "lp:2:dim=2", "--norm2", "lp:4:dim=2", "--samples", "5000"],
    ["ae-estimate", "--norm1", "lp:2:dim=2", "--norm2", "lp:4:dim=2", "--dual", "--samples", "5000"],
    ["ae-estimate", "--norm1", "lp:2:dim=2", "--norm2", "lp:3:dim=2", "--samples-grid", "500,1000",
     "--format", "csv"],
    ["probe", "--property", "strict", "--norm", "kt:1.2", "--samples", "3000"],
    ["probe", "--property", "uc", "--norm", "lp:3:dim=2", "--eps", "0.5,1", "--format", "csv"],
    ["probe", "--property", "nonsquare", "--norm", "linf:dim=2"],
    ["probe", "--property", "nonsquare-angle", "--norm", "lp:2:dim=2", "--samples", "3000"],
    ["probe", "--property", "dunkl-williams", "--norm", "stadium:0.6"],
    ["exposed", "--norm", "stadium:0.6", "--x0", "0.6,1", "--samples", "3000"],
    ["dual", "--op", "norm", "--norm", "kt:1.2", "--f", "1,0.5", "--method", "numeric"],
    ["dual", "--op", "representer", "--norm", "lp:3:dim=3", "--f", "1,-2,0.5"],
    ["dual", "--op", "g", "--norm", "lp:1.5:dim=2", "--f", "1,2", "--psi=-1,0.3"],
    ["dual", "--op", "support", "--norm", "lp:inf:dim=2", "--x0", "1,1"],
    ["dual", "--op", "birkhoff", "--norm", "lp:3:dim=2", "--x", "1,1", "--y", "1,-1"],
    ["suite", "--seed", "7"],
]


def test_13_cli_determinism(record):
    bad = []
    for argv in CLI_RUNS:
        c1, out1 = _cli_bytes(argv)
        c2, out2 = _cli_bytes(argv)
        if c1 != 0 or c1 != c2 or out1 != out2 or not out1:
            bad.append(argv[0])
        elif argv[-1] != "csv":
            assert json.loads(out1)["schema_version"] == cli.SCHEMA_VERSION
    assert record(13, not bad, f"{len(CLI_RUNS)} commands run twice, byte-identical"
                  + (f"; mismatched: {bad}" if bad else ""))
