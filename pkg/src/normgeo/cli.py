"""Batch command-line front end.

Every run writes one report: a JSON document (sorted keys, schema version,
config echo, provenance) or, for grid commands, a CSV table. Exit status is
0 for a clean run, 1 when the suite finds a violation beyond tolerance and 2
for errors, which are reported as a structured JSON diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import angles, duality, gfunctional, probes
from ._random import derive_seed
from .norms import (INF, KTBlend, Lp, NormSpec, Polyhedral, Quadratic, Stadium, WeightedLp, as_vector,
                    sample_sphere)

SCHEMA_VERSION = "1"
SEED_ENV = "NORMGEO_SEED"


class SpecError(ValueError):
    pass


# -- norm-spec grammar ------------------------------------------------------------


def _number(token: str, what: str) -> float:
    t = token.strip().lower()
    if t in ("inf", "infinity", "+inf"):
        return INF
    try:
        return float(t)
    except ValueError:
        raise SpecError(f"bad {what} {token!r}: not a number") from None


def _keyed(token: str, key: str) -> str:
    k, sep, v = token.partition("=")
    if not sep or k.strip() != key or not v:
        raise SpecError(f"expected '{key}=<value>', got {token!r}")
    return v


def _dim(token: str) -> int:
    v = _keyed(token, "dim")
    try:
        n = int(v)
    except ValueError:
        raise SpecError(f"bad dimension {v!r}: not an integer") from None
    if n < 1:
        raise SpecError(f"bad dimension {v!r}: must be >= 1")
    return n


def _json_file(token: str):
    if not token.startswith("@") or len(token) < 2:
        raise SpecError(f"expected '@<file>', got {token!r}")
    path = token[1:]
    try:
        return json.loads(Path(path).read_text())
    except OSError as e:
        raise SpecError(f"cannot read {path!r}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise SpecError(f"{path!r} is not valid JSON: {e.msg}") from None


def parse_norm_spec(text: str) -> NormSpec:
    """Parse ``lp:<p>:dim=<n>``, ``linf:dim=<n>``, ``wlp:<p>:w=<w1,...>``,
    ``quad:@<file>``, ``kt:<lambda>``, ``poly:@<file>`` or ``stadium:<c>``."""
    kind, _, rest = text.strip().partition(":")
    parts = rest.split(":") if rest else []

    def arity(n):
        if len(parts) != n:
            raise SpecError(f"{kind!r} takes {n} field(s) after the kind, got {len(parts)} in {text!r}")

    try:
        if kind == "lp":
            arity(2)
            return Lp(_number(parts[0], "exponent"), _dim(parts[1]))
        if kind == "linf":
            arity(1)
            return Lp(INF, _dim(parts[0]))
        if kind == "wlp":
            arity(2)
            w = _keyed(parts[1], "w").split(",")
            return WeightedLp(_number(parts[0], "exponent"), [_number(v, "weight") for v in w])
        if kind == "quad":
            arity(1)
            return Quadratic(_json_file(parts[0]), source=parts[0][1:])
        if kind == "kt":
            arity(1)
            return KTBlend(_number(parts[0], "lambda"))
        if kind == "poly":
            arity(1)
            return Polyhedral(_json_file(parts[0]), source=parts[0][1:])
        if kind == "stadium":
            arity(1)
            return Stadium(_number(parts[0], "radius"))
    except SpecError:
        raise
    except (ValueError, TypeError) as e:
        raise SpecError(f"in {text!r}: {e}") from None
    raise SpecError(f"unknown norm kind {kind!r} in {text!r}")


def parse_vector(text: str) -> np.ndarray:
    """``1,2,3``, a JSON array, or ``@file`` holding a JSON array."""
    t = text.strip()
    if t.startswith("@"):
        data = _json_file(t)
    elif t.startswith("["):
        try:
            data = json.loads(t)
        except json.JSONDecodeError as e:
            raise SpecError(f"bad vector {text!r}: {e.msg}") from None
    else:
        data = [_number(v, "coordinate") for v in t.split(",")]
    try:
        return as_vector(data)
    except (ValueError, TypeError) as e:
        raise SpecError(f"bad vector {text!r}: {e}") from None


def _float_list(text: str) -> list:
    return [_number(v, "grid value") for v in text.split(",")]


def _int_list(text: str) -> list:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise SpecError(f"bad integer list {text!r}") from None


# -- serialisation ---------------------------------------------------------------


def _plain(obj):
    """JSON-safe copy: numpy scalars and arrays unpacked, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    if hasattr(obj, "value") and isinstance(obj.value, str):
        return obj.value
    return obj


def dumps(doc: dict) -> str:
    return json.dumps(_plain(doc), sort_keys=True, indent=2) + "\n"


def to_csv(columns: list, rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_plain(r[c]) for c in columns])
    return buf.getvalue()


# -- commands ---------------------------------------------------------------------


def _provenance(spec: NormSpec) -> dict:
    return {"spec": spec.label(), "g_path": gfunctional.ANALYTIC if gfunctional._has_analytic(spec)
            else gfunctional.FINITE_DIFFERENCE, "smooth": spec.smooth,
            "strictly_convex": spec.strictly_convex}


def _one_spec(args):
    return parse_norm_spec(args.norm)


def _two_specs(args):
    s1, s2 = parse_norm_spec(args.norm1), parse_norm_spec(args.norm2)
    if s1.dim != s2.dim:
        raise SpecError(f"dimension mismatch: {s1.label()} vs {s2.label()}")
    return s1, s2


def cmd_g(args):
    spec = _one_spec(args)
    x, y = parse_vector(args.x), parse_vector(args.y)
    rep = gfunctional.g(spec, x, y, args.tol, args.method)
    return {"result": rep.to_dict(), "provenance": [_provenance(spec)]}


def cmd_angle(args):
    spec = _one_spec(args)
    x, y = parse_vector(args.x), parse_vector(args.y)
    out = {"angle": angles.cos_angle(spec, x, y).to_dict()}
    prov = [_provenance(spec)]
    if args.norm2:
        spec2 = parse_norm_spec(args.norm2)
        out["angle2"] = angles.cos_angle(spec2, x, y).to_dict()
        out["ae_ratio"] = angles.ae_ratio(spec, spec2, x, y)
        prov.append(_provenance(spec2))
    return {"result": out, "provenance": prov}


def cmd_ae_estimate(args):
    s1, s2 = _two_specs(args)
    kw = dict(seed=args.seed, refine_iters=args.refine_iters, cap=args.cap,
              min_separation=args.min_separation)
    est = duality.dual_ae_estimate if args.dual else angles.estimate_ae_constant
    prov = [_provenance(s1), _provenance(s2)]
    if args.samples_grid:
        rows = []
        for n in _int_list(args.samples_grid):
            r = est(s1, s2, samples=n, **kw).to_dict()
            rows.append({"samples": n, **r})
        cols = ["samples", "C_lower", "sample_max", "diverged", "at_separation_floor"]
        return {"result": {"grid": rows}, "provenance": prov, "_csv": (cols, rows)}
    return {"result": est(s1, s2, samples=args.samples, **kw).to_dict(), "provenance": prov}


def cmd_probe(args):
    spec = _one_spec(args)
    common = dict(samples=args.samples, seed=args.seed)
    prop = args.property
    if prop == "strict":
        rep = probes.strict_convexity_probe(spec, tol=args.tol or probes.DEFAULT_TOL,
                                            refine_iters=args.refine_iters, **common)
    elif prop in ("uc", "nonsquare-angle"):
        eps = sorted(_float_list(args.eps))
        if prop == "uc":
            reps = probes.uc_modulus_grid(spec, eps, refine_iters=args.refine_iters, **common)
        else:
            reps = [probes.nonsq_angle_inf(spec, e, refine_iters=args.refine_iters, **common)
                    for e in eps]
        rows = [{"eps": e, "value": r.value, "verdict": r.verdict} for e, r in zip(eps, reps)]
        result = reps[0].to_dict() if len(reps) == 1 else {"grid": [r.to_dict() for r in reps]}
        return {"result": result, "provenance": [_provenance(spec)],
                "_csv": (["eps", "value", "verdict"], rows)}
    elif prop == "nonsquare":
        rep = probes.nonsquare_sup(spec, refine_iters=args.refine_iters, **common)
    elif prop == "dunkl-williams":
        rep = probes.dunkl_williams_check(spec, **common)
    else:  # argparse restricts the choices
        raise SpecError(f"unknown property {prop!r}")
    return {"result": rep.to_dict(), "provenance": [_provenance(spec)]}


def cmd_exposed(args):
    spec = _one_spec(args)
    x0 = parse_vector(args.x0)
    kw = dict(samples=args.samples, seed=args.seed, refine_iters=args.refine_iters)
    return {"result": {"exposed": probes.exposed_check(spec, x0, **kw).to_dict(),
                       "extreme": probes.extreme_check(spec, x0, **kw).to_dict()},
            "provenance": [_provenance(spec)]}


def cmd_dual(args):
    spec = _one_spec(args)
    op = args.op
    need = {"norm": ["f"], "representer": ["f"], "g": ["f", "psi"], "support": ["x0"],
            "birkhoff": ["x", "y"]}[op]
    missing = [n for n in need if getattr(args, n) is None]
    if missing:
        raise SpecError(f"dual --op {op} requires " + ", ".join("--" + m for m in missing))
    v = {n: parse_vector(getattr(args, n)) for n in need}
    if op == "norm":
        method = "numeric" if args.method == "numeric" else "auto"
        result = {"dual_norm": duality.dual_norm(spec, v["f"], samples=args.samples,
                                                 refine_iters=args.refine_iters, seed=args.seed,
                                                 method=method)}
    elif op == "representer":
        result = duality.riesz_representer(spec, v["f"], args.tol or 1e-6).to_dict()
    elif op == "g":
        result = {"dual_g": duality.dual_g(spec, v["f"], v["psi"], args.tol or 1e-6)}
    elif op == "support":
        result = {"functional": duality.support_functional(spec, v["x0"], seed=args.seed).coeffs}
    else:
        result = duality.birkhoff_check(spec, v["x"], v["y"], args.tol or 1e-9).to_dict()
    return {"result": result, "provenance": [_provenance(spec)]}


SUITE_SPECS = (
    "lp:1:dim=3", "lp:1.5:dim=3", "lp:2:dim=2", "lp:3:dim=3", "lp:4:dim=2", "lp:inf:dim=3",
    "wlp:3:w=1,2,0.5", "kt:1.2", "stadium:0.6",
)
SUITE_EXTRA = (
    ("quad", [[2.0, 0.5], [0.5, 1.0]]),
    ("poly", [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]),
)


def _suite_specs():
    specs = [parse_norm_spec(s) for s in SUITE_SPECS]
    specs.append(Quadratic(SUITE_EXTRA[0][1]))
    specs.append(Polyhedral(SUITE_EXTRA[1][1]))
    return specs


def _tan_half_identity(spec, trials, seed, tol):
    X = np.random.default_rng(derive_seed(seed, "tan-half", spec.label())).standard_normal((2, trials, spec.dim))
    c = angles.cos_many(spec, X[0], X[1])
    theta = np.arccos(c)
    # tan(theta/2) = sin(theta) / (1 + cos(theta)), away from theta = pi
    ok = c > -1 + 1e-6
    ref = np.sin(theta[ok]) / (1 + c[ok])
    dev = np.abs(angles.tan_half(c[ok]) - ref) / np.maximum(1.0, ref)
    i = int(np.argmax(dev))
    return {"check": "tan-half-identity", "spec": spec.label(), "worst": float(dev[i]),
            "passed": bool(dev[i] <= tol), "witness": {"cos_theta": float(c[ok][i])}}


def _exposed_extreme(spec, samples, seed, refine_iters, tol):
    pts = list(spec.candidates()[:4])
    pts += list(sample_sphere(spec, 2, derive_seed(seed, "suite-boundary", spec.label())))
    worst, witness = 0.0, None
    for x0 in pts:
        exp = probes.exposed_check(spec, x0, samples=samples, seed=seed, refine_iters=refine_iters)
        if exp.verdict != probes.Verdict.EXPOSED:
            continue
        ext = probes.extreme_check(spec, x0, samples=samples, seed=seed, refine_iters=refine_iters)
        if ext.verdict == probes.Verdict.WITNESS_FOUND:
            worst, witness = 1.0, {"x0": x0, "segment": ext.witness}
            break
    return {"check": "exposed-implies-extreme", "spec": spec.label(), "worst": worst,
            "passed": witness is None, "witness": witness, "points": len(pts)}


def cmd_suite(args):
    tol = args.tol or 1e-9
    trials = args.samples
    checks = []
    for spec in _suite_specs():
        for fn in (gfunctional.additivity_slack, gfunctional.chain_slack):
            r = fn(spec, trials=trials, seed=args.seed, tol=tol)
            checks.append({"check": r.name, "spec": spec.label(), "worst": r.worst_slack,
                           "passed": r.passed, "witness": r.witness})
        sip = gfunctional.sip_check(spec, trials=min(trials, 1000), seed=args.seed, tol=1e-8)
        for name, ax in sip.axioms.items():
            judged = name != "S1" or spec.smooth
            checks.append({"check": "sip-" + name, "spec": spec.label(), "worst": ax.worst,
                           "passed": ax.passed or not judged, "judged": judged,
                           "witness": ax.witness})
        checks.append(_tan_half_identity(spec, trials, args.seed, tol))
        dw = probes.dunkl_williams_check(spec, samples=trials, seed=args.seed, tol=tol)
        checks.append({"check": "dunkl-williams", "spec": spec.label(), "worst": dw.value,
                       "passed": dw.verdict == probes.Verdict.NO_WITNESS_FOUND, "witness": dw.witness})
        checks.append(_exposed_extreme(spec, min(trials, 2000), args.seed,
                                       min(args.refine_iters, 60), 1e-7))
    failed = [c for c in checks if not c["passed"]]
    return {"result": {"checks": checks, "failed": len(failed), "total": len(checks)},
            "provenance": [_provenance(s) for s in _suite_specs()], "_violation": bool(failed)}


# -- entry point -------------------------------------------------------------------


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SpecError(f"{SEED_ENV}={raw!r} is not an integer") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="normgeo", description="Norm-geometry toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, samples=probes.DEFAULT_SAMPLES):
        sp.add_argument("--seed", type=int, default=None, help=f"default: ${SEED_ENV} or 0")
        sp.add_argument("--samples", type=int, default=samples)
        sp.add_argument("--refine-iters", type=int, default=probes.DEFAULT_REFINE)
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--output", default=None, help="write here instead of stdout")

    sp = sub.add_parser("g", help="one-sided derivatives and the g-functional")
    common(sp)
    sp.add_argument("--norm", required=True)
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.add_argument("--method", choices=("auto", "analytic", "numeric"), default="auto")
    sp.set_defaults(run=cmd_g)

    sp = sub.add_parser("angle", help="norm angle, optionally the ratio against a second norm")
    common(sp)
    sp.add_argument("--norm", required=True)
    sp.add_argument("--norm2")
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.set_defaults(run=cmd_angle)

    sp = sub.add_parser("ae-estimate", help="angular-equivalence constant estimate")
    common(sp)
    sp.add_argument("--norm1", required=True)
    sp.add_argument("--norm2", required=True)
    sp.add_argument("--cap", type=float, default=angles.DEFAULT_CAP)
    sp.add_argument("--min-separation", type=float, default=angles.DEFAULT_MIN_SEPARATION)
    sp.add_argument("--samples-grid", help="comma-separated sample counts (CSV grid)")
    sp.add_argument("--dual", action="store_true", help="estimate for the dual norms")
    sp.set_defaults(run=cmd_ae_estimate)

    sp = sub.add_parser("probe", help="geometric property probes")
    common(sp)
    sp.add_argument("--norm", required=True)
    sp.add_argument("--property", required=True,
                    choices=("strict", "uc", "nonsquare", "nonsquare-angle", "dunkl-williams"))
    sp.add_argument("--eps", default="1", help="comma-separated epsilons (uc, nonsquare-angle)")
    sp.set_defaults(run=cmd_probe)

    sp = sub.add_parser("exposed", help="exposed and extreme point classification")
    common(sp)
    sp.add_argument("--norm", required=True)
    sp.add_argument("--x0", required=True)
    sp.set_defaults(run=cmd_exposed)

    sp = sub.add_parser("dual", help="dual norm, support functionals, representers")
    common(sp, samples=4096)
    sp.add_argument("--norm", required=True)
    sp.add_argument("--op", choices=("norm", "representer", "g", "support", "birkhoff"),
                    default="representer")
    sp.add_argument("--f")
    sp.add_argument("--psi")
    sp.add_argument("--x0")
    sp.add_argument("--x")
    sp.add_argument("--y")
    sp.add_argument("--method", choices=("auto", "numeric"), default="auto")
    sp.set_defaults(run=cmd_dual)

    sp = sub.add_parser("suite", help="invariant battery over the norm catalog")
    common(sp, samples=2000)
    sp.set_defaults(run=cmd_suite)
    return p


def _config_echo(args) -> dict:
    skip = {"run", "output", "format"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.seed is None:
            args.seed = _default_seed()
        doc = args.run(args)
    except (ValueError, FloatingPointError, RuntimeError, NotImplementedError) as e:
        err = {"schema_version": SCHEMA_VERSION, "command": args.command, "status": "error",
               "error": {"type": type(e).__name__, "message": str(e)}, "config": _config_echo(args)}
        sys.stderr.write(dumps(err))
        return 2
    violation = doc.pop("_violation", False)
    grid = doc.pop("_csv", None)
    if args.format == "csv":
        if grid is None:
            sys.stderr.write(dumps({"schema_version": SCHEMA_VERSION, "command": args.command,
                                    "status": "error",
                                    "error": {"type": "UsageError",
                                              "message": "csv output is only produced by grid "
                                                         "commands (probe uc/nonsquare-angle, "
                                                         "ae-estimate --samples-grid)"}}))
            return 2
        text = to_csv(*grid)
    else:
        doc.update({"schema_version": SCHEMA_VERSION, "command": args.command,
                    "status": "violation" if violation else "ok", "config": _config_echo(args)})
        text = dumps(doc)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 1 if violation else 0


if __name__ == "__main__":
    sys.exit(main())
