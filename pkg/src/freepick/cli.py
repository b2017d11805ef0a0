"""Command-line entry point.

Exit codes: 0 when every check passes, 1 on a property violation, 2 on
malformed input.  Model arguments accept a JSON path or ``@name`` for a
bundled fixture (``@counterexample``, ``@classical``, ``@non_homomorphic``;
``@classical_herglotz`` for ``extract``).
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import json
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

import numpy as np

from . import cauchy, herglotz, ncrat
from .algebra import (AlgebraSpec, MatPoint, classify_region, direct_sum, from_components,
                      imaginary_part, intertwining_residual, make_intertwiner_cases, sample_uhp)
from .cauchy import COUNTEREXAMPLE_EXPRESSIONS, CauchyModel
from .cpmaps import check_dilation_pair, homomorphy_report, range_generators, tomiyama_check
from .errors import (DomainError, FreePickError, InputError, RangeNotPerpendicular,
                     SingularResolvent)
from .io import (decode_herglotz, decode_model, decode_point, encode_matrix, encode_nevanlinna,
                 encode_point, decode_matrix, dumps, load_json, write_json)

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2


@dataclass
class CheckRecord:
    name: str
    passed: bool
    residual: float
    tolerance: float
    witness: Any = None

    def to_dict(self):
        d = {"name": self.name, "status": "pass" if self.passed else "fail",
             "residual": float(self.residual), "tolerance": float(self.tolerance)}
        if self.witness is not None:
            d["witness"] = self.witness
        return d


@dataclass
class SuiteReport:
    suite: str
    seed: int
    checks: list = field(default_factory=list)
    wall_time: float | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, passed, residual, tolerance, witness=None) -> CheckRecord:
        rec = CheckRecord(name, bool(passed), float(residual), float(tolerance), witness)
        self.checks.append(rec)
        return rec

    def to_dict(self):
        d = {"suite": self.suite, "status": "pass" if self.passed else "fail", "seed": self.seed,
             "checks": [c.to_dict() for c in self.checks]}
        if self.wall_time is not None:
            d["wall_time"] = self.wall_time
        return d

    def to_csv(self) -> str:
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "status", "residual", "tolerance"])
        for c in self.checks:
            w.writerow([c.name, "pass" if c.passed else "fail", repr(c.residual), repr(c.tolerance)])
        return buf.getvalue()


FIXTURES = {"counterexample", "classical", "non_homomorphic", "classical_herglotz"}


def _fixture_json(name: str):
    if name not in FIXTURES:
        raise InputError(f"unknown fixture @{name}; available: {', '.join(sorted(FIXTURES))}")
    return json.loads(resources.files("freepick").joinpath("fixtures", f"{name}.json").read_text())


def _load(path: str):
    return _fixture_json(path[1:]) if path.startswith("@") else load_json(path)


def load_model(path: str, validate: bool = True) -> CauchyModel:
    return decode_model(_load(path), validate=validate)


def _emit(report: SuiteReport, args) -> int:
    if args.timing:
        report.wall_time = round(time.perf_counter() - args._t0, 6)
    if args.fmt == "csv":
        sys.stdout.write(report.to_csv())
    else:
        sys.stdout.write(dumps(report.to_dict()) + "\n")
    return EXIT_OK if report.passed else EXIT_VIOLATION


def _point_witness(Z: MatPoint):
    return encode_point(Z)


# -- commands ---------------------------------------------------------------

def cmd_eval(args) -> int:
    model = load_model(args.model)
    Z = decode_point(_load(args.point), model.B)
    try:
        out = cauchy.evaluate(model, Z)
    except SingularResolvent as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    payload = encode_point(out)
    if args.out:
        write_json(args.out, payload)
    else:
        sys.stdout.write(dumps(payload) + "\n")
    return EXIT_OK


def run_pick_suite(model: CauchyModel, trials: int, levels: int, seed: int, tol: float) -> SuiteReport:
    """Pick positivity, direct sums and intertwining on sampled points."""
    rep = SuiteReport("check-pick", seed)
    herm = float(np.linalg.norm(model.A.data - model.A.data.conj().T, 2))
    rep.add("A_hermitian", herm <= tol, herm, tol)
    spec = model.B
    worst_im, wit_im = np.inf, None
    worst_ds, wit_ds = 0.0, None
    worst_iw, wit_iw = 0.0, None
    failure = None
    for t in range(trials):
        n = 1 + t % levels
        Z = sample_uhp(spec, n, margin=0.05, seed=[seed, t])
        try:
            fz = cauchy.evaluate(model, Z)
            m = float(np.linalg.eigvalsh(imaginary_part(fz).flat)[0])
            if m < worst_im:
                worst_im, wit_im = m, Z
            W = sample_uhp(spec, 1 + (t + 1) % levels, margin=0.05, seed=[seed, t, 1])
            ds = direct_sum(Z, W)
            r = (cauchy.evaluate(model, ds) - direct_sum(fz, cauchy.evaluate(model, W))).norm()
            r /= 1 + fz.norm()
            if r > worst_ds:
                worst_ds, wit_ds = r, Z
            for X, Y, G in make_intertwiner_cases(Z, seed=[seed, t, 2]):
                fy = cauchy.evaluate(model, Y)
                r = intertwining_residual(G, fz, fy) / (1 + np.linalg.norm(G, 2) * (fz.norm() + fy.norm()))
                if r > worst_iw:
                    worst_iw, wit_iw = r, Z
        except (SingularResolvent, DomainError) as exc:
            failure = (str(exc), Z)
            break
    if failure:
        rep.add("evaluation", False, float("inf"), tol, {"error": failure[0], "point": _point_witness(failure[1])})
    rep.add("pick_positivity", worst_im >= -tol, max(0.0, -worst_im), tol,
            None if worst_im >= -tol else {"min_im_eigenvalue": worst_im, "point": _point_witness(wit_im)})
    rep.add("direct_sum", worst_ds <= tol, worst_ds, tol,
            None if worst_ds <= tol else {"point": _point_witness(wit_ds)})
    rep.add("intertwining", worst_iw <= tol, worst_iw, tol,
            None if worst_iw <= tol else {"point": _point_witness(wit_iw)})
    return rep


def cmd_check_pick(args) -> int:
    if args.trials < 1 or args.levels < 1:
        raise InputError("--trials and --levels must be at least 1")
    model = load_model(args.model, validate=False)
    return _emit(run_pick_suite(model, args.trials, args.levels, args.seed, args.tol), args)


def cmd_asymptotics(args) -> int:
    if not (args.s_min >= 10 and args.s_max > args.s_min and args.points >= 5):
        raise InputError("need 10 <= s_min < s_max and --points >= 5")
    model = load_model(args.model)
    Z = sample_uhp(model.B, args.level, margin=0.5, seed=args.seed)
    rep = cauchy.asymptotic_residual(model, Z, args.s_min, args.s_max, args.points)
    if args.csv_path:
        with open(args.csv_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["s", "residual"])
            for s, r in rep.rows():
                w.writerow([repr(s), repr(r)])
    suite = SuiteReport("asymptotics", args.seed)
    suite.add("verdict_cauchy_like", rep.verdict == "cauchy_like", rep.residuals[-1], rep.floor,
              {"slope": rep.slope, "verdict": rep.verdict})
    return _emit(suite, args)


def cmd_extract(args) -> int:
    data = decode_herglotz(_load(args.herglotz))
    try:
        nd = herglotz.extract(data, tol=args.tol)
    except RangeNotPerpendicular as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    if args.out:
        write_json(args.out, encode_nevanlinna(nd))
    worst = 0.0
    for t in range(20):
        Z = sample_uhp(data.in_spec, 1 + t % 2, margin=0.1, seed=[args.seed, t])
        worst = max(worst, (herglotz.nev_eval(nd, Z) - herglotz.pick_value(data, Z)).norm())
    suite = SuiteReport("extract", args.seed)
    suite.add("round_trip", worst <= 1e-8, worst, 1e-8)
    c_norm = float(np.linalg.norm(nd.C, 2))
    print(f"is_cauchy={str(nd.is_cauchy).lower()} |C|={c_norm!r} round_trip_residual={worst!r}", file=sys.stderr)
    suite.checks[0].witness = {"is_cauchy": nd.is_cauchy, "C_norm": c_norm}
    return _emit(suite, args)


def run_counterexample_suite(seed: int = 0) -> SuiteReport:
    model = cauchy.counterexample_model()
    rep = SuiteReport("counterexample", seed)
    rep.add("dilation_pair", check_dilation_pair(model.E, model.psi, 1e-10), 0.0, 1e-10)
    hom = homomorphy_report(model.E, range_generators(model.psi), 4, 1e-9)
    rep.add("E_homomorphic_on_range_psi", hom.passed, hom.max_product_residual, 1e-9)

    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((100, 2)) + 1j * rng.uniform(0.05, 2.0, (100, 2))
    exprs = [ncrat.parse(e) for e in COUNTEREXAMPLE_EXPRESSIONS]
    err_eval = err_expr = 0.0
    for z1, z2 in pts:
        closed = np.array(cauchy.counterexample_closed_form(z1, z2))
        val = cauchy.evaluate(model, MatPoint.from_flat(model.B, np.diag([z1, z2])))
        err_eval = max(err_eval, np.abs(np.diag(val.flat) - closed).max())
        via = np.array([ncrat.evaluate(e, [[[z1]], [[z2]]])[0, 0] for e in exprs])
        err_expr = max(err_expr, np.abs(via - closed).max())
    rep.add("closed_form_vs_eval", err_eval <= 1e-10, err_eval, 1e-10)
    rep.add("expression_vs_closed_form", err_expr <= 1e-12, err_expr, 1e-12)

    err_lvl = 0.0
    for t in range(20):
        Z = sample_uhp(model.B, 3, margin=0.1, seed=[seed, t])
        val = cauchy.evaluate(model, Z)
        comps = [np.asarray(Z.grid[:, :, k, k]) for k in range(2)]
        via = from_components([ncrat.evaluate(e, comps) for e in exprs])
        err_lvl = max(err_lvl, (val - via).norm() / (1 + val.norm()))
    rep.add("expression_vs_eval_level3", err_lvl <= 1e-10, err_lvl, 1e-10)

    asym = cauchy.asymptotic_residual(model, sample_uhp(model.B, 2, 0.5, seed))
    rep.add("asymptotics_cauchy_like", asym.verdict == "cauchy_like", asym.residuals[-1], asym.floor,
            {"slope": asym.slope})
    w3 = cauchy.nonpolynomial_witness(3, 256, seed)
    rep.add("nonpolynomial_degree3", w3 > 0.1, w3, 0.1)
    ctrl = cauchy.nonpolynomial_witness(1, 64, seed, component=0)
    rep.add("polynomial_control_degree1", ctrl <= 1e-10, ctrl, 1e-10)
    worst = max(_moment_residuals(model, 5, 2, 3, seed))
    rep.add("moments_k1_to_5", worst <= 1e-10, worst, 1e-10)
    tom = tomiyama_check(model.E, range_generators(model.psi), 100, 1e-10, seed)
    rep.add("tomiyama", tom.passed, max(tom.max_residual, tom.max_projection_residual), 1e-10)
    return rep


def cmd_counterexample(args) -> int:
    return _emit(run_counterexample_suite(args.seed), args)


def _moment_residuals(model, kmax, level, trials, seed):
    out = []
    for k in range(1, kmax + 1):
        worst = 0.0
        for t in range(trials):
            rng = np.random.default_rng([seed, k, t])
            Hs = []
            for _ in range(k):
                g = rng.standard_normal((level * model.B.total_dim,) * 2) + 1j * rng.standard_normal(
                    (level * model.B.total_dim,) * 2)
                g = np.where(model.B.level_mask(level), g, 0)
                Hs.append(MatPoint.from_flat(model.B, g / np.linalg.norm(g, 2)))
            worst = max(worst, cauchy.moment(model, Hs).residual)
        out.append(worst)
    return out


def cmd_moments(args) -> int:
    if args.k < 1:
        raise InputError("--k must be at least 1")
    model = load_model(args.model)
    rep = SuiteReport("moments", args.seed)
    for k, r in enumerate(_moment_residuals(model, args.k, args.level, args.trials, args.seed), start=1):
        rep.add(f"moment_k{k}", r <= args.tol, r, args.tol)
    return _emit(rep, args)


def cmd_tomiyama(args) -> int:
    model = load_model(args.model)
    gens = range_generators(model.psi)
    rep = SuiteReport("tomiyama", args.seed)
    hom = homomorphy_report(model.E, gens, 2, max(args.tol, 1e-9))
    rep.add("E_homomorphic_on_range_psi", hom.passed, hom.max_product_residual, max(args.tol, 1e-9))
    if hom.passed:
        t = tomiyama_check(model.E, gens, args.samples, args.tol, args.seed)
        rep.add("bimodule_product", t.max_residual <= args.tol, t.max_residual, args.tol,
                None if t.witness is None else {k: encode_matrix(v) for k, v in t.witness.items()})
        rep.add("projection_step", t.max_projection_residual <= args.tol, t.max_projection_residual, args.tol)
    return _emit(rep, args)


def cmd_ncrat(args) -> int:
    obj = _load(args.vars_file) if args.vars_file else {}
    if args.vars:
        obj = {**obj, "vars": json.loads(args.vars)}
    text = args.expr or obj.get("expr")
    if not text:
        raise InputError("no expression given (--expr or 'expr' in the vars file)")
    if "vars" not in obj or not isinstance(obj["vars"], list):
        raise InputError("variables must be supplied as a list of matrices under 'vars'")
    e = ncrat.parse(text)
    mats = [decode_matrix(v, f"Z{k + 1}") for k, v in enumerate(obj["vars"])]
    try:
        val = ncrat.evaluate(e, mats)
    except ncrat.SingularInverse as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    sys.stdout.write(dumps({"expr": ncrat.format(e), "result": encode_matrix(val)}) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="freepick", description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json")
    fmt.add_argument("--csv", dest="fmt", action="store_const", const="csv")
    p.add_argument("--timing", action="store_true", help="include wall time in reports")
    p.set_defaults(fmt="json")
    # --seed and --tol are also accepted after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("eval", parents=[common], help="evaluate a Cauchy model at a point")
    s.add_argument("model")
    s.add_argument("point")
    s.add_argument("-o", "--out")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("check-pick", parents=[common], help="Pick positivity and free-function axioms")
    s.add_argument("model")
    s.add_argument("--trials", type=int, default=200)
    s.add_argument("--levels", type=int, default=3)
    s.set_defaults(func=cmd_check_pick)

    s = sub.add_parser("asymptotics", parents=[common], help="s f(sZ) + Z^-1 on a geometric grid")
    s.add_argument("model")
    s.add_argument("--s-min", type=float, default=1e2)
    s.add_argument("--s-max", type=float, default=1e6)
    s.add_argument("--points", type=int, default=9)
    s.add_argument("--level", type=int, default=2)
    s.add_argument("--csv", dest="csv_path")
    s.set_defaults(func=cmd_asymptotics)

    s = sub.add_parser("extract", parents=[common], help="Nevanlinna extraction from Herglotz data")
    s.add_argument("herglotz")
    s.add_argument("-o", "--out")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("counterexample", parents=[common], help="all checks on the C^2 counterexample")
    s.set_defaults(func=cmd_counterexample)

    s = sub.add_parser("moments", parents=[common], help="E(psi(H1)...psi(Hk)) = H1...Hk")
    s.add_argument("model")
    s.add_argument("--k", type=int, default=5)
    s.add_argument("--level", type=int, default=2)
    s.add_argument("--trials", type=int, default=5)
    s.set_defaults(func=cmd_moments)

    s = sub.add_parser("tomiyama", parents=[common], help="E(b1 m b2) = E(b1) E(m) E(b2) on B-hat")
    s.add_argument("model")
    s.add_argument("--samples", type=int, default=100)
    s.set_defaults(func=cmd_tomiyama)

    s = sub.add_parser("ncrat", parents=[common], help="evaluate a noncommutative rational expression")
    s.add_argument("--expr")
    s.add_argument("--vars-file")
    s.add_argument("--vars", help="inline JSON list of matrices")
    s.set_defaults(func=cmd_ncrat)
    return p


def _glue_expr(argv):
    # an expression may start with '-', which argparse would take for an option
    out, it = [], iter(argv)
    for a in it:
        if a == "--expr":
            nxt = next(it, None)
            out.append(a if nxt is None else f"--expr={nxt}")
        else:
            out.append(a)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _glue_expr(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    args._t0 = time.perf_counter()
    try:
        return args.func(args)
    except (InputError, ncrat.NCSyntaxError, ncrat.UnboundVariable, DomainError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FreePickError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
