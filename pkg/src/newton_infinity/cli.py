"""Command-line front end.

Exit codes: 0 success or property holds, 1 property fails, 2 bad input,
3 undecided, 4 internal inconsistency (rerun with a larger search).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import geometry as geo
from . import serialize as ser
from .analysis import (InfimumInconsistency, fermat_witness, frank_wolfe, search_minimizer_at_infinity,
                       unconstrained_infimum, zero_infimum_branch)
from .conditions import (CheckStatus, InfinityCertificate, ProblemInstance, Verdict, check_mf_infinity,
                         check_nondegenerate, verify_certificate)
from .numeric import NoFeasiblePointError, SolverConfig, grid_infimum_oracle
from .poly import PolynomialError, parse

log = logging.getLogger("newton_infinity")

EXIT_OK, EXIT_FAILS, EXIT_INPUT, EXIT_UNKNOWN, EXIT_INCONSISTENT = 0, 1, 2, 3, 4
COMMANDS = ("newton", "check-ndg", "check-mf", "infimum", "attain", "certify", "search", "analyze")


class InputError(Exception):
    pass


def load_problem(path: str) -> tuple[dict, ProblemInstance]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read problem file: {exc}") from exc
    try:
        ser.validate(doc, "problem.schema.json")
    except jsonschema.ValidationError as exc:
        raise InputError(f"problem file is invalid: {exc.message}") from exc
    names = doc["variables"]
    try:
        f0 = parse(doc["objective"], names)
        cons = tuple(parse(s, names) for s in doc.get("constraints", []))
        prob = ProblemInstance(f0, cons)
    except PolynomialError as exc:
        raise InputError(f"cannot parse problem: {exc}") from exc
    return doc, prob


def load_certificate(path: str, prob: ProblemInstance) -> tuple[dict, InfinityCertificate, float]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        ser.validate(doc, "certificate.schema.json")
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read certificate: {exc}") from exc
    except jsonschema.ValidationError as exc:
        raise InputError(f"certificate is invalid: {exc.message}") from exc
    index = {name: j for j, name in enumerate(prob.var_names)}
    try:
        J = tuple(index[name] for name in doc["J"])
    except KeyError as exc:
        raise InputError(f"certificate names unknown variable {exc}") from exc
    cert = InfinityCertificate(J, tuple(Fraction(v) for v in doc["q"]),
                               tuple(float(v) for v in doc["x_star"]),
                               tuple(float(v) for v in doc["lambda"]))
    return doc, cert, float(doc["f_star"])


def build_config(doc: dict, args: argparse.Namespace) -> SolverConfig:
    overrides = dict(doc.get("solver", {}))
    for flag, name in (("seed", "rng_seed"), ("box", "box_radius"), ("starts", "starts_per_axis"),
                       ("tol", "residual_tol")):
        value = getattr(args, flag)
        if value is not None:
            overrides[name] = value
    try:
        return SolverConfig(**overrides)
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad solver settings: {exc}") from exc


def _status_code(s: CheckStatus) -> int:
    if s.verdict == Verdict.FAILS:
        return EXIT_FAILS
    if s.verdict == Verdict.UNKNOWN:
        return EXIT_UNKNOWN
    return EXIT_OK


def _worst(codes) -> int:
    rank = {EXIT_OK: 0, EXIT_UNKNOWN: 1, EXIT_FAILS: 2, EXIT_INCONSISTENT: 3}
    return max(codes, key=lambda c: rank[c], default=EXIT_OK)


# -- commands -----------------------------------------------------------------

def run_newton(prob: ProblemInstance, cfg: SolverConfig, args) -> tuple[dict, int]:
    items = []
    for k, f in enumerate(prob.polys):
        G = geo.newton_polyhedron(f)
        entry = {"role": "objective" if k == 0 else f"constraint {k}", "polynomial": f.format(),
                 "convenient": geo.is_convenient(f)}
        entry.update(ser.polyhedron(G))
        items.append(entry)
    return {"newton": {"polyhedra": items}}, EXIT_OK


def run_check_ndg(prob, cfg, args):
    s = check_nondegenerate(prob.objective, cfg)
    return {"check_ndg": ser.status(s)}, _status_code(s)


def run_check_mf(prob, cfg, args):
    s = check_mf_infinity(prob, cfg)
    return {"check_mf": ser.status(s)}, _status_code(s)


def run_mf_and_attain(prob, cfg, args):
    s = check_mf_infinity(prob, cfg)
    a = frank_wolfe(prob, cfg, mf_status=s)
    return {"check_mf": ser.status(s), "attain": ser.attainability(a)}, _status_code(s)


def run_infimum(prob, cfg, args):
    if prob.constraints:
        raise InputError("the infimum command handles unconstrained problems only")
    code = EXIT_OK
    error = None
    try:
        rep = unconstrained_infimum(prob.objective, cfg)
    except InfimumInconsistency as exc:
        rep, code, error = exc.report, EXIT_INCONSISTENT, str(exc)
    fw = None
    if code == EXIT_OK:
        try:
            found = fermat_witness(prob.objective, cfg, rep)
        except InfimumInconsistency as exc:
            code, error = EXIT_INCONSISTENT, str(exc)
        else:
            if found is not None:
                face, x, value = found
                fw = {"face": ser.jsonable(face), "x": ser.jsonable(x), "value": value}
    payload = ser.infimum(rep)
    payload["fermat_witness"] = fw
    out = {"infimum": payload}
    if error:
        out["_error"] = error
    return out, code


def run_attain(prob, cfg, args):
    a = frank_wolfe(prob, cfg)
    return {"attain": ser.attainability(a)}, EXIT_OK


def run_certify(prob, cfg, args):
    if not args.certificate:
        raise InputError("certify needs --certificate FILE")
    doc, cert, f_star = load_certificate(args.certificate, prob)
    s = verify_certificate(prob, cert, f_star)
    payload = {"certificate": doc, "verdict": s.verdict.value, "failed": s.witness["failed"],
               "cq_holds": s.witness.get("cq_holds"), "log": list(s.log)}
    return {"certify": payload}, _status_code(s)


def oracle_estimate(prob: ProblemInstance, cfg: SolverConfig, levels: int = 4) -> float:
    best = None
    for k in range(levels):
        try:
            res = grid_infimum_oracle(prob.objective, prob.constraints,
                                      cfg.with_(box_radius=cfg.box_radius * 2 ** k))
        except NoFeasiblePointError:
            continue
        best = res.value if best is None else min(best, res.value)
    if best is None:
        raise InputError("no feasible grid point found; the feasible set may be empty or thin")
    return best


def run_search(prob, cfg, args):
    est = oracle_estimate(prob, cfg)
    cert = search_minimizer_at_infinity(prob, est, cfg)
    if cert is None:
        note = ("no certificate found; estimate is near 0, consistent with the zero-infimum alternative"
                if zero_infimum_branch(est) else "no certificate found")
        payload = {"f_star_estimate": est, "certificate": None, "verification": None, "note": note}
    else:
        value = prob.objective.initial_form(cert.q)[0].evaluate(cert.x_star)
        s = verify_certificate(prob, cert, value)
        doc = ser.certificate(cert, prob.var_names, value)
        if args.certificate:
            Path(args.certificate).write_text(ser.dumps(doc), encoding="utf-8")
        payload = {"f_star_estimate": est, "certificate": doc, "verification": ser.status(s),
                   "note": "certificate found and verified"}
    return {"search": payload}, EXIT_OK


def run_analyze(prob, cfg, args):
    payload, codes = {}, []
    steps = [run_newton, run_check_ndg, run_mf_and_attain]
    if not prob.constraints:
        steps.append(run_infimum)
    error = None
    for step in steps:
        part, code = step(prob, cfg, args)
        error = error or part.pop("_error", None)
        payload.update(part)
        codes.append(code)
    if error:
        payload["_error"] = error
    return payload, _worst(codes)


RUNNERS = {
    "newton": run_newton, "check-ndg": run_check_ndg, "check-mf": run_check_mf,
    "infimum": run_infimum, "attain": run_attain, "certify": run_certify,
    "search": run_search, "analyze": run_analyze,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="newton-infinity",
                                 description="Analyse polynomial optimisation problems at infinity.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--input", required=True, help="problem JSON file")
    ap.add_argument("--seed", type=int, help="random seed for multi-start solvers")
    ap.add_argument("--box", type=float, help="search box half-width")
    ap.add_argument("--starts", type=int, help="starts per axis")
    ap.add_argument("--tol", type=float, help="Newton residual tolerance")
    ap.add_argument("--output", help="write the report here instead of stdout")
    ap.add_argument("--certificate", help="certificate JSON to verify (certify) or to write (search)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    try:
        doc, prob = load_problem(args.input)
        cfg = build_config(doc, args)
        payload, code = RUNNERS[args.command](prob, cfg, args)
    except (InputError, geo.GeometryError, PolynomialError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    error = payload.pop("_error", None)
    report = {
        "tool": "newton-infinity",
        "version": __version__,
        "schema_version": ser.SCHEMA_VERSION,
        "command": args.command,
        "seed": cfg.rng_seed,
        "input": doc,
        "config": asdict(cfg),
        "exit_code": code,
        "payload": payload,
        "timings": {"total_seconds": round(time.perf_counter() - t0, 6)},
    }
    if error:
        report["error"] = error
    ser.validate(report, "report.schema.json")
    text = ser.dumps(report)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
