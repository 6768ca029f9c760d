"""JSON encoding of polyhedra, statuses and reports.

Exact rationals become strings ``"p/q"`` (plain ``"p"`` for integers) and
floats are written with the shortest round-trip representation.
"""

from __future__ import annotations

import enum
import json
from fractions import Fraction
from importlib import resources
from typing import Any

import jsonschema
import numpy as np

from . import geometry as geo
from .analysis import AttainabilityReport, CriticalValue, InfimumReport
from .conditions import CheckStatus, InfinityCertificate

SCHEMA_VERSION = "1"
MAX_WITNESSES = 3


def rational(v) -> str:
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def jsonable(obj: Any) -> Any:
    """Recursively convert values into JSON-compatible data."""
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, Fraction):
        return rational(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, geo.Face):
        return [list(p) for p in obj.sorted_points()]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def polyhedron(G: geo.NewtonPolyhedron) -> dict:
    return {
        "dim": G.dim,
        "vertices": [list(v) for v in G.vertices],
        "facets": [{"normal": [rational(a) for a in f.normal], "offset": rational(f.offset)}
                   for f in G.facets],
        "lineality": [[rational(a) for a in l] for l in G.lineality],
        "faces": [{
            "id": f.id,
            "dim": f.dim,
            "points": [list(p) for p in f.sorted_points()],
            "vertex_ids": list(f.vertex_ids),
            "facet_ids": list(f.facet_ids),
            "rep_normal": None if f.rep_normal is None else [rational(a) for a in f.rep_normal],
            "d_value": None if f.d_value is None else rational(f.d_value),
            "in_newton_boundary": f.in_newton_boundary,
            "is_bad": f.is_bad,
            "span_contains_origin": f.span_contains_origin,
            "bad_witness": None if f.bad_witness is None else [rational(a) for a in f.bad_witness],
        } for f in G.faces],
        "newton_boundary": [f.id for f in geo.newton_boundary(G)],
        "bad_faces": [f.id for f in geo.bad_faces(G)],
    }


def status(s: CheckStatus) -> dict:
    return {"verdict": s.verdict.value, "witness": jsonable(s.witness), "log": list(s.log)}


def critical_value(c: CriticalValue, with_face: bool) -> dict:
    out = {"value": c.value, "witness": jsonable(c.witness), "num_witnesses": len(c.points)}
    if with_face:
        faces = []
        for f in c.faces:
            pts = jsonable(f)
            if pts not in faces:
                faces.append(pts)
        out["faces"] = faces
    return out


def infimum(r: InfimumReport) -> dict:
    return {
        "f_star": r.f_star,
        "f_star_prime": r.f_star_prime,
        "K0": [critical_value(c, False) for c in r.K0],
        "Sigma_inf": [critical_value(c, True) for c in r.Sigma_inf],
        "Sigma_inf_prime": [critical_value(c, True) for c in r.Sigma_inf_prime],
        "attainment": r.attainment.value,
        "attained_at": jsonable(r.attained_at),
        "oracle_value": r.oracle_value,
        "oracle_trace": [{"radius": s.radius, "value": s.value, "argmin": jsonable(s.argmin)}
                         for s in r.oracle_trace],
        "nondegeneracy": status(r.nondegeneracy),
        "assumptions": jsonable(r.assumptions),
        "flags": jsonable(r.flags),
    }


def attainability(a: AttainabilityReport) -> dict:
    return {
        "convenient": a.convenient,
        "conclusion": a.conclusion.value,
        "heuristic_basis": a.heuristic_basis,
        "bounded_below_assumed": a.bounded_below_assumed,
        "mf_status": status(a.mf_status),
    }


def certificate(c: InfinityCertificate, names, f_star: float) -> dict:
    return {
        "J": [names[j] for j in c.J],
        "q": [rational(v) for v in c.q],
        "x_star": [float(v) for v in c.x_star],
        "lambda": [float(v) for v in c.lam],
        "f_star": float(f_star),
    }


def load_schema(name: str) -> dict:
    text = resources.files("newton_infinity").joinpath("schemas", name).read_text(encoding="utf-8")
    return json.loads(text)


def validate(doc: dict, schema_name: str) -> None:
    jsonschema.validate(doc, load_schema(schema_name))


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=False, ensure_ascii=False, allow_nan=False) + "\n"
