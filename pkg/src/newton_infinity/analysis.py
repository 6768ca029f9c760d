"""Infimum of an unconstrained polynomial from critical values at finite
points and on bad faces, attainment tests, and the search for
minimizer-at-infinity certificates."""

from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import geometry as geo
from .conditions import (CheckStatus, InfinityCertificate, ProblemInstance, Verdict,
                         _fills, _in_subspace, _rational_point, check_mf_infinity,
                         check_nondegenerate, critical_points, extend_normal, face_forms,
                         gradient_tolerance, subsets, torus_critical_points, verify_certificate)
from .numeric import SolverConfig, grid_infimum_oracle, solve_system
from .poly import Polynomial, PolynomialError

log = logging.getLogger(__name__)

ORACLE_UNDERCUT_TOL = 1e-4


class Attainment(str, enum.Enum):
    ATTAINED = "ATTAINED"
    NOT_ATTAINED_LIKELY = "NOT_ATTAINED_LIKELY"
    INCONCLUSIVE = "INCONCLUSIVE"


class Conclusion(str, enum.Enum):
    ATTAINS_BY_THEOREM = "ATTAINS_BY_THEOREM"
    NO_CONCLUSION = "NO_CONCLUSION"


@dataclass(frozen=True)
class CriticalValue:
    """A merged critical value with every witness point that produced it.

    ``faces[k]`` is the face whose polynomial is critical at ``points[k]``
    (None for critical points of the polynomial itself).
    """

    value: float
    points: tuple[np.ndarray, ...]
    faces: tuple[geo.Face | None, ...]

    @property
    def witness(self) -> np.ndarray:
        return self.points[0]


def merge_values(entries: Sequence[tuple[float, np.ndarray, geo.Face | None]], tol: float) -> list[CriticalValue]:
    """Group values within ``tol`` of their neighbours; deterministic in input order."""
    order = sorted(range(len(entries)), key=lambda k: (entries[k][0], k))
    groups: list[list[int]] = []
    for k in order:
        if groups and entries[k][0] - entries[groups[-1][-1]][0] <= tol:
            groups[-1].append(k)
        else:
            groups.append([k])
    out = []
    for g in groups:
        g_in = sorted(g)
        vals = [entries[k][0] for k in g]
        out.append(CriticalValue(float(np.median(vals)), tuple(entries[k][1] for k in g_in),
                                 tuple(entries[k][2] for k in g_in)))
    return out


def critical_values(p: Polynomial, cfg: SolverConfig = SolverConfig()) -> list[CriticalValue]:
    """Values of ``p`` at its numerically found critical points."""
    if p.is_constant():
        raise PolynomialError("critical values of a constant polynomial are not tracked")
    pts = critical_points(p, cfg)
    return merge_values([(p.evaluate(x), x, None) for x in pts], cfg.value_merge_tol)


def sigma_infinity(p: Polynomial, cfg: SolverConfig = SolverConfig(),
                   nonzero_only: bool = False) -> list[CriticalValue]:
    """Critical values of bad-face polynomials, over R^n or over the torus."""
    if p.is_constant():
        raise PolynomialError("polynomial is constant")
    G = geo.newton_polyhedron(p)
    entries = []
    for face in geo.bad_faces(G):
        fd = geo.face_polynomial(p, face)
        pts = list(torus_critical_points(fd, cfg))
        if not nonzero_only:
            pts = list(critical_points(fd, cfg)) + pts
        entries.extend((fd.evaluate(x), x, face) for x in pts)
    return merge_values(entries, cfg.value_merge_tol)


class InfimumInconsistency(RuntimeError):
    def __init__(self, message: str, report: InfimumReport | None = None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class OracleStep:
    radius: float
    value: float
    argmin: np.ndarray


@dataclass(frozen=True)
class InfimumReport:
    f_star: float | None
    f_star_prime: float | None
    K0: tuple[CriticalValue, ...]
    Sigma_inf: tuple[CriticalValue, ...]
    Sigma_inf_prime: tuple[CriticalValue, ...]
    attainment: Attainment
    attained_at: np.ndarray | None
    oracle_value: float
    oracle_trace: tuple[OracleStep, ...]
    nondegeneracy: CheckStatus
    assumptions: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)


def _min_value(groups: Sequence[CriticalValue]) -> float | None:
    return min((g.value for g in groups), default=None)


def _oracle_trace(p: Polynomial, cfg: SolverConfig, levels: int = 4) -> list[OracleStep]:
    out = []
    for k in range(levels):
        R = cfg.box_radius * 2 ** k
        res = grid_infimum_oracle(p, [], cfg.with_(box_radius=R))
        out.append(OracleStep(R, res.value, res.argmin))
    return out


def _escapes_to_infinity(trace: Sequence[OracleStep], f_star: float) -> bool:
    """Oracle minima decrease toward ``f_star`` while their argmins run off to the box edge."""
    vals = [s.value for s in trace]
    if any(v < f_star - ORACLE_UNDERCUT_TOL for v in vals):
        return False
    if not all(b < a for a, b in zip(vals, vals[1:])):
        return False
    if vals[-1] - f_star > 0.5 * (vals[0] - f_star):
        return False
    return all(np.max(np.abs(s.argmin)) >= 0.5 * s.radius for s in trace)


def unconstrained_infimum(p: Polynomial, cfg: SolverConfig = SolverConfig(),
                          strict: bool = True) -> InfimumReport:
    """Infimum as the least finite or bad-face critical value, with cross-checks.

    Boundedness below is assumed, not decided.  With ``strict`` a mismatch
    between the two formulas (using all bad-face critical points, or only
    those with nonzero coordinates) raises :class:`InfimumInconsistency`.
    """
    if p.is_constant():
        raise PolynomialError("polynomial is constant")
    ndg = check_nondegenerate(p, cfg)
    K0 = critical_values(p, cfg)
    sigma = sigma_infinity(p, cfg)
    sigma_p = sigma_infinity(p, cfg, nonzero_only=True)
    f_star = _min_value(list(K0) + list(sigma))
    f_star_p = _min_value(list(K0) + list(sigma_p))
    consistent = (f_star is None) == (f_star_p is None) and (
        f_star is None or abs(f_star - f_star_p) <= cfg.value_merge_tol)

    trace = _oracle_trace(p, cfg)
    oracle_value = min(s.value for s in trace)
    attained_at = None
    if f_star is None:
        attainment = Attainment.INCONCLUSIVE
    else:
        hit = next((g for g in K0 if abs(g.value - f_star) <= cfg.value_merge_tol), None)
        if hit is not None:
            attainment, attained_at = Attainment.ATTAINED, hit.witness
        elif _escapes_to_infinity(trace, f_star):
            attainment = Attainment.NOT_ATTAINED_LIKELY
        else:
            attainment = Attainment.INCONCLUSIVE
    flags = {
        "sound": ndg.verdict.holds,
        "consistent": consistent,
        "oracle_undercut": f_star is not None and oracle_value < f_star - ORACLE_UNDERCUT_TOL,
        "suspect_unbounded": oracle_value < cfg.unbounded_floor,
    }
    report = InfimumReport(
        f_star=f_star, f_star_prime=f_star_p, K0=tuple(K0), Sigma_inf=tuple(sigma),
        Sigma_inf_prime=tuple(sigma_p), attainment=attainment, attained_at=attained_at,
        oracle_value=oracle_value, oracle_trace=tuple(trace), nondegeneracy=ndg,
        assumptions={"bounded_below_assumed": True, "nondegeneracy_status": ndg.verdict.value},
        flags=flags)
    if strict and not consistent:
        raise InfimumInconsistency(
            f"least critical values disagree: {f_star} vs {f_star_p}; rerun with more starts", report)
    return report


def fermat_witness(p: Polynomial, cfg: SolverConfig = SolverConfig(),
                   report: InfimumReport | None = None) -> tuple[geo.Face, np.ndarray, float] | None:
    """A bad face and a torus critical point of its polynomial realising the infimum.

    Only produced when the infimum looks unattained.
    """
    if report is None:
        report = unconstrained_infimum(p, cfg)
    if report.attainment != Attainment.NOT_ATTAINED_LIKELY:
        return None
    for group in report.Sigma_inf_prime:
        if abs(group.value - report.f_star) > cfg.value_merge_tol:
            continue
        for x, face in zip(group.points, group.faces):
            fd = geo.face_polynomial(p, face)
            xr = _rational_point(x)
            grad = [d.evaluate_exact(xr) for d in fd.gradient()]
            if sum(g * g for g in grad) <= gradient_tolerance(fd, xr, cfg) ** 2:
                return face, x, group.value
    raise InfimumInconsistency("infimum looks unattained but no bad-face critical value matches it", report)


@dataclass(frozen=True)
class AttainabilityReport:
    convenient: bool
    mf_status: CheckStatus
    conclusion: Conclusion
    heuristic_basis: bool
    bounded_below_assumed: bool = True


def frank_wolfe(prob: ProblemInstance, cfg: SolverConfig = SolverConfig(),
                mf_status: CheckStatus | None = None) -> AttainabilityReport:
    """Attainment follows when the objective is convenient and the MF property holds.

    A status from an earlier :func:`check_mf_infinity` run may be passed in.
    """
    convenient = geo.is_convenient(prob.objective)
    mf = mf_status if mf_status is not None else check_mf_infinity(prob, cfg)
    ok = convenient and mf.verdict.holds
    return AttainabilityReport(
        convenient=convenient, mf_status=mf,
        conclusion=Conclusion.ATTAINS_BY_THEOREM if ok else Conclusion.NO_CONCLUSION,
        heuristic_basis=ok and mf.verdict == Verdict.HOLDS_HEURISTIC)


# -- certificate search -------------------------------------------------------------

def _zero_level_normals(prob: ProblemInstance, J: tuple[int, ...], I: list[int]) -> list[tuple[Fraction, ...]]:
    """Normals, one per common cell and sign pattern, with ``d_0 = 0`` and some ``q_j <= -1``."""
    projected = [prob.polys[i].restrict(J).project(J) for i in I]
    polys = [geo.newton_polyhedron(f) for f in projected]
    G0 = polys[I.index(0)]
    out = []
    for cell in geo.normal_cells(polys):
        kappa = geo.face_of(G0, cell.representative).sorted_points()[0]
        for k in range(len(J)):
            e = [0] * len(J)
            e[k] = 1
            q_J = cell.find(le=[(e, -1)], eq=[(kappa, 0)])
            if q_J is not None:
                if q_J not in out:
                    out.append(q_J)
                break
    return out


def _kkt_points(forms, A: Sequence[int], J: Sequence[int], lambda0: int, cfg: SolverConfig):
    """Solve stationarity with multipliers ``w_i^2`` and ``F_i = 0`` on ``A``.

    Yields ``(x, multipliers)`` with ``x`` in R^n (zero off ``J``).
    """
    n = forms[0][0].n
    if lambda0 and not A:
        F0 = forms[0][0]
        used = set(F0.variables_used())
        free = [j for j in J if j not in used]
        for r in torus_critical_points(F0, cfg):
            for fill in _fills(len(free), cfg):
                x = np.zeros(n)
                x[list(J)] = r[list(J)]
                x[free] = fill
                yield x, {}
        return
    k, m = len(J), len(J) + len(A)
    names = [f"x{j}" for j in range(k)] + [f"w{t}" for t in range(len(A))]
    Fs = [forms[i][0].project(J).embed(list(range(k)), names) for i in A]
    F0 = forms[0][0].project(J).embed(list(range(k)), names)
    W = [Polynomial.variable(k + t, names) for t in range(len(A))]
    eqs = list(Fs)
    for j in range(k):
        s = F0.derivative(j) * lambda0
        for t in range(len(A)):
            s = s + W[t] * W[t] * Fs[t].derivative(j)
        eqs.append(s)
    if not lambda0:
        eqs.append(sum((w * w for w in W), Polynomial.zero(names)) - 1)
    roots = solve_system(eqs, cfg.with_(require_nonzero_coords=False), m, salt=31 + len(A))
    for y, _ in roots.roots:
        if np.any(np.abs(y[:k]) < cfg.dedupe_radius):
            continue
        x = np.zeros(n)
        x[list(J)] = y[:k]
        yield x, {i: float(y[k + t] ** 2) for t, i in enumerate(A)}


def search_minimizer_at_infinity(prob: ProblemInstance, f_star_estimate: float,
                                 cfg: SolverConfig = SolverConfig(),
                                 value_tol: float | None = None) -> InfinityCertificate | None:
    """Look for ``(J, q, x*, lambda*)`` satisfying the optimality conditions at infinity
    with face value near ``f_star_estimate``; every returned certificate verifies.
    """
    if not np.isfinite(f_star_estimate):
        raise ValueError("estimate must be finite")
    if value_tol is None:
        value_tol = 1e-2 * max(1.0, abs(f_star_estimate))
    for J in subsets(prob.n):
        I = [i for i, f in enumerate(prob.polys) if not f.is_constant_on(J)]
        if 0 not in I:
            continue
        cons = [i for i in I if i > 0]
        for q_J in _zero_level_normals(prob, J, I):
            q = extend_normal(q_J, J, prob.polys)
            forms = face_forms(prob, q)
            if forms[0][1] != 0 or not _in_subspace(forms[0][0], frozenset(J)):
                continue
            for lambda0 in (1, 0):
                for size in range(0 if lambda0 else 1, len(cons) + 1):
                    for A in itertools.combinations(cons, size):
                        for x, mult in _kkt_points(forms, A, J, lambda0, cfg):
                            value = forms[0][0].evaluate(x)
                            if abs(value - f_star_estimate) > value_tol:
                                continue
                            lam = [float(lambda0)] + [mult.get(i, 0.0) for i in range(1, prob.p + 1)]
                            cert = InfinityCertificate(tuple(J), q, tuple(float(v) for v in x), tuple(lam))
                            if verify_certificate(prob, cert, value).verdict == Verdict.HOLDS_VERIFIED:
                                return cert
    return None


def zero_infimum_branch(f_star_estimate: float, value_tol: float = 1e-2) -> bool:
    """Whether a failed search is still consistent with the alternative ``f* = 0``
    (objective positive along the escaping curve with vanishing leading term)."""
    return abs(f_star_estimate) <= value_tol
