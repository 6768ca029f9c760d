"""Non-degeneracy at infinity, the Mangasarian-Fromovitz property at
infinity, and verification of minimizer-at-infinity certificates.

Both properties quantify over all real points of semialgebraic sets, so
the checkers here search for violations.  A reported violation is always
re-verified in exact arithmetic; the absence of one is reported as
``HOLDS_HEURISTIC`` unless every system involved is a single monomial,
in which case the claim is exact and reported as ``HOLDS_VERIFIED``.
"""

from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Iterable, Sequence

import numpy as np

from . import geometry as geo
from .numeric import SolverConfig, solve_gradient_system, solve_system, strict_feasibility_exact
from .poly import Polynomial, PolynomialError, _dot, to_fraction

log = logging.getLogger(__name__)

ACTIVE_TOL = 1e-8
# gradients are compared against the size of their own terms, so points that
# merely sit close to a coordinate hyperplane do not pass as critical
RELATIVE_GRAD_TOL = 1e-7
SOLVER_RELATIVE_TOL = 1e-8
MARGIN_TOL = 1e-7


class Verdict(str, enum.Enum):
    HOLDS_VERIFIED = "HOLDS_VERIFIED"
    HOLDS_HEURISTIC = "HOLDS_HEURISTIC"
    FAILS = "FAILS"
    UNKNOWN = "UNKNOWN"

    @property
    def holds(self) -> bool:
        return self in (Verdict.HOLDS_VERIFIED, Verdict.HOLDS_HEURISTIC)


@dataclass(frozen=True)
class CheckStatus:
    verdict: Verdict
    witness: dict[str, Any] | None = None
    log: tuple[str, ...] = ()


@dataclass(frozen=True)
class ProblemInstance:
    """Minimise ``objective`` subject to ``g(x) <= 0`` for each constraint ``g``."""

    objective: Polynomial
    constraints: tuple[Polynomial, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        names = self.objective.var_names
        for k, f in enumerate(self.polys):
            if f.var_names != names:
                raise PolynomialError("all polynomials must share the same variables")
            if f.is_constant():
                what = "objective" if k == 0 else f"constraint {k}"
                raise PolynomialError(f"{what} is constant")

    @property
    def polys(self) -> tuple[Polynomial, ...]:
        return (self.objective,) + self.constraints

    @property
    def n(self) -> int:
        return self.objective.n

    @property
    def p(self) -> int:
        return len(self.constraints)

    @property
    def var_names(self) -> tuple[str, ...]:
        return self.objective.var_names


@dataclass(frozen=True)
class InfinityCertificate:
    """Data ``(J, q, x*, lambda*)`` of optimality conditions at infinity.

    ``J`` holds 0-based coordinate indices; ``lam[0]`` multiplies the objective.
    """

    J: tuple[int, ...]
    q: tuple[Fraction, ...]
    x_star: tuple[float, ...]
    lam: tuple[float, ...]


# -- shared helpers --------------------------------------------------------------

def subsets(n: int) -> Iterable[tuple[int, ...]]:
    """Nonempty subsets of ``range(n)`` ordered by size, then lexicographically."""
    for k in range(1, n + 1):
        yield from itertools.combinations(range(n), k)


def _rational_point(x: Sequence[float]) -> tuple[Fraction, ...]:
    return tuple(to_fraction(v) for v in x)


def _grad_exact(f: Polynomial, x: Sequence[Fraction]) -> list[Fraction]:
    return [d.evaluate_exact(x) for d in f.gradient()]


def _grad_scale(f: Polynomial, x: Sequence[Fraction]) -> Fraction:
    return max((d.term_scale(x) for d in f.gradient()), default=Fraction(0))


def gradient_tolerance(f: Polynomial, x: Sequence[Fraction], cfg: SolverConfig) -> Fraction:
    """Residual bound for re-evaluating a float root exactly: the solver
    tolerance plus room for rounding in the float evaluation."""
    return to_fraction(cfg.residual_tol) + Fraction(1, 10**12) * (1 + _grad_scale(f, x))


def _grad_scale_float(f: Polynomial, x: np.ndarray) -> float:
    best = 0.0
    ax = np.abs(x)
    for d in f.gradient():
        E, C = d._compiled
        if len(C):
            best = max(best, float(np.max(np.abs(C) * np.prod(ax[None, :] ** E, axis=1))))
    return best


def _relatively_critical(f: Polynomial, x: np.ndarray, rel: float) -> bool:
    g = np.array([d.evaluate(x) for d in f.gradient()])
    return float(np.linalg.norm(g)) <= rel * _grad_scale_float(f, x)


def _norm2_sq(v: Sequence[Fraction]) -> Fraction:
    return sum((c * c for c in v), Fraction(0))


def _is_monomial(f: Polynomial) -> bool:
    return len(f.terms) == 1 and not f.is_constant()


def _fills(k: int, cfg: SolverConfig) -> list[np.ndarray]:
    """Nonzero values for coordinates a system does not involve."""
    if k == 0:
        return [np.zeros(0)]
    rng = np.random.default_rng([cfg.rng_seed, 7919, k])
    rand = rng.uniform(0.5, 2.0, size=(2, k)) * rng.choice([-1.0, 1.0], size=(2, k))
    return [np.ones(k), -np.ones(k), rand[0], rand[1]]


@lru_cache(maxsize=4096)
def torus_critical_points(f: Polynomial, cfg: SolverConfig) -> tuple[np.ndarray, ...]:
    """Critical points of ``f`` with every coordinate nonzero.

    The search runs in the variables ``f`` involves; the others are set to 1.
    A constant ``f`` is critical everywhere and yields the all-ones point.
    """
    used = f.variables_used()
    if not used:
        return (np.ones(f.n),)
    if _is_monomial(f):
        # some partial derivative is a nonzero monomial: no root off the axes
        return ()
    g = f.project(used)
    roots = solve_gradient_system(g.gradient(), cfg.with_(require_nonzero_coords=True))
    out = []
    for x, _ in roots.roots:
        if not _relatively_critical(g, x, SOLVER_RELATIVE_TOL):
            continue
        full = np.ones(f.n)
        full[list(used)] = x
        out.append(full)
    return tuple(out)


@lru_cache(maxsize=4096)
def critical_points(f: Polynomial, cfg: SolverConfig) -> tuple[np.ndarray, ...]:
    """Critical points of ``f`` anywhere in R^n (unused variables set to 0)."""
    used = f.variables_used()
    if not used:
        return (np.zeros(f.n),)
    g = f.project(used)
    roots = solve_gradient_system(g.gradient(), cfg.with_(require_nonzero_coords=False))
    out = []
    for x, _ in roots.roots:
        full = np.zeros(f.n)
        full[list(used)] = x
        out.append(full)
    return tuple(out)


# -- non-degeneracy ----------------------------------------------------------------

def verify_ndg_witness(p: Polynomial, witness: dict, cfg: SolverConfig = SolverConfig()) -> bool:
    """Exact re-check of a (face, point) degeneracy witness."""
    G = geo.newton_polyhedron(p)
    try:
        face = G.face_with_points(tuple(pt) for pt in witness["face"])
    except geo.GeometryError:
        return False
    if not face.in_newton_boundary:
        return False
    x = _rational_point(witness["x"])
    if len(x) != p.n or any(v == 0 for v in x):
        return False
    fd = geo.face_polynomial(p, face)
    r2 = _norm2_sq(_grad_exact(fd, x))
    rel = to_fraction(RELATIVE_GRAD_TOL) * _grad_scale(fd, x)
    return r2 <= gradient_tolerance(fd, x, cfg) ** 2 and r2 <= rel * rel


def check_nondegenerate(p: Polynomial, cfg: SolverConfig = SolverConfig()) -> CheckStatus:
    """Search every Newton-boundary face polynomial for a critical point in the torus."""
    if p.is_constant():
        raise PolynomialError("non-degeneracy is not defined for a constant polynomial")
    G = geo.newton_polyhedron(p)
    entries = []
    exact = True
    for face in geo.newton_boundary(G):
        fd = geo.face_polynomial(p, face)
        label = f"face {face.sorted_points()}"
        if _is_monomial(fd):
            entries.append(f"{label}: monomial, no torus critical point (exact)")
            continue
        exact = False
        roots = torus_critical_points(fd, cfg)
        for x in roots:
            witness = {"face": face.sorted_points(), "q": face.rep_normal, "x": x}
            if verify_ndg_witness(p, witness, cfg):
                entries.append(f"{label}: critical point found")
                return CheckStatus(Verdict.FAILS, witness, tuple(entries))
            entries.append(f"{label}: candidate rejected on exact re-check")
        entries.append(f"{label}: no torus critical point found ({len(roots)} rejected)")
    verdict = Verdict.HOLDS_VERIFIED if exact else Verdict.HOLDS_HEURISTIC
    return CheckStatus(verdict, None, tuple(entries))


# -- Mangasarian-Fromovitz at infinity ---------------------------------------------

def extend_normal(q_J: Sequence[Fraction], J: Sequence[int], polys: Sequence[Polynomial]) -> tuple[Fraction, ...]:
    """Lift ``q_J`` to R^n with one large value ``M`` off ``J``.

    ``M`` exceeds every spread of ``<q_J, kappa_J>`` over all supports, so for
    each polynomial the minimising face lies in R^J whenever its support meets
    R^J at all.
    """
    n = polys[0].n
    vals = [sum((q_J[k] * e[j] for k, j in enumerate(J)), Fraction(0))
            for f in polys for e in f.support]
    M = 1 + max(vals) - min(Fraction(0), min(vals))
    q = [M] * n
    for k, j in enumerate(J):
        q[j] = Fraction(q_J[k])
    return tuple(q)


def face_forms(prob: ProblemInstance, q: Sequence[Fraction]) -> list[tuple[Polynomial, Fraction]]:
    return [f.initial_form(q) for f in prob.polys]


def _in_subspace(f: Polynomial, J: frozenset[int]) -> bool:
    return all(e[j] == 0 for e in f.support for j in range(f.n) if j not in J)


def _mf_point_analysis(prob: ProblemInstance, J: Sequence[int], q: Sequence[Fraction],
                       x: Sequence[Fraction], I: Sequence[int]) -> dict | None:
    """Exact check of conditions (i)-(iv) and the descent margin at ``x``.

    Returns the analysis record, or None if a condition fails.
    """
    Jset = frozenset(J)
    forms = face_forms(prob, q)
    d0 = forms[0][1]
    if d0 >= 0:
        return None
    if not all(_in_subspace(forms[i][0], Jset) for i in I):
        return None
    if any((x[j] != 0) != (j in Jset) for j in range(prob.n)):
        return None
    values = [F.evaluate_exact(x) for F, _ in forms]
    scales = [F.term_scale(x) for F, _ in forms]
    for i in range(1, prob.p + 1):
        if values[i] > ACTIVE_TOL * (1 + scales[i]):
            return None
    active = [i for i in I if abs(values[i]) <= ACTIVE_TOL * (1 + scales[i])]
    if not active:
        return {"active": [], "margin": None, "violated": False}
    # each gradient is divided by its own term scale; positive rescaling does not
    # change whether a common descent direction exists
    grads = []
    for i in active:
        g = _grad_exact(forms[i][0], x)
        s = _grad_scale(forms[i][0], x)
        grads.append([c / s for c in g] if s else g)
    margin = strict_feasibility_exact(grads, prob.n).margin
    return {"active": active, "margin": margin, "violated": margin <= to_fraction(MARGIN_TOL)}


def verify_mf_witness(prob: ProblemInstance, witness: dict) -> bool:
    """Exact re-check of a violation ``(J, q, x)`` of the MF property at infinity."""
    J = tuple(witness["J"])
    q = tuple(Fraction(v) for v in witness["q"])
    if not J or len(q) != prob.n or not any(q):
        return False
    x = _rational_point(witness["x"])
    I = [i for i, f in enumerate(prob.polys) if not f.is_constant_on(J)]
    rec = _mf_point_analysis(prob, J, q, x, I)
    return rec is not None and rec["violated"]


def _mf_cell_normals(prob: ProblemInstance, J: tuple[int, ...], I: list[int]) -> list[tuple[Fraction, ...]]:
    """One q in each common normal cell of the restricted polyhedra with d_0 < 0."""
    projected = [prob.polys[i].restrict(J).project(J) for i in I]
    polys = [geo.newton_polyhedron(f) for f in projected]
    G0 = polys[I.index(0)]
    out = []
    for cell in geo.normal_cells(polys):
        rep = cell.representative
        kappa = geo.face_of(G0, rep).sorted_points()[0]
        q_J = cell.find(le=[(kappa, -1)])
        if q_J is not None:
            out.append(q_J)
    return out


def _mf_candidates(prob: ProblemInstance, J: tuple[int, ...], q: tuple[Fraction, ...],
                   I: list[int], cfg: SolverConfig) -> Iterable[tuple[np.ndarray, list[int]]]:
    """Points in the J-torus that may satisfy some active-set system."""
    forms = face_forms(prob, q)
    p_active = list(I)
    for size in range(1, len(p_active) + 1):
        for A in itertools.combinations(p_active, size):
            if size == 1:
                F = forms[A[0]][0]
                roots = torus_critical_points(F, cfg)
                used = set(F.variables_used())
                free = [j for j in J if j not in used]
                for r in roots:
                    for fill in _fills(len(free), cfg):
                        x = np.zeros(prob.n)
                        for j in J:
                            x[j] = r[j]
                        x[free] = fill
                        yield x, list(A)
            else:
                yield from ((x, list(A)) for x in _joint_roots(forms, A, J, cfg))


def _joint_roots(forms, A: Sequence[int], J: Sequence[int], cfg: SolverConfig) -> list[np.ndarray]:
    """Solve ``F_i = 0 (i in A)``, ``sum w_i^2 grad F_i = 0``, ``sum w_i^2 = 1``."""
    k, m = len(J), len(J) + len(A)
    names = [f"x{j}" for j in range(k)] + [f"w{i}" for i in range(len(A))]
    emb = list(range(k))
    Fs = [forms[i][0].project(J).embed(emb, names) for i in A]
    W = [Polynomial.variable(k + t, names) for t in range(len(A))]
    eqs = list(Fs)
    for j in range(k):
        eqs.append(sum((W[t] * W[t] * Fs[t].derivative(j) for t in range(len(A))), Polynomial.zero(names)))
    eqs.append(sum((w * w for w in W), Polynomial.zero(names)) - 1)
    roots = solve_system(eqs, cfg.with_(require_nonzero_coords=False), m, salt=len(A))
    n = forms[0][0].n
    out = []
    for y, _ in roots.roots:
        if np.any(np.abs(y[:k]) < cfg.dedupe_radius):
            continue
        x = np.zeros(n)
        x[list(J)] = y[:k]
        out.append(x)
    return out


def check_mf_infinity(prob: ProblemInstance, cfg: SolverConfig = SolverConfig()) -> CheckStatus:
    """Search for a violation of the Mangasarian-Fromovitz property at infinity.

    ``q`` ranges over one representative per common normal cell of the
    restricted Newton polyhedra, extended off ``J`` by a large constant.
    """
    if prob.p > 8:
        raise ValueError("at most 8 constraints are supported")
    entries = []
    exact = prob.p == 0
    for J in subsets(prob.n):
        I = [i for i, f in enumerate(prob.polys) if not f.is_constant_on(J)]
        if 0 not in I:
            entries.append(f"J={list(J)}: objective constant on R^J, d_0 < 0 impossible")
            continue
        for q_J in _mf_cell_normals(prob, J, I):
            q = extend_normal(q_J, J, prob.polys)
            F0 = prob.objective.initial_form(q)[0]
            if prob.p == 0 and _is_monomial(F0):
                entries.append(f"J={list(J)} q={_fmt(q)}: monomial face, no violation (exact)")
                continue
            exact = False
            checked = 0
            for x, A in _mf_candidates(prob, J, q, I, cfg):
                if not _float_feasible(prob, q, x):
                    continue
                xr = _rational_point(x)
                rec = _mf_point_analysis(prob, J, q, xr, I)
                checked += 1
                if rec is not None and rec["violated"]:
                    witness = {"J": list(J), "q": list(q), "x": x, "active": rec["active"],
                               "margin": rec["margin"]}
                    if verify_mf_witness(prob, witness):
                        entries.append(f"J={list(J)} q={_fmt(q)}: violation at active set {rec['active']}")
                        return CheckStatus(Verdict.FAILS, witness, tuple(entries))
            entries.append(f"J={list(J)} q={_fmt(q)}: {checked} candidate points, no violation")
    verdict = Verdict.HOLDS_VERIFIED if exact else Verdict.HOLDS_HEURISTIC
    return CheckStatus(verdict, None, tuple(entries))


def _float_feasible(prob: ProblemInstance, q: Sequence[Fraction], x: np.ndarray) -> bool:
    """Cheap float screen of the constraint inequalities before the exact check."""
    for f in prob.constraints:
        F = f.initial_form(q)[0]
        E, C = F._compiled
        terms = np.abs(C) * np.prod(np.abs(x)[None, :] ** E, axis=1) if len(C) else np.zeros(1)
        if F.evaluate(x) > 1e-6 * (1 + terms.max()):
            return False
    return True


def _fmt(q: Sequence[Fraction]) -> str:
    return "(" + ", ".join(str(v) for v in q) + ")"


# -- translations between the two unconstrained witnesses ---------------------------

def ndg_to_mf_witness(p: Polynomial, witness: dict) -> dict:
    """Truncate a degeneracy witness to the smallest coordinate subspace of its face."""
    face_pts = [tuple(pt) for pt in witness["face"]]
    J = [j for j in range(p.n) if any(pt[j] for pt in face_pts)]
    G = geo.newton_polyhedron(p)
    face = G.face_with_points(face_pts)
    x = np.array(witness["x"], dtype=float)
    y = np.zeros(p.n)
    y[J] = x[J]
    q_face = _boundary_normal(G, face)
    q_J = [q_face[j] for j in J]
    q = extend_normal(q_J, J, [p])
    return {"J": J, "q": list(q), "x": y}


def _boundary_normal(G: geo.NewtonPolyhedron, face: geo.Face) -> tuple[Fraction, ...]:
    """A normal selecting ``face`` with negative support value."""
    cell = geo.NormalCell(face, tuple(G.cone_generators(face)), G.lineality)
    kappa = face.sorted_points()[0]
    q = cell.find(le=[(kappa, -1)])
    if q is None:
        raise geo.GeometryError("face is not in the Newton boundary")
    return q


def mf_to_ndg_witness(p: Polynomial, witness: dict) -> dict:
    """Read a degeneracy witness off an unconstrained MF violation."""
    q = [Fraction(v) for v in witness["q"]]
    F0, _ = p.initial_form(q)
    G = geo.newton_polyhedron(p)
    face = G.face_with_points(F0.support)
    x = np.array(witness["x"], dtype=float)
    x[x == 0] = 1.0
    return {"face": face.sorted_points(), "q": face.rep_normal, "x": x}


# -- certificate verification -------------------------------------------------------

CERT_ITEMS = ("shape", "J", "q", "i", "ii", "iii", "iv", "v")


def verify_certificate(prob: ProblemInstance, cert: InfinityCertificate, f_star_claim: float,
                       tol: float = 1e-8) -> CheckStatus:
    """Check items (i)-(v) of the certificate; also report the CQ for lambda_0 = 1."""
    n, p = prob.n, prob.p
    failed: list[str] = []
    notes: list[str] = []
    if len(cert.q) != n or len(cert.x_star) != n or len(cert.lam) != p + 1:
        return CheckStatus(Verdict.FAILS, {"failed": ["shape"]}, ("shape mismatch",))
    J = tuple(cert.J)
    if not J or len(set(J)) != len(J) or any(not 0 <= j < n for j in J):
        return CheckStatus(Verdict.FAILS, {"failed": ["J"]}, ("J must be a nonempty subset",))
    Jset = frozenset(J)
    q = tuple(Fraction(v) for v in cert.q)
    if not any(q) or min(q[j] for j in J) >= 0:
        failed.append("q")
        notes.append("q: need min over J of q_j < 0")
    x = _rational_point(cert.x_star)
    lam = [to_fraction(v) for v in cert.lam]
    T = to_fraction(tol)

    # (i) support pattern
    if any((x[j] != 0) != (j in Jset) for j in range(n)):
        failed.append("i")
        notes.append("i: nonzero pattern of x* differs from J")

    forms = face_forms(prob, q) if any(q) else None
    if forms is None:
        failed.extend(["ii", "iii", "iv"])
    else:
        F0, d0 = forms[0]
        # (ii) exact polyhedral part, then the value
        ok = True
        if d0 != 0:
            ok = False
            notes.append(f"ii: d(q, Gamma(f_0)) = {d0}, not 0")
        if not _in_subspace(F0, Jset):
            ok = False
            notes.append("ii: face of the objective leaves R^J")
        val = F0.evaluate_exact(x)
        if abs(val - to_fraction(f_star_claim)) > T * (1 + F0.term_scale(x)):
            ok = False
            notes.append(f"ii: face value {float(val)!r} differs from {f_star_claim!r}")
        if not ok:
            failed.append("ii")
        # (iii) stationarity
        total = [Fraction(0)] * n
        scale = Fraction(0)
        for li, (F, _) in zip(lam, forms):
            if li == 0:
                continue
            g = _grad_exact(F, x)
            total = [a + li * b for a, b in zip(total, g)]
            scale += abs(li) * _grad_scale(F, x)
        if max((abs(c) for c in total), default=0) > T * (1 + scale):
            failed.append("iii")
            notes.append("iii: multiplier combination of face gradients is not zero")
        # (iv) feasibility and complementarity
        for i in range(1, p + 1):
            F = forms[i][0]
            vi, si = F.evaluate_exact(x), F.term_scale(x)
            if vi > T * (1 + si) or abs(lam[i] * vi) > T * (1 + si) * (1 + abs(lam[i])):
                failed.append("iv")
                notes.append(f"iv: constraint {i} infeasible or not complementary")
                break
    # (v) multipliers
    if any(l < 0 for l in lam) or not any(lam):
        failed.append("v")
        notes.append("v: multipliers must be nonnegative and not all zero")

    cq = None
    if forms is not None:
        grads = []
        for i in range(1, p + 1):
            F = forms[i][0]
            if prob.polys[i].is_constant_on(J):
                continue
            if abs(F.evaluate_exact(x)) <= T * (1 + F.term_scale(x)):
                grads.append(_grad_exact(F, x))
        cq = strict_feasibility_exact(grads, n).feasible
    witness = {"failed": failed, "cq_holds": cq}
    if failed:
        return CheckStatus(Verdict.FAILS, witness, tuple(notes))
    return CheckStatus(Verdict.HOLDS_VERIFIED, witness, tuple(notes) or ("all items hold",))
