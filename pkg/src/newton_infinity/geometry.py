"""Newton polyhedra at infinity and their face lattices, in exact arithmetic.

The hull of a support set is computed inside its affine span (so points,
segments and other lower-dimensional hulls are ordinary inputs) with the
double description method on integer data.  Facet normals are inner
normals: ``<a, kappa> >= b`` on the hull with equality on the facet.
Normal cones live in the ambient space; when the hull is not full
dimensional they contain the lineality space orthogonal to its span.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from math import gcd
from typing import Iterable, Sequence

from .lp import linprog
from .poly import Exponent, Polynomial, PolynomialError, _dot

log = logging.getLogger(__name__)

Vector = tuple[Fraction, ...]


class GeometryError(ValueError):
    pass


# -- exact linear algebra ----------------------------------------------------

def _rref(rows: Sequence[Sequence], ncols: int) -> tuple[list[list[Fraction]], list[int]]:
    M = [[Fraction(v) for v in r] for r in rows]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        inv = 1 / M[r][c]
        M[r] = [v * inv for v in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == len(M):
            break
    return M[:r], pivots


def rank(rows: Sequence[Sequence], ncols: int) -> int:
    return len(_rref(rows, ncols)[1]) if rows else 0


def primitive(vec: Sequence) -> tuple[int, ...]:
    """Scale a rational vector to coprime integers (zero stays zero)."""
    fr = [Fraction(v) for v in vec]
    den = reduce(lambda a, b: a * b // gcd(a, b), (v.denominator for v in fr), 1)
    ints = [int(v * den) for v in fr]
    g = reduce(gcd, (abs(v) for v in ints), 0)
    return tuple(v // g for v in ints) if g else tuple(ints)


def nullspace(rows: Sequence[Sequence], ncols: int) -> list[tuple[int, ...]]:
    """Integer basis of ``{v : row . v = 0 for every row}``."""
    R, pivots = _rref(rows, ncols) if rows else ([], [])
    basis = []
    for free in (c for c in range(ncols) if c not in pivots):
        v = [Fraction(0)] * ncols
        v[free] = Fraction(1)
        for row, pc in zip(R, pivots):
            v[pc] = -row[free]
        basis.append(primitive(v))
    return basis


def affine_rank(points: Sequence[Exponent]) -> int:
    if len(points) <= 1:
        return 0
    base = points[0]
    return rank([[a - b for a, b in zip(p, base)] for p in points[1:]], len(base))


def affine_span_contains_origin(points: Sequence[Exponent]) -> bool:
    base = points[0]
    diffs = [[a - b for a, b in zip(p, base)] for p in points[1:]]
    n = len(base)
    return rank(diffs, n) == rank(diffs + [list(base)], n)


# -- double description ------------------------------------------------------

def _full_dim_facets(points: list[tuple[int, ...]], k: int) -> list[tuple[tuple[int, ...], int]]:
    """Facets ``(a, b)`` with ``<a, p> >= b`` of a full-dimensional hull in Z^k."""
    rows = [(1,) + p for p in points]
    d = k + 1
    basis_idx: list[int] = []
    for i, r in enumerate(rows):
        if rank([rows[j] for j in basis_idx] + [r], d) > len(basis_idx):
            basis_idx.append(i)
            if len(basis_idx) == d:
                break
    B = [[Fraction(v) for v in rows[i]] for i in basis_idx]
    aug = [row + [Fraction(int(i == j)) for j in range(d)] for i, row in enumerate(B)]
    R, _ = _rref(aug, 2 * d)
    Binv = [row[d:] for row in R]
    rays: list[tuple[int, ...]] = []
    zeros: list[int] = []
    all_basis = sum(1 << i for i in basis_idx)
    for j in range(d):
        rays.append(primitive([Binv[r][j] for r in range(d)]))
        zeros.append(all_basis & ~(1 << basis_idx[j]))

    done = set(basis_idx)
    for i, a in enumerate(rows):
        if i in done:
            continue
        vals = [sum(x * y for x, y in zip(a, r)) for r in rays]
        new_rays, new_zeros = [], []
        pos = [t for t, v in enumerate(vals) if v > 0]
        neg = [t for t, v in enumerate(vals) if v < 0]
        for t, v in enumerate(vals):
            if v > 0:
                new_rays.append(rays[t])
                new_zeros.append(zeros[t])
            elif v == 0:
                new_rays.append(rays[t])
                new_zeros.append(zeros[t] | (1 << i))
        for tp in pos:
            for tn in neg:
                common = zeros[tp] & zeros[tn]
                if common.bit_count() < d - 2:
                    continue
                if any(t != tp and t != tn and (common & zeros[t]) == common
                       for t in range(len(rays))):
                    continue
                vp, vn = vals[tp], vals[tn]
                combo = [vp * y - vn * x for x, y in zip(rays[tp], rays[tn])]
                new_rays.append(primitive(combo))
                new_zeros.append(common | (1 << i))
        rays, zeros = new_rays, new_zeros
        done.add(i)

    facets = []
    for y in rays:
        a = y[1:]
        g = reduce(gcd, (abs(v) for v in a), 0)
        if g == 0:
            continue
        facets.append((tuple(v // g for v in a), -y[0] // g))
    return sorted(set(facets))


@dataclass(frozen=True)
class _Hull:
    n: int
    points: tuple[Exponent, ...]
    dim: int
    facets: tuple[tuple[tuple[int, ...], int], ...]
    lineality: tuple[tuple[int, ...], ...]
    faces: tuple[tuple[frozenset[int], frozenset[int]], ...]  # (point ids, facet ids)


def _hull(points: Iterable[Exponent], n: int) -> _Hull:
    pts = tuple(sorted(set(tuple(int(v) for v in p) for p in points)))
    if not pts:
        raise GeometryError("empty point set")
    base = pts[0]
    diffs = [[a - b for a, b in zip(p, base)] for p in pts[1:]]
    R, pivots = _rref(diffs, n) if diffs else ([], [])
    k = len(pivots)
    lineality = tuple(nullspace(R, n)) if R else tuple(
        tuple(int(i == j) for j in range(n)) for i in range(n))

    facets: list[tuple[tuple[int, ...], int]] = []
    if k > 0:
        projected = [tuple(p[c] for c in pivots) for p in pts]
        for a, b in _full_dim_facets(projected, k):
            lifted = [0] * n
            for c, v in zip(pivots, a):
                lifted[c] = v
            facets.append((tuple(lifted), b))
    facets.sort()

    facet_sets = [frozenset(i for i, p in enumerate(pts) if _dot(a, p) == b) for a, b in facets]
    full = frozenset(range(len(pts)))
    found = {full: frozenset()}
    queue = [full]
    while queue:
        F = queue.pop()
        for S in facet_sets:
            G = F & S
            if G and G != F and G not in found:
                found[G] = frozenset()
                queue.append(G)
    faces = []
    for G in found:
        fids = frozenset(fi for fi, S in enumerate(facet_sets) if G <= S)
        faces.append((G, fids))
    return _Hull(n, pts, k, tuple(facets), lineality, tuple(faces))


# -- public types ------------------------------------------------------------

@dataclass(frozen=True)
class Facet:
    normal: tuple[int, ...]
    offset: int


@dataclass(frozen=True)
class Face:
    id: int
    dim: int
    vertex_ids: tuple[int, ...]
    lattice_points: frozenset[Exponent]
    facet_ids: tuple[int, ...]
    rep_normal: tuple[int, ...] | None
    d_value: Fraction | None
    in_newton_boundary: bool
    is_bad: bool
    span_contains_origin: bool
    bad_witness: tuple[int, ...] | None = None

    def sorted_points(self) -> list[Exponent]:
        return sorted(self.lattice_points)

    def variables(self) -> tuple[int, ...]:
        """Coordinates that are positive somewhere on the face."""
        n = len(next(iter(self.lattice_points)))
        return tuple(j for j in range(n) if any(p[j] for p in self.lattice_points))


@dataclass(frozen=True)
class NewtonPolyhedron:
    n: int
    support_points: tuple[Exponent, ...]
    vertices: tuple[Exponent, ...]
    facets: tuple[Facet, ...]
    faces: tuple[Face, ...]
    dim: int
    lineality: tuple[tuple[int, ...], ...]
    _by_points: dict = field(default=None, repr=False, compare=False)

    def face_with_points(self, points: Iterable[Exponent]) -> Face:
        key = frozenset(points)
        try:
            return self._by_points[key]
        except KeyError:
            raise GeometryError("point set is not a face of this polyhedron") from None

    @property
    def full_face(self) -> Face:
        return self.face_with_points(self.support_points)

    def cone_generators(self, face: Face) -> list[tuple[int, ...]]:
        return [self.facets[i].normal for i in face.facet_ids]


def _check_q(q: Sequence, n: int) -> tuple[Fraction, ...]:
    if len(q) != n:
        raise GeometryError(f"normal has length {len(q)}, expected {n}")
    qf = tuple(Fraction(v) for v in q)
    if not any(qf):
        raise GeometryError("q must be nonzero")
    return qf


def _in_newton_boundary(point: Exponent, generators, lineality) -> bool:
    # d is linear on the normal cone; it takes a negative value in the relative
    # interior iff some generator or lineality direction makes it nonzero-negative.
    if any(_dot(a, point) < 0 for a in generators):
        return True
    return any(_dot(l, point) != 0 for l in lineality)


def _bad_witness(face_points: Sequence[Exponent], other_vertices: Sequence[Exponent],
                 n: int) -> tuple[int, ...] | None:
    """Mixed-sign q vanishing on the face and positive on every other vertex."""
    A_eq: list[list[int]] = []
    for p in face_points:
        if rank(A_eq + [list(p)], n) > len(A_eq):
            A_eq.append(list(p))
    b_eq = [0] * len(A_eq)
    base_ub = [[-v for v in p] for p in other_vertices]
    base_b = [-1] * len(base_ub)
    for i, j in itertools.permutations(range(n), 2):
        e_i = [0] * n
        e_i[i] = -1
        e_j = [0] * n
        e_j[j] = 1
        res = linprog([0] * n, base_ub + [e_i, e_j], base_b + [-1, -1],
                      A_eq, b_eq, free=range(n))
        if res.status == "optimal":
            return primitive(res.x)
    return None


def polyhedron_from_points(points: Iterable[Exponent], n: int, classify: bool = True) -> NewtonPolyhedron:
    h = _hull(points, n)
    pts = h.points
    raw = sorted(h.faces, key=lambda f: (affine_rank([pts[i] for i in sorted(f[0])]),
                                         sorted(pts[i] for i in f[0])))
    vertices = tuple(sorted(pts[next(iter(G))] for G, _ in raw if len(G) == 1
                            and affine_rank([pts[next(iter(G))]]) == 0))
    vindex = {v: i for i, v in enumerate(vertices)}
    faces = []
    for fid, (G, fids) in enumerate(raw):
        fpts = [pts[i] for i in sorted(G)]
        dim = affine_rank(fpts)
        gens = [h.facets[i][0] for i in sorted(fids)]
        if gens:
            rep = primitive([sum(col) for col in zip(*gens)])
        elif h.lineality:
            rep = h.lineality[0]
        else:
            rep = None
        d_value = Fraction(_dot(rep, fpts[0])) if rep is not None else None
        span0 = affine_span_contains_origin(fpts)
        vids = tuple(vindex[p] for p in fpts if p in vindex)
        witness = None
        if classify and span0 and any(any(p) for p in fpts) and n >= 2:
            others = [v for v in vertices if v not in fpts]
            witness = _bad_witness(fpts, others, n)
        faces.append(Face(
            id=fid, dim=dim, vertex_ids=vids, lattice_points=frozenset(fpts),
            facet_ids=tuple(sorted(fids)), rep_normal=rep, d_value=d_value,
            in_newton_boundary=_in_newton_boundary(fpts[0], gens, h.lineality),
            is_bad=witness is not None, span_contains_origin=span0, bad_witness=witness))
    by_points = {f.lattice_points: f for f in faces}
    return NewtonPolyhedron(
        n=n, support_points=pts, vertices=vertices,
        facets=tuple(Facet(a, b) for a, b in h.facets), faces=tuple(faces),
        dim=h.dim, lineality=h.lineality, _by_points=by_points)


# -- operations --------------------------------------------------------------

def newton_polyhedron(p: Polynomial) -> NewtonPolyhedron:
    """Convex hull of the support of ``p`` (the origin is not adjoined)."""
    if p.is_zero():
        raise GeometryError("the zero polynomial has no Newton polyhedron")
    if p.n > 6:
        raise GeometryError("at most 6 variables are supported")
    if p.n > 4:
        log.warning("hull computation in %d variables may be slow", p.n)
    return polyhedron_from_points(p.support, p.n)


def support_value(G: NewtonPolyhedron, q: Sequence) -> Fraction:
    qf = _check_q(q, G.n)
    return min(Fraction(_dot(qf, v)) for v in G.vertices)


def face_of(G: NewtonPolyhedron, q: Sequence) -> Face:
    qf = _check_q(q, G.n)
    values = {p: _dot(qf, p) for p in G.support_points}
    d = min(values.values())
    return G.face_with_points(p for p, v in values.items() if v == d)


def newton_boundary(G: NewtonPolyhedron) -> list[Face]:
    return [f for f in G.faces if f.in_newton_boundary]


def bad_faces(G: NewtonPolyhedron) -> list[Face]:
    return [f for f in G.faces if f.is_bad]


def is_convenient(p: Polynomial) -> bool:
    if p.is_zero():
        raise GeometryError("the zero polynomial is not convenient")
    for j in range(p.n):
        if not any(e[j] > 0 and sum(e) == e[j] for e in p.support):
            return False
    return True


def face_polynomial(p: Polynomial, face: Face) -> Polynomial:
    """Sum of the terms of ``p`` whose exponents lie on ``face``."""
    if not face.lattice_points <= p.support:
        raise GeometryError("face does not belong to the Newton polyhedron of p")
    if face.rep_normal is not None:
        values = {e: _dot(face.rep_normal, e) for e in p.support}
        d = min(values.values())
        if frozenset(e for e, v in values.items() if v == d) != face.lattice_points:
            raise GeometryError("face does not belong to the Newton polyhedron of p")
    elif face.lattice_points != p.support:
        raise GeometryError("face does not belong to the Newton polyhedron of p")
    return p.subpolynomial(face.lattice_points)


def coordinate_face(G: NewtonPolyhedron, J: Iterable[int]) -> Face | None:
    """The face ``G`` cut by the coordinate subspace R^J, or None if empty."""
    Jset = frozenset(J)
    pts = [p for p in G.support_points if all(p[j] == 0 for j in range(G.n) if j not in Jset)]
    if not pts:
        return None
    return G.face_with_points(pts)


def restrict_polyhedron_check(p: Polynomial, J: Iterable[int]) -> bool:
    """Compare the hull of supp(p) cut by R^J against the hull of supp(p|R^J)."""
    Jset = frozenset(J)
    r = p.restrict(Jset)
    if r.is_constant():
        raise PolynomialError("restriction to R^J is constant")
    G = newton_polyhedron(p)
    cut = coordinate_face(G, Jset)
    if cut is None:
        return False
    H = newton_polyhedron(r)
    cut_vertices = sorted(G.vertices[i] for i in cut.vertex_ids)
    return cut_vertices == sorted(H.vertices) and cut.lattice_points == frozenset(H.support_points)


# -- normal fans -------------------------------------------------------------

@dataclass(frozen=True)
class NormalCell:
    """Relative interior of the normal cone of one face of a Minkowski sum."""

    face: Face
    generators: tuple[tuple[int, ...], ...]
    lineality: tuple[tuple[int, ...], ...]

    @property
    def representative(self) -> tuple[int, ...] | None:
        return self.face.rep_normal

    def find(self, le: Sequence[tuple[Sequence, int | Fraction]] = (),
             eq: Sequence[tuple[Sequence, int | Fraction]] = ()) -> tuple[Fraction, ...] | None:
        """A q in this cell with ``<a, q> <= b`` for each (a, b) in ``le`` and
        ``<a, q> = b`` for each in ``eq``; None when infeasible.
        """
        ng, nl = len(self.generators), len(self.lineality)
        if ng + nl == 0:
            return None
        cols = list(self.generators) + list(self.lineality)

        def lift(a):
            return [sum(Fraction(ai) * ci for ai, ci in zip(a, col)) for col in cols]

        A_ub = [lift(a) for a, _ in le]
        b_ub = [b for _, b in le]
        A_eq = [lift(a) for a, _ in eq]
        b_eq = [b for _, b in eq]
        for t in range(ng):
            row = [0] * (ng + nl)
            row[t] = -1
            A_ub.append(row)
            b_ub.append(-1)
        res = linprog([0] * (ng + nl), A_ub, b_ub, A_eq, b_eq, free=range(ng, ng + nl))
        if res.status != "optimal":
            return None
        n = len(cols[0])
        q = tuple(sum((res.x[t] * cols[t][j] for t in range(ng + nl)), Fraction(0)) for j in range(n))
        return q if any(q) else None


def minkowski_sum(polyhedra: Sequence[NewtonPolyhedron]) -> NewtonPolyhedron:
    if not polyhedra:
        raise GeometryError("need at least one polyhedron")
    n = polyhedra[0].n
    if any(P.n != n for P in polyhedra):
        raise GeometryError("polyhedra have different ambient dimensions")
    points = {tuple([0] * n)}
    for P in polyhedra:
        points = {tuple(a + b for a, b in zip(s, v)) for s in points for v in P.vertices}
    return polyhedron_from_points(points, n, classify=False)


def normal_cells(polyhedra: Sequence[NewtonPolyhedron]) -> list[NormalCell]:
    """Cells of the common refinement of the normal fans (apex excluded)."""
    S = minkowski_sum(polyhedra)
    cells = []
    for face in S.faces:
        gens = tuple(S.cone_generators(face))
        if not gens and not S.lineality:
            continue
        cells.append(NormalCell(face, gens, S.lineality))
    return cells


def common_normal_candidates(polyhedra: Sequence[NewtonPolyhedron]) -> list[tuple[int, ...]]:
    """One relative-interior normal per cell of the common refinement.

    Cells that are whole linear subspaces contribute both signs of their
    representative, since the support value changes sign across them.
    """
    out: list[tuple[int, ...]] = []
    seen = set()
    for cell in normal_cells(polyhedra):
        q = cell.representative
        reps = [q] if cell.generators else [q, tuple(-v for v in q)]
        for r in reps:
            if r not in seen:
                seen.add(r)
                out.append(r)
    return out
