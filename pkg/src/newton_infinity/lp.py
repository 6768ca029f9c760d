"""Dense two-phase simplex over ``Fraction`` with Bland's rule.

Sizes in this package are tiny (tens of rows and columns), so a plain
tableau is fast enough and keeps every decision exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

Row = Sequence[int | Fraction]


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: tuple[Fraction, ...] | None = None
    value: Fraction | None = None

    @property
    def feasible(self) -> bool:
        return self.status != "infeasible"


def _pivot(T: list[list[Fraction]], basis: list[int], r: int, c: int) -> None:
    pr = T[r]
    inv = 1 / pr[c]
    if inv != 1:
        T[r] = pr = [v * inv for v in pr]
    for i, row in enumerate(T):
        if i != r and row[c] != 0:
            f = row[c]
            T[i] = [a - f * b for a, b in zip(row, pr)]
    basis[r] = c


def _optimize(T, basis, obj: list[Fraction], allowed: list[bool]) -> str:
    """Maximise ``obj . x`` on the current tableau; returns "optimal" or "unbounded"."""
    ncols = len(obj)
    while True:
        entering = -1
        for j in range(ncols):
            if not allowed[j] or j in basis:
                continue
            reduced = obj[j] - sum(obj[basis[i]] * T[i][j] for i in range(len(T)))
            if reduced > 0:
                entering = j
                break
        if entering < 0:
            return "optimal"
        best = None
        for i, row in enumerate(T):
            a = row[entering]
            if a > 0:
                ratio = row[-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return "unbounded"
        _pivot(T, basis, best[1], entering)


def linprog(c: Row, A_ub: Sequence[Row] = (), b_ub: Row = (),
            A_eq: Sequence[Row] = (), b_eq: Row = (),
            free: Sequence[int] = ()) -> LPResult:
    """Maximise ``c . x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``.

    Variables are nonnegative except those listed in ``free``.
    """
    nvar = len(c)
    free_set = set(free)
    # column layout: for each variable its nonnegative part, then negative parts of free ones
    neg_cols = {j: nvar + k for k, j in enumerate(sorted(free_set))}
    nx = nvar + len(neg_cols)

    def expand(row: Row) -> list[Fraction]:
        out = [Fraction(v) for v in row] + [Fraction(0)] * len(neg_cols)
        for j, k in neg_cols.items():
            out[k] = -Fraction(row[j])
        return out

    rows: list[tuple[list[Fraction], Fraction, str]] = []
    for a, b in zip(A_ub, b_ub):
        rows.append((expand(a), Fraction(b), "ub"))
    for a, b in zip(A_eq, b_eq):
        rows.append((expand(a), Fraction(b), "eq"))

    n_slack = sum(1 for _, _, kind in rows if kind == "ub")
    m = len(rows)
    ncols_pre = nx + n_slack
    T: list[list[Fraction]] = []
    basis: list[int] = []
    artificial_rows = []
    slack = nx
    for i, (a, b, kind) in enumerate(rows):
        row = a + [Fraction(0)] * n_slack
        if kind == "ub":
            row[slack] = Fraction(1)
            slack_col = slack
            slack += 1
        else:
            slack_col = None
        if b < 0:
            row = [-v for v in row]
            b = -b
            slack_col = None
        T.append(row + [b])
        basis.append(slack_col if slack_col is not None else -1)
        if slack_col is None:
            artificial_rows.append(i)

    n_art = len(artificial_rows)
    ncols = ncols_pre + n_art
    for i in range(m):
        T[i] = T[i][:-1] + [Fraction(0)] * n_art + [T[i][-1]]
    for k, i in enumerate(artificial_rows):
        T[i][ncols_pre + k] = Fraction(1)
        basis[i] = ncols_pre + k

    if n_art:
        obj1 = [Fraction(0)] * ncols_pre + [Fraction(-1)] * n_art
        _optimize(T, basis, obj1, [True] * ncols)
        if sum(T[i][-1] for i in range(m) if basis[i] >= ncols_pre) != 0:
            return LPResult("infeasible")
        # drive zero-level artificials out of the basis, dropping redundant rows
        i = 0
        while i < len(T):
            if basis[i] >= ncols_pre:
                col = next((j for j in range(ncols_pre) if T[i][j] != 0), None)
                if col is None:
                    del T[i]
                    del basis[i]
                    continue
                _pivot(T, basis, i, col)
            i += 1

    obj2 = [Fraction(0)] * ncols
    for j, v in enumerate(expand(c)):
        obj2[j] = v
    allowed = [True] * ncols_pre + [False] * n_art
    status = _optimize(T, basis, obj2, allowed)
    if status == "unbounded":
        return LPResult("unbounded")

    sol = [Fraction(0)] * ncols
    for i, j in enumerate(basis):
        sol[j] = T[i][-1]
    x = [sol[j] for j in range(nvar)]
    for j, k in neg_cols.items():
        x[j] -= sol[k]
    value = sum((Fraction(cj) * xj for cj, xj in zip(c, x)), Fraction(0))
    return LPResult("optimal", tuple(x), value)


def feasible_point(A_ub: Sequence[Row] = (), b_ub: Row = (),
                   A_eq: Sequence[Row] = (), b_eq: Row = (),
                   nvar: int | None = None, free: Sequence[int] = ()) -> tuple[Fraction, ...] | None:
    """Any point of the polyhedron, or ``None`` when it is empty."""
    if nvar is None:
        nvar = len(A_ub[0]) if A_ub else len(A_eq[0])
    res = linprog([0] * nvar, A_ub, b_ub, A_eq, b_eq, free)
    return res.x if res.status == "optimal" else None
