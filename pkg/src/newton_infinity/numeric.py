"""Floating-point kernel: multi-start damped Newton, an exact strict
feasibility LP, and a brute-force grid minimisation oracle."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .lp import linprog
from .poly import Polynomial, PolynomialError, to_fraction

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    box_radius: float = 10.0
    starts_per_axis: int = 7
    max_newton_iters: int = 100
    residual_tol: float = 1e-10
    dedupe_radius: float = 1e-6
    value_merge_tol: float = 1e-7
    rng_seed: int = 0
    require_nonzero_coords: bool = False
    unbounded_floor: float = -1e12
    max_starts: int = 2000

    def __post_init__(self):
        for name in ("box_radius", "residual_tol", "dedupe_radius", "value_merge_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.starts_per_axis < 2:
            raise ValueError("starts_per_axis must be at least 2")
        if self.max_newton_iters < 1 or self.max_starts < 1:
            raise ValueError("iteration and start limits must be positive")

    def with_(self, **changes) -> SolverConfig:
        return replace(self, **changes)


@dataclass(frozen=True)
class RootSet:
    roots: tuple[tuple[np.ndarray, float], ...] = ()
    complete: bool = field(default=False, init=False)

    def points(self) -> list[np.ndarray]:
        return [x for x, _ in self.roots]

    def __len__(self) -> int:
        return len(self.roots)


# -- multi-start Newton --------------------------------------------------------

def start_points(dim: int, cfg: SolverConfig, salt: int = 0) -> np.ndarray:
    """Jittered grid plus log-uniform random-sign points, deterministic in the seed."""
    rng = np.random.default_rng([cfg.rng_seed, dim, salt])
    K, R = cfg.starts_per_axis, cfg.box_radius
    half = cfg.max_starts // 2
    n_grid = K ** dim
    if n_grid <= half:
        axis = np.linspace(-R, R, K)
        grid = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    else:
        grid = rng.uniform(-R, R, size=(half, dim))
    spacing = 2 * R / (K - 1)
    grid = grid + rng.uniform(-0.25 * spacing, 0.25 * spacing, size=grid.shape)
    n_rand = min(n_grid, cfg.max_starts - len(grid))
    mags = np.exp(rng.uniform(np.log(1e-2), np.log(R), size=(n_rand, dim)))
    signs = rng.choice([-1.0, 1.0], size=(n_rand, dim))
    return np.vstack([grid, mags * signs])


def _eval_system(polys: Sequence[Polynomial], X: np.ndarray) -> np.ndarray:
    return np.stack([p.evaluate_batch(X) for p in polys], axis=1)


def _eval_jacobian(jac: Sequence[Sequence[Polynomial]], X: np.ndarray) -> np.ndarray:
    return np.stack([_eval_system(row, X) for row in jac], axis=1)


def _residual(polys, X):
    with np.errstate(all="ignore"):
        F = _eval_system(polys, X)
        r = np.linalg.norm(F, axis=1)
    r[~np.isfinite(r)] = np.inf
    return F, r


def newton_batch(polys: Sequence[Polynomial], starts: np.ndarray, cfg: SolverConfig,
                 jac: Sequence[Sequence[Polynomial]] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Run damped Gauss-Newton from every start at once.

    Returns final points and a boolean mask of starts that reached
    ``residual_tol``.  Steps use the minimum-norm least-squares solution,
    so non-square and rank-deficient systems are handled uniformly.
    """
    dim = starts.shape[1]
    if jac is None:
        jac = [[p.derivative(j) for j in range(dim)] for p in polys]
    cap = 10.0 * cfg.box_radius * max(1.0, np.sqrt(dim))
    X = starts.astype(float).copy()
    alive = np.ones(len(X), dtype=bool)
    converged = np.zeros(len(X), dtype=bool)
    for _ in range(cfg.max_newton_iters):
        idx = np.flatnonzero(alive & ~converged)
        if not len(idx):
            break
        Xa = X[idx]
        F, r = _residual(polys, Xa)
        done = r <= cfg.residual_tol
        converged[idx[done]] = True
        idx, Xa, F, r = idx[~done], Xa[~done], F[~done], r[~done]
        if not len(idx):
            break
        with np.errstate(all="ignore"):
            Jm = _eval_jacobian(jac, Xa)
            bad = ~np.isfinite(Jm).all(axis=(1, 2))
            Jm[bad] = 0.0
            step = np.einsum("sij,sj->si", np.linalg.pinv(Jm, rcond=1e-13), F)
        step[bad] = 0.0
        alpha = np.ones(len(idx))
        accepted = np.zeros(len(idx), dtype=bool)
        trial_X = Xa.copy()
        for _h in range(31):
            todo = ~accepted
            if not todo.any():
                break
            cand = Xa[todo] - alpha[todo, None] * step[todo]
            _, rt = _residual(polys, cand)
            ok = rt < r[todo]
            sel = np.flatnonzero(todo)[ok]
            trial_X[sel] = cand[ok]
            accepted[sel] = True
            alpha[todo] *= 0.5
        X[idx[accepted]] = trial_X[accepted]
        alive[idx[~accepted]] = False
        far = np.linalg.norm(X[idx], axis=1) > cap
        alive[idx[far]] = False
    idx = np.flatnonzero(alive & ~converged)
    if len(idx):
        _, r = _residual(polys, X[idx])
        converged[idx[r <= cfg.residual_tol]] = True
    return X, converged


def dedupe(points: np.ndarray, radius: float) -> list[int]:
    """Indices of points kept in order, dropping any within ``radius`` of a kept one."""
    kept: list[int] = []
    for i, x in enumerate(points):
        if kept and np.min(np.linalg.norm(points[kept] - x, axis=1)) <= radius:
            continue
        kept.append(i)
    return kept


def solve_system(polys: Sequence[Polynomial], cfg: SolverConfig, dim: int | None = None,
                 starts: np.ndarray | None = None, salt: int = 0) -> RootSet:
    """Approximate real solutions of ``polys = 0`` found by multi-start Newton."""
    if not polys:
        raise PolynomialError("empty system")
    dim = polys[0].n if dim is None else dim
    if any(p.n != dim for p in polys):
        raise PolynomialError("system polynomials have mismatched dimensions")
    if starts is None:
        starts = start_points(dim, cfg, salt)
    X, ok = newton_batch(polys, starts, cfg)
    roots = X[ok]
    if cfg.require_nonzero_coords and len(roots):
        roots = roots[np.all(np.abs(roots) >= cfg.dedupe_radius, axis=1)]
    if not len(roots):
        return RootSet(())
    roots = roots[dedupe(roots, cfg.dedupe_radius)]
    _, r = _residual(polys, roots)
    return RootSet(tuple((x, float(ri)) for x, ri in zip(roots, r)))


def solve_gradient_system(grads: Sequence[Polynomial], cfg: SolverConfig) -> RootSet:
    """Critical points: simultaneous zeros of the n partial derivatives."""
    if not grads:
        raise PolynomialError("empty gradient list")
    n = grads[0].n
    if len(grads) != n:
        raise PolynomialError(f"expected {n} partial derivatives, got {len(grads)}")
    return solve_system(grads, cfg, n)


# -- strict feasibility --------------------------------------------------------

@dataclass(frozen=True)
class StrictFeasibility:
    """Exact optimum of ``max t : <g, v> <= -t for all g, |v|_inf <= 1``."""

    margin: Fraction
    v: tuple[Fraction, ...]

    @property
    def feasible(self) -> bool:
        return self.margin > 0


def strict_feasibility_exact(g_list: Sequence[Sequence], n: int | None = None) -> StrictFeasibility:
    gs = [[to_fraction(v) for v in g] for g in g_list]
    if not gs:
        if n is None:
            raise ValueError("dimension required for an empty list")
        return StrictFeasibility(Fraction(1), tuple(Fraction(int(j == 0)) for j in range(n)))
    n = len(gs[0])
    if any(len(g) != n for g in gs):
        raise ValueError("vectors have different lengths")
    # substitute v = u - 1 with 0 <= u <= 2 so every variable is nonnegative
    A, b = [], []
    for g in gs:
        A.append(g + [Fraction(1)])
        b.append(sum(g))
    for j in range(n):
        row = [Fraction(0)] * (n + 1)
        row[j] = Fraction(1)
        A.append(row)
        b.append(Fraction(2))
    res = linprog([0] * n + [1], A, b)
    u, t = res.x[:n], res.x[n]
    return StrictFeasibility(t, tuple(uj - 1 for uj in u))


def strict_feasibility(g_list: Sequence[Sequence], n: int | None = None) -> np.ndarray | None:
    """A direction ``v`` with ``<g, v> < 0`` for every ``g``, or None.

    >>> strict_feasibility([(1, 1), (1, -1)])
    array([-1.,  0.])
    >>> strict_feasibility([(1, 0), (-1, 0)]) is None
    True
    """
    res = strict_feasibility_exact(g_list, n)
    if not res.feasible:
        return None
    return np.array([float(v) for v in res.v])


# -- grid oracle ---------------------------------------------------------------

class NoFeasiblePointError(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleResult:
    value: float
    argmin: np.ndarray
    grid_points: int
    suspect_unbounded: bool


_AXIS_FACTOR = {1: 32, 2: 16, 3: 4}
_CHUNK = 200_000


def _grid_core(p: Polynomial, constraints: Sequence[Polynomial], K: int, R: float,
               feas_tol: float, n_polish: int = 5) -> tuple[float, np.ndarray, int] | None:
    n = p.n
    N = _AXIS_FACTOR.get(n, 2 if n == 4 else 1) * K + 1
    axis = np.linspace(-R, R, N)
    total = N ** n
    best_vals: list[np.ndarray] = []
    best_pts: list[np.ndarray] = []
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(total, start + _CHUNK))
        X = axis[np.stack(np.unravel_index(flat, (N,) * n), axis=1)]
        with np.errstate(all="ignore"):
            vals = p.evaluate_batch(X)
            ok = np.isfinite(vals)
            for g in constraints:
                ok &= g.evaluate_batch(X) <= feas_tol
        if not ok.any():
            continue
        X, vals = X[ok], vals[ok]
        top = np.argsort(vals, kind="stable")[:n_polish]
        best_vals.append(vals[top])
        best_pts.append(X[top])
    if not best_vals:
        return None
    vals = np.concatenate(best_vals)
    pts = np.concatenate(best_pts)
    order = np.argsort(vals, kind="stable")[:n_polish]
    best_v, best_x = float(vals[order[0]]), pts[order[0]]
    for i in order:
        v, x = _polish(p, constraints, pts[i], R, feas_tol)
        if v < best_v:
            best_v, best_x = v, x
    return best_v, best_x, total


def _feasible(constraints, x, tol) -> bool:
    return all(g.evaluate(x) <= tol for g in constraints)


def _polish(p: Polynomial, constraints: Sequence[Polynomial], x0: np.ndarray, R: float,
            feas_tol: float) -> tuple[float, np.ndarray]:
    grad = p.gradient()
    cgrads = [g.gradient() for g in constraints]
    rho = 1e4

    def fun(x):
        val = p.evaluate(x)
        gv = np.array([d.evaluate(x) for d in grad])
        for g, dg in zip(constraints, cgrads):
            viol = g.evaluate(x)
            if viol > 0:
                val += rho * viol * viol
                gv += 2 * rho * viol * np.array([d.evaluate(x) for d in dg])
        return val, gv

    with np.errstate(all="ignore"):
        res = minimize(fun, x0, jac=True, method="L-BFGS-B", bounds=[(-R, R)] * p.n,
                       options={"maxiter": 200})
    x = np.clip(res.x, -R, R)
    # pull back toward the grid point until feasible
    for _ in range(30):
        if _feasible(constraints, x, feas_tol):
            v = p.evaluate(x)
            if np.isfinite(v):
                return v, x
            break
        x = 0.5 * (x + x0)
    return p.evaluate(x0), x0


def grid_infimum_oracle(p: Polynomial, constraints: Sequence[Polynomial], cfg: SolverConfig,
                        feas_tol: float = 1e-9) -> OracleResult:
    """Minimum of ``p`` over feasible points of a nested grid on ``[-R, R]^n``, polished.

    The result at ``starts_per_axis = K`` is also taken over the grids for
    ``K/2, K/4, ...`` when those are integers, so doubling ``K`` can only
    lower the reported value.
    """
    if any(g.n != p.n for g in constraints):
        raise PolynomialError("constraint dimension mismatch")
    best: tuple[float, np.ndarray] | None = None
    points = 0
    K = cfg.starts_per_axis
    levels = [K]
    while levels[-1] % 2 == 0 and levels[-1] // 2 >= 1:
        levels.append(levels[-1] // 2)
    for k in reversed(levels):
        core = _grid_core(p, constraints, k, cfg.box_radius, feas_tol)
        if core is None:
            continue
        v, x, cnt = core
        points += cnt
        if best is None or v < best[0]:
            best = (v, x)
    if best is None:
        raise NoFeasiblePointError("no grid point satisfies the constraints")
    v, x = best
    return OracleResult(v, x, points, v < cfg.unbounded_floor)
