"""Seeded random polynomial generators shared by the property suites."""

from __future__ import annotations

import numpy as np

from newton_infinity.poly import Polynomial

NAMES = ("x", "y", "z")


def random_exponent(rng: np.random.Generator, n: int, max_degree: int) -> tuple[int, ...]:
    total = int(rng.integers(0, max_degree + 1))
    cuts = np.sort(rng.integers(0, total + 1, size=n - 1))
    parts = np.diff(np.concatenate([[0], cuts, [total]]))
    return tuple(int(v) for v in parts)


def random_polynomial(seed: int, n: int | None = None, max_degree: int = 6,
                      max_terms: int = 6) -> Polynomial:
    """Integer-coefficient polynomial in at most 3 variables, never constant."""
    rng = np.random.default_rng(seed)
    if n is None:
        n = int(rng.integers(1, 4))
    while True:
        k = int(rng.integers(2, max_terms + 1))
        terms = {}
        for _ in range(k):
            e = random_exponent(rng, n, max_degree)
            c = int(rng.integers(1, 6)) * int(rng.choice([-1, 1]))
            terms[e] = terms.get(e, 0) + c
        p = Polynomial(terms, NAMES[:n])
        if not p.is_constant():
            return p


def random_convenient(seed: int, n: int, max_degree: int = 6) -> Polynomial:
    """Random polynomial plus a positive pure power on every axis."""
    rng = np.random.default_rng(seed + 10_000)
    p = random_polynomial(seed, n, max_degree)
    terms = dict(p.terms)
    for j in range(n):
        e = [0] * n
        e[j] = int(rng.integers(1, max_degree + 1))
        c = terms.get(tuple(e), 0) + int(rng.integers(1, 4))
        terms[tuple(e)] = c if c else 1
    return Polynomial({e: c for e, c in terms.items() if c}, p.var_names)


def random_sos(seed: int, n: int, max_degree: int = 3) -> Polynomial:
    """Sum of two squares of random polynomials plus a constant: bounded below."""
    rng = np.random.default_rng(seed + 20_000)
    g1 = random_polynomial(seed, n, max_degree, 3)
    g2 = random_polynomial(seed + 50_000, n, max_degree, 3)
    c = int(rng.integers(0, 3))
    return g1 * g1 + g2 * g2 + c
