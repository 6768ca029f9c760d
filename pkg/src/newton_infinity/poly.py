"""Exact sparse multivariate polynomials.

A polynomial is a mapping from exponent tuples to nonzero ``Fraction``
coefficients, together with the names of its variables::

    x^2*y + 3   ->   {(2, 1): Fraction(1), (0, 0): Fraction(3)}

Values are immutable once built.  Floating-point evaluation converts the
coefficients at the call boundary; everything else is exact.
"""

from __future__ import annotations

import re
from fractions import Fraction
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

Exponent = tuple[int, ...]
Rational = int | Fraction


class PolynomialError(ValueError):
    pass


class ParseError(PolynomialError):
    """Raised on malformed polynomial text; ``position`` is a 0-based offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownVariableError(ParseError):
    pass


class ExponentError(ParseError):
    pass


def _dot(q: Sequence[Rational], kappa: Exponent) -> Rational:
    return sum(qj * kj for qj, kj in zip(q, kappa) if kj)


class Polynomial:
    """Sparse polynomial with rational coefficients in ``len(var_names)`` variables."""

    def __init__(self, terms: Mapping[Sequence[int], Rational], var_names: Sequence[str]):
        names = tuple(var_names)
        if not names:
            raise PolynomialError("a polynomial needs at least one variable")
        n = len(names)
        clean: dict[Exponent, Fraction] = {}
        for exp, coeff in terms.items():
            key = tuple(int(e) for e in exp)
            if len(key) != n:
                raise PolynomialError(f"exponent {key} has length {len(key)}, expected {n}")
            if any(e < 0 for e in key):
                raise PolynomialError(f"negative exponent in {key}")
            clean[key] = clean.get(key, Fraction(0)) + Fraction(coeff)
        self._terms = {e: c for e, c in clean.items() if c != 0}
        self._names = names

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, var_names: Sequence[str]) -> Polynomial:
        return cls({}, var_names)

    @classmethod
    def constant(cls, value: Rational, var_names: Sequence[str]) -> Polynomial:
        return cls({(0,) * len(var_names): value}, var_names)

    @classmethod
    def variable(cls, index: int, var_names: Sequence[str]) -> Polynomial:
        exp = [0] * len(var_names)
        exp[index] = 1
        return cls({tuple(exp): 1}, var_names)

    # -- basic accessors ----------------------------------------------------

    @property
    def n(self) -> int:
        return len(self._names)

    @property
    def var_names(self) -> tuple[str, ...]:
        return self._names

    @property
    def terms(self) -> Mapping[Exponent, Fraction]:
        return MappingProxyType(self._terms)

    @cached_property
    def support(self) -> frozenset[Exponent]:
        return frozenset(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self._terms)

    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=0)

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * self.n, Fraction(0))

    def variables_used(self) -> tuple[int, ...]:
        """Indices of the variables that occur with a positive exponent."""
        return tuple(j for j in range(self.n) if any(e[j] for e in self._terms))

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> Polynomial:
        if isinstance(other, Polynomial):
            if other._names != self._names:
                raise PolynomialError("polynomials are over different variables")
            return other
        if isinstance(other, (int, Fraction)):
            return Polynomial.constant(other, self._names)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out.get(e, Fraction(0)) + c
        return Polynomial(out, self._names)

    __radd__ = __add__

    def __neg__(self) -> Polynomial:
        return Polynomial({e: -c for e, c in self._terms.items()}, self._names)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict[Exponent, Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return Polynomial(out, self._names)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> Polynomial:
        if not isinstance(k, int) or k < 0:
            raise PolynomialError("exponent must be a nonnegative integer")
        result = Polynomial.constant(1, self._names)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._names == other._names and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self._names, frozenset(self._terms.items())))

    # -- calculus and restriction -------------------------------------------

    def derivative(self, j: int) -> Polynomial:
        out = {}
        for e, c in self._terms.items():
            if e[j]:
                d = list(e)
                d[j] -= 1
                out[tuple(d)] = c * e[j]
        return Polynomial(out, self._names)

    def gradient(self) -> list[Polynomial]:
        return [self.derivative(j) for j in range(self.n)]

    def _check_subset(self, J: Iterable[int]) -> frozenset[int]:
        Jset = frozenset(J)
        if not Jset:
            raise PolynomialError("J must be nonempty")
        if any(not 0 <= j < self.n for j in Jset):
            raise PolynomialError(f"J={sorted(Jset)} out of range for n={self.n}")
        return Jset

    def restrict(self, J: Iterable[int]) -> Polynomial:
        """Set ``x_j = 0`` for every ``j`` outside ``J`` (0-based); dimension is kept."""
        Jset = self._check_subset(J)
        keep = {e: c for e, c in self._terms.items()
                if all(ej == 0 for j, ej in enumerate(e) if j not in Jset)}
        return Polynomial(keep, self._names)

    def is_constant_on(self, J: Iterable[int]) -> bool:
        return self.restrict(J).is_constant()

    def project(self, indices: Sequence[int]) -> Polynomial:
        """Re-express in the variables ``indices`` only.

        Every dropped variable must be absent from the polynomial.
        """
        idx = tuple(indices)
        dropped = set(range(self.n)) - set(idx)
        if any(e[j] for e in self._terms for j in dropped):
            raise PolynomialError("cannot drop a variable the polynomial depends on")
        return Polynomial({tuple(e[j] for j in idx): c for e, c in self._terms.items()},
                          [self._names[j] for j in idx])

    def embed(self, indices: Sequence[int], var_names: Sequence[str]) -> Polynomial:
        """Inverse of :meth:`project`: place variable ``k`` at position ``indices[k]``."""
        n = len(var_names)
        out = {}
        for e, c in self._terms.items():
            full = [0] * n
            for k, j in enumerate(indices):
                full[j] = e[k]
            out[tuple(full)] = c
        return Polynomial(out, var_names)

    def subpolynomial(self, exponents: Iterable[Exponent]) -> Polynomial:
        """Sum of the terms whose exponent lies in ``exponents``."""
        keep = set(exponents)
        return Polynomial({e: c for e, c in self._terms.items() if e in keep}, self._names)

    def initial_form(self, q: Sequence[Rational]) -> tuple[Polynomial, Fraction]:
        """Terms minimising ``<q, kappa>`` over the support, and that minimum."""
        if self.is_zero():
            raise PolynomialError("the zero polynomial has no initial form")
        if len(q) != self.n:
            raise PolynomialError("weight vector has wrong length")
        values = {e: _dot(q, e) for e in self._terms}
        d = min(values.values())
        return self.subpolynomial(e for e, v in values.items() if v == d), Fraction(d)

    # -- evaluation ---------------------------------------------------------

    @cached_property
    def _compiled(self) -> tuple[np.ndarray, np.ndarray]:
        exps = sorted(self._terms)
        E = np.array(exps, dtype=np.int64).reshape(len(exps), self.n)
        C = np.array([float(self._terms[e]) for e in exps], dtype=float)
        return E, C

    def evaluate(self, x: Sequence[float]) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise PolynomialError(f"point has shape {x.shape}, expected ({self.n},)")
        return float(self.evaluate_batch(x[None, :])[0])

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        """Evaluate at each row of ``X`` (shape ``(m, n)``)."""
        E, C = self._compiled
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n:
            raise PolynomialError(f"points have shape {X.shape}, expected (m, {self.n})")
        if not len(C):
            return np.zeros(X.shape[0])
        monomials = np.prod(X[:, None, :] ** E[None, :, :], axis=2)
        return monomials @ C

    def evaluate_exact(self, x: Sequence[Rational]) -> Fraction:
        if len(x) != self.n:
            raise PolynomialError(f"point has length {len(x)}, expected {self.n}")
        total = Fraction(0)
        for e, c in self._terms.items():
            term = c
            for xj, ej in zip(x, e):
                if ej:
                    term *= Fraction(xj) ** ej
            total += term
        return total

    def term_scale(self, x: Sequence[Rational]) -> Fraction:
        """Largest absolute term value at ``x`` (used for relative tolerances)."""
        best = Fraction(0)
        for e, c in self._terms.items():
            term = abs(c)
            for xj, ej in zip(x, e):
                if ej:
                    term *= abs(Fraction(xj)) ** ej
            best = max(best, term)
        return best

    # -- formatting ---------------------------------------------------------

    def sorted_terms(self) -> list[tuple[Exponent, Fraction]]:
        """Terms in graded-lexicographic order, highest first."""
        return sorted(self._terms.items(), key=lambda t: (sum(t[0]), t[0]), reverse=True)

    def format(self) -> str:
        if not self._terms:
            return "0"
        pieces = []
        for i, (e, c) in enumerate(self.sorted_terms()):
            factors = [name if k == 1 else f"{name}^{k}"
                       for name, k in zip(self._names, e) if k]
            mag = abs(c)
            if not factors:
                body = _format_rational(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = "*".join([_format_rational(mag)] + factors)
            if i == 0:
                pieces.append(("-" if c < 0 else "") + body)
            else:
                pieces.append((" - " if c < 0 else " + ") + body)
        return "".join(pieces)

    __str__ = format

    def __repr__(self) -> str:
        return f"Polynomial({self.format()!r}, var_names={list(self._names)!r})"


def _format_rational(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


# -- parser -----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d+)?(?:/\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
                    r"|(?P<op>[-+*^()]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    # expr  := term (('+'|'-') term)*
    # term  := unary ('*' unary)*
    # unary := ('-'|'+') unary | power
    # power := atom ('^' unary)?        (right-associative)
    # atom  := NUMBER | NAME | '(' expr ')'

    def __init__(self, text: str, var_names: Sequence[str]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.names = tuple(var_names)
        self.index = {name: k for k, name in enumerate(self.names)}

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value or kind == "end":
            raise ParseError(f"expected {value!r}, found {val or 'end of input'!r}", pos)

    def parse(self) -> Polynomial:
        result = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos)
        return result

    def expr(self) -> Polynomial:
        result = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            result = result + rhs if op == "+" else result - rhs
        return result

    def term(self) -> Polynomial:
        result = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.take()
            result = result * self.unary()
        return result

    def unary(self) -> Polynomial:
        kind, val, _ = self.peek()
        if kind == "op" and val in ("-", "+"):
            self.take()
            inner = self.unary()
            return -inner if val == "-" else inner
        return self.power()

    def power(self) -> Polynomial:
        base = self.atom()
        kind, val, pos = self.peek()
        if kind == "op" and val == "^":
            self.take()
            exp_pos = self.peek()[2]
            exponent = self.unary()
            if not exponent.is_constant():
                raise ExponentError("exponent must be a constant", exp_pos)
            k = exponent.constant_term()
            if k.denominator != 1:
                raise ExponentError(f"non-integer exponent {k}", exp_pos)
            if k < 0:
                raise ExponentError(f"negative exponent {k}", exp_pos)
            return base ** int(k)
        return base

    def atom(self) -> Polynomial:
        kind, val, pos = self.take()
        if kind == "num":
            if "." in val:
                num, _, den = val.partition("/")
                value = Fraction(num) / (Fraction(den) if den else 1)
            else:
                value = Fraction(val)
            return Polynomial.constant(value, self.names)
        if kind == "name":
            if val not in self.index:
                raise UnknownVariableError(f"unknown variable {val!r}", pos)
            return Polynomial.variable(self.index[val], self.names)
        if kind == "op" and val == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        raise ParseError(f"unexpected {val or 'end of input'!r}", pos)


def parse(text: str, var_names: Sequence[str]) -> Polynomial:
    """Parse ``text`` into an expanded polynomial over ``var_names``.

    Grammar: ``+ - * ^`` and parentheses, integer/decimal/``p/q`` literals,
    ``^`` binds tighter than unary minus and is right-associative. Implicit
    multiplication is rejected.

    >>> parse("(x*y - 1)^2 + x^2", ["x", "y"]).format()
    'x^2*y^2 + x^2 - 2*x*y + 1'
    """
    if len(set(var_names)) != len(var_names):
        raise PolynomialError("variable names must be distinct")
    return _Parser(text, var_names).parse()


def to_fraction(x: float | Rational) -> Fraction:
    """Rationalise a float through its shortest round-trip decimal."""
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    x = float(x)
    if not np.isfinite(x):
        raise ValueError(f"cannot rationalise non-finite value {x}")
    return Fraction(repr(x))
