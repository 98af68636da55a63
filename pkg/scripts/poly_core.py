#!/usr/bin/env python3
"""
Sparse Multivariate Polynomials over the Rationals
Parsing, arithmetic, differentiation, complex evaluation, symmetry and
support-lattice queries for the numerator/denominator of F = I/J
"""

import argparse
import itertools
import logging
import math
import re
import sys
from fractions import Fraction

import numpy as np
import sympy

try:
    from .errors import DimensionError, PolynomialSyntaxError
except ImportError:  # run as a standalone script
    from errors import DimensionError, PolynomialSyntaxError

logger = logging.getLogger(__name__)


def _to_fraction(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, sympy.Rational):
        return Fraction(int(value.p), int(value.q))
    return Fraction(value)


def grlex_key(exps):
    # graded lex: lower total degree first, then x before y before z
    return (sum(exps), tuple(-e for e in exps))


def default_vars(d):
    if d <= 3:
        return ["x", "y", "z"][:d]
    return [f"x{i + 1}" for i in range(d)]


class Polynomial:
    """
    Immutable sparse polynomial: `vars` is the ordered variable list and
    `terms` maps exponent tuples to nonzero Fractions.
    """

    __slots__ = ("vars", "terms", "_numeric")

    def __init__(self, vars, terms=None):
        self.vars = tuple(vars)
        d = len(self.vars)
        clean = {}
        for exps, coeff in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != d:
                raise DimensionError(f"exponent vector {exps} does not have length {d}")
            if any(e < 0 for e in exps):
                raise DimensionError(f"negative exponent in {exps}")
            coeff = _to_fraction(coeff)
            if coeff != 0:
                clean[exps] = clean.get(exps, Fraction(0)) + coeff
                if clean[exps] == 0:
                    del clean[exps]
        self.terms = clean
        self._numeric = None

    # construction helpers

    @classmethod
    def constant(cls, vars, value):
        return cls(vars, {(0,) * len(vars): value})

    @classmethod
    def variable(cls, vars, index):
        exps = [0] * len(vars)
        exps[index] = 1
        return cls(vars, {tuple(exps): 1})

    # basic queries

    @property
    def d(self):
        return len(self.vars)

    def is_zero(self):
        return not self.terms

    def index_of(self, var):
        if isinstance(var, str):
            if var not in self.vars:
                raise DimensionError(f"unknown variable {var!r}; declared: {', '.join(self.vars)}")
            return self.vars.index(var)
        if not 0 <= var < self.d:
            raise DimensionError(f"variable index {var} out of range for d={self.d}")
        return var

    def coefficient(self, exps):
        return self.terms.get(tuple(exps), Fraction(0))

    def constant_term(self):
        return self.coefficient((0,) * self.d)

    def degree(self, var):
        i = self.index_of(var)
        return max((exps[i] for exps in self.terms), default=0)

    def total_degree(self):
        return max((sum(exps) for exps in self.terms), default=0)

    def support(self):
        return sorted(self.terms, key=grlex_key)

    def sorted_terms(self):
        return [(exps, self.terms[exps]) for exps in self.support()]

    # arithmetic

    def _coerce(self, other):
        if isinstance(other, Polynomial):
            if other.vars != self.vars:
                raise DimensionError(f"variable lists differ: {self.vars} vs {other.vars}")
            return other
        return Polynomial.constant(self.vars, other)

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for exps, coeff in other.terms.items():
            terms[exps] = terms.get(exps, Fraction(0)) + coeff
        return Polynomial(self.vars, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.vars, {exps: -coeff for exps, coeff in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        terms = {}
        for (e1, c1), (e2, c2) in itertools.product(self.terms.items(), other.terms.items()):
            exps = tuple(a + b for a, b in zip(e1, e2))
            terms[exps] = terms.get(exps, Fraction(0)) + c1 * c2
        return Polynomial(self.vars, terms)

    __rmul__ = __mul__

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = Polynomial.constant(self.vars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def scale(self, factor):
        factor = _to_fraction(factor)
        return Polynomial(self.vars, {exps: coeff * factor for exps, coeff in self.terms.items()})

    def permute(self, order):
        """Relabel variables: new variable k is old variable order[k]."""
        order = list(order)
        if sorted(order) != list(range(self.d)):
            raise DimensionError(f"{order} is not a permutation of 0..{self.d - 1}")
        vars = [self.vars[i] for i in order]
        terms = {tuple(exps[i] for i in order): coeff for exps, coeff in self.terms.items()}
        return Polynomial(vars, terms)

    # equality is canonical: same variables and same term map

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.vars == other.vars and self.terms == other.terms

    def __hash__(self):
        return hash((self.vars, frozenset(self.terms.items())))

    # printing

    def _monomial(self, exps):
        parts = []
        for var, e in zip(self.vars, exps):
            if e == 1:
                parts.append(var)
            elif e > 1:
                parts.append(f"{var}^{e}")
        return "*".join(parts)

    def to_string(self):
        if not self.terms:
            return "0"
        pieces = []
        for exps, coeff in self.sorted_terms():
            mono = self._monomial(exps)
            magnitude = abs(coeff)
            if not mono:
                body = str(magnitude)
            elif magnitude == 1:
                body = mono
            else:
                body = f"{magnitude}*{mono}"
            if not pieces:
                pieces.append(f"-{body}" if coeff < 0 else body)
            else:
                pieces.append(f" - {body}" if coeff < 0 else f" + {body}")
        return "".join(pieces)

    def __str__(self):
        return self.to_string()

    def __repr__(self):
        return f"Polynomial({self.to_string()!r}, vars={list(self.vars)})"

    # numeric side

    def _numeric_form(self):
        if self._numeric is None:
            support = self.support()
            exps = np.array(support, dtype=np.int64).reshape(len(support), self.d)
            coeffs = np.array([float(self.terms[e]) for e in support], dtype=np.complex128)
            self._numeric = (exps, coeffs)
        return self._numeric

    def evaluate_exact(self, point):
        point = [_to_fraction(v) for v in point]
        if len(point) != self.d:
            raise DimensionError(f"point has {len(point)} coordinates, expected {self.d}")
        total = Fraction(0)
        for exps, coeff in self.terms.items():
            value = coeff
            for v, e in zip(point, exps):
                if e:
                    value *= v ** e
            total += value
        return total

    # sympy bridge

    def symbols(self):
        return sympy.symbols(list(self.vars))

    def to_sympy(self):
        gens = self.symbols()
        data = {exps: sympy.Rational(c.numerator, c.denominator) for exps, c in self.terms.items()}
        if not data:
            return sympy.Poly(0, *gens, domain=sympy.QQ)
        return sympy.Poly.from_dict(data, *gens, domain=sympy.QQ)

    @classmethod
    def from_sympy(cls, poly, vars):
        poly = sympy.Poly(poly, *sympy.symbols(list(vars)))
        return cls(vars, {monom: coeff for monom, coeff in poly.terms()})


class UnivariatePolynomial:
    """Exact univariate polynomial, coefficients in ascending degree."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        coeffs = [_to_fraction(c) for c in coeffs]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        self.coeffs = tuple(coeffs)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def is_zero(self):
        return not self.coeffs

    def __eq__(self, other):
        if not isinstance(other, UnivariatePolynomial):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def evaluate(self, t):
        exact = isinstance(t, (int, Fraction))
        acc = Fraction(0) if exact else 0j
        for c in reversed(self.coeffs):
            acc = acc * t + (c if exact else complex(c))
        return acc

    def derivative(self):
        return UnivariatePolynomial([k * c for k, c in enumerate(self.coeffs)][1:])

    def to_sympy(self, symbol=None):
        x = symbol or sympy.Symbol("x")
        return sympy.Poly(
            [sympy.Rational(c.numerator, c.denominator) for c in reversed(self.coeffs)] or [0],
            x, domain=sympy.QQ)

    @classmethod
    def from_sympy(cls, poly):
        poly = sympy.Poly(poly)
        return cls(reversed(poly.all_coeffs()))

    def to_string(self, var="x"):
        if not self.coeffs:
            return "0"
        terms = {(k,): c for k, c in enumerate(self.coeffs) if c != 0}
        return Polynomial([var], terms).to_string()

    def __repr__(self):
        return f"UnivariatePolynomial({self.to_string()!r})"


def complex_point(coords, d=None):
    point = np.asarray(coords, dtype=np.complex128).reshape(-1)
    if d is not None and point.shape[0] != d:
        raise DimensionError(f"point has {point.shape[0]} coordinates, expected {d}")
    return point


# ---------------------------------------------------------------------------
# parser
#
#   expr     := ['+'|'-'] term (('+'|'-') term)*
#   term     := factor ('*' factor)*
#   factor   := base ('^' uint)?
#   base     := rational | var | '(' expr ')'
#   rational := int ('/' uint)?
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(?P<num>\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>\S))")


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:  # only trailing whitespace left
            break
        kind = match.lastgroup
        value = match.group(kind)
        start = match.start(kind)
        if kind == "op" and value not in "+-*^/()":
            raise PolynomialSyntaxError(f"unexpected character {value!r}", start, text)
        tokens.append((kind, value, start))
        pos = match.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, vars):
        self.text = text
        self.vars = tuple(vars)
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        token = self.tokens[self.i]
        self.i += 1
        return token

    def error(self, message, token=None):
        token = token or self.peek()
        raise PolynomialSyntaxError(message, token[2], self.text)

    def expect_op(self, op):
        token = self.peek()
        if token[0] != "op" or token[1] != op:
            found = token[1] or "end of input"
            self.error(f"expected {op!r}, found {found!r}")
        return self.advance()

    def parse(self):
        if self.peek()[0] == "end":
            self.error("empty expression")
        result = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected {self.peek()[1]!r}")
        return result

    def expr(self):
        sign = 1
        token = self.peek()
        if token[0] == "op" and token[1] in "+-":
            self.advance()
            sign = -1 if token[1] == "-" else 1
        result = self.term()
        if sign < 0:
            result = -result
        while True:
            token = self.peek()
            if token[0] == "op" and token[1] in "+-":
                self.advance()
                right = self.term()
                result = result + right if token[1] == "+" else result - right
            else:
                return result

    def term(self):
        result = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.advance()
            result = result * self.factor()
        token = self.peek()
        if token[0] in ("num", "name") or (token[0] == "op" and token[1] == "("):
            self.error("implicit multiplication is not supported; use '*'")
        if token[0] == "op" and token[1] == "/":
            self.error("'/' is only allowed between integer literals")
        return result

    def factor(self):
        base = self.base()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            token = self.peek()
            if token[0] == "op" and token[1] == "-":
                self.error("negative exponents are not allowed")
            if token[0] != "num":
                self.error("exponent must be a non-negative integer literal")
            self.advance()
            nxt = self.peek()
            if nxt[0] == "op" and nxt[1] == "/":
                self.error("exponent must be an integer", token)
            if nxt[0] == "op" and nxt[1] == "^":
                self.error("chained exponents are ambiguous; use parentheses")
            base = base ** int(token[1])
        return base

    def base(self):
        token = self.peek()
        kind, value, pos = token
        if kind == "num":
            self.advance()
            numerator = int(value)
            if self.peek()[0] == "op" and self.peek()[1] == "/":
                self.advance()
                den = self.peek()
                if den[0] != "num":
                    self.error("'/' is only allowed between integer literals")
                self.advance()
                if int(den[1]) == 0:
                    self.error("division by zero", den)
                return Polynomial.constant(self.vars, Fraction(numerator, int(den[1])))
            return Polynomial.constant(self.vars, numerator)
        if kind == "name":
            if value not in self.vars:
                self.error(f"undeclared variable {value!r} (declared: {', '.join(self.vars)})")
            self.advance()
            return Polynomial.variable(self.vars, self.vars.index(value))
        if kind == "op" and value == "(":
            self.advance()
            inner = self.expr()
            self.expect_op(")")
            return inner
        self.error(f"unexpected {value!r}" if value else "unexpected end of input")


def parse_polynomial(text, vars):
    """
    Parse an expression string into a canonical Polynomial over `vars`.
    Raises PolynomialSyntaxError with the character position on bad input.
    """
    vars = list(vars)
    if len(set(vars)) != len(vars):
        raise PolynomialSyntaxError(f"duplicate variable names in {vars}")
    return _Parser(text, vars).parse()


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def differentiate(P, i):
    """Exact partial derivative of P with respect to variable i (index or name)."""
    i = P.index_of(i)
    terms = {}
    for exps, coeff in P.terms.items():
        if exps[i]:
            lowered = list(exps)
            lowered[i] -= 1
            terms[tuple(lowered)] = coeff * exps[i]
    return Polynomial(P.vars, terms)


def evaluate(P, z):
    """Value of P at the complex point z (complex128 arithmetic)."""
    z = complex_point(z, P.d)
    if P.is_zero():
        return 0j
    exps, coeffs = P._numeric_form()
    return complex(np.sum(coeffs * np.prod(z[np.newaxis, :] ** exps, axis=1)))


def is_symmetric(P):
    # adjacent transpositions generate the symmetric group
    for k in range(P.d - 1):
        order = list(range(P.d))
        order[k], order[k + 1] = order[k + 1], order[k]
        swapped = {tuple(exps[j] for j in order): c for exps, c in P.terms.items()}
        if swapped != P.terms:
            return False
    return True


def diagonal_restriction(P):
    """j(x) = P(x, ..., x) with exact coefficients."""
    coeffs = {}
    for exps, coeff in P.terms.items():
        k = sum(exps)
        coeffs[k] = coeffs.get(k, Fraction(0)) + coeff
    top = max(coeffs, default=-1)
    return UnivariatePolynomial([coeffs.get(k, 0) for k in range(top + 1)])


def support_lattice_spans(P):
    """
    True iff the exponent vectors of P generate Z^d: rank d and the gcd of
    all d x d minors equal to one.
    """
    if P.is_zero():
        raise ValueError("support of the zero polynomial is empty")
    vectors = P.support()
    d = P.d
    if len(vectors) < d:
        return False
    g = 0
    for rows in itertools.combinations(vectors, d):
        minor = int(sympy.Matrix(rows).det(method="bareiss"))
        g = math.gcd(g, minor)
        if g == 1:
            return True
    return False


def normalize_fraction(I, J):
    """
    Scale I and J by one common factor so that J has integer coefficients,
    content one and J(0) > 0. The quotient I/J is unchanged.
    """
    if I.vars != J.vars:
        raise DimensionError(f"numerator and denominator variables differ: {I.vars} vs {J.vars}")
    if J.is_zero():
        raise ValueError("denominator is the zero polynomial")
    den = math.lcm(*(c.denominator for c in J.terms.values()))
    content = math.gcd(*(int(c * den) for c in J.terms.values()))
    factor = Fraction(den, content)
    if J.constant_term() < 0:
        factor = -factor
    return I.scale(factor), J.scale(factor)


def main():
    parser = argparse.ArgumentParser(description="Inspect a polynomial expression")
    parser.add_argument("expression", help='polynomial, e.g. "1 - x - y - x*y"')
    parser.add_argument("--vars", default="x,y", help="comma-separated variable names")
    args = parser.parse_args()

    vars = [v.strip() for v in args.vars.split(",") if v.strip()]
    try:
        P = parse_polynomial(args.expression, vars)
    except PolynomialSyntaxError as e:
        print(f"❌ {e}")
        return 1

    print(f"Polynomial: {P}")
    print(f"Terms: {len(P.terms)}, total degree: {P.total_degree()}")
    print(f"Symmetric: {is_symmetric(P)}")
    print(f"Diagonal restriction j(x) = {diagonal_restriction(P).to_string()}")
    for var in P.vars:
        print(f"  d/d{var}: {differentiate(P, var)}")
    if not P.is_zero():
        print(f"Support spans Z^{P.d}: {support_lattice_spans(P)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
