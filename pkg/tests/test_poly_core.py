import math
import random
from fractions import Fraction

import pytest

from scripts.errors import DimensionError, PolynomialSyntaxError
from scripts.poly_core import (Polynomial, UnivariatePolynomial, diagonal_restriction, differentiate, evaluate,
                               is_symmetric, normalize_fraction, parse_polynomial, support_lattice_spans)

from conftest import DELANNOY_J, ZIGZAG_J, poly

XY = ['x', 'y']
XYZ = ['x', 'y', 'z']


def random_polynomial(rng, vars, n_terms=6, max_exp=3):
    terms = {}
    for _ in range(n_terms):
        exps = tuple(rng.randint(0, max_exp) for _ in vars)
        terms[exps] = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
    return Polynomial(vars, terms)


class TestParse:
    def test_delannoy_denominator(self):
        P = parse_polynomial('1 - x - y - x*y', XY)
        assert P.terms == {(0, 0): 1, (1, 0): -1, (0, 1): -1, (1, 1): -1}

    def test_zigzag_denominator(self):
        P = parse_polynomial(ZIGZAG_J, XY)
        assert len(P.terms) == 5
        assert P.coefficient((2, 2)) == -1

    def test_rational_coefficients(self):
        P = parse_polynomial('1 - (1/2)*(1+x)*(1+y)', XY)
        half = Fraction(1, 2)
        assert P.terms == {(0, 0): half, (1, 0): -half, (0, 1): -half, (1, 1): -half}

    def test_whitespace_is_insignificant(self):
        assert parse_polynomial('1-x -  y-x * y', XY) == parse_polynomial(DELANNOY_J, XY)

    def test_powers_and_parentheses(self):
        assert parse_polynomial('(1 + x)^2', XY) == parse_polynomial('1 + 2*x + x^2', XY)

    def test_canonical_printing(self):
        assert parse_polynomial('y*x - 1/2*x + x^2*y', XY).to_string() == '-1/2*x + x*y + x^2*y'
        assert parse_polynomial('0*x', XY).to_string() == '0'

    @pytest.mark.parametrize('text,position', [
        ('2x', 1),
        ('x^-1', 2),
        ('x^1/2', 2),
        ('x + w', 4),
        ('x/y', 1),
        ('1/0', 2),
        ('x $ y', 2),
    ])
    def test_syntax_errors_carry_position(self, text, position):
        with pytest.raises(PolynomialSyntaxError) as excinfo:
            parse_polynomial(text, XY)
        assert excinfo.value.position == position

    @pytest.mark.parametrize('text', ['', '(x + y', 'x +', 'x^y'])
    def test_malformed(self, text):
        with pytest.raises(PolynomialSyntaxError):
            parse_polynomial(text, XY)

    def test_undeclared_variable_message(self):
        with pytest.raises(PolynomialSyntaxError, match="undeclared variable 'z'"):
            parse_polynomial('x + z', XY)

    def test_print_then_parse_is_identity(self):
        rng = random.Random(7)
        for _ in range(50):
            P = random_polynomial(rng, XYZ)
            assert parse_polynomial(P.to_string(), XYZ) == P


class TestDifferentiate:
    def test_delannoy(self):
        assert differentiate(poly(DELANNOY_J), 1) == poly('-1 - x')

    def test_zigzag(self):
        assert differentiate(poly(ZIGZAG_J), 'y') == poly('-1 + x - 2*x^2*y')

    def test_constant(self):
        assert differentiate(poly('1'), 0).is_zero()

    def test_index_out_of_range(self):
        with pytest.raises(DimensionError):
            differentiate(poly(DELANNOY_J), 2)

    def test_mixed_partials_commute(self):
        rng = random.Random(11)
        for _ in range(30):
            P = random_polynomial(rng, XYZ)
            for i in range(3):
                for j in range(3):
                    assert differentiate(differentiate(P, i), j) == differentiate(differentiate(P, j), i)

    def test_matches_central_differences(self):
        rng = random.Random(3)
        step = 1e-5
        for _ in range(30):
            P = random_polynomial(rng, XYZ)
            z = [rng.uniform(0.2, 0.9) for _ in XYZ]
            for i in range(3):
                up, down = list(z), list(z)
                up[i] += step
                down[i] -= step
                numeric = (evaluate(P, up) - evaluate(P, down)) / (2 * step)
                exact = evaluate(differentiate(P, i), z)
                assert abs(numeric - exact) <= 1e-6 * max(1.0, abs(exact))


class TestEvaluate:
    def test_origin(self):
        assert evaluate(poly(DELANNOY_J), (0, 0)) == pytest.approx(1)

    def test_delannoy_critical_point(self):
        c = math.sqrt(2) - 1
        assert abs(evaluate(poly(DELANNOY_J), (c, c))) < 1e-12

    def test_zigzag_critical_point(self):
        c = (math.sqrt(5) - 1) / 2
        assert abs(evaluate(poly(ZIGZAG_J), (c, c))) < 1e-12

    def test_complex_point(self):
        assert evaluate(poly('x^2 + 1', XY), (1j, 0)) == pytest.approx(0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            evaluate(poly(DELANNOY_J), (0.1, 0.2, 0.3))

    def test_exact_evaluation(self):
        assert poly(DELANNOY_J).evaluate_exact([Fraction(1, 3), Fraction(1, 3)]) == Fraction(2, 9)


class TestSymmetry:
    @pytest.mark.parametrize('text,vars,expected', [
        ('1 - x - y - z', XYZ, True),
        (ZIGZAG_J, XY, True),
        ('1 - x - 2*y', XY, False),
        ('x*y^2 + y*z^2 + z*x^2', XYZ, False),
    ])
    def test_is_symmetric(self, text, vars, expected):
        assert is_symmetric(parse_polynomial(text, vars)) is expected


class TestDiagonalRestriction:
    def test_ternary(self):
        assert diagonal_restriction(parse_polynomial('1 - x - y - z', XYZ)) == UnivariatePolynomial([1, -3])

    def test_zigzag(self):
        assert diagonal_restriction(poly(ZIGZAG_J)) == UnivariatePolynomial([1, -2, 1, 0, -1])

    def test_alignments(self):
        j = diagonal_restriction(parse_polynomial('1 - (1/2)*(1+x)*(1+y)*(1+z)', XYZ))
        half = Fraction(1, 2)
        assert j.coeffs == (half, -3 * half, -3 * half, -half)

    def test_agrees_with_exact_evaluation(self):
        rng = random.Random(5)
        for _ in range(20):
            P = random_polynomial(rng, XYZ)
            t = Fraction(rng.randint(-7, 7), rng.randint(1, 5))
            assert diagonal_restriction(P).evaluate(t) == P.evaluate_exact([t, t, t])

    def test_symmetric_polynomial_is_permutation_invariant(self):
        P = parse_polynomial('1 - x - y - z + x*y*z - x^2*y - x^2*z - y^2*x - y^2*z - z^2*x - z^2*y', XYZ)
        assert is_symmetric(P)
        for order in ([1, 0, 2], [2, 1, 0], [1, 2, 0]):
            assert diagonal_restriction(P.permute(order)) == diagonal_restriction(P)


class TestSupportLattice:
    @pytest.mark.parametrize('text,vars,expected', [
        ('x + y + x*y', XY, True),
        ('x^2 + y^2 + x^2*y^2', XY, False),
        ('x + y + z + x*y*z', XYZ, True),
        ('x*y', XY, False),
        ('x^2 + x*y + y^3', XY, True),
    ])
    def test_spans(self, text, vars, expected):
        assert support_lattice_spans(parse_polynomial(text, vars)) is expected

    def test_zero_polynomial(self):
        with pytest.raises(ValueError):
            support_lattice_spans(Polynomial(XY))


class TestArithmetic:
    def test_ring_operations(self):
        x, y = Polynomial.variable(XY, 0), Polynomial.variable(XY, 1)
        assert 2 - (1 + x) * (1 + y) == poly(DELANNOY_J)
        assert (x + y) ** 3 - (x + y) * (x + y) ** 2 == Polynomial(XY)

    def test_mismatched_variables(self):
        with pytest.raises(DimensionError):
            poly('x') + parse_polynomial('x', ['x', 'z'])

    def test_sympy_round_trip(self):
        P = poly(ZIGZAG_J)
        assert Polynomial.from_sympy(P.to_sympy(), XY) == P

    def test_normalize_fraction(self):
        I, J = normalize_fraction(poly('1'), poly('1 - (1/2)*(1+x)*(1+y)'))
        assert J == poly(DELANNOY_J)
        assert I == poly('2')

    def test_normalize_fixes_sign(self):
        I, J = normalize_fraction(poly('x'), poly('-2 + 4*x'))
        assert J == poly('1 - 2*x')
        assert I == poly('-1/2*x')
