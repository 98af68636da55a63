import math
from pathlib import Path

import pytest

from scripts.asymptotics import assemble_asymptotics
from scripts.critical_solver import (Direction, classify_contributing, solve_bivariate_complete,
                                     solve_positive_newton)
from scripts.poly_core import default_vars, parse_polynomial

ROOT = Path(__file__).resolve().parent.parent
JOBS_DIR = ROOT / 'data' / 'jobs'

PHI = (1 + math.sqrt(5)) / 2
ZIGZAG_I = '1 + x*y + x^2*y^2'
ZIGZAG_J = '1 - x - y + x*y - x^2*y^2'
DELANNOY_J = '1 - x - y - x*y'
TERNARY_J = '1 - x - y - z'


def poly(text, vars=('x', 'y')):
    return parse_polynomial(text, list(vars))


def analyze(numerator, denominator, direction, vars=None):
    """Solve, classify and assemble the leading asymptotics for one direction."""
    a = Direction.of(direction)
    vars = list(vars or default_vars(a.d))
    return analyze_polynomials(parse_polynomial(numerator, vars), parse_polynomial(denominator, vars), a)


def analyze_polynomials(I, J, direction):
    a = Direction.of(direction)
    c = solve_positive_newton(J, a)
    points, complete = [c], False
    if J.d == 2:
        points, complete = solve_bivariate_complete(J, a), True
    contrib = classify_contributing(J, a, points, complete=complete)
    return assemble_asymptotics(I, J, a, contrib, allow_uncertain=True)


@pytest.fixture
def delannoy():
    return poly(DELANNOY_J)


@pytest.fixture
def zigzag():
    return poly(ZIGZAG_I), poly(ZIGZAG_J)


@pytest.fixture
def ternary():
    return poly(TERNARY_J, ('x', 'y', 'z'))


@pytest.fixture(scope='session')
def zigzag_result():
    return analyze(ZIGZAG_I, ZIGZAG_J, (1, 1))


@pytest.fixture(scope='session')
def delannoy_result():
    return analyze('1', DELANNOY_J, (1, 1))
