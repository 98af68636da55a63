#!/usr/bin/env python3
"""
Smooth-Point Leading Asymptotics
Hessian matrix and determinant at the contributing point, the symmetric
closed form, the leading coefficient b0 and the leading term

    f_{a n} ~ prod c_i^{-a_i n} * b0 * (a_d n)^{(1-d)/2}
"""

import argparse
import logging
import sys
from dataclasses import dataclass, field, replace
from fractions import Fraction

import mpmath
import numpy as np

try:
    from .errors import (CONTRIB_CERTIFIED, HESSIAN_NONZERO, NUMERATOR_NONZERO, SIMPLE_ZERO, SMOOTH_POINT,
                         SYMMETRIC_INPUT, DimensionError, HypothesisError)
    from .poly_core import complex_point, default_vars, differentiate, evaluate, is_symmetric, parse_polynomial
    from .critical_solver import (DEFAULT_TOLERANCES, CriticalPoint, Direction, term_scale,
                                  classify_contributing, solve_bivariate_complete, solve_positive_newton)
except ImportError:  # run as a standalone script
    from errors import (CONTRIB_CERTIFIED, HESSIAN_NONZERO, NUMERATOR_NONZERO, SIMPLE_ZERO, SMOOTH_POINT,
                        SYMMETRIC_INPUT, DimensionError, HypothesisError)
    from poly_core import complex_point, default_vars, differentiate, evaluate, is_symmetric, parse_polynomial
    from critical_solver import (DEFAULT_TOLERANCES, CriticalPoint, Direction, term_scale,
                                 classify_contributing, solve_bivariate_complete, solve_positive_newton)

logger = logging.getLogger(__name__)

# bits for the log-domain evaluation of the leading term
TERM_PREC = 256
# relative agreement expected between the general and the symmetric determinant
CROSS_CHECK_TOL = 1e-9


@dataclass(frozen=True)
class HessianData:
    matrix: np.ndarray
    determinant: complex
    symmetric_shortcut_used: bool = False
    general_determinant: complex = None
    symmetric_determinant: complex = None


@dataclass(frozen=True)
class PointTerm:
    point: CriticalPoint
    hessian: HessianData
    b0: complex


@dataclass(frozen=True)
class AsymptoticResult:
    direction: Direction
    point: CriticalPoint
    terms: list
    b0: complex
    exponent: Fraction
    growth_per_step: float
    last_coordinate_weight: int
    hessian: HessianData
    path: str
    certified: bool = True
    notes: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def d(self):
        return self.direction.d

    def rescaled(self, k):
        """Same asymptotics along k*a; the critical system only sees ratios a_i/a_d."""
        return replace(self, direction=self.direction.scaled(k), last_coordinate_weight=k * self.last_coordinate_weight)

    def error_order(self):
        return f"O(n_d^({Fraction(-(self.d + 1), 2)}))"

    def formula(self):
        return "c^{-n·a} · b0 · (a_d n)^{(1-d)/2}"


def _point_coords(c):
    if isinstance(c, CriticalPoint):
        return c.point
    return complex_point(c)


def _partials(J, z):
    """First and second partials of J at z, as numpy arrays."""
    d = J.d
    first = [differentiate(J, i) for i in range(d)]
    grad = np.array([evaluate(P, z) for P in first], dtype=np.complex128)
    second = np.empty((d, d), dtype=np.complex128)
    for i in range(d):
        for j in range(i, d):
            second[i, j] = second[j, i] = evaluate(differentiate(first[i], j), z)
    return grad, second


def _check_last_partial(J, z, tolerances):
    Jd = evaluate(differentiate(J, J.d - 1), z)
    if abs(Jd) <= tolerances.simple_zero * max(term_scale(J, z), np.finfo(float).tiny):
        raise HypothesisError(SIMPLE_ZERO, f"J_d vanishes at c = {list(z)}; the Hessian formula does not apply")
    if z[-1] == 0:
        raise HypothesisError(SIMPLE_ZERO, "c_d = 0")
    return Jd


def hessian_matrix(J, c, tolerances=DEFAULT_TOLERANCES):
    """
    The (d-1)x(d-1) matrix H at the critical point c, built from the
    partials of J, and its determinant h(J, c) via LU.
    """
    z = complex_point(_point_coords(c), J.d)
    if J.d < 2:
        raise DimensionError("the Hessian needs d >= 2")
    _check_last_partial(J, z, tolerances)
    grad, second = _partials(J, z)
    d = J.d - 1
    cd, Jd, Jdd = z[d], grad[d], second[d, d]
    base = cd ** 2 * Jd ** 2

    H = np.empty((d, d), dtype=np.complex128)
    for l in range(d):
        Jl, Jld = grad[l], second[l, d]
        H[l, l] = (z[l] * Jl / (cd * Jd)
                   + z[l] ** 2 / base * (Jl ** 2 + cd * (Jd * second[l, l] - 2 * Jl * Jld + Jl ** 2 * Jdd / Jd)))
        for m in range(l + 1, d):
            Jm = grad[m]
            H[l, m] = H[m, l] = z[l] * z[m] / base * (
                Jm * Jl + cd * (Jd * second[l, m] - Jm * Jld - Jl * second[d, m] + Jl * Jm * Jdd / Jd))
    h = complex(np.linalg.det(H))
    return HessianData(matrix=H, determinant=h, general_determinant=h)


def hessian_det_symmetric(J, c, tolerances=DEFAULT_TOLERANCES):
    """h = d (1 + (c/J_d)(J_dd - J_d1))^(d-1) for symmetric J at c*1."""
    if not is_symmetric(J):
        raise HypothesisError(SYMMETRIC_INPUT, "J is not symmetric in its variables")
    z = complex_point(_point_coords(c), J.d)
    if np.max(np.abs(z - z[0])) > 1e-9 * max(1.0, abs(z[0])):
        raise HypothesisError(SYMMETRIC_INPUT, f"point {list(z)} is not on the main diagonal")
    Jd = _check_last_partial(J, z, tolerances)
    _, second = _partials(J, z)
    d = J.d
    return complex(d * (1 + (z[0] / Jd) * (second[d - 1, d - 1] - second[d - 1, 0])) ** (d - 1))


def leading_coefficient_b0(I, J, c, h, tolerances=DEFAULT_TOLERANCES):
    """b0 = I(c) / (-c_d J_d(c) sqrt((2 pi)^(d-1) h)), principal branch."""
    z = complex_point(_point_coords(c), J.d)
    if h == 0 or not np.isfinite(h):
        raise HypothesisError(HESSIAN_NONZERO, f"h(J, c) = {h}: the b0 formula is inapplicable")
    Jd = _check_last_partial(J, z, tolerances)
    value = evaluate(I, z)
    if abs(value) <= tolerances.simple_zero * term_scale(I, z):
        raise HypothesisError(NUMERATOR_NONZERO,
                              f"I(c) = {value} at c = {list(z)}: b0 vanishes and the leading term is identically zero")
    denominator = -z[-1] * Jd * np.sqrt(complex((2 * np.pi) ** (J.d - 1) * h))
    return complex(value / denominator)


def _point_term(I, J, c, symmetric, tolerances, warnings=None):
    general = hessian_matrix(J, c, tolerances)
    hessian = general
    if symmetric:
        h_sym = hessian_det_symmetric(J, c, tolerances)
        gap = abs(general.determinant - h_sym)
        if gap > CROSS_CHECK_TOL * abs(h_sym):
            message = (f"[{SYMMETRIC_INPUT}] Hessian determinant mismatch: "
                       f"general {general.determinant} vs closed form {h_sym}")
            logger.warning(f"⚠️ {message}")
            if warnings is not None:
                warnings.append(message)
        hessian = HessianData(matrix=general.matrix, determinant=h_sym, symmetric_shortcut_used=True,
                              general_determinant=general.determinant, symmetric_determinant=h_sym)
    if abs(hessian.determinant) <= 1e-14:
        raise HypothesisError(HESSIAN_NONZERO, f"h(J, c) = {hessian.determinant} at c = {c.coords()}")
    return PointTerm(point=c, hessian=hessian, b0=leading_coefficient_b0(I, J, c, hessian.determinant, tolerances))


def assemble_asymptotics(I, J, a, contrib, allow_uncertain=False, tolerances=DEFAULT_TOLERANCES):
    """
    Leading asymptotics from a classified contributing set. The positive
    point always gives the first term; torus companions get their own
    PointTerm when their partials allow it.
    """
    a = Direction.of(a)
    if a.d != J.d:
        raise DimensionError(f"direction {a.a} does not match d={J.d}")
    if not contrib.contrib_certain and not allow_uncertain:
        raise HypothesisError(CONTRIB_CERTIFIED, "contrib(n) = {c} is not certified; pass allow_uncertain to proceed")
    c = contrib.positive_point
    if not c.is_smooth:
        raise HypothesisError(SMOOTH_POINT, f"every partial of J vanishes at c = {c.real_coords()}")
    if not c.is_simple_in_last:
        raise HypothesisError(SIMPLE_ZERO, f"c_d is not a simple zero of J at c = {c.real_coords()}")

    symmetric = is_symmetric(J) and a.is_constant()
    warnings = []
    terms = [_point_term(I, J, c, symmetric, tolerances, warnings)]
    notes = list(contrib.notes)
    for companion in contrib.companions_on_torus:
        try:
            terms.append(_point_term(I, J, companion, False, tolerances))
        except HypothesisError as e:
            notes.append(f"companion {companion.coords()} skipped: {e}")

    lead = terms[0]
    growth = float(np.prod([ci ** -ai for ci, ai in zip(c.real_coords(), a.a)]))
    if symmetric:
        notes.append("symmetric J on the main diagonal: closed-form determinant used")
    notes.append("relabelling the variables changes J_d and H but not the asymptotics")
    logger.info(f"📊 h = {lead.hessian.determinant.real:.12g}, b0 = {lead.b0.real:.12g}, growth = {growth:.12g}")
    return AsymptoticResult(
        direction=a,
        point=c,
        terms=terms,
        b0=lead.b0,
        exponent=Fraction(1 - J.d, 2),
        growth_per_step=growth,
        last_coordinate_weight=a.last,
        hessian=lead.hessian,
        path="symmetric" if symmetric else "general",
        certified=contrib.contrib_certain,
        notes=notes,
        warnings=warnings,
    )


def term_context():
    """
    A private mpmath context at TERM_PREC bits. mpmath.mp is process-wide,
    so threaded callers must not change its precision.
    """
    ctx = mpmath.MPContext()
    ctx.prec = TERM_PREC
    return ctx


def log_growth(point, direction, ctx=None):
    """-sum a_i log c_i as an mpmath number (complex for non-positive points)."""
    if ctx is None:
        ctx = term_context()
    total = ctx.mpf(0)
    for z, ai in zip(point.point, direction.a):
        if point.is_positive_real:
            total -= ai * ctx.log(ctx.mpf(float(z.real)))
        else:
            total -= ai * ctx.log(ctx.mpc(z.real, z.imag))
    return total


def evaluate_leading_term(res, n, include_companions=False, ctx=None):
    """
    prod c_i^{-a_i n} * b0 * (a_d n)^{(1-d)/2}, summed over the companions
    on request. Evaluated in logs at TERM_PREC bits in `ctx` (a fresh
    private context by default); returns an mpf.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if ctx is None:
        ctx = term_context()
    terms = res.terms if include_companions else res.terms[:1]
    scale = ctx.mpf(res.last_coordinate_weight * n) ** (ctx.mpf(res.exponent.numerator) / res.exponent.denominator)
    total = ctx.mpc(0)
    for term in terms:
        total += ctx.exp(n * log_growth(term.point, res.direction, ctx)) * ctx.mpc(term.b0.real, term.b0.imag)
    return (total * scale).real


def main():
    parser = argparse.ArgumentParser(description='Leading diagonal asymptotics of I/J')
    parser.add_argument('--numerator', default='1', help='numerator I')
    parser.add_argument('--denominator', required=True, help='denominator J')
    parser.add_argument('--direction', required=True, help='comma-separated positive integers')
    parser.add_argument('--vars', default=None, help='comma-separated variable names')
    parser.add_argument('-n', type=int, action='append', default=[], help='print the leading term at n')

    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format='%(message)s')

    a = Direction.of(int(v) for v in args.direction.split(','))
    vars = args.vars.split(',') if args.vars else default_vars(a.d)
    I = parse_polynomial(args.numerator, vars)
    J = parse_polynomial(args.denominator, vars)

    try:
        c = solve_positive_newton(J, a)
        points, complete = [c], False
        if J.d == 2:
            points, complete = solve_bivariate_complete(J, a), True
        contrib = classify_contributing(J, a, points, complete=complete)
        res = assemble_asymptotics(I, J, a, contrib, allow_uncertain=True)
    except HypothesisError as e:
        print(f"❌ {e}")
        return 1

    print(f"c = {res.point.real_coords()}")
    print(f"h = {res.hessian.determinant.real:.15g} ({res.path})")
    print(f"b0 = {res.b0.real:.15g}")
    print(f"growth per step = {res.growth_per_step:.15g}")
    print(f"f ~ {res.formula()}  +  {res.error_order()} relative")
    for n in args.n:
        print(f"  n={n}: {mpmath.nstr(evaluate_leading_term(res, n), 15)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
