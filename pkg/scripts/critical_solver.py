#!/usr/bin/env python3
"""
Critical Point Solver
Builds the critical-point system J = 0, a_d x_i J_i = a_i x_d J_d for a
direction, solves it (symmetric shortcut, positive-orthant Newton or a
complete bivariate solve) and classifies the contributing points
"""

import argparse
import concurrent.futures
import itertools
import logging
import sys
from dataclasses import dataclass, field

import mpmath
import numpy as np
import psutil
import sympy

try:
    from .errors import (FINITE_CRITICAL_SET, POSITIVE_EXISTENCE, POSITIVE_UNIQUENESS, SYMMETRIC_INPUT,
                         ConvergenceError, DimensionError, HypothesisError, UniquenessError)
    from .poly_core import (Polynomial, UnivariatePolynomial, complex_point, default_vars,
                            diagonal_restriction, differentiate, evaluate, is_symmetric,
                            parse_polynomial, support_lattice_spans)
except ImportError:  # run as a standalone script
    from errors import (FINITE_CRITICAL_SET, POSITIVE_EXISTENCE, POSITIVE_UNIQUENESS, SYMMETRIC_INPUT,
                        ConvergenceError, DimensionError, HypothesisError, UniquenessError)
    from poly_core import (Polynomial, UnivariatePolynomial, complex_point, default_vars,
                           diagonal_restriction, differentiate, evaluate, is_symmetric,
                           parse_polynomial, support_lattice_spans)

logger = logging.getLogger(__name__)

SEED_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)


@dataclass(frozen=True)
class Tolerances:
    residual: float = 1e-10      # Newton acceptance
    polish: float = 1e-9         # complete-solve acceptance
    torus: float = 1e-8          # relative modulus match
    simple_zero: float = 1e-8    # |J_d(c)| against scale(J)
    imag: float = 1e-9           # |Im| allowed for a "real" coordinate
    root: float = 1e-14          # symmetric root refinement width
    max_iter: int = 200


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class Direction:
    a: tuple

    def __post_init__(self):
        a = tuple(self.a)
        if not a:
            raise DimensionError("direction must not be empty")
        for i, ai in enumerate(a):
            if isinstance(ai, bool) or int(ai) != ai or ai < 1:
                raise ValueError(f"direction entries must be positive integers, got {ai!r} at index {i}")
        object.__setattr__(self, 'a', tuple(int(ai) for ai in a))

    @classmethod
    def of(cls, a):
        return a if isinstance(a, Direction) else cls(tuple(a))

    @property
    def d(self):
        return len(self.a)

    @property
    def last(self):
        return self.a[-1]

    def scaled(self, k):
        return Direction(tuple(k * ai for ai in self.a))

    def is_constant(self):
        return len(set(self.a)) == 1


@dataclass(frozen=True)
class CriticalSystem:
    J: Polynomial
    direction: Direction
    equations: tuple

    @property
    def d(self):
        return len(self.equations)


@dataclass(frozen=True)
class CriticalPoint:
    point: np.ndarray
    residual: float
    is_positive_real: bool
    is_smooth: bool
    is_simple_in_last: bool
    torus_moduli: tuple

    def coords(self):
        return [complex(z) for z in self.point]

    def real_coords(self):
        return [float(z.real) for z in self.point]


@dataclass(frozen=True)
class ContribResult:
    positive_point: CriticalPoint
    companions_on_torus: list
    aperiodic_case: bool
    contrib_certain: bool
    complete_enumeration: bool = False
    notes: list = field(default_factory=list)


def term_scale(P, z):
    """sum_k |P_k| |z^k|, the size of the terms of P at z"""
    if P.is_zero():
        return 0.0
    exps, coeffs = P._numeric_form()
    return float(np.sum(np.abs(coeffs) * np.prod(np.abs(z)[np.newaxis, :] ** exps, axis=1)))


def build_critical_system(J, a):
    a = Direction.of(a)
    if J.d < 2:
        raise DimensionError("the critical system needs d >= 2")
    if a.d != J.d:
        raise DimensionError(f"direction {a.a} does not match d={J.d}")
    d = J.d
    x = [Polynomial.variable(J.vars, i) for i in range(d)]
    Jd = differentiate(J, d - 1)
    equations = [J]
    for i in range(d - 1):
        Ji = differentiate(J, i)
        equations.append(a.last * x[i] * Ji - a.a[i] * x[d - 1] * Jd)
    return CriticalSystem(J=J, direction=a, equations=tuple(equations))


def system_residual(system, z):
    z = complex_point(z, system.d)
    return max(abs(evaluate(eq, z)) for eq in system.equations)


def residual_check(system, z, tol):
    if tol <= 0:
        raise ValueError("tol must be positive")
    return system_residual(system, z) <= tol


def make_critical_point(system, z, tolerances=DEFAULT_TOLERANCES):
    """Wrap a solution with its residual and classification flags."""
    J = system.J
    z = complex_point(z, system.d)
    scale = max(term_scale(J, z), np.finfo(float).tiny)
    partials = [abs(evaluate(differentiate(J, i), z)) for i in range(J.d)]
    positive = bool(np.all(np.abs(z.imag) <= tolerances.imag) and np.all(z.real > 0))
    if positive:
        z = z.real.astype(np.complex128)
    return CriticalPoint(
        point=z,
        residual=system_residual(system, z),
        is_positive_real=positive,
        is_smooth=any(p > tolerances.simple_zero * scale for p in partials),
        is_simple_in_last=partials[-1] > tolerances.simple_zero * scale,
        torus_moduli=tuple(float(m) for m in np.abs(z)),
    )


# ---------------------------------------------------------------------------
# symmetric shortcut
# ---------------------------------------------------------------------------

def positive_real_roots(j, width=1e-14):
    """
    Isolate the positive real roots of an exact univariate polynomial and
    refine each isolating interval below `width`. Returns floats, ascending.
    """
    if j.is_zero():
        raise ValueError("zero polynomial has no isolated roots")
    poly = j.to_sympy()
    if poly.degree() < 1:
        return []
    eps = sympy.Rational(width) if 0 < width < 1 else sympy.Rational(1, 10 ** 14)
    roots = []
    # isolating intervals are disjoint, so a root at 0 comes back as (0, 0)
    for (s, t), _mult in poly.intervals(eps=eps):
        mid = (sympy.Rational(s) + sympy.Rational(t)) / 2
        if mid > 0:
            roots.append(float(mid))
    return sorted(roots)


def solve_symmetric_positive(J, a, tolerances=DEFAULT_TOLERANCES):
    """The point c*1 with c the unique positive root of j(x) = J(x, ..., x)."""
    a = Direction.of(a)
    if not is_symmetric(J):
        raise HypothesisError(SYMMETRIC_INPUT, "J is not symmetric in its variables")
    if a.d != J.d or not a.is_constant():
        raise HypothesisError(SYMMETRIC_INPUT, f"direction {a.a} is not the main diagonal")
    j = diagonal_restriction(J)
    roots = positive_real_roots(j, tolerances.root)
    if not roots:
        raise HypothesisError(POSITIVE_EXISTENCE, f"no positive root of j(x) = {j.to_string()}")
    if len(roots) > 1:
        raise UniquenessError(
            POSITIVE_UNIQUENESS,
            f"multiple positive roots {roots} of j(x): finiteness/uniqueness hypothesis violated, inspect manually",
            points=[[r] * J.d for r in roots])
    c = roots[0]
    # one Newton step on the float polynomial; the bracket is already below 1e-14
    dj = j.derivative()
    slope = dj.evaluate(c)
    if slope != 0:
        c = float((c - j.evaluate(c) / slope).real)
    system = build_critical_system(J, a)
    logger.info(f"✅ Symmetric positive point c = {c:.15g}")
    return make_critical_point(system, [c] * J.d, tolerances)


# ---------------------------------------------------------------------------
# positive-orthant Newton
# ---------------------------------------------------------------------------

def seed_grid(d, J=None, a=None):
    if d <= 3:
        seeds = [list(s) for s in itertools.product(SEED_GRID, repeat=d)]
    else:
        seeds = [[v] * d for v in SEED_GRID]
    if J is not None and a is not None and is_symmetric(J) and Direction.of(a).is_constant():
        try:
            seeds.append(solve_symmetric_positive(J, a).real_coords())
        except HypothesisError:
            pass
    return seeds


def _newton_log(system, jacobian, seed, tolerances):
    """Damped Newton in u = log x from one positive seed."""
    u = np.log(np.asarray(seed, dtype=float))

    def F(u):
        x = np.exp(u)
        return np.array([evaluate(eq, x).real for eq in system.equations])

    f = F(u)
    norm = np.linalg.norm(f)
    for iteration in range(tolerances.max_iter):
        if np.max(np.abs(f)) <= tolerances.residual * 1e-2:
            break
        x = np.exp(u)
        jac = np.array([[evaluate(p, x).real * x[j] for j, p in enumerate(row)] for row in jacobian])
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            return None, f"singular Jacobian at iteration {iteration}", float(norm)
        t = 1.0
        while True:
            trial = u + t * step
            if np.max(np.abs(trial)) > 50:
                new_f, new_norm = None, np.inf
            else:
                new_f = F(trial)
                new_norm = np.linalg.norm(new_f)
            if new_norm < norm or t < 1e-12:
                break
            t /= 2
        if new_f is None or not new_norm < norm:
            if np.max(np.abs(f)) <= tolerances.residual:
                break
            return None, f"damping stalled at iteration {iteration}", float(norm)
        u, f, norm = trial, new_f, new_norm
    if np.max(np.abs(f)) > tolerances.residual:
        return None, "iteration cap reached", float(norm)
    return np.exp(u), "converged", float(norm)


def _cluster(points, rel_tol=1e-8):
    """Group nearby points; each cluster is represented by its lexicographically smallest member."""
    clusters = []
    for p in sorted(points, key=lambda p: tuple(np.round(np.concatenate([p.real, p.imag]), 12))):
        for cluster in clusters:
            q = cluster[0]
            if np.all(np.abs(p - q) <= rel_tol * np.maximum(1.0, np.abs(q))):
                cluster.append(p)
                break
        else:
            clusters.append([p])
    return [cluster[0] for cluster in clusters]


def solve_positive_newton(J, a, seeds=None, tolerances=DEFAULT_TOLERANCES, workers=1):
    """
    Multi-start damped Newton for the positive critical point. Seeds run
    concurrently; the reduction only depends on the set of converged points.
    """
    a = Direction.of(a)
    system = build_critical_system(J, a)
    jacobian = [[differentiate(eq, j) for j in range(J.d)] for eq in system.equations]
    all_seeds = seed_grid(J.d, J, a) + [list(s) for s in (seeds or [])]
    for s in all_seeds:
        if len(s) != J.d or any(v <= 0 for v in s):
            raise ValueError(f"Newton seeds must be positive {J.d}-vectors, got {s}")

    max_workers = max(1, min(workers, len(all_seeds), psutil.cpu_count() or 1))
    with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as executor:
        outcomes = list(executor.map(lambda s: _newton_log(system, jacobian, s, tolerances), all_seeds))

    converged = [x for x, _, _ in outcomes if x is not None]
    if not converged:
        diagnostics = [{'seed': list(s), 'reason': reason, 'residual_norm': norm}
                       for s, (_, reason, norm) in zip(all_seeds, outcomes)]
        raise ConvergenceError(POSITIVE_EXISTENCE, f"no convergence from any of {len(all_seeds)} seeds",
                               diagnostics)
    representatives = _cluster([np.asarray(x, dtype=np.complex128) for x in converged])
    logger.info(f"📊 Newton: {len(converged)}/{len(all_seeds)} seeds converged, {len(representatives)} distinct point(s)")
    if len(representatives) > 1:
        raise UniquenessError(
            POSITIVE_UNIQUENESS,
            f"converged to {len(representatives)} distinct positive points: "
            + ", ".join(str([round(float(v.real), 12) for v in p]) for p in representatives),
            points=[[float(v.real) for v in p] for p in representatives])
    return make_critical_point(system, representatives[0], tolerances)


# ---------------------------------------------------------------------------
# complete bivariate solve
# ---------------------------------------------------------------------------

def companion_roots(poly):
    """Roots of an exact univariate polynomial as companion-matrix eigenvalues."""
    coeffs = np.array([float(c) for c in poly.coeffs], dtype=np.complex128)
    n = len(coeffs) - 1
    if n < 1:
        return np.array([], dtype=np.complex128)
    companion = np.zeros((n, n), dtype=np.complex128)
    companion[1:, :-1] = np.eye(n - 1)
    companion[:, -1] = -coeffs[:-1] / coeffs[-1]
    return np.linalg.eigvals(companion)


def _polish_univariate(poly, roots, steps=30):
    """Newton on the exact polynomial at 50 digits, in a private mpmath context."""
    ctx = mpmath.MPContext()
    ctx.dps = 50
    coeffs = [ctx.mpf(c.numerator) / c.denominator for c in reversed(poly.coeffs)]
    dcoeffs = [ctx.mpf(c.numerator) / c.denominator for c in reversed(poly.derivative().coeffs)]
    polished = []
    for r in roots:
        z = ctx.mpc(r.real, r.imag)
        for _ in range(steps):
            slope = ctx.polyval(dcoeffs, z) if dcoeffs else 0
            if slope == 0:
                break
            dz = ctx.polyval(coeffs, z) / slope
            z -= dz
            if abs(dz) <= ctx.mpf(10) ** -40 * max(1, abs(z)):
                break
        polished.append(complex(z))
    return polished


def _roots_in_y(P, x0):
    """Roots in y of P(x0, y); None when P(x0, .) vanishes identically."""
    by_degree = {}
    for (i, j), coeff in P.terms.items():
        by_degree[j] = by_degree.get(j, 0) + float(coeff) * x0 ** i
    top = max(by_degree, default=0)
    coeffs = np.array([by_degree.get(j, 0) for j in range(top, -1, -1)], dtype=np.complex128)
    size = np.max(np.abs(coeffs)) if coeffs.size else 0.0
    if size == 0:
        return None
    # drop leading coefficients that vanish at x0
    while coeffs.size > 1 and abs(coeffs[0]) <= 1e-12 * size:
        coeffs = coeffs[1:]
    return np.roots(coeffs)


def _polish_point(system, jacobian, z, steps=20):
    z = np.asarray(z, dtype=np.complex128)
    for _ in range(steps):
        f = np.array([evaluate(eq, z) for eq in system.equations])
        jac = np.array([[evaluate(p, z) for p in row] for row in jacobian])
        try:
            dz = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            break
        z = z + dz
        if np.max(np.abs(dz)) <= 1e-15 * max(1.0, np.max(np.abs(z))):
            break
    return z


def solve_bivariate_complete(J, a, tolerances=DEFAULT_TOLERANCES):
    """
    Every isolated complex critical point for d = 2: eliminate y with the
    Sylvester resultant, take the roots of the square-free part, back-substitute
    and polish the pair with Newton.
    """
    a = Direction.of(a)
    if J.d != 2:
        raise DimensionError(f"complete enumeration is implemented for d = 2 only, got d = {J.d}")
    system = build_critical_system(J, a)
    E = system.equations[1]
    if E.is_zero():
        raise HypothesisError(FINITE_CRITICAL_SET,
                              "second critical equation vanishes identically (binomial-variety case)")
    x, y = J.symbols()
    resultant = sympy.resultant(J.to_sympy().as_expr(), E.to_sympy().as_expr(), y)
    resultant = sympy.Poly(resultant, x, domain=sympy.QQ)
    if resultant.is_zero:
        raise HypothesisError(FINITE_CRITICAL_SET, "resultant identically zero: non-finite crit set")
    reduced = UnivariatePolynomial.from_sympy(sympy.sqf_part(resultant))
    logger.info(f"🔬 Resultant degree {resultant.degree()}, square-free part degree {reduced.degree}")

    jacobian = [[differentiate(eq, j) for j in range(2)] for eq in system.equations]
    candidates = []
    for x0 in _polish_univariate(reduced, companion_roots(reduced)):
        ys = _roots_in_y(J, x0)
        if ys is None:
            ys = _roots_in_y(E, x0)
        if ys is None:
            continue
        for y0 in ys:
            z = _polish_point(system, jacobian, [x0, y0])
            if system_residual(system, z) <= tolerances.polish:
                candidates.append(z)

    points = [make_critical_point(system, z, tolerances) for z in _cluster(candidates)]
    points.sort(key=lambda p: tuple(np.round(np.concatenate([p.point.real, p.point.imag]), 10)))
    logger.info(f"✅ Complete solve: {len(points)} critical point(s)")
    return points


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def is_aperiodic_case(J):
    """
    True when J/J(0) = 1 - P with P a nonzero polynomial with nonnegative
    coefficients whose support spans Z^d.
    """
    J0 = J.constant_term()
    if J0 <= 0:
        return False
    P = 1 - J.scale(1 / J0)
    if P.is_zero() or any(c < 0 for c in P.terms.values()):
        return False
    return support_lattice_spans(P)


def _on_same_torus(p, c, rel_tol):
    return all(abs(m - mc) <= rel_tol * mc for m, mc in zip(p.torus_moduli, c.torus_moduli))


def classify_contributing(J, a, points, complete=False, certify_by_torus=True,
                          tolerances=DEFAULT_TOLERANCES):
    a = Direction.of(a)
    positives = [p for p in points if p.is_positive_real]
    if not positives:
        raise HypothesisError(POSITIVE_EXISTENCE, "no positive critical point supplied")
    if len(positives) > 1:
        raise UniquenessError(POSITIVE_UNIQUENESS, f"{len(positives)} positive critical points supplied",
                              points=[p.real_coords() for p in positives])
    # flags are recomputed against J itself
    c = make_critical_point(build_critical_system(J, a), positives[0].point, tolerances)

    companions = [p for p in points if p is not positives[0] and _on_same_torus(p, c, tolerances.torus)]
    aperiodic = is_aperiodic_case(J)
    notes = []
    if aperiodic:
        certain = True
        notes.append("J/J(0) = 1 - P with P aperiodic and nonnegative: contrib = {c}")
    elif complete and certify_by_torus and not companions:
        certain = True
        notes.append("complete enumeration: no other critical point on the torus of c")
    else:
        certain = False
        if complete and companions:
            notes.append(f"{len(companions)} critical point(s) share the torus of c; their contribution is not decided")
        elif complete:
            notes.append("torus certification disabled for this job")
        else:
            notes.append("no complete enumeration of crit(n) available for this J; contrib(n) is not certified")
    return ContribResult(positive_point=c, companions_on_torus=companions, aperiodic_case=aperiodic,
                         contrib_certain=certain, complete_enumeration=complete, notes=notes)


def main():
    parser = argparse.ArgumentParser(description='Critical points of a rational generating function')
    parser.add_argument('--denominator', required=True, help='denominator J')
    parser.add_argument('--direction', required=True, help='comma-separated positive integers')
    parser.add_argument('--vars', default=None, help='comma-separated variable names')
    parser.add_argument('--seed', action='append', default=[], help='extra Newton seed, e.g. 0.4,0.4')

    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format='%(message)s')

    a = Direction.of(int(v) for v in args.direction.split(','))
    vars = args.vars.split(',') if args.vars else default_vars(a.d)
    J = parse_polynomial(args.denominator, vars)
    seeds = [[float(v) for v in s.split(',')] for s in args.seed]

    try:
        c = solve_positive_newton(J, a, seeds=seeds)
    except HypothesisError as e:
        print(f"❌ {e}")
        return 1
    print(f"Positive critical point: {c.real_coords()} (residual {c.residual:.2e})")

    points = [c]
    complete = False
    if J.d == 2:
        points = solve_bivariate_complete(J, a)
        complete = True
        for p in points:
            print(f"  {p.coords()}  |.|={p.torus_moduli}  positive={p.is_positive_real}")
    contrib = classify_contributing(J, a, points, complete=complete)
    print(f"Aperiodic case: {contrib.aperiodic_case}, contrib certain: {contrib.contrib_certain}")
    for note in contrib.notes:
        print(f"  - {note}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
