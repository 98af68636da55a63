"""
Exception types shared by the analysis steps
"""


class DiagonalError(Exception):
    """Base class for every error raised by the pipeline modules"""


class PolynomialSyntaxError(DiagonalError):
    def __init__(self, message, position=None, text=None):
        self.position = position
        self.text = text
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class DimensionError(DiagonalError):
    pass


class SeriesError(DiagonalError):
    pass


class ConfigError(DiagonalError):
    def __init__(self, path, message):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


class HypothesisError(DiagonalError):
    """
    A hypothesis of the method does not hold (or could not be verified).
    `hypothesis` is one of the labels below, e.g. POSITIVE_UNIQUENESS.
    """

    def __init__(self, hypothesis, message):
        self.hypothesis = hypothesis
        super().__init__(f"[{hypothesis}] {message}")


class ConvergenceError(HypothesisError):
    def __init__(self, hypothesis, message, diagnostics=None):
        self.diagnostics = diagnostics or []
        super().__init__(hypothesis, message)


class UniquenessError(HypothesisError):
    def __init__(self, hypothesis, message, points=None):
        self.points = points or []
        super().__init__(hypothesis, message)


# hypothesis labels carried by HypothesisError.hypothesis and report warnings;
# each names the result whose hypothesis failed, then the hypothesis itself
POSITIVE_EXISTENCE = "contributing-point theorem: positive point existence"
POSITIVE_UNIQUENESS = "contributing-point theorem: positive point uniqueness"
FINITE_CRITICAL_SET = "contributing-point theorem: finite critical set"
CONTRIB_CERTIFIED = "contributing-point theorem: contrib(n) = {c} certified"
SMOOTH_POINT = "smooth-point asymptotics: c is a smooth point"
SIMPLE_ZERO = "smooth-point asymptotics: c_d is a simple zero"
NUMERATOR_NONZERO = "smooth-point asymptotics: I(c) nonzero"
HESSIAN_NONZERO = "Hessian formula: h(J, c) nonzero"
SYMMETRIC_INPUT = "symmetric-case proposition: J symmetric, a = (1, ..., 1)"
ORIGIN_REGULAR = "power series at the origin: J(0) nonzero"
