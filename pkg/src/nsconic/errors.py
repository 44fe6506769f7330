"""Exception types raised by the solver components."""


class DomainError(ValueError):
    """A point handed to a barrier oracle is not in the required cone interior."""


class DecompositionError(ArithmeticError):
    """The augmented-sparse split of a dual Hessian lost positive definiteness."""


class NoConvergence(ArithmeticError):
    """A scalar root finder ran out of iterations or left its domain."""


class DimensionMismatch(ValueError):
    pass


class FactorError(RuntimeError):
    """Structural inconsistency between a matrix and its symbolic factorization."""


class RefinementStall(ArithmeticError):
    """Iterative refinement stopped reducing the residual above tolerance."""


class ParseError(ValueError):
    """A problem file could not be decoded; the message names the offending field."""


class ValidationError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
