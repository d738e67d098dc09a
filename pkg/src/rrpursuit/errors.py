"""Exception types raised across the package."""


class RRPursuitError(Exception):
    """Base class for all errors raised by rrpursuit."""


class ZeroColumn(RRPursuitError):
    def __init__(self, index):
        super().__init__(f"column {index} has (numerically) zero norm")
        self.index = index


class RankDeficient(RRPursuitError):
    def __init__(self, index=None):
        msg = "sub-matrix is numerically rank deficient"
        if index is not None:
            msg += f" when adding column {index}"
        super().__init__(msg)
        self.index = index


class AllColumnsDependent(RRPursuitError):
    """Every remaining column lies in the span of the current support."""


class EmptyTrace(RRPursuitError):
    """A selector was handed a trace without any completed iteration."""


class K0ExceedsTrace(RRPursuitError):
    def __init__(self, k0, k_reached):
        super().__init__(f"k0={k0} exceeds the {k_reached} iterations in the trace")
        self.k0 = k0
        self.k_reached = k_reached


class InvalidParam(RRPursuitError, ValueError):
    pass


class InvalidDims(RRPursuitError, ValueError):
    pass


class NotPowerOfTwo(RRPursuitError, ValueError):
    pass


class K0TooLarge(RRPursuitError, ValueError):
    pass


class ZeroSignal(RRPursuitError, ValueError):
    pass


class BudgetExceeded(RRPursuitError):
    def __init__(self, required, budget):
        super().__init__(
            f"exhaustive enumeration needs {required} subsets, budget is {budget}")
        self.required = required
        self.budget = budget


class PremiseUnmet(RRPursuitError):
    """The RIP premise of a recovery guarantee does not hold for the matrix."""


class ConfigError(RRPursuitError, ValueError):
    pass
