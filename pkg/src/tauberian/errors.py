"""Exception hierarchy shared by all modules."""


class TauberianError(Exception):
    """Base class for every error raised by this package."""


class DomainError(TauberianError, ValueError):
    """An argument lies outside the domain of the function."""


class RateRangeError(TauberianError, ValueError):
    """A value lies outside the range attained by a rate function."""


class PreAsymptoticError(RateRangeError):
    """``c * n`` is still below the range of the derived rate."""


class NumericError(TauberianError, ArithmeticError):
    """An iterative procedure failed to converge."""


class ParameterError(TauberianError, ValueError):
    """A tuning parameter (``c``, ``k``, window...) is inadmissible."""


class InputError(TauberianError, ValueError):
    """Malformed or non-finite input data."""


class SingularityError(TauberianError, ArithmeticError):
    """The resolvent was evaluated (numerically) on the spectrum."""

    def __init__(self, theta, distance=None):
        self.theta = theta
        self.distance = distance
        msg = f"e^(i*theta) lies on the spectrum at theta={theta!r}"
        if distance is not None:
            msg += f" (distance {distance:.3g})"
        super().__init__(msg)


class ToleranceError(TauberianError):
    """A truncation cannot meet the requested tolerance."""

    def __init__(self, message, required_n_coeff=None):
        self.required_n_coeff = required_n_coeff
        super().__init__(message)


class HypothesisFailure(TauberianError):
    """A decay hypothesis fails on the inspected window."""

    def __init__(self, hypothesis, report=None):
        self.hypothesis = hypothesis
        self.report = report
        super().__init__(hypothesis)
