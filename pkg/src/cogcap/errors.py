"""Exception hierarchy shared by all cogcap modules."""


class CogcapError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(CogcapError, ValueError):
    """A model or plan parameter is outside its admissible range."""


class DivergenceError(ParameterError):
    """Path-loss exponent too close to (or below) 2; aggregate interference diverges."""


class DegreesOfFreedomError(ParameterError):
    """More nulling/cancelation constraints than available antennas."""


class ConditioningError(CogcapError, ArithmeticError):
    """Constraint rows are numerically rank deficient."""


class DegenerateChannelError(CogcapError, ArithmeticError):
    """Projection of the desired channel onto the admissible subspace vanished."""


class InfeasibleError(CogcapError):
    """The outage targets cannot be met for any secondary intensity."""


class MonotonicityError(CogcapError):
    """Outage estimates decreased with intensity beyond Monte Carlo noise.

    Attributes
    ----------
    history : list of (lambda_s, p_primary, p_secondary) tuples visited so far.
    """

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)

    def __reduce__(self):
        return type(self), (self.args[0], self.history)


class TrialError(CogcapError):
    """A single Monte Carlo trial failed; ``trial`` and ``stream`` locate it."""

    def __init__(self, message, trial, stream):
        super().__init__(f"{message} (stream {stream}, trial {trial})")
        self.message = message
        self.trial = trial
        self.stream = stream

    def __reduce__(self):
        return type(self), (self.message, self.trial, self.stream)
