"""Exception hierarchy.

``ConfigError`` subclasses map to CLI exit code 2, ``NumericalError``
subclasses to exit code 3.
"""


class CrashImputeError(Exception):
    pass


class ConfigError(CrashImputeError, ValueError):
    pass


class NumericalError(CrashImputeError, ArithmeticError):
    pass


# data model
class DimensionMismatch(ConfigError):
    pass


class EmptyRowOrColumn(ConfigError):
    pass


class ZeroVariance(NumericalError):
    def __init__(self, column):
        super().__init__(f"column {column!r} has constant observed values")
        self.column = column


class TooFewObserved(ConfigError):
    def __init__(self, column):
        super().__init__(f"column {column!r} has fewer than 2 observed values")
        self.column = column


# imputers
class DegenerateCluster(NumericalError):
    pass


# imbalance
class TooFewSamples(ConfigError):
    pass


class IncompleteRows(ConfigError):
    pass


class NoCandidates(ConfigError):
    def __init__(self, crash_id):
        super().__init__(f"no matching controls for crash {crash_id!r}")
        self.crash_id = crash_id


class MinRatio(ConfigError):
    pass


# classifiers / evaluation
class SingleClass(ConfigError):
    pass


class NonPositiveWeight(ConfigError):
    pass


class InfeasibleRatio(ConfigError):
    pass


class EmptyProbe(ConfigError):
    pass


class TooFewPerClass(ConfigError):
    pass


class InvalidConfig(ConfigError):
    pass
