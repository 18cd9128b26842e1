"""Exception hierarchy. Every error raised on bad input data derives from DataError."""


class DataError(Exception):
    """Input data violates a format or a precondition."""


class ConfigError(Exception):
    """Invalid combination of options (model kind vs. scenario, bad hyperparameter)."""


class InvalidHyperparam(ConfigError, ValueError):
    pass


# -- trace ingestion / serialization ---------------------------------------

class MalformedLine(DataError):
    def __init__(self, line_no, reason=""):
        self.line_no = line_no
        super().__init__(f"line {line_no}: malformed" + (f" ({reason})" if reason else ""))


class UnknownEvent(DataError):
    def __init__(self, name, line_no=None):
        self.name = name
        self.line_no = line_no
        super().__init__(f"unknown event {name!r}" + (f" at line {line_no}" if line_no else ""))


class NonMonotonicTimestamp(DataError):
    def __init__(self, line_no, t_prev, t):
        self.line_no = line_no
        super().__init__(f"line {line_no}: timestamp {t} does not follow {t_prev}")


class MissingEventAtTimestamp(DataError):
    def __init__(self, timestamp, events):
        self.timestamp = timestamp
        self.events = tuple(events)
        super().__init__(f"t={timestamp}: missing {', '.join(self.events)}")


class SchemaViolation(DataError):
    def __init__(self, line_no, reason=""):
        self.line_no = line_no
        super().__init__(f"record {line_no}: schema violation" + (f" ({reason})" if reason else ""))


class InvariantViolation(DataError, ValueError):
    """A domain object was constructed with values breaking its invariants."""


# -- synthesis ---------------------------------------------------------------

class RejectedDegenerate(DataError, ValueError):
    pass


# -- features / classifiers --------------------------------------------------

class EmptyMatrix(DataError, ValueError):
    pass


class SingleClass(DataError, ValueError):
    pass


class NoConvergence(DataError, RuntimeError):
    def __init__(self, iterations, what="solver"):
        self.iterations = iterations
        super().__init__(f"{what} did not converge after {iterations} iterations")


class TooFewPoints(DataError, ValueError):
    pass


class SingularCovariance(DataError, ValueError):
    pass


class DimensionMismatch(DataError, ValueError):
    pass


# -- static scan --------------------------------------------------------------

class BadMagic(DataError):
    pass


class Truncated(DataError):
    pass


class NoTextSection(DataError):
    pass


class UnsupportedClass(DataError):
    pass


class MalformedListing(DataError):
    def __init__(self, line_no, reason=""):
        self.line_no = line_no
        super().__init__(f"listing line {line_no}: " + (reason or "malformed"))


class EmptySequence(DataError, ValueError):
    pass


# -- evaluation ---------------------------------------------------------------

class LabelLeak(DataError):
    pass
