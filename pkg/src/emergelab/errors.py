"""Exception and warning types shared across the package."""


class EmergelabError(Exception):
    """Base class for all package errors."""


# -- event log validation -----------------------------------------------------

class DuplicateId(EmergelabError):
    pass


class DanglingTrigger(EmergelabError):
    pass


class FieldOutOfRange(EmergelabError):
    pass


class EmptyLog(EmergelabError):
    pass


# -- ingestion ----------------------------------------------------------------

class MalformedLine(EmergelabError):
    def __init__(self, lineno: int, message: str = ""):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}" if message else f"line {lineno}")


class MissingRequiredField(MalformedLine):
    def __init__(self, lineno: int, field: str):
        self.field = field
        super().__init__(lineno, f"missing required field {field!r}")


class MalformedHeader(EmergelabError):
    pass


class NonNumericStat(EmergelabError):
    pass


class ConflictingEvidence(EmergelabError):
    pass


# -- graphs and coarse-graining -----------------------------------------------

class EmptyGraph(EmergelabError):
    pass


class ZeroTotalWeight(EmergelabError):
    pass


class UncoveredNode(EmergelabError):
    pass


class TooFewNodes(EmergelabError):
    pass


# -- series / statistics ------------------------------------------------------

class TooShort(EmergelabError):
    pass


class MisalignedSeries(EmergelabError):
    pass


class TooFewSeries(EmergelabError):
    pass


class TooFewLevels(EmergelabError):
    pass


class MissingFields(EmergelabError):
    pass


class NoVariation(EmergelabError):
    pass


# -- warnings -----------------------------------------------------------------

class ConstantDimensionWarning(UserWarning):
    """A dimension passed to the discretizer has no variation; it collapses to one bin."""


class SeparationWarning(UserWarning):
    """Logistic regression data is (quasi-)separable; a ridge-stabilized fit was used."""


class FilledValueWarning(UserWarning):
    """A NoData macro observable was forward-filled during series construction."""
