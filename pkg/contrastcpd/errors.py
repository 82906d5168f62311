# contrastcpd/errors.py


class ContrastError(RuntimeError):
    """Base class for every domain failure raised by contrastcpd."""


class EmptyRange(ContrastError):
    """No admissible split exists for the current buffer length."""


class UnsupportedFamily(ContrastError):
    pass


class DimensionMismatch(ContrastError):
    pass


class NonFiniteObjective(ContrastError):
    """Objective became NaN/Inf during fitting (usually a divergent learning rate)."""


class AlreadyAlarmed(ContrastError):
    pass


class DegenerateReference(ContrastError):
    """Reference law has zero (or negative) spread."""


class QuadratureFailure(ContrastError):
    pass


class InsufficientPrefix(ContrastError):
    pass


class InadmissibleShift(ContrastError):
    pass


class ParseError(ContrastError):
    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")
