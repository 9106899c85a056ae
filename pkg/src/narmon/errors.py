"""Exception hierarchy shared by every narmon module."""


class NarmonError(Exception):
    """Base class for all errors raised by narmon."""


class PositionOutOfRange(NarmonError):
    def __init__(self, index, length):
        super().__init__(f"position v{index} exceeds trace length {length}")
        self.index = index
        self.length = length


class NarrationSyntaxError(NarmonError):
    """Malformed narration, theory or term text."""

    def __init__(self, message, line=None, column=None, expected=()):
        self.message = message
        self.line = line
        self.column = column
        self.expected = tuple(expected)
        where = f"{line}:{column}: " if line is not None else ""
        tail = f" (expected {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{where}{message}{tail}")


class ArityError(NarrationSyntaxError):
    pass


class UnknownSymbol(NarrationSyntaxError):
    pass


class LengthMismatch(NarmonError):
    pass


class NotExecutable(NarmonError):
    """A sent message cannot be derived from what was received before it."""

    def __init__(self, step, message, strand=None):
        self.step = step
        self.message = message
        self.strand = strand
        who = f"strand {strand}: " if strand is not None else ""
        super().__init__(f"{who}step {step}: cannot derive sent message {message}")


class Rejected(NarmonError):
    """An active frame refused its input at a receive step."""

    def __init__(self, step, equation, partial):
        self.step = step
        self.equation = equation
        self.partial = partial
        lhs, rhs = equation
        super().__init__(f"step {step}: test {lhs} =? {rhs} failed")


class ResourceLimit(NarmonError):
    pass
