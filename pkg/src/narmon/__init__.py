"""Compile Alice&Bob protocol narrations into guarded role programs and
synthesize runtime monitors that tell known attacks apart from normal runs."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    LengthMismatch,
    NarmonError,
    NarrationSyntaxError,
    NotExecutable,
    PositionOutOfRange,
    Rejected,
    ResourceLimit,
)
from .terms import App, DeductionSystem, FreeConst, NonceConst, Var, pos  # noqa: E402
from .theories import classic, load_theory, resolve_theory  # noqa: E402
