"""Active frames: evaluation on input traces and compilation from traces.

Frames number their positions by received message: ``v_j`` is the j-th
message the frame has received, whatever the step index at which it arrived.
Recipes and tests are therefore contexts over the input trace directly, and
evaluating a frame needs no renaming.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Union

from .deduction import finite_basis, synthesize
from .errors import LengthMismatch, NotExecutable, Rejected
from .narration import RECEIVED, SENT, LabeledMessage, Protocol, Trace
from .terms import DeductionSystem, Term, TestSystem, instantiate, max_position


@dataclass(frozen=True)
class Send:
    index: int
    recipe: Term

    kind = "send"

    def to_json(self) -> dict:
        return {"kind": "send", "recipe": str(self.recipe)}


@dataclass(frozen=True)
class Receive:
    index: int
    tests: TestSystem = field(default_factory=TestSystem)

    kind = "receive"

    def to_json(self) -> dict:
        return {"kind": "receive", "tests": [[str(a), str(b)] for a, b in self.tests]}


FrameStep = Union[Send, Receive]


@dataclass(frozen=True)
class ActiveFrame:
    steps: tuple = ()

    def __post_init__(self):
        received = 0
        for i, st in enumerate(self.steps, 1):
            if st.index != i:
                raise ValueError(f"frame step {i} carries index {st.index}")
            if isinstance(st, Send):
                if max_position(st.recipe) > received:
                    raise ValueError(f"send step {i} uses a position not yet received")
            else:
                received += 1
                if st.tests.arity > received:
                    raise ValueError(f"receive step {i} tests a position not yet received")

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    @property
    def input_count(self) -> int:
        return sum(isinstance(s, Receive) for s in self.steps)

    def tests(self) -> TestSystem:
        """Union of all receive-step test systems."""
        eqs = []
        for s in self.steps:
            if isinstance(s, Receive):
                eqs.extend(s.tests)
        return TestSystem(tuple(eqs))

    def to_json(self) -> dict:
        return {"steps": [s.to_json() for s in self.steps]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, data, system) -> "ActiveFrame":
        from .syntax import parse_context
        steps = []
        for i, st in enumerate(data["steps"], 1):
            if st["kind"] == "send":
                steps.append(Send(i, parse_context(st["recipe"], system)))
            elif st["kind"] == "receive":
                eqs = tuple((parse_context(a, system), parse_context(b, system)) for a, b in st["tests"])
                steps.append(Receive(i, TestSystem(eqs)))
            else:
                raise ValueError(f"unknown step kind {st['kind']!r}")
        return cls(tuple(steps))

    def pseudocode(self) -> str:
        lines = []
        received = 0
        for st in self.steps:
            if isinstance(st, Receive):
                received += 1
                line = f"{st.index:>3}. receive v{received}"
                if st.tests:
                    checks = " and ".join(f"{a} = {b}" for a, b in st.tests)
                    line += f"  check {checks}"
            else:
                line = f"{st.index:>3}. send {st.recipe}"
            lines.append(line)
        return "\n".join(lines)


@dataclass(frozen=True)
class ProtocolImplementation:
    strands: tuple
    frames: dict
    prudent: bool = True

    __hash__ = None

    def __post_init__(self):
        missing = [s for s in self.strands if s not in self.frames]
        if missing:
            raise ValueError(f"no frame for strand(s) {', '.join(missing)}")

    def to_json(self) -> dict:
        return {
            "prudent": self.prudent,
            "frames": {s: self.frames[s].to_json() for s in self.strands},
        }


@dataclass
class TestOutcome:
    """One evaluated receive-step equation, kept for simulation transcripts."""

    __test__ = False

    step: int
    lhs: Term
    rhs: Term
    passed: bool

    def to_json(self) -> dict:
        return {"step": self.step, "lhs": str(self.lhs), "rhs": str(self.rhs), "passed": self.passed}


def _inputs(lam) -> tuple:
    if isinstance(lam, Trace):
        if not lam.is_positive():
            raise ValueError("frames are evaluated on positive traces")
        return lam.payloads()
    return tuple(lam)


def evaluate(phi: ActiveFrame, lam, system: DeductionSystem, transcript: list | None = None) -> Trace:
    """Run ``phi`` on the positive trace ``lam``.

    Tests are checked as soon as their receive step is reached, so a rejection
    names the earliest failing equation.  Passing a list as ``transcript``
    collects a :class:`TestOutcome` per evaluated equation.
    """
    msgs = _inputs(lam)
    if len(msgs) != phi.input_count:
        raise LengthMismatch(f"frame expects {phi.input_count} input(s), got {len(msgs)}")
    received: list[Term] = []
    out: list[LabeledMessage] = []
    for st in phi.steps:
        if isinstance(st, Receive):
            m = system.normalize(msgs[len(received)])
            received.append(m)
            out.append(LabeledMessage(RECEIVED, m))
            for lhs, rhs in st.tests:
                ok = system.normalize(instantiate(lhs, received)) == system.normalize(
                    instantiate(rhs, received)
                )
                if transcript is not None:
                    transcript.append(TestOutcome(st.index, lhs, rhs, ok))
                if not ok:
                    raise Rejected(st.index, (lhs, rhs), Trace(tuple(out)))
        else:
            out.append(LabeledMessage(SENT, system.normalize(instantiate(st.recipe, received))))
    return Trace(tuple(out))


def accepts(phi: ActiveFrame, lam, system: DeductionSystem) -> bool:
    try:
        evaluate(phi, lam, system)
    except (Rejected, LengthMismatch):
        return False
    return True


def _new_tests(received: list, system) -> TestSystem:
    """Basis equations of the received prefix that mention its last position."""
    k = len(received)
    basis = finite_basis(tuple(received), system)
    return TestSystem(tuple(p for p in basis if max(max_position(p[0]), max_position(p[1])) == k))


def compile_trace(lam: Trace, system: DeductionSystem, prudent: bool = True, strand=None) -> ActiveFrame:
    """Active frame implementing ``lam``; prudent frames test every basis equation."""
    steps = []
    received: list[Term] = []
    for i, m in enumerate(lam, 1):
        t = system.normalize(m.payload)
        if m.polarity is SENT:
            recipe = synthesize(tuple(received), t, system)
            if recipe is None:
                raise NotExecutable(i, m.payload, strand)
            steps.append(Send(i, recipe))
        else:
            received.append(t)
            tests = _new_tests(received, system) if prudent else TestSystem()
            steps.append(Receive(i, tests))
    return ActiveFrame(tuple(steps))


compile = compile_trace


def is_implementation(phi: ActiveFrame, lam: Trace, system: DeductionSystem) -> bool:
    if len(phi) != len(lam):
        return False
    try:
        got = evaluate(phi, lam.input(), system)
    except (Rejected, LengthMismatch):
        return False
    for a, b in zip(got, lam):
        if a.polarity is not b.polarity or not system.eq(a.payload, b.payload):
            return False
    return True


def compile_protocol(protocol: Protocol, system: DeductionSystem, prudent: bool = True) -> ProtocolImplementation:
    frames = {}
    for strand in protocol.strands:
        frames[strand] = compile_trace(protocol.trace(strand), system, prudent, strand=strand)
    return ProtocolImplementation(tuple(protocol.strands), frames, prudent)


__all__ = [
    "ActiveFrame",
    "FrameStep",
    "ProtocolImplementation",
    "Receive",
    "Send",
    "TestOutcome",
    "accepts",
    "compile_protocol",
    "compile_trace",
    "evaluate",
    "is_implementation",
]
