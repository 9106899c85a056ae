"""Monitors, execution logs and attack presentations.

A monitor gives each role a disclosure trace: the role's inputs, in protocol
order, interleaved with the messages it shares with the monitoring authority.
Compiling those traces yields the frames that turn a participant's actual
inputs into its log entries.  Logs of an attack run and of the normal run
it imitates form a presentation; a single context equation separating them
is the verdict rule added to the monitor.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Sequence

from .compiler import ProtocolImplementation, compile_protocol, compile_trace, evaluate
from .deduction import equivalent, finite_basis, reduce_detectability, static_equivalence, violated_pairs
from .errors import NarmonError, NotExecutable
from .narration import (
    INTRUDER,
    RECEIVED,
    SENT,
    AttackDefinition,
    Fresh,
    Knows,
    LabeledMessage,
    MonitorSpec,
    Protocol,
    ProtocolExecution,
    Step,
    Trace,
)
from .terms import DeductionSystem, Term, apply_context, pos, recipe_key, term_key

BLOCK_IF_SATISFIED = "block_if_satisfied"
BLOCK_IF_VIOLATED = "block_if_violated"


@dataclass(frozen=True)
class Monitor:
    name: str
    strands: tuple
    disclosure_traces: dict

    __hash__ = None

    def trace(self, strand) -> Trace:
        return self.disclosure_traces[strand]

    def as_protocol(self) -> Protocol:
        return Protocol(self.name, self.strands, dict(self.disclosure_traces))


def build_monitor(spec: MonitorSpec, protocol: Protocol) -> Monitor:
    """Disclosure traces from ``X shares ...`` clauses.

    A role keeps its received messages; its own sends are dropped unless it
    ``shares sent``.  ``shares after N : t`` places ``!t`` right after the
    role's part in step N (``after 0`` means right after initial knowledge).
    """
    unknown = sorted({s.role for s in spec.shares} - set(protocol.strands))
    if unknown:
        raise ValueError(f"monitor {spec.name}: unknown role(s) {', '.join(unknown)}")
    numbers = {c.number for c in protocol.clauses if isinstance(c, Step)} | {0}
    for s in spec.shares:
        if s.after is not None and s.after not in numbers:
            raise ValueError(f"monitor {spec.name}: {s.role} shares after unknown step {s.after}")
    traces = {}
    for role in protocol.strands:
        shares_sent = any(s.role == role and s.after is None for s in spec.shares)
        pending = {}
        for s in spec.shares:
            if s.role == role and s.after is not None:
                pending.setdefault(s.after, []).append(s.message)
        out = []
        flushed_zero = False
        for c in protocol.clauses:
            if isinstance(c, (Knows, Fresh)):
                if c.principal == role:
                    terms = c.terms if isinstance(c, Knows) else c.nonces
                    out.extend(LabeledMessage(RECEIVED, t) for t in terms)
                continue
            if not isinstance(c, Step):
                continue
            if not flushed_zero:
                out.extend(LabeledMessage(SENT, t) for t in pending.pop(0, ()))
                flushed_zero = True
            if c.receiver == role:
                out.append(LabeledMessage(RECEIVED, c.message))
            if c.sender == role and shares_sent:
                out.append(LabeledMessage(SENT, c.message))
            out.extend(LabeledMessage(SENT, t) for t in pending.pop(c.number, ()))
        out.extend(LabeledMessage(SENT, t) for t in pending.pop(0, ()))
        traces[role] = Trace(tuple(out))
    return Monitor(spec.name, tuple(protocol.strands), traces)


def full_disclosure(protocol: Protocol) -> Monitor:
    """The monitor whose roles disclose everything they send."""
    return Monitor(protocol.name, tuple(protocol.strands), dict(protocol.traces))


def validate_monitor(monitor: Monitor, protocol: Protocol, system: DeductionSystem):
    """Return ``(ok, diagnostics)``."""
    problems = []
    if set(monitor.strands) != set(protocol.strands):
        problems.append(
            f"strands differ: monitor {sorted(monitor.strands)} vs protocol {sorted(protocol.strands)}"
        )
    for strand in monitor.strands:
        if strand not in protocol.traces:
            continue
        mine = monitor.trace(strand).input().payloads()
        theirs = protocol.trace(strand).input().payloads()
        if len(mine) != len(theirs):
            problems.append(f"{strand}: {len(mine)} inputs, protocol has {len(theirs)}")
        else:
            for i, (a, b) in enumerate(zip(mine, theirs), 1):
                if not system.eq(a, b):
                    problems.append(f"{strand}: input {i} is {a}, protocol has {b}")
                    break
        try:
            compile_trace(monitor.trace(strand), system, prudent=False, strand=strand)
        except NotExecutable as exc:
            problems.append(f"{strand}: not executable: {exc}")
    return not problems, problems


def monitor_implementation(monitor: Monitor, system: DeductionSystem) -> ProtocolImplementation:
    """Non-prudent frames for the disclosure traces."""
    return compile_protocol(monitor.as_protocol(), system, prudent=False)


# -- logs ------------------------------------------------------------------------


@dataclass(frozen=True)
class ExecutionLog:
    entries: Trace
    participant_order: tuple
    provenance: tuple = ()  # participant name for each entry

    def __len__(self):
        return len(self.entries)

    def payloads(self) -> tuple:
        return self.entries.payloads()

    def to_json(self) -> dict:
        return {
            "order": list(self.participant_order),
            "entries": [
                {"participant": p, "message": str(m.payload)}
                for p, m in zip(self.provenance, self.entries)
            ],
        }

    def __str__(self):
        return str(self.entries)


def _order(execution: ProtocolExecution, order: Sequence[str] | None) -> tuple:
    honest = execution.honest()
    if order is None:
        return tuple(sorted(honest))
    chosen = tuple(p for p in order if p in honest)
    missing = sorted(set(honest) - set(chosen))
    if missing:
        raise ValueError(f"participant order omits {', '.join(missing)}")
    if len(set(chosen)) != len(chosen):
        raise ValueError("participant order repeats a name")
    return chosen


def execution_log(
    impl: ProtocolImplementation,
    execution: ProtocolExecution,
    system: DeductionSystem,
    order: Sequence[str] | None = None,
) -> ExecutionLog:
    """Concatenated disclosures of the honest participants, in ``order``.

    ``impl`` holds the monitor frames (see :func:`monitor_implementation`).
    Raises Rejected or LengthMismatch if a frame refuses a participant's inputs.
    """
    chosen = _order(execution, order)
    out, who = [], []
    for p in chosen:
        role = execution.role_map[p]
        frame = impl.frames[role]
        result = evaluate(frame, execution.traces[p].input(), system)
        for m in result:
            if m.polarity is SENT:
                out.append(m)
                who.append(p)
    return ExecutionLog(Trace(tuple(out)), chosen, tuple(who))


@dataclass(frozen=True)
class AttackPresentation:
    attack_log: ExecutionLog
    normal_log: ExecutionLog

    def to_json(self) -> dict:
        return {"attack_log": self.attack_log.to_json(), "normal_log": self.normal_log.to_json()}


def attack_presentation(
    impl: ProtocolImplementation,
    attack: AttackDefinition,
    system: DeductionSystem,
    order: Sequence[str] | None = None,
) -> AttackPresentation:
    a = execution_log(impl, attack.attack_execution(), system, order)
    n = execution_log(impl, attack.normal_execution(), system, order)
    return AttackPresentation(a, n)


# -- detection and verdict rules ----------------------------------------------------


def detectable(pres: AttackPresentation, system: DeductionSystem, via: str = "basis") -> bool:
    a, n = pres.attack_log.entries, pres.normal_log.entries
    if via == "basis":
        return not equivalent(a, n, system)
    if via == "staticeq":
        fa, fn = reduce_detectability(a, n)
        return not static_equivalence(fa, fn, system)
    raise ValueError(f"unknown route {via!r}")


class Verdict(enum.Enum):
    ALLOW = "allow"
    BLOCK = "block"


@dataclass(frozen=True)
class MonitorVerdictRule:
    lhs: Term
    rhs: Term
    polarity: str

    def __post_init__(self):
        if self.polarity not in (BLOCK_IF_SATISFIED, BLOCK_IF_VIOLATED):
            raise ValueError(f"unknown polarity {self.polarity!r}")

    @property
    def equation(self):
        return (self.lhs, self.rhs)

    def to_json(self) -> dict:
        return {"lhs": str(self.lhs), "rhs": str(self.rhs), "polarity": self.polarity}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, data, system) -> "MonitorVerdictRule":
        from .syntax import parse_context
        return cls(parse_context(data["lhs"], system), parse_context(data["rhs"], system), data["polarity"])

    def __str__(self):
        return f"{self.lhs} =? {self.rhs} ({self.polarity})"


def _holds_on(pair, log_payloads, system) -> bool:
    """Equation truth on a log; positions past the end count as violated."""
    try:
        return apply_context(pair[0], log_payloads, system) == apply_context(pair[1], log_payloads, system)
    except NarmonError:
        return False


def _smallest(pairs):
    return min(pairs, key=lambda p: (recipe_key(p[0])[0] + recipe_key(p[1])[0], term_key(p[0]), term_key(p[1])))


def synthesize_test(pres: AttackPresentation, system: DeductionSystem):
    """Distinguishing rule, or None when the attack is undetectable.

    Equations of the normal log that the attack log breaks are preferred and
    block when violated.  Otherwise an equation of the attack log that the
    normal log breaks blocks when satisfied.  Logs of different lengths are
    told apart by their last position alone.
    """
    a, n = pres.attack_log.payloads(), pres.normal_log.payloads()
    if len(a) != len(n):
        if len(n) > len(a):
            v = pos(len(n))
            return MonitorVerdictRule(v, v, BLOCK_IF_VIOLATED)
        v = pos(len(a))
        return MonitorVerdictRule(v, v, BLOCK_IF_SATISFIED)
    broken = violated_pairs(finite_basis(n, system), a, system)
    if broken:
        lhs, rhs = _smallest(broken)
        return MonitorVerdictRule(lhs, rhs, BLOCK_IF_VIOLATED)
    broken = violated_pairs(finite_basis(a, system), n, system)
    if broken:
        lhs, rhs = _smallest(broken)
        return MonitorVerdictRule(lhs, rhs, BLOCK_IF_SATISFIED)
    return None


def apply_verdict(rule, log, system: DeductionSystem) -> Verdict:
    """Block or allow ``log``; ``rule`` may be None, one rule or a list of rules."""
    if rule is None:
        return Verdict.ALLOW
    rules = rule if isinstance(rule, (list, tuple)) else [rule]
    msgs = log.payloads() if hasattr(log, "payloads") else tuple(log)
    for r in rules:
        sat = _holds_on(r.equation, msgs, system)
        if sat == (r.polarity == BLOCK_IF_SATISFIED):
            return Verdict.BLOCK
    return Verdict.ALLOW


__all__ = [
    "AttackPresentation",
    "BLOCK_IF_SATISFIED",
    "BLOCK_IF_VIOLATED",
    "ExecutionLog",
    "Monitor",
    "MonitorVerdictRule",
    "Verdict",
    "apply_verdict",
    "attack_presentation",
    "build_monitor",
    "detectable",
    "execution_log",
    "full_disclosure",
    "monitor_implementation",
    "synthesize_test",
    "validate_monitor",
]
