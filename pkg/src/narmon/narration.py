"""Traces and the line-oriented Alice&Bob narration language (``.pnar``).

Four document kinds share one grammar (see ``docs/grammar.ebnf``):

* ``protocol NAME``: roles, initial knowledge and numbered message steps;
* ``execution NAME for PROTO``: a concrete run, participants bound by ``plays``;
* ``attack NAME for PROTO``: an attack run and the normal run it replaces,
  written as ``section attack`` and ``section normal``;
* ``monitor NAME for PROTO``: what each role shares with the monitor;
* ``trace NAME``: a bare trace, one ``! term`` or ``? term`` per line.

A step ``X -> Y : m`` appends ``!m`` to X's trace and ``?m`` to Y's.  The
annotation ``I(A)`` only records who the intruder pretends to be and is
dropped during expansion.  ``X knows ...`` and ``fresh X: ...`` clauses become
leading receive steps, in textual order.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import NarrationSyntaxError
from .syntax import TermParser, TokenStream, tokenize
from .terms import NonceConst, Term, is_ground, variables

INTRUDER = "I"


class Polarity(enum.Enum):
    SENT = "!"
    RECEIVED = "?"

    def flip(self) -> "Polarity":
        return Polarity.RECEIVED if self is Polarity.SENT else Polarity.SENT


SENT = Polarity.SENT
RECEIVED = Polarity.RECEIVED


@dataclass(frozen=True)
class LabeledMessage:
    polarity: Polarity
    payload: Term

    def __post_init__(self):
        if variables(self.payload):
            raise ValueError(f"trace message {self.payload} is not ground")

    def __str__(self):
        return f"{self.polarity.value}{self.payload}"


@dataclass(frozen=True)
class Trace:
    messages: tuple = ()

    @classmethod
    def positive(cls, payloads: Iterable[Term]) -> "Trace":
        return cls(tuple(LabeledMessage(SENT, t) for t in payloads))

    @classmethod
    def negative(cls, payloads: Iterable[Term]) -> "Trace":
        return cls(tuple(LabeledMessage(RECEIVED, t) for t in payloads))

    def __len__(self):
        return len(self.messages)

    def __iter__(self):
        return iter(self.messages)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Trace(self.messages[i])
        return self.messages[i]

    def __add__(self, other: "Trace") -> "Trace":
        return Trace(self.messages + other.messages)

    def payloads(self) -> tuple:
        return tuple(m.payload for m in self.messages)

    def labels(self) -> tuple:
        return tuple(m.polarity for m in self.messages)

    def restrict(self, polarity: Polarity) -> "Trace":
        return Trace(tuple(m for m in self.messages if m.polarity is polarity))

    def negate(self) -> "Trace":
        return Trace(tuple(LabeledMessage(m.polarity.flip(), m.payload) for m in self.messages))

    def input(self) -> "Trace":
        """Received messages, relabelled as sent."""
        return self.restrict(RECEIVED).negate()

    def output(self) -> "Trace":
        """Sent messages, relabelled as received."""
        return self.restrict(SENT).negate()

    def is_positive(self) -> bool:
        return all(m.polarity is SENT for m in self.messages)

    def is_negative(self) -> bool:
        return all(m.polarity is RECEIVED for m in self.messages)

    def __str__(self):
        return "(" + ", ".join(map(str, self.messages)) + ")"


def restrict(lam: Trace, polarity: Polarity) -> Trace:
    return lam.restrict(polarity)


def negate(lam: Trace) -> Trace:
    return lam.negate()


def input_of(lam: Trace) -> Trace:
    return lam.input()


def output_of(lam: Trace) -> Trace:
    return lam.output()


# -- narration clauses -------------------------------------------------------


@dataclass(frozen=True)
class Knows:
    principal: str
    terms: tuple


@dataclass(frozen=True)
class Fresh:
    principal: str
    nonces: tuple


@dataclass(frozen=True)
class Step:
    number: int
    sender: str
    receiver: str
    message: Term
    sender_as: str | None = None
    receiver_as: str | None = None


@dataclass(frozen=True)
class Share:
    role: str
    after: int | None  # None: disclose every message the role sends
    message: Term | None = None


def _expand(clauses: Sequence, principals: Sequence[str]) -> dict:
    traces = {p: [] for p in principals}
    for c in clauses:
        if isinstance(c, Knows):
            traces[c.principal].extend(LabeledMessage(RECEIVED, t) for t in c.terms)
        elif isinstance(c, Fresh):
            traces[c.principal].extend(LabeledMessage(RECEIVED, n) for n in c.nonces)
        elif isinstance(c, Step):
            traces[c.sender].append(LabeledMessage(SENT, c.message))
            traces[c.receiver].append(LabeledMessage(RECEIVED, c.message))
    return {p: Trace(tuple(ms)) for p, ms in traces.items()}


def _initial_segment(clauses, principal):
    out = []
    for c in clauses:
        if isinstance(c, Step):
            break
        if isinstance(c, Knows) and c.principal == principal:
            out.extend(c.terms)
        elif isinstance(c, Fresh) and c.principal == principal:
            out.extend(c.nonces)
    return out


@dataclass(frozen=True)
class Protocol:
    name: str
    strands: tuple
    traces: dict
    clauses: tuple = ()

    __hash__ = None

    def trace(self, strand: str) -> Trace:
        return self.traces[strand]

    def is_positive(self, strand: str) -> bool:
        return self.traces[strand].is_positive()

    @classmethod
    def from_traces(cls, name: str, traces: dict) -> "Protocol":
        return cls(name, tuple(traces), dict(traces))


@dataclass(frozen=True)
class ProtocolExecution:
    name: str
    protocol: str
    participants: tuple
    traces: dict
    role_map: dict
    clauses: tuple = ()

    def __post_init__(self):
        missing = [p for p in self.participants if p not in self.role_map]
        if missing:
            raise ValueError(f"participants without a role: {', '.join(missing)}")

    __hash__ = None

    def honest(self) -> list:
        return [p for p in self.participants if self.role_map[p] != INTRUDER]

    def is_honest(self) -> bool:
        return all(r != INTRUDER for r in self.role_map.values())


@dataclass(frozen=True)
class AttackDefinition:
    name: str
    protocol: str
    participants: tuple
    attack_traces: dict
    normal_traces: dict
    role_map: dict
    attack_clauses: tuple = ()
    normal_clauses: tuple = ()

    __hash__ = None

    def honest(self) -> list:
        return [p for p in self.participants if self.role_map[p] != INTRUDER]

    def attack_execution(self) -> ProtocolExecution:
        return ProtocolExecution(
            f"{self.name}/attack", self.protocol, self.participants,
            dict(self.attack_traces), dict(self.role_map), self.attack_clauses,
        )

    def normal_execution(self) -> ProtocolExecution:
        honest = tuple(self.honest())
        return ProtocolExecution(
            f"{self.name}/normal", self.protocol, honest,
            {p: self.normal_traces[p] for p in honest},
            {p: self.role_map[p] for p in honest}, self.normal_clauses,
        )

    def divergent_initial_knowledge(self) -> list:
        """Honest participants whose knowledge prefix differs between the runs."""
        return [
            p for p in self.honest()
            if _initial_segment(self.attack_clauses, p) != _initial_segment(self.normal_clauses, p)
        ]


@dataclass(frozen=True)
class MonitorSpec:
    name: str
    protocol: str
    shares: tuple = ()


@dataclass(frozen=True)
class NamedTrace:
    name: str
    trace: Trace


# -- parsing -----------------------------------------------------------------

_HEADERS = ("protocol", "execution", "attack", "monitor", "trace")
_CLAUSE_WORDS = ("knows", "shares")


class _Line:
    def __init__(self, text, lineno):
        self.text = text
        self.lineno = lineno
        self.ts = TokenStream(tokenize(text, lineno), lineno, len(text) + 1)


class NarrationParser:
    def __init__(self, system):
        self.system = system
        self.terms = TermParser(system)

    def parse(self, text: str):
        lines = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            body = raw.split("#", 1)[0].rstrip()
            if body.strip():
                lines.append(_Line(body, lineno))
        kind, name, target = "protocol", "", ""
        if lines and self._is_header(lines[0].ts):
            kind, name, target = self._header(lines.pop(0).ts)
        handler = getattr(self, "_parse_" + kind)
        return handler(name, target, lines)

    # header ---------------------------------------------------------------

    @staticmethod
    def _is_header(ts):
        first, second = ts.peek(), ts.peek(1)
        if first is None or first.kind != "ident" or first.text not in _HEADERS:
            return False
        return second is None or (second.kind == "ident" and second.text not in _CLAUSE_WORDS)

    def _header(self, ts):
        kind = ts.next().text
        name = ts.accept("ident")
        name = name.text if name else ""
        target = ""
        if kind in ("execution", "attack", "monitor"):
            ts.expect_word("for")
            target = ts.expect("ident", "protocol name").text
        ts.expect_end()
        return kind, name, target

    # shared clause grammar --------------------------------------------------

    def _term_list(self, ts):
        items = [self.terms.term(ts)]
        while ts.accept(","):
            items.append(self.terms.term(ts))
        return tuple(items)

    def _principal(self, ts):
        who = ts.expect("ident", "principal").text
        alias = None
        if ts.accept("("):
            alias = ts.expect("ident", "principal").text
            ts.expect(")", "')'")
        return who, alias

    def _clause(self, line, counter):
        """Parse knows / fresh / step lines; returns a clause or None."""
        ts = line.ts
        first, second = ts.peek(), ts.peek(1)
        if first.kind == "ident" and first.text == "fresh" and second is not None and second.kind == "ident":
            ts.next()
            who = ts.expect("ident", "principal").text
            ts.expect(":", "':'")
            nonces = self._term_list(ts)
            for n in nonces:
                if not isinstance(n, NonceConst):
                    raise NarrationSyntaxError(
                        f"fresh values must be nonces (~name), got {n}", line.lineno, first.col
                    )
            ts.expect_end()
            return Fresh(who, nonces)
        if first.kind == "ident" and second is not None and second.kind == "ident" and second.text == "knows":
            ts.next()
            ts.next()
            terms = self._term_list(ts)
            ts.expect_end()
            return Knows(first.text, terms)
        number = None
        if first.kind == "int":
            number = int(ts.next().text)
            ts.expect(".", "'.'")
        elif first.kind != "ident":
            return None
        mark = ts.i
        sender, sender_as = self._principal(ts)
        if not ts.accept("->"):
            if number is None:
                ts.i = mark
                return None
            raise ts.error("malformed step", expected=("'->'",))
        receiver, receiver_as = self._principal(ts)
        ts.expect(":", "':'")
        msg = self.terms.term(ts)
        ts.expect_end()
        if number is None:
            number = counter
        return Step(number, sender, receiver, msg, sender_as, receiver_as)

    def _clauses(self, lines, extra=None):
        clauses = []
        for line in lines:
            if extra is not None and extra(line):
                continue
            n = 1 + sum(isinstance(c, Step) for c in clauses)
            c = self._clause(line, n)
            if c is None:
                tok = line.ts.peek()
                raise NarrationSyntaxError(
                    f"unexpected {tok.text!r}", line.lineno, tok.col,
                    ("step", "'knows'", "'fresh'"),
                )
            clauses.append((c, line))
        return clauses

    @staticmethod
    def _check_names(clauses, allowed, what):
        for c, line in clauses:
            names = []
            if isinstance(c, (Knows, Fresh)):
                names = [c.principal]
            elif isinstance(c, Step):
                names = [c.sender, c.receiver]
            for n in names:
                if n not in allowed:
                    raise NarrationSyntaxError(f"undeclared {what} {n!r}", line.lineno, 1)

    # documents ------------------------------------------------------------

    def _parse_protocol(self, name, _target, lines):
        roles = []

        def roles_line(line):
            tok = line.ts.peek()
            if tok.kind == "ident" and tok.text == "roles" and line.ts.peek(1) is not None \
                    and line.ts.peek(1).kind == "ident" and line.ts.peek(1).text not in _CLAUSE_WORDS:
                line.ts.next()
                roles.append(line.ts.expect("ident", "role name").text)
                while line.ts.accept(","):
                    roles.append(line.ts.expect("ident", "role name").text)
                line.ts.expect_end()
                return True
            return False

        clauses = self._clauses(lines, roles_line)
        if roles:
            if INTRUDER in roles:
                raise NarrationSyntaxError(f"{INTRUDER!r} is reserved for the intruder")
            self._check_names(clauses, set(roles), "role")
        else:
            for c, _ in clauses:
                for n in _principals_of(c):
                    if n not in roles:
                        roles.append(n)
        plain = tuple(c for c, _ in clauses)
        return Protocol(name, tuple(roles), _expand(plain, roles), plain)

    def _plays(self, line):
        ts = line.ts
        tok = ts.peek()
        if not (tok.kind == "ident" and tok.text == "plays" and ts.peek(1) is not None
                and ts.peek(1).kind == "ident" and ts.peek(1).text not in _CLAUSE_WORDS):
            return None
        ts.next()
        mapping = {}
        while True:
            who = ts.expect("ident", "participant").text
            ts.expect_word("as")
            role = ts.expect("ident", "role").text
            if who in mapping:
                raise NarrationSyntaxError(f"participant {who} bound twice", line.lineno, tok.col)
            mapping[who] = role
            if not ts.accept(","):
                break
        ts.expect_end()
        return mapping

    def _parse_execution(self, name, target, lines):
        role_map = {}

        def plays(line):
            m = self._plays(line)
            if m is None:
                return False
            role_map.update(m)
            return True

        clauses = self._clauses(lines, plays)
        if not role_map:
            raise NarrationSyntaxError("execution needs a 'plays' clause", expected=("'plays'",))
        self._check_names(clauses, set(role_map), "participant")
        plain = tuple(c for c, _ in clauses)
        participants = tuple(role_map)
        return ProtocolExecution(name, target, participants, _expand(plain, participants), role_map, plain)

    def _parse_attack(self, name, target, lines):
        role_map = {}
        sections = {"attack": [], "normal": []}
        current = None
        for line in lines:
            m = self._plays(line)
            if m is not None:
                role_map.update(m)
                continue
            tok = line.ts.peek()
            if tok.kind == "ident" and tok.text == "section":
                line.ts.next()
                which = line.ts.expect("ident", "'attack' or 'normal'")
                if which.text not in sections:
                    raise NarrationSyntaxError(
                        f"unknown section {which.text!r}", line.lineno, which.col, ("attack", "normal")
                    )
                line.ts.expect_end()
                current = which.text
                continue
            if current is None:
                raise NarrationSyntaxError(
                    "clause outside a section", line.lineno, tok.col, ("'section attack'",)
                )
            sections[current].append(line)
        if not role_map:
            raise NarrationSyntaxError("attack needs a 'plays' clause", expected=("'plays'",))
        participants = tuple(role_map)
        attack = self._clauses(sections["attack"])
        normal = self._clauses(sections["normal"])
        self._check_names(attack, set(participants), "participant")
        self._check_names(normal, set(participants), "participant")
        a_plain = tuple(c for c, _ in attack)
        n_plain = tuple(c for c, _ in normal)
        honest = [p for p in participants if role_map[p] != INTRUDER]
        normal_traces = _expand(n_plain, participants)
        result = AttackDefinition(
            name, target, participants, _expand(a_plain, participants),
            {p: normal_traces[p] for p in honest}, role_map, a_plain, n_plain,
        )
        diverged = result.divergent_initial_knowledge()
        if diverged:
            warnings.warn(
                f"attack {name}: initial knowledge differs between runs for {', '.join(diverged)}",
                stacklevel=3,
            )
        return result

    def _parse_monitor(self, name, target, lines):
        shares = []
        for line in lines:
            ts = line.ts
            who = ts.expect("ident", "role")
            ts.expect_word("shares")
            mode = ts.expect("ident", "'after' or 'sent'")
            if mode.text == "sent":
                ts.expect_end()
                shares.append(Share(who.text, None))
            elif mode.text == "after":
                step = int(ts.expect("int", "step number").text)
                ts.expect(":", "':'")
                msg = self.terms.term(ts)
                ts.expect_end()
                shares.append(Share(who.text, step, msg))
            else:
                raise NarrationSyntaxError(
                    f"found {mode.text!r}", line.lineno, mode.col, ("'after'", "'sent'")
                )
        return MonitorSpec(name, target, tuple(shares))

    def _parse_trace(self, name, _target, lines):
        out = []
        for line in lines:
            ts = line.ts
            tok = ts.next()
            if tok.kind not in ("!", "?"):
                raise NarrationSyntaxError(f"found {tok.text!r}", line.lineno, tok.col, ("'!'", "'?'"))
            msg = self.terms.term(ts)
            ts.expect_end()
            out.append(LabeledMessage(SENT if tok.kind == "!" else RECEIVED, msg))
        return NamedTrace(name, Trace(tuple(out)))


def _principals_of(c):
    if isinstance(c, (Knows, Fresh)):
        return [c.principal]
    if isinstance(c, Step):
        return [c.sender, c.receiver]
    return []


def parse_narration(text: str, system=None):
    """Parse any narration document; the theory defaults to ``classic``."""
    if system is None:
        from .theories import classic
        system = classic()
    return NarrationParser(system).parse(text)


def load_narration(path, system=None):
    from pathlib import Path
    return parse_narration(Path(path).read_text(encoding="utf-8"), system)


# -- printing ----------------------------------------------------------------


def _format_clause(c) -> str:
    if isinstance(c, Knows):
        return f"{c.principal} knows {', '.join(map(str, c.terms))}"
    if isinstance(c, Fresh):
        return f"fresh {c.principal}: {', '.join(map(str, c.nonces))}"
    s = c.sender + (f"({c.sender_as})" if c.sender_as else "")
    r = c.receiver + (f"({c.receiver_as})" if c.receiver_as else "")
    return f"{c.number}. {s} -> {r} : {c.message}"


def format_narration(doc) -> str:
    """Render a parsed document back to narration text."""
    out = []
    if isinstance(doc, Protocol):
        out.append(f"protocol {doc.name}".rstrip())
        if doc.strands:
            out.append("roles " + ", ".join(doc.strands))
        out.extend(_format_clause(c) for c in doc.clauses)
    elif isinstance(doc, ProtocolExecution):
        out.append(f"execution {doc.name} for {doc.protocol}")
        out.append("plays " + ", ".join(f"{p} as {r}" for p, r in doc.role_map.items()))
        out.extend(_format_clause(c) for c in doc.clauses)
    elif isinstance(doc, AttackDefinition):
        out.append(f"attack {doc.name} for {doc.protocol}")
        out.append("plays " + ", ".join(f"{p} as {r}" for p, r in doc.role_map.items()))
        out.append("section attack")
        out.extend(_format_clause(c) for c in doc.attack_clauses)
        out.append("section normal")
        out.extend(_format_clause(c) for c in doc.normal_clauses)
    elif isinstance(doc, MonitorSpec):
        out.append(f"monitor {doc.name} for {doc.protocol}")
        for s in doc.shares:
            if s.after is None:
                out.append(f"{s.role} shares sent")
            else:
                out.append(f"{s.role} shares after {s.after} : {s.message}")
    elif isinstance(doc, NamedTrace):
        out.append(f"trace {doc.name}".rstrip())
        out.extend(f"{m.polarity.value} {m.payload}" for m in doc.trace)
    else:
        raise TypeError(f"cannot format {type(doc).__name__}")
    return "\n".join(out) + "\n"


def is_ground_trace(lam: Trace) -> bool:
    return all(is_ground(m.payload) for m in lam)
