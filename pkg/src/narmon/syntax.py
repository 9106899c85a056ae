"""Tokenizer and recursive-descent parser for the term surface syntax.

    term   := NONCE | IDENT | IDENT '(' term (',' term)* ')'
    NONCE  := '~' IDENT

Bare identifiers resolve to a nullary symbol of the theory when one is
declared, to a position variable when they read ``vN`` (only where positions
are allowed), and to a free constant otherwise.  In rule mode every bare
identifier that is not a nullary symbol is a rewrite variable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ArityError, NarrationSyntaxError, UnknownSymbol
from .terms import App, FreeConst, NonceConst, Var, is_position_name

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<arrow>->)
  | (?P<nonce>~[A-Za-z_][A-Za-z0-9_']*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<int>[0-9]+)
  | (?P<punct>[(),:.!?/=\[\]])
    """,
    re.VERBOSE,
)

# Position of the token stream end, for diagnostics.
EOL = "end of line"


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str, line: int = 1, col0: int = 1) -> list[Token]:
    out = []
    i = 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if not m:
            raise NarrationSyntaxError(f"unexpected character {text[i]!r}", line, col0 + i)
        kind = m.lastgroup
        if kind != "ws":
            t = m.group()
            out.append(Token(t if kind == "punct" or kind == "arrow" else kind, t, line, col0 + i))
        i = m.end()
    return out


class TokenStream:
    def __init__(self, tokens, line=1, eol_col=1):
        self.tokens = tokens
        self.i = 0
        self.line = line
        self.eol_col = eol_col

    def peek(self, offset=0):
        j = self.i + offset
        return self.tokens[j] if j < len(self.tokens) else None

    def at_end(self):
        return self.i >= len(self.tokens)

    def next(self):
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of line")
        self.i += 1
        return tok

    def accept(self, kind):
        tok = self.peek()
        if tok is not None and tok.kind == kind:
            self.i += 1
            return tok
        return None

    def expect(self, kind, what=None):
        tok = self.peek()
        if tok is None or tok.kind != kind:
            found = EOL if tok is None else repr(tok.text)
            raise self.error(f"found {found}", expected=(what or repr(kind),), tok=tok)
        self.i += 1
        return tok

    def expect_word(self, word):
        tok = self.peek()
        if tok is None or tok.kind != "ident" or tok.text != word:
            found = EOL if tok is None else repr(tok.text)
            raise self.error(f"found {found}", expected=(repr(word),), tok=tok)
        self.i += 1
        return tok

    def expect_end(self):
        tok = self.peek()
        if tok is not None:
            raise self.error(f"unexpected {tok.text!r}", expected=(EOL,), tok=tok)

    def error(self, message, expected=(), tok=None, cls=NarrationSyntaxError):
        if tok is None:
            tok = self.peek()
        col = tok.col if tok is not None else self.eol_col
        return cls(message, self.line, col, expected)


class TermParser:
    """Parses terms against a deduction system's signature."""

    def __init__(self, system, positions=False, rule_mode=False):
        self.system = system
        self.positions = positions
        self.rule_mode = rule_mode

    def parse(self, text: str, line: int = 1):
        ts = TokenStream(tokenize(text, line), line, len(text) + 1)
        t = self.term(ts)
        ts.expect_end()
        return t

    def term(self, ts: TokenStream):
        tok = ts.peek()
        if tok is None:
            raise ts.error("unexpected end of line", expected=("term",))
        if tok.kind == "nonce":
            ts.next()
            return NonceConst(tok.text[1:])
        if tok.kind != "ident":
            raise ts.error(f"found {tok.text!r}", expected=("term",))
        ts.next()
        name = tok.text
        sym = self.system.symbols.get(name)
        if ts.accept("("):
            args = [self.term(ts)]
            while ts.accept(","):
                args.append(self.term(ts))
            ts.expect(")", "')'")
            if sym is None:
                raise UnknownSymbol(f"unknown function symbol {name!r}", tok.line, tok.col)
            if sym.arity != len(args):
                raise ArityError(
                    f"{name} expects {sym.arity} argument(s), got {len(args)}", tok.line, tok.col
                )
            return App(name, args)
        if sym is not None:
            if sym.arity != 0:
                raise ArityError(f"{name} expects {sym.arity} argument(s), got 0", tok.line, tok.col)
            return App(name, ())
        if is_position_name(name):
            if not (self.positions or self.rule_mode):
                raise NarrationSyntaxError(
                    f"{name!r} is a reserved position variable", tok.line, tok.col
                )
            return Var(name)
        if self.rule_mode:
            return Var(name)
        return FreeConst(name)


def parse_term(text: str, system, positions: bool = False):
    """Parse a single term; ``positions=True`` admits ``vN`` variables (contexts)."""
    return TermParser(system, positions=positions).parse(text)


def parse_context(text: str, system):
    """Parse a context: positions and public symbols only."""
    from .terms import check_context
    c = TermParser(system, positions=True).parse(text)
    try:
        check_context(c, system)
    except ValueError as exc:
        raise NarrationSyntaxError(f"{text!r}: {exc}") from None
    return c
