"""Built-in deduction systems and the declarative theory file format.

A theory file holds one declaration per line (``#`` starts a comment)::

    theory classic
    fun pair/2
    fun inv/1 private
    rule pi1(pair(x, y)) -> x

Symbols must be declared before the rules that use them.  Public nullary
symbols are allowed and may appear in contexts.
"""

from __future__ import annotations

import os
from functools import lru_cache
from pathlib import Path

from .errors import NarrationSyntaxError
from .syntax import TermParser, TokenStream, tokenize
from .terms import DeductionSystem, RewriteRule, Symbol

THEORY_ENV = "NARMON_THEORY"

CLASSIC_SOURCE = """\
theory classic
fun pair/2
fun pi1/1
fun pi2/1
fun enc/2
fun dec/2
fun inv/1 private
fun senc/2
fun sdec/2
fun h/4
rule pi1(pair(x, y)) -> x
rule pi2(pair(x, y)) -> y
rule dec(enc(x, y), inv(y)) -> x
rule sdec(senc(x, y), y) -> x
"""


def load_theory(text: str, name: str | None = None) -> DeductionSystem:
    symbols: dict[str, Symbol] = {}
    rules = []
    theory_name = name
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        ts = TokenStream(tokenize(line, lineno), lineno, len(line) + 1)
        head = ts.expect("ident", "'theory', 'fun' or 'rule'")
        if head.text == "theory":
            theory_name = theory_name or ts.expect("ident", "theory name").text
            ts.expect_end()
        elif head.text == "fun":
            sym = ts.expect("ident", "symbol name")
            ts.expect("/", "'/'")
            arity = int(ts.expect("int", "arity").text)
            public = True
            flag = ts.accept("ident")
            if flag is not None:
                if flag.text not in ("private", "public"):
                    raise NarrationSyntaxError(
                        f"unknown flag {flag.text!r}", lineno, flag.col, ("private", "public")
                    )
                public = flag.text == "public"
            ts.expect_end()
            if sym.text in symbols:
                raise NarrationSyntaxError(f"symbol {sym.text} declared twice", lineno, sym.col)
            symbols[sym.text] = Symbol(sym.text, arity, public)
        elif head.text == "rule":
            partial = DeductionSystem(theory_name or "theory", symbols.values())
            parser = TermParser(partial, rule_mode=True)
            lhs = parser.term(ts)
            ts.expect("->", "'->'")
            rhs = parser.term(ts)
            ts.expect_end()
            try:
                rules.append(RewriteRule(lhs, rhs))
            except ValueError as exc:
                raise NarrationSyntaxError(str(exc), lineno, head.col) from None
        else:
            raise NarrationSyntaxError(
                f"unknown declaration {head.text!r}", lineno, head.col, ("theory", "fun", "rule")
            )
    try:
        return DeductionSystem(theory_name or "theory", symbols.values(), rules)
    except ValueError as exc:
        raise NarrationSyntaxError(str(exc)) from None


@lru_cache(maxsize=None)
def classic() -> DeductionSystem:
    """Pairs, asymmetric and symmetric encryption, and a free 4-ary hash."""
    return load_theory(CLASSIC_SOURCE)


PRESETS = {"classic": classic}


def resolve_theory(spec: str | None = None) -> DeductionSystem:
    """Preset name or theory file path; falls back to $NARMON_THEORY, then classic."""
    spec = spec or os.environ.get(THEORY_ENV) or "classic"
    if spec in PRESETS:
        return PRESETS[spec]()
    path = Path(spec)
    return _load_file(str(path.resolve()))


@lru_cache(maxsize=16)
def _load_file(path: str) -> DeductionSystem:
    return load_theory(Path(path).read_text(encoding="utf-8"))
