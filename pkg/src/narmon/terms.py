"""Symbolic terms, contexts, test systems and equality modulo a rewrite theory.

Terms are immutable and hash-consed lazily: every node caches its hash so
that deep terms can be used as dictionary keys cheaply.  Position variables
``v1, v2, ...`` are ordinary :class:`Var` nodes whose name matches ``v<N>``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import NarrationSyntaxError, PositionOutOfRange

_POSITION = re.compile(r"v([1-9][0-9]*)\Z")


class Term:
    __slots__ = ()

    def __lt__(self, other):
        return term_key(self) < term_key(other)


class FreeConst(Term):
    __slots__ = ("name", "_hash")

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("c", name))

    def __eq__(self, other):
        return self is other or (type(other) is FreeConst and other.name == self.name)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"FreeConst({self.name!r})"

    def __str__(self):
        return self.name


class NonceConst(Term):
    __slots__ = ("name", "_hash")

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("n", name))

    def __eq__(self, other):
        return self is other or (type(other) is NonceConst and other.name == self.name)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"NonceConst({self.name!r})"

    def __str__(self):
        return "~" + self.name


class Var(Term):
    __slots__ = ("name", "_hash")

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("x", name))

    def __eq__(self, other):
        return self is other or (type(other) is Var and other.name == self.name)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Var({self.name!r})"

    def __str__(self):
        return self.name


class App(Term):
    """Application of a function symbol (by name) to a tuple of arguments."""

    __slots__ = ("sym", "args", "_hash")

    def __init__(self, sym: str, args: Sequence[Term] = ()):
        self.sym = sym
        self.args = tuple(args)
        self._hash = hash((sym, self.args))

    def __eq__(self, other):
        if self is other:
            return True
        return (
            type(other) is App
            and self._hash == other._hash
            and self.sym == other.sym
            and self.args == other.args
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"App({self.sym!r}, {list(self.args)!r})"

    def __str__(self):
        if not self.args:
            return self.sym
        return f"{self.sym}({', '.join(map(str, self.args))})"


def pos(i: int) -> Var:
    """The position variable ``v_i`` (1-based)."""
    return Var(f"v{i}")


def position_index(t: Term):
    """Index ``i`` if ``t`` is the position variable ``v_i``, else None."""
    if type(t) is Var:
        m = _POSITION.match(t.name)
        if m:
            return int(m.group(1))
    return None


def is_position_name(name: str) -> bool:
    return _POSITION.match(name) is not None


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if type(t) is App:
        for a in t.args:
            yield from subterms(a)


def size(t: Term) -> int:
    if type(t) is App:
        return 1 + sum(size(a) for a in t.args)
    return 1


def depth(t: Term) -> int:
    if type(t) is App and t.args:
        return 1 + max(depth(a) for a in t.args)
    return 1


def variables(t: Term) -> set:
    return {s for s in subterms(t) if type(s) is Var}


def constants(t: Term) -> set:
    """Free and nonce constants occurring in ``t``."""
    return {s for s in subterms(t) if type(s) in (FreeConst, NonceConst)}


def is_ground(t: Term) -> bool:
    return not any(type(s) is Var for s in subterms(t))


def term_key(t: Term):
    """Total order on terms: positions numerically, then by structure."""
    k = type(t)
    if k is Var:
        i = position_index(t)
        return (0, i, "") if i is not None else (1, 0, t.name)
    if k is FreeConst:
        return (2, 0, t.name)
    if k is NonceConst:
        return (3, 0, t.name)
    return (4, len(t.args), t.sym, tuple(term_key(a) for a in t.args))


def recipe_key(t: Term):
    """Preference order for recipes: smaller first, ties broken structurally."""
    return (size(t), term_key(t))


def apply_subst(t: Term, sigma: Mapping[Var, Term]) -> Term:
    """Replace every variable bound in ``sigma``; other variables are kept."""
    if not sigma:
        return t
    k = type(t)
    if k is Var:
        return sigma.get(t, t)
    if k is App:
        args = tuple(apply_subst(a, sigma) for a in t.args)
        if all(x is y for x, y in zip(args, t.args)):
            return t
        return App(t.sym, args)
    return t


def match(pattern: Term, subject: Term, sigma: dict | None = None):
    """Syntactic matching; returns an extended binding dict or None.

    Non-linear patterns are handled by requiring equal bindings.
    """
    sigma = {} if sigma is None else dict(sigma)
    stack = [(pattern, subject)]
    while stack:
        p, s = stack.pop()
        k = type(p)
        if k is Var:
            bound = sigma.get(p)
            if bound is None:
                sigma[p] = s
            elif bound != s:
                return None
        elif k is App:
            if type(s) is not App or s.sym != p.sym or len(s.args) != len(p.args):
                return None
            stack.extend(zip(p.args, s.args))
        elif p != s:
            return None
    return sigma


@dataclass(frozen=True)
class Symbol:
    name: str
    arity: int
    public: bool = True


@dataclass(frozen=True)
class RewriteRule:
    lhs: Term
    rhs: Term

    def __post_init__(self):
        if not variables(self.rhs) <= variables(self.lhs):
            raise ValueError(f"rule {self}: right-hand side has extra variables")
        if type(self.lhs) is not App:
            raise ValueError(f"rule {self}: left-hand side must be an application")

    def is_subterm_rule(self) -> bool:
        proper = any(s == self.rhs for s in subterms(self.lhs) if s is not self.lhs)
        return proper or (is_ground(self.rhs) and self.rhs != self.lhs)

    def __str__(self):
        return f"{self.lhs} -> {self.rhs}"


class DeductionSystem:
    """Signature, public constructors and a convergent rewrite presentation.

    Normal forms are memoised per instance; the cache only ever grows with
    terms already seen, which is fine at the scale this package targets.
    """

    def __init__(self, name: str, symbols: Iterable[Symbol], rules: Iterable[RewriteRule] = ()):
        self.name = name
        self.symbols: dict[str, Symbol] = {}
        for s in symbols:
            if s.name in self.symbols:
                raise ValueError(f"duplicate symbol {s.name}")
            self.symbols[s.name] = s
        self.rules = tuple(rules)
        self._by_root: dict[str, list[RewriteRule]] = {}
        for r in self.rules:
            for t in subterms(r.lhs):
                self._check_symbols(t)
            for t in subterms(r.rhs):
                self._check_symbols(t)
            if not r.is_subterm_rule():
                raise ValueError(f"rule {r} is not subterm-convergent")
            self._by_root.setdefault(r.lhs.sym, []).append(r)
        self._nf: dict[Term, Term] = {}

    def _check_symbols(self, t):
        if type(t) is App:
            s = self.symbols.get(t.sym)
            if s is None:
                raise ValueError(f"unknown symbol {t.sym}")
            if s.arity != len(t.args):
                raise ValueError(f"{t.sym} expects {s.arity} arguments")

    def __repr__(self):
        return f"DeductionSystem({self.name!r})"

    @property
    def public_symbols(self) -> list[Symbol]:
        return [s for s in self.symbols.values() if s.public]

    def is_public(self, sym: str) -> bool:
        s = self.symbols.get(sym)
        return s is not None and s.public

    def rules_for(self, sym: str):
        return self._by_root.get(sym, ())

    def normalize(self, t: Term) -> Term:
        """Innermost, leftmost normal form of ``t``."""
        if type(t) is not App:
            return t
        nf = self._nf.get(t)
        if nf is not None:
            return nf
        args = tuple(self.normalize(a) for a in t.args)
        u = t if all(x is y for x, y in zip(args, t.args)) else App(t.sym, args)
        nf = self._root_step(u)
        if nf is None:
            nf = u
        else:
            nf = self.normalize(nf)
        if len(self._nf) > 2_000_000:
            self._nf.clear()
        self._nf[t] = nf
        return nf

    def _root_step(self, t: App):
        for rule in self._by_root.get(t.sym, ()):
            sigma = match(rule.lhs, t)
            if sigma is not None:
                return apply_subst(rule.rhs, sigma)
        return None

    def rewrite_step_outermost(self, t: Term):
        """One rewrite at the outermost, leftmost redex, or None if normal."""
        if type(t) is not App:
            return None
        r = self._root_step(t)
        if r is not None:
            return r
        for i, a in enumerate(t.args):
            b = self.rewrite_step_outermost(a)
            if b is not None:
                return App(t.sym, t.args[:i] + (b,) + t.args[i + 1:])
        return None

    def normalize_outermost(self, t: Term) -> Term:
        """Normal form via outermost rewriting; used to cross-check confluence."""
        while True:
            u = self.rewrite_step_outermost(t)
            if u is None:
                return t
            t = u

    def root_reducible(self, t: Term) -> bool:
        return type(t) is App and t.sym in self._by_root and self._root_step(t) is not None

    def apply_normal(self, sym: str, args: tuple) -> Term:
        """Normal form of ``sym(args)`` when every argument is already normal."""
        u = App(sym, args)
        if sym not in self._by_root:
            return u
        r = self._root_step(u)
        return u if r is None else self.normalize(r)

    def is_reducible(self, t: Term) -> bool:
        return self.rewrite_step_outermost(t) is not None

    def eq(self, t1: Term, t2: Term) -> bool:
        return self.normalize(t1) == self.normalize(t2)


def normalize(t: Term, system: DeductionSystem) -> Term:
    return system.normalize(t)


def eq_mod_E(t1: Term, t2: Term, system: DeductionSystem) -> bool:
    return system.normalize(t1) == system.normalize(t2)


def check_context(c: Term, system: DeductionSystem) -> None:
    """Raise ValueError unless ``c`` is built from positions and public symbols."""
    for s in subterms(c):
        k = type(s)
        if k is Var:
            if position_index(s) is None:
                raise ValueError(f"context variable {s} is not a position")
        elif k is App:
            if not system.is_public(s.sym):
                raise ValueError(f"context uses non-public symbol {s.sym}")
        else:
            raise ValueError(f"context mentions constant {s}")


def max_position(c: Term) -> int:
    return max((position_index(v) or 0 for v in variables(c)), default=0)


def _payloads(lam) -> Sequence[Term]:
    msgs = getattr(lam, "payloads", None)
    return msgs() if callable(msgs) else lam


def instantiate(c: Term, messages: Sequence[Term]) -> Term:
    """Replace positions by messages without normalising."""
    k = type(c)
    if k is Var:
        i = position_index(c)
        if i is None:
            return c
        if i > len(messages):
            raise PositionOutOfRange(i, len(messages))
        return messages[i - 1]
    if k is App:
        return App(c.sym, tuple(instantiate(a, messages) for a in c.args))
    return c


def apply_context(c: Term, lam, system: DeductionSystem) -> Term:
    """Normal form of ``c`` with each ``v_i`` replaced by the i-th message."""
    return system.normalize(instantiate(c, _payloads(lam)))


@dataclass(frozen=True)
class TestSystem:
    """A finite conjunction of context equations ``C =? C'``."""

    __test__ = False  # not a pytest class

    equations: tuple = field(default_factory=tuple)

    def __iter__(self):
        return iter(self.equations)

    def __len__(self):
        return len(self.equations)

    def __bool__(self):
        return bool(self.equations)

    @property
    def arity(self) -> int:
        return max((max(max_position(l), max_position(r)) for l, r in self.equations), default=0)

    def __str__(self):
        if not self.equations:
            return "{}"
        return "{" + ", ".join(f"{l} =? {r}" for l, r in self.equations) + "}"


def satisfies(lam, tests, system: DeductionSystem) -> bool:
    """True iff every equation of ``tests`` holds on ``lam`` modulo the theory."""
    msgs = _payloads(lam)
    for lhs, rhs in tests:
        if apply_context(lhs, msgs, system) != apply_context(rhs, msgs, system):
            return False
    return True


def parse_position(name: str) -> int:
    m = _POSITION.match(name)
    if not m:
        raise NarrationSyntaxError(f"{name!r} is not a position variable")
    return int(m.group(1))
