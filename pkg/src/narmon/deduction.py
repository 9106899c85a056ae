"""Recipe synthesis, finite bases, refinement and static equivalence.

The central structure is a saturated :class:`KnowledgeBase`: every message of
a positive trace is seeded as a fact with its position as recipe, then rule
instances are applied until no new fact (modulo composition) appears.  For a
subterm-convergent theory the facts stay among the subterms of the trace, so
saturation terminates, and a ground term is derivable exactly when it is a
fact or a public symbol applied to derivable terms.

Besides recipes, saturation records every alternative way it found to reach
a value.  Pairing those with the canonical recipes, plus one composition
equation per decomposable fact, yields the finite basis of the trace.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .errors import ResourceLimit
from .narration import Trace
from .terms import (
    App,
    DeductionSystem,
    FreeConst,
    Term,
    TestSystem,
    Var,
    apply_context,
    apply_subst,
    constants,
    instantiate,
    match,
    pos,
    recipe_key,
    size,
    subterms,
    term_key,
    variables,
)

DEFAULT_DEPTH = 3
DEFAULT_BUDGET = 10**6


def _messages(lam) -> tuple:
    if isinstance(lam, Trace):
        return lam.payloads()
    return tuple(lam)


class KnowledgeBase:
    """Facts known from a positive trace, each with its canonical recipe."""

    def __init__(self, messages: Sequence[Term], system: DeductionSystem):
        self.system = system
        self.messages = tuple(system.normalize(m) for m in messages)
        self.facts: dict[Term, Term] = {}
        self.alternatives: set[tuple[Term, Term]] = set()
        self._derive_memo: dict[Term, Term | None] = {}
        for i, m in enumerate(self.messages, 1):
            self._seed(m, pos(i))
        self._saturate()

    def __len__(self):
        return len(self.facts)

    @property
    def n(self) -> int:
        return len(self.messages)

    def entries(self) -> list[tuple[Term, Term]]:
        return sorted(self.facts.items(), key=lambda kv: recipe_key(kv[1]))

    # -- derivability -------------------------------------------------------

    def derive(self, t: Term):
        """Smallest recipe for the normal form ``t``, or None if not derivable."""
        memo = self._derive_memo
        if t in memo:
            return memo[t]
        best = self.facts.get(t)
        if type(t) is App and self.system.is_public(t.sym):
            subs = []
            for a in t.args:
                r = self.derive(a)
                if r is None:
                    break
                subs.append(r)
            else:
                composed = App(t.sym, subs)
                if best is None or recipe_key(composed) < recipe_key(best):
                    best = composed
        memo[t] = best
        return best

    def composable(self, t: Term) -> bool:
        """Derivable with a public symbol at the root of the recipe."""
        if type(t) is not App or not self.system.is_public(t.sym):
            return False
        return all(self.derive(a) is not None for a in t.args)

    # -- saturation ---------------------------------------------------------

    def _seed(self, value, recipe):
        cur = self.facts.get(value)
        if cur is None:
            self.facts[value] = recipe
            self._derive_memo.clear()
        else:
            self.alternatives.add((value, recipe))

    def _offer(self, value, recipe) -> bool:
        cur = self.facts.get(value)
        if cur is None:
            if self.composable(value):
                self.alternatives.add((value, recipe))
                return False
            self.facts[value] = recipe
            self._derive_memo.clear()
            return True
        if recipe == cur:
            return False
        if recipe_key(recipe) < recipe_key(cur):
            self.facts[value] = recipe
            self.alternatives.add((value, cur))
            self._derive_memo.clear()
            return True
        self.alternatives.add((value, recipe))
        return False

    def _saturate(self):
        rules = [r for r in self.system.rules if self.system.is_public(r.lhs.sym)]
        changed = True
        while changed:
            changed = False
            for rule in rules:
                for value, recipe in list(self._applications(rule)):
                    if self._offer(value, recipe):
                        changed = True

    def _applications(self, rule):
        """Rule instances whose arguments are facts or composed from them.

        Every non-variable position below the root is either matched against
        a fact or built with its (public) symbol.  Variables left unbound by
        fact matches are instantiated with the smallest fact.
        """
        lhs = rule.lhs
        inner = []  # paths of non-variable proper subterms, pre-order

        def walk(t, path):
            for i, a in enumerate(t.args):
                if type(a) is App:
                    inner.append((path + (i,), a))
                    walk(a, path + (i,))

        walk(lhs, ())
        if not self.facts:
            return
        smallest = min(self.facts.items(), key=lambda kv: recipe_key(kv[1]))[0]
        for modes in itertools.product((True, False), repeat=len(inner)):
            fact_paths = []
            ok = True
            for (path, sub), is_fact in zip(inner, modes):
                covered = any(path[: len(fp)] == fp for fp in fact_paths)
                if covered:
                    # inside a fact-matched subtree the mode is irrelevant; keep one choice
                    if not is_fact:
                        ok = False
                        break
                    continue
                if is_fact:
                    fact_paths.append(path)
                elif not self.system.is_public(sub.sym):
                    ok = False
                    break
            if not ok:
                continue
            if not fact_paths:
                continue  # fully composed instances only restate the rule
            patterns = [_at(lhs, p) for p in fact_paths]
            for sigma, recipes in self._match_facts(patterns, {}):
                yield from self._instance(rule, fact_paths, recipes, sigma, smallest)

    def _match_facts(self, patterns, sigma):
        if not patterns:
            yield sigma, []
            return
        head, rest = patterns[0], patterns[1:]
        for value, recipe in self.facts.items():
            if type(value) is not App or value.sym != head.sym:
                continue
            s = match(head, value, sigma)
            if s is None:
                continue
            for s2, recs in self._match_facts(rest, s):
                yield s2, [recipe] + recs

    def _instance(self, rule, fact_paths, recipes, sigma, smallest):
        sigma = dict(sigma)
        by_path = dict(zip(fact_paths, recipes))

        def build(t, path):
            if path in by_path:
                return by_path[path]
            if type(t) is Var:
                if t not in sigma:
                    sigma[t] = smallest
                return self.derive(sigma[t])
            if type(t) is App:
                args = []
                for i, a in enumerate(t.args):
                    r = build(a, path + (i,))
                    if r is None:
                        return None
                    args.append(r)
                return App(t.sym, args)
            return self.derive(t)

        recipe = build(rule.lhs, ())
        if recipe is None or self.system.is_reducible(recipe):
            return
        value = self.system.normalize(instantiate(recipe, self.messages))
        yield value, recipe

    # -- basis ----------------------------------------------------------------

    def basis_pairs(self) -> list[tuple[Term, Term]]:
        pairs = set()
        for value, alt in self.alternatives:
            canon = self.derive(value)
            if canon is not None and canon != alt:
                pairs.add(_orient(canon, alt))
        for value, recipe in self.facts.items():
            if type(value) is App and self.system.is_public(value.sym):
                subs = [self.derive(a) for a in value.args]
                if all(r is not None for r in subs):
                    composed = App(value.sym, subs)
                    if composed != recipe:
                        pairs.add(_orient(recipe, composed))
        return sorted(pairs, key=_pair_key)


def _at(t, path):
    for i in path:
        t = t.args[i]
    return t


def _orient(a, b):
    # larger side first, as in "pi1(dec(v7, v6)) =? v1"
    ka, kb = (-size(a), term_key(a)), (-size(b), term_key(b))
    return (a, b) if ka <= kb else (b, a)


def _pair_key(p):
    return (recipe_key(p[0])[0] + recipe_key(p[1])[0], term_key(p[0]), term_key(p[1]))


@dataclass(frozen=True)
class Basis:
    """Finite set of context pairs that hold on the generating trace."""

    pairs: tuple = ()

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self):
        return len(self.pairs)

    def __contains__(self, pair):
        return tuple(pair) in self.pairs

    def as_test_system(self) -> TestSystem:
        return TestSystem(self.pairs)

    def to_json(self) -> dict:
        return {"pairs": [[str(a), str(b)] for a, b in self.pairs]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, data, system) -> "Basis":
        from .syntax import parse_context
        return cls(tuple((parse_context(a, system), parse_context(b, system)) for a, b in data["pairs"]))


@dataclass(frozen=True)
class EqFrame:
    """A positive trace with a set of hidden constant names (``nu n. s``)."""

    hidden: frozenset
    body: Trace

    def __len__(self):
        return len(self.body)


@lru_cache(maxsize=4096)
def _kb(messages: tuple, system: DeductionSystem) -> KnowledgeBase:
    return KnowledgeBase(messages, system)


def knowledge(lam, system: DeductionSystem) -> KnowledgeBase:
    return _kb(_messages(lam), system)


def synthesize(lam, t: Term, system: DeductionSystem):
    """A context C with C applied to ``lam`` equal to ``t``, or None."""
    kb = knowledge(lam, system)
    return kb.derive(system.normalize(t))


def finite_basis(lam, system: DeductionSystem) -> Basis:
    return Basis(tuple(knowledge(lam, system).basis_pairs()))


def holds(pair, messages, system) -> bool:
    lhs, rhs = pair
    return apply_context(lhs, messages, system) == apply_context(rhs, messages, system)


def violated_pairs(basis: Iterable, lam, system: DeductionSystem) -> list:
    msgs = _messages(lam)
    return [p for p in basis if not holds(p, msgs, system)]


def refines(lam_prime, lam, system: DeductionSystem) -> bool:
    """Every context equality of ``lam`` also holds on ``lam_prime``."""
    a, b = _messages(lam_prime), _messages(lam)
    if len(a) != len(b):
        return False
    msgs = tuple(system.normalize(m) for m in a)
    return all(holds(p, msgs, system) for p in finite_basis(b, system))


def refinement_witness(lam_prime, lam, system: DeductionSystem):
    """An equation of ``lam`` that ``lam_prime`` violates, or None."""
    a, b = _messages(lam_prime), _messages(lam)
    if len(a) != len(b):
        return None
    bad = violated_pairs(finite_basis(b, system), a, system)
    if not bad:
        return None
    # among equally small witnesses, prefer one that takes a message apart
    destructors = {r.lhs.sym for r in system.rules}

    def key(p):
        uses = any(type(t) is App and t.sym in destructors for side in p for t in subterms(side))
        return (size(p[0]) + size(p[1]), not uses, term_key(p[0]), term_key(p[1]))

    return min(bad, key=key)


def equivalent(lam1, lam2, system: DeductionSystem) -> bool:
    return refines(lam1, lam2, system) and refines(lam2, lam1, system)


# -- static equivalence -------------------------------------------------------


def _fresh_names(taken: set, k: int) -> list:
    out, i = [], 1
    while len(out) < k:
        c = FreeConst(f"_nu{i}")
        if c not in taken:
            out.append(c)
        i += 1
    return out


def _all_constants(frame: EqFrame) -> set:
    out = set()
    for m in frame.body.payloads():
        out |= constants(m)
    return out


def static_equivalence(f1: EqFrame, f2: EqFrame, system: DeductionSystem) -> bool:
    """Static equivalence of two frames.

    Contexts may mention any constant that is not hidden.  Such constants are
    appended to both bodies as extra published entries, followed by
    ``max(len) + 2`` names that occur nowhere, standing for arbitrary fresh
    constants.
    """
    if len(f1) != len(f2):
        return False
    hidden = set(f1.hidden) | set(f2.hidden)
    seen = _all_constants(f1) | _all_constants(f2)
    visible = sorted(seen - hidden, key=term_key)
    fresh = _fresh_names(seen | hidden, max(len(f1), len(f2)) + 2)
    extra = Trace.positive(visible + fresh)
    return equivalent(f1.body + extra, f2.body + extra, system)


def reduce_detectability(t1: Trace, t2: Trace) -> tuple[EqFrame, EqFrame]:
    """Frames hiding every constant of their trace."""
    def frame(t):
        body = t if t.is_positive() else Trace.positive(t.payloads())
        names = set()
        for m in t.payloads():
            names |= constants(m)
        return EqFrame(frozenset(names), body)
    return frame(t1), frame(t2)


# -- brute-force oracle ---------------------------------------------------------


def relevant_symbols(messages, system: DeductionSystem) -> set:
    """Public symbols occurring in some rule or in ``messages``."""
    names = set()
    for r in system.rules:
        names |= {t.sym for t in subterms(r.lhs) if type(t) is App}
        names |= {t.sym for t in subterms(r.rhs) if type(t) is App}
    for m in messages:
        names |= {t.sym for t in subterms(m) if type(t) is App}
    return {n for n in names if system.is_public(n)}


def _combos_with_new(old: list, new: list, arity: int):
    """Tuples over ``old + new`` with at least one component from ``new``."""
    both = old + new
    for i in range(arity):
        # component i is the first one taken from ``new``
        yield from itertools.product(*([old] * i + [new] + [both] * (arity - i - 1)))


class _Enumeration:
    """Contexts over a trace, one representative per value, grouped by depth.

    Depth counts nested function symbols: positions and constants have depth
    0.  Levels below ``lazy`` are stored in full.  Values first reached at
    depth ``lazy`` are stored only when a rule fires on the context that
    reaches them; the others are plain applications ``f(u1, .., uk)`` of
    stored values and are recognised on demand (see :meth:`rep`).
    """

    def __init__(self, msgs, system, allowed, budget):
        self.system = system
        self.allowed = allowed
        self.names = {s.name for s in allowed}
        self.budget = budget
        self.count = 0
        self.seen: dict = {}
        self.level: dict = {}
        self.by_root: dict = {}
        self.levels: list = [[]]
        self.pairs: list = []
        self.lazy = None
        for i, m in enumerate(msgs, 1):
            self.visit(pos(i), m, 0)
        for s in allowed:
            if s.arity == 0:
                self.visit(App(s.name, ()), system.normalize(App(s.name, ())), 0)

    def tick(self):
        self.count += 1
        if self.count > self.budget:
            raise ResourceLimit(f"context enumeration exceeded {self.budget} candidates")

    def visit(self, ctx, value, d):
        found = self.seen.get(value)
        if found is not None:
            self.pairs.append((found, ctx))
            return
        self.store(ctx, value, d)

    def store(self, ctx, value, d):
        self.seen[value] = ctx
        self.level[value] = d
        while len(self.levels) <= d:
            self.levels.append([])
        self.levels[d].append((ctx, value))
        if type(value) is App:
            self.by_root.setdefault(value.sym, []).append((ctx, value))

    def full_level(self, d):
        """Enumerate every context of depth ``d``."""
        old = [x for lvl in self.levels[: d - 1] for x in lvl]
        newest = self.levels[d - 1]
        for s in self.allowed:
            if s.arity == 0:
                continue
            redex = s.name in self.system._by_root
            for combo in _combos_with_new(old, newest, s.arity):
                self.tick()
                ctx = App(s.name, tuple(c for c, _ in combo))
                if redex and self.system.root_reducible(ctx):
                    continue
                self.visit(ctx, self.system.apply_normal(s.name, tuple(v for _, v in combo)), d)

    # -- values reached without storing them

    def rep(self, w, top):
        """``(context, depth)`` reaching ``w`` with depth at most ``top``, or None."""
        ctx = self.seen.get(w)
        if ctx is not None:
            d = self.level[w]
            return (ctx, d) if d <= top else None
        if self.lazy is not None and top >= self.lazy:
            return self.composite(w, self.lazy, lazy_args=False)
        return None

    def composite(self, w, top, lazy_args=True):
        """The non-firing context ``f(rep(u1), .., rep(uk))`` for ``w = f(u1, .., uk)``."""
        if type(w) is not App or not w.args or w.sym not in self.names:
            return None
        ctxs, d = [], 0
        for a in w.args:
            r = self.rep(a, top - 1) if lazy_args else self._stored(a, top - 1)
            if r is None:
                return None
            ctxs.append(r[0])
            d = max(d, r[1])
        if not self.irreducible(w):
            return None
        return App(w.sym, tuple(ctxs)), d + 1

    def irreducible(self, w):
        return self.system.apply_normal(w.sym, w.args) == w

    def _stored(self, w, top):
        ctx = self.seen.get(w)
        if ctx is None or self.level[w] > top:
            return None
        return ctx, self.level[w]

    # -- shortcut levels

    def shortcut_level(self, d, materialize):
        """Collisions involving contexts of depth ``d``.

        A context ``f(c1, .., ck)`` over representatives on which no rule
        fires has value ``f(val1, .., valk)``.  Representatives have pairwise
        distinct values, so two such contexts never collide, and one collides
        with an earlier value ``w`` exactly when ``w`` is that application:
        those collisions are read off the table of values.  Contexts on
        which a rule fires are enumerated through the rule's left-hand side.
        """
        top = d - 1
        for w, rep in list(self.seen.items()):
            self.tick()
            r = self.composite(w, d)
            if r is not None and r[1] == d and r[0] != rep:
                self.pairs.append((rep, r[0]))
        local: dict = {}
        for s in self.allowed:
            if s.arity == 0:
                continue
            done = set()
            for rule in self.system.rules_for(s.name):
                for combo, _, _ in self._patterns(rule.lhs.args, {}, top, True, need=True):
                    self.tick()
                    ctxs = tuple(c for c, _, _ in combo)
                    if ctxs in done or max(x for _, _, x in combo) != top:
                        continue
                    done.add(ctxs)
                    ctx = App(s.name, ctxs)
                    if self.system.root_reducible(ctx):
                        continue
                    value = self.system.apply_normal(s.name, tuple(v for _, v, _ in combo))
                    if value in self.seen:
                        self.pairs.append((self.seen[value], ctx))
                        continue
                    if value in local:
                        self.pairs.append((local[value], ctx))
                        continue
                    other = self.composite(value, d)
                    if other is not None:
                        self.pairs.append((ctx, other[0]))
                    if materialize:
                        self.store(ctx, value, d)
                    else:
                        local[value] = ctx

    def _patterns(self, patterns, sigma, top, lazy_ok, need=False):
        """Tuples ``(ctx, value, depth)`` whose values match ``patterns`` jointly.

        Also yields whether some item matches only up to the theory, i.e. its
        context is not literally an instance of its pattern over canonical
        representatives.  With ``need`` set, combinations where every item
        matches literally are skipped: they build redex contexts, which the
        enumeration ignores.  Private-rooted patterns go first and variables
        last, so that variables are usually bound before they are met alone.
        """
        order = sorted(
            range(len(patterns)),
            key=lambda i: (type(patterns[i]) is Var, type(patterns[i]) is App and patterns[i].sym in self.names),
        )
        for found, s2, sem in self._patterns_in(patterns, order, sigma, top, lazy_ok, need):
            yield tuple(found[i] for i in range(len(patterns))), s2, sem

    def _patterns_in(self, patterns, order, sigma, top, lazy_ok, need):
        if not order:
            yield {}, sigma, False
            return
        i, rest = order[0], order[1:]
        # remaining variables always match literally
        tail = need and all(type(patterns[j]) is Var for j in rest)
        for item, s2, sem in self._one(patterns[i], sigma, top, lazy_ok, tail):
            for found, s3, sem2 in self._patterns_in(patterns, rest, s2, top, lazy_ok, need and not sem):
                found = dict(found)
                found[i] = item
                yield found, s3, sem or sem2

    def _canon(self, v):
        ctx = self.seen.get(v)
        if ctx is None and self.lazy is not None:
            r = self.composite(v, self.lazy, lazy_args=False)
            ctx = r and r[0]
        return ctx

    def _literal(self, p, ctx, sigma):
        canon = {}
        for x in variables(p):
            c = self._canon(sigma[x])
            if c is None:
                return False
            canon[x] = c
        return apply_subst(p, canon) == ctx

    def _one(self, p, sigma, top, lazy_ok, need):
        inst = apply_subst(p, sigma)
        if not variables(inst):
            r = self.rep(inst, top) if lazy_ok else self._stored(inst, top)
            if r is not None:
                sem = not self._literal(p, r[0], sigma)
                if sem or not need:
                    yield (r[0], inst, r[1]), sigma, sem
            return
        if type(p) is Var:
            if need:
                return
            for ctx, v in self._all(top, lazy_ok):
                yield (ctx, v, self.level.get(v, self.lazy)), {**sigma, p: v}, False
            return
        for ctx, v in self.by_root.get(p.sym, ()):
            if self.level[v] > top:
                continue
            s2 = match(p, v, sigma)
            if s2 is not None:
                sem = not self._literal(p, ctx, s2)
                if sem or not need:
                    yield (ctx, v, self.level[v]), s2, sem
        if lazy_ok and self.lazy is not None and top >= self.lazy and p.sym in self.names:
            # lazily reached applications with root p.sym
            for combo, s2, sem in self._patterns(p.args, sigma, self.lazy - 1, False, need):
                us = tuple(v for _, v, _ in combo)
                w = App(p.sym, us)
                if w in self.seen or max(x for _, _, x in combo) != self.lazy - 1:
                    continue
                if self.irreducible(w):
                    yield (App(p.sym, tuple(c for c, _, _ in combo)), w, self.lazy), s2, sem

    def _all(self, top, lazy_ok):
        for v, ctx in list(self.seen.items()):
            if self.level[v] <= top:
                yield ctx, v
        if lazy_ok and self.lazy is not None and top >= self.lazy:
            d = self.lazy
            old = [x for lvl in self.levels[: d - 1] for x in lvl]
            newest = self.levels[d - 1]
            for s in self.allowed:
                if s.arity == 0:
                    continue
                for combo in _combos_with_new(old, newest, s.arity):
                    w = App(s.name, tuple(v for _, v in combo))
                    if w not in self.seen and self.irreducible(w):
                        yield App(s.name, tuple(c for c, _ in combo)), w


def brute_force_basis(
    lam,
    system: DeductionSystem,
    depth: int = DEFAULT_DEPTH,
    budget: int = DEFAULT_BUDGET,
    symbols: Iterable[str] | None = None,
    naive: bool = False,
) -> Basis:
    """Every E-equality among contexts of depth at most ``depth`` on ``lam``.

    Depth counts nested function symbols, so positions have depth 0.
    Contexts are enumerated level by level from one representative per value
    (the first one found), and each later context with an already-seen value
    contributes the pair (representative, context).  On any trace, all
    enumerated pairs hold exactly when all pairs among every context of that
    depth hold, because contexts with equal value are interchangeable under
    congruence.  Contexts that are redexes themselves are skipped: they agree
    with their reduct on every trace.

    ``symbols`` restricts the public symbols used.  By default a symbol is
    skipped when no rule mentions it and it does not occur in ``lam``: every
    equation built with it then follows by congruence from shallower ones.

    The two deepest levels are not enumerated in full unless ``naive`` is
    set; see :class:`_Enumeration` for the shortcut, which yields the same
    equations up to the choice of representatives.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    msgs = tuple(system.normalize(m) for m in _messages(lam))
    if symbols is None:
        symbols = relevant_symbols(msgs, system)
    allowed = sorted(
        (s for s in system.public_symbols if s.name in set(symbols)),
        key=lambda s: (s.arity, s.name),
    )
    en = _Enumeration(msgs, system, allowed, budget)
    if naive:
        for d in range(1, depth + 1):
            en.full_level(d)
    else:
        for d in range(1, depth - 1):
            en.full_level(d)
        if depth >= 2:
            en.shortcut_level(depth - 1, materialize=True)
            en.lazy = depth - 1
        en.shortcut_level(depth, materialize=False)
    return Basis(tuple(en.pairs))


def oracle_refines(
    lam_prime, lam, system, depth=DEFAULT_DEPTH, symbols=None, basis=None, budget=DEFAULT_BUDGET
) -> bool:
    """Refinement decided with the brute-force basis instead of saturation."""
    a, b = _messages(lam_prime), _messages(lam)
    if len(a) != len(b):
        return False
    if basis is None:
        basis = brute_force_basis(b, system, depth, budget, symbols=symbols)
    msgs = tuple(system.normalize(m) for m in a)
    return all(holds(p, msgs, system) for p in basis)


def oracle_synthesize(lam, t, system, depth=DEFAULT_DEPTH, symbols=None, budget=DEFAULT_BUDGET):
    """Smallest-depth recipe for ``t`` found by enumeration, or None.

    Depth counts nested function symbols, as for :func:`brute_force_basis`.
    """
    msgs = tuple(system.normalize(m) for m in _messages(lam))
    target = system.normalize(t)
    allowed = sorted(
        (s for s in system.public_symbols if symbols is None or s.name in set(symbols)),
        key=lambda s: (s.arity, s.name),
    )
    seen = {}
    level = []
    for i, m in enumerate(msgs, 1):
        if m not in seen:
            seen[m] = pos(i)
            level.append((pos(i), m))
    for s in allowed:
        if s.arity == 0:
            v = system.normalize(App(s.name, ()))
            if v not in seen:
                seen[v] = App(s.name, ())
                level.append((seen[v], v))
    if target in seen:
        return seen[target]
    pool = list(level)
    count = 0
    for _ in range(depth):
        newest = set(id(x) for x in level)
        level = []
        for s in allowed:
            if s.arity == 0:
                continue
            for combo in itertools.product(pool, repeat=s.arity):
                if not any(id(x) in newest for x in combo):
                    continue
                count += 1
                if count > budget:
                    raise ResourceLimit(f"recipe enumeration exceeded {budget} candidates")
                v = system.apply_normal(s.name, tuple(x for _, x in combo))
                if v not in seen:
                    seen[v] = App(s.name, [c for c, _ in combo])
                    level.append((seen[v], v))
        if target in seen:
            return seen[target]
        pool.extend(level)
    return None


__all__ = [
    "Basis",
    "EqFrame",
    "KnowledgeBase",
    "brute_force_basis",
    "equivalent",
    "finite_basis",
    "knowledge",
    "oracle_refines",
    "oracle_synthesize",
    "reduce_detectability",
    "refinement_witness",
    "refines",
    "relevant_symbols",
    "static_equivalence",
    "synthesize",
]
