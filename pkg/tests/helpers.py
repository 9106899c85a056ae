"""Shared fixtures-free helpers: corpus paths and seeded random generators."""

from __future__ import annotations

import random
from pathlib import Path

from narmon.deduction import synthesize
from narmon.narration import RECEIVED, SENT, LabeledMessage, Trace
from narmon.syntax import parse_context, parse_term
from narmon.terms import App, FreeConst, NonceConst, constants, subterms
from narmon.theories import classic

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"

D = classic()

ATOMS = [FreeConst(x) for x in ("a", "b", "c")] + [NonceConst(x) for x in ("n1", "n2")]
KEYS = [FreeConst(x) for x in ("k1", "k2", "k3")]


def T(text):
    return parse_term(text, D)


def C(text):
    return parse_context(text, D)


def positive(*texts):
    return Trace.positive([T(t) for t in texts])


def random_term(rng: random.Random, depth: int = 3):
    """Ground term of depth at most ``depth`` over the classic signature."""
    if depth <= 1 or rng.random() < 0.3:
        return rng.choice(ATOMS + KEYS)
    sub = depth - 1
    pick = rng.random()
    if pick < 0.25:
        return App("enc", (random_term(rng, sub), rng.choice(KEYS)))
    if pick < 0.45:
        return App("senc", (random_term(rng, sub), rng.choice(KEYS + ATOMS)))
    if pick < 0.7:
        return App("pair", (random_term(rng, sub), random_term(rng, sub)))
    if pick < 0.85:
        return App("inv", (rng.choice(KEYS),))
    if pick < 0.9:
        return App("h", tuple(rng.choice(ATOMS) for _ in range(4)))
    return rng.choice(KEYS)


def random_frame(rng: random.Random, n: int, depth: int = 3) -> Trace:
    """A positive trace whose messages tend to share atoms and keys."""
    msgs = []
    for _ in range(n):
        r = rng.random()
        if r < 0.2 and msgs:
            # a key (or inverse) that opens something already present
            keys = [t.args[1] for m in msgs for t in subterms(m) if type(t) is App and t.sym in ("enc", "senc")]
            if keys:
                k = rng.choice(keys)
                enc_keys = [t.args[1] for m in msgs for t in subterms(m) if type(t) is App and t.sym == "enc"]
                msgs.append(App("inv", (k,)) if k in enc_keys and rng.random() < 0.7 else k)
                continue
        if r < 0.35 and msgs:
            msgs.append(rng.choice(msgs))
            continue
        msgs.append(random_term(rng, depth))
    return Trace.positive(msgs)


def random_variant(rng: random.Random, lam: Trace) -> Trace:
    """A trace of the same length, often but not always a refinement."""
    msgs = list(lam.payloads())
    names = sorted(set().union(*(constants(m) for m in msgs)) or {ATOMS[0]}, key=str)
    kind = rng.randrange(6)
    if kind == 0:
        return Trace.positive(msgs)
    if kind == 1:
        # injective renaming onto fresh names
        sigma = {x: FreeConst(f"r_{getattr(x, 'name')}") for x in names}
        return Trace.positive(_rename(m, sigma) for m in msgs)
    if kind == 2 and len(names) > 1:
        x, y = rng.sample(names, 2)
        return Trace.positive(_rename(m, {x: y}) for m in msgs)
    if kind == 3 and len(msgs) > 1:
        i, j = rng.sample(range(len(msgs)), 2)
        msgs[i], msgs[j] = msgs[j], msgs[i]
        return Trace.positive(msgs)
    if kind == 4:
        i = rng.randrange(len(msgs))
        x = rng.choice(names)
        msgs[i] = _rename(msgs[i], {x: rng.choice(ATOMS + KEYS)})
        return Trace.positive(msgs)
    i = rng.randrange(len(msgs))
    msgs[i] = random_term(rng, 3)
    return Trace.positive(msgs)


def _rename(t, sigma):
    if type(t) in (FreeConst, NonceConst):
        return sigma.get(t, t)
    if type(t) is App:
        return App(t.sym, tuple(_rename(a, sigma) for a in t.args))
    return t


def random_executable(rng: random.Random, length: int, depth: int = 3) -> Trace:
    """A mixed trace whose sent messages are derivable from earlier inputs."""
    n_in = max(1, length - rng.randrange(0, max(1, length // 2) + 1))
    inputs = list(random_frame(rng, n_in, depth).payloads())
    n_out = length - n_in
    slots = sorted(rng.sample(range(1, length), n_out)) if n_out else []
    out, got = [], []
    it = iter(inputs)
    for i in range(length):
        if i in slots and got:
            out.append(LabeledMessage(SENT, _derivable(rng, got)))
        else:
            m = next(it, None)
            if m is None:
                out.append(LabeledMessage(SENT, _derivable(rng, got)))
            else:
                got.append(m)
                out.append(LabeledMessage(RECEIVED, m))
    return Trace(tuple(out))


def _derivable(rng, got):
    for _ in range(20):
        r = rng.random()
        if r < 0.4:
            cand = rng.choice([t for m in got for t in subterms(m)])
        elif r < 0.7:
            cand = App("pair", (rng.choice(got), rng.choice(got)))
        else:
            cand = App("enc", (rng.choice(got), rng.choice(got)))
        if synthesize(tuple(got), cand, D) is not None:
            return D.normalize(cand)
    return got[0]


def random_context(rng: random.Random, n: int, depth: int = 3):
    from narmon.terms import pos
    if depth <= 1 or rng.random() < 0.3:
        return pos(rng.randint(1, n))
    f = rng.choice(["pair", "pi1", "pi2", "enc", "dec", "senc", "sdec"])
    arity = 1 if f in ("pi1", "pi2") else 2
    return App(f, tuple(random_context(rng, n, depth - 1) for _ in range(arity)))

