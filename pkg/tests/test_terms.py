import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from narmon.errors import ArityError, NarrationSyntaxError, PositionOutOfRange, UnknownSymbol
from narmon.syntax import parse_context, parse_term
from narmon.terms import App, FreeConst, NonceConst, apply_context, depth, pos, satisfies, size
from narmon.theories import classic, load_theory

from helpers import ATOMS, KEYS, D, T, C, random_term


def test_rules_of_classic():
    assert D.normalize(T("pi1(pair(a, b))")) == FreeConst("a")
    assert D.normalize(T("pi2(pair(a, b))")) == FreeConst("b")
    assert D.normalize(T("dec(enc(a, k), inv(k))")) == FreeConst("a")
    assert D.normalize(T("sdec(senc(a, k), k)")) == FreeConst("a")


def test_wrong_key_is_stuck():
    t = T("dec(enc(a, k), k)")
    assert D.normalize(t) == t
    t = T("sdec(senc(a, k), k2)")
    assert D.normalize(t) == t


def test_nested_redexes():
    t = T("pi1(dec(enc(pair(sdec(senc(a, k), k), b), kb), inv(kb)))")
    assert D.normalize(t) == FreeConst("a")


def test_inv_is_private():
    assert not D.is_public("inv")
    assert D.is_public("enc")


def test_nonce_and_constant_differ():
    assert T("~n") == NonceConst("n")
    assert T("n") == FreeConst("n")
    assert T("~n") != T("n")


def test_size_and_depth():
    t = T("enc(pair(a, b), k)")
    assert size(t) == 5
    assert depth(t) == 3
    assert depth(T("a")) == 1


@pytest.mark.parametrize(
    "text,exc",
    [
        ("enc(a)", ArityError),
        ("foo(a)", UnknownSymbol),
        ("pair(a, b", NarrationSyntaxError),
        ("pair(a,, b)", NarrationSyntaxError),
        ("", NarrationSyntaxError),
    ],
)
def test_parse_errors(text, exc):
    with pytest.raises(exc):
        parse_term(text, D)


def test_parse_error_has_location():
    with pytest.raises(NarrationSyntaxError) as info:
        parse_term("pair(a, )", D)
    assert info.value.column is not None


def test_contexts_reject_private_symbols():
    with pytest.raises(NarrationSyntaxError):
        parse_context("inv(v1)", D)


def test_apply_context():
    msgs = (T("enc(pair(a, b), k)"), T("inv(k)"))
    assert apply_context(C("pi2(dec(v1, v2))"), msgs, D) == FreeConst("b")
    with pytest.raises(PositionOutOfRange):
        apply_context(C("v3"), msgs, D)


def test_satisfies():
    msgs = (T("senc(a, k)"), T("k"), T("a"))
    assert satisfies(msgs, [(C("sdec(v1, v2)"), C("v3"))], D)
    assert not satisfies(msgs, [(C("v1"), C("v3"))], D)


def test_print_parse_round_trip():
    rng = random.Random(3)
    for _ in range(200):
        t = random_term(rng, 4)
        assert parse_term(str(t), D) == t


def test_load_theory_file():
    sys = load_theory(
        "theory xor_free\nfun f/1\nfun g/1\nfun k/0 private\nrule g(f(x)) -> x  # comment\n"
    )
    assert sys.name == "xor_free"
    assert sys.normalize(App("g", (App("f", (FreeConst("a"),)),))) == FreeConst("a")
    assert not sys.is_public("k")


@pytest.mark.parametrize(
    "text",
    [
        "fun f/1\nrule f(x) -> f(x)",  # not a subterm rule
        "fun f/1\nrule g(x) -> x",  # undeclared symbol
        "fun f/1\nfun f/2",
        "fun f/1\nrule f(x) -> y",
        "bogus line",
    ],
)
def test_bad_theories(text):
    with pytest.raises((NarrationSyntaxError, ValueError)):
        load_theory(text)


def test_classic_is_cached_and_fresh_instances_agree():
    assert classic().normalize(T("pi1(pair(a, b))")) == FreeConst("a")


terms = st.recursive(
    st.sampled_from(ATOMS + KEYS),
    lambda sub: st.one_of(
        st.builds(lambda a, b: App("pair", (a, b)), sub, sub),
        st.builds(lambda a: App("pi1", (a,)), sub),
        st.builds(lambda a: App("pi2", (a,)), sub),
        st.builds(lambda a, k: App("enc", (a, k)), sub, st.sampled_from(KEYS)),
        st.builds(lambda a, k: App("dec", (a, App("inv", (k,)))), sub, st.sampled_from(KEYS)),
        st.builds(lambda a, b: App("senc", (a, b)), sub, sub),
        st.builds(lambda a, b: App("sdec", (a, b)), sub, sub),
    ),
    max_leaves=12,
)


@settings(max_examples=300, deadline=None)
@given(terms)
def test_normal_forms_are_irreducible(t):
    nf = D.normalize(t)
    assert not D.is_reducible(nf)
    assert D.normalize(nf) == nf
    assert D.normalize_outermost(t) == nf


@given(terms, terms)
def test_contexts_commute_with_normalization(a, b):
    c = App("pair", (pos(1), App("pi1", (pos(2),))))
    raw = apply_context(c, (a, b), D)
    nf = apply_context(c, (D.normalize(a), D.normalize(b)), D)
    assert raw == nf
