import random

import pytest

from narmon.compiler import compile_protocol, evaluate
from narmon.deduction import refines
from narmon.errors import Rejected
from narmon.monitor import (
    BLOCK_IF_SATISFIED,
    BLOCK_IF_VIOLATED,
    AttackPresentation,
    ExecutionLog,
    Monitor,
    MonitorVerdictRule,
    Verdict,
    apply_verdict,
    attack_presentation,
    build_monitor,
    detectable,
    execution_log,
    full_disclosure,
    monitor_implementation,
    synthesize_test,
    validate_monitor,
)
from narmon.narration import RECEIVED, LabeledMessage, MonitorSpec, Trace, load_narration

from helpers import CORPUS, D, T, C, random_frame, random_variant


def load(name):
    return load_narration(CORPUS / name, D)


@pytest.fixture(scope="module")
def iso():
    proto = load("iso9797.pnar")
    mon = build_monitor(load("iso9797.monitor"), proto)
    return proto, mon, monitor_implementation(mon, D)


@pytest.fixture(scope="module")
def lowe():
    proto = load("nspk.pnar")
    mon = build_monitor(load("nspk.monitor"), proto)
    return proto, mon, monitor_implementation(mon, D)


def test_iso_monitor_is_valid(iso):
    proto, mon, _ = iso
    ok, problems = validate_monitor(mon, proto, D)
    assert ok, problems
    assert mon.trace("B").input() == proto.trace("B").input()


def test_full_disclosure_is_valid(iso):
    proto, _, _ = iso
    assert validate_monitor(full_disclosure(proto), proto, D)[0]


def test_extra_input_is_invalid(iso):
    proto, mon, _ = iso
    traces = dict(mon.disclosure_traces)
    traces["A"] = traces["A"] + Trace((LabeledMessage(RECEIVED, T("x")),))
    ok, problems = validate_monitor(Monitor("bad", mon.strands, traces), proto, D)
    assert not ok
    assert any("inputs" in p for p in problems)


def test_unknown_role_in_monitor(iso):
    proto, _, _ = iso
    from narmon.narration import Share
    with pytest.raises(ValueError):
        build_monitor(MonitorSpec("m", "ISO9797", (Share("Z", 1, T("a")),)), proto)


def test_iso_normal_log(iso):
    _, _, impl = iso
    attack = load("iso9797.attack")
    log = execution_log(impl, attack.normal_execution(), D)
    assert log.payloads() == (T("h(A, D, ~kA, R)"), T("h(B, D, ~kB, R)"))
    assert log.provenance == ("a", "a")


def test_iso_rule(iso):
    _, _, impl = iso
    pres = attack_presentation(impl, load("iso9797.attack"), D)
    rule = synthesize_test(pres, D)
    assert (rule.lhs, rule.rhs, rule.polarity) == (C("v1"), C("v2"), BLOCK_IF_SATISFIED)
    assert apply_verdict(rule, pres.attack_log, D) is Verdict.BLOCK
    assert apply_verdict(rule, pres.normal_log, D) is Verdict.ALLOW


def test_lowe_presentation(lowe):
    _, _, impl = lowe
    pres = attack_presentation(impl, load("nspk-lowe.attack"), D)
    assert pres.attack_log.payloads() == (T("enc(~NB, KI)"), T("enc(~NB, KB)"))
    assert pres.normal_log.payloads() == (T("enc(~NB, KB)"), T("enc(~NB, KB)"))
    rule = synthesize_test(pres, D)
    assert rule.polarity == BLOCK_IF_VIOLATED
    assert {rule.lhs, rule.rhs} == {C("v1"), C("v2")}
    assert detectable(pres, D)


def test_silent_monitor_gives_empty_log(iso):
    proto, _, _ = iso
    silent = build_monitor(MonitorSpec("quiet", "ISO9797", ()), proto)
    impl = monitor_implementation(silent, D)
    pres = attack_presentation(impl, load("iso9797.attack"), D)
    assert len(pres.attack_log) == 0
    assert synthesize_test(pres, D) is None
    assert not detectable(pres, D)


def test_identical_runs_are_undetectable(iso):
    _, _, impl = iso
    ex = load("iso9797.attack").normal_execution()
    log = execution_log(impl, ex, D)
    pres = AttackPresentation(log, log)
    assert not detectable(pres, D)
    assert not detectable(pres, D, via="staticeq")
    assert synthesize_test(pres, D) is None


def test_length_mismatch_is_detectable():
    a = ExecutionLog(Trace.positive([T("a")]), ("x",), ("x",))
    n = ExecutionLog(Trace.positive([T("a"), T("b")]), ("x",), ("x", "x"))
    pres = AttackPresentation(a, n)
    assert detectable(pres, D)
    rule = synthesize_test(pres, D)
    assert apply_verdict(rule, a, D) is Verdict.BLOCK
    assert apply_verdict(rule, n, D) is Verdict.ALLOW


def test_no_rule_allows():
    assert apply_verdict(None, Trace.positive([T("a")]), D) is Verdict.ALLOW


def test_rule_json():
    r = MonitorVerdictRule(C("pi1(v1)"), C("v2"), BLOCK_IF_VIOLATED)
    assert MonitorVerdictRule.from_json(r.to_json(), D) == r
    with pytest.raises(ValueError):
        MonitorVerdictRule(C("v1"), C("v2"), "maybe")


def test_order_changes_blocks_not_verdicts(lowe):
    _, _, impl = lowe
    atk = load("nspk-lowe.attack")
    p1 = attack_presentation(impl, atk, D, order=["a", "b"])
    p2 = attack_presentation(impl, atk, D, order=["b", "a"])
    assert p1.attack_log.payloads() == tuple(reversed(p2.attack_log.payloads()))
    assert detectable(p1, D) == detectable(p2, D)
    for p in (p1, p2):
        rule = synthesize_test(p, D)
        assert apply_verdict(rule, p.attack_log, D) is Verdict.BLOCK
        assert apply_verdict(rule, p.normal_log, D) is Verdict.ALLOW


def test_order_must_cover_honest(lowe):
    _, _, impl = lowe
    with pytest.raises(ValueError):
        attack_presentation(impl, load("nspk-lowe.attack"), D, order=["a"])


def test_refinement_safety():
    # inputs accepted by the prudent frames refine the specified inputs
    for proto_name, ex_name in (("nspk.pnar", "nspk-honest.exec"), ("iso9797.pnar", None)):
        proto = load(proto_name)
        impl = compile_protocol(proto, D)
        if ex_name is None:
            ex = load("iso9797.attack").normal_execution()
        else:
            ex = load(ex_name)
        for p in ex.honest():
            role = ex.role_map[p]
            got = ex.traces[p].input()
            evaluate(impl.frames[role], got, D)
            assert refines(got, proto.trace(role).input(), D)


def test_prudent_frame_rejects_lowe_replay():
    proto = load("nspk.pnar")
    impl = compile_protocol(proto, D)
    atk = load("nspk-lowe.attack")
    # both honest views of the Lowe run pass the prudent frames, which is why
    # a monitor is needed; a tampered reply to A does not
    evaluate(impl.frames["B"], atk.attack_traces["b"].input(), D)
    evaluate(impl.frames["A"], atk.attack_traces["a"].input(), D)
    bad = list(atk.attack_traces["a"].input().payloads())
    bad[6] = T("enc(pair(~NX, ~NB), KA)")
    with pytest.raises(Rejected):
        evaluate(impl.frames["A"], bad, D)


def test_synthesis_soundness_random():
    rng = random.Random(23)
    for _ in range(120):
        a = random_frame(rng, rng.randint(1, 4), 3)
        n = random_variant(rng, a)
        pres = AttackPresentation(
            ExecutionLog(a, ("p",), ("p",) * len(a)), ExecutionLog(n, ("p",), ("p",) * len(n))
        )
        rule = synthesize_test(pres, D)
        assert (rule is not None) == detectable(pres, D)
        if rule is not None:
            assert apply_verdict(rule, a, D) is Verdict.BLOCK
            assert apply_verdict(rule, n, D) is Verdict.ALLOW
