"""Command-line driver: ``narmon compile|check-refines|detect|synthesize|simulate``.

Exit codes: 0 success, 1 usage or parse error, 2 a trace is not executable,
3 the attack is undetectable.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .compiler import compile_protocol, evaluate, is_implementation
from .deduction import (
    DEFAULT_BUDGET,
    DEFAULT_DEPTH,
    oracle_refines,
    refinement_witness,
    refines,
)
from .errors import LengthMismatch, NarmonError, NarrationSyntaxError, NotExecutable, Rejected
from .monitor import (
    MonitorVerdictRule,
    apply_verdict,
    attack_presentation,
    build_monitor,
    detectable,
    execution_log,
    monitor_implementation,
    synthesize_test,
)
from .narration import (
    AttackDefinition,
    MonitorSpec,
    NamedTrace,
    Protocol,
    ProtocolExecution,
    parse_narration,
)
from .theories import resolve_theory

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NOT_EXECUTABLE = 2
EXIT_UNDETECTABLE = 3


class UsageError(NarmonError):
    pass


@dataclass
class RunReport:
    command: list
    inputs: dict = field(default_factory=dict)
    result: dict = field(default_factory=dict)
    elapsed_ms: float = 0.0
    version: str = __version__

    def to_json(self, timing=True) -> dict:
        out = {
            "command": self.command,
            "inputs": self.inputs,
            "result": self.result,
            "version": self.version,
        }
        if timing:
            out["elapsed_ms"] = round(self.elapsed_ms, 3)
        return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _Context:
    """Per-invocation state: theory, input hashes, accumulated report."""

    def __init__(self, args):
        self.args = args
        self.system = resolve_theory(args.theory)
        self.report = RunReport(command=[args.command] + _echo(args))

    def load(self, path, kind):
        data = Path(path).read_bytes()
        self.report.inputs[str(path)] = hashlib.sha256(data).hexdigest()
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            try:
                doc = parse_narration(data.decode("utf-8"), self.system)
            except NarrationSyntaxError as exc:
                raise UsageError(f"{path}:{exc}") from None
        for w in caught:
            seen = self.report.result.setdefault("warnings", [])
            if str(w.message) not in seen:
                seen.append(str(w.message))
        if not isinstance(doc, kind):
            names = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
            raise UsageError(f"{path}: expected a {names} document, got {type(doc).__name__}")
        return doc


def _echo(args) -> list:
    out = []
    for k, v in sorted(vars(args).items()):
        if k in ("command", "func") or v is None or v is False:
            continue
        out.append(f"{k}={v}")
    return out


def _check_target(doc, protocol: Protocol, path):
    if doc.protocol and protocol.name and doc.protocol != protocol.name:
        raise UsageError(f"{path} is written for protocol {doc.protocol}, not {protocol.name}")


# -- commands ---------------------------------------------------------------------


def cmd_compile(ctx: _Context):
    a = ctx.args
    protocol = ctx.load(a.protocol, Protocol)
    impl = compile_protocol(protocol, ctx.system, prudent=a.prudent)
    frames = {s: impl.frames[s].to_json() for s in impl.strands}
    ctx.report.result.update({"protocol": protocol.name, "prudent": a.prudent, "frames": frames})
    if a.out:
        Path(a.out).write_text(json.dumps(impl.to_json(), indent=2, sort_keys=True) + "\n")
    lines = [f"protocol {protocol.name} ({'prudent' if a.prudent else 'plain'} frames)"]
    for s in impl.strands:
        lines.append(f"role {s}:")
        lines.append(impl.frames[s].pseudocode())
    return EXIT_OK, "\n".join(lines)


def cmd_check_refines(ctx: _Context):
    a = ctx.args
    t1 = ctx.load(a.first, NamedTrace).trace
    t2 = ctx.load(a.second, NamedTrace).trace
    if not (t1.is_positive() and t2.is_positive()):
        raise UsageError("refinement compares positive traces (every line '! term')")
    D = ctx.system
    r12, r21 = refines(t1, t2, D), refines(t2, t1, D)
    res = {
        "comparable": len(t1) == len(t2),
        "first_refines_second": r12,
        "second_refines_first": r21,
        "equivalent": r12 and r21,
    }
    lines = [f"{a.first} refines {a.second}: {r12}", f"{a.second} refines {a.first}: {r21}",
             f"equivalent: {r12 and r21}"]
    if not res["comparable"]:
        lines.append(f"lengths differ ({len(t1)} vs {len(t2)}): not comparable")
    for label, (pa, lp), (pb, l) in (
        ("first_refines_second", (a.first, t1), (a.second, t2)),
        ("second_refines_first", (a.second, t2), (a.first, t1)),
    ):
        w = refinement_witness(lp, l, D)
        if w is not None:
            res[label.replace("refines", "witness")] = [str(w[0]), str(w[1])]
            lines.append(f"witness: {w[0]} =? {w[1]} holds on {pb} but not on {pa}")
    if a.oracle:
        o12 = oracle_refines(t1, t2, D, depth=a.depth, budget=a.budget)
        o21 = oracle_refines(t2, t1, D, depth=a.depth, budget=a.budget)
        res["oracle"] = {"depth": a.depth, "agrees": (o12, o21) == (r12, r21)}
        lines.append(f"oracle (depth {a.depth}) agrees: {res['oracle']['agrees']}")
    ctx.report.result.update(res)
    return EXIT_OK, "\n".join(lines)


def _presentation(ctx):
    a = ctx.args
    protocol = ctx.load(a.protocol, Protocol)
    spec = ctx.load(a.monitor, MonitorSpec)
    attack = ctx.load(a.attack, AttackDefinition)
    _check_target(spec, protocol, a.monitor)
    _check_target(attack, protocol, a.attack)
    monitor = build_monitor(spec, protocol)
    impl = monitor_implementation(monitor, ctx.system)
    order = a.order.split(",") if a.order else None
    return attack_presentation(impl, attack, ctx.system, order)


def _log_lines(pres):
    return [f"attack log: {pres.attack_log}", f"normal log: {pres.normal_log}"]


def cmd_detect(ctx: _Context):
    a = ctx.args
    pres = _presentation(ctx)
    routes = ["basis", "staticeq"] if a.via == "both" else [a.via]
    verdicts = {r: detectable(pres, ctx.system, via=r) for r in routes}
    values = set(verdicts.values())
    res = {"presentation": pres.to_json(), "via": verdicts, "routes_agree": len(values) == 1}
    res["detectable"] = verdicts[routes[0]]
    ctx.report.result.update(res)
    lines = _log_lines(pres) + [f"detectable ({r}): {v}" for r, v in verdicts.items()]
    if len(values) != 1:
        lines.append("warning: routes disagree")
    return EXIT_OK, "\n".join(lines)


def cmd_synthesize(ctx: _Context):
    a = ctx.args
    pres = _presentation(ctx)
    rule = synthesize_test(pres, ctx.system)
    ctx.report.result["presentation"] = pres.to_json()
    if rule is None:
        ctx.report.result["rule"] = None
        return EXIT_UNDETECTABLE, "\n".join(_log_lines(pres) + ["undetectable: logs are equivalent"])
    ctx.report.result["rule"] = rule.to_json()
    if a.out:
        Path(a.out).write_text(json.dumps(rule.to_json(), indent=2, sort_keys=True) + "\n")
    return EXIT_OK, "\n".join(_log_lines(pres) + [f"rule: {rule}"])


def _load_rules(path, system, ctx):
    data = Path(path).read_bytes()
    ctx.report.inputs[str(path)] = hashlib.sha256(data).hexdigest()
    obj = json.loads(data)
    items = obj if isinstance(obj, list) else [obj]
    return [MonitorVerdictRule.from_json(x, system) for x in items]


def cmd_simulate(ctx: _Context):
    a = ctx.args
    D = ctx.system
    protocol = ctx.load(a.protocol, Protocol)
    doc = ctx.load(a.execution, (ProtocolExecution, AttackDefinition))
    _check_target(doc, protocol, a.execution)
    if isinstance(doc, AttackDefinition):
        execution = doc.normal_execution() if a.run == "normal" else doc.attack_execution()
    else:
        execution = doc
    impl = compile_protocol(protocol, D, prudent=True)
    participants = []
    lines = [f"execution {execution.name}"]
    for p in execution.participants:
        role = execution.role_map[p]
        if role not in impl.frames:
            if role == "I":
                continue
            raise UsageError(f"participant {p} plays unknown role {role}")
        frame = impl.frames[role]
        trace = execution.traces[p]
        transcript = []
        entry = {"participant": p, "role": role}
        try:
            evaluate(frame, trace.input(), D, transcript)
            ok = is_implementation(frame, trace, D)
            entry["status"] = "accept" if ok else "reject"
            if not ok:
                entry["reason"] = "outputs differ from the role's frame"
        except Rejected as exc:
            entry["status"] = "reject"
            entry["reason"] = str(exc)
        except LengthMismatch as exc:
            entry["status"] = "reject"
            entry["reason"] = str(exc)
        entry["tests"] = [t.to_json() for t in transcript]
        participants.append(entry)
        lines.append(f"{p} as {role}: {entry['status']}" + (f" ({entry['reason']})" if "reason" in entry else ""))
        for t in transcript:
            lines.append(f"    step {t.step}: {t.lhs} =? {t.rhs} {'ok' if t.passed else 'FAILED'}")
    res = {"execution": execution.name, "participants": participants}
    rules = []
    if a.rules:
        rules.extend(_load_rules(a.rules, D, ctx))
    if a.monitor:
        spec = ctx.load(a.monitor, MonitorSpec)
        _check_target(spec, protocol, a.monitor)
        mimpl = monitor_implementation(build_monitor(spec, protocol), D)
        if a.attack:
            attack = ctx.load(a.attack, AttackDefinition)
            rule = synthesize_test(attack_presentation(mimpl, attack, D), D)
            if rule is not None:
                rules.append(rule)
        order = a.order.split(",") if a.order else None
        log = execution_log(mimpl, execution, D, order)
        verdict = apply_verdict(rules, log, D)
        res.update({
            "log": log.to_json(),
            "rules": [r.to_json() for r in rules],
            "verdict": verdict.value,
        })
        lines.append(f"log: {log}")
        lines.extend(f"rule: {r}" for r in rules)
        lines.append(f"verdict: {verdict.value.upper()}")
    elif rules:
        raise UsageError("verdict rules need --monitor to build the execution log")
    ctx.report.result.update(res)
    return EXIT_OK, "\n".join(lines)


# -- argument parsing ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--theory", help="preset name or theory file (default: $NARMON_THEORY or classic)")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--no-timing", action="store_true", help="omit elapsed time from JSON reports")

    p = _Parser(prog="narmon", description="Compile protocol narrations and synthesize attack monitors.")
    p.add_argument("--version", action="version", version=f"narmon {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("compile", parents=[common], help="compile every role into an active frame")
    c.add_argument("protocol")
    c.add_argument("--prudent", action=argparse.BooleanOptionalAction, default=True)
    c.add_argument("--out", help="write the frames as JSON to this file")
    c.set_defaults(func=cmd_compile)

    r = sub.add_parser("check-refines", parents=[common], help="compare two positive traces")
    r.add_argument("first")
    r.add_argument("second")
    r.add_argument("--oracle", action="store_true", help="cross-check with context enumeration")
    r.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
    r.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    r.set_defaults(func=cmd_check_refines)

    for name, func, helptext in (
        ("detect", cmd_detect, "decide whether the monitor can tell attack from normal run"),
        ("synthesize", cmd_synthesize, "emit a verdict rule separating the two logs"),
    ):
        d = sub.add_parser(name, parents=[common], help=helptext)
        d.add_argument("attack")
        d.add_argument("monitor")
        d.add_argument("protocol")
        d.add_argument("--order", help="comma-separated participant order for the logs")
        if name == "detect":
            d.add_argument("--via", choices=("basis", "staticeq", "both"), default="both")
        else:
            d.add_argument("--out", help="write the rule JSON to this file")
        d.set_defaults(func=func)

    s = sub.add_parser("simulate", parents=[common], help="replay an execution through prudent frames")
    s.add_argument("protocol")
    s.add_argument("execution", help="execution or attack file")
    s.add_argument("--run", choices=("attack", "normal"), default="attack",
                   help="which run of an attack file to replay")
    s.add_argument("--monitor", help="monitor file; builds the execution log")
    s.add_argument("--rules", help="verdict rule JSON (one rule or a list)")
    s.add_argument("--attack", help="attack file to synthesize a rule from")
    s.add_argument("--order", help="comma-separated participant order for the log")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "budget", DEFAULT_BUDGET) < 1 or getattr(args, "depth", DEFAULT_DEPTH) < 1:
        parser.error("--depth and --budget must be positive")
    start = time.perf_counter()
    try:
        ctx = _Context(args)
        code, text = args.func(ctx)
    except NotExecutable as exc:
        print(f"error: not executable: {exc}", file=sys.stderr)
        return EXIT_NOT_EXECUTABLE
    except (NarmonError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    ctx.report.elapsed_ms = (time.perf_counter() - start) * 1000
    if args.format == "json":
        print(json.dumps(ctx.report.to_json(timing=not args.no_timing), indent=2, sort_keys=True))
    else:
        for w in ctx.report.result.get("warnings", ()):
            print(f"warning: {w}", file=sys.stderr)
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
