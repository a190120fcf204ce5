"""Command-line front end.

Subcommands: dsep, paths, frontdoor, backdoor, rule, identify, estimate,
oracle, verify.  Every command accepts ``--output json|pretty`` (pretty is
the default), ``--rational`` for exact-fraction arithmetic, and ``--seed``
where randomness is involved.  Node-set flags take comma-separated names;
an empty string is the empty set.

Exit codes: 0 when the queried property holds (separated / satisfied /
applicable / derivation found / within tolerance), 1 when it fails or a
domain error such as a positivity violation occurs, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__, cgraph, criteria, probtab
from . import docalculus as dc
from .errors import (
    CausalError,
    ConditioningOnZero,
    CriterionNotSatisfied,
    NotNormalized,
    PositivityViolation,
    RuleNotApplicable,
)
from .probtab import FLOAT_TOL, NORMALIZATION_TOL, JointTable

USAGE_EXIT, FAIL_EXIT, OK_EXIT = 2, 1, 0

_DOMAIN_ERRORS = (
    PositivityViolation,
    ConditioningOnZero,
    RuleNotApplicable,
    CriterionNotSatisfied,
)


def _parse_set(text: str) -> list[str]:
    return [part for part in text.split(",") if part] if text else []


def _parse_assignment(text: str) -> dict[str, int]:
    out: dict[str, int] = {}
    for part in _parse_set(text):
        if "=" not in part:
            raise ValueError(f"expected NAME=STATE, got {part!r}")
        name, _, state = part.partition("=")
        out[name] = int(state)
    return out


def _parse_value(text: str) -> tuple[str, int]:
    assign = _parse_assignment(text)
    if len(assign) != 1:
        raise ValueError(f"expected exactly one NAME=STATE, got {text!r}")
    return next(iter(assign.items()))


def _load_graph(path: str) -> cgraph.CausalGraph:
    return cgraph.parse_graph(Path(path).read_text())


def _load_model(path: str, rational: bool) -> probtab.Cbn:
    return probtab.parse_model(Path(path).read_text(), rational=rational)


def _load_table_or_model(path: str, rational: bool) -> JointTable:
    """Model files yield their observational joint; table files load directly."""
    text = Path(path).read_text()
    probe = json.loads(text)
    if isinstance(probe, dict) and "probabilities" in probe:
        obj = json.loads(text, parse_float=Fraction) if rational else probe
        variables = [(name, card) for name, card in obj["variables"]]
        table = JointTable(variables, obj["probabilities"])
        if abs(table.total_mass() - 1) > NORMALIZATION_TOL:
            raise NotNormalized(
                f"table mass sums to {table.total_mass()}, expected 1"
            )
        return table
    return probtab.observational_joint(probtab.parse_model(text, rational=rational))


def _fmt(value, rational: bool) -> str:
    if rational and isinstance(value, (int, Fraction)):
        return str(Fraction(value))
    return f"{float(value):.12f}"


def _num_obj(value):
    return str(value) if isinstance(value, Fraction) else float(value)


def _emit(args, obj: dict, pretty_lines: list[str]) -> None:
    if args.output == "json":
        print(json.dumps(obj, indent=2))
    else:
        for line in pretty_lines:
            print(line)


# --- commands -----------------------------------------------------------------


def cmd_dsep(args) -> int:
    g = _load_graph(args.graph)
    if args.overline:
        g = cgraph.overline(g, _parse_set(args.overline))
    if args.underline:
        g = cgraph.underline(g, _parse_set(args.underline))
    a, b, c = _parse_set(args.a), _parse_set(args.b), _parse_set(args.given)
    separated = cgraph.d_separated(g, a, b, c)
    witness = None
    if not separated:
        witness = str(cgraph.open_paths(g, a, b, c)[0])
    _emit(args, {"separated": separated, "witness": witness},
          ["true" if separated else "false"]
          + ([f"witness: {witness}"] if witness else []))
    return OK_EXIT if separated else FAIL_EXIT


def cmd_paths(args) -> int:
    g = _load_graph(args.graph)
    paths = cgraph.all_simple_paths(g, args.a, args.b)
    _emit(args, {"paths": [str(p) for p in paths]},
          [str(p) for p in paths] or ["(no paths)"])
    return OK_EXIT


def cmd_frontdoor(args) -> int:
    g = _load_graph(args.graph)
    report = criteria.is_frontdoor_set(
        g, _parse_set(args.x), _parse_set(args.y), _parse_set(args.z)
    )
    obj = {
        "satisfied": report.satisfied,
        "cond_i": report.cond_i,
        "cond_ii": report.cond_ii,
        "cond_iii": report.cond_iii,
        "witness": str(report.witness) if report.witness else None,
    }
    lines = [
        f"condition (i)   directed paths intercepted:        {str(report.cond_i).lower()}",
        f"condition (ii)  back-door paths into mediators blocked: {str(report.cond_ii).lower()}",
        f"condition (iii) mediator back-door paths blocked:  {str(report.cond_iii).lower()}",
        f"satisfied: {str(report.satisfied).lower()}",
    ]
    if report.witness:
        lines.append(f"witness: {report.witness}")
    _emit(args, obj, lines)
    return OK_EXIT if report.satisfied else FAIL_EXIT


def cmd_backdoor(args) -> int:
    g = _load_graph(args.graph)
    report = criteria.is_backdoor_set(
        g, _parse_set(args.x), _parse_set(args.y), _parse_set(args.z)
    )
    obj = {
        "satisfied": report.satisfied,
        "descendant_violation": report.descendant_violation,
        "open_backdoor": str(report.open_backdoor) if report.open_backdoor else None,
    }
    lines = [f"satisfied: {str(report.satisfied).lower()}"]
    if report.descendant_violation:
        lines.append(f"descendant violation: {report.descendant_violation}")
    if report.open_backdoor:
        lines.append(f"open back-door path: {report.open_backdoor}")
    _emit(args, obj, lines)
    return OK_EXIT if report.satisfied else FAIL_EXIT


def cmd_rule(args) -> int:
    from .docalculus import rules as rules_mod

    g = _load_graph(args.graph)
    certifier = {
        1: rules_mod.rule1_certificate,
        2: rules_mod.rule2_certificate,
        3: rules_mod.rule3_certificate,
    }[args.rule]
    cert = certifier(
        g, _parse_set(args.y), _parse_set(args.x), _parse_set(args.z), _parse_set(args.w)
    )
    obj = {"rule": args.rule, "applicable": cert.holds, "certificate": cert.to_obj()}
    lines = [
        f"rule {args.rule} applicable: {str(cert.holds).lower()}",
        f"condition: {cert.statement()}",
    ]
    _emit(args, obj, lines)
    return OK_EXIT if cert.holds else FAIL_EXIT


_RULE_NAMES = {1: "rule 1", 2: "rule 2", 3: "rule 3",
               dc.EXPAND: "expand", dc.BACKDOOR_COLLAPSE: "back-door collapse"}


def _derivation_lines(derivation: dc.Derivation) -> list[str]:
    lines = [f"goal: {dc.render(derivation.goal)}"]
    total = len(derivation.steps)
    for i, step in enumerate(derivation.steps, 1):
        name = _RULE_NAMES[step.rule]
        detail = ""
        if step.moved:
            detail += f", moved {{{','.join(step.moved)}}}"
        if step.over:
            detail += f", over {{{','.join(step.over)}}}"
        if step.direction:
            detail += f", {step.direction}"
        paper = f"  (paper {step.label})" if step.label and step.label != "setup" else ""
        lines.append(f"step {i}/{total} [{name}{detail}]{paper}")
        for cert in step.certificates:
            lines.append(f"    because {cert.statement()}")
            edges = ", ".join(f"{p}->{c}" for p, c in cert.edges) or "(none)"
            lines.append(f"    mutilated edges: {edges}")
        lines.append(f"    -> {dc.render(step.after)}")
    lines.append(f"result: {dc.render(derivation.result)}")
    return lines


def cmd_identify(args) -> int:
    g = _load_graph(args.graph)
    x, y = _parse_set(args.x), _parse_set(args.y)
    if args.search:
        goal = dc.atom(y, do=x)
        derivation = dc.search_derivation(g, goal, args.depth)
        if derivation is None:
            print(f"no derivation found at depth {args.depth}", file=sys.stderr)
            return FAIL_EXIT
    else:
        if args.z is None:
            print("identify: provide --z for the scripted replay or use --search",
                  file=sys.stderr)
            return USAGE_EXIT
        derivation = dc.replay_frontdoor(g, x, y, _parse_set(args.z))
    derivation.verify(g)
    _emit(args, derivation.to_obj(), _derivation_lines(derivation))
    return OK_EXIT


def cmd_estimate(args) -> int:
    table = _load_table_or_model(args.model, args.rational)
    if args.frontdoor == args.backdoor:
        print("estimate: choose exactly one of --frontdoor / --backdoor",
              file=sys.stderr)
        return USAGE_EXIT
    if args.frontdoor:
        x_name, x_val = _parse_value(args.x)
        y_name, y_val = _parse_value(args.y)
        value = probtab.frontdoor_estimate(table, x_name, args.z, y_name, x_val, y_val)
        method = "frontdoor"
    else:
        x_name, x_val = _parse_value(args.x)
        y_name, y_val = _parse_value(args.y)
        value = probtab.backdoor_estimate(
            table, x_name, y_name, _parse_set(args.adjust), x_val, y_val
        )
        method = "backdoor"
    _emit(args, {"method": method, "value": _num_obj(value)},
          [_fmt(value, args.rational)])
    return OK_EXIT


def cmd_oracle(args) -> int:
    m = _load_model(args.model, args.rational)
    do = _parse_assignment(args.do) if args.do else {}
    outcome_filter: dict[str, int] = {}
    outcome_names: list[str] = []
    for part in _parse_set(args.outcome):
        if "=" in part:
            name, _, state = part.partition("=")
            outcome_filter[name] = int(state)
            outcome_names.append(name)
        else:
            outcome_names.append(part)
    table = probtab.intervene_oracle(m, do, outcome_names)
    do_text = ",".join(f"{n}={s}" for n, s in sorted(do.items()))
    values: dict[str, object] = {}
    lines: list[str] = []
    for assign, p in table.assignments():
        if any(assign[n] != s for n, s in outcome_filter.items()):
            continue
        key = ",".join(f"{n}={s}" for n, s in sorted(assign.items()))
        values[key] = _num_obj(p)
        inner = f"{key}|do({do_text})" if do_text else key
        lines.append(f"P({inner}) = {_fmt(p, args.rational)}")
    _emit(args, {"do": {n: s for n, s in sorted(do.items())}, "values": values}, lines)
    return OK_EXIT


def cmd_verify(args) -> int:
    m = _load_model(args.model, args.rational)
    x, y, z = args.x, args.y, args.z
    report = criteria.is_frontdoor_set(m.graph, [x], [y], [z])
    if not report.satisfied:
        print(f"front-door criterion fails; witness: {report.witness}", file=sys.stderr)
        return FAIL_EXIT
    tolerance = 0 if args.rational else FLOAT_TOL

    def check_model(model: probtab.Cbn):
        table = probtab.observational_joint(model)
        probtab.check_positivity(table, x, z)
        rows = []
        worst = 0
        for x_val in range(model.cardinalities[x]):
            oracle = probtab.intervene_oracle(model, {x: x_val}, [y])
            for y_val in range(model.cardinalities[y]):
                estimate = probtab.frontdoor_estimate(table, x, z, y, x_val, y_val)
                truth = oracle.mass({y: y_val})
                dev = abs(estimate - truth)
                worst = max(worst, dev)
                rows.append({
                    "x": x_val, "y": y_val,
                    "estimate": _num_obj(estimate),
                    "oracle": _num_obj(truth),
                    "deviation": _num_obj(dev),
                })
        return rows, worst

    rows, worst = check_model(m)
    lines = [f"model: max deviation {_fmt(worst, args.rational)} ({len(rows)} checks)"]
    trial_objs = []
    agreed = 0
    overall = worst
    for i in range(args.trials):
        trial = probtab.random_cbn(
            m.graph, m.cardinalities, seed=args.seed + i, rational=args.rational
        )
        _, trial_worst = check_model(trial)
        ok = trial_worst <= tolerance
        agreed += ok
        overall = max(overall, trial_worst)
        trial_objs.append({
            "seed": args.seed + i,
            "max_deviation": _num_obj(trial_worst),
            "agree": ok,
        })
    if args.trials:
        lines.append(f"trials: {agreed}/{args.trials} agree")
    lines.append(f"max deviation: {_fmt(overall, args.rational)}"
                 + (" (rational mode)" if args.rational else ""))
    obj = {
        "tolerance": _num_obj(Fraction(0)) if args.rational else tolerance,
        "checks": rows,
        "trials": trial_objs,
        "max_deviation": _num_obj(overall),
    }
    _emit(args, obj, lines)
    return OK_EXIT if overall <= tolerance else FAIL_EXIT


# --- wiring -------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", choices=["json", "pretty"], default="pretty")
    common.add_argument("--rational", action="store_true",
                        help="exact fraction arithmetic (reference mode)")
    common.add_argument("--seed", type=int, default=0)

    parser = argparse.ArgumentParser(
        prog="frontdoor",
        description="Causal identification toolkit: criteria, do-calculus "
                    "derivations, and exact adjustment estimates.",
    )
    parser.add_argument("--version", action="version",
                        version=f"frontdoor {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dsep", parents=[common], help="test d-separation")
    p.add_argument("graph")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--given", default="")
    p.add_argument("--overline", default="", help="remove edges into these nodes first")
    p.add_argument("--underline", default="", help="remove edges out of these nodes first")
    p.set_defaults(func=cmd_dsep)

    p = sub.add_parser("paths", parents=[common], help="list all simple paths")
    p.add_argument("graph")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(func=cmd_paths)

    p = sub.add_parser("frontdoor", parents=[common],
                       help="check the front-door criterion")
    p.add_argument("graph")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--z", default="")
    p.set_defaults(func=cmd_frontdoor)

    p = sub.add_parser("backdoor", parents=[common],
                       help="check the back-door criterion")
    p.add_argument("graph")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--z", default="")
    p.set_defaults(func=cmd_backdoor)

    p = sub.add_parser("rule", parents=[common],
                       help="check a do-calculus rule's applicability")
    p.add_argument("graph")
    p.add_argument("--rule", type=int, choices=[1, 2, 3], required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--x", default="")
    p.add_argument("--z", required=True)
    p.add_argument("--w", default="")
    p.set_defaults(func=cmd_rule)

    p = sub.add_parser("identify", parents=[common],
                       help="derive a hat-free formula for P(y|do(x))")
    p.add_argument("graph")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--z", default=None, help="mediator set for the scripted replay")
    p.add_argument("--search", action="store_true",
                   help="breadth-first derivation search instead of the replay")
    p.add_argument("--depth", type=int, default=6)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("estimate", parents=[common],
                       help="adjustment estimate from a model or table file")
    p.add_argument("model")
    p.add_argument("--frontdoor", action="store_true")
    p.add_argument("--backdoor", action="store_true")
    p.add_argument("--x", required=True, help="treatment NAME=STATE")
    p.add_argument("--y", required=True, help="outcome NAME=STATE")
    p.add_argument("--z", default="", help="mediator node (front-door)")
    p.add_argument("--adjust", default="", help="adjustment set (back-door)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("oracle", parents=[common],
                       help="ground-truth interventional probabilities")
    p.add_argument("model")
    p.add_argument("--do", default="", help="comma-separated NAME=STATE")
    p.add_argument("--outcome", required=True,
                   help="outcome nodes, optionally NAME=STATE to filter")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("verify", parents=[common],
                       help="compare the front-door estimate to the oracle")
    p.add_argument("model")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--z", required=True)
    p.add_argument("--trials", type=int, default=0,
                   help="additional random reparameterizations to check")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_EXIT if exc.code not in (0, None) else OK_EXIT
    try:
        return args.func(args)
    except _DOMAIN_ERRORS as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return FAIL_EXIT
    except (CausalError, ValueError, OSError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return USAGE_EXIT


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
