"""Derivations: scripted front-door replay and bounded breadth-first search.

A Derivation is an ordered list of rewrite steps from a goal atom to a
hat-free expression, every rule step carrying the independence certificate
that licensed it.  ``replay_frontdoor`` reproduces the five-move script that
turns P(y|do(x)) into

    sum[z] ( P(z|x) * sum[x1] ( P(y|x1,z) * P(x1) ) )

on any graph where the mediator criterion holds; ``search_derivation``
explores expansions and rule applications breadth-first with a fixed move
ordering, so its result is deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import product as iterproduct
from typing import Iterable, Mapping

from .. import criteria
from ..cgraph import CausalGraph
from ..errors import CriterionNotSatisfied, RuleNotApplicable
from ..probtab import Cbn, conditional, intervene_oracle
from . import rules as _rules
from .expr import (
    IntervAtom,
    IntervExpr,
    Site,
    Sum,
    Product,
    atom,
    atom_at,
    atom_sites,
    canonicalize,
    free_syms,
    is_hat_free,
    iter_atoms,
    render,
    replace_at,
    subexpr,
)
from .rules import Certificate, apply_rule_with_certificate, expand_total_probability

EXPAND = "expand"
BACKDOOR_COLLAPSE = "backdoor-collapse"


@dataclass(frozen=True)
class DerivationStep:
    rule: int | str            # 1 | 2 | 3 | "expand" | "backdoor-collapse"
    site: Site
    before: IntervExpr
    after: IntervExpr
    certificates: tuple[Certificate, ...] = ()
    direction: str | None = None
    moved: tuple[str, ...] = ()
    over: tuple[str, ...] = ()
    label: str | None = None

    def to_obj(self) -> dict:
        obj = {
            "rule": self.rule,
            "site": list(self.site),
            "moved": list(self.moved),
            "over": list(self.over),
            "direction": self.direction,
            "label": self.label,
            "certificates": [c.to_obj() for c in self.certificates],
            "before": render(self.before),
            "after": render(self.after),
        }
        return obj


@dataclass(frozen=True)
class Derivation:
    goal: IntervAtom
    steps: tuple[DerivationStep, ...]
    result: IntervExpr

    def verify(self, g: CausalGraph) -> None:
        """Re-check chaining, every certificate, and hat-freeness."""
        current: IntervExpr = canonicalize(self.goal)
        for step in self.steps:
            if canonicalize(step.before) != current:
                raise AssertionError(
                    f"broken chain: expected {render(current)}, "
                    f"step starts at {render(step.before)}"
                )
            for cert in step.certificates:
                if not cert.check(g):
                    raise AssertionError(f"certificate no longer holds: {cert.statement()}")
            current = canonicalize(step.after)
        if canonicalize(self.result) != current:
            raise AssertionError("result does not match the final step")
        if not is_hat_free(self.result):
            raise AssertionError(f"result is not hat-free: {render(self.result)}")

    def to_obj(self) -> dict:
        return {
            "goal": render(self.goal),
            "goal_atom": {
                "outcome": sorted(s.node for s in self.goal.outcome),
                "do": sorted(s.node for s in self.goal.do),
                "cond": sorted(s.node for s in self.goal.cond),
            },
            "steps": [dict(step.to_obj(), index=i + 1) for i, step in enumerate(self.steps)],
            "result": render(self.result),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_obj(), **kwargs)


def _find_atom(expr: IntervExpr, outcome: frozenset[str], do: frozenset[str]) -> Site:
    for site in atom_sites(expr):
        a = atom_at(expr, site)
        if (frozenset(s.node for s in a.outcome) == outcome
                and frozenset(s.node for s in a.do) == do):
            return site
    raise AssertionError(f"no atom P({sorted(outcome)}|do {sorted(do)}) in {render(expr)}")


def backdoor_collapse(
    g: CausalGraph, expr: IntervExpr, site: Site, adjust: Iterable[str]
) -> tuple[IntervExpr, tuple[Certificate, ...]]:
    """Replace P(y|do(z)) at ``site`` by sum_a P(y|a,z) * P(a) for adjustment
    set ``a``: expand over ``adjust``, drop the hat on the marginal by rule 3,
    and exchange it for an observation on the conditional by rule 2."""
    target = atom_at(expr, site)
    adjust = frozenset(adjust)
    z_nodes = frozenset(s.node for s in target.do)
    expanded = expand_total_probability(expr, site, adjust)
    # expand puts Sum(bound, Product(conditional, marginal)) at the site
    dropped, cert3 = apply_rule_with_certificate(
        g, expanded, site + (0, 1), 3, "forward", z_nodes
    )
    collapsed, cert2 = apply_rule_with_certificate(
        g, dropped, site + (0, 0), 2, "backward", z_nodes
    )
    return collapsed, (cert3, cert2)


def replay_frontdoor(g: CausalGraph, x, y, z) -> Derivation:
    """Mechanically reproduce the three-step front-door proof on ``g``.

    Requires the mediator criterion to hold for (x, y, z).  The script is:
    expand the goal over z, convert P(z|do(x)) to P(z|x) by rule 2, push the
    observation z of P(y|z,do(x)) into an intervention by rule 2, drop do(x)
    by rule 3, and collapse the remaining P(y|do(z)) through the back-door
    adjustment on x.  Each move carries a verified certificate; if any check
    fails on a graph, RuleNotApplicable surfaces rather than being skipped.
    """
    x, y, z = frozenset(x), frozenset(y), frozenset(z)
    report = criteria.is_frontdoor_set(g, x, y, z)
    if not report.satisfied:
        failed = ("i" if not report.cond_i else "ii" if not report.cond_ii else "iii")
        raise CriterionNotSatisfied(
            f"front-door criterion fails at condition ({failed}); "
            f"witness: {report.witness}"
        )

    goal = atom(sorted(y), do=sorted(x))
    steps: list[DerivationStep] = []
    current: IntervExpr = canonicalize(goal)

    def record(after: IntervExpr, **kwargs) -> IntervExpr:
        after = canonicalize(after)
        steps.append(DerivationStep(before=current, after=after, **kwargs))
        return after

    # Total probability: P(y|do(x)) = sum_z P(y|z,do(x)) P(z|do(x))
    expanded = expand_total_probability(current, (), z)
    current = record(expanded, rule=EXPAND, site=(), over=tuple(sorted(z)),
                     label="setup")

    # Paper step 1: P(z|do(x)) = P(z|x)
    site = _find_atom(current, z, x)
    rewritten, cert = apply_rule_with_certificate(g, current, site, 2, "backward", x)
    current = record(rewritten, rule=2, site=site, direction="backward",
                     moved=tuple(sorted(x)), certificates=(cert,), label="Step 1")

    # Paper step 3 (first half): P(y|z,do(x)) = P(y|do(z),do(x))
    site = _find_atom(current, y, x)
    rewritten, cert = apply_rule_with_certificate(g, current, site, 2, "forward", z)
    current = record(rewritten, rule=2, site=site, direction="forward",
                     moved=tuple(sorted(z)), certificates=(cert,), label="Step 3")

    # Paper step 3 (second half): P(y|do(z),do(x)) = P(y|do(z))
    site = _find_atom(current, y, x | z)
    rewritten, cert = apply_rule_with_certificate(g, current, site, 3, "forward", x)
    current = record(rewritten, rule=3, site=site, direction="forward",
                     moved=tuple(sorted(x)), certificates=(cert,), label="Step 3")

    # Paper step 2: P(y|do(z)) = sum_x' P(y|x',z) P(x')
    site = _find_atom(current, y, z)
    collapsed, certs = backdoor_collapse(g, current, site, x)
    current = record(collapsed, rule=BACKDOOR_COLLAPSE, site=site,
                     moved=tuple(sorted(z)), over=tuple(sorted(x)),
                     certificates=certs, label="Step 2")

    return Derivation(goal=goal, steps=tuple(steps), result=current)


# --- bounded search ------------------------------------------------------------


def _search_moves(g: CausalGraph, expr: IntervExpr):
    """Candidate moves in canonical order: per atom site (pre-order),
    expansions over single nodes first, then rules 2, 3, 1, hat-reducing
    direction before its inverse, moved sets enumerated as single nodes
    lexicographically."""
    observed = g.observed_nodes
    for site in atom_sites(expr):
        a = atom_at(expr, site)
        nodes = a.nodes()
        do_nodes = sorted(s.node for s in a.do)
        cond_nodes = sorted(s.node for s in a.cond)
        absent = [n for n in observed if n not in nodes]
        for node in absent:
            yield (EXPAND, site, None, (node,))
        for node in do_nodes:
            yield (2, site, "backward", (node,))
        for node in cond_nodes:
            yield (2, site, "forward", (node,))
        for node in do_nodes:
            yield (3, site, "forward", (node,))
        for node in absent:
            yield (3, site, "backward", (node,))
        for node in cond_nodes:
            yield (1, site, "forward", (node,))
        for node in absent:
            yield (1, site, "backward", (node,))


def _apply_move(g: CausalGraph, expr: IntervExpr, move):
    kind, site, direction, moved = move
    if kind == EXPAND:
        after = expand_total_probability(expr, site, moved)
        return after, ()
    after, cert = apply_rule_with_certificate(g, expr, site, kind, direction, moved)
    return after, (cert,)


def search_derivation(g: CausalGraph, goal: IntervAtom, max_depth: int) -> Derivation | None:
    """Breadth-first search for a hat-free rewriting of ``goal``.

    Explores single-variable expansions and single-node rule applications in
    both directions, deduplicating states by canonical form.  Returns the
    first hat-free derivation (which is depth-minimal and deterministic given
    the move ordering), or None if none exists within ``max_depth`` moves.
    Absence is evidence only up to the depth bound, not a non-identifiability
    proof.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be at least 1")
    g.require_observed(
        {s.node for s in goal.all_syms()}
    )
    start = canonicalize(goal)
    if is_hat_free(start):
        return Derivation(goal=goal, steps=(), result=start)

    def key(e: IntervExpr) -> str:
        return render(e)

    # state -> (parent state, step) for path reconstruction
    seen: dict[str, tuple[str, DerivationStep] | None] = {key(start): None}
    exprs: dict[str, IntervExpr] = {key(start): start}
    frontier = [key(start)]

    for _ in range(max_depth):
        next_frontier: list[str] = []
        for state_key in frontier:
            state = exprs[state_key]
            for move in _search_moves(g, state):
                try:
                    after, certs = _apply_move(g, state, move)
                except RuleNotApplicable:
                    continue
                after = canonicalize(after)
                after_key = key(after)
                if after_key in seen:
                    continue
                kind, site, direction, moved = move
                step = DerivationStep(
                    rule=kind, site=site, before=state, after=after,
                    certificates=certs, direction=direction,
                    moved=moved if kind != EXPAND else (),
                    over=moved if kind == EXPAND else (),
                )
                seen[after_key] = (state_key, step)
                exprs[after_key] = after
                if is_hat_free(after):
                    return _reconstruct(goal, after, after_key, seen)
                next_frontier.append(after_key)
        frontier = next_frontier
        if not frontier:
            break
    return None


def _reconstruct(goal, result, result_key, seen) -> Derivation:
    steps: list[DerivationStep] = []
    cursor = result_key
    while seen[cursor] is not None:
        parent, step = seen[cursor]
        steps.append(step)
        cursor = parent
    steps.reverse()
    return Derivation(goal=goal, steps=tuple(steps), result=result)


# --- JSON round-trip -------------------------------------------------------------


def replay_steps(g: CausalGraph, obj: Mapping) -> IntervExpr:
    """Re-run a serialized derivation step-by-step, checking each rendering.

    Feeds the recorded sites and rules back through the rewrite engine; an
    output that disagrees with the recorded ``after`` text (or a certificate
    that no longer holds) raises AssertionError.  Returns the re-derived
    result expression.
    """
    goal_spec = obj["goal_atom"]
    current: IntervExpr = canonicalize(
        atom(goal_spec["outcome"], do=goal_spec["do"], cond=goal_spec["cond"])
    )
    if render(current) != obj["goal"]:
        raise AssertionError(f"goal mismatch: {render(current)} vs {obj['goal']}")
    for step in obj["steps"]:
        site = tuple(step["site"])
        rule = step["rule"]
        if rule == EXPAND:
            after = expand_total_probability(current, site, step["over"])
        elif rule == BACKDOOR_COLLAPSE:
            after, certs = backdoor_collapse(g, current, site, step["over"])
            _check_certs(g, certs, step)
        else:
            after, cert = apply_rule_with_certificate(
                g, current, site, rule, step["direction"], step["moved"]
            )
            _check_certs(g, (cert,), step)
        current = canonicalize(after)
        if render(current) != step["after"]:
            raise AssertionError(
                f"step {step.get('index')}: re-derived {render(current)}, "
                f"recorded {step['after']}"
            )
    if render(current) != obj["result"]:
        raise AssertionError("re-derived result differs from recorded result")
    return current


def _check_certs(g, certs, step) -> None:
    recorded = step.get("certificates", [])
    if len(recorded) != len(certs):
        raise AssertionError("certificate count mismatch")
    for cert in certs:
        if not cert.check(g):
            raise AssertionError(f"certificate fails: {cert.statement()}")


# --- semantic evaluation against the intervention oracle --------------------------


def eval_with_oracle(expr: IntervExpr, m: Cbn, at: Mapping[str, int]):
    """Evaluate an expression that may still contain interventions.

    Each atom P(out | do(d), c) is read as the oracle conditional
    P_d(out | c), with the interventional joint over out+c computed by
    truncated factorization.  This is the semantic reference used to check
    that rule rewrites preserve value; it never looks at the derivation that
    produced the expression.
    """
    env = {}
    for sym in free_syms(expr):
        if sym.node not in at:
            raise ValueError(f"no state given for free variable {sym.name}")
        env[sym] = at[sym.node]
    cache: dict = {}
    return _eval_oracle(expr, m, env, cache)


def _eval_oracle(expr: IntervExpr, m: Cbn, env, cache):
    if isinstance(expr, IntervAtom):
        do_assign = {s.node: env[s] for s in expr.do}
        names = tuple(sorted(s.node for s in expr.outcome + expr.cond))
        cache_key = (tuple(sorted(do_assign.items())), names)
        table = cache.get(cache_key)
        if table is None:
            table = intervene_oracle(m, do_assign, names)
            cache[cache_key] = table
        target = {s.node: env[s] for s in expr.outcome}
        given = {s.node: env[s] for s in expr.cond}
        return conditional(table, target, given)
    if isinstance(expr, Sum):
        total = 0
        cards = [m.cardinalities[s.node] for s in expr.bound]
        for states in iterproduct(*(range(c) for c in cards)):
            for sym, state in zip(expr.bound, states):
                env[sym] = state
            total += _eval_oracle(expr.body, m, env, cache)
        for sym in expr.bound:
            del env[sym]
        return total
    result = 1
    for factor in expr.factors:
        result *= _eval_oracle(factor, m, env, cache)
    return result
