"""The three do-calculus rules as predicates and expression rewrites.

Each rule licenses a rewrite of one atom when a d-separation statement holds
in a surgically modified graph:

  Rule 1 (insert/delete observation):   P(y|do(x),z,w) = P(y|do(x),w)
      when (Y independent Z | X,W) with edges into X removed.
  Rule 2 (exchange intervention/observation): P(y|do(x),do(z),w) = P(y|do(x),z,w)
      when (Y independent Z | X,W) with edges into X and out of Z removed.
  Rule 3 (insert/delete intervention):  P(y|do(x),do(z),w) = P(y|do(x),w)
      when (Y independent Z | X,W) with edges into X removed and edges into
      Z' removed, where Z' is Z minus the ancestors of W in the X-mutilated
      graph.

``apply_rule`` re-checks applicability itself and raises RuleNotApplicable
carrying the failed statement, so rewritten derivations are self-certifying.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .. import cgraph
from ..cgraph import CausalGraph
from ..errors import (
    LatentConditioning,
    OverlappingSets,
    RuleNotApplicable,
)
from .expr import (
    IntervAtom,
    IntervExpr,
    Site,
    Sum,
    Product,
    Sym,
    atom_at,
    children,
    fresh_syms,
    render,
    replace_at,
)


@dataclass(frozen=True)
class Certificate:
    """One checked independence statement and the surgery that hosts it.

    ``overline``/``underline`` name the node sets whose incoming/outgoing
    edges were removed; ``edges`` is the resulting mutilated edge list.  The
    statement (a independent of b given ``given``) can be re-verified at any
    time with ``check``.
    """

    overline: tuple[str, ...]
    underline: tuple[str, ...]
    a: tuple[str, ...]
    b: tuple[str, ...]
    given: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    holds: bool

    def mutilated(self, g: CausalGraph) -> CausalGraph:
        return cgraph.underline(cgraph.overline(g, self.overline), self.underline)

    def check(self, g: CausalGraph) -> bool:
        """Re-run the d-separation statement on the stated surgery of ``g``."""
        if not self.b:
            return True
        return cgraph.d_separated(self.mutilated(g), self.a, self.b, self.given)

    def statement(self) -> str:
        given = ",".join(self.given) if self.given else ""
        surgery = []
        if self.overline:
            surgery.append("into {" + ",".join(self.overline) + "} removed")
        if self.underline:
            surgery.append("out of {" + ",".join(self.underline) + "} removed")
        graph = "G[" + "; ".join(surgery) + "]" if surgery else "G"
        lhs = "{" + ",".join(self.a) + "} _||_ {" + ",".join(self.b) + "}"
        if given:
            lhs += " | {" + given + "}"
        return f"({lhs}) in {graph}"

    def to_obj(self) -> dict:
        return {
            "overline": list(self.overline),
            "underline": list(self.underline),
            "independence": {"a": list(self.a), "b": list(self.b), "given": list(self.given)},
            "edges": [list(e) for e in self.edges],
            "holds": self.holds,
        }


def _check_rule_sets(g: CausalGraph, y, x, z, w):
    y, x, z, w = frozenset(y), frozenset(x), frozenset(z), frozenset(w)
    g.require_nodes(y | x | z | w)
    sets = [("y", y), ("x", x), ("z", z), ("w", w)]
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            if sets[i][1] & sets[j][1]:
                raise OverlappingSets(
                    f"rule sets {sets[i][0]} and {sets[j][0]} overlap: "
                    f"{sorted(sets[i][1] & sets[j][1])}"
                )
    if not y:
        raise ValueError("rule outcome set y must be nonempty")
    g.require_observed(y | x | z | w, error=LatentConditioning)
    return y, x, z, w


def _certificate(g: CausalGraph, over, under, a, b, given) -> Certificate:
    mutilated = cgraph.underline(cgraph.overline(g, over), under)
    holds = True if not b else cgraph.d_separated(mutilated, a, b, given)
    return Certificate(
        overline=tuple(sorted(over)),
        underline=tuple(sorted(under)),
        a=tuple(sorted(a)),
        b=tuple(sorted(b)),
        given=tuple(sorted(given)),
        edges=tuple(mutilated.edge_list),
        holds=holds,
    )


def rule1_certificate(g, y, x, z, w) -> Certificate:
    y, x, z, w = _check_rule_sets(g, y, x, z, w)
    return _certificate(g, x, frozenset(), y, z, x | w)


def rule2_certificate(g, y, x, z, w) -> Certificate:
    y, x, z, w = _check_rule_sets(g, y, x, z, w)
    return _certificate(g, x, z, y, z, x | w)


def rule3_certificate(g, y, x, z, w) -> Certificate:
    y, x, z, w = _check_rule_sets(g, y, x, z, w)
    # Ancestors of w are taken in the graph with edges into x removed; only
    # the non-ancestor part of z has its incoming edges cut.
    anc_w = set(cgraph.ancestors(cgraph.overline(g, x), w)) if w else set()
    z_cut = z - anc_w
    return _certificate(g, x | z_cut, frozenset(), y, z, x | w)


def rule1_applicable(g: CausalGraph, y, x, z, w) -> bool:
    """May observation z be inserted into / deleted from P(y | do(x), z, w)?"""
    return rule1_certificate(g, y, x, z, w).holds


def rule2_applicable(g: CausalGraph, y, x, z, w) -> bool:
    """May do(z) and observation z be exchanged in P(y | do(x), do(z), w)?"""
    return rule2_certificate(g, y, x, z, w).holds


def rule3_applicable(g: CausalGraph, y, x, z, w) -> bool:
    """May intervention do(z) be inserted into / deleted from P(y | do(x), w)?"""
    return rule3_certificate(g, y, x, z, w).holds


_CERTIFIERS = {1: rule1_certificate, 2: rule2_certificate, 3: rule3_certificate}


def _split(syms: tuple[Sym, ...], nodes: frozenset[str]):
    hit = tuple(s for s in syms if s.node in nodes)
    rest = tuple(s for s in syms if s.node not in nodes)
    return hit, rest


def _enclosing_bound(expr: IntervExpr, site: Site) -> dict[str, Sym]:
    """Innermost bound symbol per node along the path to ``site``."""
    bound: dict[str, Sym] = {}
    node = expr
    for i in site:
        if isinstance(node, Sum):
            for sym in node.bound:
                bound[sym.node] = sym
        node = children(node)[i]
    return bound


def _syms_for_insertion(expr: IntervExpr, site: Site, nodes: Iterable[str]) -> tuple[Sym, ...]:
    # Reuse an enclosing binder's symbol when one ranges over the node (the
    # rewrite is valid per summand); otherwise introduce the free symbol.
    bound = _enclosing_bound(expr, site)
    out = []
    for node in sorted(nodes):
        out.append(bound.get(node, Sym(node.lower(), node)))
    return tuple(out)


def apply_rule_with_certificate(
    g: CausalGraph,
    expr: IntervExpr,
    site: Site,
    rule: int,
    direction: str,
    moved: Iterable[str],
) -> tuple[IntervExpr, Certificate]:
    """Rewrite the atom at ``site`` per the rule, returning the certificate.

    ``moved`` plays the rule's z-role.  Directions: ``forward`` deletes an
    observation (rule 1), turns an observation into an intervention (rule 2),
    or deletes an intervention (rule 3); ``backward`` is the inverse.
    """
    if rule not in _CERTIFIERS:
        raise ValueError(f"rule must be 1, 2, or 3, got {rule!r}")
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be forward or backward, got {direction!r}")
    target = atom_at(expr, site)
    moved = frozenset(moved)
    if not moved:
        return expr, _certificate(g, frozenset(), frozenset(), frozenset(), frozenset(), frozenset())

    out_nodes = frozenset(s.node for s in target.outcome)
    do_nodes = frozenset(s.node for s in target.do)
    cond_nodes = frozenset(s.node for s in target.cond)

    def need(bucket: frozenset[str], label: str):
        if not moved <= bucket:
            raise RuleNotApplicable(
                f"rule {rule} {direction} moves {sorted(moved)}, which is not "
                f"among the atom's {label}: {render(target)}"
            )

    def need_absent():
        if moved & (out_nodes | do_nodes | cond_nodes):
            raise RuleNotApplicable(
                f"rule {rule} {direction} would insert {sorted(moved)}, already "
                f"present in {render(target)}"
            )

    if rule == 1:
        if direction == "forward":
            need(cond_nodes, "observations")
            cert = rule1_certificate(g, out_nodes, do_nodes, moved, cond_nodes - moved)
            _, kept = _split(target.cond, moved)
            new = IntervAtom(target.outcome, target.do, kept)
        else:
            need_absent()
            cert = rule1_certificate(g, out_nodes, do_nodes, moved, cond_nodes)
            added = _syms_for_insertion(expr, site, moved)
            new = IntervAtom(target.outcome, target.do, target.cond + added)
    elif rule == 2:
        if direction == "forward":
            need(cond_nodes, "observations")
            cert = rule2_certificate(g, out_nodes, do_nodes, moved, cond_nodes - moved)
            moving, kept = _split(target.cond, moved)
            new = IntervAtom(target.outcome, target.do + moving, kept)
        else:
            need(do_nodes, "interventions")
            cert = rule2_certificate(g, out_nodes, do_nodes - moved, moved, cond_nodes)
            moving, kept = _split(target.do, moved)
            new = IntervAtom(target.outcome, kept, target.cond + moving)
    else:
        if direction == "forward":
            need(do_nodes, "interventions")
            cert = rule3_certificate(g, out_nodes, do_nodes - moved, moved, cond_nodes)
            _, kept = _split(target.do, moved)
            new = IntervAtom(target.outcome, kept, target.cond)
        else:
            need_absent()
            cert = rule3_certificate(g, out_nodes, do_nodes, moved, cond_nodes)
            added = _syms_for_insertion(expr, site, moved)
            new = IntervAtom(target.outcome, target.do + added, target.cond)

    if not cert.holds:
        raise RuleNotApplicable(
            f"rule {rule} not applicable: {cert.statement()} fails", certificate=cert
        )
    return replace_at(expr, site, new), cert


def apply_rule(
    g: CausalGraph,
    expr: IntervExpr,
    site: Site,
    rule: int,
    direction: str,
    moved: Iterable[str],
) -> IntervExpr:
    """Rewrite one atom by a do-calculus rule, validating applicability."""
    rewritten, _ = apply_rule_with_certificate(g, expr, site, rule, direction, moved)
    return rewritten


def expand_total_probability(expr: IntervExpr, site: Site, over: Iterable[str]) -> IntervExpr:
    """Split the atom at ``site`` by summing over the states of ``over``:

        P(y | ctx)  ->  sum_v P(y | v, ctx) * P(v | ctx)

    with fresh bound symbols for the ``over`` nodes.  Expanding over the
    empty set is the identity.
    """
    over = frozenset(over)
    if not over:
        return expr
    target = atom_at(expr, site)
    if over & target.nodes():
        raise OverlappingSets(
            f"expansion nodes {sorted(over)} already appear in {render(target)}"
        )
    bound = fresh_syms(expr, over)
    first = IntervAtom(target.outcome, target.do, target.cond + bound)
    second = IntervAtom(bound, target.do, target.cond)
    return replace_at(expr, site, Sum(bound, Product((first, second))))
