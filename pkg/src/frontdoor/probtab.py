"""Exact discrete probability machinery for causal Bayesian networks.

A Cbn pairs a CausalGraph with one conditional probability table per node.
From it we build dense joint tables over the observed nodes (latents summed
out), run the truncated-factorization intervention oracle, and evaluate the
front-door and back-door adjustment estimands.

Two arithmetic modes coexist.  The reference mode stores probabilities as
``fractions.Fraction``, which makes every identity in this module an exact
equality; the float mode trades that for speed with a documented 1e-9
comparison tolerance.  The mode is a property of the numbers in the tables,
not a global switch: parse with ``rational=True`` (decimal literals become
exact fractions) or build a Cbn from Fraction entries.

Everything here is dense and capped at MAX_VARIABLES nodes: the goal is
desk-scale exactness, not scale.
"""

from __future__ import annotations

import json
from fractions import Fraction
from itertools import product
from random import Random
from typing import Iterable, Mapping, Sequence

from .cgraph import CausalGraph, graph_from_obj
from .errors import (
    ConditioningOnZero,
    LatentConditioning,
    LatentIntervention,
    NotNormalized,
    OverlappingSets,
    ParseError,
    PositivityViolation,
    ShapeMismatch,
    TooManyVariables,
    UnknownNode,
)

MAX_VARIABLES = 16
NORMALIZATION_TOL = 1e-12
FLOAT_TOL = 1e-9

Assignment = Mapping[str, int]


class JointTable:
    """Dense joint distribution over an ordered list of discrete variables.

    Probabilities are stored row-major in variable order, the last variable
    varying fastest.  Entries may be Fractions or floats.
    """

    __slots__ = ("variables", "probs", "_index", "_strides")

    def __init__(self, variables: Sequence[tuple[str, int]], probs: Sequence):
        self.variables = tuple((str(n), int(c)) for n, c in variables)
        if len(self.variables) > MAX_VARIABLES:
            raise TooManyVariables(
                f"{len(self.variables)} variables exceeds the cap of {MAX_VARIABLES}"
            )
        size = 1
        for _, card in self.variables:
            if card < 1:
                raise ShapeMismatch("cardinalities must be positive")
            size *= card
        self.probs = list(probs)
        if len(self.probs) != size:
            raise ShapeMismatch(
                f"expected {size} probabilities for {self.variables}, got {len(self.probs)}"
            )
        self._index = {name: i for i, (name, _) in enumerate(self.variables)}
        strides = [1] * len(self.variables)
        for i in range(len(self.variables) - 2, -1, -1):
            strides[i] = strides[i + 1] * self.variables[i + 1][1]
        self._strides = strides

    def cardinality(self, name: str) -> int:
        if name not in self._index:
            raise UnknownNode(f"variable {name!r} not in table")
        return self.variables[self._index[name]][1]

    def _check_assignment(self, assign: Assignment) -> None:
        for name, state in assign.items():
            card = self.cardinality(name)
            if not 0 <= state < card:
                raise ValueError(f"state {state} out of range for {name!r} (card {card})")

    def mass(self, event: Assignment):
        """Total probability of the partial assignment ``event``."""
        self._check_assignment(event)
        base = sum(self._strides[self._index[n]] * s for n, s in event.items())
        free = [(self._strides[i], card)
                for i, (name, card) in enumerate(self.variables)
                if name not in event]
        total = 0
        for combo in product(*(range(card) for _, card in free)):
            offset = base
            for (stride, _), state in zip(free, combo):
                offset += stride * state
            total += self.probs[offset]
        return total

    def marginal(self, names: Iterable[str]) -> "JointTable":
        """Marginal table over ``names``, variables in lexicographic order."""
        names = sorted(set(names))
        for name in names:
            self.cardinality(name)
        variables = [(n, self.cardinality(n)) for n in names]
        sub = JointTable(variables, [0] * _table_size(variables))
        keep = [self._index[n] for n in names]
        for flat, p in enumerate(self.probs):
            states = self._decode(flat)
            offset = sum(sub._strides[j] * states[i] for j, i in enumerate(keep))
            sub.probs[offset] += p
        return sub

    def _decode(self, flat: int) -> tuple[int, ...]:
        out = []
        for _, card in reversed(self.variables):
            out.append(flat % card)
            flat //= card
        return tuple(reversed(out))

    def assignments(self):
        """Iterate (assignment dict, probability) over all cells."""
        names = [n for n, _ in self.variables]
        for flat, p in enumerate(self.probs):
            yield dict(zip(names, self._decode(flat))), p

    def total_mass(self):
        return sum(self.probs)


def _table_size(variables) -> int:
    size = 1
    for _, card in variables:
        size *= card
    return size


def conditional(t: JointTable, target: Assignment, given: Assignment):
    """Exact P(target | given) as a ratio of table masses."""
    if set(target) & set(given):
        raise OverlappingSets(
            f"target and given overlap: {sorted(set(target) & set(given))}"
        )
    denom = t.mass(given) if given else t.total_mass()
    if denom == 0:
        raise ConditioningOnZero(f"conditioning event has zero mass: {_event_str(given)}")
    joint = dict(given)
    joint.update(target)
    return t.mass(joint) / denom


def _event_str(event: Assignment) -> str:
    if not event:
        return "(empty)"
    return ", ".join(f"{n}={s}" for n, s in sorted(event.items()))


# --- causal Bayesian networks -----------------------------------------------


class Cbn:
    """A CausalGraph plus one CPT per node.

    ``cpts[node]`` is a list of rows, one per assignment of the node's
    parents taken in lexicographic parent order (row-major, last parent
    fastest); each row is the distribution over the node's states and must
    sum to one within 1e-12.  Entries exactly normalized on construction so
    downstream identities stay exact in rational mode.
    """

    __slots__ = ("graph", "cardinalities", "cpts")

    def __init__(self, graph: CausalGraph, cardinalities: Mapping[str, int], cpts):
        missing = set(graph.node_names) - set(cardinalities)
        if missing:
            raise ShapeMismatch(f"cardinalities missing for nodes: {sorted(missing)}")
        extra = set(cardinalities) - set(graph.node_names)
        if extra:
            raise ShapeMismatch(f"cardinalities for unknown nodes: {sorted(extra)}")
        for node, card in cardinalities.items():
            if int(card) < 2:
                raise ShapeMismatch(f"node {node!r} needs >= 2 states, got {card}")
        self.graph = graph
        self.cardinalities = {n: int(cardinalities[n]) for n in graph.node_names}

        checked: dict[str, list[list]] = {}
        for node in graph.node_names:
            if node not in cpts:
                raise ShapeMismatch(f"missing CPT for node {node!r}")
            parents = graph.parents_of(node)
            rows = cpts[node]
            want_rows = _table_size([(p, self.cardinalities[p]) for p in parents])
            if len(rows) != want_rows:
                raise ShapeMismatch(
                    f"CPT for {node!r} has {len(rows)} columns, expected {want_rows} "
                    f"(parents {list(parents)})"
                )
            card = self.cardinalities[node]
            fixed = []
            for col, row in enumerate(rows):
                if len(row) != card:
                    raise ShapeMismatch(
                        f"CPT column {col} for {node!r} has {len(row)} entries, expected {card}"
                    )
                for v in row:
                    if v < 0 or v > 1:
                        raise NotNormalized(
                            f"CPT for {node!r}, column {col}: entry {v} outside [0, 1]"
                        )
                total = sum(row)
                if abs(total - 1) > NORMALIZATION_TOL:
                    raise NotNormalized(
                        f"CPT for {node!r}, column {col}: sums to {total}, expected 1"
                    )
                if total != 1:
                    row = [v / total for v in row]
                fixed.append(list(row))
            checked[node] = fixed
        self.cpts = checked

    def parent_order(self, node: str) -> tuple[str, ...]:
        return self.graph.parents_of(node)

    def cpt_row(self, node: str, full_assignment: Assignment) -> Sequence:
        parents = self.parent_order(node)
        idx = 0
        for parent in parents:
            idx = idx * self.cardinalities[parent] + full_assignment[parent]
        return self.cpts[node][idx]

    def local_prob(self, node: str, full_assignment: Assignment):
        return self.cpt_row(node, full_assignment)[full_assignment[node]]


_MODEL_KEYS = {"graph", "cardinalities", "cpts"}
_CPT_KEYS = {"parents", "table"}


def model_from_obj(obj) -> Cbn:
    if not isinstance(obj, dict):
        raise ParseError("model document must be a JSON object")
    unknown = set(obj) - _MODEL_KEYS
    if unknown:
        raise ParseError(f"unknown model keys: {sorted(unknown)}")
    for key in _MODEL_KEYS:
        if key not in obj:
            raise ParseError(f'model missing "{key}"')
    graph = graph_from_obj(obj["graph"])
    cards = obj["cardinalities"]
    if not isinstance(cards, dict):
        raise ParseError('"cardinalities" must be an object')
    raw_cpts = obj["cpts"]
    if not isinstance(raw_cpts, dict):
        raise ParseError('"cpts" must be an object')
    cpts = {}
    for node, spec in raw_cpts.items():
        if not graph.has_node(node):
            raise UnknownNode(f"CPT given for unknown node {node!r}")
        if not isinstance(spec, dict) or set(spec) - _CPT_KEYS or "table" not in spec:
            raise ParseError(f"CPT for {node!r} must be {{parents, table}}")
        declared = spec.get("parents", list(graph.parents_of(node)))
        if tuple(declared) != graph.parents_of(node):
            raise ShapeMismatch(
                f"CPT for {node!r} declares parents {declared}, graph has "
                f"{list(graph.parents_of(node))} (lexicographic order required)"
            )
        cpts[node] = spec["table"]
    return Cbn(graph, cards, cpts)


def parse_model(text: str, rational: bool = False) -> Cbn:
    """Parse the JSON model format.

    With ``rational=True``, decimal literals are read as exact fractions
    (0.3 becomes 3/10), making all downstream arithmetic exact.
    """
    try:
        if rational:
            obj = json.loads(text, parse_float=Fraction)
        else:
            obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return model_from_obj(obj)


def model_to_obj(m: Cbn, as_float: bool = True) -> dict:
    from .cgraph import graph_to_obj

    def num(v):
        return float(v) if as_float else str(v)

    return {
        "graph": graph_to_obj(m.graph),
        "cardinalities": dict(m.cardinalities),
        "cpts": {
            node: {
                "parents": list(m.graph.parents_of(node)),
                "table": [[num(v) for v in row] for row in m.cpts[node]],
            }
            for node in m.graph.node_names
        },
    }


# --- joints and the intervention oracle ---------------------------------------


def _full_iteration(m: Cbn):
    names = list(m.graph.node_names)
    cards = [m.cardinalities[n] for n in names]
    if len(names) > MAX_VARIABLES:
        raise TooManyVariables(
            f"{len(names)} nodes exceeds the dense-table cap of {MAX_VARIABLES}"
        )
    for states in product(*(range(c) for c in cards)):
        yield dict(zip(names, states))


def observational_joint(m: Cbn) -> JointTable:
    """Exact joint over the observed nodes; latent states are summed out."""
    observed = m.graph.observed_nodes
    variables = [(n, m.cardinalities[n]) for n in observed]
    table = JointTable(variables, [0] * _table_size(variables))
    for assignment in _full_iteration(m):
        weight = 1
        for node in m.graph.node_names:
            weight *= m.local_prob(node, assignment)
            if weight == 0:
                break
        if weight == 0:
            continue
        offset = sum(
            table._strides[table._index[n]] * assignment[n] for n in observed
        )
        table.probs[offset] += weight
    return table


def intervene_oracle(m: Cbn, do: Assignment, outcome: Iterable[str]) -> JointTable:
    """Ground-truth interventional marginal by truncated factorization.

    The CPTs of intervened nodes are dropped and their states clamped; all
    remaining nodes (latents included) are summed out down to ``outcome``.
    """
    outcome = sorted(set(outcome))
    m.graph.require_nodes(set(do) | set(outcome))
    for node in do:
        if m.graph.is_latent(node):
            raise LatentIntervention(f"cannot intervene on latent node {node!r}")
    for node in outcome:
        if m.graph.is_latent(node):
            raise LatentConditioning(f"outcome node {node!r} is latent")
    overlap = set(do) & set(outcome)
    if overlap:
        raise OverlappingSets(f"outcome overlaps intervention: {sorted(overlap)}")
    for node, state in do.items():
        if not 0 <= state < m.cardinalities[node]:
            raise ValueError(f"state {state} out of range for {node!r}")

    variables = [(n, m.cardinalities[n]) for n in outcome]
    table = JointTable(variables, [0] * _table_size(variables))
    for assignment in _full_iteration(m):
        if any(assignment[n] != s for n, s in do.items()):
            continue
        weight = 1
        for node in m.graph.node_names:
            if node in do:
                continue
            weight *= m.local_prob(node, assignment)
            if weight == 0:
                break
        if weight == 0:
            continue
        offset = sum(
            table._strides[table._index[n]] * assignment[n] for n in outcome
        )
        table.probs[offset] += weight
    return table


# --- adjustment estimators ---------------------------------------------------


def check_positivity(t: JointTable, x: str, z: str) -> None:
    """Require P(x', z') > 0 for every cell of the (x, z) margin."""
    for x_state in range(t.cardinality(x)):
        for z_state in range(t.cardinality(z)):
            if t.mass({x: x_state, z: z_state}) == 0:
                raise PositivityViolation(
                    f"P({x}={x_state}, {z}={z_state}) = 0; the front-door "
                    "formula requires every such cell to be positive"
                )


def frontdoor_estimate(t: JointTable, x: str, z: str, y: str,
                       x_val: int, y_val: int):
    """Front-door adjustment from observational data:

        sum_z P(z | x_val) * sum_x' P(y_val | x', z) * P(x')

    Requires positivity over the whole (x, z) margin, since the inner sum
    conditions on every (x', z) pair.
    """
    if len({x, z, y}) != 3:
        raise OverlappingSets("x, z, y must be three distinct variables")
    check_positivity(t, x, z)
    total = 0
    for z_state in range(t.cardinality(z)):
        p_z_given_x = conditional(t, {z: z_state}, {x: x_val})
        inner = 0
        for x_state in range(t.cardinality(x)):
            p_y = conditional(t, {y: y_val}, {x: x_state, z: z_state})
            inner += p_y * t.mass({x: x_state})
        total += p_z_given_x * inner
    return total


def backdoor_estimate(t: JointTable, treat: str, outcome: str, adjust,
                      treat_val: int, outcome_val: int):
    """Back-door adjustment: sum_a P(outcome | treat, a) * P(a)."""
    adjust = sorted(set(adjust))
    if treat == outcome or treat in adjust or outcome in adjust:
        raise OverlappingSets("treat, outcome, and adjust must be disjoint")
    for name in adjust:
        t.cardinality(name)
    total = 0
    for states in product(*(range(t.cardinality(a)) for a in adjust)):
        a_event = dict(zip(adjust, states))
        p_a = t.mass(a_event) if adjust else 1
        if p_a == 0:
            continue
        treat_event = dict(a_event)
        treat_event[treat] = treat_val
        if t.mass(treat_event) == 0:
            raise PositivityViolation(
                f"P({treat}={treat_val}, {_event_str(a_event)}) = 0 while "
                f"P({_event_str(a_event)}) > 0"
            )
        total += conditional(t, {outcome: outcome_val}, treat_event) * p_a
    return total


# --- random models for property runs -----------------------------------------

_FLOOR = Fraction(1, 100)


def random_cbn(g: CausalGraph, cardinalities: Mapping[str, int], seed: int,
               rational: bool = True) -> Cbn:
    """Seed-deterministic random CPTs with every entry >= 0.01.

    Columns are drawn by normalizing uniform integers and mixing with the
    uniform distribution so entries stay bounded away from zero; the induced
    joints therefore satisfy positivity everywhere.
    """
    rng = Random(seed)
    cpts: dict[str, list[list]] = {}
    for node in g.node_names:
        card = cardinalities[node]
        if card * _FLOOR >= 1:
            raise ValueError(f"cardinality {card} too large for the 0.01 entry floor")
        parents = g.parents_of(node)
        n_rows = _table_size([(p, cardinalities[p]) for p in parents])
        rows = []
        for _ in range(n_rows):
            raw = [rng.randrange(1, 1_000_000) for _ in range(card)]
            total = sum(raw)
            scale = 1 - card * _FLOOR
            row = [_FLOOR + scale * Fraction(v, total) for v in raw]
            if not rational:
                row = [float(v) for v in row]
            rows.append(row)
        cpts[node] = rows
    return Cbn(g, cardinalities, cpts)
