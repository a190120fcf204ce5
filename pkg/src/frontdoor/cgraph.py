"""Causal graphs, mutilation operators, and d-separation.

A CausalGraph is an immutable DAG over named nodes, each flagged observed or
latent.  The intervention semantics used elsewhere in the package rest on two
edge-surgery operators: ``overline`` removes the edges INTO a set of nodes
(severing their causes) and ``underline`` removes the edges OUT OF a set
(severing their effects).

Two independent tests of separation are provided: ``d_separated`` runs a
linear-time reachability pass over (node, arrival-direction) states, while
``all_simple_paths`` + ``path_blocked`` give the textbook path-by-path check.
The second exists so the first can be validated against an oracle that shares
no code with it.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import (
    CycleError,
    DuplicateNode,
    LatentConditioning,
    LatentIntervention,
    OverlappingSets,
    ParseError,
    UnknownEndpoint,
    UnknownNode,
)

NodeId = str

_NAME_FORBIDDEN = set(" \t\n\r\f\v,")


def _check_name(name: str) -> str:
    if not isinstance(name, str) or not name:
        raise ParseError(f"node name must be a nonempty string, got {name!r}")
    if any(ch in _NAME_FORBIDDEN for ch in name):
        raise ParseError(
            f"node name {name!r} contains whitespace or a comma "
            "(reserved for set syntax)"
        )
    return name


class CausalGraph:
    """Immutable acyclic directed graph with observed/latent node flags.

    Equality ignores declaration order: two graphs are equal when their
    (name, latent) node sets and their edge sets coincide.  All node-set
    results produced by this module come back in lexicographic name order.
    """

    __slots__ = ("_flags", "_edges", "_names", "_parents", "_children",
                 "_observed", "_latent", "_desc_cache")

    def __init__(
        self,
        nodes: Iterable[str | tuple[str, bool]],
        edges: Iterable[tuple[str, str]] = (),
    ):
        flags: dict[str, bool] = {}
        for item in nodes:
            if isinstance(item, str):
                name, latent = item, False
            else:
                name, latent = item
            _check_name(name)
            if name in flags:
                raise DuplicateNode(f"node {name!r} declared twice")
            flags[name] = bool(latent)

        edge_set: set[tuple[str, str]] = set()
        for pair in edges:
            parent, child = pair
            for endpoint in (parent, child):
                if endpoint not in flags:
                    raise UnknownEndpoint(
                        f"edge ({parent!r}, {child!r}) references undeclared node {endpoint!r}"
                    )
            if parent == child:
                raise CycleError(f"cycle: {parent} -> {child}")
            if (parent, child) in edge_set:
                raise ParseError(f"duplicate edge ({parent!r}, {child!r})")
            edge_set.add((parent, child))

        self._flags = flags
        self._edges = frozenset(edge_set)
        self._names = tuple(sorted(flags))
        parents: dict[str, list[str]] = {n: [] for n in flags}
        children: dict[str, list[str]] = {n: [] for n in flags}
        for parent, child in edge_set:
            parents[child].append(parent)
            children[parent].append(child)
        self._parents = {n: tuple(sorted(ps)) for n, ps in parents.items()}
        self._children = {n: tuple(sorted(cs)) for n, cs in children.items()}
        self._observed = frozenset(n for n, lat in flags.items() if not lat)
        self._latent = frozenset(n for n, lat in flags.items() if lat)
        self._desc_cache: dict[str, frozenset[str]] = {}
        self._assert_acyclic()

    # -- construction helpers -------------------------------------------

    def _assert_acyclic(self) -> None:
        indeg = {n: len(self._parents[n]) for n in self._names}
        queue = deque(n for n in self._names if indeg[n] == 0)
        seen = 0
        while queue:
            node = queue.popleft()
            seen += 1
            for child in self._children[node]:
                indeg[child] -= 1
                if indeg[child] == 0:
                    queue.append(child)
        if seen != len(self._names):
            raise CycleError(f"cycle: {self._find_cycle()}")

    def _find_cycle(self) -> str:
        # DFS until a back edge closes a cycle; only reached when one exists.
        color: dict[str, int] = {}
        stack: list[str] = []

        def visit(node: str) -> list[str] | None:
            color[node] = 1
            stack.append(node)
            for child in self._children[node]:
                if color.get(child, 0) == 1:
                    return stack[stack.index(child):] + [child]
                if color.get(child, 0) == 0:
                    found = visit(child)
                    if found:
                        return found
            stack.pop()
            color[node] = 2
            return None

        for name in self._names:
            if color.get(name, 0) == 0:
                cyc = visit(name)
                if cyc:
                    return " -> ".join(cyc)
        return "unknown"

    # -- basic accessors --------------------------------------------------

    @property
    def node_names(self) -> tuple[str, ...]:
        return self._names

    @property
    def edges(self) -> frozenset[tuple[str, str]]:
        return self._edges

    @property
    def edge_list(self) -> list[tuple[str, str]]:
        return sorted(self._edges)

    @property
    def observed_nodes(self) -> tuple[str, ...]:
        return tuple(sorted(self._observed))

    @property
    def latent_nodes(self) -> tuple[str, ...]:
        return tuple(sorted(self._latent))

    def has_node(self, name: str) -> bool:
        return name in self._flags

    def is_latent(self, name: str) -> bool:
        self.require_nodes([name])
        return self._flags[name]

    def parents_of(self, name: str) -> tuple[str, ...]:
        self.require_nodes([name])
        return self._parents[name]

    def children_of(self, name: str) -> tuple[str, ...]:
        self.require_nodes([name])
        return self._children[name]

    def node_flags(self) -> list[tuple[str, bool]]:
        return [(n, self._flags[n]) for n in self._names]

    def require_nodes(self, names: Iterable[str]) -> None:
        for name in names:
            if name not in self._flags:
                raise UnknownNode(f"unknown node {name!r}")

    def require_observed(self, names: Iterable[str], error=LatentConditioning) -> None:
        self.require_nodes(names)
        for name in names:
            if self._flags[name]:
                raise error(f"node {name!r} is latent")

    def topological_order(self) -> list[str]:
        indeg = {n: len(self._parents[n]) for n in self._names}
        queue = deque(n for n in self._names if indeg[n] == 0)
        order: list[str] = []
        while queue:
            node = queue.popleft()
            order.append(node)
            for child in self._children[node]:
                indeg[child] -= 1
                if indeg[child] == 0:
                    queue.append(child)
        return order

    def descendants_of(self, name: str) -> frozenset[str]:
        """Strict descendants of one node (cached; graphs are immutable)."""
        cached = self._desc_cache.get(name)
        if cached is not None:
            return cached
        seen: set[str] = set()
        stack = list(self._children[name])
        while stack:
            node = stack.pop()
            if node not in seen:
                seen.add(node)
                stack.extend(self._children[node])
        result = frozenset(seen)
        self._desc_cache[name] = result
        return result

    # -- value semantics ----------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, CausalGraph):
            return NotImplemented
        return self._flags == other._flags and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((frozenset(self._flags.items()), self._edges))

    def __repr__(self) -> str:
        nodes = ", ".join(n + ("?" if self._flags[n] else "") for n in self._names)
        edges = ", ".join(f"{p}->{c}" for p, c in self.edge_list)
        return f"CausalGraph([{nodes}], [{edges}])"


@dataclass(frozen=True)
class Path:
    """A simple path in the undirected sense, with per-edge direction marks.

    ``directions[i]`` is ``'forward'`` when the step from ``nodes[i]`` to
    ``nodes[i+1]`` follows the edge nodes[i] -> nodes[i+1], ``'backward'``
    when it runs against the edge nodes[i+1] -> nodes[i].
    """

    nodes: tuple[str, ...]
    directions: tuple[str, ...]

    def __post_init__(self):
        if len(self.directions) != len(self.nodes) - 1:
            raise ValueError("direction marks must be one fewer than nodes")

    def __str__(self) -> str:
        parts = [self.nodes[0]]
        for node, mark in zip(self.nodes[1:], self.directions):
            parts.append(" -> " if mark == "forward" else " <- ")
            parts.append(node)
        return "".join(parts)

    def is_directed(self) -> bool:
        return all(mark == "forward" for mark in self.directions)


# --- parsing -----------------------------------------------------------------

_GRAPH_KEYS = {"nodes", "edges"}
_NODE_KEYS = {"name", "latent"}


def graph_from_obj(obj) -> CausalGraph:
    """Build a graph from an already-decoded JSON object."""
    if not isinstance(obj, dict):
        raise ParseError("graph document must be a JSON object")
    unknown = set(obj) - _GRAPH_KEYS
    if unknown:
        raise ParseError(f"unknown graph keys: {sorted(unknown)}")
    raw_nodes = obj.get("nodes")
    if not isinstance(raw_nodes, list):
        raise ParseError('"nodes" must be a list of node objects')
    nodes: list[tuple[str, bool]] = []
    for entry in raw_nodes:
        if not isinstance(entry, dict):
            raise ParseError(f"node entry must be an object, got {entry!r}")
        unknown = set(entry) - _NODE_KEYS
        if unknown:
            raise ParseError(f"unknown node keys: {sorted(unknown)}")
        if "name" not in entry:
            raise ParseError(f'node entry missing "name": {entry!r}')
        latent = entry.get("latent", False)
        if not isinstance(latent, bool):
            raise ParseError(f'"latent" must be a boolean, got {latent!r}')
        nodes.append((entry["name"], latent))
    raw_edges = obj.get("edges", [])
    if not isinstance(raw_edges, list):
        raise ParseError('"edges" must be a list of [parent, child] pairs')
    edges: list[tuple[str, str]] = []
    for pair in raw_edges:
        if not isinstance(pair, list) or len(pair) != 2:
            raise ParseError(f"edge must be a [parent, child] pair, got {pair!r}")
        edges.append((pair[0], pair[1]))
    return CausalGraph(nodes, edges)


def parse_graph(text: str) -> CausalGraph:
    """Parse the JSON graph format; rejects cycles and unknown keys."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return graph_from_obj(obj)


def graph_to_obj(g: CausalGraph) -> dict:
    """Inverse of graph_from_obj, suitable for json.dumps."""
    return {
        "nodes": [{"name": n, "latent": lat} for n, lat in g.node_flags()],
        "edges": [list(e) for e in g.edge_list],
    }


# --- mutilation --------------------------------------------------------------

def _check_mutilation_set(g: CausalGraph, s: Iterable[str]) -> frozenset[str]:
    s = frozenset(s)
    g.require_nodes(s)
    for name in s:
        if g.is_latent(name):
            raise LatentIntervention(f"cannot mutilate around latent node {name!r}")
    return s


def overline(g: CausalGraph, s: Iterable[str]) -> CausalGraph:
    """Remove every edge INTO a member of ``s`` (intervention surgery)."""
    s = _check_mutilation_set(g, s)
    return CausalGraph(g.node_flags(), [e for e in g.edge_list if e[1] not in s])


def underline(g: CausalGraph, s: Iterable[str]) -> CausalGraph:
    """Remove every edge OUT OF a member of ``s``."""
    s = _check_mutilation_set(g, s)
    return CausalGraph(g.node_flags(), [e for e in g.edge_list if e[0] not in s])


def ancestors(g: CausalGraph, s: Iterable[str]) -> list[str]:
    """All nodes with a directed path into ``s``, including ``s`` itself.

    Returned in lexicographic order.
    """
    s = frozenset(s)
    g.require_nodes(s)
    return sorted(_ancestor_set(g, s))


def _ancestor_set(g: CausalGraph, s: frozenset[str]) -> set[str]:
    seen = set(s)
    stack = list(s)
    while stack:
        node = stack.pop()
        for parent in g.parents_of(node):
            if parent not in seen:
                seen.add(parent)
                stack.append(parent)
    return seen


# --- d-separation (reachability form) ----------------------------------------

def _check_query_sets(g, a, b, c):
    a, b, c = frozenset(a), frozenset(b), frozenset(c)
    g.require_nodes(a | b | c)
    if a & b or a & c or b & c:
        raise OverlappingSets(
            f"query sets overlap: a={sorted(a)}, b={sorted(b)}, c={sorted(c)}"
        )
    if not a or not b:
        raise ValueError("d-separation query requires nonempty endpoint sets")
    g.require_observed(c)
    return a, b, c


def d_separated(g: CausalGraph, a, b, c) -> bool:
    """True iff every path between ``a`` and ``b`` is blocked given ``c``.

    Linear-time trail tracing over (node, arrival-direction) states: a state
    records whether the trail reached a node along an edge pointing into it
    ("down") or out of it ("up").  Continuation through a non-collider needs
    the node outside ``c``; through a collider it needs the node to have a
    descendant in ``c`` (itself included).
    """
    a, b, c = _check_query_sets(g, a, b, c)
    return not _trail_connected(g, g, a, b, c)


def _trail_connected(walk_graph, desc_graph, a, b, c) -> bool:
    """Reachability over (node, arrival-direction) states in ``walk_graph``.

    Collider opening is judged by descendants in ``desc_graph``; the two
    graphs differ only when a caller restricts the walkable edges (e.g. to
    paths leaving a node against its incoming edges) while blocking rules
    still refer to the full graph.
    """
    can_open_collider = _ancestor_set(desc_graph, c)  # in c, or an ancestor of c

    # (node, True) = arrived along an edge into node; (node, False) = along
    # an edge out of it.  Sources start as if entered from a child, which
    # permits both continuations.
    frontier: deque[tuple[str, bool]] = deque((s, False) for s in a)
    seen: set[tuple[str, bool]] = set(frontier)
    while frontier:
        node, arrived_via_in = frontier.popleft()
        if node in b:
            return True
        moves: list[tuple[str, bool]] = []
        if node not in c:
            moves.extend((child, True) for child in walk_graph.children_of(node))
        if arrived_via_in:
            if node in can_open_collider:
                moves.extend((parent, False) for parent in walk_graph.parents_of(node))
        else:
            if node not in c:
                moves.extend((parent, False) for parent in walk_graph.parents_of(node))
        for state in moves:
            if state not in seen:
                seen.add(state)
                frontier.append(state)
    return False


# --- path enumeration oracle ---------------------------------------------

def all_simple_paths(g: CausalGraph, a: str, b: str) -> list[Path]:
    """Every simple path between ``a`` and ``b``, ignoring edge direction.

    Ordered lexicographically by node sequence.  This is the exhaustive
    oracle against which the reachability algorithm is checked; it is only
    meant for small graphs.
    """
    g.require_nodes([a, b])
    if a == b:
        raise ValueError("path endpoints must differ")
    results: list[Path] = []
    nodes: list[str] = [a]
    marks: list[str] = []
    on_path = {a}

    def neighbors(node: str) -> list[tuple[str, str]]:
        out = [(child, "forward") for child in g.children_of(node)]
        out += [(parent, "backward") for parent in g.parents_of(node)]
        out.sort()
        return out

    def extend(node: str) -> None:
        for nxt, mark in neighbors(node):
            if nxt in on_path:
                continue
            nodes.append(nxt)
            marks.append(mark)
            if nxt == b:
                results.append(Path(tuple(nodes), tuple(marks)))
            else:
                on_path.add(nxt)
                extend(nxt)
                on_path.discard(nxt)
            nodes.pop()
            marks.pop()

    extend(a)
    results.sort(key=lambda p: p.nodes)
    return results


def path_blocked(g: CausalGraph, path: Path, c) -> bool:
    """Textbook blocking test for one path given conditioning set ``c``.

    A chain or fork node blocks when it lies in ``c``; a collider blocks
    unless it or one of its descendants lies in ``c``.  Kept deliberately
    independent of the reachability implementation in d_separated.
    """
    c = frozenset(c)
    g.require_nodes(c)
    for i in range(1, len(path.nodes) - 1):
        node = path.nodes[i]
        is_collider = (path.directions[i - 1] == "forward"
                       and path.directions[i] == "backward")
        if is_collider:
            if node not in c and not (g.descendants_of(node) & c):
                return True
        else:
            if node in c:
                return True
    return False


def open_paths(g: CausalGraph, a, b, c) -> list[Path]:
    """All unblocked simple paths between the sets ``a`` and ``b`` given ``c``.

    Lexicographic by node sequence; used for witnesses and as the oracle side
    of the d-separation agreement property.
    """
    a, b, c = frozenset(a), frozenset(b), frozenset(c)
    found: list[Path] = []
    for src in sorted(a):
        for dst in sorted(b):
            for path in all_simple_paths(g, src, dst):
                if not path_blocked(g, path, c):
                    found.append(path)
    found.sort(key=lambda p: p.nodes)
    return found


def directed_paths(g: CausalGraph, a, b, avoiding=()) -> list[Path]:
    """Directed simple paths from ``a`` into ``b`` that dodge ``avoiding``."""
    a, b, avoiding = frozenset(a), frozenset(b), frozenset(avoiding)
    g.require_nodes(a | b | avoiding)
    results: list[Path] = []

    def extend(node: str, trail: list[str]) -> None:
        for child in g.children_of(node):
            if child in avoiding or child in trail or child in a:
                continue
            trail.append(child)
            if child in b:
                results.append(Path(tuple(trail), ("forward",) * (len(trail) - 1)))
            else:
                extend(child, trail)
            trail.pop()

    for src in sorted(a):
        if src in avoiding:
            continue
        extend(src, [src])
    results.sort(key=lambda p: p.nodes)
    return results
