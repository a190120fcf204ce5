"""Back-door and front-door criterion checkers with per-condition diagnostics.

The front-door check reports its three conditions separately:

  (i)   every directed path from x to y is intercepted by z,
  (ii)  no back-door path from x to z is open given the empty set,
  (iii) every back-door path from z to y is blocked by x.

Conditions about back-door paths from a set S are evaluated per member: the
paths leaving s against its incoming edges are exactly the paths from s in
the graph with s's outgoing edges removed, so each member gets one
d-separation query on its own out-edge-stripped graph.  That matches the
simple-path reading of "back-door path" even when S has several members
(stripping the whole set at once would also discard paths that pass through
a sibling member, which do count).

On failure a witness path violating the first failed condition is attached;
witnesses are found by exhaustive path enumeration, which is fine at the
graph sizes this package targets.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

from . import cgraph
from .cgraph import CausalGraph, Path
from .errors import LatentInCriterionSet, OverlappingSets


@dataclass(frozen=True)
class FrontdoorReport:
    satisfied: bool
    cond_i: bool
    cond_ii: bool
    cond_iii: bool
    witness: Path | None

    def __post_init__(self):
        assert self.satisfied == (self.cond_i and self.cond_ii and self.cond_iii)
        assert (self.witness is None) == self.satisfied


@dataclass(frozen=True)
class BackdoorReport:
    satisfied: bool
    descendant_violation: str | None
    open_backdoor: Path | None

    def __post_init__(self):
        assert self.satisfied == (
            self.descendant_violation is None and self.open_backdoor is None
        )


def _check_criterion_sets(g: CausalGraph, x, y, z):
    x, y, z = frozenset(x), frozenset(y), frozenset(z)
    g.require_nodes(x | y | z)
    if x & y or x & z or y & z:
        raise OverlappingSets(
            f"criterion sets overlap: x={sorted(x)}, y={sorted(y)}, z={sorted(z)}"
        )
    if not x or not y:
        raise ValueError("x and y must be nonempty")
    g.require_observed(x | y | z, error=LatentInCriterionSet)
    return x, y, z


def _open_backdoor_paths(g: CausalGraph, sources, targets, given) -> list[Path]:
    """Open paths from each source that leave it against an incoming edge.

    Paths are enumerated in the graph with the source's outgoing edges
    removed (whose simple paths from the source are exactly the back-door
    ones), but blocking is judged in ``g`` so collider descendants are not
    lost to the surgery.
    """
    given = frozenset(given)
    found: list[Path] = []
    for src in sorted(sources):
        stripped = cgraph.underline(g, [src])
        for dst in sorted(targets):
            for path in cgraph.all_simple_paths(stripped, src, dst):
                if not cgraph.path_blocked(g, path, given):
                    found.append(path)
    found.sort(key=lambda p: p.nodes)
    return found


def _backdoor_blocked(g: CausalGraph, sources, targets, given) -> bool:
    """Linear-time form of the same test as _open_backdoor_paths == []."""
    targets, given = frozenset(targets), frozenset(given)
    for src in sorted(sources):
        stripped = cgraph.underline(g, [src])
        if cgraph._trail_connected(stripped, g, frozenset([src]), targets, given):
            return False
    return True


def is_frontdoor_set(g: CausalGraph, x, y, z) -> FrontdoorReport:
    """Check the three front-door conditions for mediator set ``z``."""
    x, y, z = _check_criterion_sets(g, x, y, z)

    escaping = cgraph.directed_paths(g, x, y, avoiding=z)
    cond_i = not escaping

    if z:
        cond_ii = cgraph.d_separated(cgraph.underline(g, x), x, z, frozenset())
        cond_iii = _backdoor_blocked(g, z, y, x)
    else:
        cond_ii = True
        cond_iii = True

    satisfied = cond_i and cond_ii and cond_iii
    witness: Path | None = None
    if not satisfied:
        if not cond_i:
            witness = escaping[0]
        elif not cond_ii:
            witness = cgraph.open_paths(cgraph.underline(g, x), x, z, frozenset())[0]
        else:
            witness = _open_backdoor_paths(g, z, y, x)[0]
    return FrontdoorReport(satisfied, cond_i, cond_ii, cond_iii, witness)


def is_backdoor_set(g: CausalGraph, x, y, z) -> BackdoorReport:
    """Check the back-door criterion: ``z`` is a valid adjustment set for x -> y."""
    x, y, z = _check_criterion_sets(g, x, y, z)

    descendants: set[str] = set()
    for node in x:
        descendants |= g.descendants_of(node)
    hit = sorted(z & descendants)
    violation = hit[0] if hit else None

    open_path: Path | None = None
    if not _backdoor_blocked(g, x, y, z):
        open_path = _open_backdoor_paths(g, x, y, z)[0]

    return BackdoorReport(violation is None and open_path is None, violation, open_path)


def find_frontdoor_sets(g: CausalGraph, x, y, max_size: int) -> list[tuple[str, ...]]:
    """All observed-node subsets of size <= max_size satisfying the criterion.

    Candidates exclude x and y (latents never enter the pool).  Results come
    back in size-then-lexicographic order, each as a sorted tuple.
    """
    x, y = frozenset(x), frozenset(y)
    if max_size < 0 or max_size > len(g.observed_nodes):
        raise ValueError(
            f"max_size must be between 0 and the observed-node count, got {max_size}"
        )
    pool = [n for n in g.observed_nodes if n not in x and n not in y]
    hits: list[tuple[str, ...]] = []
    for size in range(max_size + 1):
        for combo in combinations(pool, size):
            if is_frontdoor_set(g, x, y, combo).satisfied:
                hits.append(combo)
    return hits
