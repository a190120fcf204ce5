"""Shared test utilities: fixture graphs, random generators, independent oracles."""

from __future__ import annotations

from fractions import Fraction
from random import Random

from frontdoor.cgraph import CausalGraph, all_simple_paths, path_blocked


def fig1_graph() -> CausalGraph:
    return CausalGraph(
        [("X", False), ("Z", False), ("Y", False), ("U", True)],
        [("X", "Z"), ("Z", "Y"), ("U", "X"), ("U", "Y")],
    )


def bow_graph() -> CausalGraph:
    return CausalGraph(
        [("X", False), ("Y", False), ("U", True)],
        [("X", "Y"), ("U", "X"), ("U", "Y")],
    )


def chain_graph() -> CausalGraph:
    return CausalGraph(["X", "Z", "Y"], [("X", "Z"), ("Z", "Y")])


F = Fraction


def model_a_cpts() -> dict:
    return {
        "U": [[F(1, 2), F(1, 2)]],
        "X": [[F(4, 5), F(1, 5)], [F(1, 5), F(4, 5)]],
        "Z": [[F(7, 10), F(3, 10)], [F(1, 10), F(9, 10)]],
        "Y": [
            [F(9, 10), F(1, 10)],   # U=0, Z=0
            [F(2, 5), F(3, 5)],     # U=0, Z=1
            [F(1, 2), F(1, 2)],     # U=1, Z=0
            [F(1, 10), F(9, 10)],   # U=1, Z=1
        ],
    }


def random_dag(rng: Random, min_nodes: int = 3, max_nodes: int = 7,
               latent_prob: float = 0.0) -> CausalGraph:
    """A random DAG over single-letter names, acyclic by construction."""
    n = rng.randint(min_nodes, max_nodes)
    names = [chr(ord("A") + i) for i in range(n)]
    order = names[:]
    rng.shuffle(order)
    density = rng.uniform(0.15, 0.5)
    edges = [
        (order[i], order[j])
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < density
    ]
    nodes = [(name, rng.random() < latent_prob) for name in names]
    return CausalGraph(nodes, edges)


def dsep_by_paths(g: CausalGraph, a, b, c) -> bool:
    """Path-enumeration d-separation oracle: every simple path blocked."""
    for src in sorted(a):
        for dst in sorted(b):
            for path in all_simple_paths(g, src, dst):
                if not path_blocked(g, path, c):
                    return False
    return True


def interventional_by_hand(m, do: dict, outcome: dict) -> Fraction:
    """Truncated factorization written directly as nested loops over full
    assignments; shares no code with probtab.intervene_oracle."""
    from itertools import product

    names = list(m.graph.node_names)
    total = 0
    for states in product(*(range(m.cardinalities[n]) for n in names)):
        assign = dict(zip(names, states))
        if any(assign[k] != v for k, v in do.items()):
            continue
        if any(assign[k] != v for k, v in outcome.items()):
            continue
        w = 1
        for node in names:
            if node in do:
                continue
            row = m.cpts[node]
            parents = m.graph.parents_of(node)
            idx = 0
            for p in parents:
                idx = idx * m.cardinalities[p] + assign[p]
            w *= row[idx][assign[node]]
        total += w
    return total
