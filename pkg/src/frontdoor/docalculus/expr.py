"""Symbolic interventional probability expressions.

An expression is a tree of atoms P(outcome | do(...), observations), sums
over the states of bound variables, and products.  Variables are symbolic:
a Sym names the graph node whose states it ranges over plus a display name,
and states bind only at evaluation time.  Within one expression a node has
at most one free symbol (the query value); each sum binder introduces fresh
symbols for the nodes it ranges over.

``canonicalize`` produces the normal form used for equality and for the
wire/text syntax: products flattened, children ordered by an alpha-invariant
key, binder names reassigned in first-use order (``x`` when free ``x`` is
not taken, else ``x1``, ``x2``, ...).  The text rendering looks like::

    sum[z] ( P(z|x) * sum[x1] ( P(y|x1,z) * P(x1) ) )

with interventions rendered as ``do(x)`` inside the conditioning bar.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iterproduct
from typing import Iterable, Iterator, Mapping, Union

from ..errors import BadSite, OverlappingSets
from ..probtab import JointTable, conditional


@dataclass(frozen=True, order=True)
class Sym:
    """A symbolic value of one graph node: display name + owning node."""

    name: str
    node: str


def free_sym(node: str) -> Sym:
    return Sym(node.lower(), node)


def _sorted_syms(syms: Iterable[Sym]) -> tuple[Sym, ...]:
    return tuple(sorted(syms))


@dataclass(frozen=True)
class IntervAtom:
    """P(outcome | do(do_set), cond_set); any of the three may carry states later."""

    outcome: tuple[Sym, ...]
    do: tuple[Sym, ...] = ()
    cond: tuple[Sym, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "outcome", _sorted_syms(self.outcome))
        object.__setattr__(self, "do", _sorted_syms(self.do))
        object.__setattr__(self, "cond", _sorted_syms(self.cond))
        if not self.outcome:
            raise ValueError("atom outcome must be nonempty")
        nodes = [s.node for s in self.outcome + self.do + self.cond]
        if len(nodes) != len(set(nodes)):
            raise OverlappingSets(f"atom mentions a node twice: P({self})")
        names = [s.name for s in self.outcome + self.do + self.cond]
        if len(names) != len(set(names)):
            raise OverlappingSets(f"atom reuses a symbol name: P({self})")

    def all_syms(self) -> tuple[Sym, ...]:
        return self.outcome + self.do + self.cond

    def nodes(self) -> frozenset[str]:
        return frozenset(s.node for s in self.all_syms())

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class Sum:
    bound: tuple[Sym, ...]
    body: "IntervExpr"

    def __post_init__(self):
        object.__setattr__(self, "bound", _sorted_syms(self.bound))
        if not self.bound:
            raise ValueError("sum must bind at least one variable")

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class Product:
    factors: tuple["IntervExpr", ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if len(self.factors) < 2:
            raise ValueError("product needs at least two factors")

    def __str__(self) -> str:
        return render(self)


IntervExpr = Union[IntervAtom, Sum, Product]


def atom(outcome: Iterable[str], do: Iterable[str] = (), cond: Iterable[str] = ()) -> IntervAtom:
    """Atom over free symbols of the given nodes, e.g. atom(["Y"], do=["X"])."""
    return IntervAtom(
        tuple(free_sym(n) for n in outcome),
        tuple(free_sym(n) for n in do),
        tuple(free_sym(n) for n in cond),
    )


# --- tree navigation ---------------------------------------------------------

Site = tuple[int, ...]


def children(expr: IntervExpr) -> tuple[IntervExpr, ...]:
    if isinstance(expr, Sum):
        return (expr.body,)
    if isinstance(expr, Product):
        return expr.factors
    return ()


def subexpr(expr: IntervExpr, site: Site) -> IntervExpr:
    node = expr
    for i in site:
        kids = children(node)
        if not 0 <= i < len(kids):
            raise BadSite(f"no child {i} at {render(node)}")
        node = kids[i]
    return node


def atom_at(expr: IntervExpr, site: Site) -> IntervAtom:
    node = subexpr(expr, site)
    if not isinstance(node, IntervAtom):
        raise BadSite(f"site {site} is not an atom: {render(node)}")
    return node


def replace_at(expr: IntervExpr, site: Site, new: IntervExpr) -> IntervExpr:
    if not site:
        return new
    i, rest = site[0], site[1:]
    kids = children(expr)
    if not 0 <= i < len(kids):
        raise BadSite(f"no child {i} at {render(expr)}")
    replaced = replace_at(kids[i], rest, new)
    if isinstance(expr, Sum):
        return Sum(expr.bound, replaced)
    factors = list(expr.factors)
    factors[i] = replaced
    return Product(tuple(factors))


def atom_sites(expr: IntervExpr) -> list[Site]:
    """All atom locations, pre-order."""
    out: list[Site] = []

    def walk(node: IntervExpr, prefix: Site) -> None:
        if isinstance(node, IntervAtom):
            out.append(prefix)
        else:
            for i, kid in enumerate(children(node)):
                walk(kid, prefix + (i,))

    walk(expr, ())
    return out


def iter_atoms(expr: IntervExpr) -> Iterator[IntervAtom]:
    for site in atom_sites(expr):
        yield atom_at(expr, site)


def is_hat_free(expr: IntervExpr) -> bool:
    return all(not a.do for a in iter_atoms(expr))


def all_sym_names(expr: IntervExpr) -> set[str]:
    names: set[str] = set()

    def walk(node: IntervExpr) -> None:
        if isinstance(node, IntervAtom):
            names.update(s.name for s in node.all_syms())
        elif isinstance(node, Sum):
            names.update(s.name for s in node.bound)
            walk(node.body)
        else:
            for kid in node.factors:
                walk(kid)

    walk(expr)
    return names


def free_syms(expr: IntervExpr) -> list[Sym]:
    """Symbols not bound by any enclosing sum, in first-use (pre-order) order."""
    seen: list[Sym] = []

    def walk(node: IntervExpr, bound: frozenset[Sym]) -> None:
        if isinstance(node, IntervAtom):
            for sym in node.all_syms():
                if sym not in bound and sym not in seen:
                    seen.append(sym)
        elif isinstance(node, Sum):
            walk(node.body, bound | frozenset(node.bound))
        else:
            for kid in node.factors:
                walk(kid, bound)

    walk(expr, frozenset())
    return seen


def fresh_syms(expr: IntervExpr, nodes: Iterable[str]) -> tuple[Sym, ...]:
    """One new symbol per node, with names unused anywhere in the expression."""
    taken = all_sym_names(expr)
    out = []
    for node in sorted(nodes):
        base = node.lower()
        name = base
        k = 0
        while name in taken:
            k += 1
            name = f"{base}{k}"
        taken.add(name)
        out.append(Sym(name, node))
    return tuple(out)


# --- rendering ----------------------------------------------------------------


def render(expr: IntervExpr) -> str:
    """Text form; canonical when the expression has been canonicalized."""
    if isinstance(expr, IntervAtom):
        out = ",".join(s.name for s in expr.outcome)
        ctx = [f"do({s.name})" for s in expr.do] + [s.name for s in expr.cond]
        return f"P({out}|{','.join(ctx)})" if ctx else f"P({out})"
    if isinstance(expr, Sum):
        names = ",".join(s.name for s in expr.bound)
        return f"sum[{names}] ( {render(expr.body)} )"
    parts = []
    for factor in expr.factors:
        text = render(factor)
        if isinstance(factor, Product):
            text = f"( {text} )"
        parts.append(text)
    return " * ".join(parts)


# --- canonical form ------------------------------------------------------------


def _flatten(expr: IntervExpr) -> IntervExpr:
    if isinstance(expr, IntervAtom):
        return expr
    if isinstance(expr, Sum):
        return Sum(expr.bound, _flatten(expr.body))
    factors: list[IntervExpr] = []
    for factor in expr.factors:
        flat = _flatten(factor)
        if isinstance(flat, Product):
            factors.extend(flat.factors)
        else:
            factors.append(flat)
    if len(factors) == 1:
        return factors[0]
    return Product(tuple(factors))


def _key_sym(sym: Sym, stack: tuple[tuple[Sym, ...], ...]) -> str:
    # Alpha-invariant token: free symbols print as their node, bound ones as
    # node@depth where depth counts binders outward from the innermost.
    for depth, bound in enumerate(reversed(stack)):
        if sym in bound:
            return f"{sym.node}@{depth}"
    return sym.node


def _key(expr: IntervExpr, stack) -> str:
    if isinstance(expr, IntervAtom):
        out = ",".join(sorted(_key_sym(s, stack) for s in expr.outcome))
        do = ",".join(sorted(_key_sym(s, stack) for s in expr.do))
        cond = ",".join(sorted(_key_sym(s, stack) for s in expr.cond))
        return f"A({out}|{do};{cond})"
    if isinstance(expr, Sum):
        nodes = ",".join(sorted(s.node for s in expr.bound))
        return f"S[{nodes}]({_key(expr.body, stack + (expr.bound,))})"
    return "M(" + "*".join(_key(f, stack) for f in expr.factors) + ")"


def _child_order_key(expr: IntervExpr, stack) -> tuple:
    # Atoms come before sums; more-conditioned atoms first (factorization
    # order); final tie-break on the alpha-invariant rendering.
    if isinstance(expr, IntervAtom):
        return (0, -(len(expr.do) + len(expr.cond)), _key(expr, stack))
    return (1, 0, _key(expr, stack))


def _order(expr: IntervExpr, stack) -> IntervExpr:
    if isinstance(expr, IntervAtom):
        return expr
    if isinstance(expr, Sum):
        return Sum(expr.bound, _order(expr.body, stack + (expr.bound,)))
    ordered = [_order(f, stack) for f in expr.factors]
    ordered.sort(key=lambda f: _child_order_key(f, stack))
    return Product(tuple(ordered))


def _rename(expr: IntervExpr, env: dict[Sym, Sym], taken: set[str]) -> IntervExpr:
    def assign(sym: Sym) -> Sym:
        base = sym.node.lower()
        name = base
        k = 0
        while name in taken:
            k += 1
            name = f"{base}{k}"
        taken.add(name)
        return Sym(name, sym.node)

    if isinstance(expr, IntervAtom):
        def one(sym: Sym) -> Sym:
            if sym not in env:
                env[sym] = assign(sym)  # free symbol, first use
            return env[sym]

        return IntervAtom(
            tuple(one(s) for s in expr.outcome),
            tuple(one(s) for s in expr.do),
            tuple(one(s) for s in expr.cond),
        )
    if isinstance(expr, Sum):
        inner = dict(env)
        for sym in sorted(expr.bound, key=lambda s: s.node):
            inner[sym] = assign(sym)
        body = _rename(expr.body, inner, taken)
        for old, new in inner.items():
            if old not in expr.bound and old not in env:
                env[old] = new  # free symbol first seen inside the sum
        return Sum(tuple(inner[s] for s in expr.bound), body)
    return Product(tuple(_rename(f, env, taken) for f in expr.factors))


def canonicalize(expr: IntervExpr) -> IntervExpr:
    """Normal form: flattened, canonically ordered, binders renamed.

    Idempotent, alpha-invariant, and evaluation-preserving.
    """
    ordered = _order(_flatten(expr), ())
    return _rename(ordered, {}, set())


def canonical_text(expr: IntervExpr) -> str:
    return render(canonicalize(expr))


def equivalent(a: IntervExpr, b: IntervExpr) -> bool:
    """Structural equality up to canonicalization (alpha + ordering)."""
    return canonicalize(a) == canonicalize(b)


# --- evaluation ----------------------------------------------------------------


def eval_expr(expr: IntervExpr, table: JointTable, at: Mapping[str, int]):
    """Evaluate a hat-free expression on a joint table.

    ``at`` maps node names to states for every free variable.  Conditional
    atoms become ratios of table masses; sums iterate the bound nodes'
    states exactly.  Raises ConditioningOnZero when an atom conditions on a
    zero-mass event.
    """
    env: dict[Sym, int] = {}
    for sym in free_syms(expr):
        if sym.node not in at:
            raise ValueError(f"no state given for free variable {sym.name} (node {sym.node})")
        env[sym] = at[sym.node]
    return _eval(expr, table, env)


def _eval(expr: IntervExpr, table: JointTable, env: dict[Sym, int]):
    if isinstance(expr, IntervAtom):
        if expr.do:
            raise ValueError(f"expression is not hat-free: {render(expr)}")
        target = {s.node: env[s] for s in expr.outcome}
        given = {s.node: env[s] for s in expr.cond}
        return conditional(table, target, given)
    if isinstance(expr, Sum):
        total = 0
        cards = [table.cardinality(s.node) for s in expr.bound]
        for states in iterproduct(*(range(c) for c in cards)):
            for sym, state in zip(expr.bound, states):
                env[sym] = state
            total += _eval(expr.body, table, env)
        for sym in expr.bound:
            del env[sym]
        return total
    result = 1
    for factor in expr.factors:
        result *= _eval(factor, table, env)
    return result


# --- text parsing ----------------------------------------------------------------


def parse_expr(text: str, node_names: Iterable[str]) -> IntervExpr:
    """Parse the canonical text syntax back into an expression.

    Symbols resolve against ``node_names``: a symbol matches the node whose
    lowercase name equals it, else the node matching it with trailing digits
    stripped (so ``x1`` is a bound variable of node X when no node ``X1``
    exists).
    """
    nodes = list(node_names)
    by_lower: dict[str, str] = {}
    for node in nodes:
        if node.lower() in by_lower:
            raise ValueError(f"ambiguous lowercase node names: {node!r}")
        by_lower[node.lower()] = node

    def resolve(name: str) -> Sym:
        if name in by_lower:
            return Sym(name, by_lower[name])
        stripped = name.rstrip("0123456789")
        if stripped in by_lower:
            return Sym(name, by_lower[stripped])
        raise ValueError(f"cannot resolve symbol {name!r} to a node")

    tokens = _tokenize(text)
    pos = 0

    def peek() -> str | None:
        return tokens[pos] if pos < len(tokens) else None

    def take(expected: str | None = None) -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError(f"unexpected end of expression: {text!r}")
        tok = tokens[pos]
        if expected is not None and tok != expected:
            raise ValueError(f"expected {expected!r}, got {tok!r} in {text!r}")
        pos += 1
        return tok

    def parse_expression() -> IntervExpr:
        factors = [parse_term()]
        while peek() == "*":
            take("*")
            factors.append(parse_term())
        return factors[0] if len(factors) == 1 else Product(tuple(factors))

    def parse_term() -> IntervExpr:
        tok = peek()
        if tok == "sum":
            take("sum")
            take("[")
            bound = [resolve(take())]
            while peek() == ",":
                take(",")
                bound.append(resolve(take()))
            take("]")
            take("(")
            body = parse_expression()
            take(")")
            return Sum(tuple(bound), body)
        if tok == "P":
            return parse_atom()
        if tok == "(":
            take("(")
            inner = parse_expression()
            take(")")
            return inner
        raise ValueError(f"unexpected token {tok!r} in {text!r}")

    def parse_atom() -> IntervAtom:
        take("P")
        take("(")
        outcome = [resolve(take())]
        while peek() == ",":
            take(",")
            outcome.append(resolve(take()))
        do: list[Sym] = []
        cond: list[Sym] = []
        if peek() == "|":
            take("|")
            while True:
                if peek() == "do":
                    take("do")
                    take("(")
                    do.append(resolve(take()))
                    take(")")
                else:
                    cond.append(resolve(take()))
                if peek() != ",":
                    break
                take(",")
        take(")")
        return IntervAtom(tuple(outcome), tuple(do), tuple(cond))

    result = parse_expression()
    if pos != len(tokens):
        raise ValueError(f"trailing tokens after expression: {tokens[pos:]}")
    return result


def _tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()[]|,*":
            tokens.append(ch)
            i += 1
        else:
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] in "_'"):
                j += 1
            if j == i:
                raise ValueError(f"bad character {ch!r} in expression")
            tokens.append(text[i:j])
            i = j
    return tokens
