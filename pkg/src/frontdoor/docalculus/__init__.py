"""Symbolic do-calculus: expressions, the three rules, and derivations."""

from .expr import (
    IntervAtom,
    IntervExpr,
    Product,
    Sum,
    Sym,
    atom,
    atom_at,
    atom_sites,
    canonical_text,
    canonicalize,
    equivalent,
    eval_expr,
    free_sym,
    is_hat_free,
    parse_expr,
    render,
    replace_at,
    subexpr,
)
from .rules import (
    Certificate,
    apply_rule,
    apply_rule_with_certificate,
    expand_total_probability,
    rule1_applicable,
    rule2_applicable,
    rule3_applicable,
)
from .derive import (
    BACKDOOR_COLLAPSE,
    EXPAND,
    Derivation,
    DerivationStep,
    backdoor_collapse,
    eval_with_oracle,
    replay_frontdoor,
    replay_steps,
    search_derivation,
)

__all__ = [
    "IntervAtom", "IntervExpr", "Product", "Sum", "Sym", "atom", "atom_at",
    "atom_sites", "canonical_text", "canonicalize", "equivalent", "eval_expr",
    "free_sym", "is_hat_free", "parse_expr", "render", "replace_at", "subexpr",
    "Certificate", "apply_rule", "apply_rule_with_certificate",
    "expand_total_probability", "rule1_applicable", "rule2_applicable",
    "rule3_applicable", "BACKDOOR_COLLAPSE", "EXPAND", "Derivation",
    "DerivationStep", "backdoor_collapse", "eval_with_oracle",
    "replay_frontdoor", "replay_steps", "search_derivation",
]
