"""Exception types shared across the toolkit.

Everything derives from CausalError so callers can catch the whole family.
Input-validation errors (bad names, overlapping sets, latent misuse) are kept
distinct from domain errors raised during otherwise well-formed computations
(positivity failures, conditioning on zero-mass events, inapplicable rules);
the CLI maps the former to exit code 2 and the latter to exit code 1.
"""


class CausalError(Exception):
    """Base class for all errors raised by this package."""


# --- input / construction errors -----------------------------------------

class ParseError(CausalError):
    """Malformed JSON input or a structurally invalid field."""


class CycleError(ParseError):
    """The edge set admits a directed cycle; the message names one."""


class DuplicateNode(ParseError):
    """The same node name is declared more than once."""


class UnknownEndpoint(ParseError):
    """An edge references a node that was never declared."""


class UnknownNode(CausalError):
    """An operation referenced a node absent from the graph."""


class OverlappingSets(CausalError):
    """Node sets that must be pairwise disjoint overlap."""


class LatentIntervention(CausalError):
    """Attempted to intervene on (or mutilate around) a latent node."""


class LatentConditioning(CausalError):
    """A latent node appeared in a conditioning or rule set."""


class LatentInCriterionSet(CausalError):
    """A criterion set (treatment, outcome, or mediator) contains a latent node."""


class TooManyVariables(CausalError):
    """A dense table would exceed the configured variable cap."""


# --- domain errors ---------------------------------------------------------

class ShapeMismatch(CausalError):
    """A CPT's declared parents or table dimensions disagree with the graph."""


class NotNormalized(CausalError):
    """A CPT column does not sum to one (or has entries outside [0, 1])."""


class PositivityViolation(CausalError):
    """A joint cell required to be positive has zero mass; names the cell."""


class ConditioningOnZero(CausalError):
    """A conditional was requested given an event of probability zero."""


class RuleNotApplicable(CausalError):
    """A do-calculus rewrite was attempted whose licensing independence fails.

    When the failure is a d-separation check, ``certificate`` carries the
    statement that failed.
    """

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class BadSite(CausalError):
    """An expression locator does not point at an atom."""


class CriterionNotSatisfied(CausalError):
    """A derivation was requested for sets that fail the required criterion."""
