"""Causal identification toolkit built around the front-door adjustment.

Subpackages:

- ``cgraph``: causal graphs, edge surgery, d-separation, path oracle
- ``criteria``: front-door / back-door criterion checks with diagnostics
- ``docalculus``: symbolic interventional expressions and the three rules
- ``probtab``: exact discrete CBNs, joints, the intervention oracle, and
  the adjustment estimators
- ``cli``: the ``frontdoor`` command-line front end
"""

__version__ = "0.1.0"

from . import cgraph, criteria, docalculus, probtab  # noqa: F401
from .errors import CausalError  # noqa: F401
