"""Metric isometry games, their game algebras, and finite W*-quantum metrics.

Submodules: :mod:`~qmetric.linalg` (exact matrices and operator subspaces),
:mod:`~qmetric.metric`, :mod:`~qmetric.game`, :mod:`~qmetric.algebra`,
:mod:`~qmetric.wstar`, :mod:`~qmetric.qgraph`, :mod:`~qmetric.formats` and
:mod:`~qmetric.cli`.
"""

from .algebra import *  # noqa: F401,F403
from .game import *  # noqa: F401,F403
from .linalg import *  # noqa: F401,F403
from .metric import *  # noqa: F401,F403
from .qgraph import *  # noqa: F401,F403
from .report import Check, VerificationReport  # noqa: F401
from .wstar import *  # noqa: F401,F403

__version__ = "0.1.0"
