"""Desk-scale simulation of common Haar function-like state (CHFS) oracles.

Exact dense simulation of the oracle family, the swap and product tests, the
attacks against PRU and PRSG candidates, and numerical checks of the
supporting lemmas.  Every random choice flows from an explicit :class:`Rng`.
"""

__version__ = "0.1.0"

from .attacks import *  # noqa: F401,F403
from .circuits import *  # noqa: F401,F403
from .hilbert import *  # noqa: F401,F403
from .lemmas import *  # noqa: F401,F403
from .oracle import *  # noqa: F401,F403
from .parallel import *  # noqa: F401,F403
from .primitives import *  # noqa: F401,F403
from .rng import *  # noqa: F401,F403
from .statetests import *  # noqa: F401,F403
from .tomography import *  # noqa: F401,F403
from .records import ExperimentRecord, RunConfig  # noqa: F401
