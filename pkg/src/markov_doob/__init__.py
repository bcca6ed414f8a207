"""Doob transforms, spectral radii, harmonic functions and peaking states of Markov chains.

Finite stochastic matrices and lazily explored countable chains share one
row protocol; every module runs in exact rational arithmetic when the
inputs are rational and in floating point otherwise.
"""

from __future__ import annotations

from .chain import *  # noqa: F401,F403
from .doob import *  # noqa: F401,F403
from .fock import *  # noqa: F401,F403
from .harmonic import *  # noqa: F401,F403
from .peaking import *  # noqa: F401,F403
from .spectral import *  # noqa: F401,F403
from .walks import *  # noqa: F401,F403
from . import chain, doob, fock, harmonic, peaking, spectral, walks

__version__ = "0.1.0"

__all__ = sorted(
    set(chain.__all__) | set(doob.__all__) | set(fock.__all__) | set(harmonic.__all__)
    | set(peaking.__all__) | set(spectral.__all__) | set(walks.__all__)
)
