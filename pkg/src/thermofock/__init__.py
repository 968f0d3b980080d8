"""Thermal states of the quadratic oscillator ``omega a^+a + kappa* a^+^2 + kappa a^2`` in a doubled Fock space.

The public names are re-exported from the submodules: truncated linear
algebra (``linalg``), Fock-space states and density operators (``fock``),
normal-ordering identities and Gaussian integrals (``su11``), doubled-space
thermal states (``states``), phase-space representations (``phase_space``)
and the acceptance suite (``verify``).
"""

from .fock import *  # noqa: F401,F403
from .linalg import *  # noqa: F401,F403
from .phase_space import *  # noqa: F401,F403
from .states import *  # noqa: F401,F403
from .su11 import *  # noqa: F401,F403
from .tolerances import DEFAULT_TOLERANCES, ToleranceProfile, tolerances, use_tolerances
from .verify import ACCEPTANCE_GRID, VerifyReport, VerifySettings, run_verify

from . import fock, linalg, phase_space, states, su11, verify  # noqa: E402

__version__ = "0.1.0"

__all__ = (
    fock.__all__ + linalg.__all__ + phase_space.__all__ + states.__all__ + su11.__all__
    + ["DEFAULT_TOLERANCES", "ToleranceProfile", "tolerances", "use_tolerances",
       "ACCEPTANCE_GRID", "VerifyReport", "VerifySettings", "run_verify"]
)
