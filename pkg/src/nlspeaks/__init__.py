"""Multi-peak standing waves of two coupled nonlinear Schrödinger equations
with slowly decaying potentials: ground states, reduced energies, 3D grid
solves, linearised spectra and identity checks."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .ground_state import (CoupledAmplitudes, GroundState, coupled_amplitudes,  # noqa: F401
                           pair_interaction, radial_integrals, solve_ground_state)
from .potentials import PotentialModel, builtin_potential, constant_potential  # noqa: F401
from .ansatz import (AnsatzField, PeakConfiguration, make_ring_configuration,  # noqa: F401
                     single_peak_configuration)
from .grid import Grid3D, make_grid  # noqa: F401
