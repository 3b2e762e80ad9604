"""Light scattering from ultracold atoms in optical lattices.

Band structure, transition matrix elements, structure factors of lattice
fermions, Bogoliubov superfluids and Mott insulators, angular photon-rate
integrals and a photon-counting thermometry protocol.
"""
__version__ = "0.1.0"

from .angular import (AngularMap, DetectorSpec, PhaseEvaluator, angular_map, detector_integrate,
                      total_inelastic_rate)
from .bands import (BandSolution1D, LatticeBands, Wannier1D, hubbard_J, hubbard_U, solve_bands_1d,
                    wannier_from_bloch)
from .core import (K40_D2, RB87_D2, SPECIES, LatticeSpec, ScatterGeometry, SpeciesSpec,
                   atom_prefactor, momentum_transfer, recoil_energy, scattering_vector)
from .errors import ConfigError, ConvergenceError, LatticeLightError, ValidityError
from .fermi import FermiState, fermi_state, fermi_temperature
from .matrix_elements import LatticeModel, StructureFactorBreakdown, TransitionTable, f00
from .mott import MottState, ensemble, mott_state
from .superfluid import SuperfluidState, solve_condensate
from .thermometry import (ThermometryRun, collected_photons, exposure_time, repetitions,
                          temperature_curve)
