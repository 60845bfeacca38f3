"""Time-domain FEM wave propagation with power-law absorption via fractional matrix powers."""

__version__ = "0.1.0"

from .analysis import (AttenuationSample, PowerLawFit, constitutive_stress, fit_power_law,
                       measure_attenuation, measure_damped_frequency)
from .damping import DampingSpec, build_damping_matrix
from .fem import AssembledSystem, Mesh, assemble, build_uniform_mesh, point_source_vector
from .integrator import (Excitation, GaussianPulse, Ricker, SolverConfig, ToneBurst, energy,
                         excitation_signal, integrate, integrate_many)
from .matfun import MatrixPowerResult, benchmark_power_methods, fractional_power, sqrt_iterative
from .modal import (ModalBasis, ModalResponse, ModeRegime, classify_mode, dispersion_curve,
                    eigendecompose, modal_force, modal_response, solve_modal, superpose)
from .trajectory import Trajectory
