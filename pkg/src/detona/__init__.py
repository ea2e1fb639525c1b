"""detona: stability and Hopf bifurcation of viscous strong detonation waves.

The package builds Rankine-Hugoniot endstates and traveling-wave profiles of
the one-dimensional reactive compressible Navier-Stokes equations, evaluates
the Evans function of the linearization to count unstable spectrum by the
argument principle, tracks complex-conjugate root pairs through parameter
sweeps to detect transitions to galloping instability, and corroborates
verdicts with desk-scale nonlinear time integration.
"""

__version__ = "0.1.0"

from .endstates import (EndstatePair, construct_regime, endstate_eigenvalues,
                        hugoniot, rayleigh, regime_params,
                        small_amplitude_params, solve_right_state)
from .errors import DetonaError
from .evans import (EvansSample, EvansSystem, SyntheticEvans,
                    derivative_at_zero, evaluate_contour, lopatinski_delta,
                    stability_check, winding_number)
from .model import EpsMap, ModelParams, State, flux_jet, ignition, thermo
from .profile import (Profile, measure_eta0, profile_rhs, solve_profile,
                      transversality_gamma)
from .spectral import (build_system, consistent_splitting, dispersion_roots,
                       essential_spectrum, kawashima_margin)
from .bifurcation import RootTrajectory, detect_hopf, locate_roots, track_pair
from .checks import Certificate, certify
from .timesim import SimState, detect_oscillation, run_perturbation, step

__all__ = [
    "__version__", "Certificate", "DetonaError", "EndstatePair", "EpsMap",
    "EvansSample", "EvansSystem", "ModelParams", "Profile", "RootTrajectory",
    "SimState", "State", "SyntheticEvans", "build_system", "certify",
    "consistent_splitting", "construct_regime", "derivative_at_zero",
    "detect_hopf", "detect_oscillation", "dispersion_roots",
    "endstate_eigenvalues", "essential_spectrum", "evaluate_contour",
    "flux_jet", "hugoniot", "ignition", "kawashima_margin", "locate_roots",
    "lopatinski_delta", "measure_eta0", "profile_rhs", "rayleigh",
    "regime_params", "run_perturbation", "small_amplitude_params",
    "solve_profile", "solve_right_state", "stability_check", "step",
    "thermo", "track_pair", "transversality_gamma", "winding_number",
]
