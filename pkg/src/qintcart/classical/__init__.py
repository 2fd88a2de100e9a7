"""Classical shadow of the quantum checks: brackets, trajectories, profiles, rank."""

from .core import (
    PHASE,
    ConcreteSystem,
    MissingBindingError,
    PhaseState,
    TrajectoryLog,
    case_brackets,
    case_observables,
    classical_hamiltonian,
    classicalize,
    concretize,
    independence_rank,
    integrate_trajectory,
    is_real_system,
    jacobian,
    matrix_rank,
    parse_profiles,
    poisson,
    random_ranks,
)
from .dopri import NonFiniteState, Solution, StepSizeUnderflow, dopri5
from .profile import Profile, ProfileRangeError, escape_bound, first_integral, integrate_profile
