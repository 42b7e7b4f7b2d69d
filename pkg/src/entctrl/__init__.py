"""Time-optimal bang-bang control for two-qubit entanglement generation."""

from .dynamics import (ControlSchedule, CostateTrajectory, HamiltonianSet,
                       Trajectory, assemble_hamiltonian, propagate_costate_backward,
                       propagate_forward, step_state)
from .entanglement import (SchmidtDecomposition, concurrence_from_reduced,
                           concurrence_pure, schmidt_decompose, wootters_concurrence)
from .linalg import commutator, herm_eig, kron, partial_trace_b, propagator
from .scenario import ScenarioConfig, ScenarioError, load_scenario, scenario_from_dict
from .solver import (OptimalSolution, SolverConfig, TimeSearch, bang_bang_update,
                     forward_backward_sweep, objective, optimize_final_time,
                     switching_function, terminal_costate, transversality_residual)
from .states import (DensityMatrix, PureState, bell_state, density_from_pure,
                     perturbed_separable, purity)

__all__ = [
    "ControlSchedule", "CostateTrajectory", "DensityMatrix", "HamiltonianSet",
    "OptimalSolution", "PureState", "ScenarioConfig", "ScenarioError",
    "SchmidtDecomposition", "SolverConfig", "TimeSearch", "Trajectory",
    "assemble_hamiltonian", "bang_bang_update", "bell_state", "commutator",
    "concurrence_from_reduced", "concurrence_pure", "density_from_pure",
    "forward_backward_sweep", "herm_eig", "kron", "load_scenario", "objective",
    "optimize_final_time", "partial_trace_b", "perturbed_separable",
    "propagate_costate_backward", "propagate_forward", "propagator", "purity",
    "scenario_from_dict", "schmidt_decompose", "step_state", "switching_function",
    "terminal_costate", "transversality_residual", "wootters_concurrence",
]
