"""Three-state robust mean-field games on networks.

Solvers for the coupled forward-backward game, its stationary equilibria
and stability, and the three applied instantiations: honeybee collective
decision-making, virus/failure propagation, and Kuramoto-oscillator grid
frequencies under cyber-attack.
"""

from .core import (CostWeights, Graph, RateMatrix, SimplexState, ValueVector,
                   default_weights, linear_congestion, make_graph,
                   make_rate_matrix, make_simplex, read_graph,
                   strongly_connected, walpole_graph)
from .epidemic import (EpidemicParams, EpidemicState, mfg_to_virus_map,
                       simulate_epidemic, sir_limit_rhs, stability_condition,
                       virus_network_rhs)
from .errors import (Degenerate, DegenerateMapping, HypothesisViolated,
                     MfgnetError, NoConvergence, NoRealEquilibrium, NoRoot,
                     NotAnEquilibrium, NotASimplex, OutOfRange,
                     RegimeViolation, StepTooLarge)
from .grid import (AttackSchedule, FrequencyTrajectory, OscillatorParams,
                   OscillatorState, frequency_excursion_stats, kuramoto_rhs,
                   sample_disturbance, schedule_rates, simulate_grid)
from .mfg import (AgentPath, ItvpConfig, Trajectory, difference_operator,
                  empirical_distribution, hamiltonian, hjb_rhs,
                  integrate_backward, integrate_forward, kolmogorov_rhs,
                  optimal_control, rate_matrix_from_values, sample_agent_path,
                  sample_agent_paths, solve_itvp, terminal_values,
                  worst_disturbance)
from .scenario import (InfectionHistogram, ScenarioConfig, ScenarioReport,
                       bucket_histogram, run_scenario, scenario_from_dict,
                       walpole_node11_initial)
from .stationary import (HorizonRecord, ReducedCoefficients, ReducedValue,
                         StationarySolution, classify_equilibrium,
                         coefficients_from_weights, convergence_study,
                         reduced_rhs, seminorm_sharp, stationary_distribution,
                         stationary_equilibrium, stationary_y)
from .swarm import (ArcRates, NetworkSwarmParams, NetworkTrajectory,
                    NodeTriple, SwarmEquilibrium, SwarmParams,
                    honeybee_meanfield_rhs, mfg_to_swarm_map, simulate_swarm,
                    swarm_equilibria, swarm_network_rhs, uniform_triple)

__version__ = "0.1.0"
