"""Threshold dynamics of collective action on social networks.

Agents on a graph average their neighbours' action thresholds, perceive the
share of acting neighbours and act when the thrust of that perception,
scaled by an exogenous cycle, outweighs their resistance. Act-probabilities
per agent type come from a two-type Bayesian participation game.
"""
__version__ = "0.1.0"

from ._backend import BACKEND
from .analysis import (Certificate, CycleReport, PhaseTransition, SyncReport, Wave, detect_clusters,
                       detect_sync, find_phase_transition, stage_decompose, verify_lemma2, verify_theorem1,
                       verify_theorem2)
from .drivers import ActivationSchedule, CycleDriver, coordination_deviation, driver_matrix, evaluate
from .dynamics import AffineLinkage, SimConfig, SystemState, ThresholdInit, Trajectory, init_state, run, step
from .errors import *  # noqa: F401,F403
from .game import (AgentType, EquilibriumProbs, GameParams, Strategy, brute_force_equilibrium, expected_utility,
                   payoff, solve_equilibrium)
from .netgen import Graph, NetworkSpec, load_edge_list, make_regular_ring, make_small_world, write_edge_list
from .scenario import ActivationPlan, NetworkRecipe, Scenario, derive_seed, run_scenario
