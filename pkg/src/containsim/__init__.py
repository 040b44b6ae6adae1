"""Distributed output containment control of heterogeneous leader-follower networks.

Pipeline: each follower discovers the agents that influence it, computes its
leader-influence weights from purely local Laplacian blocks, estimates its
influential leaders with an adaptive observer, and tracks the weighted
combination of their outputs through an output-regulation controller.
"""
from .config import DEFAULT_TOLERANCES, ToleranceConfig
from .discovery import run_discovery
from .errors import (AssemblyError, AssumptionError, ContainsimError, DivergenceError,
                     ScenarioError, SingularMatrixError, SpectraOverlapError, SynthesisError)
from .graph import Graph, global_phi
from .hull import hull_distance
from .local_view import build_local_view, build_local_views
from .observer import LeaderModel, ObserverGains, ObserverNetwork
from .pipeline import run_pipeline, validate_scenario
from .regulator import (FollowerModel, assemble_closed_loop, feedforward_gain, place_poles,
                        solve_regulator)
from .scenario import dump_scenario, load_packaged, load_scenario, parse_scenario
from .simulate import Scenario, containment_achieved, containment_error, integrate

__version__ = "0.1.0"
