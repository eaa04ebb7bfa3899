"""Adaptive oscillatory synchronization of Euler-Lagrange followers with a virtual leader."""

from .analysis import compute_sync_report, compute_xi, lyapunov_series
from .controller import Gains
from .dynamics import PlanarMassDamper, TwoLinkArm, forward_dynamics, inverse_dynamics
from .graph import (
    DirectedTopology,
    build_laplacian,
    decompose,
    has_spanning_tree_rooted_at_leader,
    reduced_system_poles,
    similarity_transform,
)
from .leader import leader_closed_form
from .scenario_file import load_scenario, paper_scenario
from .simulator import Scenario, Trajectory, run, step

__version__ = "0.1.0"
