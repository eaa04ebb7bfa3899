"""Distributed adaptive control law for the followers.

For follower ``i`` with neighbor set ``N_i`` (possibly including the leader):

    qdot_r  = -sum_j w_ij (q_i - q_j) - alpha * int_0^t q_i
    qddot_r = -sum_j w_ij (qdot_i - qdot_j) - alpha * q_i
    s       = qdot_i - qdot_r
    tau     = -K s + Y(q, qdot, qdot_r, qddot_r) a_hat
    a_hat'  = -Gamma Y^T s

The controller never sees the true parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import AgentModel


def _as_gain_matrix(value, dim: int, name: str) -> np.ndarray:
    a = np.asarray(value, dtype=float)
    if a.ndim == 0:
        a = float(a) * np.eye(dim)
    if a.shape != (dim, dim):
        raise ValueError(f"{name} must be a scalar or a {dim}x{dim} matrix, got shape {a.shape}")
    if np.max(np.abs(a - a.T)) > 1e-14:
        raise ValueError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise ValueError(f"{name} must be positive definite") from None
    return a


@dataclass(frozen=True)
class Gains:
    """Feedback gain ``K`` (dof x dof) and adaptation gain ``Gamma`` (param_dim x param_dim)."""

    K: np.ndarray
    Gamma: np.ndarray

    @classmethod
    def build(cls, K, Gamma, dof: int, param_dim: int) -> "Gains":
        """Accepts scalars (expanded to scaled identities) or full matrices."""
        return cls(_as_gain_matrix(K, dof, "K"), _as_gain_matrix(Gamma, param_dim, "Gamma"))


@dataclass
class ControllerState:
    q_int: np.ndarray
    a_hat: np.ndarray


@dataclass(frozen=True)
class Neighbor:
    weight: float
    q: np.ndarray
    qdot: np.ndarray


NeighborView = Sequence[Neighbor]


def reference_velocity(q_i, neighbors: NeighborView, q_int, alpha: float) -> np.ndarray:
    out = -alpha * np.asarray(q_int, dtype=float)
    for nb in neighbors:
        out = out - nb.weight * (q_i - nb.q)
    return out


def reference_acceleration(q_i, qdot_i, neighbors: NeighborView, alpha: float) -> np.ndarray:
    out = -alpha * np.asarray(q_i, dtype=float)
    for nb in neighbors:
        out = out - nb.weight * (qdot_i - nb.qdot)
    return out


def sliding_vector(qdot_i, qdot_r) -> np.ndarray:
    return np.asarray(qdot_i) - np.asarray(qdot_r)


def control_torque(model: AgentModel, q_i, qdot_i, qdot_r, qddot_r, s_i, a_hat, K) -> np.ndarray:
    """Certainty-equivalence torque with the regressor evaluated along the reference."""
    Y = model.regressor(q_i, qdot_i, qdot_r, qddot_r)
    return -K @ s_i + Y @ a_hat


def adaptation_rate(model: AgentModel, q_i, qdot_i, qdot_r, qddot_r, s_i, Gamma) -> np.ndarray:
    Y = model.regressor(q_i, qdot_i, qdot_r, qddot_r)
    return -Gamma @ (Y.T @ s_i)


def network_references(laplacian: np.ndarray, q_all, qdot_all, q_int, alpha: float):
    """Reference velocity and acceleration for every follower at once.

    Args:
        laplacian: ``(n+1, n+1)`` Laplacian; row ``i`` holds the neighbor sums
            ``sum_j w_ij (x_i - x_j)`` for follower ``i``.
        q_all, qdot_all: ``(n+1, m)`` stacked positions/velocities, leader first.
        q_int: ``(n, m)`` follower position integrals.

    Returns:
        ``(qdot_r, qddot_r)``, each ``(n, m)``.
    """
    rows = laplacian[1:]
    qdot_r = -rows @ q_all - alpha * q_int
    qddot_r = -rows @ qdot_all - alpha * q_all[1:]
    return qdot_r, qddot_r


def neighbor_view(weights: np.ndarray, i: int, q_all, qdot_all) -> list[Neighbor]:
    """Collect what follower ``i`` observes from the stacked network state."""
    return [
        Neighbor(float(weights[i, j]), q_all[j], qdot_all[j])
        for j in np.flatnonzero(weights[i])
    ]
