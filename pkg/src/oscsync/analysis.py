"""Post-processing of recorded trajectories.

Synchronization errors and convergence times, the Lyapunov-like function of
each follower, and the difference coordinates ``xi_E`` / ``sigma_E`` obtained
from the similarity transform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy.integrate import cumulative_trapezoid

if TYPE_CHECKING:
    from .dynamics import AgentModel
    from .graph import SimilarityDecomposition
    from .simulator import Scenario, Trajectory

LYAPUNOV_REL_TOL = 1e-6


def lyapunov_value(model: "AgentModel", q, s, a_hat, a_true, Gamma) -> float:
    """``V = 1/2 s^T M(q) s + 1/2 (a_hat - a)^T Gamma^-1 (a_hat - a)``."""
    da = np.asarray(a_hat) - np.asarray(a_true)
    kinetic = 0.5 * s @ model.mass_matrix(q) @ s
    estimation = 0.5 * da @ np.linalg.solve(Gamma, da)
    return float(kinetic + estimation)


def lyapunov_tolerance(V0) -> np.ndarray:
    return LYAPUNOV_REL_TOL * np.maximum(1.0, np.asarray(V0))


def find_increases(V: np.ndarray, rel_tol: float = LYAPUNOV_REL_TOL) -> list[tuple[int, int, float]]:
    """Sample-to-sample increases of each column of ``V`` beyond ``rel_tol * max(1, V[0])``.

    Returns ``(sample, agent, increase)`` with 1-based agent indices.
    """
    V = np.atleast_2d(V)
    tol = rel_tol * np.maximum(1.0, V[0])
    dV = np.diff(V, axis=0)
    ks, ids = np.nonzero(dV > tol)
    return [(int(k) + 1, int(i) + 1, float(dV[k, i])) for k, i in zip(ks, ids)]


@dataclass
class LyapunovSeries:
    V: np.ndarray
    violations: list[tuple[int, int, float]] = field(default_factory=list)

    @property
    def max_violation(self) -> float:
        return max((v for *_, v in self.violations), default=0.0)


def lyapunov_series(trajectory: "Trajectory", scenario: "Scenario") -> LyapunovSeries:
    """Evaluate every follower's ``V`` at every sample from the recorded states."""
    K, n = len(trajectory), trajectory.n
    V = np.empty((K, n))
    for i, (model, gains) in enumerate(zip(scenario.models, scenario.gains)):
        a_true = model.true_params
        for k in range(K):
            V[k, i] = lyapunov_value(
                model, trajectory.q[k, i], trajectory.s[k, i], trajectory.a_hat[i][k], a_true, gains.Gamma
            )
    return LyapunovSeries(V=V, violations=find_increases(V))


@dataclass
class SyncReport:
    t: np.ndarray
    e_q: np.ndarray
    e_v: np.ndarray
    threshold: float
    convergence_time: float | None
    lyapunov_violations: int
    max_lyapunov_violation: float

    @property
    def converged(self) -> bool:
        return self.convergence_time is not None

    @property
    def final_e_q(self) -> float:
        return float(self.e_q[-1])

    @property
    def final_e_v(self) -> float:
        return float(self.e_v[-1])

    def to_text(self) -> str:
        conv = (
            f"{self.convergence_time:.6g} s" if self.converged else "not converged"
        )
        lines = [
            f"threshold: {self.threshold:g}",
            f"t_final: {self.t[-1]:.6g} s",
            f"converged: {'yes' if self.converged else 'no'}",
            f"convergence_time: {conv}",
            f"final_position_error: {self.final_e_q:.6e}",
            f"final_velocity_error: {self.final_e_v:.6e}",
            f"max_position_error: {float(self.e_q.max()):.6e}",
            f"lyapunov_violations: {self.lyapunov_violations}",
            f"max_lyapunov_violation: {self.max_lyapunov_violation:.6e}",
        ]
        return "\n".join(lines) + "\n"


def sync_errors(trajectory: "Trajectory") -> tuple[np.ndarray, np.ndarray]:
    """``(e_q, e_v)``: worst follower distance to the leader in position and velocity."""
    e_q = np.linalg.norm(trajectory.q - trajectory.leader_q[:, None, :], axis=2).max(axis=1)
    e_v = np.linalg.norm(trajectory.qdot - trajectory.leader_qdot[:, None, :], axis=2).max(axis=1)
    return e_q, e_v


def convergence_time(t: np.ndarray, *errors: np.ndarray, threshold: float) -> float | None:
    """First sample time after which every error series stays below ``threshold``."""
    below = np.logical_and.reduce([np.asarray(e) < threshold for e in errors])
    if not below[-1]:
        return None
    bad = np.flatnonzero(~below)
    first = 0 if bad.size == 0 else int(bad[-1]) + 1
    return float(t[first])


def compute_sync_report(trajectory: "Trajectory", threshold: float = 0.05) -> SyncReport:
    e_q, e_v = sync_errors(trajectory)
    violations = find_increases(trajectory.V)
    return SyncReport(
        t=trajectory.t,
        e_q=e_q,
        e_v=e_v,
        threshold=threshold,
        convergence_time=convergence_time(trajectory.t, e_q, e_v, threshold=threshold),
        lyapunov_violations=len(violations),
        max_lyapunov_violation=max((v for *_, v in violations), default=0.0),
    )


@dataclass
class XiCoordinates:
    """Difference coordinates over time.

    ``xi_1`` is the leader position ``(K, m)``; ``xi_E[:, k]`` is
    ``q_k - q_{k+1}`` for ``k = 0..n-1`` (``(K, n, m)``); ``sigma_E`` is the
    running integral of ``xi_E`` shifted by ``-d_0 / alpha``.
    """

    t: np.ndarray
    xi_1: np.ndarray
    xi_E: np.ndarray
    sigma_E: np.ndarray


def compute_xi(
    trajectory: "Trajectory", decomp: "SimilarityDecomposition", alpha: float, tol: float = 1e-12
) -> XiCoordinates:
    if decomp.n != trajectory.n:
        raise ValueError(f"decomposition is for n={decomp.n}, trajectory has n={trajectory.n}")
    q_star = np.concatenate((trajectory.leader_q[:, None, :], trajectory.q), axis=1)
    xi_E = q_star[:, :-1, :] - q_star[:, 1:, :]

    via_T = np.einsum("ab,kbm->kam", decomp.T, q_star)
    gap = np.abs(via_T[:, 1:, :] - xi_E).max(initial=0.0)
    scale = max(1.0, float(np.abs(q_star).max(initial=0.0)))
    if gap > tol * scale:
        raise ArithmeticError(f"xi from T disagrees with direct differences by {gap:.3e}")

    d0 = np.zeros(xi_E.shape[1:])
    d0[0] = trajectory.leader_qdot[0]
    sigma_E = cumulative_trapezoid(xi_E, trajectory.t, axis=0, initial=0.0) - d0 / alpha
    return XiCoordinates(t=trajectory.t, xi_1=trajectory.leader_q.copy(), xi_E=xi_E, sigma_E=sigma_E)


def telescoping_bound_violations(trajectory: "Trajectory", xi: XiCoordinates, slack: float = 1e-12) -> int:
    """Count samples where ``max_i |q_i - q_0|`` exceeds the sum of ``|xi_E|`` block norms."""
    e_q, _ = sync_errors(trajectory)
    bound = np.linalg.norm(xi.xi_E, axis=2).sum(axis=1)
    return int(np.sum(e_q > bound + slack))
