"""Virtual leader: the harmonic oscillator ``q0'' = -alpha q0``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LeaderState:
    q0: np.ndarray
    q0_dot: np.ndarray
    q0_int: np.ndarray
    alpha: float

    def energy(self) -> np.ndarray:
        """Per-coordinate ``alpha q0^2 + q0'^2``, conserved along exact trajectories."""
        return self.alpha * self.q0**2 + self.q0_dot**2


def leader_closed_form(t: float, q0_init, q0dot_init, alpha: float) -> LeaderState:
    """Exact leader state at time ``t`` from its initial position and velocity.

    The running integral ``int_0^t q0`` is returned alongside, since the
    followers' integral action is compared against it.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    q0_init = np.asarray(q0_init, dtype=float)
    q0dot_init = np.asarray(q0dot_init, dtype=float)
    w = math.sqrt(alpha)
    c, s = math.cos(w * t), math.sin(w * t)
    return LeaderState(
        q0=c * q0_init + (s / w) * q0dot_init,
        q0_dot=-w * s * q0_init + c * q0dot_init,
        q0_int=(s / w) * q0_init + ((1.0 - c) / alpha) * q0dot_init,
        alpha=alpha,
    )


def leader_acceleration(state: LeaderState) -> np.ndarray:
    return -state.alpha * state.q0


def leader_derivative(y: np.ndarray, alpha: float) -> np.ndarray:
    """Right-hand side for ``y = [int q0, q0, q0']`` stacked as a ``(3, m)`` array.

    Only used to cross-check a numerical integrator against the closed form;
    simulations always evaluate the leader exactly.
    """
    q0_int, q0, q0_dot = y
    return np.stack((q0, q0_dot, -alpha * q0))
