"""Euler-Lagrange agent models ``M(q) q'' + C(q, q') q' + g(q) = tau``.

Every model is linearly parameterized:
``M(q) zeta' + C(q, q') zeta + g(q) = Y(q, q', zeta, zeta') a``
with ``a`` a constant vector of physical parameters.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve


class PositiveDefinitenessError(np.linalg.LinAlgError):
    """Inertia matrix failed to factor; the model is broken."""


class AgentModel(ABC):
    """Interface shared by all follower models."""

    dof: int
    param_dim: int

    @abstractmethod
    def mass_matrix(self, q: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def coriolis_matrix(self, q: np.ndarray, qdot: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def gravity(self, q: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def regressor(self, q, qdot, zeta, zeta_dot) -> np.ndarray:
        """``(dof, param_dim)`` matrix ``Y`` with ``Y a = M zeta' + C zeta + g``."""

    @property
    @abstractmethod
    def true_params(self) -> np.ndarray: ...

    def mass_matrix_dot(self, q: np.ndarray, qdot: np.ndarray) -> np.ndarray:
        """Time derivative of ``M(q(t))``; central difference along ``qdot`` unless overridden."""
        h = 1e-6
        return (self.mass_matrix(q + h * qdot) - self.mass_matrix(q - h * qdot)) / (2 * h)

    def solve_mass(self, q: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        """Solve ``M(q) x = rhs`` by Cholesky factorization."""
        try:
            factor = cho_factor(self.mass_matrix(q))
        except np.linalg.LinAlgError as exc:
            raise PositiveDefinitenessError(
                f"{type(self).__name__}: inertia matrix is not positive definite at q={q}"
            ) from exc
        return cho_solve(factor, rhs)

    def to_dict(self) -> dict:
        raise NotImplementedError


def _check_dims(model: AgentModel, **vectors):
    for name, v in vectors.items():
        if np.shape(v) != (model.dof,):
            raise ValueError(f"{name} must have shape ({model.dof},), got {np.shape(v)}")


def inverse_dynamics(model: AgentModel, q, qdot, zeta, zeta_dot) -> np.ndarray:
    """Torque ``M(q) zeta' + C(q, q') zeta + g(q)``."""
    _check_dims(model, q=q, qdot=qdot, zeta=zeta, zeta_dot=zeta_dot)
    return (
        model.mass_matrix(q) @ zeta_dot
        + model.coriolis_matrix(q, qdot) @ zeta
        + model.gravity(q)
    )


def forward_dynamics(model: AgentModel, q, qdot, tau) -> np.ndarray:
    """Acceleration ``M(q)^-1 (tau - C(q, q') q' - g(q))``."""
    _check_dims(model, q=q, qdot=qdot, tau=tau)
    rhs = tau - model.coriolis_matrix(q, qdot) @ qdot - model.gravity(q)
    return model.solve_mass(q, rhs)


@dataclass(frozen=True)
class PlanarMassDamper(AgentModel):
    """Point mass with linear viscous damping: ``m q'' + c q' = tau``.

    The damping is carried in the Coriolis slot (``C = c I``), so
    ``x^T (M' - 2C) x = -2c |x|^2``: dissipative rather than skew-symmetric.
    Parameters are ``a = [m, c]`` and ``Y = [zeta' | zeta]``.
    """

    mass: float
    damping: float
    dof: int = 2
    param_dim: int = field(default=2, init=False)

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if not self.damping >= 0:
            raise ValueError(f"damping must be nonnegative, got {self.damping}")
        if self.dof < 1:
            raise ValueError(f"dof must be >= 1, got {self.dof}")

    def mass_matrix(self, q):
        return self.mass * np.eye(self.dof)

    def coriolis_matrix(self, q, qdot):
        return self.damping * np.eye(self.dof)

    def gravity(self, q):
        return np.zeros(self.dof)

    def regressor(self, q, qdot, zeta, zeta_dot):
        return np.column_stack((zeta_dot, zeta))

    @property
    def true_params(self):
        return np.array([self.mass, self.damping])

    def mass_matrix_dot(self, q, qdot):
        return np.zeros((self.dof, self.dof))

    def solve_mass(self, q, rhs):
        return rhs / self.mass

    def to_dict(self):
        d = {"model": "mass_damper", "mass": self.mass, "damping": self.damping}
        if self.dof != 2:
            d["dof"] = self.dof
        return d


@dataclass(frozen=True)
class TwoLinkArm(AgentModel):
    """Planar two-link revolute arm, joint angles measured from horizontal.

    With gravity the base parameters are::

        a1 = I1 + I2 + m1 lc1^2 + m2 (l1^2 + lc2^2)
        a2 = m2 l1 lc2
        a3 = I2 + m2 lc2^2
        a4 = (m1 lc1 + m2 l1) g
        a5 = m2 lc2 g

    When ``gravity == 0`` the last two vanish identically and are dropped,
    leaving the three-parameter form.
    """

    m1: float = 1.0
    m2: float = 1.0
    l1: float = 1.0
    l2: float = 1.0
    lc1: float = 0.5
    lc2: float = 0.5
    I1: float = 1.0 / 12.0
    I2: float = 1.0 / 12.0
    g: float = 9.81
    dof: int = field(default=2, init=False)

    def __post_init__(self):
        for name in ("m1", "m2", "l1", "l2", "I1", "I2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def param_dim(self) -> int:
        return 3 if self.g == 0 else 5

    @property
    def true_params(self):
        a = [
            self.I1 + self.I2 + self.m1 * self.lc1**2 + self.m2 * (self.l1**2 + self.lc2**2),
            self.m2 * self.l1 * self.lc2,
            self.I2 + self.m2 * self.lc2**2,
        ]
        if self.g != 0:
            a += [(self.m1 * self.lc1 + self.m2 * self.l1) * self.g, self.m2 * self.lc2 * self.g]
        return np.array(a)

    def mass_matrix(self, q):
        a1, a2, a3 = self.true_params[:3]
        c2 = math.cos(q[1])
        return np.array([[a1 + 2 * a2 * c2, a3 + a2 * c2], [a3 + a2 * c2, a3]])

    def coriolis_matrix(self, q, qdot):
        # Christoffel-symbol form, so M' - 2C is skew-symmetric
        h = self.true_params[1] * math.sin(q[1])
        return h * np.array([[-qdot[1], -(qdot[0] + qdot[1])], [qdot[0], 0.0]])

    def gravity(self, q):
        if self.g == 0:
            return np.zeros(2)
        a4, a5 = self.true_params[3:]
        c12 = math.cos(q[0] + q[1])
        return np.array([a4 * math.cos(q[0]) + a5 * c12, a5 * c12])

    def mass_matrix_dot(self, q, qdot):
        h = -self.true_params[1] * math.sin(q[1]) * qdot[1]
        return h * np.array([[2.0, 1.0], [1.0, 0.0]])

    def regressor(self, q, qdot, zeta, zeta_dot):
        c2, s2 = math.cos(q[1]), math.sin(q[1])
        y = np.zeros((2, self.param_dim))
        y[0, 0] = zeta_dot[0]
        y[0, 1] = (
            c2 * (2 * zeta_dot[0] + zeta_dot[1])
            - s2 * (qdot[1] * zeta[0] + (qdot[0] + qdot[1]) * zeta[1])
        )
        y[0, 2] = zeta_dot[1]
        y[1, 1] = c2 * zeta_dot[0] + s2 * qdot[0] * zeta[0]
        y[1, 2] = zeta_dot[0] + zeta_dot[1]
        if self.g != 0:
            c12 = math.cos(q[0] + q[1])
            y[0, 3] = math.cos(q[0])
            y[0, 4] = c12
            y[1, 4] = c12
        return y

    def to_dict(self):
        return {
            "model": "two_link_arm",
            **{k: getattr(self, k) for k in ("m1", "m2", "l1", "l2", "lc1", "lc2", "I1", "I2", "g")},
        }


MODEL_KINDS = {"mass_damper": PlanarMassDamper, "two_link_arm": TwoLinkArm}


def model_from_dict(entry: dict) -> AgentModel:
    entry = dict(entry)
    kind = entry.pop("model")
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {sorted(MODEL_KINDS)}")
    return MODEL_KINDS[kind](**entry)
