"""Fixed-step simulation of the leader/follower network.

The followers, their position integrals and their parameter estimates are
integrated together as one coupled ODE; the leader is always evaluated from
its closed form at whatever time a stage needs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .analysis import lyapunov_value
from .controller import Gains, network_references
from .dynamics import AgentModel, PlanarMassDamper
from .graph import DirectedTopology, build_laplacian, has_spanning_tree_rooted_at_leader
from .leader import LeaderState, leader_closed_form

INTEGRATORS = ("rk4", "zoh-euler")
DIVERGENCE_BOUND = 1e12


class SimulationDiverged(RuntimeError):
    def __init__(self, agent: int, t: float, detail: str = ""):
        self.agent = agent
        self.t = t
        super().__init__(f"non-finite state for follower {agent} at t={t:.6g}s{detail}")


class SpanningTreeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Scenario:
    """Everything needed to reproduce one run.

    ``follower_q`` / ``follower_qdot`` / ``q_int_init`` are ``(n, m)``;
    ``a_hat_init`` holds one vector per follower since parameter dimensions
    may differ between models.
    """

    topology: DirectedTopology
    models: tuple[AgentModel, ...]
    gains: tuple[Gains, ...]
    alpha: float
    leader_q: np.ndarray
    leader_qdot: np.ndarray
    follower_q: np.ndarray
    follower_qdot: np.ndarray
    a_hat_init: tuple[np.ndarray, ...]
    dt: float = 0.005
    t_final: float = 60.0
    record_stride: int = 10
    integrator: str = "rk4"
    q_int_init: np.ndarray | None = None

    def __post_init__(self):
        n = self.topology.n
        set_ = lambda name, value: object.__setattr__(self, name, value)  # noqa: E731
        set_("models", tuple(self.models))
        set_("gains", tuple(self.gains))
        for name in ("leader_q", "leader_qdot", "follower_q", "follower_qdot"):
            set_(name, np.array(getattr(self, name), dtype=float))
        set_("a_hat_init", tuple(np.array(a, dtype=float) for a in self.a_hat_init))
        m = self.leader_q.shape[0] if self.leader_q.ndim == 1 else -1

        if len(self.models) != n or len(self.gains) != n or len(self.a_hat_init) != n:
            raise ValueError(f"models, gains and a_hat_init need one entry per follower (n={n})")
        if self.leader_q.shape != (m,) or self.leader_qdot.shape != (m,):
            raise ValueError("leader position and velocity must be vectors of equal length")
        for name in ("follower_q", "follower_qdot"):
            if getattr(self, name).shape != (n, m):
                raise ValueError(f"{name} must have shape {(n, m)}")
        if self.q_int_init is None:
            set_("q_int_init", np.zeros((n, m)))
        else:
            set_("q_int_init", np.array(self.q_int_init, dtype=float))
            if self.q_int_init.shape != (n, m):
                raise ValueError(f"q_int_init must have shape {(n, m)}")
        for i, (model, gains, a_hat) in enumerate(zip(self.models, self.gains, self.a_hat_init), 1):
            if model.dof != m:
                raise ValueError(f"follower {i}: model dof {model.dof} != leader dimension {m}")
            if gains.K.shape != (m, m) or gains.Gamma.shape != (model.param_dim,) * 2:
                raise ValueError(f"follower {i}: gain shapes do not match the model")
            if a_hat.shape != (model.param_dim,):
                raise ValueError(f"follower {i}: a_hat_init must have length {model.param_dim}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_final >= 0:
            raise ValueError(f"t_final must be nonnegative, got {self.t_final}")
        if self.record_stride < 1:
            raise ValueError(f"record_stride must be >= 1, got {self.record_stride}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")

    @property
    def n(self) -> int:
        return self.topology.n

    @property
    def m(self) -> int:
        return self.leader_q.shape[0]

    @property
    def num_steps(self) -> int:
        return int(math.floor(self.t_final / self.dt + 1e-9))

    def leader_at(self, t: float) -> LeaderState:
        return leader_closed_form(t, self.leader_q, self.leader_qdot, self.alpha)

    def with_overrides(self, **kw) -> "Scenario":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


@dataclass
class NetworkState:
    """Follower-side state: positions, velocities, position integrals, estimates."""

    q: np.ndarray
    qdot: np.ndarray
    q_int: np.ndarray
    a_hat: list[np.ndarray]

    @classmethod
    def initial(cls, scenario: Scenario) -> "NetworkState":
        return cls(
            q=scenario.follower_q.copy(),
            qdot=scenario.follower_qdot.copy(),
            q_int=scenario.q_int_init.copy(),
            a_hat=[a.copy() for a in scenario.a_hat_init],
        )


@dataclass
class Trajectory:
    """Recorded samples on a uniform grid.

    Shapes: ``t`` is ``(K,)``; leader arrays ``(K, m)``; follower arrays
    ``(K, n, m)``; ``V`` is ``(K, n)``; ``a_hat[i]`` is ``(K, param_dim_i)``.
    """

    t: np.ndarray
    leader_q: np.ndarray
    leader_qdot: np.ndarray
    leader_q_int: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    q_int: np.ndarray
    a_hat: list[np.ndarray]
    s: np.ndarray
    tau: np.ndarray
    V: np.ndarray
    alpha: float = 1.0
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.q.shape[1]

    @property
    def m(self) -> int:
        return self.q.shape[2]

    def __len__(self) -> int:
        return self.t.shape[0]


class _NetworkODE:
    """Flat-vector view of the closed loop, ``y = [q, qdot, q_int, a_hat...]``."""

    def __init__(self, scenario: Scenario):
        self.sc = scenario
        self.n, self.m = scenario.n, scenario.m
        self.laplacian = build_laplacian(scenario.topology)
        block = self.n * self.m
        self.block = block
        offsets = np.cumsum([0] + [mod.param_dim for mod in scenario.models])
        self.a_slices = [slice(3 * block + a, 3 * block + b) for a, b in zip(offsets[:-1], offsets[1:])]
        self.size = 3 * block + int(offsets[-1])
        self.vectorized = all(isinstance(mod, PlanarMassDamper) for mod in scenario.models)
        if self.vectorized:
            self.K = np.stack([g.K for g in scenario.gains])
            self.Gamma = np.stack([g.Gamma for g in scenario.gains])
            self.mass = np.array([mod.mass for mod in scenario.models])[:, None]
            self.damping = np.array([mod.damping for mod in scenario.models])[:, None]

    def pack(self, state: NetworkState) -> np.ndarray:
        return np.concatenate(
            [state.q.ravel(), state.qdot.ravel(), state.q_int.ravel(), *state.a_hat]
        )

    def unpack(self, y: np.ndarray) -> NetworkState:
        n, m, b = self.n, self.m, self.block
        return NetworkState(
            q=y[:b].reshape(n, m).copy(),
            qdot=y[b : 2 * b].reshape(n, m).copy(),
            q_int=y[2 * b : 3 * b].reshape(n, m).copy(),
            a_hat=[y[sl].copy() for sl in self.a_slices],
        )

    def evaluate(self, t: float, y: np.ndarray, vectorized: bool | None = None):
        """Return ``(dy/dt, s, tau)`` at time ``t``."""
        sc, n, m, b = self.sc, self.n, self.m, self.block
        q = y[:b].reshape(n, m)
        qdot = y[b : 2 * b].reshape(n, m)
        q_int = y[2 * b : 3 * b].reshape(n, m)
        leader = sc.leader_at(t)
        q_all = np.vstack((leader.q0, q))
        qdot_all = np.vstack((leader.q0_dot, qdot))
        qdot_r, qddot_r = network_references(self.laplacian, q_all, qdot_all, q_int, sc.alpha)
        s = qdot - qdot_r

        dy = np.empty_like(y)
        dy[:b] = qdot.ravel()
        dy[2 * b : 3 * b] = q.ravel()
        qddot = dy[b : 2 * b].reshape(n, m)
        if self.vectorized if vectorized is None else vectorized:
            # all followers are mass-dampers: Y = [qddot_r | qdot_r], a_hat stacked (n, 2)
            a_hat = y[3 * b :].reshape(n, 2)
            tau = (
                -np.einsum("nij,nj->ni", self.K, s)
                + a_hat[:, :1] * qddot_r
                + a_hat[:, 1:] * qdot_r
            )
            qddot[:] = (tau - self.damping * qdot) / self.mass
            Yt_s = np.stack((np.einsum("ni,ni->n", qddot_r, s), np.einsum("ni,ni->n", qdot_r, s)), axis=1)
            dy[3 * b :] = -np.einsum("nij,nj->ni", self.Gamma, Yt_s).ravel()
            return dy, s, tau
        tau = np.empty((n, m))
        for i, (model, gains, sl) in enumerate(zip(sc.models, sc.gains, self.a_slices)):
            Y = model.regressor(q[i], qdot[i], qdot_r[i], qddot_r[i])
            tau[i] = -gains.K @ s[i] + Y @ y[sl]
            rhs = tau[i] - model.coriolis_matrix(q[i], qdot[i]) @ qdot[i] - model.gravity(q[i])
            qddot[i] = model.solve_mass(q[i], rhs)
            dy[sl] = -gains.Gamma @ (Y.T @ s[i])
        return dy, s, tau

    def derivative(self, t: float, y: np.ndarray) -> np.ndarray:
        return self.evaluate(t, y)[0]

    def check_finite(self, t: float, y: np.ndarray):
        bad = ~np.isfinite(y) | (np.abs(y) > DIVERGENCE_BOUND)
        if not bad.any():
            return
        idx = int(np.flatnonzero(bad)[0])
        if idx < 3 * self.block:
            agent = (idx % self.block) // self.m + 1
        else:
            agent = next(i for i, sl in enumerate(self.a_slices, 1) if sl.start <= idx < sl.stop)
        raise SimulationDiverged(agent, t)


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, y: np.ndarray, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step of ``y' = f(t, y)``."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def euler_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, y: np.ndarray, dt: float) -> np.ndarray:
    # torque and adaptation rate are frozen at the start of the step
    return y + dt * f(t, y)


_STEPPERS = {"rk4": rk4_step, "zoh-euler": euler_step}


def step(scenario: Scenario, state: NetworkState, t: float, _ode: _NetworkODE | None = None) -> NetworkState:
    """Advance every follower by one step of ``scenario.dt`` starting at time ``t``.

    Raises:
        SimulationDiverged: if any state component becomes NaN or exceeds 1e12.
    """
    ode = _ode or _NetworkODE(scenario)
    y = ode.pack(state)
    # zero Laplacian entries turn one NaN into NaN everywhere, so locate it before stepping
    ode.check_finite(t, y)
    y = _STEPPERS[scenario.integrator](ode.derivative, t, y, scenario.dt)
    ode.check_finite(t + scenario.dt, y)
    return ode.unpack(y)


def run(scenario: Scenario) -> Trajectory:
    """Simulate ``[0, t_final]`` and record every ``record_stride`` steps."""
    if not has_spanning_tree_rooted_at_leader(scenario.topology):
        warnings.warn(
            "topology has no spanning tree rooted at the leader; synchronization is not expected",
            SpanningTreeWarning,
            stacklevel=2,
        )
    ode = _NetworkODE(scenario)
    stepper = _STEPPERS[scenario.integrator]
    n, m, dt = scenario.n, scenario.m, scenario.dt
    num_steps = scenario.num_steps
    stride = scenario.record_stride
    num_samples = num_steps // stride + 1

    t_rec = np.empty(num_samples)
    ys = np.empty((num_samples, ode.size))
    s_rec = np.empty((num_samples, n, m))
    tau_rec = np.empty((num_samples, n, m))

    y = ode.pack(NetworkState.initial(scenario))
    ode.check_finite(0.0, y)
    sample = 0
    for k in range(num_steps + 1):
        t = k * dt
        if k % stride == 0:
            _, s_rec[sample], tau_rec[sample] = ode.evaluate(t, y)
            t_rec[sample] = t
            ys[sample] = y
            sample += 1
        if k == num_steps:
            break
        y = stepper(ode.derivative, t, y, dt)
        ode.check_finite(t + dt, y)

    b = ode.block
    leader = [scenario.leader_at(t) for t in t_rec]
    a_hat = [ys[:, sl].copy() for sl in ode.a_slices]
    q = ys[:, :b].reshape(num_samples, n, m)
    V = np.empty((num_samples, n))
    for i, (model, gains) in enumerate(zip(scenario.models, scenario.gains)):
        a_true = model.true_params
        for k in range(num_samples):
            V[k, i] = lyapunov_value(model, q[k, i], s_rec[k, i], a_hat[i][k], a_true, gains.Gamma)

    return Trajectory(
        t=t_rec,
        leader_q=np.array([ls.q0 for ls in leader]),
        leader_qdot=np.array([ls.q0_dot for ls in leader]),
        leader_q_int=np.array([ls.q0_int for ls in leader]),
        q=q.copy(),
        qdot=ys[:, b : 2 * b].reshape(num_samples, n, m).copy(),
        q_int=ys[:, 2 * b : 3 * b].reshape(num_samples, n, m).copy(),
        a_hat=a_hat,
        s=s_rec,
        tau=tau_rec,
        V=V,
        alpha=scenario.alpha,
        meta={"dt": dt, "integrator": scenario.integrator, "record_stride": stride},
    )


def uniform_scenario(
    topology: DirectedTopology,
    models: Sequence[AgentModel],
    follower_q,
    *,
    K=20.0,
    Gamma=2.0,
    alpha: float = 1.0,
    leader_q=(2.0, 0.0),
    leader_qdot=(0.0, 1.0),
    follower_qdot=None,
    **kw,
) -> Scenario:
    """Convenience constructor: identical scalar gains and zero initial estimates."""
    follower_q = np.asarray(follower_q, dtype=float)
    gains = [Gains.build(K, Gamma, mod.dof, mod.param_dim) for mod in models]
    return Scenario(
        topology=topology,
        models=tuple(models),
        gains=tuple(gains),
        alpha=alpha,
        leader_q=np.asarray(leader_q, dtype=float),
        leader_qdot=np.asarray(leader_qdot, dtype=float),
        follower_q=follower_q,
        follower_qdot=np.zeros_like(follower_q) if follower_qdot is None else follower_qdot,
        a_hat_init=tuple(np.zeros(mod.param_dim) for mod in models),
        **kw,
    )
