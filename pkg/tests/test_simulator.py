import warnings

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from oscsync.analysis import compute_sync_report, find_increases
from oscsync.controller import Gains
from oscsync.dynamics import PlanarMassDamper, TwoLinkArm
from oscsync.graph import DirectedTopology
from oscsync.scenario_file import paper_scenario
from oscsync.simulator import (
    NetworkState,
    Scenario,
    SimulationDiverged,
    SpanningTreeWarning,
    _NetworkODE,
    rk4_step,
    run,
    step,
    uniform_scenario,
)


def on_orbit_scenario(model, alpha=1.0, K=20.0, **kw):
    """One follower starting exactly on the leader orbit with exact estimates and s = 0."""
    q0, qd0 = np.array([2.0, 0.0]), np.array([0.0, 1.0])
    return Scenario(
        topology=DirectedTopology.chain(1),
        models=(model,),
        gains=(Gains.build(K, 2.0, 2, model.param_dim),),
        alpha=alpha,
        leader_q=q0,
        leader_qdot=qd0,
        follower_q=q0[None],
        follower_qdot=qd0[None],
        a_hat_init=(model.true_params,),
        q_int_init=(-qd0 / alpha)[None],
        **kw,
    )


class TestScenarioValidation:
    def test_length_mismatch(self):
        sc = paper_scenario()
        with pytest.raises(ValueError, match="one entry per follower"):
            Scenario(**{**sc.__dict__, "models": sc.models[:-1]})

    def test_bad_dt_and_integrator(self):
        with pytest.raises(ValueError):
            paper_scenario(dt=0.0)
        with pytest.raises(ValueError):
            paper_scenario(integrator="leapfrog")

    def test_dof_mismatch(self):
        with pytest.raises(ValueError, match="dof"):
            uniform_scenario(DirectedTopology.chain(1), [PlanarMassDamper(1, 1, dof=3)], [[0, 0]])


class TestStep:
    # the arm's smallest inertia eigenvalue is ~0.07, so K=20 would sit near the
    # RK4 stability boundary at dt=5 ms; a softer gain keeps truncation error small
    @pytest.mark.parametrize("model,K", [(PlanarMassDamper(1.4, 0.6), 20.0), (TwoLinkArm(), 1.0)], ids=repr)
    def test_stays_on_leader_orbit(self, model, K):
        sc = on_orbit_scenario(model, K=K)
        state = NetworkState.initial(sc)
        for k in range(400):
            state = step(sc, state, k * sc.dt)
            leader = sc.leader_at((k + 1) * sc.dt)
            assert np.abs(state.q[0] - leader.q0).max() < 1e-8
            assert np.abs(state.qdot[0] - leader.q0_dot).max() < 1e-8
        np.testing.assert_allclose(state.a_hat[0], model.true_params, atol=1e-8)

    def test_decoupled_follower_is_its_own_oscillator(self):
        """No edges, exact estimates, s(0) = 0: the follower obeys q'' = -alpha q."""
        alpha = 2.0
        model = PlanarMassDamper(1.3, 0.0)
        q_init, q_int_init = np.array([1.0, -0.5]), np.array([0.2, 0.4])
        sc = Scenario(
            topology=DirectedTopology(1, np.zeros((2, 2))),
            models=(model,),
            gains=(Gains.build(20.0, 2.0, 2, 2),),
            alpha=alpha,
            leader_q=np.array([2.0, 0.0]),
            leader_qdot=np.array([0.0, 1.0]),
            follower_q=q_init[None],
            follower_qdot=(-alpha * q_int_init)[None],
            a_hat_init=(model.true_params,),
            q_int_init=q_int_init[None],
        )
        state = NetworkState.initial(sc)
        for k in range(2000):
            state = step(sc, state, k * sc.dt)
        oracle = solve_ivp(
            lambda t, y: np.concatenate((y[2:], -alpha * y[:2])),
            (0.0, 2000 * sc.dt),
            np.concatenate((q_init, -alpha * q_int_init)),
            method="DOP853", rtol=1e-12, atol=1e-13,
        )
        np.testing.assert_allclose(state.q[0], oracle.y[:2, -1], atol=1e-9)
        np.testing.assert_allclose(state.qdot[0], oracle.y[2:, -1], atol=1e-9)

    def test_rk4_local_error_order(self):
        sc = paper_scenario()
        ode = _NetworkODE(sc)
        y = ode.pack(NetworkState.initial(sc))

        def local_error(h):
            full = rk4_step(ode.derivative, 0.0, y, h)
            halves = rk4_step(ode.derivative, h / 2, rk4_step(ode.derivative, 0.0, y, h / 2), h / 2)
            return np.abs(full - halves).max()

        ratio = local_error(0.01) / local_error(0.005)
        assert 28 < ratio < 36

    def test_divergence_aborts(self):
        sc = paper_scenario(dt=0.2, integrator="zoh-euler", t_final=400.0)
        with pytest.raises(SimulationDiverged) as info:
            run(sc)
        assert 1 <= info.value.agent <= 9

    def test_nan_reports_agent(self):
        sc = paper_scenario()
        state = NetworkState.initial(sc)
        state.qdot[3, 1] = np.nan
        with pytest.raises(SimulationDiverged, match="follower 4"):
            step(sc, state, 0.0)


class TestRun:
    def test_zero_horizon(self):
        sc = paper_scenario(t_final=0.0)
        traj = run(sc)
        assert len(traj) == 1
        np.testing.assert_array_equal(traj.q[0], sc.follower_q)
        np.testing.assert_array_equal(traj.leader_q[0], sc.leader_q)

    @pytest.mark.parametrize("t_final,dt,stride", [(1.0, 0.005, 10), (1.0, 0.005, 7), (0.5, 0.01, 1)])
    def test_sample_count(self, t_final, dt, stride):
        traj = run(paper_scenario(t_final=t_final, dt=dt, record_stride=stride))
        assert len(traj) == int(np.floor(t_final / (dt * stride) + 1e-9)) + 1
        np.testing.assert_allclose(np.diff(traj.t), dt * stride, rtol=1e-12)

    def test_deterministic(self):
        a, b = run(paper_scenario(t_final=2.0)), run(paper_scenario(t_final=2.0))
        for name in ("q", "qdot", "q_int", "s", "tau", "V"):
            assert np.array_equal(getattr(a, name), getattr(b, name))

    def test_warns_without_spanning_tree(self):
        with pytest.warns(SpanningTreeWarning):
            run(paper_scenario(t_final=0.1, break_tree=True))

    def test_vectorized_path_matches_generic(self):
        sc = paper_scenario()
        ode = _NetworkODE(sc)
        assert ode.vectorized
        rng = np.random.default_rng(7)
        for t in (0.0, 1.3, 17.0):
            y = rng.normal(size=ode.size)
            fast = ode.evaluate(t, y, vectorized=True)
            slow = ode.evaluate(t, y, vectorized=False)
            for f, s in zip(fast, slow):
                np.testing.assert_allclose(f, s, rtol=1e-13, atol=1e-13)

    def test_zoh_euler_residual_is_first_order(self):
        """Forward Euler leaves an O(dt) tracking residual instead of converging."""
        tails = []
        for dt in (0.005, 0.0025):
            traj = run(paper_scenario(integrator="zoh-euler", dt=dt, t_final=60.0, record_stride=int(0.05 / dt)))
            report = compute_sync_report(traj, 0.05)
            tails.append(report.e_q[traj.t >= 50.0].max())
        assert tails[0] < 0.1
        assert 1.8 < tails[0] / tails[1] < 2.2

    def test_two_link_network(self):
        """Arms with gravity, generic integration path, V strictly nonincreasing."""
        models = [TwoLinkArm(), TwoLinkArm(m2=1.5, lc2=0.6), TwoLinkArm(m1=0.8)]
        topo = DirectedTopology.from_edges(3, [(1, 0, 1.0), (2, 1, 1.0), (3, 0, 0.5), (3, 2, 0.5)])
        sc = uniform_scenario(
            topo, models, [[0.5, 0.2], [-0.3, 0.4], [0.1, -0.6]], K=10.0, Gamma=1.0,
            leader_q=(0.4, 0.0), leader_qdot=(0.0, 0.3), t_final=100.0,
        )
        assert not _NetworkODE(sc).vectorized
        traj = run(sc)
        assert not find_increases(traj.V)
        # the gravity estimates adapt slowly, so the error only settles after ~75 s
        report = compute_sync_report(traj, 0.05)
        assert report.converged
        assert report.final_e_q < 0.05


class TestPaperRun:
    def test_leader_trace_exact(self, paper_run):
        _, traj = paper_run
        expected = np.stack((2 * np.cos(traj.t), np.sin(traj.t)), axis=1)
        assert np.abs(traj.leader_q - expected).max() < 1e-12

    def test_total_lyapunov_nonincreasing(self, paper_run):
        _, traj = paper_run
        total = traj.V.sum(axis=1)
        assert np.all(np.diff(total) <= 1e-6 * max(1.0, total[0]))

    def test_sliding_vector_bounded_by_initial_energy(self, paper_run):
        sc, traj = paper_run
        for i, model in enumerate(sc.models):
            bound = np.sqrt(2 * traj.V[0, i] / model.mass) + 1e-6
            assert np.linalg.norm(traj.s[:, i], axis=1).max() <= bound

    def test_estimates_recorded_not_asserted(self, paper_run):
        _, traj = paper_run
        assert len(traj.a_hat) == 9
        assert all(a.shape == (len(traj), 2) and np.all(np.isfinite(a)) for a in traj.a_hat)

    def test_broken_tree_does_not_converge(self, broken_run):
        _, traj = broken_run
        report = compute_sync_report(traj, 0.05)
        assert not report.converged
        assert report.final_e_q > 0.1
