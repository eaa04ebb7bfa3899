"""Acceptance gate: the eight end-to-end criteria at their stated tolerances.

Each test prints one ``[PASS]`` / ``[FAIL]`` line with the measured numbers,
visible even without ``-s``.  Run just this gate with

    pytest tests/test_acceptance.py -v
"""

import math
import time

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from oscsync.analysis import compute_sync_report
from oscsync.dynamics import PlanarMassDamper, TwoLinkArm, inverse_dynamics
from oscsync.graph import (
    build_laplacian,
    decompose,
    eigenvalues,
    full_system_poles,
    has_spanning_tree_rooted_at_leader,
    match_spectra,
    reduced_system_poles,
    similarity_transform,
)
from oscsync.leader import leader_closed_form, leader_derivative
from oscsync.scenario_file import paper_scenario
from oscsync.simulator import rk4_step, run
from oscsync.verification import random_broken_topology, random_spanning_topology

TRIALS = 200
MAX_N = 8
DRAWS = 1000


@pytest.fixture
def report_line(capsys):
    def emit(number, title, passed, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if passed else 'FAIL'}] criterion {number} {title}: {detail}")
    return emit


@pytest.fixture(scope="module")
def topologies():
    rng = np.random.default_rng(20240601)
    trees, broken = [], []
    for _ in range(TRIALS):
        n = int(rng.integers(1, MAX_N + 1))
        trees.append(random_spanning_topology(rng, n))
        broken.append(random_broken_topology(rng, n))
    assert all(map(has_spanning_tree_rooted_at_leader, trees))
    assert not any(map(has_spanning_tree_rooted_at_leader, broken))
    return trees, broken


def test_1_nine_agent_scenario_reproduction(paper_run, report_line):
    _, traj = paper_run
    started = time.perf_counter()
    run(paper_scenario())
    runtime = time.perf_counter() - started

    report = compute_sync_report(traj, 0.05)
    tail = traj.t >= traj.t[-1] - 10.0
    e_q, e_v = report.e_q[tail].max(), report.e_v[tail].max()
    leader_exact = np.stack((2 * np.cos(traj.t), np.sin(traj.t)), axis=1)
    leader_err = np.abs(traj.leader_q - leader_exact).max()
    ok = e_q < 0.05 and e_v < 0.05 and leader_err < 1e-12 and traj.t[-1] == pytest.approx(60.0)
    report_line(1, "nine-agent scenario", ok,
                f"final-10s max e_q {e_q:.2e}, e_v {e_v:.2e}; leader error {leader_err:.1e}; "
                f"converged at t={report.convergence_time} s; runtime {runtime:.1f} s")
    assert ok


def _laplacian_properties(topology):
    lap = build_laplacian(topology)
    eigs = eigenvalues(lap)
    zero = np.abs(eigs) < 1e-8
    gamma = np.zeros(topology.n + 1)
    gamma[0] = 1.0
    return (
        zero.sum() == 1,
        bool(np.all(eigs[~zero].real > 1e-9)),
        np.abs(gamma @ lap).max() < 1e-12,
        np.abs(lap @ np.ones(topology.n + 1)).max() < 1e-12,
    )


def test_2_laplacian_spectrum(topologies, report_line):
    trees, broken = topologies
    tree_failures = sum(not all(_laplacian_properties(t)) for t in trees)
    broken_passes = sum(all(_laplacian_properties(t)) for t in broken)
    ok = tree_failures == 0 and broken_passes == 0
    report_line(2, "Laplacian spectrum", ok,
                f"{len(trees)} tree topologies with a property failing: {tree_failures}; "
                f"{len(broken)} non-tree topologies with all properties holding: {broken_passes}")
    assert ok


def test_3_similarity_decomposition(topologies, report_line):
    trees, _ = topologies
    worst_block, worst_gap = 0.0, 0.0
    for topo in trees:
        lap = build_laplacian(topo)
        T, T_inv = similarity_transform(topo.n)
        np.testing.assert_allclose(T @ T_inv, np.eye(topo.n + 1), atol=0)
        product = T @ lap @ T_inv
        worst_block = max(worst_block, np.abs(product[0]).max(), np.abs(product[:, 0]).max())
        split = np.concatenate(([0.0], eigenvalues(decompose(lap).L_bar)))
        worst_gap = max(worst_gap, match_spectra(eigenvalues(lap), split))
    ok = worst_block < 1e-12 and worst_gap < 1e-8
    report_line(3, "similarity decomposition", ok,
                f"max off-block {worst_block:.1e}, max spectrum gap {worst_gap:.1e}")
    assert ok


def test_4_reduced_system_poles(topologies, report_line):
    trees, _ = topologies
    worst_re, worst_gap = -math.inf, 0.0
    for topo in trees:
        lap = build_laplacian(topo)
        dec = decompose(lap)
        for alpha in (0.25, 1.0, 4.0):
            reduced = reduced_system_poles(dec, alpha)
            worst_re = max(worst_re, reduced.real.max())
            leader = np.array([1j, -1j]) * math.sqrt(alpha)
            worst_gap = max(worst_gap, match_spectra(full_system_poles(lap, alpha),
                                                     np.concatenate((leader, reduced))))
    ok = worst_re < -1e-6 and worst_gap < 1e-8
    report_line(4, "reduced-system poles", ok,
                f"max Re(pole) {worst_re:.3e}, full-vs-split spectrum gap {worst_gap:.1e}")
    assert ok


def test_5_model_properties(report_line):
    rng = np.random.default_rng(99)
    details, ok = [], True

    def draw(model):
        return [rng.uniform(-3, 3, model.dof) for _ in range(4)]

    for label, model in (("mass-damper", PlanarMassDamper(1.7, 0.4)),
                         ("arm", TwoLinkArm()), ("arm g=0", TwoLinkArm(g=0.0))):
        worst_reg, min_eig = 0.0, math.inf
        for _ in range(DRAWS):
            q, qd, z, zd = draw(model)
            residual = inverse_dynamics(model, q, qd, z, zd) - model.regressor(q, qd, z, zd) @ model.true_params
            worst_reg = max(worst_reg, np.abs(residual).max())
            min_eig = min(min_eig, np.linalg.eigvalsh(model.mass_matrix(q)).min())
        ok &= worst_reg < 1e-10 and min_eig > 0
        details.append(f"{label}: regressor {worst_reg:.1e}, min eig(M) {min_eig:.3f}")

    arm, worst_skew = TwoLinkArm(), 0.0
    for _ in range(DRAWS):
        q, qd, x, _ = draw(arm)
        worst_skew = max(worst_skew, abs(x @ (arm.mass_matrix_dot(q, qd) - 2 * arm.coriolis_matrix(q, qd)) @ x))
    ok &= worst_skew < 1e-8
    details.append(f"arm |x^T(M'-2C)x| {worst_skew:.1e}")

    md, worst_diss = PlanarMassDamper(1.3, 0.6), 0.0
    for _ in range(DRAWS):
        q, qd, x, _ = draw(md)
        quad = x @ (md.mass_matrix_dot(q, qd) - 2 * md.coriolis_matrix(q, qd)) @ x
        worst_diss = max(worst_diss, abs(quad + 2 * md.damping * (x @ x)) / max(1.0, x @ x))
    # "exact" up to one rounding of the quadratic form
    ok &= worst_diss < 1e-14
    details.append(f"mass-damper dissipativity deviation {worst_diss:.1e}")

    report_line(5, f"model properties ({DRAWS} draws per model)", ok, "; ".join(details))
    assert ok


def test_6_lyapunov_monotone(paper_run, report_line):
    _, traj = paper_run
    V = traj.V
    tol = 1e-6 * np.maximum(1.0, V[0])
    increase = np.diff(V, axis=0) - tol
    violations = int((increase > 0).sum())
    ok = violations == 0
    report_line(6, "Lyapunov monotonicity", ok,
                f"{violations} violations over {V.shape[0] - 1} sample steps x {V.shape[1]} followers; "
                f"largest increase {np.diff(V, axis=0).max():.1e}")
    assert ok


def test_7_integrator_oracle(paper_run, report_line):
    q0, qd0, alpha, dt = np.array([2.0, 0.0]), np.array([0.0, 1.0]), 1.0, 1e-3
    y = np.stack((np.zeros(2), q0, qd0))
    worst = 0.0
    for k in range(20000):
        y = rk4_step(lambda t, v: leader_derivative(v, alpha), k * dt, y, dt)
        exact = leader_closed_form((k + 1) * dt, q0, qd0, alpha)
        worst = max(worst, np.abs(y - np.stack((exact.q0_int, exact.q0, exact.q0_dot))).max())
    # the closed form itself against an adaptive high-order solver
    ref = solve_ivp(lambda t, v: np.r_[v[2:4], v[4:], -alpha * v[2:4]], (0, 20), np.r_[0, 0, q0, qd0],
                    method="DOP853", rtol=1e-12, atol=1e-12)
    closed = leader_closed_form(20.0, q0, qd0, alpha)
    closed_gap = np.abs(ref.y[2:4, -1] - closed.q0).max()

    _, traj = paper_run
    half = run(paper_scenario(dt=0.0025, record_stride=20))
    halving = np.abs(half.q[-1] - traj.q[-1]).max()
    ok = worst < 1e-6 and closed_gap < 1e-8 and halving < 1e-6
    report_line(7, "integrator oracle", ok,
                f"leader RK4 max error {worst:.1e} over 20 s; closed form vs DOP853 {closed_gap:.1e}; "
                f"dt-halving final position change {halving:.1e}")
    assert ok


def test_8_broken_tree_does_not_synchronize(broken_run, report_line):
    sc, traj = broken_run
    report = compute_sync_report(traj, 0.05)
    ok = not has_spanning_tree_rooted_at_leader(sc.topology) and report.final_e_q > 0.1
    report_line(8, "spanning tree necessity", ok,
                f"final e_q {report.final_e_q:.3f}, converged: {report.converged}")
    assert ok
