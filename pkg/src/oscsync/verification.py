"""Randomized structural and property checks behind ``oscsync verify``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import graph
from .analysis import compute_sync_report, find_increases
from .dynamics import AgentModel, PlanarMassDamper, TwoLinkArm, inverse_dynamics
from .graph import DirectedTopology
from .leader import leader_closed_form, leader_derivative
from .simulator import rk4_step, run


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def random_spanning_topology(rng: np.random.Generator, n: int, extra_p: float = 0.3,
                             weight_range=(0.2, 2.0)) -> DirectedTopology:
    """Random tree rooted at the leader plus random extra edges; weights uniform in ``weight_range``."""
    w = np.zeros((n + 1, n + 1))
    attached = [0]
    for i in rng.permutation(np.arange(1, n + 1)):
        parent = attached[rng.integers(len(attached))]
        w[i, parent] = 1.0
        attached.append(int(i))
    extra = rng.random((n + 1, n + 1)) < extra_p
    extra[0] = False
    np.fill_diagonal(extra, False)
    w[extra] = 1.0
    w[w > 0] = rng.uniform(*weight_range, size=int((w > 0).sum()))
    return DirectedTopology(n, w)


def random_broken_topology(rng: np.random.Generator, n: int, p: float = 0.4,
                           weight_range=(0.2, 2.0)) -> DirectedTopology:
    """Random graph in which a nonempty set of followers has no edge leaving it,
    so those followers cannot reach the leader."""
    w = (rng.random((n + 1, n + 1)) < p).astype(float)
    w[0] = 0.0
    np.fill_diagonal(w, 0.0)
    size = int(rng.integers(1, n + 1))
    closed = rng.choice(np.arange(1, n + 1), size=size, replace=False)
    outside = np.setdiff1d(np.arange(n + 1), closed)
    w[np.ix_(closed, outside)] = 0.0
    w[w > 0] = rng.uniform(*weight_range, size=int((w > 0).sum()))
    return DirectedTopology(n, w)


def laplacian_properties(topology: DirectedTopology) -> dict:
    lap = graph.build_laplacian(topology)
    eigs = graph.eigenvalues(lap)
    zero = np.abs(eigs) < graph.ZERO_EIG_TOL
    gamma = np.zeros(topology.n + 1)
    gamma[0] = 1.0
    return {
        "simple_zero": int(zero.sum()) == 1,
        "rest_in_rhp": bool(np.all(eigs[~zero].real > 1e-9)),
        "left_null": float(np.abs(gamma @ lap).max()) < 1e-12,
        "right_null": float(np.abs(lap @ np.ones(topology.n + 1)).max()) < 1e-12,
    }


def check_laplacian_spectrum(rng, trials: int = 200, max_n: int = 8) -> CheckResult:
    bad_tree, bad_broken = 0, 0
    for _ in range(trials):
        n = int(rng.integers(1, max_n + 1))
        if not all(laplacian_properties(random_spanning_topology(rng, n)).values()):
            bad_tree += 1
        if all(laplacian_properties(random_broken_topology(rng, n)).values()):
            bad_broken += 1
    return CheckResult(
        "Laplacian spectrum (spanning tree <=> simple zero, rest in open RHP)",
        bad_tree == 0 and bad_broken == 0,
        f"{trials} tree / {trials} non-tree topologies; failures {bad_tree} / {bad_broken}",
    )


def check_decomposition(rng, trials: int = 200, max_n: int = 8) -> CheckResult:
    worst_block, worst_spec, mismatched_verdict = 0.0, 0.0, 0
    for _ in range(trials):
        n = int(rng.integers(1, max_n + 1))
        topo = random_spanning_topology(rng, n)
        lap = graph.build_laplacian(topo)
        T, T_inv = graph.similarity_transform(n)
        prod = T @ lap @ T_inv
        worst_block = max(worst_block, np.abs(prod[0]).max(), np.abs(prod[:, 0]).max())
        dec = graph.decompose(lap)
        reduced = np.concatenate(([0.0], graph.eigenvalues(dec.L_bar)))
        worst_spec = max(worst_spec, graph.match_spectra(graph.eigenvalues(lap), reduced))
        for t in (topo, random_broken_topology(rng, n)):
            d = graph.decompose(graph.build_laplacian(t))
            verdict = graph.eigenvalues(d.L_bar).real.min() > 1e-9
            mismatched_verdict += verdict != graph.has_spanning_tree_rooted_at_leader(t)
    return CheckResult(
        "similarity decomposition T L T^-1 = diag[0, L_bar]",
        worst_block < 1e-12 and worst_spec < 1e-8 and mismatched_verdict == 0,
        f"max off-block {worst_block:.2e}, max spectrum gap {worst_spec:.2e}, "
        f"tree/L_bar verdict mismatches {mismatched_verdict}",
    )


def check_reduced_poles(rng, trials: int = 200, max_n: int = 8, alphas=(0.25, 1.0, 4.0)) -> CheckResult:
    worst_re, worst_gap = -math.inf, 0.0
    for _ in range(trials):
        n = int(rng.integers(1, max_n + 1))
        lap = graph.build_laplacian(random_spanning_topology(rng, n))
        dec = graph.decompose(lap)
        for alpha in alphas:
            reduced = graph.reduced_system_poles(dec, alpha)
            worst_re = max(worst_re, reduced.real.max())
            leader = np.array([1j * math.sqrt(alpha), -1j * math.sqrt(alpha)])
            full = graph.full_system_poles(lap, alpha)
            worst_gap = max(worst_gap, graph.match_spectra(full, np.concatenate((leader, reduced))))
    return CheckResult(
        "reduced-system poles in open LHP",
        worst_re < -1e-6 and worst_gap < 1e-8,
        f"max Re(pole) {worst_re:.3e}, full-vs-split spectrum gap {worst_gap:.2e}",
    )


def _random_args(rng, model: AgentModel):
    return [rng.uniform(-3, 3, model.dof) for _ in range(4)]


def check_models(rng, draws: int = 1000) -> list[CheckResult]:
    results = []
    models = [PlanarMassDamper(1.7, 0.4), TwoLinkArm(), TwoLinkArm(g=0.0)]
    for model in models:
        worst_reg, min_eig = 0.0, math.inf
        for _ in range(draws):
            q, qd, z, zd = _random_args(rng, model)
            lhs = inverse_dynamics(model, q, qd, z, zd)
            worst_reg = max(worst_reg, np.abs(lhs - model.regressor(q, qd, z, zd) @ model.true_params).max())
            M = model.mass_matrix(q)
            np.linalg.cholesky(M)
            min_eig = min(min_eig, np.linalg.eigvalsh(M).min())
        name = type(model).__name__ + ("" if getattr(model, "g", 1) else "(g=0)")
        results.append(CheckResult(f"{name} regressor identity", worst_reg < 1e-10, f"max residual {worst_reg:.2e}"))
        results.append(CheckResult(f"{name} inertia positive definite", min_eig > 0, f"min eigenvalue {min_eig:.3e}"))

    arm = TwoLinkArm()
    worst = 0.0
    for _ in range(draws):
        q, qd, x, _ = _random_args(rng, arm)
        N = arm.mass_matrix_dot(q, qd) - 2 * arm.coriolis_matrix(q, qd)
        worst = max(worst, abs(x @ N @ x))
    results.append(CheckResult("TwoLinkArm M' - 2C skew-symmetric", worst < 1e-8, f"max |x^T N x| {worst:.2e}"))

    md = PlanarMassDamper(1.3, 0.6)
    worst = 0.0
    for _ in range(draws):
        q, qd, x, _ = _random_args(rng, md)
        N = md.mass_matrix_dot(q, qd) - 2 * md.coriolis_matrix(q, qd)
        quad = x @ N @ x
        worst = max(worst, abs(quad + 2 * md.damping * (x @ x)) / max(1.0, x @ x), quad)
    results.append(CheckResult(
        "PlanarMassDamper dissipativity x^T(M'-2C)x = -2c|x|^2", worst < 1e-14, f"max deviation {worst:.1e}"
    ))
    return results


def check_leader_oracle(dt: float = 1e-3, t_final: float = 20.0) -> CheckResult:
    q0, qd0, alpha = np.array([2.0, 0.0]), np.array([0.0, 1.0]), 1.0
    y = np.stack((np.zeros(2), q0, qd0))
    worst = 0.0
    for k in range(int(round(t_final / dt))):
        y = rk4_step(lambda t, v: leader_derivative(v, alpha), k * dt, y, dt)
        ref = leader_closed_form((k + 1) * dt, q0, qd0, alpha)
        worst = max(worst, np.abs(y - np.stack((ref.q0_int, ref.q0, ref.q0_dot))).max())
    return CheckResult("leader RK4 vs closed form", worst < 1e-6, f"max error {worst:.2e} over {t_final:g} s")


def check_paper_scenario(threshold: float = 0.05) -> list[CheckResult]:
    from .scenario_file import paper_scenario

    traj = run(paper_scenario())
    report = compute_sync_report(traj, threshold)
    tail = traj.t >= traj.t[-1] - 10.0
    ok = report.e_q[tail].max() < threshold and report.e_v[tail].max() < threshold
    out = [
        CheckResult(
            "nine-agent scenario synchronizes",
            bool(ok),
            f"final-10s max e_q {report.e_q[tail].max():.2e}, e_v {report.e_v[tail].max():.2e}",
        ),
        CheckResult(
            "Lyapunov functions nonincreasing",
            not find_increases(traj.V),
            f"{len(find_increases(traj.V))} violations",
        ),
    ]
    half = run(paper_scenario(dt=0.0025, record_stride=20))
    diff = np.abs(half.q[-1] - traj.q[-1]).max()
    out.append(CheckResult("step-size insensitivity (dt 5 ms vs 2.5 ms)", diff < 1e-6, f"final position change {diff:.2e}"))
    broken = run(paper_scenario(break_tree=True))
    e_final = compute_sync_report(broken, threshold).final_e_q
    out.append(CheckResult("no spanning tree => no synchronization", e_final > 0.1, f"final e_q {e_final:.3f}"))
    return out


def run_all(seed: int = 0, trials: int = 200, simulate: bool = True) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results = [
        check_laplacian_spectrum(rng, trials),
        check_decomposition(rng, trials),
        check_reduced_poles(rng, trials),
        *check_models(rng),
        check_leader_oracle(),
    ]
    if simulate:
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            results += check_paper_scenario()
    return results
