"""YAML scenario files and the built-in mass-damper experiment.

Layout::

    name: paper
    alpha: 1.0
    leader: {q: [2, 0], qdot: [0, 1]}
    topology:
      n: 9
      edges:                 # [follower, observed vertex, weight]; 0 is the leader
        - [1, 0, 1.0]
    defaults: {K: 20.0, Gamma: 2.0}   # optional, merged into every agent
    agents:
      - {model: mass_damper, mass: 1.0, damping: 0.3, q: [3, 2]}
    integration: {method: rk4, dt: 0.005, t_final: 60, record_stride: 10}
    output: results/

Per agent, ``qdot``, ``a_hat`` and ``q_int`` default to zeros; ``K`` and
``Gamma`` are scalars (scaled identity) or full matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .controller import Gains
from .dynamics import MODEL_KINDS, PlanarMassDamper, model_from_dict
from .graph import DirectedTopology
from .simulator import Scenario

PAPER_MASSES = (1.0, 1.5, 1.6, 1.2, 0.5, 2.5, 2.2, 1.8, 2.1)
PAPER_DAMPINGS = (0.3, 0.5, 0.7, 0.35, 0.6, 0.8, 0.9, 0.75, 0.85)
PAPER_INITIAL_POSITIONS = (
    (3.0, 2.0), (-3.0, 2.0), (-3.0, -2.0), (3.0, -2.0), (3.0, 0.0),
    (-3.0, 0.0), (3.0, 3.0), (-3.0, 3.0), (-3.0, -3.0),
)


class ScenarioError(ValueError):
    """Invalid scenario file; the message names the offending field (and line, when known)."""

    def __init__(self, field: str, message: str, line: int | None = None):
        self.field = field
        self.line = line
        where = field if line is None else f"line {line}: {field}"
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class ScenarioFile:
    scenario: Scenario
    name: str = "scenario"
    output: str | None = None


def paper_scenario(dt: float = 0.005, t_final: float = 60.0, break_tree: bool = False,
                   integrator: str = "rk4", record_stride: int = 10) -> Scenario:
    """Nine planar mass-dampers tracking an elliptical leader orbit.

    Interaction graph is the directed chain 1->0, 2->1, ..., 9->8 with unit
    weights.  ``break_tree`` drops the 1->0 edge so no follower reaches the
    leader.
    """
    topology = DirectedTopology.chain(9)
    if break_tree:
        topology = topology.without_edge(1, 0)
    models = tuple(PlanarMassDamper(m, c) for m, c in zip(PAPER_MASSES, PAPER_DAMPINGS))
    return Scenario(
        topology=topology,
        models=models,
        gains=tuple(Gains.build(20.0, 2.0, 2, 2) for _ in models),
        alpha=1.0,
        leader_q=np.array([2.0, 0.0]),
        leader_qdot=np.array([0.0, 1.0]),
        follower_q=np.array(PAPER_INITIAL_POSITIONS),
        follower_qdot=np.zeros((9, 2)),
        a_hat_init=tuple(np.zeros(2) for _ in models),
        dt=dt,
        t_final=t_final,
        record_stride=record_stride,
        integrator=integrator,
    )


# -- parsing ---------------------------------------------------------------


def _line_index(node, path=(), out=None) -> dict:
    """Map field paths to 1-based source lines from a composed YAML node tree."""
    out = {} if out is None else out
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            _line_index(value, path + (key.value,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, value in enumerate(node.value):
            _line_index(value, path + (i,), out)
    return out


def _fmt_path(path) -> str:
    s = ""
    for p in path:
        s += f"[{p}]" if isinstance(p, int) else (f".{p}" if s else str(p))
    return s or "<root>"


class _Reader:
    def __init__(self, lines: dict):
        self.lines = lines

    def fail(self, path, message):
        path = tuple(path)
        line = None
        for k in range(len(path), -1, -1):
            if path[:k] in self.lines:
                line = self.lines[path[:k]]
                break
        raise ScenarioError(_fmt_path(path), message, line)

    def get(self, d, path, key, default=...):
        if not isinstance(d, dict):
            self.fail(path, "expected a mapping")
        if key not in d:
            if default is ...:
                self.fail(path + (key,), "required field is missing")
            return default
        return d[key]

    def number(self, value, path, positive=False, nonneg=False) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {value!r}")
        value = float(value)
        if not np.isfinite(value):
            self.fail(path, "must be finite")
        if positive and not value > 0:
            self.fail(path, f"must be positive, got {value}")
        if nonneg and not value >= 0:
            self.fail(path, f"must be nonnegative, got {value}")
        return value

    def vector(self, value, path, length=None) -> np.ndarray:
        if not isinstance(value, list):
            self.fail(path, f"expected a list of numbers, got {value!r}")
        v = np.array([self.number(x, path + (i,)) for i, x in enumerate(value)])
        if length is not None and v.shape != (length,):
            self.fail(path, f"expected {length} entries, got {len(v)}")
        return v

    def gain(self, value, path, dim) -> np.ndarray:
        if isinstance(value, list):
            if len(value) != dim:
                self.fail(path, f"expected a {dim}x{dim} matrix")
            value = np.array([self.vector(row, path + (i,), dim) for i, row in enumerate(value)])
        else:
            value = self.number(value, path, positive=True)
        return value


def scenario_from_dict(data: dict, lines: dict | None = None) -> ScenarioFile:
    r = _Reader(lines or {})
    if not isinstance(data, dict):
        r.fail((), "scenario file must be a mapping")

    alpha = r.number(r.get(data, (), "alpha"), ("alpha",), positive=True)

    leader = r.get(data, (), "leader")
    q0 = r.vector(r.get(leader, ("leader",), "q"), ("leader", "q"))
    m = q0.shape[0]
    if m == 0:
        r.fail(("leader", "q"), "must not be empty")
    q0dot = r.vector(r.get(leader, ("leader",), "qdot", [0.0] * m), ("leader", "qdot"), m)

    topo = r.get(data, (), "topology")
    n = r.get(topo, ("topology",), "n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        r.fail(("topology", "n"), f"must be a positive integer, got {n!r}")
    edges = r.get(topo, ("topology",), "edges", [])
    if not isinstance(edges, list):
        r.fail(("topology", "edges"), "expected a list of [follower, neighbor, weight]")
    triples = []
    for k, e in enumerate(edges):
        path = ("topology", "edges", k)
        if not isinstance(e, list) or len(e) not in (2, 3):
            r.fail(path, "expected [follower, neighbor] or [follower, neighbor, weight]")
        i, j = e[0], e[1]
        if not all(isinstance(x, int) and not isinstance(x, bool) for x in (i, j)):
            r.fail(path, "vertex indices must be integers")
        if not (1 <= i <= n and 0 <= j <= n) or i == j:
            r.fail(path, f"edge ({i}, {j}) invalid: follower in 1..{n}, neighbor in 0..{n}, no self-loops")
        w = r.number(e[2], path + (2,), positive=True) if len(e) == 3 else 1.0
        triples.append((i, j, w))
    topology = DirectedTopology.from_edges(n, triples)

    defaults = r.get(data, (), "defaults", {}) or {}
    if not isinstance(defaults, dict):
        r.fail(("defaults",), "expected a mapping")
    agents = r.get(data, (), "agents")
    if not isinstance(agents, list) or len(agents) != n:
        r.fail(("agents",), f"expected a list of {n} agents")

    models, gains, q, qdot, a_hat, q_int = [], [], [], [], [], []
    for k, raw in enumerate(agents):
        path = ("agents", k)
        if not isinstance(raw, dict):
            r.fail(path, "expected a mapping")
        entry = {**defaults, **raw}
        kind = r.get(entry, path, "model")
        if kind not in MODEL_KINDS:
            r.fail(path + ("model",), f"unknown model {kind!r}; expected one of {sorted(MODEL_KINDS)}")
        state_keys = {"q", "qdot", "a_hat", "q_int", "K", "Gamma"}
        params = {key: val for key, val in entry.items() if key not in state_keys}
        try:
            model = model_from_dict(params)
        except (TypeError, ValueError) as exc:
            r.fail(path, f"bad model parameters: {exc}")
        if model.dof != m:
            r.fail(path + ("model",), f"model has {model.dof} dof, leader has {m}")
        models.append(model)
        q.append(r.vector(r.get(entry, path, "q"), path + ("q",), m))
        qdot.append(r.vector(entry.get("qdot", [0.0] * m), path + ("qdot",), m))
        q_int.append(r.vector(entry.get("q_int", [0.0] * m), path + ("q_int",), m))
        a_hat.append(r.vector(entry.get("a_hat", [0.0] * model.param_dim), path + ("a_hat",), model.param_dim))
        K = r.gain(r.get(entry, path, "K"), path + ("K",), m)
        Gamma = r.gain(r.get(entry, path, "Gamma"), path + ("Gamma",), model.param_dim)
        try:
            gains.append(Gains.build(K, Gamma, m, model.param_dim))
        except ValueError as exc:
            r.fail(path, str(exc))

    integ = r.get(data, (), "integration", {}) or {}
    ipath = ("integration",)
    method = r.get(integ, ipath, "method", "rk4")
    if method not in ("rk4", "zoh-euler"):
        r.fail(ipath + ("method",), f"must be 'rk4' or 'zoh-euler', got {method!r}")
    dt = r.number(r.get(integ, ipath, "dt", 0.005), ipath + ("dt",), positive=True)
    t_final = r.number(r.get(integ, ipath, "t_final", 60.0), ipath + ("t_final",), nonneg=True)
    stride = r.get(integ, ipath, "record_stride", 10)
    if isinstance(stride, bool) or not isinstance(stride, int) or stride < 1:
        r.fail(ipath + ("record_stride",), f"must be a positive integer, got {stride!r}")

    output = data.get("output")
    if output is not None and not isinstance(output, str):
        r.fail(("output",), "expected a path string")
    name = data.get("name", "scenario")

    scenario = Scenario(
        topology=topology,
        models=tuple(models),
        gains=tuple(gains),
        alpha=alpha,
        leader_q=q0,
        leader_qdot=q0dot,
        follower_q=np.array(q),
        follower_qdot=np.array(qdot),
        a_hat_init=tuple(a_hat),
        q_int_init=np.array(q_int),
        dt=dt,
        t_final=t_final,
        record_stride=stride,
        integrator=method,
    )
    return ScenarioFile(scenario=scenario, name=str(name), output=output)


def parse_scenario(text: str) -> ScenarioFile:
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ScenarioError("<yaml>", str(exc).splitlines()[0], line) from exc
    lines = _line_index(root) if root is not None else {}
    return scenario_from_dict(data, lines)


def load_scenario(path) -> ScenarioFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read scenario file {path}: {exc.strerror}") from exc
    return parse_scenario(text)


# -- printing --------------------------------------------------------------


def _gain_out(a: np.ndarray):
    if np.array_equal(a, a[0, 0] * np.eye(a.shape[0])):
        return float(a[0, 0])
    return a.tolist()


def scenario_to_dict(sf: ScenarioFile) -> dict:
    sc = sf.scenario
    agents = []
    for i, (model, gains) in enumerate(zip(sc.models, sc.gains)):
        agent = dict(model.to_dict())
        agent.update(
            q=sc.follower_q[i].tolist(),
            qdot=sc.follower_qdot[i].tolist(),
            a_hat=sc.a_hat_init[i].tolist(),
            K=_gain_out(gains.K),
            Gamma=_gain_out(gains.Gamma),
        )
        if np.any(sc.q_int_init[i]):
            agent["q_int"] = sc.q_int_init[i].tolist()
        agents.append(agent)
    data = {
        "name": sf.name,
        "alpha": float(sc.alpha),
        "leader": {"q": sc.leader_q.tolist(), "qdot": sc.leader_qdot.tolist()},
        "topology": {"n": sc.n, "edges": [[i, j, w] for i, j, w in sc.topology.edges()]},
        "agents": agents,
        "integration": {
            "method": sc.integrator,
            "dt": float(sc.dt),
            "t_final": float(sc.t_final),
            "record_stride": int(sc.record_stride),
        },
    }
    if sf.output is not None:
        data["output"] = sf.output
    return data


def dump_scenario(sf: ScenarioFile) -> str:
    return yaml.safe_dump(scenario_to_dict(sf), sort_keys=False, default_flow_style=None)
