"""CSV export of trajectories.

Floats are written with ``repr`` (shortest round-trip form), so reading a
file back reproduces every value bit for bit.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .analysis import SyncReport, sync_errors
from .simulator import Trajectory


def coord_names(m: int) -> list[str]:
    return ["x", "y", "z"][:m] if m <= 3 else [str(k) for k in range(m)]


def trajectory_columns(trajectory: Trajectory) -> tuple[list[str], np.ndarray]:
    """Header names and the ``(K, ncols)`` table written by :func:`write_trajectory_csv`."""
    axes = coord_names(trajectory.m)
    names = ["t"]
    cols = [trajectory.t[:, None]]
    names += [f"q0_{a}" for a in axes] + [f"q0dot_{a}" for a in axes]
    cols += [trajectory.leader_q, trajectory.leader_qdot]
    for i in range(trajectory.n):
        k = i + 1
        p = trajectory.a_hat[i].shape[1]
        names += [f"q{k}_{a}" for a in axes]
        names += [f"qdot{k}_{a}" for a in axes]
        names += [f"ahat{k}_{j}" for j in range(p)]
        names += [f"s{k}_{a}" for a in axes]
        names += [f"tau{k}_{a}" for a in axes]
        names += [f"V{k}"]
        cols += [
            trajectory.q[:, i],
            trajectory.qdot[:, i],
            trajectory.a_hat[i],
            trajectory.s[:, i],
            trajectory.tau[:, i],
            trajectory.V[:, i : i + 1],
        ]
    e_q, e_v = sync_errors(trajectory)
    names += ["e_q", "e_v"]
    cols += [e_q[:, None], e_v[:, None]]
    return names, np.hstack(cols)


def write_trajectory_csv(trajectory: Trajectory, path) -> Path:
    path = Path(path)
    names, table = trajectory_columns(trajectory)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in table:
            writer.writerow([repr(float(x)) for x in row])
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader]
    return header, np.array(rows).reshape(len(rows), len(header))


def write_report(report: SyncReport, path, extra: dict | None = None) -> Path:
    path = Path(path)
    text = report.to_text()
    for key, value in (extra or {}).items():
        text += f"{key}: {value}\n"
    path.write_text(text)
    return path
