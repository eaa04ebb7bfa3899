"""Directed interaction topology among a virtual leader and its followers.

Vertex 0 is the leader and vertices 1..n are followers.  An entry
``w_ij > 0`` in the weight matrix means follower ``i`` observes vertex ``j``
(information flows from ``j`` to ``i``).  The leader observes nobody, so row 0
is identically zero.

The module also carries the similarity decomposition that splits the
Laplacian into ``diag[0, L_bar]`` and the pole computations for the
oscillator network built on top of it.  Matrices are always per-coordinate
(``(n+1) x (n+1)``); the Kronecker factor ``I_m`` is implicit.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable

import numpy as np

ZERO_EIG_TOL = 1e-8
DECOMPOSITION_TOL = 1e-12


class TopologyError(ValueError):
    """Raised for weight matrices that do not describe a valid leader/follower graph."""


class DecompositionError(ArithmeticError):
    """Raised when ``T L T^-1`` does not have the expected block structure."""


class EigenSolverError(ArithmeticError):
    """Raised when the dense eigenvalue iteration fails to converge."""


@dataclass(frozen=True)
class DirectedTopology:
    """Weighted directed graph over the leader (index 0) and ``n`` followers.

    Attributes:
        n: Number of followers.
        weights: ``(n+1, n+1)`` adjacency matrix; ``weights[i, j]`` is the
            weight with which vertex ``i`` observes vertex ``j``.
    """

    n: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if self.n < 1:
            raise TopologyError(f"need at least one follower, got n={self.n}")
        if w.shape != (self.n + 1, self.n + 1):
            raise TopologyError(f"weights must be {(self.n + 1, self.n + 1)}, got {w.shape}")
        if not np.all(np.isfinite(w)):
            raise TopologyError("weights must be finite")
        if np.any(w < 0):
            raise TopologyError("weights must be nonnegative")
        if np.any(np.diag(w) != 0):
            raise TopologyError("self-loops are not allowed (w_ii must be 0)")
        if np.any(w[0] != 0):
            raise TopologyError("the leader (row 0) must not have neighbors")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int, float]]) -> "DirectedTopology":
        """Build from ``(follower, neighbor, weight)`` triples."""
        w = np.zeros((n + 1, n + 1))
        for i, j, weight in edges:
            if not (0 <= i <= n and 0 <= j <= n):
                raise TopologyError(f"edge ({i}, {j}) out of range for n={n}")
            if weight <= 0:
                raise TopologyError(f"edge ({i}, {j}) needs a positive weight, got {weight}")
            w[i, j] = weight
        return cls(n, w)

    @classmethod
    def chain(cls, n: int, weight: float = 1.0) -> "DirectedTopology":
        """Directed path 1->0, 2->1, ..., n->n-1."""
        return cls.from_edges(n, [(i, i - 1, weight) for i in range(1, n + 1)])

    def edges(self) -> list[tuple[int, int, float]]:
        rows, cols = np.nonzero(self.weights)
        return [(int(i), int(j), float(self.weights[i, j])) for i, j in zip(rows, cols)]

    def neighbors(self, i: int) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.weights[i])]

    def without_edge(self, i: int, j: int) -> "DirectedTopology":
        w = self.weights.copy()
        w[i, j] = 0.0
        return DirectedTopology(self.n, w)


def build_laplacian(topology: DirectedTopology) -> np.ndarray:
    """Weighted Laplacian ``L = diag(W 1) - W`` of the topology.

    The leader row is zero, so ``L`` has zero row sums and ``[1,0,...,0] L = 0``.
    """
    w = topology.weights
    if np.any(w < 0) or np.any(w[0] != 0):
        raise TopologyError("weights must be nonnegative with an all-zero leader row")
    lap = -w.copy()
    np.fill_diagonal(lap, w.sum(axis=1))
    return lap


def has_spanning_tree_rooted_at_leader(topology: DirectedTopology) -> bool:
    """True iff every follower has a directed path to the leader.

    Runs a breadth-first search from vertex 0 over reversed edges: if ``i``
    observes ``j`` then ``j`` is expanded into ``i``.
    """
    w = topology.weights
    seen = np.zeros(topology.n + 1, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        j = queue.popleft()
        for i in np.flatnonzero(w[:, j] > 0):
            if not seen[i]:
                seen[i] = True
                queue.append(i)
    return bool(seen.all())


def similarity_transform(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(T, T_inv)`` for ``n`` followers.

    ``T`` maps stacked positions to ``[q_0, q_0 - q_1, ..., q_{n-1} - q_n]``.
    Its inverse recovers ``q_i = q_0 - (xi_1 + ... + xi_i)``, i.e. row ``i``
    of ``T_inv`` is ``[1, -1, ..., -1, 0, ..., 0]`` with ``i`` entries of -1.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    size = n + 1
    T = np.zeros((size, size))
    T[0, 0] = 1.0
    for k in range(1, size):
        T[k, k - 1] = 1.0
        T[k, k] = -1.0
    T_inv = -np.tril(np.ones((size, size)))
    T_inv[:, 0] = 1.0
    T_inv[0, 1:] = 0.0
    return T, T_inv


@dataclass(frozen=True)
class SimilarityDecomposition:
    T: np.ndarray
    T_inv: np.ndarray
    L_bar: np.ndarray

    @property
    def n(self) -> int:
        return self.L_bar.shape[0]


def decompose(laplacian: np.ndarray, tol: float = DECOMPOSITION_TOL) -> SimilarityDecomposition:
    """Similarity-transform ``L`` into ``diag[0, L_bar]``.

    Raises:
        DecompositionError: if the first row or column of ``T L T^-1`` is not
            zero to within ``tol`` (a Laplacian whose leader row is nonzero).
    """
    lap = np.asarray(laplacian, dtype=float)
    if lap.ndim != 2 or lap.shape[0] != lap.shape[1] or lap.shape[0] < 2:
        raise ValueError(f"expected a square matrix of size >= 2, got shape {lap.shape}")
    T, T_inv = similarity_transform(lap.shape[0] - 1)
    product = T @ lap @ T_inv
    off_block = max(np.abs(product[0]).max(), np.abs(product[:, 0]).max())
    if off_block >= tol:
        raise DecompositionError(
            f"T L T^-1 is not block diagonal: first row/column magnitude {off_block:.3e}"
        )
    return SimilarityDecomposition(T=T, T_inv=T_inv, L_bar=product[1:, 1:].copy())


def eigenvalues(a: np.ndarray) -> np.ndarray:
    """All eigenvalues of a dense real square matrix, as a complex array.

    Backed by LAPACK ``geev`` (Hessenberg reduction plus shifted QR).
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    try:
        return np.linalg.eigvals(a).astype(complex)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(str(exc)) from exc


def count_zero_eigenvalues(eigs: np.ndarray, tol: float = ZERO_EIG_TOL) -> int:
    return int(np.sum(np.abs(eigs) < tol))


def oscillator_state_matrix(coupling: np.ndarray, alpha: float) -> np.ndarray:
    """State matrix of ``x'' = -coupling x' - alpha x`` in ``(x, x')`` form."""
    k = coupling.shape[0]
    eye = np.eye(k)
    return np.block([[np.zeros((k, k)), eye], [-alpha * eye, -coupling]])


def reduced_system_poles(decomp: SimilarityDecomposition, alpha: float) -> np.ndarray:
    """The ``2n`` poles of the error subsystem ``sigma'' = -L_bar sigma' - alpha sigma``."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return eigenvalues(oscillator_state_matrix(decomp.L_bar, alpha))


def full_system_poles(laplacian: np.ndarray, alpha: float) -> np.ndarray:
    """Poles of the whole stacked network ``q'' = -L q' - alpha q`` (leader included)."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return eigenvalues(oscillator_state_matrix(np.asarray(laplacian, dtype=float), alpha))


def match_spectra(a: np.ndarray, b: np.ndarray) -> float:
    """Largest distance between two eigenvalue multisets under the best pairing.

    Returns ``inf`` if the multisets have different sizes.
    """
    from scipy.optimize import linear_sum_assignment

    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size != b.size:
        return float("inf")
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def format_matrix(a: np.ndarray, precision: int = 6) -> str:
    """Plain-text rendering of a matrix, one row per line."""
    a = np.atleast_2d(np.asarray(a))
    return "\n".join(
        "  ".join(f"{x + 0.0: .{precision}g}" for x in row) for row in a
    )


def matrix_to_csv(a: np.ndarray) -> str:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    return "\n".join(",".join(repr(float(x)) for x in row) for row in a) + "\n"
