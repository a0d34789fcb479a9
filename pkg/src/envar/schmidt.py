"""Bipartite Schmidt decomposition via SVD of the amplitude matrix."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .config import DEFAULT_TOL, RANK_THRESHOLD, Tolerances
from .errors import BadPartition, ZeroState
from .state import PureState, SubsystemLayout, bipartite_matrix


@dataclass(frozen=True)
class Bipartition:
    left: tuple
    right: tuple

    def __post_init__(self):
        left = (self.left,) if isinstance(self.left, str) else tuple(self.left)
        right = (self.right,) if isinstance(self.right, str) else tuple(self.right)
        if not left or not right:
            raise BadPartition("both sides of a bipartition must be nonempty")
        if set(left) & set(right):
            raise BadPartition(f"sides overlap on {sorted(set(left) & set(right))}")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @classmethod
    def split(cls, layout: SubsystemLayout, left: Iterable[str]) -> "Bipartition":
        """Cut with ``left`` on one side and every other label on the other."""
        left = layout.ordered((left,) if isinstance(left, str) else left)
        return cls(left, tuple(x for x in layout.labels if x not in left))

    def check(self, layout: SubsystemLayout) -> None:
        if set(self.left) | set(self.right) != set(layout.labels):
            raise BadPartition(
                f"cut {self.left}|{self.right} does not cover labels {layout.labels}"
            )

    def swapped(self) -> "Bipartition":
        return Bipartition(self.right, self.left)

    def side_of(self, labels: Iterable[str]) -> tuple:
        labels = set(labels)
        if labels <= set(self.left):
            return self.left
        if labels <= set(self.right):
            return self.right
        raise BadPartition(f"labels {sorted(labels)} straddle the cut")

    def other(self, side: tuple) -> tuple:
        return self.right if side == self.left else self.left


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """``psi = sum_k coefficients[k] * left_basis[k] (x) right_basis[k]``.

    Basis vectors are stored as rows; each side's index runs mixed-radix over
    its labels in layout order.
    """

    coefficients: np.ndarray
    left_basis: np.ndarray
    right_basis: np.ndarray
    bipartition: Bipartition
    layout: SubsystemLayout

    @property
    def left_labels(self) -> tuple:
        return self.layout.ordered(self.bipartition.left)

    @property
    def right_labels(self) -> tuple:
        return self.layout.ordered(self.bipartition.right)

    def rank(self, threshold: float = RANK_THRESHOLD) -> int:
        return int(np.count_nonzero(self.coefficients > threshold))

    def matrix(self) -> np.ndarray:
        return (self.left_basis.T * self.coefficients) @ self.right_basis

    def reconstruct(self) -> PureState:
        left, right = self.left_labels, self.right_labels
        shape = tuple(self.layout.dim(x) for x in left + right)
        order = [(left + right).index(x) for x in self.layout.labels]
        amps = np.transpose(self.matrix().reshape(shape), order).reshape(-1)
        return PureState(self.layout, amps)


def _svd_on_support(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD with basis vectors as rows, restricted to nonzero rows and columns.

    Exactly-zero rows and columns carry no singular value, so dropping them
    before the SVD changes nothing but the cost; correlated states are mostly
    zeros.  The number of terms is then min(#nonzero rows, #nonzero columns).
    """
    rows = np.flatnonzero(np.any(mat != 0, axis=1))
    cols = np.flatnonzero(np.any(mat != 0, axis=0))
    if len(rows) == mat.shape[0] and len(cols) == mat.shape[1]:
        u, s, vh = np.linalg.svd(mat, full_matrices=False)
        return u.T.copy(), s, vh.copy()
    u, s, vh = np.linalg.svd(mat[np.ix_(rows, cols)], full_matrices=False)
    left = np.zeros((len(s), mat.shape[0]), dtype=np.complex128)
    right = np.zeros((len(s), mat.shape[1]), dtype=np.complex128)
    left[:, rows] = u.T
    right[:, cols] = vh
    return left, s, right


def schmidt_decompose(state: PureState, cut: Bipartition) -> SchmidtDecomposition:
    cut.check(state.layout)
    if not np.any(state.amplitudes):
        raise ZeroState("Schmidt decomposition of the zero vector")
    mat, _, _ = bipartite_matrix(state, cut.left)
    left, s, right = _svd_on_support(mat)
    # Largest entry of each left vector made real positive; the phase moves right.
    pivots = np.argmax(np.abs(left), axis=1)
    rows = np.arange(left.shape[0])
    phases = left[rows, pivots] / np.abs(left[rows, pivots])
    left *= phases.conj()[:, None]
    right *= phases[:, None]
    for arr in (s, left, right):
        arr.flags.writeable = False
    return SchmidtDecomposition(s, left, right, cut, state.layout)


def schmidt_rank(state: PureState, cut: Bipartition, threshold: float = RANK_THRESHOLD) -> int:
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    return schmidt_decompose(state, cut).rank(threshold)


def reconstruction_error(dec: SchmidtDecomposition, state: PureState) -> float:
    return float(np.linalg.norm(dec.reconstruct().amplitudes - state.amplitudes))


def is_orthonormal(vectors: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> bool:
    gram = vectors.conj() @ vectors.T
    return bool(np.max(np.abs(gram - np.eye(len(vectors))), initial=0.0) <= tol.unitary)
