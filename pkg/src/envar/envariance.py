"""Envariance: local unitaries that a counter-unitary on the other side undoes.

A unitary ``u`` acting on one side of a cut is envariant on ``psi`` exactly
when it leaves the reduced state of that side unchanged; the two states are
then purifications of the same density matrix and differ by a unitary on the
complement.  The counter-unitary is built from the Schmidt decomposition of
``psi`` by matching branches through the overlap matrix
``Q[j, k] = <L_j| u |L_k>``, which is block diagonal over degenerate
coefficients whenever the reduced state is preserved.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .config import DEFAULT_TOL, EQUAL_COEFF_RTOL, Tolerances
from .errors import BadPartition, ComplementTooSmall, NotEquiprobable, NotNormalized
from .schmidt import Bipartition, SchmidtDecomposition, schmidt_decompose
from .state import (
    LocalUnitary,
    PureState,
    apply_local,
    apply_matrix,
    bipartite_matrix,
    partial_trace,
    phase_aligned_distance,
)


@dataclass(frozen=True, eq=False)
class EnvarianceVerdict:
    envariant: bool
    counter: LocalUnitary | None
    residual: float
    rho_gap: float = 0.0

    def __post_init__(self):
        if self.envariant and self.counter is None:
            raise ValueError("an envariant verdict carries its counter-unitary")
        if not self.envariant and self.counter is not None:
            raise ValueError("a negative verdict carries no counter-unitary")


@dataclass(frozen=True)
class EquiprobabilityCertificate:
    branch_indices: tuple
    probability_each: Fraction
    # (k, l, residual) for each verified transposition of branches k and l
    swaps: tuple = field(default=())

    def __post_init__(self):
        if self.probability_each != Fraction(1, len(self.branch_indices)):
            raise ValueError("probability_each must be 1 / number of branches")

    @property
    def total(self) -> Fraction:
        return self.probability_each * len(self.branch_indices)

    def probabilities(self) -> dict:
        return {k: self.probability_each for k in self.branch_indices}

    @cached_property
    def max_residual(self) -> float:
        return max((res for _, _, res in self.swaps), default=0.0)


def _require_normalized(state: PureState, tol: Tolerances) -> None:
    if not state.is_normalized(tol):
        raise NotNormalized(f"state norm {state.norm():.12g} is not 1")


def _polar(q: np.ndarray) -> np.ndarray:
    x, _, yh = np.linalg.svd(q)
    return x @ yh


class _Prepared:
    """Per-state data shared by every decision against the same cut."""

    def __init__(self, state: PureState, dec: SchmidtDecomposition, tol: Tolerances):
        self.state = state
        self.dec = dec
        self.tol = tol
        self.side, self.comp = dec.left_labels, dec.right_labels
        self.side_dims = tuple(dec.layout.dim(x) for x in self.side)
        self.rank = dec.rank()
        comp_dim = dec.right_basis.shape[1]
        if comp_dim < self.rank:
            raise ComplementTooSmall(f"complement dimension {comp_dim} < Schmidt rank {self.rank}")
        self.left = dec.left_basis[: self.rank]
        self.right_cols = dec.right_basis[: self.rank].T
        self.right_proj = np.eye(comp_dim) - self.right_cols @ self.right_cols.conj().T
        self.rho = partial_trace(state, self.side).matrix
        self.amp_matrix = bipartite_matrix(state, self.side)[0]

    def counter_matrix(self, u: LocalUnitary) -> np.ndarray:
        """Complement-side unitary undoing ``u`` as far as the branch matching allows."""
        r = self.rank
        axes = [self.side.index(x) for x in u.target]
        moved_left = apply_matrix(self.left.T.reshape(self.side_dims + (r,)), axes, u.matrix)
        q = self.left.conj() @ moved_left.reshape(-1, r)
        if np.max(np.abs(q.conj().T @ q - np.eye(r)), initial=0.0) > self.tol.unitary:
            q = _polar(q)
        return (self.right_cols @ q.conj()) @ self.right_cols.conj().T + self.right_proj

    def decide(self, u: LocalUnitary) -> EnvarianceVerdict:
        tol = self.tol
        moved = apply_local(self.state, u)
        rho_moved = partial_trace(moved, self.side).matrix
        rho_gap = float(np.max(np.abs(self.rho - rho_moved)))
        # unitary by construction: Q is unitary (polar-projected if needed)
        counter = LocalUnitary.trusted(self.comp, self.counter_matrix(u))
        restored = apply_local(moved, counter)
        residual = phase_aligned_distance(restored, self.state)
        envariant = rho_gap <= tol.state and residual <= tol.state
        return EnvarianceVerdict(envariant, counter if envariant else None, residual, rho_gap)

    def decide_transposition(self, a: np.ndarray, b: np.ndarray) -> EnvarianceVerdict:
        """``decide`` specialised to the swap ``I - w w^dagger`` with ``w = a - b``.

        Swap and counterswap are both reflections, so every step is a rank-1
        update on the amplitude matrix instead of a dense contraction.
        """
        tol = self.tol
        w = a - b
        overlap = self.left.conj() @ w
        if abs(np.vdot(overlap, overlap).real - 2.0) > tol.unitary:
            # swap leaks out of the Schmidt support; the general path handles it
            return self.decide(transposition(self.side, a, b))
        rho_w = self.rho @ w
        w_rho_w = np.vdot(w, rho_w)
        delta = (
            -np.outer(w, rho_w.conj()) - np.outer(rho_w, w.conj())
            + w_rho_w * np.outer(w, w.conj())
        )
        rho_gap = float(np.max(np.abs(delta)))
        z = self.right_cols @ overlap.conj()
        amps = self.amp_matrix
        # the swap only touches rows where w is nonzero
        rows = np.flatnonzero(w)
        moved = amps.copy()
        moved[rows] -= np.outer(w[rows], w[rows].conj() @ amps[rows])
        restored = moved - np.outer(moved @ z.conj(), z)
        inner = np.vdot(restored, amps)
        phase = inner / abs(inner) if abs(inner) > 0 else 1.0
        residual = float(np.linalg.norm(phase * restored - amps))
        envariant = rho_gap <= tol.state and residual <= tol.state
        counter = None
        if envariant:
            counter = LocalUnitary.trusted(self.comp, np.eye(len(z)) - np.outer(z, z.conj()))
        return EnvarianceVerdict(envariant, counter, residual, rho_gap)


def decide_envariance(
    state: PureState,
    u: LocalUnitary,
    cut: Bipartition,
    tol: Tolerances = DEFAULT_TOL,
) -> EnvarianceVerdict:
    """Decide whether ``u`` can be undone by a unitary on the other side of ``cut``.

    The verdict follows the reduced-state criterion; the returned counter is
    checked by actually applying it (residual measured up to global phase).
    """
    cut.check(state.layout)
    _require_normalized(state, tol)
    side = state.layout.ordered(cut.side_of(u.target))
    comp = state.layout.ordered(cut.other(cut.side_of(u.target)))
    dec = schmidt_decompose(state, Bipartition(side, comp))
    return _Prepared(state, dec, tol).decide(u)


def transposition(target: Sequence[str], a: np.ndarray, b: np.ndarray) -> LocalUnitary:
    """Unitary exchanging orthonormal vectors ``a`` and ``b``, identity on the rest."""
    w = a - b
    return LocalUnitary(tuple(target), np.eye(len(w)) - np.outer(w, w.conj()))


def certify_branch_swaps(
    state: PureState,
    cut: Bipartition,
    side: Sequence[str],
    branches: np.ndarray,
    tol: Tolerances = DEFAULT_TOL,
) -> EquiprobabilityCertificate:
    """Certify that the given branch vectors on ``side`` are pairwise swappable.

    ``branches`` holds orthonormal vectors (rows) on ``side`` that together
    carry the whole norm of ``state``.  Every adjacent transposition must be
    envariant; adjacent transpositions generate all permutations.
    """
    cut.check(state.layout)
    _require_normalized(state, tol)
    layout = state.layout
    side = layout.ordered(side)
    if side not in (layout.ordered(cut.left), layout.ordered(cut.right)):
        raise BadPartition(f"{side} is not a side of the cut")
    comp = tuple(x for x in layout.labels if x not in side)
    branches = np.asarray(branches, dtype=np.complex128)
    rho = partial_trace(state, side).matrix
    weights = np.einsum("ki,ij,kj->k", branches.conj(), rho, branches).real
    if abs(weights.sum() - 1.0) > tol.state:
        raise NotEquiprobable(f"branches carry weight {weights.sum():.12g}, not 1")
    prep = _Prepared(state, schmidt_decompose(state, Bipartition(side, comp)), tol)
    swaps = []
    for k in range(len(branches) - 1):
        verdict = prep.decide_transposition(branches[k], branches[k + 1])
        if not verdict.envariant:
            raise NotEquiprobable(
                f"swap of branches {k} and {k + 1} is not envariant "
                f"(weights {weights[k]:.12g}, {weights[k + 1]:.12g})",
                pair=(k, k + 1),
            )
        swaps.append((k, k + 1, verdict.residual))
    n = len(branches)
    return EquiprobabilityCertificate(tuple(range(n)), Fraction(1, n), tuple(swaps))


def equiprobability_from_swaps(
    state: PureState,
    cut: Bipartition,
    tol: Tolerances = DEFAULT_TOL,
) -> EquiprobabilityCertificate:
    """Exact ``1/r`` probabilities for the ``r`` Schmidt branches of ``state``.

    Swaps act on the smaller side of the cut; the Schmidt vectors there are the
    branches.  Raises ``NotEquiprobable`` when the coefficients differ.
    """
    cut.check(state.layout)
    _require_normalized(state, tol)
    layout = state.layout
    left, right = layout.ordered(cut.left), layout.ordered(cut.right)
    dim = lambda labels: int(np.prod([layout.dim(x) for x in labels]))
    side, comp = (left, right) if dim(left) <= dim(right) else (right, left)
    dec = schmidt_decompose(state, Bipartition(side, comp))
    r = dec.rank()
    coeffs = dec.coefficients[:r]
    spread = (coeffs[0] - coeffs[-1]) / coeffs[0]
    if spread > EQUAL_COEFF_RTOL:
        raise NotEquiprobable(
            f"Schmidt coefficients {coeffs[0]:.12g} and {coeffs[-1]:.12g} differ",
            pair=(float(coeffs[0]), float(coeffs[-1])),
        )
    return certify_branch_swaps(state, cut, side, dec.left_basis[:r], tol)
