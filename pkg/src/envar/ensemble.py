"""M-copy measurement ensembles, count sectors and the counter register.

Layout of the explicit states: outcome qubits ``S1..SM``, record qubits
``A1..AM`` and, once attached, a counter ``C`` of dimension ``M + 1``.  The
pre-measurement ensemble is ``(x)_k (alpha|0>|a0> + beta|1>|a1>)_k``; only
the diagonal entries ``|s>|A_s>`` of the S-by-A amplitude matrix are nonzero.

Sector ``m`` collects the ``C(M, m)`` outcome sequences with ``m`` ones.  With
``|s_m>`` normalised, the ensemble reads ``sum_m Gamma_m |s_m>|c_m>`` with
``Gamma_m = sqrt(C(M, m)) alpha^(M-m) beta^m``; for ``alpha = beta`` this is
``gamma_m`` proportional to ``+sqrt(C(M, m))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .config import DEFAULT_CAPS, DEFAULT_TOL, Caps, Tolerances
from .errors import DimensionCap, LayoutMismatch, NotNormalized, OutOfRange, SpecMismatch
from .finegraining import exact_value
from .schmidt import Bipartition, SchmidtDecomposition, schmidt_decompose
from .state import LocalUnitary, PureState, SubsystemLayout, partial_trace

COUNTER = "C"


def outcome_labels(M: int) -> tuple:
    return tuple(f"S{k}" for k in range(1, M + 1))


def record_labels(M: int) -> tuple:
    return tuple(f"A{k}" for k in range(1, M + 1))


def ensemble_layout(M: int, with_counter: bool = False) -> SubsystemLayout:
    labels = outcome_labels(M) + record_labels(M)
    dims = (2,) * (2 * M)
    if with_counter:
        labels, dims = labels + (COUNTER,), dims + (M + 1,)
    return SubsystemLayout(labels, dims)


def hamming_weights(M: int) -> np.ndarray:
    """Number of ones in each M-bit outcome string, indexed by composite index."""
    return np.bitwise_count(np.arange(2**M, dtype=np.uint64)).astype(np.int64)


@dataclass(frozen=True)
class EnsembleSpec:
    M: int
    alpha: complex
    beta: complex
    # exact (|alpha|^2, |beta|^2) when known; enables the rational paths
    weights: tuple | None = None
    tol: Tolerances = DEFAULT_TOL
    max_copies: int = DEFAULT_CAPS.max_copies

    def __post_init__(self):
        if isinstance(self.M, bool) or not isinstance(self.M, int):
            raise OutOfRange(f"M must be an integer, got {self.M!r}")
        if not 1 <= self.M <= self.max_copies:
            raise OutOfRange(f"M = {self.M} outside 1..{self.max_copies}")
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))
        total = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(total - 1.0) > self.tol.norm:
            raise NotNormalized(f"|alpha|^2 + |beta|^2 = {total!r}")
        if self.weights is not None:
            a2, b2 = (Fraction(w) for w in self.weights)
            if a2 < 0 or b2 < 0 or a2 + b2 != 1:
                raise NotNormalized(f"exact weights {a2} + {b2} != 1")
            object.__setattr__(self, "weights", (a2, b2))

    @classmethod
    def exact(cls, M: int, alpha_sq, beta_sq=None, **kwargs) -> "EnsembleSpec":
        """Spec with real nonnegative amplitudes and exact squared magnitudes."""
        a2 = exact_value(alpha_sq)
        b2 = 1 - a2 if beta_sq is None else exact_value(beta_sq)
        if a2 < 0 or b2 < 0 or a2 + b2 != 1:
            raise NotNormalized(f"|alpha|^2 = {a2}, |beta|^2 = {b2} do not sum to 1")
        return cls(M, math.sqrt(a2), math.sqrt(b2), (a2, b2), **kwargs)

    @classmethod
    def equal(cls, M: int, **kwargs) -> "EnsembleSpec":
        return cls.exact(M, Fraction(1, 2), **kwargs)


# -- explicit states ----------------------------------------------------------


def build_ensemble(spec: EnsembleSpec, caps: Caps = DEFAULT_CAPS) -> PureState:
    M = spec.M
    if 4**M > caps.max_dimension:
        raise DimensionCap(
            f"explicit ensemble for M = {M} needs 4^{M} amplitudes (cap {caps.max_dimension}); "
            "use the formula path"
        )
    w = hamming_weights(M)
    size = 2**M
    amps = np.zeros((size, size), dtype=np.complex128)
    amps[np.arange(size), np.arange(size)] = spec.alpha ** (M - w) * spec.beta**w
    return PureState(ensemble_layout(M), amps.reshape(-1))


def attach_counter(state: PureState, spec: EnsembleSpec, caps: Caps = DEFAULT_CAPS) -> PureState:
    """Append ``C`` holding the number of ones in the record string.

    This is the net effect of the controlled-increment circuit
    ``counter_circuit(M)`` acting on ``|c_0>``.
    """
    M = spec.M
    if state.layout != ensemble_layout(M):
        raise SpecMismatch(f"state layout {state.labels} is not the M = {M} ensemble layout")
    size = 2**M
    if size * size * (M + 1) > caps.max_dimension:
        raise DimensionCap(
            f"counter-extended state for M = {M} needs {size * size * (M + 1)} amplitudes "
            f"(cap {caps.max_dimension}); use the formula path"
        )
    counts = np.tile(hamming_weights(M), size)  # ones in the record part of each index
    amps = np.zeros((size * size, M + 1), dtype=np.complex128)
    amps[np.arange(size * size), counts] = state.amplitudes
    return PureState(ensemble_layout(M, with_counter=True), amps.reshape(-1))


def counter_circuit(M: int) -> list[LocalUnitary]:
    """Controlled increments ``|1>_{A_k} (x) (c -> c + 1 mod M+1)``, k = 1..M."""
    d = M + 1
    shift = np.roll(np.eye(d), 1, axis=0)
    gate = np.block([[np.eye(d), np.zeros((d, d))], [np.zeros((d, d)), shift]])
    return [LocalUnitary((a, COUNTER), gate) for a in record_labels(M)]


def counter_marginal(state_with_counter: PureState) -> np.ndarray:
    """Probability of each counter level (diagonal of the reduced state of C)."""
    rho = partial_trace(state_with_counter, [COUNTER]).matrix
    return np.diag(rho).real.copy()


# -- count sectors ----------------------------------------------------------------


@dataclass(frozen=True)
class SectorState:
    """Handle on the normalised sector state ``|s_m>``."""

    M: int
    m: int

    @property
    def multiplicity(self) -> int:
        return math.comb(self.M, self.m)

    def sequences(self) -> Iterator[str]:
        """Outcome strings with ``m`` ones, in lexicographic order."""
        M, m = self.M, self.m
        if m == 0:
            yield "0" * M
            return
        x = (1 << m) - 1
        end = 1 << M
        while x < end:
            yield format(x, f"0{M}b")
            # next integer with the same popcount
            low = x & -x
            ripple = x + low
            x = (((ripple ^ x) >> 2) // low) | ripple

    def vector(self) -> PureState:
        """Explicit ``C(M,m)^{-1/2} sum_s |s>|A_s>`` over S1..SM, A1..AM."""
        size = 2**self.M
        amps = np.zeros((size, size), dtype=np.complex128)
        idx = np.flatnonzero(hamming_weights(self.M) == self.m)
        amps[idx, idx] = 1.0 / math.sqrt(self.multiplicity)
        return PureState(ensemble_layout(self.M), amps.reshape(-1))


@dataclass(frozen=True)
class Sector:
    m: int
    multiplicity: int
    amplitude: complex
    state: SectorState


@dataclass(frozen=True)
class CountSectorDecomposition:
    M: int
    sectors: tuple
    path: str  # "formula" or "explicit"

    def amplitudes(self) -> np.ndarray:
        return np.array([s.amplitude for s in self.sectors])

    def multiplicities(self) -> list:
        return [s.multiplicity for s in self.sectors]


def sector_amplitudes(spec: EnsembleSpec) -> np.ndarray:
    """``Gamma_m = sqrt(C(M, m)) alpha^(M-m) beta^m`` for m = 0..M."""
    M = spec.M
    return np.array(
        [math.sqrt(math.comb(M, m)) * spec.alpha ** (M - m) * spec.beta**m for m in range(M + 1)]
    )


def _decomposition(spec: EnsembleSpec, amps, path: str) -> CountSectorDecomposition:
    M = spec.M
    sectors = tuple(
        Sector(m, math.comb(M, m), complex(amps[m]), SectorState(M, m)) for m in range(M + 1)
    )
    return CountSectorDecomposition(M, sectors, path)


def expand_count_sectors(
    spec: EnsembleSpec, state: PureState | None = None, tol: Tolerances = DEFAULT_TOL
) -> CountSectorDecomposition:
    """Group branches by number of ones.

    Without ``state`` the amplitudes come from the closed form.  With an
    explicit ``state`` (from ``build_ensemble``) each ``Gamma_m`` is read off
    as ``<s_m|state>`` and checked against the closed form.
    """
    formula = sector_amplitudes(spec)
    if state is None:
        return _decomposition(spec, formula, "formula")
    M = spec.M
    if state.layout != ensemble_layout(M):
        raise SpecMismatch(f"state layout {state.labels} is not the M = {M} ensemble layout")
    size = 2**M
    mat = state.amplitudes.reshape(size, size)
    diag = np.diag(mat)
    off = float(np.linalg.norm(mat - np.diag(diag)))
    if off > tol.state:
        raise SpecMismatch(f"state has weight {off:.3e} on uncorrelated outcome/record pairs")
    weights = hamming_weights(M)
    explicit = np.zeros(M + 1, dtype=np.complex128)
    for m in range(M + 1):
        block = diag[weights == m]
        explicit[m] = block.sum() / math.sqrt(len(block))
        spread = float(np.linalg.norm(block - explicit[m] / math.sqrt(len(block))))
        if spread > tol.state:
            raise SpecMismatch(f"sector {m} is not a uniform superposition (spread {spread:.3e})")
    gap = float(np.max(np.abs(explicit - formula)))
    if gap > tol.state:
        raise SpecMismatch(f"explicit sector amplitudes differ from spec by {gap:.3e}")
    return _decomposition(spec, explicit, "explicit")


def dual_decompositions(
    state_with_counter: PureState,
) -> tuple[SchmidtDecomposition, SchmidtDecomposition]:
    """Schmidt decompositions across S|AC (outcome sequences) and SA|C (counts)."""
    labels = state_with_counter.labels
    if not labels or labels[-1] != COUNTER or len(labels) % 2 != 1:
        raise LayoutMismatch(f"expected S1..SM, A1..AM, C; got {labels}")
    M = (len(labels) - 1) // 2
    if state_with_counter.layout != ensemble_layout(M, with_counter=True):
        raise LayoutMismatch(f"expected S1..SM, A1..AM, C; got {labels}")
    s_side = outcome_labels(M)
    by_sequence = schmidt_decompose(
        state_with_counter, Bipartition(s_side, record_labels(M) + (COUNTER,))
    )
    by_count = schmidt_decompose(state_with_counter, Bipartition(s_side + record_labels(M), (COUNTER,)))
    return by_sequence, by_count


# -- exact statistics --------------------------------------------------------------


@dataclass(frozen=True)
class CountDistribution:
    M: int
    probabilities: tuple  # Fractions on the exact path, floats otherwise
    exact: bool

    def total(self):
        return sum(self.probabilities, Fraction(0) if self.exact else 0.0)


def binomial_weights(M: int, p0: Fraction, p1: Fraction) -> list[Fraction]:
    return [math.comb(M, m) * p0 ** (M - m) * p1**m for m in range(M + 1)]


def count_distribution(spec: EnsembleSpec) -> CountDistribution:
    M = spec.M
    if spec.weights is None:
        a2, b2 = abs(spec.alpha) ** 2, abs(spec.beta) ** 2
        probs = tuple(math.comb(M, m) * a2 ** (M - m) * b2**m for m in range(M + 1))
        return CountDistribution(M, probs, exact=False)
    a2, b2 = spec.weights
    probs = tuple(binomial_weights(M, a2, b2))
    if sum(probs) != 1:
        raise NotNormalized(f"count probabilities sum to {sum(probs)}")
    return CountDistribution(M, probs, exact=True)


def _decimal(x) -> Fraction:
    # floats are read as the decimal they print as, so 0.1 means 1/10
    if isinstance(x, float):
        return Fraction(repr(x))
    return exact_value(x)


def maverick_fraction(M: int, epsilon, bias) -> Fraction:
    """Exact weight of count sectors whose frequency ``m/M`` strays more than
    ``epsilon`` from ``bias = |beta|^2``."""
    if isinstance(M, bool) or not isinstance(M, int) or M < 1:
        raise OutOfRange(f"M must be a positive integer, got {M!r}")
    eps = _decimal(epsilon)
    b = _decimal(bias)
    if not 0 < eps < 1:
        raise OutOfRange(f"epsilon {epsilon!r} outside (0, 1)")
    if not 0 <= b <= 1:
        raise OutOfRange(f"bias {bias!r} outside [0, 1]")
    total = Fraction(0)
    for m in range(M + 1):
        if abs(Fraction(m, M) - b) > eps:
            total += math.comb(M, m) * (1 - b) ** (M - m) * b**m
    return total


def sector_table(spec: EnsembleSpec) -> list[dict]:
    """Rows ``(m, C(M,m), |Gamma_m|, p_m)`` on the formula path."""
    dec = expand_count_sectors(spec)
    dist = count_distribution(spec)
    return [
        {
            "m": s.m,
            "multiplicity": s.multiplicity,
            "abs_amplitude": abs(s.amplitude),
            "probability": p,
        }
        for s, p in zip(dec.sectors, dist.probabilities)
    ]
