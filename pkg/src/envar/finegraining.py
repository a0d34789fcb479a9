"""Finegraining unequal coefficients into equiprobable branches.

``sqrt(n)|0>|eps_0> + sqrt(m)|1>|eps_1>`` is rewritten over ``N = n + m``
orthonormal environment levels, each entangled with a record ``|e_i>`` in a
second environment ``E'``:

    |0> sum_{i<n} |eps_i>|e_i>  +  |1> sum_{i>=n} |eps_i>|e_i>

Every branch then carries amplitude ``1/sqrt(N)`` and swaps of records on
``E'`` are envariant, which fixes each branch probability to ``1/N``.  The
probabilities of the two outcomes follow by counting, either by adding branch
probabilities or by a chain of complementations that never adds.
"""

from __future__ import annotations

import decimal
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .config import DEFAULT_CAPS, DEFAULT_TOL, Caps, Tolerances
from .envariance import EquiprobabilityCertificate, certify_branch_swaps
from .errors import DimensionCap, OutOfRange
from .schmidt import Bipartition
from .state import LocalUnitary, PureState, SubsystemLayout

SYSTEM, ENV, RECORD = "S", "E", "E'"
RECORD_CUT = Bipartition((SYSTEM, ENV), (RECORD,))

SWAP_CERTIFICATE = "swap-certificate"
COMPLEMENTATION = "complementation"
INDUCTION = "induction"
ADDITIVITY = "additivity"
STEP_KINDS = (SWAP_CERTIFICATE, COMPLEMENTATION, INDUCTION, ADDITIVITY)


@dataclass(frozen=True)
class CommensurateInput:
    n: int
    m: int

    def __post_init__(self):
        for name in ("n", "m"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise OutOfRange(f"{name} must be a positive integer, got {value!r}")

    @property
    def branches(self) -> int:
        return self.n + self.m


@dataclass(frozen=True, eq=False)
class FinegrainedState:
    state: PureState
    branch_map: dict  # branch i (1-based) -> outcome 0 or 1
    n: int
    m: int

    @property
    def branches(self) -> int:
        return self.n + self.m


@dataclass(frozen=True)
class ProofStep:
    kind: str
    event: str
    value: Fraction
    statement: str
    uses: tuple = ()  # indices of earlier steps this one relies on
    detail: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in STEP_KINDS:
            raise ValueError(f"unknown step kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "event": self.event,
            "value": self.value,
            "statement": self.statement,
            "uses": list(self.uses),
            "detail": self.detail,
        }


@dataclass(frozen=True)
class ProbabilityAssignment:
    p0: Fraction
    p1: Fraction
    derivation: tuple

    def __post_init__(self):
        if self.p0 + self.p1 != 1:
            raise ValueError(f"p0 + p1 = {self.p0 + self.p1}, not 1")

    def kinds(self) -> list:
        return [step.kind for step in self.derivation]


@dataclass(frozen=True)
class DedekindBounds:
    target: Fraction
    lower: Fraction
    upper: Fraction
    denominator_bound: int
    # commensurate (n, m) weights realising each bound as p(0) = n / (n + m);
    # None when the bound is 0 or 1 and no such state exists
    lower_input: CommensurateInput | None
    upper_input: CommensurateInput | None

    @property
    def gap(self) -> Fraction:
        return self.upper - self.lower


# -- construction ---------------------------------------------------------


def _check_caps(inp: CommensurateInput, caps: Caps) -> None:
    total = inp.branches
    if total > caps.max_branches:
        raise DimensionCap(f"n + m = {total} exceeds the branch cap {caps.max_branches}")
    if 2 * total * total > caps.max_dimension:
        raise DimensionCap(
            f"finegrained state needs {2 * total * total} amplitudes, cap is {caps.max_dimension}"
        )


def finegrain(inp: CommensurateInput, caps: Caps = DEFAULT_CAPS) -> FinegrainedState:
    _check_caps(inp, caps)
    n, total = inp.n, inp.branches
    layout = SubsystemLayout((SYSTEM, ENV, RECORD), (2, total, total))
    amps = np.zeros((2, total, total), dtype=np.complex128)
    idx = np.arange(total)
    outcomes = (idx >= n).astype(int)
    amps[outcomes, idx, idx] = 1.0 / math.sqrt(total)
    branch_map = {i + 1: int(outcomes[i]) for i in range(total)}
    return FinegrainedState(PureState(layout, amps.reshape(-1)), branch_map, inp.n, inp.m)


@dataclass(frozen=True, eq=False)
class CoarseGrained:
    """Result of undoing the record entanglement and regrouping branches."""

    coefficients: tuple  # amplitudes on |0>|eps_0> and |1>|eps_1>
    record_residual: float  # norm left outside |e_0> after disentangling E'
    group_residual: float  # norm outside the two grouped branch states
    state: PureState  # over S and the grouped environment (both dim 2)


def coarse_grain(fs: FinegrainedState) -> CoarseGrained:
    total = fs.branches
    amps = fs.state.tensor_view()
    # |eps_i>|e_j> -> |eps_i>|e_{j-i mod N}> disentangles the records
    idx = np.arange(total)
    shifted = np.empty_like(amps)
    for i in range(total):
        shifted[:, i, (idx - i) % total] = amps[:, i, :]
    record_residual = float(np.linalg.norm(shifted[:, :, 1:]))
    psi_se = shifted[:, :, 0]
    eps0 = np.where(idx < fs.n, 1.0, 0.0) / math.sqrt(fs.n)
    eps1 = np.where(idx >= fs.n, 1.0, 0.0) / math.sqrt(fs.m)
    c0 = complex(eps0 @ psi_se[0])
    c1 = complex(eps1 @ psi_se[1])
    leftover = psi_se.copy()
    leftover[0] -= c0 * eps0
    leftover[1] -= c1 * eps1
    grouped = PureState(SubsystemLayout((SYSTEM, ENV), (2, 2)), [c0, 0, 0, c1])
    return CoarseGrained((c0, c1), record_residual, float(np.linalg.norm(leftover)), grouped)


# -- equiprobability of branches ------------------------------------------


def record_swap_certificate(fs: FinegrainedState, tol: Tolerances = DEFAULT_TOL) -> EquiprobabilityCertificate:
    """Certify directly that every pair of records on E' is envariantly swappable."""
    return certify_branch_swaps(fs.state, RECORD_CUT, (RECORD,), np.eye(fs.branches), tol)


def _reference(total: int) -> FinegrainedState:
    caps = Caps(max_branches=total, max_dimension=2 * total * total)
    return finegrain(CommensurateInput(total - 1, 1), caps)


@lru_cache(maxsize=512)
def _reference_certificate(total: int) -> EquiprobabilityCertificate:
    return record_swap_certificate(_reference(total))


def _relabel_permutation(fs: FinegrainedState) -> np.ndarray:
    # level k of S(x)E goes to perm[k]; an involution
    total = fs.branches
    perm = np.arange(2 * total).reshape(2, total)
    flip = np.arange(fs.n, total - 1)
    perm[0, flip], perm[1, flip] = perm[1, flip].copy(), perm[0, flip].copy()
    return perm.reshape(-1)


def relabeling(fs: FinegrainedState):
    """Permutation on S(x)E turning finegrain(N-1, 1) into ``fs``.

    It flips the outcome of branches ``n .. N-2`` (0-based) and touches
    nothing on E', so swaps of records keep their envariance.
    """
    perm = _relabel_permutation(fs)
    mat = np.zeros((len(perm), len(perm)))
    mat[perm, np.arange(len(perm))] = 1.0
    return LocalUnitary.trusted((SYSTEM, ENV), mat)


def branch_certificate(
    fs: FinegrainedState, tol: Tolerances = DEFAULT_TOL, direct: bool = False
) -> tuple[EquiprobabilityCertificate, dict]:
    """Equiprobability of the ``N`` branches of ``fs``.

    With ``direct`` every record swap is decided on ``fs`` itself.  Otherwise
    the certificate of the reference state finegrain(N-1, 1) is reused after
    checking that ``fs`` is that reference moved by a relabeling unitary on
    S(x)E; a unitary on the complement of E' leaves the reduced state of E'
    and hence every record-swap verdict unchanged.
    """
    total = fs.branches
    if direct or tol != DEFAULT_TOL:
        return record_swap_certificate(fs, tol), {"route": "direct"}
    if fs.m == 1:
        # fs is the reference state itself
        return _reference_certificate(total), {"route": "direct"}
    # same action as apply_local(reference, relabeling(fs)), done by indexing
    ref = _reference(total).state.amplitudes.reshape(2 * total, total)
    moved = np.empty_like(ref)
    moved[_relabel_permutation(fs)] = ref
    residual = float(np.max(np.abs(moved.reshape(-1) - fs.state.amplitudes)))
    if residual > tol.state:
        raise AssertionError(f"relabeling misses the finegrained state by {residual:.3e}")
    info = {"route": "relabeled", "reference": [total - 1, 1], "relabel_residual": residual}
    return _reference_certificate(total), info


# -- Born probabilities ---------------------------------------------------


def _certificate_step(cert: EquiprobabilityCertificate, n: int, m: int, info: dict) -> ProofStep:
    total = len(cert.branch_indices)
    detail = {"n": n, "m": m, "branches": total, "max_swap_residual": cert.max_residual}
    detail.update(info)
    return ProofStep(
        SWAP_CERTIFICATE,
        f"one branch of {total}",
        cert.probability_each,
        f"all {total} branches of finegrain({n}, {m}) are envariantly swappable",
        detail=detail,
    )


def born_probabilities(
    inp: CommensurateInput, tol: Tolerances = DEFAULT_TOL, caps: Caps = DEFAULT_CAPS
) -> ProbabilityAssignment:
    """``p(0) = n/(n+m)``, ``p(1) = m/(n+m)`` by adding equiprobable branches."""
    fs = finegrain(inp, caps)
    cert, info = branch_certificate(fs, tol)
    steps = [_certificate_step(cert, inp.n, inp.m, info)]
    for outcome in (0, 1):
        members = [i for i, o in fs.branch_map.items() if o == outcome]
        value = sum((cert.probability_each for _ in members), Fraction(0))
        steps.append(
            ProofStep(
                ADDITIVITY,
                f"outcome {outcome}",
                value,
                f"outcome {outcome} groups {len(members)} equiprobable branches",
                uses=(0,),
                detail={"branches": members},
            )
        )
    return ProbabilityAssignment(steps[1].value, steps[2].value, tuple(steps))


def born_without_additivity(
    inp: CommensurateInput, tol: Tolerances = DEFAULT_TOL, caps: Caps = DEFAULT_CAPS
) -> ProbabilityAssignment:
    """Same probabilities, derived without adding probabilities of disjoint events.

    Schedule: for each ``j`` from ``N`` down to ``n + 1`` the single-branch
    case finegrain(j-1, 1) gives ``1/j`` by swaps and ``(j-1)/j`` for its
    complement.  Descending induction then nests the ``j-1`` branch event
    inside the ``j`` branch event:
    ``P(j-1 of N) = P(j-1 of j) * P(j of N)``, ending at ``P(n of N) = p(0)``.
    ``p(1)`` is the complement of ``p(0)``.
    """
    _check_caps(inp, caps)
    n, total = inp.n, inp.branches
    steps: list[ProofStep] = []

    def base_case(j: int) -> tuple[int, int]:
        # finegrain(j-1, 1) is the reference state, certified once per j
        _check_caps(CommensurateInput(j - 1, 1), caps)
        cert, info = _reference_certificate(j), {"route": "direct"}
        steps.append(_certificate_step(cert, j - 1, 1, info))
        single = len(steps) - 1
        steps.append(
            ProofStep(
                COMPLEMENTATION,
                f"{j - 1} of {j} branches",
                1 - cert.probability_each,
                f"complement of a single branch among {j}",
                uses=(single,),
            )
        )
        return single, len(steps) - 1

    single, complement = base_case(total)
    if inp.m == 1:
        p1 = steps[single].value
        p0 = steps[complement].value
        return ProbabilityAssignment(p0, p1, tuple(steps))

    # chained[k] is the step holding P(k of N)
    chained = complement
    for j in range(total - 1, n, -1):
        _, inner = base_case(j)
        steps.append(
            ProofStep(
                INDUCTION,
                f"{j - 1} of {total} branches",
                steps[inner].value * steps[chained].value,
                f"{j - 1} branches nested in {j} of {total}: P({j - 1}/{j}) * P({j}/{total})",
                uses=(inner, chained),
            )
        )
        chained = len(steps) - 1
    p0 = steps[chained].value
    steps.append(
        ProofStep(
            COMPLEMENTATION,
            "outcome 1",
            1 - p0,
            f"outcome 1 is the complement of outcome 0 ({n} of {total} branches)",
            uses=(chained,),
        )
    )
    return ProbabilityAssignment(p0, steps[-1].value, tuple(steps))


# -- incommensurate targets -----------------------------------------------


def exact_value(x) -> Fraction:
    """Exact rational value of a real number given as int, float, Fraction,
    Decimal, decimal string, or mpmath ``mpf`` (its binary value, exactly)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise OutOfRange("target must be a real number")
    if isinstance(x, (int, float, decimal.Decimal)):
        if isinstance(x, float) and not math.isfinite(x):
            raise OutOfRange(f"target {x!r} is not finite")
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except ValueError as exc:
            raise OutOfRange(f"cannot read {x!r} as a number") from exc
    man_exp = getattr(x, "man_exp", None)
    if man_exp is not None:
        man, exp = man_exp
        return Fraction(int(man)) * Fraction(2) ** int(exp)
    raise OutOfRange(f"unsupported target type {type(x).__name__}")


def dedekind_bounds(target, denominator_bound: int) -> DedekindBounds:
    """Rational bounds ``floor(tD)/D <= t <= ceil(tD)/D`` realised as
    commensurate finegrainable states.  Pinning ``p`` by these bounds assumes
    the probability depends continuously on the state."""
    x = exact_value(target)
    if not 0 < x < 1:
        raise OutOfRange(f"target {target!r} is outside (0, 1)")
    if isinstance(denominator_bound, bool) or not isinstance(denominator_bound, int):
        raise OutOfRange("denominator bound must be an integer")
    if denominator_bound < 2:
        raise OutOfRange("denominator bound must be >= 2")
    d = denominator_bound
    lo = math.floor(x * d)
    hi = math.ceil(x * d)

    def realise(k: int) -> CommensurateInput | None:
        return CommensurateInput(k, d - k) if 0 < k < d else None

    bounds = DedekindBounds(x, Fraction(lo, d), Fraction(hi, d), d, realise(lo), realise(hi))
    assert bounds.lower <= x <= bounds.upper and bounds.gap <= Fraction(1, d)
    return bounds
