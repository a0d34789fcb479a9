"""Pure states over labeled tensor factors.

Composite basis indices are mixed-radix with the first label as the most
significant digit, so ``amplitudes.reshape(layout.dims)`` gives the tensor
view with one axis per label.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .errors import (
    BadPartition,
    DuplicateLabel,
    LayoutMismatch,
    NotUnitary,
    StateFormatError,
    UnknownSubsystem,
    ZeroState,
)


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=np.complex128)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class SubsystemLayout:
    labels: tuple
    dims: tuple

    def __post_init__(self):
        labels = tuple(str(label) for label in self.labels)
        dims = tuple(int(d) for d in self.dims)
        if len(labels) != len(dims):
            raise ValueError("labels and dims differ in length")
        if not labels:
            raise ValueError("layout needs at least one subsystem")
        if len(set(labels)) != len(labels):
            raise DuplicateLabel(f"duplicate labels in {labels}")
        if any(d < 1 for d in dims):
            raise ValueError(f"dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dims", dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=object))

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownSubsystem(f"no subsystem {label!r} in {self.labels}") from None

    def dim(self, label: str) -> int:
        return self.dims[self.axis(label)]

    def ordered(self, labels: Iterable[str]) -> tuple:
        """Return ``labels`` sorted into layout order (unknown labels raise)."""
        wanted = set(labels)
        for label in wanted:
            self.axis(label)
        return tuple(label for label in self.labels if label in wanted)

    def concat(self, other: "SubsystemLayout") -> "SubsystemLayout":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise DuplicateLabel(f"labels {sorted(clash)} present on both sides")
        return SubsystemLayout(self.labels + other.labels, self.dims + other.dims)


@dataclass(frozen=True, eq=False)
class PureState:
    layout: SubsystemLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes).reshape(-1)
        if amps.size != self.layout.total_dim:
            raise LayoutMismatch(
                f"{amps.size} amplitudes for total dimension {self.layout.total_dim}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_terms(cls, labels, dims, terms: dict) -> "PureState":
        """Build a state from ``{digits: amplitude}``, e.g. ``{(0, 0): 1, (1, 1): 1}``."""
        layout = SubsystemLayout(labels, dims)
        amps = np.zeros(layout.total_dim, dtype=np.complex128)
        for digits, value in terms.items():
            amps[np.ravel_multi_index(tuple(digits), layout.dims)] += value
        return cls(layout, amps)

    @classmethod
    def basis(cls, labels, dims, digits) -> "PureState":
        return cls.from_terms(labels, dims, {tuple(digits): 1.0})

    @property
    def labels(self) -> tuple:
        return self.layout.labels

    @property
    def dims(self) -> tuple:
        return self.layout.dims

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: Tolerances = DEFAULT_TOL) -> bool:
        return abs(float(np.vdot(self.amplitudes, self.amplitudes).real) - 1.0) <= tol.norm

    def normalized(self) -> "PureState":
        norm = self.norm()
        if norm == 0:
            raise ZeroState("cannot normalize the zero vector")
        return PureState(self.layout, self.amplitudes / norm)

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)

    def inner(self, other: "PureState") -> complex:
        """``<self|other>``."""
        if self.layout != other.layout:
            raise LayoutMismatch(f"{self.layout} vs {other.layout}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def scaled(self, factor: complex) -> "PureState":
        return PureState(self.layout, self.amplitudes * factor)

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "dims": list(self.dims),
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data) -> "PureState":
        try:
            labels = data["labels"]
            dims = data["dims"]
            raw = data["amplitudes"]
            if not isinstance(labels, list) or not isinstance(dims, list):
                raise TypeError("labels and dims must be lists")
            if any(isinstance(d, bool) or not isinstance(d, int) for d in dims):
                raise TypeError("dims must be integers")
            amps = []
            for pair in raw:
                re, im = pair
                if isinstance(re, bool) or isinstance(im, bool):
                    raise TypeError("amplitude parts must be numbers")
                amps.append(complex(float(re), float(im)))
            return cls(SubsystemLayout(labels, dims), np.array(amps, dtype=np.complex128))
        except StateFormatError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise StateFormatError(f"malformed state: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "PureState":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise StateFormatError(f"invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise StateFormatError("state file must hold a JSON object")
        return cls.from_dict(data)


@dataclass(frozen=True, eq=False)
class LocalUnitary:
    """A unitary acting on one subsystem, or jointly on a group of subsystems.

    For a group target the matrix index is mixed-radix over ``target`` in the
    order given.
    """

    target: tuple
    matrix: np.ndarray
    tol: Tolerances = DEFAULT_TOL

    def __post_init__(self):
        target = (self.target,) if isinstance(self.target, str) else tuple(self.target)
        if not target:
            raise ValueError("unitary needs a target")
        if len(set(target)) != len(target):
            raise DuplicateLabel(f"duplicate target labels {target}")
        mat = _frozen(self.matrix)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise NotUnitary(f"matrix must be square, got shape {mat.shape}")
        err = np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0])))
        if err > self.tol.unitary:
            raise NotUnitary(f"U^dagger U deviates from identity by {err:.3e}")
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def trusted(cls, target, matrix: np.ndarray) -> "LocalUnitary":
        """Wrap a matrix that is unitary by construction, skipping the O(d^3) check."""
        u = object.__new__(cls)
        object.__setattr__(u, "target", (target,) if isinstance(target, str) else tuple(target))
        object.__setattr__(u, "matrix", _frozen(matrix))
        object.__setattr__(u, "tol", DEFAULT_TOL)
        return u

    def dagger(self) -> "LocalUnitary":
        return LocalUnitary(self.target, self.matrix.conj().T, self.tol)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    labels: tuple
    dims: tuple
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen(self.matrix))

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


# -- unitary constructors ----------------------------------------------


def swap_unitary(target, dim: int, i: int, j: int) -> LocalUnitary:
    """Exchange basis levels ``i`` and ``j``; identity elsewhere."""
    perm = np.arange(dim)
    perm[[i, j]] = perm[[j, i]]
    return permutation_unitary(target, perm)


def permutation_unitary(target, perm: Sequence[int]) -> LocalUnitary:
    """Unitary sending level ``k`` to level ``perm[k]``."""
    dim = len(perm)
    mat = np.zeros((dim, dim), dtype=np.complex128)
    mat[np.asarray(perm), np.arange(dim)] = 1.0
    return LocalUnitary(target, mat)


def phase_unitary(target, phases: Sequence[float]) -> LocalUnitary:
    return LocalUnitary(target, np.diag(np.exp(1j * np.asarray(phases, dtype=float))))


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix (phase-corrected)."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_state(labels, dims, rng: np.random.Generator) -> PureState:
    layout = SubsystemLayout(labels, dims)
    n = layout.total_dim
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return PureState(layout, v / np.linalg.norm(v))


# -- operations ----------------------------------------------------------


def tensor(a: PureState, b: PureState) -> PureState:
    layout = a.layout.concat(b.layout)
    return PureState(layout, np.kron(a.amplitudes, b.amplitudes))


def apply_matrix(tensor_amps: np.ndarray, axes: Sequence[int], matrix: np.ndarray) -> np.ndarray:
    """Contract ``matrix`` into ``axes`` of a tensor, keeping axis order.

    Trailing axes beyond the layout (e.g. a batch of vectors) are carried along.
    """
    k = len(axes)
    sub_shape = tuple(tensor_amps.shape[a] for a in axes)
    op = matrix.reshape(sub_shape + sub_shape)
    out = np.tensordot(op, tensor_amps, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def apply_local(state: PureState, u: LocalUnitary) -> PureState:
    layout = state.layout
    axes = [layout.axis(label) for label in u.target]
    expected = int(np.prod([layout.dims[a] for a in axes]))
    if expected != u.dim:
        raise LayoutMismatch(f"unitary of dim {u.dim} on subsystems of dim {expected}")
    out = apply_matrix(state.tensor_view(), axes, u.matrix)
    return PureState(layout, out.reshape(-1))


def bipartite_matrix(state: PureState, left: Iterable[str]) -> tuple[np.ndarray, tuple, tuple]:
    """Amplitude matrix with ``left`` labels as rows, the rest as columns.

    Both sides keep layout order.  Returns ``(matrix, left_labels, right_labels)``.
    """
    layout = state.layout
    left = layout.ordered(left)
    right = tuple(label for label in layout.labels if label not in left)
    if not left or not right:
        raise BadPartition("both sides of a bipartition must be nonempty")
    axes = [layout.axis(x) for x in left] + [layout.axis(x) for x in right]
    dl = int(np.prod([layout.dim(x) for x in left]))
    mat = np.transpose(state.tensor_view(), axes).reshape(dl, -1)
    return mat, left, right


def partial_trace(state: PureState, keep: Iterable[str]) -> DensityMatrix:
    keep = set(keep)
    if not keep or keep >= set(state.labels):
        raise BadPartition("keep-set must be a nonempty proper subset of the labels")
    mat, kept, _ = bipartite_matrix(state, keep)
    rho = mat @ mat.conj().T
    return DensityMatrix(kept, tuple(state.layout.dim(x) for x in kept), rho)


def states_equal_up_to_phase(a: PureState, b: PureState, tol: Tolerances = DEFAULT_TOL) -> bool:
    if a.layout != b.layout:
        raise LayoutMismatch(f"{a.layout} vs {b.layout}")
    overlap = abs(np.vdot(a.amplitudes, b.amplitudes))
    return bool(overlap >= (1.0 - tol.state) * a.norm() * b.norm())


def phase_aligned_distance(a: PureState, b: PureState) -> float:
    """``min_phi || e^{i phi} a - b ||``."""
    if a.layout != b.layout:
        raise LayoutMismatch(f"{a.layout} vs {b.layout}")
    overlap = np.vdot(a.amplitudes, b.amplitudes)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.linalg.norm(phase * a.amplitudes - b.amplitudes))
