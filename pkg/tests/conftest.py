import string
import sys

import numpy as np
import pytest

from envar.ensemble import counter_circuit, ensemble_layout
from envar.schmidt import Bipartition
from envar.state import (
    LocalUnitary,
    PureState,
    SubsystemLayout,
    apply_local,
    haar_unitary,
    random_state,
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def bell():
    return PureState.from_terms(("S", "E"), (2, 2), {(0, 0): 2**-0.5, (1, 1): 2**-0.5})


def two_branch(p0):
    """sqrt(p0)|00> + sqrt(1 - p0)|11> over S, E."""
    return PureState.from_terms(("S", "E"), (2, 2), {(0, 0): p0**0.5, (1, 1): (1 - p0) ** 0.5})


def einsum_partial_trace(amps, dims, keep):
    """Reduced density matrix by a single einsum over an index string.

    Independent of the library's reshape-and-matmul route.
    """
    letters = string.ascii_letters
    n = len(dims)
    ket = list(letters[:n])
    bra = list(ket)
    for axis in keep:
        bra[axis] = letters[n + axis]
    out = [ket[a] for a in keep] + [bra[a] for a in keep]
    t = np.asarray(amps).reshape(dims)
    rho = np.einsum(f"{''.join(ket)},{''.join(bra)}->{''.join(out)}", t, t.conj())
    d = int(np.prod([dims[a] for a in keep]))
    return rho.reshape(d, d)


def schmidt_state(rng, left, right, coeffs):
    """State sum_k c_k |a_k>|b_k> with Haar-random Schmidt bases.

    ``left``/``right`` are (labels, dims).  Returns the state and the left
    Schmidt basis as columns.
    """
    dl, dr = int(np.prod(left[1])), int(np.prod(right[1]))
    a = haar_unitary(dl, rng)
    b = haar_unitary(dr, rng)
    c = np.zeros((dl, dr), dtype=complex)
    c[np.arange(len(coeffs)), np.arange(len(coeffs))] = coeffs
    amps = a @ c @ b.T
    state = PureState.from_dict(
        {
            "labels": list(left[0] + right[0]),
            "dims": list(left[1] + right[1]),
            "amplitudes": [[z.real, z.imag] for z in amps.reshape(-1)],
        }
    )
    return state, a


def _block_unitary(rng, coeffs):
    """Unitary mixing only branches with equal coefficients, identity-padded."""
    u = np.zeros((len(coeffs), len(coeffs)), dtype=complex)
    for value in np.unique(coeffs):
        idx = np.flatnonzero(coeffs == value)
        u[np.ix_(idx, idx)] = haar_unitary(len(idx), rng)
    return u


def envariance_pairs(rng, count):
    """Random (state, unitary, cut) triples on at most 3+3 qubits.

    Cycles through constructions that are envariant by design (Schmidt-basis
    phases, rotations inside degenerate blocks, local unitaries on Bell pairs)
    and ones that generally are not (Haar unitaries on random states,
    coefficient-breaking permutations).
    """
    pairs = []
    for k in range(count):
        kind = k % 5
        p, q = (int(x) for x in rng.integers(1, 4, size=2))
        side = [f"S{i}" for i in range(p)]
        other = [f"E{i}" for i in range(q)]
        if rng.random() < 0.5:
            side, other = [x.replace("S", "X") for x in side], [x.replace("E", "Y") for x in other]
        cut = Bipartition(tuple(side), tuple(other))
        if kind == 0:
            labels = tuple(side + other)
            psi = random_state(labels, (2,) * len(labels), rng)
            t = int(rng.integers(1, len(side) + 1))
            target = tuple(rng.choice(side, size=t, replace=False))
            u = LocalUnitary(target, haar_unitary(2**t, rng))
        elif kind == 4:
            # Bell pairs (side_i, other_i); any unitary on side qubits is undone on their partners
            pairs_n = min(p, q)
            labels = tuple(side + other)
            amps = np.ones(1)
            single = np.array([1, 0, 0, 1]) / np.sqrt(2)
            for _ in range(pairs_n):
                amps = np.kron(amps, single)
            rest = len(labels) - 2 * pairs_n
            if rest:
                amps = np.kron(amps, random_state(("tmp",), (2**rest,), rng).amplitudes)
            order = [x for pair in zip(side, other) for x in pair]
            order += [x for x in labels if x not in order]
            psi = PureState(SubsystemLayout(tuple(order), (2,) * len(order)), amps)
            t = int(rng.integers(1, pairs_n + 1))
            target = tuple(rng.choice(side[:pairs_n], size=t, replace=False))
            u = LocalUnitary(target, haar_unitary(2**t, rng))
        else:
            dl, dr = 2**p, 2**q
            r = int(rng.integers(1, min(dl, dr) + 1))
            if kind == 1:
                raw = rng.uniform(0.2, 1.0, size=r)
            else:
                levels = rng.uniform(0.2, 1.0, size=max(1, r // 2))
                raw = rng.choice(levels, size=r)
            coeffs = np.sort(raw / np.linalg.norm(raw))[::-1]
            psi, a = schmidt_state(rng, (tuple(side), (2,) * p), (tuple(other), (2,) * q), coeffs)
            inner = np.eye(dl, dtype=complex)
            if kind == 1:
                inner[:r, :r] = np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, size=r)))
            elif kind == 2:
                inner[:r, :r] = _block_unitary(rng, coeffs)
            else:
                inner[:r, :r] = np.eye(r)[rng.permutation(r)]
            inner[r:, r:] = haar_unitary(dl - r, rng) if dl > r else inner[r:, r:]
            u = LocalUnitary(tuple(side), a @ inner @ a.conj().T)
        pairs.append((psi, u, cut))
    return pairs


def kron_ensemble(M, alpha, beta):
    """Amplitudes of M copies of alpha|0>|a0> + beta|1>|a1>, ordered S1..SM, A1..AM.

    Built as a plain Kronecker product over (S_k, A_k) pairs, then transposed.
    """
    pair = np.array([alpha, 0, 0, beta], dtype=complex)
    amps = np.ones(1, dtype=complex)
    for _ in range(M):
        amps = np.kron(amps, pair)
    t = amps.reshape((2,) * (2 * M))
    order = list(range(0, 2 * M, 2)) + list(range(1, 2 * M, 2))
    return np.transpose(t, order).reshape(-1)


def circuit_counter(M, amps):
    """Append C = |0> and run the controlled-increment gates one by one."""
    start = np.zeros(M + 1)
    start[0] = 1
    layout = ensemble_layout(M, with_counter=True)
    psi = PureState(layout, np.kron(amps, start))
    for gate in counter_circuit(M):
        psi = apply_local(psi, gate)
    return psi


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
