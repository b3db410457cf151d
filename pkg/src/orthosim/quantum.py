"""Exact little-endian qubit engine.

Amplitude index ``i`` encodes qubit ``q`` in bit ``(i >> q) & 1``, so qubit
0 is the least significant bit.  Everything here is dense and exact, which
is why register sizes are capped at ``MAX_QUBITS``; the protocol layer
keeps entangled groups in separate small registers so the cap is never a
constraint in practice.

Also houses the Bell-pair toolbox (singlet preparation, dense coding, Bell
projection), the probe-interaction family used by eavesdropping models,
memoryless noise channels, and a :class:`QuantumRegistry` that tracks many
independent registers and the particles living in them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 14
NORM_TOL = 1e-10
TRACE_TOL = 1e-10
HERMITICITY_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-10
WEIGHT_SUM_TOL = 1e-12

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


class QuantumError(ValueError):
    """Base error for the qubit engine."""


class QuantumValidationError(QuantumError):
    """Malformed state, operator, or argument."""


class ResourceLimitError(QuantumError):
    """A register would exceed MAX_QUBITS."""


def _num_qubits_for(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim <= 0 or 2**n != dim:
        raise QuantumValidationError(f"dimension {dim} is not a power of two")
    return n


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state over ``num_qubits`` qubits."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        n = _num_qubits_for(amps.size)
        if n > MAX_QUBITS:
            raise ResourceLimitError(
                f"{n} qubits exceeds the MAX_QUBITS={MAX_QUBITS} guard"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL:
            raise QuantumValidationError(
                f"state norm {norm!r} deviates from 1 by more than {NORM_TOL}"
            )
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def num_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite operator."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = np.array(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise QuantumValidationError(f"matrix shape {mat.shape} is not square")
        n = _num_qubits_for(mat.shape[0])
        if n > MAX_QUBITS:
            raise ResourceLimitError(
                f"{n} qubits exceeds the MAX_QUBITS={MAX_QUBITS} guard"
            )
        if not np.allclose(mat, mat.conj().T, atol=HERMITICITY_TOL, rtol=0.0):
            raise QuantumValidationError("matrix is not Hermitian within tolerance")
        trace = complex(np.trace(mat))
        if abs(trace - 1.0) > TRACE_TOL:
            raise QuantumValidationError(
                f"trace {trace!r} deviates from 1 by more than {TRACE_TOL}"
            )
        smallest = float(np.linalg.eigvalsh(mat)[0])
        if smallest < EIGENVALUE_FLOOR:
            raise QuantumValidationError(
                f"eigenvalue {smallest!r} below the {EIGENVALUE_FLOOR} floor"
            )
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @property
    def num_qubits(self) -> int:
        return self.matrix.shape[0].bit_length() - 1


class BellOutcome(IntEnum):
    PHI_PLUS = 0
    PHI_MINUS = 1
    PSI_PLUS = 2
    PSI_MINUS = 3


_SQ2 = 1.0 / math.sqrt(2)
# rows indexed by BellOutcome; columns by local index 2*bit_first + bit_second
_BELL_BASIS = np.array(
    [
        [_SQ2, 0, 0, _SQ2],
        [_SQ2, 0, 0, -_SQ2],
        [0, _SQ2, _SQ2, 0],
        [0, _SQ2, -_SQ2, 0],
    ],
    dtype=complex,
)


def basis_state(num_qubits: int, index: int) -> StateVector:
    amps = np.zeros(2**num_qubits, dtype=complex)
    amps[index] = 1.0
    return StateVector(amps)


def singlet() -> StateVector:
    """Antisymmetric Bell pair, amplitudes (0, 1/sqrt2, -1/sqrt2, 0)."""
    return StateVector(np.array([0.0, _SQ2, -_SQ2, 0.0], dtype=complex))


def ry(angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2.0), math.sin(angle / 2.0)
    return np.array([[c, -s], [s, c]], dtype=complex)


def controlled_gate(gate: np.ndarray) -> np.ndarray:
    """Two-qubit block gate: identity on control 0, ``gate`` on control 1.

    Local ordering is (control, target): index = 2*control_bit + target_bit.
    """
    out = np.eye(4, dtype=complex)
    out[2:, 2:] = np.asarray(gate, dtype=complex)
    return out


def _axis(num_qubits: int, qubit: int) -> int:
    if not (0 <= qubit < num_qubits):
        raise QuantumValidationError(
            f"qubit index {qubit} outside [0, {num_qubits})"
        )
    return num_qubits - 1 - qubit


def _apply_gate_vec(amps: np.ndarray, gate: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """Apply a (2^k x 2^k) gate to qubits of a raw amplitude vector.

    ``qubits[0]`` is the most significant local index of the gate.
    """
    n = amps.size.bit_length() - 1
    axes = [_axis(n, q) for q in qubits]
    if len(set(qubits)) != len(qubits):
        raise QuantumValidationError(f"duplicate qubits in {qubits}")
    k = len(qubits)
    arr = amps.reshape([2] * n)
    arr = np.moveaxis(arr, axes, range(k))
    arr = (np.asarray(gate, dtype=complex) @ arr.reshape(2**k, -1)).reshape([2] * n)
    arr = np.moveaxis(arr, range(k), axes)
    return arr.reshape(-1)


def apply_single_qubit_gate(state: StateVector, gate: np.ndarray, qubit: int) -> StateVector:
    return StateVector(_apply_gate_vec(state.amplitudes, gate, [qubit]))


def apply_two_qubit_gate(
    state: StateVector, gate: np.ndarray, qubit_a: int, qubit_b: int
) -> StateVector:
    """Apply a 4x4 gate; its local index is ``2*bit_a + bit_b``."""
    return StateVector(_apply_gate_vec(state.amplitudes, gate, [qubit_a, qubit_b]))


_DENSE_OPS = {
    (0, 0): PAULI_I,
    (0, 1): PAULI_X,
    (1, 0): PAULI_Z,
    (1, 1): PAULI_X @ PAULI_Z,
}


def dense_encode(two_bits: Sequence[int], pair: StateVector, which: int = 0) -> StateVector:
    """Encode two classical bits on one half of an entangled pair.

    Bit pairs 00/01/10/11 map to I/X/Z/XZ on qubit ``which``.  Applied to
    the four bit pairs on a shared singlet this produces the four mutually
    orthogonal Bell states, so both bits are recoverable from one Bell
    measurement of the pair.
    """
    bits = tuple(int(b) for b in two_bits)
    if len(bits) != 2 or any(b not in (0, 1) for b in bits):
        raise QuantumValidationError(f"two_bits must be a pair of bits, got {two_bits!r}")
    op = _DENSE_OPS[bits]
    return apply_single_qubit_gate(pair, op, which)


def _project_bell(amps: np.ndarray, qubit_a: int, qubit_b: int, rng) -> tuple[int, np.ndarray]:
    """Sample a Bell outcome on two qubits of a raw vector and collapse it."""
    n = amps.size.bit_length() - 1
    if qubit_a == qubit_b:
        raise QuantumValidationError("bell measurement needs two distinct qubits")
    axes = (_axis(n, qubit_a), _axis(n, qubit_b))
    arr = np.moveaxis(amps.reshape([2] * n), axes, (0, 1)).reshape(4, -1)
    coeffs = _BELL_BASIS.conj() @ arr              # (4, rest)
    probs = np.einsum("kr,kr->k", coeffs, coeffs.conj()).real
    total = float(probs.sum())
    probs = probs / total
    u = rng.random()
    outcome = 3
    acc = 0.0
    for k in range(4):
        acc += probs[k]
        if u < acc:
            outcome = k
            break
    residual = coeffs[outcome] / math.sqrt(max(float(probs[outcome]) * total, 1e-300))
    post = np.outer(_BELL_BASIS[outcome], residual).reshape([2] * n)
    post = np.moveaxis(post, (0, 1), axes).reshape(-1)
    return outcome, post


def bell_measure(state: StateVector, qubit_a: int, qubit_b: int, rng) -> tuple[BellOutcome, StateVector]:
    """Projective Bell-basis measurement of two qubits.

    Outcome probabilities follow the Born rule; the returned state is the
    renormalized projection (for a bare pair, the Bell state itself).
    """
    outcome, post = _project_bell(state.amplitudes, qubit_a, qubit_b, rng)
    return BellOutcome(outcome), StateVector(post)


_X_BASIS = np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex)
_Z_BASIS = np.eye(2, dtype=complex)


def _project_qubit(amps: np.ndarray, qubit: int, basis: str, rng) -> tuple[int, np.ndarray]:
    n = amps.size.bit_length() - 1
    if basis == "Z":
        vecs = _Z_BASIS
    elif basis == "X":
        vecs = _X_BASIS
    else:
        raise QuantumValidationError(f"basis must be 'Z' or 'X', got {basis!r}")
    axis = _axis(n, qubit)
    arr = np.moveaxis(amps.reshape([2] * n), axis, 0).reshape(2, -1)
    coeffs = vecs.conj() @ arr
    p0 = float(np.vdot(coeffs[0], coeffs[0]).real)
    p1 = float(np.vdot(coeffs[1], coeffs[1]).real)
    total = p0 + p1
    outcome = 0 if rng.random() < p0 / total else 1
    picked = coeffs[outcome] / math.sqrt(max((p0 if outcome == 0 else p1), 1e-300))
    post = np.outer(vecs[outcome], picked).reshape([2] * n)
    post = np.moveaxis(post, 0, axis).reshape(-1)
    return outcome, post


def measure_qubit(state: StateVector, qubit: int, basis: str, rng) -> tuple[int, StateVector]:
    """Projective single-qubit measurement in the Z or X basis.

    X-basis outcome 0 is the +1 eigenstate.
    """
    outcome, post = _project_qubit(state.amplitudes, qubit, basis, rng)
    return outcome, StateVector(post)


def density(state: StateVector) -> DensityMatrix:
    return DensityMatrix(np.outer(state.amplitudes, state.amplitudes.conj()))


def _partial_trace_raw(mat: np.ndarray, num_qubits: int, keep: Sequence[int]) -> np.ndarray:
    keep_sorted = sorted(set(keep))
    for q in keep_sorted:
        _axis(num_qubits, q)
    traced = [q for q in range(num_qubits) if q not in keep_sorted]
    cur = mat
    cur_n = num_qubits
    for q in sorted(traced, reverse=True):
        low = 2**q
        high = 2 ** (cur_n - q - 1)
        six = cur.reshape(high, 2, low, high, 2, low)
        cur = np.einsum("abcdbf->acdf", six).reshape(2 ** (cur_n - 1), 2 ** (cur_n - 1))
        cur_n -= 1
    return cur


def partial_trace(dm: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Trace out all qubits not in ``keep``.

    Kept qubits preserve their relative order and are renumbered from 0.
    """
    if len(set(keep)) == 0:
        raise QuantumValidationError("keep must name at least one qubit")
    return DensityMatrix(_partial_trace_raw(dm.matrix, dm.num_qubits, keep))


def reduced_state(state: StateVector, keep: Sequence[int]) -> DensityMatrix:
    """Reduced density matrix of a pure state over the kept qubits."""
    n = state.num_qubits
    keep_sorted = sorted(set(keep))
    if not keep_sorted:
        raise QuantumValidationError("keep must name at least one qubit")
    traced_axes = [_axis(n, q) for q in range(n) if q not in keep_sorted]
    psi = state.amplitudes.reshape([2] * n)
    rho = np.tensordot(psi, psi.conj(), axes=(traced_axes, traced_axes))
    dim = 2 ** len(keep_sorted)
    return DensityMatrix(rho.reshape(dim, dim))


def _permute_qubits_raw(mat: np.ndarray, perm: Sequence[int]) -> np.ndarray:
    """Relabel qubits of a density matrix: new qubit ``j`` is old qubit
    ``perm[j]``."""
    n = _num_qubits_for(mat.shape[0])
    if sorted(perm) != list(range(n)):
        raise QuantumValidationError(f"{perm!r} is not a permutation of 0..{n - 1}")
    row_order = [n - 1 - perm[n - 1 - t] for t in range(n)]
    order = row_order + [n + a for a in row_order]
    return (
        mat.reshape([2] * (2 * n)).transpose(order).reshape(mat.shape)
    )


def permute_qubits(dm: DensityMatrix, perm: Sequence[int]) -> DensityMatrix:
    """Density matrix with qubits relabeled so that new qubit ``j`` holds
    what old qubit ``perm[j]`` held."""
    return DensityMatrix(_permute_qubits_raw(dm.matrix, perm))


def von_neumann_entropy(dm: DensityMatrix) -> float:
    """Entropy in bits; eigenvalues in [-1e-10, 0) are clipped to zero."""
    eigs = np.linalg.eigvalsh(dm.matrix)
    eigs = np.where((eigs < 0.0) & (eigs >= EIGENVALUE_FLOOR), 0.0, eigs)
    positive = eigs[eigs > 0.0]
    return float(-(positive * np.log2(positive)).sum())


def holevo_information(ensemble: Sequence[tuple[float, DensityMatrix]]) -> float:
    """Entropy of the average state minus the average entropy, in bits.

    Upper-bounds any classical information extractable from the ensemble.
    """
    if not ensemble:
        raise QuantumValidationError("ensemble must be nonempty")
    weights = [float(p) for p, _ in ensemble]
    if any(w < 0.0 for w in weights):
        raise QuantumValidationError("ensemble probabilities must be nonnegative")
    if abs(math.fsum(weights) - 1.0) > WEIGHT_SUM_TOL:
        raise QuantumValidationError("ensemble probabilities must sum to 1")
    dim = ensemble[0][1].matrix.shape[0]
    for _, dm in ensemble:
        if dm.matrix.shape[0] != dim:
            raise QuantumValidationError("ensemble states must share one dimension")
    avg = sum(p * dm.matrix for p, dm in ensemble)
    mean_entropy = math.fsum(p * von_neumann_entropy(dm) for p, dm in ensemble)
    return von_neumann_entropy(DensityMatrix(avg)) - mean_entropy


# --------------------------------------------------------------- noise


@dataclass(frozen=True)
class NoiseChannel:
    """Single-qubit memoryless channel, applied independently per use.

    ``depolarizing`` mixes toward the maximally mixed state with weight
    ``probability``; ``bit-flip`` applies X with that probability.
    """

    kind: str
    probability: float

    def __post_init__(self) -> None:
        if self.kind not in ("depolarizing", "bit-flip"):
            raise QuantumValidationError(f"unknown channel kind {self.kind!r}")
        if not (0.0 <= self.probability <= 1.0):
            raise QuantumValidationError(
                f"channel probability {self.probability!r} outside [0, 1]"
            )

    def kraus_operators(self) -> list[np.ndarray]:
        p = self.probability
        if self.kind == "bit-flip":
            return [math.sqrt(1.0 - p) * PAULI_I, math.sqrt(p) * PAULI_X]
        return [
            math.sqrt(1.0 - 0.75 * p) * PAULI_I,
            math.sqrt(0.25 * p) * PAULI_X,
            math.sqrt(0.25 * p) * PAULI_Y,
            math.sqrt(0.25 * p) * PAULI_Z,
        ]

    def pauli_mixture(self) -> list[tuple[float, np.ndarray]]:
        """The channel as a random-Pauli process (used for trajectories)."""
        p = self.probability
        if self.kind == "bit-flip":
            return [(1.0 - p, PAULI_I), (p, PAULI_X)]
        return [
            (1.0 - 0.75 * p, PAULI_I),
            (0.25 * p, PAULI_X),
            (0.25 * p, PAULI_Y),
            (0.25 * p, PAULI_Z),
        ]


def _apply_gate_dm(mat: np.ndarray, gate: np.ndarray, qubit: int) -> np.ndarray:
    n = _num_qubits_for(mat.shape[0])
    axis = _axis(n, qubit)
    arr = mat.reshape([2] * (2 * n))
    arr = np.moveaxis(arr, axis, 0).reshape(2, -1)
    arr = (gate @ arr).reshape([2] * (2 * n))
    arr = np.moveaxis(arr, 0, axis)
    # same rotation on the column index
    arr = np.moveaxis(arr, n + axis, 0).reshape(2, -1)
    arr = (gate.conj() @ arr).reshape([2] * (2 * n))
    arr = np.moveaxis(arr, 0, n + axis)
    return arr.reshape(mat.shape)


def apply_channel(state, channel: NoiseChannel, qubit: int) -> DensityMatrix:
    """Exact channel action on one qubit; accepts a StateVector or
    DensityMatrix and returns the output DensityMatrix."""
    if isinstance(state, StateVector):
        dm = density(state)
    elif isinstance(state, DensityMatrix):
        dm = state
    else:
        raise QuantumValidationError(f"unsupported state type {type(state)!r}")
    out = np.zeros_like(dm.matrix)
    for kraus in channel.kraus_operators():
        out = out + _apply_gate_dm(dm.matrix, kraus, qubit)
    return DensityMatrix(out)


def sample_channel(state: StateVector, channel: NoiseChannel, qubit: int, rng) -> StateVector:
    """One stochastic trajectory of the channel: a random Pauli applied
    with the channel's mixture weights.  Averaged over trajectories this
    reproduces ``apply_channel`` exactly."""
    u = rng.random()
    acc = 0.0
    mixture = channel.pauli_mixture()
    for weight, op in mixture:
        acc += weight
        if u < acc:
            if op is PAULI_I:
                return state
            return apply_single_qubit_gate(state, op, qubit)
    return state


# --------------------------------------------------------------- probe family


def _default_probe_state() -> StateVector:
    return basis_state(1, 0)


@dataclass(frozen=True)
class ProbeAttackSpec:
    """One-parameter entangling-probe family.

    The unitary acts on (system qubit, fresh probe qubit) as identity when
    the system is 0 and as a rotation of the probe by ``2*theta`` when the
    system is 1.  ``theta=0`` is transparent; ``theta=pi/2`` copies the
    system's computational bit onto the probe.
    """

    theta: float
    probe_state: StateVector = field(default_factory=_default_probe_state)

    def __post_init__(self) -> None:
        if not (0.0 <= self.theta <= math.pi / 2 + 1e-12):
            raise QuantumValidationError(
                f"theta {self.theta!r} outside [0, pi/2]"
            )
        if self.probe_state.num_qubits != 1:
            raise QuantumValidationError("probe must be a single qubit")
        u = self.unitary()
        if not np.allclose(u.conj().T @ u, np.eye(4), atol=1e-10, rtol=0.0):
            raise QuantumValidationError("probe unitary failed the unitarity check")

    def unitary(self) -> np.ndarray:
        """4x4 matrix on (system, probe) local ordering."""
        return controlled_gate(ry(2.0 * self.theta))


def probe_interact(system: StateVector, spec: ProbeAttackSpec, system_qubit: int = 0) -> StateVector:
    """Append the probe as a fresh highest-index qubit and entangle it
    with ``system_qubit`` via the attack's controlled rotation."""
    joint = np.kron(spec.probe_state.amplitudes, system.amplitudes)
    n = system.num_qubits + 1
    if n > MAX_QUBITS:
        raise ResourceLimitError(f"{n} qubits exceeds MAX_QUBITS={MAX_QUBITS}")
    out = _apply_gate_vec(joint, spec.unitary(), [system_qubit, n - 1])
    return StateVector(out)


# --------------------------------------------------------------- registry


class QuantumRegistry:
    """Bookkeeping for many independent registers.

    Particles are integer handles; each lives at a fixed qubit slot of
    some register.  Registers grow when probes attach and merge when a
    joint measurement spans two of them, and every register stays within
    the MAX_QUBITS guard.
    """

    def __init__(self) -> None:
        self._vectors: dict[int, np.ndarray] = {}
        self._sizes: dict[int, int] = {}
        self._loc: dict[int, tuple[int, int]] = {}
        self._next_register = 0
        self._next_particle = 0

    def allocate(self, state: StateVector) -> list[int]:
        """Add a register in ``state``; returns one particle id per qubit,
        index-aligned with the state's qubits."""
        reg = self._next_register
        self._next_register += 1
        self._vectors[reg] = np.array(state.amplitudes, dtype=complex)
        self._sizes[reg] = state.num_qubits
        ids = []
        for q in range(state.num_qubits):
            pid = self._next_particle
            self._next_particle += 1
            self._loc[pid] = (reg, q)
            ids.append(pid)
        return ids

    def _where(self, particle: int) -> tuple[int, int]:
        try:
            return self._loc[particle]
        except KeyError:
            raise QuantumValidationError(f"unknown particle id {particle}") from None

    def register_size(self, particle: int) -> int:
        reg, _ = self._where(particle)
        return self._sizes[reg]

    def state_vector(self, particle: int) -> StateVector:
        """Copy of the whole register holding ``particle``."""
        reg, _ = self._where(particle)
        return StateVector(self._vectors[reg].copy())

    def qubit_of(self, particle: int) -> int:
        return self._where(particle)[1]

    def apply_gate(self, particle: int, gate: np.ndarray) -> None:
        reg, q = self._where(particle)
        self._vectors[reg] = _apply_gate_vec(self._vectors[reg], gate, [q])

    def apply_pauli(self, particle: int, name: str) -> None:
        ops = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z,
               "XZ": PAULI_X @ PAULI_Z}
        if name not in ops:
            raise QuantumValidationError(f"unknown Pauli label {name!r}")
        if name != "I":
            self.apply_gate(particle, ops[name])

    def measure(self, particle: int, basis: str, rng) -> int:
        reg, q = self._where(particle)
        outcome, post = _project_qubit(self._vectors[reg], q, basis, rng)
        self._vectors[reg] = post
        return outcome

    def _merge(self, reg_a: int, reg_b: int) -> None:
        if reg_a == reg_b:
            return
        na, nb = self._sizes[reg_a], self._sizes[reg_b]
        if na + nb > MAX_QUBITS:
            raise ResourceLimitError(
                f"merge would create a {na + nb}-qubit register (cap {MAX_QUBITS})"
            )
        self._vectors[reg_a] = np.kron(self._vectors[reg_b], self._vectors[reg_a])
        self._sizes[reg_a] = na + nb
        for pid, (reg, q) in list(self._loc.items()):
            if reg == reg_b:
                self._loc[pid] = (reg_a, q + na)
        del self._vectors[reg_b], self._sizes[reg_b]

    def bell_measure(self, particle_a: int, particle_b: int, rng) -> BellOutcome:
        reg_a, _ = self._where(particle_a)
        reg_b, _ = self._where(particle_b)
        self._merge(reg_a, reg_b)
        reg, qa = self._where(particle_a)
        _, qb = self._where(particle_b)
        outcome, post = _project_bell(self._vectors[reg], qa, qb, rng)
        self._vectors[reg] = post
        return BellOutcome(outcome)

    def attach_probe(self, particle: int, spec: ProbeAttackSpec) -> int:
        """Entangle a fresh probe qubit with the particle; returns the
        probe's particle id."""
        reg, q = self._where(particle)
        n = self._sizes[reg]
        if n + 1 > MAX_QUBITS:
            raise ResourceLimitError(
                f"attaching a probe would exceed MAX_QUBITS={MAX_QUBITS}"
            )
        joint = np.kron(spec.probe_state.amplitudes, self._vectors[reg])
        self._vectors[reg] = _apply_gate_vec(joint, spec.unitary(), [q, n])
        self._sizes[reg] = n + 1
        probe_id = self._next_particle
        self._next_particle += 1
        self._loc[probe_id] = (reg, n)
        return probe_id

    def apply_noise(self, particle: int, channel: NoiseChannel, rng) -> None:
        """One stochastic trajectory of the channel on this particle."""
        u = rng.random()
        acc = 0.0
        for weight, op in channel.pauli_mixture():
            acc += weight
            if u < acc:
                if op is not PAULI_I:
                    self.apply_gate(particle, op)
                return

    def reduced_density(self, particles: Sequence[int]) -> DensityMatrix:
        """Joint reduced state of particles sharing one register, with
        output qubit ``j`` holding ``particles[j]``."""
        regs = {self._where(p)[0] for p in particles}
        if len(regs) != 1:
            raise QuantumValidationError(
                "reduced_density needs particles from a single register"
            )
        reg = regs.pop()
        keep = [self._where(p)[1] for p in particles]
        ascending = reduced_state(StateVector(self._vectors[reg].copy()), keep)
        order = sorted(keep)
        perm = [order.index(q) for q in keep]
        return permute_qubits(ascending, perm)
