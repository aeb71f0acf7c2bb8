"""Exact statevector simulation of phase-oracle circuits.

Basis indices are little-endian: wire ``w`` is bit ``w`` of the index.  A
register over wires ``(w_0, w_1, ...)`` holds the value
``sum_i bit(w_i) 2**i``.  Matrices acting on a wire list use the same
convention, so ``matrix[r, c]`` indexes register values of those wires.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
import scipy.linalg

from .states import TWO_PI, ProbeState, wrap_phase

MAX_QUBITS = 12
MAX_UNITARY_WIRES = 3
UNITARY_TOL = 1e-10
NORM_TOL = 1e-10
POLY_TOL = 1e-9


class PolynomialClaimViolation(AssertionError):
    """A circuit amplitude is not a polynomial of degree <= N in exp(i phi)."""

    def __init__(self, residual: float, tol: float):
        super().__init__(f"held-out residual {residual:.3e} exceeds {tol:.1e}")
        self.residual = residual


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray
    oracle_calls: int = 0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2 ** self.n_qubits,):
            raise ValueError(f"{self.n_qubits} qubits need {2 ** self.n_qubits} amplitudes")
        norm2 = float(np.vdot(self.amplitudes, self.amplitudes).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ValueError(f"state vector norm^2 {norm2!r} is not 1")

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        amps = np.zeros(2 ** n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(2 ** n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    def _evolved(self, amps: np.ndarray, calls: int = 0) -> "StateVector":
        return StateVector(self.n_qubits, amps, self.oracle_calls + calls)


# -- index bookkeeping -------------------------------------------------------

@lru_cache(maxsize=256)
def _bit(n_qubits: int, wire: int) -> np.ndarray:
    bits = (np.arange(2 ** n_qubits) >> wire) & 1
    bits.setflags(write=False)
    return bits


@lru_cache(maxsize=256)
def _register_values(n_qubits: int, wires: tuple) -> np.ndarray:
    vals = np.zeros(2 ** n_qubits, dtype=np.int64)
    for i, w in enumerate(wires):
        vals |= _bit(n_qubits, w) << i
    vals.setflags(write=False)
    return vals


@lru_cache(maxsize=256)
def _register_table(n_qubits: int, wires: tuple) -> np.ndarray:
    """Basis indices arranged as ``table[rest, register_value]``."""
    reg = _register_values(n_qubits, wires)
    others = tuple(w for w in range(n_qubits) if w not in wires)
    rest = _register_values(n_qubits, others)
    table = np.empty((2 ** len(others), 2 ** len(wires)), dtype=np.int64)
    table[rest, reg] = np.arange(2 ** n_qubits)
    table.setflags(write=False)
    return table


def _check_wires(n_qubits: int, wires: Sequence[int]) -> tuple:
    wires = tuple(int(w) for w in wires)
    if len(set(wires)) != len(wires):
        raise ValueError(f"repeated wire in {wires}")
    for w in wires:
        if not 0 <= w < n_qubits:
            raise ValueError(f"wire {w} outside 0..{n_qubits - 1}")
    return wires


# -- array-level kernels (leading batch axes allowed) -------------------------

def _oracle_kernel(amps: np.ndarray, n_qubits: int, wire: int, phase) -> np.ndarray:
    factor = np.exp(1j * np.asarray(phase, dtype=float))[..., None, None]
    out = np.array(amps, dtype=complex)
    # view as (..., higher bits, this bit, lower bits)
    view = out.reshape(out.shape[:-1] + (2 ** (n_qubits - wire - 1), 2, 2 ** wire))
    view[..., 1, :] *= factor
    return out


def _threshold_flip(amps: np.ndarray, n_qubits: int, wires: tuple, flag: int, k: int) -> np.ndarray:
    """Permutation ``|j>|f> -> |j>|f xor [j >= k]>`` (self-inverse)."""
    index = np.arange(2 ** n_qubits)
    perm = np.where(_register_values(n_qubits, wires) >= k, index ^ (1 << flag), index)
    return amps[..., perm]


def _power_oracle_kernel(amps, n_qubits, wires, phase, n_oracles, flag_wire):
    """``|j> -> exp(i j phi)|j>`` using exactly ``n_oracles`` oracle calls."""
    if n_oracles == 0:
        return amps, 0
    if _binary_decomposable(n_oracles, len(wires)):
        for b in range(n_oracles.bit_length()):
            for _ in range(2 ** b):
                amps = _oracle_kernel(amps, n_qubits, wires[b], phase)
        return amps, n_oracles
    if flag_wire is None:
        raise ValueError(f"N={n_oracles} is not 2**L - 1; a flag ancilla wire is required")
    for k in range(1, n_oracles + 1):
        amps = _threshold_flip(amps, n_qubits, wires, flag_wire, k)
        amps = _oracle_kernel(amps, n_qubits, flag_wire, phase)
        amps = _threshold_flip(amps, n_qubits, wires, flag_wire, k)
    return amps, n_oracles


def _binary_decomposable(n_oracles: int, n_wires: int) -> bool:
    return (n_oracles + 1) & n_oracles == 0 and n_oracles.bit_length() <= n_wires


@lru_cache(maxsize=64)
def inverse_fourier_matrix(m_grid: int) -> np.ndarray:
    """``F[y, j] = exp(-2 pi i j y / M) / sqrt(M)``."""
    jy = np.outer(np.arange(m_grid), np.arange(m_grid)) % m_grid
    mat = np.exp(-1j * TWO_PI * jy / m_grid) / np.sqrt(m_grid)
    mat.setflags(write=False)
    return mat


def _inverse_fourier_kernel(amps, n_qubits, wires, m_grid):
    fmat = inverse_fourier_matrix(m_grid)
    if wires == tuple(range(len(wires))):
        out = np.array(amps, dtype=complex)
        view = out.reshape(out.shape[:-1] + (-1, 2 ** len(wires)))
        view[..., :m_grid] = view[..., :m_grid] @ fmat.T
        return out
    table = _register_table(n_qubits, wires)
    block = table[:, :m_grid]
    out = amps.copy()
    out[..., block] = amps[..., block] @ fmat.T
    return out


def _apply_matrix(amps: np.ndarray, n_qubits: int, wires: tuple, matrix: np.ndarray) -> np.ndarray:
    k = len(wires)
    psi = amps.reshape((2,) * n_qubits)
    # C-order axis 0 is the most significant bit
    axes = [n_qubits - 1 - w for w in reversed(wires)]
    u = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(u, psi, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return out.reshape(-1)


# -- public operations --------------------------------------------------------

def apply_oracle(state: StateVector, wire: int, phase: float) -> StateVector:
    """One call of the phase gate ``|0> -> |0>, |1> -> exp(i phi)|1>`` on ``wire``."""
    (wire,) = _check_wires(state.n_qubits, [wire])
    return state._evolved(_oracle_kernel(state.amplitudes, state.n_qubits, wire, phase), 1)


def apply_power_oracle(state: StateVector, register_wires: Sequence[int], phase: float,
                       n_oracles: int, flag_wire: int | None = None) -> StateVector:
    """Apply ``U_phi |j> = exp(i j phi)|j>`` to a register using ``n_oracles`` oracle calls.

    When ``N + 1`` is a power of two the register wire for bit ``b`` gets
    ``2**b`` calls.  Otherwise each ``k = 1..N`` marks ``j >= k`` on the
    ``flag_wire`` ancilla (which must hold 0), calls the oracle on it, and
    unmarks, so every ``j <= N`` still picks up ``j * phi``.
    """
    wires = _check_wires(state.n_qubits, register_wires)
    if n_oracles < 0:
        raise ValueError("n_oracles must be non-negative")
    if 2 ** len(wires) <= n_oracles:
        raise ValueError(f"{len(wires)} register wires cannot hold j = {n_oracles}")
    if flag_wire is not None:
        _check_wires(state.n_qubits, list(wires) + [flag_wire])
    reg = _register_values(state.n_qubits, wires)
    stray = reg > n_oracles
    if flag_wire is not None and not _binary_decomposable(n_oracles, len(wires)):
        stray = stray | _bit(state.n_qubits, flag_wire).astype(bool)
    if np.any(np.abs(state.amplitudes[stray]) > 1e-12):
        raise ValueError("register values above N (or a set flag) carry amplitude")
    amps, calls = _power_oracle_kernel(state.amplitudes, state.n_qubits, wires, phase,
                                       int(n_oracles), flag_wire)
    return state._evolved(amps, calls)


def inverse_fourier(state: Union[StateVector, np.ndarray], m_grid: int | None = None,
                    register_wires: Sequence[int] | None = None):
    """Size-``M`` inverse Fourier transform ``|j> -> M**-1/2 sum_y exp(-2 pi i j y/M)|y>``.

    A plain vector of length ``M`` is transformed directly.  On a
    :class:`StateVector` the transform acts on register values ``0..M-1``
    of ``register_wires`` (default: all wires) and as the identity on
    values ``>= M``.
    """
    if not isinstance(state, StateVector):
        vec = np.asarray(state, dtype=complex)
        if m_grid is not None and vec.shape != (m_grid,):
            raise ValueError(f"expected a register of dimension {m_grid}")
        return inverse_fourier_matrix(vec.size) @ vec
    wires = _check_wires(state.n_qubits, range(state.n_qubits) if register_wires is None
                         else register_wires)
    m_grid = 2 ** len(wires) if m_grid is None else int(m_grid)
    if not 1 <= m_grid <= 2 ** len(wires):
        raise ValueError(f"M={m_grid} does not fit in {len(wires)} register wires")
    return state._evolved(_inverse_fourier_kernel(state.amplitudes, state.n_qubits, wires, m_grid))


def apply_unitary(state: StateVector, wires: Sequence[int], matrix) -> StateVector:
    wires = _check_wires(state.n_qubits, wires)
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (2 ** len(wires),) * 2:
        raise ValueError(f"matrix shape {matrix.shape} does not match {len(wires)} wires")
    return state._evolved(_apply_matrix(state.amplitudes, state.n_qubits, wires, matrix))


def trace_out_ancilla(state: StateVector, kept_wires: Sequence[int]) -> np.ndarray:
    """Marginal ``Pr(y) = sum_z |amp(y, z)|^2`` over the kept wires' register values."""
    wires = _check_wires(state.n_qubits, kept_wires)
    probs = np.bincount(_register_values(state.n_qubits, wires),
                        weights=np.abs(state.amplitudes) ** 2, minlength=2 ** len(wires))
    return probs


# -- the fixed-form scheme ----------------------------------------------------

@dataclass(frozen=True)
class Procedure1Layout:
    """Wire layout of the fixed-form circuit for ``N`` oracles and grid ``M``."""

    n_oracles: int
    m_grid: int
    register_wires: tuple
    flag_wire: int | None

    @property
    def n_qubits(self) -> int:
        return len(self.register_wires) + (self.flag_wire is not None)

    @classmethod
    def for_problem(cls, n_oracles: int, m_grid: int) -> "Procedure1Layout":
        if m_grid <= n_oracles:
            raise ValueError(f"m_grid={m_grid} must be >= N+1={n_oracles + 1}")
        m = max(1, int(np.ceil(np.log2(m_grid))))
        wires = tuple(range(m))
        flag = None if n_oracles == 0 or _binary_decomposable(n_oracles, m) else m
        return cls(n_oracles, int(m_grid), wires, flag)


def _procedure1_amplitudes(state: ProbeState, layout: Procedure1Layout, phases) -> tuple:
    """Pre-measurement amplitudes, batched over ``phases``; returns (amps, oracle calls)."""
    n_q = layout.n_qubits
    init = np.zeros(2 ** n_q, dtype=complex)
    init[: 2 ** len(layout.register_wires)] = state.padded(2 ** len(layout.register_wires))
    phases = np.asarray(phases, dtype=float)
    amps = np.broadcast_to(init, phases.shape + init.shape)
    amps, calls = _power_oracle_kernel(amps, n_q, layout.register_wires, phases,
                                       layout.n_oracles, layout.flag_wire)
    amps = _inverse_fourier_kernel(amps, n_q, layout.register_wires, layout.m_grid)
    return amps, calls


def procedure1_statevector(state: ProbeState, m_grid: int, phase: float) -> StateVector:
    """Prepare ``state``, apply ``U_phi`` with N oracle calls, then the size-M inverse transform."""
    layout = Procedure1Layout.for_problem(state.n_oracles, m_grid)
    amps, calls = _procedure1_amplitudes(state, layout, wrap_phase(phase))
    return StateVector(layout.n_qubits, amps, calls)


def procedure1_probabilities(state: ProbeState, m_grid: int, phases) -> np.ndarray:
    """Simulated outcome distribution, shape ``phases.shape + (M,)``."""
    layout = Procedure1Layout.for_problem(state.n_oracles, m_grid)
    amps, _ = _procedure1_amplitudes(state, layout, wrap_phase(np.asarray(phases, dtype=float)))
    table = _register_table(layout.n_qubits, layout.register_wires)
    probs = (np.abs(amps) ** 2)[..., table].sum(axis=-2)
    return probs[..., :m_grid]


def sample_outcomes(probs: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Inverse-CDF sampling, one outcome per row of ``probs``."""
    cdf = np.cumsum(np.clip(probs, 0.0, None), axis=-1)
    target = uniforms * cdf[..., -1]
    y = (cdf <= target[..., None]).sum(axis=-1)
    return np.minimum(y, probs.shape[-1] - 1)


def run_procedure1(state: ProbeState, m_grid: int, phase: float, seed: int) -> int:
    """One seeded run of the fixed-form scheme; returns the measured ``y``."""
    probs = procedure1_probabilities(state, m_grid, np.asarray([phase]))[0]
    rng = np.random.default_rng(seed)
    return int(sample_outcomes(probs, rng.random()))


# -- general circuits ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class UnitaryOp:
    wires: tuple
    matrix: np.ndarray

    def to_dict(self) -> dict:
        return {"type": "unitary", "wires": list(self.wires),
                "matrix": [[[float(v.real), float(v.imag)] for v in row] for row in self.matrix]}


@dataclass(frozen=True)
class OracleOp:
    wire: int

    def to_dict(self) -> dict:
        return {"type": "oracle", "wire": int(self.wire)}


@dataclass(eq=False)
class GeneralCircuitSpec:
    """Arbitrary unitaries interleaved with single-wire phase-oracle calls.

    The circuit starts from ``|0...0>``.
    """

    n_qubits: int
    ops: list = field(default_factory=list)

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in 1..{MAX_QUBITS}, got {self.n_qubits}")
        ops = []
        for op in self.ops:
            if isinstance(op, OracleOp):
                _check_wires(self.n_qubits, [op.wire])
                ops.append(op)
            elif isinstance(op, UnitaryOp):
                wires = _check_wires(self.n_qubits, op.wires)
                if not 1 <= len(wires) <= MAX_UNITARY_WIRES:
                    raise ValueError(f"unitaries act on 1..{MAX_UNITARY_WIRES} wires")
                mat = np.asarray(op.matrix, dtype=complex)
                dim = 2 ** len(wires)
                if mat.shape != (dim, dim):
                    raise ValueError(f"matrix shape {mat.shape} does not match wires {wires}")
                if np.max(np.abs(mat.conj().T @ mat - np.eye(dim))) > UNITARY_TOL:
                    raise ValueError("unitary op matrix is not unitary")
                ops.append(UnitaryOp(wires, mat))
            else:
                raise TypeError(f"unsupported op {op!r}")
        self.ops = ops

    @property
    def n_oracles(self) -> int:
        return sum(isinstance(op, OracleOp) for op in self.ops)

    def to_dict(self) -> dict:
        return {"n_qubits": self.n_qubits, "ops": [op.to_dict() for op in self.ops]}

    @classmethod
    def from_dict(cls, data: dict) -> "GeneralCircuitSpec":
        ops = []
        for raw in data["ops"]:
            if raw["type"] == "oracle":
                ops.append(OracleOp(int(raw["wire"])))
            elif raw["type"] == "unitary":
                arr = np.asarray(raw["matrix"], dtype=float)
                ops.append(UnitaryOp(tuple(raw["wires"]), arr[..., 0] + 1j * arr[..., 1]))
            else:
                raise ValueError(f"unknown op type {raw['type']!r}")
        return cls(int(data["n_qubits"]), ops)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "GeneralCircuitSpec":
        return cls.from_dict(json.loads(text))


def run_general_circuit(spec: GeneralCircuitSpec, phase: float) -> StateVector:
    state = StateVector.zero(spec.n_qubits)
    for op in spec.ops:
        if isinstance(op, OracleOp):
            state = apply_oracle(state, op.wire, phase)
        else:
            state = apply_unitary(state, op.wires, op.matrix)
    return state


@dataclass(frozen=True, eq=False)
class AmplitudePolynomial:
    """``amplitude(phi) = sum_j coefficients[j] exp(i j phi)``."""

    degree_bound: int
    coefficients: np.ndarray
    residual: float = 0.0

    def __call__(self, phase):
        return np.polynomial.polynomial.polyval(np.exp(1j * np.asarray(phase, dtype=float)),
                                                self.coefficients)


def fit_amplitude_polynomials(spec: GeneralCircuitSpec, n_holdout: int = 64, seed: int = 0,
                              tol: float = POLY_TOL) -> list[AmplitudePolynomial]:
    """Interpolate every output amplitude as a polynomial of degree <= N in ``exp(i phi)``.

    Fits exactly at the ``N+1`` roots of unity and validates on
    ``n_holdout`` random phases; raises :class:`PolynomialClaimViolation`
    if any held-out residual exceeds ``tol``.
    """
    n = spec.n_oracles
    nodes = TWO_PI * np.arange(n + 1) / (n + 1)
    samples = np.stack([run_general_circuit(spec, p).amplitudes for p in nodes])
    coeffs = np.fft.fft(samples, axis=0) / (n + 1)

    holdout = np.random.default_rng(seed).uniform(0.0, TWO_PI, n_holdout)
    actual = np.stack([run_general_circuit(spec, p).amplitudes for p in holdout])
    powers = np.exp(1j * np.outer(holdout, np.arange(n + 1)))
    residual = np.max(np.abs(powers @ coeffs - actual), axis=0)
    worst = float(residual.max(initial=0.0))
    if worst > tol:
        raise PolynomialClaimViolation(worst, tol)
    return [AmplitudePolynomial(n, coeffs[:, i].copy(), float(residual[i]))
            for i in range(coeffs.shape[1])]


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_general_circuit(rng: np.random.Generator, n_qubits: int, n_oracles: int,
                           unitaries_between: int = 2) -> GeneralCircuitSpec:
    """Random unitaries on 1..3 wires interleaved with ``n_oracles`` oracle calls."""
    def layer():
        out = []
        for _ in range(unitaries_between):
            k = int(rng.integers(1, min(MAX_UNITARY_WIRES, n_qubits) + 1))
            wires = tuple(int(w) for w in rng.choice(n_qubits, size=k, replace=False))
            out.append(UnitaryOp(wires, haar_unitary(2 ** k, rng)))
        return out

    ops = layer()
    for _ in range(n_oracles):
        ops.append(OracleOp(int(rng.integers(n_qubits))))
        ops.extend(layer())
    return GeneralCircuitSpec(n_qubits, ops)


def state_preparation_unitary(amplitudes) -> np.ndarray:
    """A unitary whose first column is ``amplitudes``."""
    alpha = np.asarray(amplitudes, dtype=complex)
    complement = scipy.linalg.null_space(alpha.conj()[None, :])
    return np.column_stack([alpha, complement])


def procedure1_as_general_spec(state: ProbeState, m_grid: int) -> GeneralCircuitSpec:
    """The fixed-form scheme written as a general circuit (``M <= 8``, ``N = 2**L - 1``)."""
    layout = Procedure1Layout.for_problem(state.n_oracles, m_grid)
    if layout.flag_wire is not None or len(layout.register_wires) > MAX_UNITARY_WIRES:
        raise ValueError("only M <= 8 with N + 1 a power of two fits 3-wire unitaries")
    wires = layout.register_wires
    dim = 2 ** len(wires)
    ops: list = [UnitaryOp(wires, state_preparation_unitary(state.padded(dim)))]
    for b in range(state.n_oracles.bit_length()):
        ops.extend(OracleOp(wires[b]) for _ in range(2 ** b))
    idft = np.eye(dim, dtype=complex)
    idft[:m_grid, :m_grid] = inverse_fourier_matrix(m_grid)
    ops.append(UnitaryOp(wires, idft))
    return GeneralCircuitSpec(len(wires), ops)
