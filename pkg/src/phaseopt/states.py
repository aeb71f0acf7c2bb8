"""Probe states and the analytic outcome distribution of the fixed-form scheme.

A probe state is the superposition ``sum_j alpha_j |j>`` over ``j = 0..N``
that is fed to ``N`` phase oracles, followed by a size-``M`` inverse Fourier
transform and a measurement of the outcome ``y``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-10
TWO_PI = 2.0 * np.pi


def wrap_phase(phase):
    """Reduce phases into ``[0, 2*pi)``."""
    out = np.mod(phase, TWO_PI)
    # np.mod rounds tiny negative inputs up to exactly 2*pi
    out = np.where(out >= TWO_PI, 0.0, out)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class ProbeState:
    """Unit-norm amplitude vector ``alpha_0..alpha_N``."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size == 0:
            raise ValueError("probe state needs at least one amplitude")
        if not np.all(np.isfinite(amps)):
            raise ValueError("probe state amplitudes must be finite")
        norm2 = float(np.sum(np.abs(amps) ** 2))
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ValueError(f"probe state is not unit norm (|alpha|^2 = {norm2!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_oracles(self) -> int:
        return self.amplitudes.size - 1

    def __len__(self):
        return self.amplitudes.size

    @classmethod
    def from_unnormalized(cls, amplitudes) -> "ProbeState":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(amps / norm)

    def padded(self, dim: int) -> np.ndarray:
        """Amplitudes zero-padded to length ``dim``."""
        if dim < self.amplitudes.size:
            raise ValueError(f"cannot pad {self.amplitudes.size} amplitudes to {dim}")
        out = np.zeros(dim, dtype=complex)
        out[: self.amplitudes.size] = self.amplitudes
        return out

    def to_dict(self) -> dict:
        return {"amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes]}

    @classmethod
    def from_dict(cls, data: dict) -> "ProbeState":
        pairs = np.asarray(data["amplitudes"], dtype=float)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError("'amplitudes' must be a list of [re, im] pairs")
        return cls(pairs[:, 0] + 1j * pairs[:, 1])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ProbeState":
        return cls.from_dict(json.loads(text))


def sine_state(n_oracles: int) -> ProbeState:
    """Minimum 1-fidelity probe: ``alpha_j = sqrt(2/(N+2)) sin((j+1) pi/(N+2))``."""
    n = _check_n(n_oracles)
    j = np.arange(n + 1)
    amps = np.sqrt(2.0 / (n + 2)) * np.sin((j + 1) * np.pi / (n + 2))
    # renormalize to absorb the last-bit rounding of the closed form
    return ProbeState(amps / np.linalg.norm(amps))


def uniform_state(n_oracles: int) -> ProbeState:
    n = _check_n(n_oracles)
    return ProbeState(np.full(n + 1, 1.0 / np.sqrt(n + 1)))


def basis_state(n_oracles: int, index: int = 0) -> ProbeState:
    n = _check_n(n_oracles)
    if not 0 <= index <= n:
        raise ValueError(f"index {index} outside 0..{n}")
    amps = np.zeros(n + 1)
    amps[index] = 1.0
    return ProbeState(amps)


def random_state(n_oracles: int, rng: np.random.Generator) -> ProbeState:
    """Haar-random complex probe state."""
    n = _check_n(n_oracles)
    v = rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1)
    return ProbeState.from_unnormalized(v)


def _check_n(n_oracles) -> int:
    n = int(n_oracles)
    if n != n_oracles or n < 0:
        raise ValueError(f"n_oracles must be a non-negative integer, got {n_oracles!r}")
    return n


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    m_grid: int
    probs: np.ndarray
    phase: float

    def estimate(self, y: int) -> float:
        return estimate_from_outcome(y, self.m_grid)


def _polynomial_values(amplitudes: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """``sum_j alpha_j exp(i j theta)`` by Horner's rule, elementwise over ``theta``."""
    z = np.exp(1j * theta)
    acc = np.full(theta.shape, amplitudes[-1], dtype=complex)
    for a in amplitudes[-2::-1]:
        acc = acc * z + a
    return acc


def outcome_probabilities(state: ProbeState, m_grid: int, phases) -> np.ndarray:
    """Vectorized ``Pr(y|phi)``; returns shape ``(len(phases), M)``.

    No validation beyond ``M > N``; used in quadrature inner loops.
    """
    if m_grid <= state.n_oracles:
        raise ValueError(f"m_grid={m_grid} must exceed n_oracles={state.n_oracles}")
    phases = np.atleast_1d(np.asarray(phases, dtype=float))
    grid = TWO_PI * np.arange(m_grid) / m_grid
    theta = phases[:, None] - grid[None, :]
    probs = np.abs(_polynomial_values(state.amplitudes, theta)) ** 2 / m_grid
    return np.clip(probs, 0.0, None)


def outcome_distribution(state: ProbeState, m_grid: int, phase: float) -> OutcomeDistribution:
    """Exact distribution of the measured ``y`` for phase ``phase``.

    ``Pr(y|phi) = |sum_j alpha_j exp(i j (phi - 2 pi y/M))|^2 / M``.
    """
    m = int(m_grid)
    if m != m_grid or m <= state.n_oracles:
        raise ValueError(
            f"m_grid must be an integer >= N+1 = {state.n_oracles + 1}, got {m_grid!r}"
        )
    phi = wrap_phase(float(phase))
    probs = outcome_probabilities(state, m, [phi])[0]
    probs.setflags(write=False)
    return OutcomeDistribution(m_grid=m, probs=probs, phase=phi)


def estimate_from_outcome(y: int, m_grid: int) -> float:
    """Grid inference rule ``y -> 2 pi y / M``."""
    if not 0 <= y < m_grid:
        raise ValueError(f"outcome {y} outside 0..{m_grid - 1}")
    return TWO_PI * y / m_grid
