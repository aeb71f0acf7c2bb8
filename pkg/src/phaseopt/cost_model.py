"""Covariant cost functions, their Fourier data, and the optimal probe state.

For a cost ``C(phi)`` depending only on the estimation error, the expected
cost of probe amplitudes ``alpha`` reduces to the quadratic form
``alpha^H T alpha`` where ``T[j, k] = c_{j-k}`` and
``c_k = (1/2pi) int C(phi) exp(-i k phi) dphi``.  Minimizing it over unit
vectors is a Hermitian Toeplitz minimum-eigenvalue problem.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .states import TWO_PI, ProbeState

logger = logging.getLogger(__name__)

KINDS = ("fidelity", "window", "custom")
SYMMETRIES = ("even", "general")
DENSE_LIMIT = 2048


class NumericalError(RuntimeError):
    """An eigen solve or quadrature failed to reach its tolerance."""


def angular_distance(phi):
    """Distance to 0 on the circle, in ``[0, pi]``."""
    return np.abs(np.mod(np.asarray(phi, dtype=float) + np.pi, TWO_PI) - np.pi)


@dataclass(frozen=True)
class CostSpec:
    """A real, 2pi-periodic cost of the error ``phi - phi_estimate``.

    Build with :meth:`fidelity`, :meth:`window`, :meth:`custom` or
    :meth:`from_samples` rather than directly.  ``breakpoints`` lists the
    error values in ``(-pi, pi]`` where the cost may jump; quadrature splits
    there.
    """

    kind: str
    delta: float | None = None
    func: Callable | None = field(default=None, compare=False)
    sample_budget: int = 4096
    symmetry: str = "even"
    breakpoints: tuple = ()
    label: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown cost kind {self.kind!r}")
        if self.symmetry not in SYMMETRIES:
            raise ValueError(f"symmetry must be one of {SYMMETRIES}")
        if self.kind == "window":
            _check_delta(self.delta)
        if self.kind == "custom":
            if not callable(self.func):
                raise ValueError("custom cost needs a callable")
            if int(self.sample_budget) < 1:
                raise ValueError("sample_budget must be positive")

    @classmethod
    def fidelity(cls) -> "CostSpec":
        """``sin^2(phi/2)``, i.e. one minus the fidelity."""
        return cls(kind="fidelity", symmetry="even")

    @classmethod
    def window(cls, delta: float) -> "CostSpec":
        """0 when the error is below ``delta`` on the circle, 1 otherwise."""
        _check_delta(delta)
        return cls(kind="window", delta=float(delta), symmetry="even",
                   breakpoints=(-float(delta), float(delta)))

    @classmethod
    def custom(cls, func, sample_budget: int = 4096, symmetry: str = "general",
               breakpoints: Sequence[float] = (), label: str | None = None) -> "CostSpec":
        return cls(kind="custom", func=func, sample_budget=int(sample_budget),
                   symmetry=symmetry, breakpoints=tuple(float(b) for b in breakpoints),
                   label=label)

    @classmethod
    def from_samples(cls, phases, values, label: str | None = None) -> "CostSpec":
        """Trigonometric interpolant of samples on a uniform periodic grid."""
        interp = TrigInterpolant(phases, values)
        return cls.custom(interp, sample_budget=max(64, 2 * interp.n_samples),
                          symmetry="general", label=label)

    @property
    def name(self) -> str:
        if self.kind == "window":
            return f"window:{self.delta:g}"
        if self.kind == "custom":
            return f"custom:{self.label}" if self.label else "custom"
        return self.kind

    def __call__(self, phi):
        phi = np.asarray(phi, dtype=float)
        if self.kind == "fidelity":
            return np.sin(phi / 2.0) ** 2
        if self.kind == "window":
            # boundary counts as an error: cost 1 when |error| >= delta
            return (angular_distance(phi) >= self.delta).astype(float)
        values = np.asarray(self.func(phi), dtype=float)
        return np.broadcast_to(values, phi.shape).copy() if values.shape != phi.shape else values


def _check_delta(delta):
    if delta is None or not np.isfinite(delta) or not 0.0 < delta < np.pi:
        raise ValueError(f"window width delta must lie in (0, pi), got {delta!r}")


class TrigInterpolant:
    """Real trigonometric interpolant through uniformly spaced periodic samples."""

    def __init__(self, phases, values):
        phases = np.asarray(phases, dtype=float).reshape(-1)
        values = np.asarray(values, dtype=float).reshape(-1)
        if phases.shape != values.shape or phases.size == 0:
            raise ValueError("phases and values must be non-empty and of equal length")
        if not np.all(np.isfinite(values)) or not np.all(np.isfinite(phases)):
            raise ValueError("cost samples must be finite")
        n = phases.size
        step = TWO_PI / n
        if n > 1 and np.max(np.abs(np.diff(phases) - step)) > 1e-9 * max(1.0, abs(phases[0])):
            raise ValueError(f"phases must form a uniform grid with spacing 2*pi/{n}")
        self.n_samples = n
        self.origin = float(phases[0])
        spectrum = np.fft.fft(values) / n
        half = (n - 1) // 2
        self._coeffs = spectrum[: half + 1].copy()
        self._nyquist = float(spectrum[n // 2].real) if n % 2 == 0 else 0.0

    def __call__(self, phi):
        t = np.asarray(phi, dtype=float) - self.origin
        k = np.arange(1, self._coeffs.size)
        out = np.full(t.shape, self._coeffs[0].real)
        if k.size:
            out = out + 2.0 * np.real(np.exp(1j * np.multiply.outer(t, k)) @ self._coeffs[1:])
        if self._nyquist:
            out = out + self._nyquist * np.cos(self.n_samples / 2 * t)
        return out


@dataclass(frozen=True, eq=False)
class FourierCoefficients:
    """``c_0..c_max_lag``; negative lags are ``conj(c_k)``."""

    max_lag: int
    coeffs: np.ndarray
    source: str = "analytic"

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex).reshape(-1)
        if coeffs.size != self.max_lag + 1:
            raise ValueError(f"expected {self.max_lag + 1} coefficients, got {coeffs.size}")
        if abs(coeffs[0].imag) > 1e-12:
            raise ValueError(f"c_0 must be real, got {coeffs[0]!r}")
        coeffs[0] = coeffs[0].real
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def quadrature_points(self) -> int | None:
        if self.source.startswith("quadrature:"):
            return int(self.source.split(":", 1)[1])
        return None

    def __getitem__(self, k: int) -> complex:
        if abs(k) > self.max_lag:
            raise IndexError(f"lag {k} beyond max_lag {self.max_lag}")
        c = self.coeffs[abs(k)]
        return complex(np.conj(c)) if k < 0 else complex(c)

    def to_dict(self) -> dict:
        return {"max_lag": int(self.max_lag),
                "coeffs": [[float(c.real), float(c.imag)] for c in self.coeffs],
                "source": self.source}

    @classmethod
    def from_dict(cls, data: dict) -> "FourierCoefficients":
        pairs = np.asarray(data["coeffs"], dtype=float).reshape(-1, 2)
        return cls(max_lag=int(data["max_lag"]), coeffs=pairs[:, 0] + 1j * pairs[:, 1],
                   source=str(data.get("source", "analytic")))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "FourierCoefficients":
        return cls.from_dict(json.loads(text))


def fourier_coefficients(cost: CostSpec, max_lag: int) -> FourierCoefficients:
    """Fourier coefficients ``c_0..c_max_lag`` of ``cost``.

    Fidelity and window costs use closed forms.  Custom costs use the
    periodic trapezoidal rule on ``max(sample_budget, 8*(max_lag+1))``
    uniform points.
    """
    if int(max_lag) != max_lag or max_lag < 0:
        raise ValueError(f"max_lag must be a non-negative integer, got {max_lag!r}")
    max_lag = int(max_lag)
    k = np.arange(1, max_lag + 1)

    if cost.kind == "fidelity":
        # sin^2(phi/2) = 1/2 - (e^{i phi} + e^{-i phi}) / 4
        coeffs = np.zeros(max_lag + 1, dtype=complex)
        coeffs[0] = 0.5
        if max_lag >= 1:
            coeffs[1] = -0.25
        return FourierCoefficients(max_lag, coeffs, "analytic")

    if cost.kind == "window":
        delta = cost.delta
        _check_delta(delta)
        coeffs = np.empty(max_lag + 1, dtype=complex)
        coeffs[0] = 1.0 - delta / np.pi
        coeffs[1:] = -np.sin(k * delta) / (k * np.pi)
        return FourierCoefficients(max_lag, coeffs, "analytic")

    points = max(int(cost.sample_budget), 8 * (max_lag + 1))
    phi = TWO_PI * np.arange(points) / points
    samples = cost(phi)
    if not np.all(np.isfinite(samples)):
        raise ValueError("custom cost returned non-finite samples")
    coeffs = np.fft.fft(samples)[: max_lag + 1] / points
    if cost.symmetry == "even":
        worst = float(np.max(np.abs(coeffs.imag)))
        if worst > 1e-10:
            raise ValueError(f"cost declared even but has imaginary coefficients up to {worst:.3g}")
        coeffs = coeffs.real.astype(complex)
    return FourierCoefficients(max_lag, coeffs, f"quadrature:{points}")


@dataclass(frozen=True, eq=False)
class ToeplitzCostMatrix:
    """Hermitian Toeplitz matrix ``T[j, k] = c_{j-k}`` stored by first column."""

    first_column: np.ndarray

    def __post_init__(self):
        col = np.array(self.first_column, dtype=complex).reshape(-1)
        if col.size == 0:
            raise ValueError("empty Toeplitz matrix")
        if abs(col[0].imag) > 1e-12:
            raise ValueError("diagonal of a Hermitian Toeplitz matrix must be real")
        col[0] = col[0].real
        col.setflags(write=False)
        object.__setattr__(self, "first_column", col)

    @property
    def dim(self) -> int:
        return self.first_column.size

    @property
    def is_real(self) -> bool:
        return not np.any(self.first_column.imag)

    def dense(self) -> np.ndarray:
        col = self.first_column
        mat = scipy.linalg.toeplitz(col, col.conj())
        return mat.real if self.is_real else mat

    def matvec(self, x) -> np.ndarray:
        return self.dense() @ np.asarray(x)


def toeplitz_from_coeffs(coeffs: FourierCoefficients, n_oracles: int) -> ToeplitzCostMatrix:
    if n_oracles < 0:
        raise ValueError("n_oracles must be non-negative")
    if coeffs.max_lag < n_oracles:
        raise ValueError(f"need coefficients up to lag {n_oracles}, have {coeffs.max_lag}")
    return ToeplitzCostMatrix(coeffs.coeffs[: n_oracles + 1])


def cost_matrix(cost: CostSpec, n_oracles: int) -> ToeplitzCostMatrix:
    return toeplitz_from_coeffs(fourier_coefficients(cost, n_oracles), n_oracles)


def _as_state(state) -> ProbeState:
    return state if isinstance(state, ProbeState) else ProbeState(state)


def quadratic_form(state, matrix: ToeplitzCostMatrix) -> complex:
    """``alpha^H T alpha`` before discarding the (round-off) imaginary part."""
    state = _as_state(state)
    if state.amplitudes.size != matrix.dim:
        raise ValueError(f"state has dimension {state.amplitudes.size}, matrix {matrix.dim}")
    alpha = state.amplitudes
    return complex(np.vdot(alpha, matrix.dense() @ alpha))


def expected_cost(state, matrix: ToeplitzCostMatrix) -> float:
    """Expected cost of the fixed-form scheme with probe ``state``; any grid ``M > N``."""
    return quadratic_form(state, matrix).real


def mixture_expected_cost(weights, states, matrix: ToeplitzCostMatrix) -> float:
    """Expected cost ``tr(rho T)`` of the mixed probe ``rho = sum_i p_i |a_i><a_i|``."""
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 1 or len(weights) != len(states) or np.any(weights < 0):
        raise ValueError("weights must be a non-negative vector matching the states")
    weights = weights / weights.sum()
    amps = np.stack([_as_state(s).amplitudes for s in states])
    if amps.shape[1] != matrix.dim:
        raise ValueError("state dimension does not match the cost matrix")
    rho = (amps.T * weights) @ amps.conj()
    return float(np.real(np.trace(rho @ matrix.dense())))


def fix_global_phase(vector) -> np.ndarray:
    """Rotate so the largest-magnitude entry is real and positive.

    Ties (common: Hermitian Toeplitz eigenvectors are often reverse-symmetric
    in magnitude) resolve to the first entry within 1e-9 of the maximum.
    """
    v = np.asarray(vector, dtype=complex)
    mag = np.abs(v)
    lead = v[np.flatnonzero(mag >= mag.max() * (1 - 1e-9))[0]]
    return v * (np.conj(lead) / abs(lead))


def optimize_state(matrix: ToeplitzCostMatrix, dense_limit: int = DENSE_LIMIT,
                   tol: float = 1e-12) -> tuple[ProbeState, float]:
    """Minimal eigenpair of ``T``: the optimal probe and its expected cost.

    Dense Hermitian solve up to ``dense_limit``; shifted inverse iteration
    above it.  For a degenerate minimum any unit vector of the eigenspace
    may be returned.
    """
    mat = matrix.dense()
    if matrix.dim <= dense_limit:
        vals, vecs = scipy.linalg.eigh(mat, subset_by_index=[0, 0])
        value, vec = float(vals[0]), vecs[:, 0]
    else:
        value, vec = min_eig_inverse_iteration(mat, tol=tol)
    vec = fix_global_phase(vec)
    vec /= np.linalg.norm(vec)
    return ProbeState(vec), value


def eigen_residual(matrix: ToeplitzCostMatrix, state: ProbeState, value: float) -> float:
    alpha = state.amplitudes
    return float(np.linalg.norm(matrix.dense() @ alpha - value * alpha))


def min_eig_inverse_iteration(mat: np.ndarray, tol: float = 1e-12, max_iter: int = 200,
                              seed: int = 0) -> tuple[float, np.ndarray]:
    """Smallest eigenpair of a Hermitian matrix by shifted inverse iteration.

    The shift is located just below the minimum eigenvalue by bisection on
    Cholesky success (``T - s I`` is positive definite iff ``s < lambda_min``),
    then inverse iteration with the fixed factorization runs until the
    Rayleigh-quotient residual ``||T x - mu x||`` drops below ``tol``.
    """
    n = mat.shape[0]
    diag = np.real(np.diag(mat))
    radius = np.sum(np.abs(mat), axis=1) - np.abs(diag)
    lo, hi = float(np.min(diag - radius)), float(np.min(diag))
    spread = max(float(np.max(diag + radius)) - lo, 1e-300)
    lo -= 1e-12 * spread
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) + (1j * rng.standard_normal(n) if np.iscomplexobj(mat) else 0)
    x = x / np.linalg.norm(x)
    width = 1e-3 * spread
    eye = np.eye(n)

    for _ in range(8):
        while hi - lo > width:
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            try:
                scipy.linalg.cholesky(mat - mid * eye, lower=True, check_finite=False)
                lo = mid
            except np.linalg.LinAlgError:
                hi = mid
        factor = scipy.linalg.cho_factor(mat - lo * eye, lower=True, check_finite=False)
        for it in range(max_iter):
            x = scipy.linalg.cho_solve(factor, x, check_finite=False)
            x /= np.linalg.norm(x)
            tx = mat @ x
            mu = float(np.real(np.vdot(x, tx)))
            resid = float(np.linalg.norm(tx - mu * x))
            if resid <= tol * max(1.0, spread):
                logger.debug("inverse iteration converged: n=%d iters=%d resid=%.2e", n, it + 1, resid)
                return mu, x
        # slow convergence means the shift sits too far from a clustered minimum
        width *= 1e-3
    raise NumericalError(f"inverse iteration did not reach residual {tol:g} (last {resid:.3g})")


def holevo_check(cost: CostSpec, max_lag: int = 64, tol: float = 1e-12) -> bool:
    """Advisory: do the Fourier data satisfy ``c_k <= 0`` (real) for ``1 <= k <= max_lag``?"""
    coeffs = fourier_coefficients(cost, max_lag).coeffs[1:]
    return bool(np.all(coeffs.real <= tol) and np.all(np.abs(coeffs.imag) <= tol))
