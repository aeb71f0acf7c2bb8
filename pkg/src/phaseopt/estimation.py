"""Expected-cost evaluation three ways, plus M-invariance and scaling studies.

* analytic: the Toeplitz quadratic form ``alpha^H T alpha``;
* semi-analytic: quadrature over the phase of ``sum_y Pr(y|phi) C(phi - 2 pi y/M)``
  with the exact outcome distribution;
* Monte Carlo: seeded uniform phases, simulated circuit runs, sampled outcomes.
"""

from __future__ import annotations

import csv
import itertools
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .cost_model import CostSpec, NumericalError, cost_matrix, expected_cost, optimize_state
from .simulator import procedure1_probabilities, procedure1_statevector, sample_outcomes
from .states import TWO_PI, ProbeState, outcome_probabilities, sine_state, uniform_state

logger = logging.getLogger(__name__)

STATE_KINDS = ("sine", "uniform", "optimal")
MC_CHUNK = 4096
QUAD_START = 4096
QUAD_CAP = 2 ** 16
QUAD_TOL = 1e-8
REPORT_COLUMNS = ("N", "state_kind", "M", "analytic", "semi_analytic",
                  "mc_mean", "mc_stderr", "oracle_calls")


def max_threads() -> int:
    env = os.environ.get("PHASEOPT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            logger.warning("ignoring non-integer PHASEOPT_THREADS=%r", env)
    return os.cpu_count() or 1


def make_state(kind, n_oracles: int, cost: CostSpec | None = None) -> ProbeState:
    """Resolve ``'sine'``, ``'uniform'``, ``'optimal'`` or a :class:`ProbeState`."""
    if isinstance(kind, ProbeState):
        if kind.n_oracles != n_oracles:
            raise ValueError(f"imported state has N={kind.n_oracles}, expected {n_oracles}")
        return kind
    if kind == "sine":
        return sine_state(n_oracles)
    if kind == "uniform":
        return uniform_state(n_oracles)
    if kind == "optimal":
        if cost is None:
            raise ValueError("the optimal state needs a cost")
        return optimize_state(cost_matrix(cost, n_oracles))[0]
    raise ValueError(f"unknown state kind {kind!r}")


@dataclass
class ExperimentConfig:
    n_oracles: int
    m_grid: int
    cost: CostSpec
    state: object = "sine"
    trials: int = 1000
    phase_sampling: str = "uniform"
    grid_points: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_oracles < 0:
            raise ValueError("n_oracles must be non-negative")
        if self.m_grid < self.n_oracles + 1:
            raise ValueError(f"m_grid={self.m_grid} must be >= N+1={self.n_oracles + 1}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.phase_sampling not in ("uniform", "grid"):
            raise ValueError("phase_sampling must be 'uniform' or 'grid'")
        if self.phase_sampling == "grid" and (self.grid_points is None or self.grid_points < 1):
            raise ValueError("grid sampling needs grid_points >= 1")
        if not isinstance(self.state, ProbeState) and self.state not in STATE_KINDS:
            raise ValueError(f"state must be one of {STATE_KINDS} or a ProbeState")

    @property
    def state_kind(self) -> str:
        return "imported" if isinstance(self.state, ProbeState) else str(self.state)

    def probe(self) -> ProbeState:
        return make_state(self.state, self.n_oracles, self.cost)

    def to_dict(self) -> dict:
        return {"n_oracles": self.n_oracles, "m_grid": self.m_grid, "cost": self.cost.name,
                "state": self.state.to_dict() if isinstance(self.state, ProbeState) else self.state,
                "trials": self.trials, "phase_sampling": self.phase_sampling,
                "grid_points": self.grid_points, "seed": self.seed}


@dataclass
class CostReport:
    n_oracles: int
    m_grid: int
    state_kind: str
    analytic_cost: float
    semi_analytic_cost: float
    monte_carlo_cost: float
    monte_carlo_stderr: float | None
    oracle_calls_per_trial: int
    trials: int = 0

    @property
    def semi_analytic_ok(self) -> bool:
        return abs(self.analytic_cost - self.semi_analytic_cost) <= 1e-6

    @property
    def monte_carlo_ok(self) -> bool:
        """Within 4 standard errors; vacuous when no stderr was reported."""
        if self.monte_carlo_stderr is None:
            return True
        return abs(self.monte_carlo_cost - self.analytic_cost) <= 4 * self.monte_carlo_stderr

    def to_dict(self) -> dict:
        out = asdict(self)
        out["semi_analytic_ok"] = self.semi_analytic_ok
        out["monte_carlo_ok"] = self.monte_carlo_ok
        return out

    def csv_row(self) -> dict:
        return {"N": self.n_oracles, "state_kind": self.state_kind, "M": self.m_grid,
                "analytic": self.analytic_cost, "semi_analytic": self.semi_analytic_cost,
                "mc_mean": self.monte_carlo_cost,
                "mc_stderr": "" if self.monte_carlo_stderr is None else self.monte_carlo_stderr,
                "oracle_calls": self.oracle_calls_per_trial}


# -- semi-analytic quadrature -------------------------------------------------

def _integrand(state: ProbeState, cost: CostSpec, m_grid: int, phases: np.ndarray) -> np.ndarray:
    probs = outcome_probabilities(state, m_grid, phases)
    errors = phases[:, None] - TWO_PI * np.arange(m_grid)[None, :] / m_grid
    return np.sum(probs * cost(errors), axis=1)


def _trapezoid(state, cost, m_grid, points: int) -> float:
    total = 0.0
    for start in range(0, points, 8192):
        phi = TWO_PI * np.arange(start, min(points, start + 8192)) / points
        total += float(np.sum(_integrand(state, cost, m_grid, phi)))
    return total / points


def _piecewise_gauss(state, cost, m_grid, cuts: np.ndarray, nodes: int) -> float:
    x, w = np.polynomial.legendre.leggauss(nodes)
    lo, hi = cuts[:-1], cuts[1:]
    half = 0.5 * (hi - lo)
    phi = ((lo + hi)[:, None] * 0.5 + half[:, None] * x[None, :]).reshape(-1)
    weights = (half[:, None] * w[None, :]).reshape(-1)
    total = 0.0
    for start in range(0, phi.size, 8192):
        sl = slice(start, start + 8192)
        total += float(np.dot(weights[sl], _integrand(state, cost, m_grid, phi[sl])))
    return total / TWO_PI


def integrate_expected_cost(state: ProbeState, cost: CostSpec, m_grid: int,
                            tol: float = QUAD_TOL) -> float:
    """``(1/2pi) int sum_y Pr(y|phi) C(phi - 2 pi y/M) dphi`` by quadrature.

    Smooth costs use the periodic trapezoidal rule from 4096 points,
    doubling until successive values agree to ``tol`` (cap 2**16).  Costs
    with jumps are split at every ``2 pi y/M + breakpoint`` and integrated
    with Gauss-Legendre on each smooth piece, refined the same way.
    """
    if m_grid <= state.n_oracles:
        raise ValueError(f"m_grid={m_grid} must be >= N+1={state.n_oracles + 1}")
    if not cost.breakpoints:
        points = QUAD_START
        prev = _trapezoid(state, cost, m_grid, points)
        while points < QUAD_CAP:
            points *= 2
            cur = _trapezoid(state, cost, m_grid, points)
            if abs(cur - prev) <= tol:
                return cur
            prev = cur
        logger.warning("trapezoid did not settle to %g by %d points", tol, points)
        return prev

    shifts = TWO_PI * np.arange(m_grid) / m_grid
    cuts = np.mod(np.add.outer(shifts, np.asarray(cost.breakpoints)).reshape(-1), TWO_PI)
    cuts = np.unique(np.concatenate([[0.0, TWO_PI], cuts]))
    cuts = cuts[np.concatenate([[True], np.diff(cuts) > 1e-15])]
    pieces = cuts.size - 1
    nodes = max(8, -(-QUAD_START // pieces))
    prev = _piecewise_gauss(state, cost, m_grid, cuts, nodes)
    while nodes * pieces < 4 * QUAD_CAP:
        nodes *= 2
        cur = _piecewise_gauss(state, cost, m_grid, cuts, nodes)
        if abs(cur - prev) <= tol:
            return cur
        prev = cur
    raise NumericalError(f"piecewise quadrature did not settle to {tol:g}")


def semi_analytic_cost(config: ExperimentConfig) -> float:
    return integrate_expected_cost(config.probe(), config.cost, config.m_grid)


def analytic_cost(config: ExperimentConfig) -> float:
    return expected_cost(config.probe(), cost_matrix(config.cost, config.n_oracles))


# -- Monte Carlo ---------------------------------------------------------------

def _mc_chunk(state, config: ExperimentConfig, chunk: int) -> np.ndarray:
    start = chunk * MC_CHUNK
    size = min(MC_CHUNK, config.trials - start)
    rng = np.random.default_rng([config.seed, chunk])
    if config.phase_sampling == "uniform":
        phases = rng.uniform(0.0, TWO_PI, size)
    else:
        g = config.grid_points
        phases = TWO_PI * (np.arange(start, start + size) % g) / g
    probs = procedure1_probabilities(state, config.m_grid, phases)
    y = sample_outcomes(probs, rng.random(size))
    return config.cost(phases - TWO_PI * y / config.m_grid)


def monte_carlo_samples(config: ExperimentConfig) -> np.ndarray:
    """Per-trial costs; chunk ``c`` of 4096 trials draws from ``default_rng([seed, c])``."""
    state = config.probe()
    n_chunks = -(-config.trials // MC_CHUNK)
    workers = min(max_threads(), n_chunks)
    if workers <= 1:
        parts = [_mc_chunk(state, config, c) for c in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: _mc_chunk(state, config, c), range(n_chunks)))
    return np.concatenate(parts)


def monte_carlo_cost(config: ExperimentConfig) -> tuple[float, float | None]:
    """Sample mean cost and its standard error (``None`` below 100 trials)."""
    costs = monte_carlo_samples(config)
    mean = float(np.mean(costs))
    if config.trials < 100:
        return mean, None
    return mean, float(np.std(costs, ddof=1) / np.sqrt(costs.size))


def cost_report(config: ExperimentConfig) -> CostReport:
    state = config.probe()
    analytic = expected_cost(state, cost_matrix(config.cost, config.n_oracles))
    semi = integrate_expected_cost(state, config.cost, config.m_grid)
    mean, stderr = monte_carlo_cost(config)
    calls = procedure1_statevector(state, config.m_grid, 0.0).oracle_calls
    return CostReport(config.n_oracles, config.m_grid, config.state_kind, analytic, semi,
                      mean, stderr, calls, config.trials)


# -- studies -------------------------------------------------------------------

def m_invariance_check(state: ProbeState, cost: CostSpec, m_values: Iterable[int]) -> float:
    """Largest pairwise difference of the semi-analytic cost across grids ``M``."""
    m_values = list(m_values)
    if not m_values:
        raise ValueError("need at least one M")
    for m in m_values:
        if m <= state.n_oracles:
            raise ValueError(f"M={m} must be >= N+1={state.n_oracles + 1}")
    values = [integrate_expected_cost(state, cost, m) for m in m_values]
    return float(max(values) - min(values))


@dataclass
class SweepRow:
    n_oracles: int
    state_kind: str
    analytic: float
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"N": self.n_oracles, "state_kind": self.state_kind, "analytic": self.analytic,
               "n_cost": self.n_oracles * self.analytic,
               "n2_cost": self.n_oracles ** 2 * self.analytic}
        out.update(self.extra)
        return out


def scaling_sweep(cost: CostSpec, states: Sequence[str], n_values: Sequence[int]) -> list[SweepRow]:
    """Analytic expected cost for every ``(N, state kind)`` pair."""
    n_values = [int(n) for n in n_values]
    if not n_values:
        raise ValueError("n_values must be non-empty")
    if any(b <= a for a, b in zip(n_values, n_values[1:])) or n_values[0] < 0:
        raise ValueError("n_values must be non-negative and strictly ascending")
    for kind in states:
        if kind not in STATE_KINDS:
            raise ValueError(f"unknown state kind {kind!r}")
    rows = []
    for n, kind in itertools.product(n_values, states):
        matrix = cost_matrix(cost, n)
        if kind == "optimal":
            value = optimize_state(matrix)[1]
        else:
            value = expected_cost(make_state(kind, n), matrix)
        extra = {"delta_n_cost": cost.delta * n * value} if cost.kind == "window" else {}
        rows.append(SweepRow(n, kind, value, extra))
    return rows


def loglog_slope(rows: Sequence[SweepRow], state_kind: str, n_min: int = 1,
                 n_max: int | None = None) -> float:
    """Least-squares slope of ``log C`` against ``log N`` for one state kind."""
    pts = [(r.n_oracles, r.analytic) for r in rows
           if r.state_kind == state_kind and r.n_oracles >= max(n_min, 1)
           and (n_max is None or r.n_oracles <= n_max)]
    if len(pts) < 2:
        raise ValueError("need at least two points for a slope")
    n, c = np.asarray(pts, dtype=float).T
    return float(np.polyfit(np.log(n), np.log(c), 1)[0])


def write_csv(path, rows: Sequence[dict], columns: Sequence[str] | None = None) -> None:
    columns = list(columns or rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in columns})
