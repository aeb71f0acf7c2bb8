"""Independent reference computations used as test oracles.

These integrate the defining integrals directly and share no code with the
package's Fourier/Toeplitz or quadrature paths.
"""

import numpy as np
from scipy import integrate


def gauss_segments(f, a, b, pieces=64, nodes=24):
    """Composite Gauss-Legendre of ``f`` over ``[a, b]`` (``f`` vectorized, may be complex)."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, pieces + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        total = total + half * np.dot(w, f(mid + half * x))
    return total


def poly_abs2(alpha):
    alpha = np.asarray(alpha, dtype=complex)
    j = np.arange(alpha.size)
    return lambda phi: np.abs(np.exp(1j * np.outer(phi, j)) @ alpha) ** 2


def fidelity_expected_cost(alpha, pieces=64):
    """``(1/2pi) int |sum_j alpha_j e^{ij phi}|^2 sin^2(phi/2) dphi``."""
    p = poly_abs2(alpha)
    return gauss_segments(lambda t: p(t) * np.sin(t / 2) ** 2, -np.pi, np.pi, pieces) / (2 * np.pi)


def window_expected_cost(alpha, delta, pieces=64):
    """Same integral for the window cost, integrated only where the cost is 1."""
    p = poly_abs2(alpha)
    return gauss_segments(p, delta, 2 * np.pi - delta, pieces) / (2 * np.pi)


def window_coefficient_quad(k, delta):
    """``(1/2pi) int_{delta <= |phi| <= pi} e^{-ik phi} dphi`` with scipy.quad."""
    re = integrate.quad(lambda t: np.cos(k * t), delta, np.pi, limit=400)[0]
    # the imaginary parts of the two symmetric halves cancel
    return 2 * re / (2 * np.pi)


def window_coefficient_gauss(k, delta, pieces=500, nodes=24):
    """Same coefficient by composite Gauss-Legendre on 12000 points."""
    return 2 * gauss_segments(lambda t: np.cos(k * t), delta, np.pi, pieces, nodes) / (2 * np.pi)


def trapezoid_expected_cost(alpha, cost_fn, points=2 ** 14):
    phi = 2 * np.pi * np.arange(points) / points
    return float(np.mean(poly_abs2(alpha)(phi) * cost_fn(phi)))
