"""Unit-sphere quadrature rules shared by volume and S-curvature code.

Rule selection by dimension: periodic trapezoid on the circle (spectrally
accurate for smooth integrands), Gauss-Legendre x trapezoid product rule
on S^2, and scrambled-Sobol quasi-Monte Carlo with a reported standard
error for n >= 4.  Node tables are built once and cached read-only.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import gammaln
from scipy.stats import norm, qmc

CIRCLE_NODES = 512
GAUSS_NODES = 128
AZIMUTH_NODES = 256
QMC_LOG2_NODES = 16


def ball_volume(n):
    """Volume of the Euclidean unit ball in R^n."""
    return math.exp(0.5 * n * math.log(math.pi) - gammaln(0.5 * n + 1.0))


def sphere_area(n):
    """Surface area of the unit sphere S^{n-1} in R^n."""
    return n * ball_volume(n)


@lru_cache(maxsize=None)
def sphere_rule(n, level=0):
    """Nodes (K, n) and weights (K,) integrating over S^{n-1}.

    `level` halves the node count once per unit (used for convergence
    checks); weights always sum to the sphere area.  Returns
    (points, weights, is_deterministic).
    """
    if n < 2:
        raise ValueError("sphere quadrature requires n >= 2")
    if n == 2:
        k = CIRCLE_NODES >> level
        theta = 2.0 * np.pi * np.arange(k) / k
        points = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        weights = np.full(k, 2.0 * np.pi / k)
        return points, weights, True
    if n == 3:
        kg = GAUSS_NODES >> level
        ka = AZIMUTH_NODES >> level
        mu, wmu = np.polynomial.legendre.leggauss(kg)
        phi = 2.0 * np.pi * np.arange(ka) / ka
        s = np.sqrt(1.0 - mu ** 2)
        points = np.stack([
            np.outer(s, np.cos(phi)).ravel(),
            np.outer(s, np.sin(phi)).ravel(),
            np.outer(mu, np.ones(ka)).ravel(),
        ], axis=1)
        weights = np.outer(wmu, np.full(ka, 2.0 * np.pi / ka)).ravel()
        return points, weights, True
    sampler = qmc.Sobol(d=n, scramble=True, seed=20240 + n + level)
    u = sampler.random_base2(QMC_LOG2_NODES - level)
    z = norm.ppf(np.clip(u, 1e-12, 1.0 - 1e-12))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    weights = np.full(z.shape[0], sphere_area(n) / z.shape[0])
    return z, weights, False


def integrate_on_sphere(n, integrand, tol=None):
    """Integrate `integrand(points)` over S^{n-1}.

    `integrand` receives node coordinates of shape (K, n) and must return
    shape-(K,) values.  Returns (value, error_estimate); the estimate is a
    coarse-grid comparison for the deterministic rules and a standard
    error for the QMC rule.
    """
    points, weights, deterministic = sphere_rule(n)
    vals = np.asarray(integrand(points), dtype=float)
    total = float(weights @ vals)
    if deterministic:
        cpoints, cweights, _ = sphere_rule(n, level=1)
        coarse = float(cweights @ np.asarray(integrand(cpoints), dtype=float))
        err = abs(total - coarse)
    else:
        err = sphere_area(n) * float(np.std(vals)) / math.sqrt(len(vals))
    if tol is not None and err > tol * max(1.0, abs(total)):
        from .errors import QuadratureToleranceError
        raise QuadratureToleranceError(
            f"sphere quadrature error {err:.3e} above tolerance {tol:.3e}",
            estimate=total, error=err)
    return total, err
