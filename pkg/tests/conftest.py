"""Shared fixtures and finite-difference helpers."""

import numpy as np
import pytest

from finslerkit import zoo


def richardson_derivative(fun, x, direction, order=1, step=1e-3):
    """Directional derivative of `fun` at `x` by Richardson extrapolation.

    Central differences at steps h and h/2 are combined to cancel the
    leading error term. `order` may be 1 or 2.
    """
    d = np.asarray(direction, dtype=float)

    def central(h):
        if order == 1:
            return (fun(x + h * d) - fun(x - h * d)) / (2.0 * h)
        return (fun(x + h * d) - 2.0 * fun(x) + fun(x - h * d)) / (h * h)

    coarse = central(step)
    fine = central(step / 2.0)
    weight = 4.0 if order == 1 else 4.0
    return (weight * fine - coarse) / (weight - 1.0)


@pytest.fixture(scope="session")
def funk_shifted():
    return zoo.make_funk_shifted([0.3, 0.0], dimension=2)


@pytest.fixture(scope="session")
def funk_plain():
    return zoo.make_funk_shifted([0.0, 0.0], dimension=2)


@pytest.fixture(scope="session")
def slab():
    return zoo.make_incomplete_slab(dimension=3)


@pytest.fixture(scope="session")
def szabo():
    return zoo.make_szabo_epsilon(eps=0.5)


@pytest.fixture(scope="session")
def zoo_metrics():
    """One built metric per kind, keyed by kind string."""
    return {spec.kind: zoo.build_metric(spec) for spec in zoo.default_specs()}
