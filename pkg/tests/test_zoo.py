"""Metric constructors, parameter gates, and spec round-trips."""

import numpy as np
import pytest

from finslerkit import geometry, verify, zoo
from finslerkit.errors import (DegenerateMetricError, InvalidParameterError,
                               InvalidProfileError)
from finslerkit.geometry import TangentSample
from finslerkit.jets import Jet, extract, seed, value


def test_minkowski_rejects_unit_drift():
    with pytest.raises(InvalidParameterError):
        zoo.make_minkowski(2, b=[1.0, 0.0])


def test_randers_rejects_unit_one_form():
    with pytest.raises(InvalidParameterError):
        zoo.make_randers(b=[0.8, 0.8])


def test_funk_rejects_shift_outside_ball():
    with pytest.raises(InvalidParameterError):
        zoo.make_funk_shifted([1.2, 0.0])


def test_riemannian_rejects_non_spd_matrix():
    bad = np.array([[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises((InvalidParameterError, DegenerateMetricError)):
        zoo.make_riemannian(model="custom", matrix_field=lambda x: bad,
                            domain=zoo.Box(np.full(2, -1.0), np.full(2, 1.0)))


def test_profile_gate_rejects_negative_epsilon():
    with pytest.raises(InvalidProfileError) as err:
        zoo.epsilon_profile(-0.8).validate()
    assert err.value.condition in zoo.GATE_CONDITIONS + ("homogeneity", "f > 0")


def test_profile_gate_accepts_default_epsilon():
    zoo.epsilon_profile(0.5).validate()
    zoo.linear_profile().validate()


def test_funk_at_origin_is_the_norm():
    m = zoo.make_funk_shifted([0.0, 0.0])
    assert float(m.evaluate(np.zeros(2), np.array([1.0, 0.0]))) == pytest.approx(
        1.0, abs=1e-12)
    m = zoo.make_funk_shifted([0.3, 0.0])
    y = np.array([0.4, -0.7])
    want = np.linalg.norm(y) + 0.3 * y[0]
    assert float(m.evaluate(np.zeros(2), y)) == pytest.approx(want, abs=1e-12)


def test_implicit_funk_reduces_to_norm_at_origin():
    m = zoo.make_funk_implicit()
    y = np.array([0.8, 0.3])
    assert float(m.evaluate(np.zeros(2), y)) == pytest.approx(
        np.linalg.norm(y), abs=1e-12)


def test_implicit_funk_matches_closed_form():
    implicit = zoo.make_funk_implicit()
    closed = zoo.make_funk_shifted([0.0, 0.0])
    rng = np.random.default_rng(17)
    for _ in range(100):
        x = implicit.domain.sample_interior(rng, margin=0.05)
        y = rng.standard_normal(2)
        got = float(implicit.evaluate(x, y))
        want = float(closed.evaluate(x, y))
        assert got == pytest.approx(want, abs=1e-10 * max(1.0, abs(want)))


@pytest.mark.parametrize("phi,b", [("euclidean", None), ("randers", [0.3, 0.0])])
def test_implicit_funk_satisfies_its_pde(phi, b):
    """Theta_{x^k} = Theta Theta_{y^k} for the implicit solution."""
    m = zoo.make_funk_implicit(phi=phi, b=b)
    rng = np.random.default_rng(23)
    dirs = [np.eye(4)[i] for i in range(4)]
    for _ in range(20):
        x = m.domain.sample_interior(rng, margin=0.1)
        y = rng.standard_normal(2)
        jets = seed(np.concatenate([x, y]), dirs, 1)
        theta = m.evaluate(jets[:2], jets[2:])
        t0 = value(theta)
        for k in range(2):
            dx = extract(theta, tuple(int(i == k) for i in range(4)))
            dy = extract(theta, tuple(int(i == k + 2) for i in range(4)))
            assert abs(dx - t0 * dy) <= 1e-8 * max(1.0, abs(t0))


def test_slab_at_origin_is_euclidean():
    m = zoo.make_incomplete_slab()
    y = np.array([0.3, -0.8, 0.5])
    got = float(m.evaluate(np.zeros(3), y))
    assert got == pytest.approx(np.linalg.norm(y), abs=1e-12)


def test_linear_profile_product_has_no_torsion():
    disk = zoo.make_riemannian(model="hyperbolic_disk", dimension=2)
    line = zoo.make_riemannian(model="flat", dimension=1)
    m = zoo.make_szabo_product(disk, line, zoo.linear_profile())
    rng = np.random.default_rng(5)
    for _ in range(5):
        x = m.domain.sample_interior(rng, margin=0.1)
        y = rng.standard_normal(3)
        tv = geometry.mean_cartan(m, TangentSample(x, y))
        assert np.allclose(tv.covariant, 0.0, atol=1e-9)


def test_spec_round_trip_through_yaml():
    for spec in zoo.default_specs():
        text = spec.to_yaml()
        back = zoo.MetricSpec.from_yaml(text)
        assert back == spec
        zoo.build_metric(back)


def test_spec_rejects_unknown_keys():
    with pytest.raises((InvalidParameterError, ValueError, TypeError)):
        zoo.MetricSpec.from_dict(
            {"kind": "euclidean", "dimension": 2, "flavor": "mint"})


def test_build_metric_rejects_unknown_kind():
    with pytest.raises(InvalidParameterError):
        zoo.build_metric(zoo.MetricSpec("projective_cabbage", 2, {}))


@pytest.mark.parametrize("spec", zoo.default_specs(), ids=lambda s: s.kind)
def test_every_kind_passes_basic_invariants(spec):
    """Homogeneity, SPD fundamental tensor, and torsion orthogonality."""
    m = zoo.build_metric(spec)
    rng = np.random.default_rng(31)
    for _ in range(10):
        x = m.domain.sample_interior(rng, margin=0.1)
        y = rng.standard_normal(m.dimension)
        at = TangentSample(x, y)
        F = float(m.evaluate(x, y))
        assert F > 0.0
        assert float(m.evaluate(x, 2.0 * y)) == pytest.approx(2.0 * F, rel=1e-10)
        ft = geometry.fundamental_tensor(m, at)
        eig = np.linalg.eigvalsh(ft.g)
        assert eig.min() > 0.0
        assert float(y @ ft.g @ y) == pytest.approx(F * F, rel=1e-8)
        tv = geometry.mean_cartan(m, at)
        scale = max(1.0, np.linalg.norm(tv.covariant))
        assert abs(float(tv.covariant @ y)) <= 1e-8 * scale * max(1.0, F)
