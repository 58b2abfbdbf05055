"""Geodesic integration, covariant transport, and torsion traces."""

import numpy as np
import pytest

from finslerkit import flow, zoo
from finslerkit.errors import ResolutionError
from finslerkit.flow import (covariant_derivative_along, growth_estimate,
                             integrate_geodesic, jacobi_propagate,
                             torsion_trace)


def test_minkowski_geodesics_are_straight():
    m = zoo.make_minkowski(2, b=[0.3, 0.0])
    x0 = np.array([0.2, -0.1])
    y0 = np.array([0.5, 0.4])
    tr = integrate_geodesic(m, x0, y0, (0.0, 1.5), nodes=33)
    want = x0[None, :] + tr.times[:, None] * y0[None, :]
    assert np.abs(tr.positions - want).max() <= 1e-10
    assert np.abs(tr.velocities - y0[None, :]).max() <= 1e-10
    assert not tr.exit


def test_funk_ray_from_origin():
    """From the centre the unit-speed Funk geodesic is x(t) = (1 - e^-t) e."""
    m = zoo.make_funk_shifted([0.0, 0.0])
    tr = integrate_geodesic(m, np.zeros(2), np.array([1.0, 0.0]), (0.0, 3.0),
                            nodes=33)
    assert np.abs(tr.positions[:, 0] - (1.0 - np.exp(-tr.times))).max() <= 1e-8
    assert np.abs(tr.positions[:, 1]).max() <= 1e-10
    assert not tr.exit


def test_funk_geodesics_are_collinear():
    m = zoo.make_funk_shifted([0.0, 0.0])
    x0 = np.array([0.1, 0.2])
    y0 = np.array([0.6, -0.3])
    tr = integrate_geodesic(m, x0, y0, (0.0, 1.0), nodes=33)
    disp = tr.positions - x0[None, :]
    cross = disp[:, 0] * y0[1] - disp[:, 1] * y0[0]
    assert np.abs(cross).max() <= 1e-8


def test_sphere_great_circle_closed_form():
    m = zoo.make_riemannian(model="sphere", dimension=2)
    tr = integrate_geodesic(m, np.zeros(2), np.array([1.0, 0.0]), (0.0, 1.2),
                            nodes=33)
    assert np.abs(tr.positions[:, 0] - np.tan(tr.times)).max() <= 1e-7
    assert np.abs(tr.positions[:, 1]).max() <= 1e-10


def test_hyperbolic_radial_geodesic_closed_form():
    m = zoo.make_riemannian(model="hyperbolic_disk", dimension=2)
    tr = integrate_geodesic(m, np.zeros(2), np.array([1.0, 0.0]), (0.0, 2.0),
                            nodes=33)
    assert np.abs(tr.positions[:, 0] - np.tanh(tr.times)).max() <= 1e-7


def test_speed_drift_stays_small(funk_shifted):
    tr = integrate_geodesic(funk_shifted, np.array([0.1, -0.2]),
                            np.array([0.8, 0.5]), (0.0, 1.0), nodes=33)
    assert tr.speed_drift <= 1e-8


def test_velocity_is_parallel_along_geodesics(funk_shifted):
    tr = integrate_geodesic(funk_shifted, np.array([0.1, -0.2]),
                            np.array([0.8, 0.5]), (0.0, 1.0), nodes=33)
    dv = covariant_derivative_along(funk_shifted, tr, tr.velocities)
    scale = np.abs(tr.velocities).max()
    assert np.abs(dv).max() <= 1e-7 * scale


def test_derivative_of_scaled_velocity_field(funk_shifted):
    """D(t sigma-dot) = sigma-dot by the Leibniz rule."""
    tr = integrate_geodesic(funk_shifted, np.array([0.1, -0.2]),
                            np.array([0.8, 0.5]), (0.0, 1.0), nodes=33)
    field = tr.times[:, None] * tr.velocities
    dv = covariant_derivative_along(funk_shifted, tr, field)
    assert np.abs(dv - tr.velocities).max() <= 1e-6


def test_sphere_unit_normal_is_parallel():
    """The chart-rescaled unit normal along a great circle has DV = 0."""
    m = zoo.make_riemannian(model="sphere", dimension=2)
    tr = integrate_geodesic(m, np.zeros(2), np.array([0.5, 0.0]), (0.0, 2.4),
                            nodes=33)
    # conformal factor 2 / (1 + |x|^2), so the unit normal is (1 + x^2) / 2 e2
    V = (1.0 + tr.positions[:, 0] ** 2)[:, None] / 2.0 * np.array([[0.0, 1.0]])
    dv = covariant_derivative_along(m, tr, V)
    assert np.abs(dv).max() <= 1e-8


def test_riemannian_torsion_trace_vanishes():
    m = zoo.make_riemannian(model="hyperbolic_disk", dimension=2)
    tr = integrate_geodesic(m, np.array([0.1, 0.0]), np.array([0.4, 0.3]),
                            (0.0, 1.0), nodes=33)
    tt = torsion_trace(m, tr, check_tol=None)
    assert np.abs(tt.I_of_t).max() <= 1e-9
    assert np.abs(tt.residual_of_t).max() <= 1e-8


def test_product_torsion_is_parallel(szabo):
    rng = np.random.default_rng(3)
    x0 = szabo.domain.sample_interior(rng, margin=0.2)
    y0 = rng.standard_normal(3)
    tr = integrate_geodesic(szabo, x0, y0, (0.0, 0.6), nodes=33)
    tt = torsion_trace(szabo, tr, check_tol=None)
    scale = max(1.0, np.abs(tt.I_of_t).max())
    assert np.abs(tt.DI_of_t).max() <= 1e-6 * scale
    phi = tt.phi_of_t
    assert np.abs(phi - phi[0]).max() <= 1e-6 * max(1.0, abs(phi[0]))


def test_shifted_funk_transport_equation(funk_shifted):
    tr = integrate_geodesic(funk_shifted, np.array([0.1, -0.2]),
                            np.array([0.8, 0.5]), (0.0, 1.0), nodes=33)
    tt = torsion_trace(funk_shifted, tr)
    scale = np.abs(tt.I_of_t).max()
    assert np.abs(tt.residual_of_t).max() <= 1e-4 * scale
    assert tt.di_disagreement <= 1e-5


def test_jacobi_field_flat_case():
    m = zoo.make_euclidean(2)
    tr = integrate_geodesic(m, np.zeros(2), np.array([1.0, 0.0]), (0.0, 2.0),
                            nodes=33)
    V0 = np.array([0.3, -0.1])
    DV0 = np.array([0.2, 0.5])
    V = jacobi_propagate(m, tr, V0, DV0)
    want = V0[None, :] + tr.times[:, None] * DV0[None, :]
    assert np.abs(V - want).max() <= 1e-8


def test_jacobi_field_on_the_sphere():
    """Unit-speed great circle with g-unit DV(0): |V(t)|_g = sin(t)."""
    m = zoo.make_riemannian(model="sphere", dimension=2)
    tr = integrate_geodesic(m, np.zeros(2), np.array([0.5, 0.0]), (0.0, 2.4),
                            nodes=33)
    from finslerkit.geometry import TangentSample, fundamental_tensor
    V = jacobi_propagate(m, tr, np.zeros(2), np.array([0.0, 0.5]))
    norms = []
    for k in range(len(tr.times)):
        ft = fundamental_tensor(m, TangentSample(tr.positions[k],
                                                 tr.velocities[k]))
        norms.append(np.sqrt(float(V[k] @ ft.g @ V[k])))
    assert np.abs(np.asarray(norms) - np.sin(tr.times)).max() <= 1e-7


def test_slab_geodesic_exits_the_chart(slab):
    tr = integrate_geodesic(slab, np.zeros(3), np.array([1.0, 0.2, 0.0]),
                            (0.0, 5.0), nodes=33)
    assert tr.exit
    assert tr.exit_time is not None and 0.0 < tr.exit_time < 5.0
    assert slab.domain.margin(tr.positions[-1]) > 0.0
    assert tr.speed_drift <= 1e-8


def test_growth_riemannian_torsion_is_zero():
    m = zoo.make_riemannian(model="hyperbolic_disk", dimension=2)
    records, covered = growth_estimate(m, np.zeros(2), [0.4],
                                       directions=3, coarse=16, nodes=17)
    assert covered
    assert records[0][1] <= 1e-8


def test_growth_minkowski_torsion_is_constant():
    m = zoo.make_minkowski(2, b=[0.4, 0.0])
    records, covered = growth_estimate(m, np.zeros(2), [0.3, 0.9],
                                       directions=3, coarse=16, nodes=17)
    assert covered
    assert records[0][1] == pytest.approx(records[1][1], rel=1e-6)


def test_growth_funk_bounded_and_monotone(funk_plain):
    records, covered = growth_estimate(funk_plain, np.zeros(2),
                                       [0.5, 1.0, 1.5],
                                       directions=3, coarse=16, nodes=17)
    assert covered
    values = [v for _, v in records]
    assert all(np.diff(values) >= -1e-12)
    assert values[-1] < 3.0 / np.sqrt(2.0)


def test_resolution_error_on_under_resolved_field(funk_shifted):
    tr = integrate_geodesic(funk_shifted, np.array([0.1, -0.2]),
                            np.array([0.8, 0.5]), (0.0, 1.0), nodes=9)
    rough = np.sin(40.0 * tr.times)[:, None] * tr.velocities
    with pytest.raises(ResolutionError):
        covariant_derivative_along(funk_shifted, tr, rough, tol=1e-8)
