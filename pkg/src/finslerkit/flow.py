"""Geodesic flow, transport along geodesics, and torsion diagnostics.

Geodesics integrate the spray ODE with an adaptive Runge-Kutta pair and
are re-sampled on a fixed Chebyshev grid so that time derivatives of
quantities along the trace can be taken with a spectral differentiation
matrix (the torsion diagnostics need two of them).  Incomplete metrics
exit the chart through an event, not an error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ResolutionError
from .geometry import (TangentSample, fundamental_tensor, mean_cartan,
                       mean_landsberg, riemann, spray, cartan_norm, _spray_jets)
from .jets import value

#: Dense-output nodes per trace; odd so the grid nests once for error checks.
TRACE_NODES = 257


def _solver_tol(tol):
    """Internal per-step tolerance for a requested trace accuracy.

    Adaptive Runge-Kutta global error grows sublinearly in the per-step
    tolerance, so the solver runs tighter than requested; this keeps the
    delivered accuracy proportional to `tol`.
    """
    return max(tol ** 1.5, 1e-13)


def chebyshev_nodes(a, b, count=TRACE_NODES):
    """Chebyshev points of the second kind on [a, b], increasing."""
    k = np.arange(count)
    return 0.5 * (a + b) + 0.5 * (b - a) * np.cos(np.pi * (count - 1 - k) / (count - 1))


def chebyshev_diff_matrix(nodes):
    """Spectral differentiation matrix for Chebyshev points of the 2nd kind."""
    n = len(nodes)
    c = np.ones(n)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(n)
    t = nodes.reshape(-1, 1)
    dt = t - t.T + np.eye(n)
    d = np.outer(c, 1.0 / c) / dt
    d -= np.diag(d.sum(axis=1))
    return d


@dataclass(frozen=True)
class GeodesicTrace:
    times: np.ndarray
    positions: np.ndarray   # (K, n)
    velocities: np.ndarray  # (K, n)
    speed_drift: float
    exit: bool = False
    exit_time: float = None

    @property
    def diff_matrix(self):
        return chebyshev_diff_matrix(self.times)

    def sample(self, k):
        return TangentSample(self.positions[k], self.velocities[k])


@dataclass(frozen=True)
class TorsionTrace:
    trace: GeodesicTrace
    I_of_t: np.ndarray         # (K, n) contravariant mean Cartan torsion
    DI_of_t: np.ndarray        # (K, n) covariant derivative (pointwise route)
    D2I_of_t: np.ndarray       # (K, n)
    phi_of_t: np.ndarray       # (K,)
    residual_of_t: np.ndarray  # (K,) g-norm of D^2 I + R(I)
    di_disagreement: float = 0.0   # max gap between the two DI routes
    dij_gap: float = 0.0           # max g-norm gap between DI and J


def _spray_rhs(metric, x, y):
    gvec, _, _ = _spray_jets(metric, x, y, 0)
    return np.array([float(value(g)) for g in gvec])


def integrate_geodesic(metric, x0, y0, t_span, tol=1e-10, nodes=TRACE_NODES):
    """Integrate the spray ODE; stops with an exit flag at the chart boundary.

    Step-size underflow near the boundary counts as an exit, not a failure;
    the exit time is then located by bisection on domain membership.
    """
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    n = metric.dimension

    def rhs(t, state):
        if metric.domain.margin(state[:n]) <= 0.0:
            return np.full(2 * n, np.nan)
        return np.concatenate([state[n:], -2.0 * _spray_rhs(metric, state[:n], state[n:])])

    def boundary(t, state):
        return metric.domain.margin(state[:n])

    def near_boundary(t, state):
        # some charts are approached asymptotically (the margin flattens
        # instead of crossing zero); stop once the point is within 1e-9 of
        # the boundary rather than grinding the step size down to underflow
        return metric.domain.margin(state[:n]) - 1e-9

    boundary.terminal = True
    boundary.direction = -1
    near_boundary.terminal = True
    near_boundary.direction = -1
    inner = _solver_tol(tol)
    sol = solve_ivp(rhs, t_span, np.concatenate([x0, y0]), method="RK45",
                    rtol=inner, atol=inner, dense_output=True,
                    events=(boundary, near_boundary))
    exited = bool(sol.t_events[0].size) or bool(sol.t_events[1].size)
    if exited:
        hits = np.concatenate([sol.t_events[0], sol.t_events[1]])
        t_end = float(hits.min())
    elif sol.status == -1:
        # the step size collapsed against the boundary; bisect for the
        # last interior time on the dense output
        exited = True
        lo, hi = float(sol.t[0]), float(sol.t[-1])
        if metric.domain.margin(sol.sol(hi)[:n]) > 0.0:
            t_end = hi
        else:
            while hi - lo > 1e-10:
                mid = 0.5 * (lo + hi)
                if metric.domain.margin(sol.sol(mid)[:n]) > 0.0:
                    lo = mid
                else:
                    hi = mid
            t_end = lo
    else:
        t_end = t_span[1]
    exit_time = t_end if exited else None
    if exited:
        # back off until the final node is strictly interior
        step = 1e-10 * max(t_end - t_span[0], 1.0)
        while t_end > t_span[0] and metric.domain.margin(sol.sol(t_end)[:n]) <= 0.0:
            t_end -= step
            step *= 2.0
    times = chebyshev_nodes(t_span[0], t_end, nodes)
    states = sol.sol(times)
    positions = states[:n].T.copy()
    velocities = states[n:].T.copy()
    speeds = np.array([float(metric.evaluate(p, v))
                       for p, v in zip(positions, velocities)])
    drift = float(np.max(np.abs(speeds - speeds[0])))
    return GeodesicTrace(times=times, positions=positions, velocities=velocities,
                         speed_drift=drift, exit=exited, exit_time=exit_time)


def connection_along(metric, trace):
    """N^i_j(sigma, sigma-dot) at every trace node, shape (K, n, n)."""
    return np.stack([spray(metric, trace.sample(k)).N
                     for k in range(len(trace.times))])


def covariant_derivative_along(metric, trace, X_of_t, connections=None, tol=None):
    """D_{sigma-dot} X along the trace: spectral d/dt plus the N-connection term.

    With `tol` set, the derivative is recomputed on the nested half grid and
    a disagreement above `tol` raises ResolutionError.
    """
    X = np.asarray(X_of_t, dtype=float)
    d = trace.diff_matrix
    if connections is None:
        connections = connection_along(metric, trace)
    dX = d @ X
    out = dX + np.einsum("kij,kj->ki", connections, X)
    if tol is not None:
        coarse = chebyshev_diff_matrix(trace.times[::2]) @ X[::2]
        gap = float(np.max(np.abs(coarse - dX[::2])))
        if gap > tol:
            raise ResolutionError(
                f"time-derivative disagreement {gap:.3e} above tolerance {tol:.3e}")
    return out


def torsion_trace(metric, trace, check_tol=1e-5):
    """Mean Cartan torsion diagnostics along a geodesic.

    I(t) is evaluated pointwise; DI comes from the pointwise mean Landsberg
    vector (the two agree along geodesics) and is cross-checked against the
    spectral derivative of the transported components; D^2 I takes one
    spectral derivative of DI.  The residual is the g-norm of D^2 I + R(I).
    """
    k_nodes = len(trace.times)
    n = metric.dimension
    I = np.empty((k_nodes, n))
    J = np.empty((k_nodes, n))
    phi = np.empty(k_nodes)
    conns = np.empty((k_nodes, n, n))
    rops = np.empty((k_nodes, n, n))
    gs = np.empty((k_nodes, n, n))
    for k in range(k_nodes):
        at = trace.sample(k)
        gt = fundamental_tensor(metric, at)
        I[k] = mean_cartan(metric, at).contravariant
        J[k] = mean_landsberg(metric, at).contravariant
        conns[k] = spray(metric, at).N
        rops[k] = riemann(metric, at).R
        gs[k] = gt.g
        phi[k] = np.sqrt(max(I[k] @ gt.g @ I[k], 0.0))
    DI_numeric = covariant_derivative_along(metric, trace, I, connections=conns)
    DI = DI_numeric.copy()
    # pointwise route: D I = J along geodesics
    gap = np.sqrt(np.einsum("ki,kij,kj->k", DI_numeric - J, gs, DI_numeric - J))
    scale = max(float(np.max(np.abs(I))), 1e-30)
    disagreement = float(np.max(gap)) / scale
    if check_tol is not None and disagreement > check_tol:
        raise ResolutionError(
            f"covariant-derivative routes disagree by {disagreement:.3e}")
    D2I = covariant_derivative_along(metric, trace, J, connections=conns)
    resid_vec = D2I + np.einsum("kij,kj->ki", rops, I)
    residual = np.sqrt(np.einsum("ki,kij,kj->k", resid_vec, gs, resid_vec))
    return TorsionTrace(trace=trace, I_of_t=I, DI_of_t=J, D2I_of_t=D2I,
                        phi_of_t=phi, residual_of_t=residual,
                        di_disagreement=disagreement, dij_gap=float(np.max(gap)))


def jacobi_propagate(metric, trace, V0, DV0, tol=1e-10):
    """Integrate the Jacobi equation D^2 V + R(V) = 0 along the trace.

    Returns V at the trace nodes.  The geodesic is re-integrated jointly so
    the curvature operator is evaluated on the exact current state.
    """
    n = metric.dimension
    x0, y0 = trace.positions[0], trace.velocities[0]
    V0 = np.asarray(V0, dtype=float)
    # the integrated state w is the covariant derivative itself
    W0 = np.asarray(DV0, dtype=float)

    def rhs(t, state):
        x, y, v, w = state[:n], state[n:2 * n], state[2 * n:3 * n], state[3 * n:]
        at = TangentSample(x, y)
        sp = spray(metric, at)
        rop = riemann(metric, at).R
        return np.concatenate([
            y, -2.0 * sp.G,
            w - sp.N @ v,
            -rop @ v - sp.N @ w,
        ])

    sol = solve_ivp(rhs, (trace.times[0], trace.times[-1]),
                    np.concatenate([x0, y0, V0, W0]), method="RK45",
                    rtol=_solver_tol(tol), atol=_solver_tol(tol), dense_output=True)
    states = sol.sol(trace.times)
    return states[2 * n:3 * n].T.copy()


def growth_estimate(metric, p, radii, directions=12, seed=0, refine=False,
                    coarse=None, nodes=65):
    """Running suprema of the Cartan norm over forward geodesic balls.

    Shoots unit-speed geodesics from `p`, records the Cartan norm at points
    with forward distance below each radius, and returns (radius, supremum)
    pairs.  Forward distance along the shot geodesics stands in for the
    symmetrized distance; incomplete charts give a partial result with a
    coverage flag.  `coarse` and `nodes` trade accuracy for speed.
    """
    p = np.asarray(p, dtype=float)
    n = metric.dimension
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((directions, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = np.asarray(sorted(radii), dtype=float)
    r_max = float(radii[-1])
    records = [(0.0, cartan_norm(metric, p, coarse=coarse, refine=refine).value)]
    full_coverage = True
    for d in dirs:
        y0 = d / float(metric.evaluate(p, d))
        trace = integrate_geodesic(metric, p, y0, (0.0, r_max), tol=1e-9,
                                   nodes=nodes)
        if trace.exit:
            full_coverage = False
        for t, pos in zip(trace.times[1:], trace.positions[1:]):
            records.append((float(t),
                            cartan_norm(metric, pos, coarse=coarse,
                                        refine=refine).value))
    out = []
    best = 0.0
    records.sort()
    idx = 0
    for r in radii:
        while idx < len(records) and records[idx][0] <= r:
            best = max(best, records[idx][1])
            idx += 1
        out.append((float(r), best))
    return out, full_coverage


def phi_second_differences(torsion, floor=1e-9):
    """Discrete second derivative of phi where phi > floor (uneven grid)."""
    t = torsion.trace.times
    phi = torsion.phi_of_t
    out = []
    for k in range(1, len(t) - 1):
        if min(phi[k - 1], phi[k], phi[k + 1]) <= floor:
            continue
        h1 = t[k] - t[k - 1]
        h2 = t[k + 1] - t[k]
        second = 2.0 * (h1 * phi[k + 1] - (h1 + h2) * phi[k] + h2 * phi[k - 1]) \
            / (h1 * h2 * (h1 + h2))
        out.append(second)
    return np.asarray(out)


def trace_to_csv(torsion_or_trace, path_or_buffer):
    """Columnar CSV export: t, position, velocity, then phi/residual if present."""
    import io

    if isinstance(torsion_or_trace, TorsionTrace):
        trace = torsion_or_trace.trace
        extra_names = ["phi", "residual"]
        extras = np.stack([torsion_or_trace.phi_of_t,
                           torsion_or_trace.residual_of_t], axis=1)
    else:
        trace = torsion_or_trace
        extra_names = []
        extras = np.empty((len(trace.times), 0))
    n = trace.positions.shape[1]
    header = (["t"] + [f"x{i+1}" for i in range(n)]
              + [f"y{i+1}" for i in range(n)] + extra_names)
    table = np.column_stack([trace.times, trace.positions, trace.velocities, extras])
    own = isinstance(path_or_buffer, (str, bytes)) or hasattr(path_or_buffer, "__fspath__")
    buf = open(path_or_buffer, "w") if own else path_or_buffer
    try:
        buf.write(",".join(header) + "\n")
        for row in table:
            buf.write(",".join(f"{v:.12g}" for v in row) + "\n")
    finally:
        if own:
            buf.close()
