"""Pointwise Finsler geometry derived from a metric field.

Everything here is a pure function of (metric, sample).  Derivatives come
from jet arithmetic: the squared metric is evaluated once over jets seeded
in the coordinate directions of the chart and the tangent space, and every
tensor below (fundamental tensor, spray, Riemann operator, torsions,
S-curvature) is read off by shifting jet coefficients.  The only covariant
machinery materialized is the nonlinear connection N^i_j = dG^i/dy^j;
contracted with the geodesic velocity it agrees with the connections the
covariant formulas need, so Christoffel symbols never appear.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domains import Domain
from .errors import DegenerateFlagError, DegenerateMetricError, DomainError
from .jets import Jet, deriv, extract, jsqrt, seed, value
from .quadrature import ball_volume, integrate_on_sphere, sphere_rule

#: Normalized Gram-determinant threshold below which a flag is degenerate.
FLAG_DEGENERACY_EPS = 1e-10


@dataclass(frozen=True)
class MetricField:
    """A Finsler metric F(x, y) on a coordinate chart.

    `evaluate` must accept plain floats, numpy arrays (batched directions)
    and jets for the components of x and y, and be positively 1-homogeneous
    in y.  All geometry is derived from this single callable.
    """

    dimension: int
    domain: Domain
    evaluate: callable
    name: str = "metric"
    spec: object = None
    extras: dict = field(default_factory=dict)

    def __call__(self, x, y):
        return self.evaluate(x, y)


@dataclass(frozen=True)
class TangentSample:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))


@dataclass(frozen=True)
class FundamentalTensor:
    g: np.ndarray
    g_inverse: np.ndarray
    at: TangentSample

    def inner(self, u, v):
        return float(u @ self.g @ v)

    def norm(self, u):
        return float(np.sqrt(max(u @ self.g @ u, 0.0)))


@dataclass(frozen=True)
class SprayData:
    G: np.ndarray
    N: np.ndarray
    at: TangentSample


@dataclass(frozen=True)
class RiemannOperator:
    R: np.ndarray
    R_lowered: np.ndarray
    at: TangentSample


@dataclass(frozen=True)
class TorsionVector:
    covariant: np.ndarray
    contravariant: np.ndarray
    at: TangentSample

    def norm(self, g_inverse):
        return float(np.sqrt(max(self.covariant @ g_inverse @ self.covariant, 0.0)))


@dataclass(frozen=True)
class CartanNormResult:
    value: float
    direction: np.ndarray


# -- jet plumbing -----------------------------------------------------------

def _check_domain(metric, x):
    if not metric.domain.contains(x):
        raise DomainError(f"point {np.asarray(x)} outside chart domain of {metric.name}")


def _y_jets(metric, x, y, order):
    """F^2 as a jet seeded in the n tangent coordinate directions."""
    n = metric.dimension
    yj = seed(y, list(np.eye(n)), order)
    f = metric.evaluate([float(c) for c in x], yj)
    return f * f


def _phase_jets(metric, x, y, order):
    """F^2 as a jet seeded in all 2n chart+tangent coordinate directions."""
    n = metric.dimension
    point = np.concatenate([x, y])
    js = seed(point, list(np.eye(2 * n)), order)
    f = metric.evaluate(js[:n], js[n:])
    return f * f


def _spd_inverse(g, at):
    try:
        c = np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise DegenerateMetricError(
            "fundamental tensor not positive definite", x=at.x, y=at.y) from None
    identity = np.eye(g.shape[0])
    w = np.linalg.solve(c, identity)
    return w.T @ w


def jet_solve(a, b):
    """Solve the linear system a @ z = b with jet-valued entries.

    `a` is an n x n nested list of jets (or floats), `b` a list of columns
    (each a list of jets).  Gaussian elimination with value-part pivoting.
    """
    n = len(a)
    a = [row[:] for row in a]
    b = [col[:] for col in b]
    for k in range(n):
        pivot = max(range(k, n), key=lambda r: abs(float(value(a[r][k]))))
        if abs(float(value(a[pivot][k]))) == 0.0:
            raise DegenerateMetricError("singular jet-valued matrix")
        if pivot != k:
            a[k], a[pivot] = a[pivot], a[k]
            for col in b:
                col[k], col[pivot] = col[pivot], col[k]
        for r in range(k + 1, n):
            factor = a[r][k] / a[k][k]
            for c in range(k + 1, n):
                a[r][c] = a[r][c] - factor * a[k][c]
            for col in b:
                col[r] = col[r] - factor * col[k]
    columns = []
    for col in b:
        z = [None] * n
        for r in range(n - 1, -1, -1):
            acc = col[r]
            for c in range(r + 1, n):
                acc = acc - a[r][c] * z[c]
            z[r] = acc / a[r][r]
        columns.append(z)
    return columns


def _g_jets(f2, n, order):
    """Fundamental tensor entries as jets of the given order.

    `f2` must be seeded in 2n phase-space directions (y-slots n..2n-1)
    at order `order` + 2.
    """
    g = [[None] * n for _ in range(n)]
    for i in range(n):
        di = deriv(f2, n + i)
        for j in range(i, n):
            g[i][j] = deriv(di, n + j) * 0.5
            g[j][i] = g[i][j]
    return g


def _spray_jets(metric, x, y, order):
    """Spray coefficients G^i as jets of `order` in the 2n phase directions.

    Also returns the fundamental-tensor jets (same order) for reuse.
    Uses G^i = 1/4 g^{il} ( [F^2]_{x^k y^l} y^k - [F^2]_{x^l} ).
    """
    n = metric.dimension
    f2 = _phase_jets(metric, x, y, order + 2)
    g = _g_jets(f2, n, order)
    point = np.concatenate([x, y])
    js = seed(point, list(np.eye(2 * n)), order + 2)
    yj = js[n:]
    rhs = []
    for l in range(n):
        acc = None
        for k in range(n):
            term = deriv(deriv(f2, k), n + l) * yj[k]
            acc = term if acc is None else acc + term
        rhs.append((acc - deriv(f2, l)) * 0.25)
    if float(value(g[0][0])) <= 0.0:
        raise DegenerateMetricError("fundamental tensor not positive definite",
                                    x=np.asarray(x), y=np.asarray(y))
    (gvec,) = jet_solve(g, [rhs])
    return gvec, g, f2


# -- operations -------------------------------------------------------------

def fundamental_tensor(metric, at):
    """g_ij = 1/2 d^2 F^2 / dy^i dy^j with its inverse."""
    _check_domain(metric, at.x)
    n = metric.dimension
    f2 = _y_jets(metric, at.x, at.y, 2)
    g = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            idx = [0] * n
            idx[i] += 1
            idx[j] += 1
            g[i, j] = g[j, i] = 0.5 * extract(f2, idx)
    g_inv = _spd_inverse(g, at)
    return FundamentalTensor(g=g, g_inverse=g_inv, at=at)


def spray(metric, at):
    """Spray coefficients G^i and nonlinear connection N^i_j = dG^i/dy^j."""
    _check_domain(metric, at.x)
    n = metric.dimension
    gvec, _, _ = _spray_jets(metric, at.x, at.y, 1)
    G = np.array([float(value(gi)) for gi in gvec])
    N = np.array([[float(value(deriv(gi, n + j))) for j in range(n)] for gi in gvec])
    return SprayData(G=G, N=N, at=at)


def riemann(metric, at):
    """Riemann operator R^i_k from the spray, term by term."""
    _check_domain(metric, at.x)
    n = metric.dimension
    y = at.y
    gvec, gjets, _ = _spray_jets(metric, at.x, at.y, 2)
    G = np.array([float(value(gi)) for gi in gvec])
    dGdx = np.empty((n, n))
    N = np.empty((n, n))
    d2_xy = np.empty((n, n, n))
    d2_yy = np.empty((n, n, n))
    for i, gi in enumerate(gvec):
        for j in range(n):
            dj_x = deriv(gi, j)
            dj_y = deriv(gi, n + j)
            dGdx[i, j] = float(value(dj_x))
            N[i, j] = float(value(dj_y))
            for k in range(n):
                d2_xy[i, j, k] = float(value(deriv(dj_x, n + k)))
                d2_yy[i, j, k] = float(value(deriv(dj_y, n + k)))
    R = (2.0 * dGdx
         - np.einsum("j,ijk->ik", y, d2_xy)
         + 2.0 * np.einsum("j,ijk->ik", G, d2_yy)
         - N @ N)
    g = np.array([[float(value(gjets[i][j])) for j in range(n)] for i in range(n)])
    return RiemannOperator(R=R, R_lowered=g @ R, at=at)


def flag_curvature(metric, at, u):
    """Flag curvature K(P, y) for the flag P = span{y, u}."""
    u = np.asarray(u, dtype=float)
    gt = fundamental_tensor(metric, at)
    y = at.y
    gyy = gt.inner(y, y)
    guu = gt.inner(u, u)
    gyu = gt.inner(y, u)
    gram = gyy * guu - gyu ** 2
    if gram <= FLAG_DEGENERACY_EPS * gyy * guu:
        raise DegenerateFlagError("flag pole and transverse vector are parallel")
    R = riemann(metric, at).R
    return float(u @ gt.g @ (R @ u)) / gram


def volume_density(metric, x, tol=None):
    """Busemann-Hausdorff density: unit-ball volume over the F-ball volume."""
    _check_domain(metric, x)
    n = metric.dimension
    x = np.asarray(x, dtype=float)

    def radial(points):
        f = metric.evaluate(x, list(points.T))
        return np.asarray(f, dtype=float) ** (-n) / n

    f_ball, _ = integrate_on_sphere(n, radial, tol=tol)
    return ball_volume(n) / f_ball


def distortion(metric, at, tol=None):
    """tau = ln( sqrt(det g) / sigma_F )."""
    gt = fundamental_tensor(metric, at)
    sign, logdet = np.linalg.slogdet(gt.g)
    if sign <= 0:
        raise DegenerateMetricError("non-positive determinant", x=at.x, y=at.y)
    return 0.5 * logdet - np.log(volume_density(metric, at.x, tol=tol))


def mean_cartan(metric, at):
    """Mean Cartan torsion I_i = 1/2 g^{jk} dg_jk/dy^i (no quadrature)."""
    _check_domain(metric, at.x)
    n = metric.dimension
    f2 = _y_jets(metric, at.x, at.y, 3)
    g = np.empty((n, n))
    dg = np.empty((n, n, n))  # dg[j, k, i] = dg_jk/dy^i
    for j in range(n):
        for k in range(j, n):
            idx = [0] * n
            idx[j] += 1
            idx[k] += 1
            g[j, k] = g[k, j] = 0.5 * extract(f2, idx)
            for i in range(n):
                idx2 = idx.copy()
                idx2[i] += 1
                dg[j, k, i] = dg[k, j, i] = 0.5 * extract(f2, idx2)
    g_inv = _spd_inverse(g, at)
    covariant = 0.5 * np.einsum("jk,jki->i", g_inv, dg)
    return TorsionVector(covariant=covariant, contravariant=g_inv @ covariant, at=at)


def _identity_jets(n, ndir, order):
    cols = []
    for j in range(n):
        col = [Jet.constant(1.0 if i == j else 0.0, ndir, order) for i in range(n)]
        cols.append(col)
    return cols


def mean_landsberg(metric, at):
    """Mean Landsberg torsion J_i, the y-contracted horizontal derivative of I_i."""
    _check_domain(metric, at.x)
    n = metric.dimension
    x, y = at.x, at.y
    gvec, gjets, f2 = _spray_jets(metric, x, y, 2)
    G = np.array([float(value(gi)) for gi in gvec])
    N = np.array([[float(value(deriv(gi, n + j))) for j in range(n)] for gi in gvec])
    # g^{jk} as order-1 jets in all 2n phase directions
    g1 = [[gjets[i][j].truncated(1) for j in range(n)] for i in range(n)]
    ginv = jet_solve(g1, _identity_jets(n, 2 * n, 1))
    # I_i as order-1 jets: 1/2 g^{jk} dg_jk/dy^i
    i_jets = []
    for i in range(n):
        acc = None
        for j in range(n):
            for k in range(n):
                term = ginv[k][j] * deriv(gjets[j][k], n + i)
                acc = term if acc is None else acc + term
        i_jets.append(acc * 0.5)
    i_cov = np.array([float(value(ij)) for ij in i_jets])
    covariant = np.empty(n)
    for i in range(n):
        horiz = 0.0
        for m in range(n):
            horiz += y[m] * float(value(deriv(i_jets[i], m)))
            horiz -= 2.0 * G[m] * float(value(deriv(i_jets[i], n + m)))
        covariant[i] = horiz - float(i_cov @ N[:, i])
    g = np.array([[float(value(gjets[i][j])) for j in range(n)] for i in range(n)])
    g_inv = _spd_inverse(g, at)
    return TorsionVector(covariant=covariant, contravariant=g_inv @ covariant, at=at)


def s_curvature(metric, at, tol=None):
    """S = dG^m/dy^m - y^m d ln(sigma_F)/dx^m.

    The density term differentiates the quadrature integrand analytically:
    with the F-ball volume (1/n) Int F^{-n} dOmega, the x-gradient of its
    log is Int F_x F^{-(n+1)} dOmega / ((1/n) Int F^{-n} dOmega), which
    avoids the finite-difference noise floor of differentiating
    volume_density directly.
    """
    _check_domain(metric, at.x)
    n = metric.dimension
    x, y = at.x, at.y
    sp = spray(metric, at)
    trace_n = float(np.trace(sp.N))

    points, weights, _ = sphere_rule(n)
    xj = seed(x, list(np.eye(n)), 1)
    fj = metric.evaluate(xj, list(points.T))
    if isinstance(fj, Jet):
        fvals = np.asarray(fj.value, dtype=float)
        grad = np.stack([np.asarray(value(deriv(fj, d)), dtype=float)
                         for d in range(n)])
    else:  # metric independent of x
        fvals = np.asarray(fj, dtype=float)
        grad = np.zeros((n, fvals.size))
    denom = float(weights @ fvals ** (-n)) / n
    numer = float(weights @ ((y @ grad) * fvals ** (-(n + 1))))
    return trace_n - numer / denom


def cartan_norm(metric, x, coarse=None, refine=True):
    """sup over the indicatrix of ||I||_g, with the maximizing direction.

    Coarse sphere scan followed by local ascent. ||I||_g is homogeneous of
    degree -1 in y, so each Euclidean unit direction is rescaled to the
    indicatrix (F = 1) before the norm is taken.
    """
    _check_domain(metric, x)
    n = metric.dimension
    x = np.asarray(x, dtype=float)

    def norm_at(direction):
        at = TangentSample(x, direction)
        tv = mean_cartan(metric, at)
        g_inv = fundamental_tensor(metric, at).g_inverse
        return tv.norm(g_inv) * float(metric.evaluate(x, direction))

    if coarse is None:
        coarse = 96 if n == 2 else 192
    rng = np.random.default_rng(12345)
    if n == 2:
        angles = 2.0 * np.pi * np.arange(coarse) / coarse
        dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    else:
        dirs = rng.standard_normal((coarse, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    values = [norm_at(d) for d in dirs]
    best = int(np.argmax(values))
    best_dir, best_val = dirs[best], values[best]
    if refine:
        from scipy.optimize import minimize

        res = minimize(lambda d: -norm_at(d / np.linalg.norm(d)), best_dir,
                       method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 400})
        if -res.fun > best_val:
            best_val = -res.fun
            best_dir = res.x / np.linalg.norm(res.x)
    return CartanNormResult(value=float(best_val), direction=best_dir)
