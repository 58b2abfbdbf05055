"""Independent reference values for the slab metric's mean Landsberg norm.

Everything here is computed with mpmath nested high-precision numerical
differentiation of the closed-form metric function, sharing no code with
the package: fundamental tensor as half the y-Hessian of F^2, spray from
the standard variational formula, mean Cartan torsion as the y-gradient
of ln sqrt(det g), and the mean Landsberg vector as its horizontal
derivative.  The printed ||J||_g values at five fixed samples are frozen
into the test suite as witness constants.

Run:  python3 oracles/slab_landsberg_reference.py
"""

import mpmath as mp

mp.mp.dps = 60
N = 3


def f2(*z):
    """Squared metric function; z = (s, t, p, u, v, q)."""
    s, t, _, u, v, q = z
    w = s * v - t * u
    c = 1 - s * s - t * t
    y2 = u * u + v * v + q * q
    F = (mp.sqrt(w * w + y2 * c) - w) / c
    return F * F


def partial(fun, z, orders):
    """High-precision mixed partial of fun at z."""
    return mp.diff(fun, tuple(z), tuple(orders), addprec=30)


def _orders(*pairs):
    o = [0] * (2 * N)
    for idx, k in pairs:
        o[idx] += k
    return o


def metric_matrix(z):
    g = mp.matrix(N, N)
    for i in range(N):
        for j in range(i, N):
            g[i, j] = g[j, i] = partial(f2, z, _orders((N + i, 1), (N + j, 1))) / 2
    return g


def spray_coeffs(z):
    ginv = metric_matrix(z) ** -1
    rhs = mp.matrix(N, 1)
    for l in range(N):
        inner = -partial(f2, z, _orders((l, 1)))
        for k in range(N):
            inner += partial(f2, z, _orders((k, 1), (N + l, 1))) * z[N + k]
        rhs[l] = inner
    return (ginv * rhs) / 4


def log_sqrt_det(*z):
    return mp.log(mp.det(metric_matrix(z))) / 2


def torsion(z):
    return [partial(log_sqrt_det, z, _orders((N + i, 1))) for i in range(N)]


def landsberg_norm(z):
    z = [mp.mpf(str(v)) for v in z]
    g = metric_matrix(z)
    ginv = g ** -1
    G = spray_coeffs(z)
    I = torsion(z)
    J = mp.matrix(N, 1)
    for i in range(N):
        def I_i(*w, i=i):
            return torsion(w)[i]
        acc = mp.mpf(0)
        for m in range(N):
            acc += z[N + m] * partial(I_i, z, _orders((m, 1)))
        for j in range(N):
            acc -= 2 * G[j] * partial(I_i, z, _orders((N + j, 1)))
        for k in range(N):
            def G_k(*w, k=k):
                return spray_coeffs(w)[k]
            acc -= I[k] * partial(G_k, z, _orders((N + i, 1)))
        J[i] = acc
    return mp.sqrt((J.T * ginv * J)[0, 0])


SAMPLES = [
    (0.1, 0.2, 0.0, 0.3, -0.4, 1.0),
    (-0.3, 0.1, 0.5, 1.0, 0.2, -0.7),
    (0.4, -0.2, -1.0, -0.5, 0.8, 0.3),
    (0.0, 0.5, 2.0, 0.9, -0.1, 0.6),
    (0.25, 0.25, -0.5, -0.2, -0.3, -1.1),
]

if __name__ == "__main__":
    for sample in SAMPLES:
        print(f"{sample}: {mp.nstr(landsberg_norm(sample), 20)}")
