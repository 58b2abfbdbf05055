"""Constructors for every concrete metric the harness verifies.

All constructors return immutable `MetricField` values whose `evaluate`
works over plain numbers, batched numpy arrays, and jets, so curvature
derivations can differentiate straight through them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from .domains import Ball, Box, DiskCylinder, Domain, product_domain
from .errors import ImplicitSolveError, InvalidParameterError, InvalidProfileError
from .geometry import MetricField
from .jets import Jet, deriv, extract, jsqrt, seed, value

KINDS = ("euclidean", "minkowski", "riemannian", "randers", "funk_ball_shifted",
         "funk_implicit", "szabo_product", "szabo_epsilon", "incomplete_slab")


def _dot(u, v):
    acc = u[0] * v[0]
    for a, b in zip(u[1:], v[1:]):
        acc = acc + a * b
    return acc


# -- metric specification ----------------------------------------------------

@dataclass(frozen=True)
class MetricSpec:
    """Serializable description of a zoo metric."""

    kind: str
    dimension: int
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown metric kind {self.kind!r}")

    def to_dict(self):
        return {"kind": self.kind, "dimension": int(self.dimension),
                "parameters": _plain(self.parameters)}

    @classmethod
    def from_dict(cls, data):
        extra = set(data) - {"kind", "dimension", "parameters"}
        if extra:
            raise InvalidParameterError(f"unknown metric spec keys: {sorted(extra)}")
        return cls(kind=data["kind"], dimension=int(data["dimension"]),
                   parameters=dict(data.get("parameters", {})))

    def to_yaml(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_yaml(cls, text):
        return cls.from_dict(yaml.safe_load(text))


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


# -- simple norms and Riemannian models --------------------------------------

def make_euclidean(dimension=2):
    spec = MetricSpec("euclidean", dimension)
    return MetricField(
        dimension=dimension,
        domain=Box(-10.0 * np.ones(dimension), 10.0 * np.ones(dimension)),
        evaluate=lambda x, y: jsqrt(_dot(y, y)),
        name="euclidean",
        spec=spec,
        extras={"quadratic_form": lambda x, y: _dot(y, y)},
    )


def make_minkowski(dimension=2, b=None):
    """Locally Minkowski (x-independent) Randers-type norm |y| + <b, y>."""
    b = np.array([0.4] + [0.0] * (dimension - 1)) if b is None else np.asarray(b, float)
    if np.linalg.norm(b) >= 1.0:
        raise InvalidParameterError(f"drift |b| = {np.linalg.norm(b):.3f} must be < 1")
    spec = MetricSpec("minkowski", dimension, {"b": b})
    return MetricField(
        dimension=dimension,
        domain=Box(-10.0 * np.ones(dimension), 10.0 * np.ones(dimension)),
        evaluate=lambda x, y: jsqrt(_dot(y, y)) + _dot(b, y),
        name="minkowski",
        spec=spec,
    )


RIEMANN_MODELS = ("flat", "sphere", "hyperbolic_disk", "custom")


def make_riemannian(model="flat", dimension=2, matrix_field=None, domain=None):
    """F = sqrt(a_ij(x) y^i y^j) for the named space form or a custom field."""
    if model not in RIEMANN_MODELS:
        raise InvalidParameterError(f"unknown Riemannian model {model!r}")
    if model == "flat":
        dom = Box(-10.0 * np.ones(dimension), 10.0 * np.ones(dimension))

        def qform(x, y):
            return _dot(y, y)
    elif model == "sphere":
        dom = Box(-10.0 * np.ones(dimension), 10.0 * np.ones(dimension))

        def qform(x, y):  # stereographic chart of the unit sphere
            c = 1.0 + _dot(x, x)
            return 4.0 * _dot(y, y) / (c * c)
    elif model == "hyperbolic_disk":
        dom = Ball(dimension)

        def qform(x, y):  # Poincare disk
            c = 1.0 - _dot(x, x)
            return 4.0 * _dot(y, y) / (c * c)
    else:
        if matrix_field is None:
            raise InvalidParameterError("custom model requires a matrix_field callable")
        dom = domain or Box(-np.ones(dimension), np.ones(dimension))

        def qform(x, y):
            a = matrix_field(x)
            acc = None
            for i in range(dimension):
                for j in range(dimension):
                    term = a[i][j] * y[i] * y[j]
                    acc = term if acc is None else acc + term
            return acc
        _check_spd(qform, dom, dimension)
    spec = MetricSpec("riemannian", dimension, {"model": model})
    return MetricField(
        dimension=dimension,
        domain=dom,
        evaluate=lambda x, y: jsqrt(qform(x, y)),
        name=f"riemannian[{model}]",
        spec=spec,
        extras={"quadratic_form": qform, "model": model},
    )


def _check_spd(qform, dom, n, samples=50):
    rng = np.random.default_rng(7)
    for _ in range(samples):
        x = dom.sample_interior(rng)
        yj = seed(np.zeros(n), list(np.eye(n)), 2)
        q = qform(x, yj)
        a = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                idx = [0] * n
                idx[i] += 1
                idx[j] += 1
                a[i, j] = 0.5 * extract(q, idx)
        if np.min(np.linalg.eigvalsh(a)) <= 0.0:
            raise InvalidParameterError(f"matrix field not positive definite at x={x}")


def make_randers(model="flat", dimension=2, b=None, matrix_field=None, domain=None,
                 gate_samples=200):
    """Randers metric F = alpha + beta with the ||beta||_x < 1 gate sampled."""
    base = make_riemannian(model, dimension, matrix_field, domain)
    b = np.array([0.5] + [0.0] * (dimension - 1)) if b is None else np.asarray(b, float)
    qform = base.extras["quadratic_form"]

    def beta_norm(x):
        yj = seed(np.zeros(dimension), list(np.eye(dimension)), 2)
        q = qform(list(np.asarray(x, float)), yj)
        a = np.empty((dimension, dimension))
        for i in range(dimension):
            for j in range(dimension):
                idx = [0] * dimension
                idx[i] += 1
                idx[j] += 1
                a[i, j] = 0.5 * extract(q, idx)
        return float(np.sqrt(b @ np.linalg.solve(a, b)))

    rng = np.random.default_rng(11)
    for _ in range(gate_samples):
        x = base.domain.sample_interior(rng)
        nb = beta_norm(x)
        if nb >= 1.0:
            raise InvalidParameterError(
                f"||beta||_x = {nb:.4f} >= 1 at x = {x}")
    spec = MetricSpec("randers", dimension, {"model": model, "b": b})
    return MetricField(
        dimension=dimension,
        domain=base.domain,
        evaluate=lambda x, y: jsqrt(qform(x, y)) + _dot(b, y),
        name=f"randers[{model}]",
        spec=spec,
        extras={"quadratic_form": qform, "beta_norm": beta_norm, "b": b},
    )


# -- Funk-type metrics --------------------------------------------------------

def make_funk_shifted(a=None, dimension=2):
    """Shifted Funk family on the unit ball (closed form)."""
    a = np.zeros(dimension) if a is None else np.asarray(a, dtype=float)
    if a.size != dimension:
        raise InvalidParameterError("shift vector dimension mismatch")
    if np.linalg.norm(a) >= 1.0:
        raise InvalidParameterError(f"|a| = {np.linalg.norm(a):.3f} must be < 1")

    def evaluate(x, y):
        xx = _dot(x, x)
        yy = _dot(y, y)
        xy = _dot(x, y)
        theta = (jsqrt(yy - (xx * yy - xy * xy)) + xy) / (1.0 - xx)
        return theta + _dot(a, y) / (1.0 + _dot(a, x))

    spec = MetricSpec("funk_ball_shifted", dimension, {"a": a})
    return MetricField(dimension=dimension, domain=Ball(dimension),
                       evaluate=evaluate, name="funk_ball_shifted", spec=spec,
                       extras={"shift": a})


@dataclass(frozen=True)
class _PhiDomain(Domain):
    """Open unit ball of a Minkowski norm, sampled by rejection."""

    dimension: int
    phi: callable
    half_width: float

    def margin(self, x):
        return float(1.0 - self.phi(list(np.asarray(x, dtype=float))))

    def sample_interior(self, rng, margin=0.05):
        for _ in range(10_000):
            x = self.half_width * (2.0 * rng.random(self.dimension) - 1.0)
            if self.phi(list(x)) < 1.0 - margin:
                return x
        raise InvalidParameterError("rejection sampling failed for phi-ball domain")


def _theta_root(phi, x, y, tol=1e-13, max_iter=80):
    """Safeguarded Newton + bisection for theta = phi(y + theta x).

    Vectorized over trailing axes of the y components.  The residual
    r(theta) = theta - phi(y + theta x) is strictly increasing (slope at
    least 1 - phi(x) > 0 inside the chart), so the root is unique and
    bracketed by [0, phi(y) / (1 - phi(x))].
    """
    x = [float(c) for c in x]
    phi_x = float(phi(x))
    if phi_x >= 1.0:
        raise ImplicitSolveError(f"base point outside the phi-ball (phi(x)={phi_x:.4f})")
    y = [np.asarray(c, dtype=float) for c in y]
    phi_y = np.asarray(phi(y), dtype=float)
    lo = np.zeros_like(phi_y)
    hi = phi_y / (1.0 - phi_x) + 1e-12
    theta = phi_y.copy()
    scale = np.maximum(phi_y, 1.0)
    for _ in range(max_iter):
        tj = Jet(np.stack([theta, np.ones_like(theta)]), 1, 1)
        r = tj - phi([yc + tj * xc for yc, xc in zip(y, x)])
        res = np.asarray(r.value, dtype=float)
        if np.all(np.abs(res) <= tol * scale):
            return theta if theta.ndim else float(theta)
        lo = np.where(res < 0.0, theta, lo)
        hi = np.where(res > 0.0, theta, hi)
        slope = np.asarray(deriv(r, 0).value, dtype=float)
        step = np.divide(res, slope, out=np.zeros_like(res), where=slope > 0.0)
        candidate = theta - step
        bad = (candidate <= lo) | (candidate >= hi) | ~np.isfinite(candidate)
        theta = np.where(bad, 0.5 * (lo + hi), candidate)
    raise ImplicitSolveError("implicit Funk equation did not converge")


def _theta_jet(phi, x, y):
    """Lift the implicit Funk solution through jet-valued (x, y).

    Scalar root first, then Newton-preconditioned fixed-point iterations in
    jet arithmetic: the update multiplier has (near-)zero value part, so
    each sweep knocks out one nilpotent order.
    """
    template = next(c for c in list(x) + list(y) if isinstance(c, Jet))
    ndir, order = template.ndir, template.order
    xv = [value(c) for c in x]
    yv = [np.asarray(value(c), dtype=float) for c in y]
    theta0 = np.asarray(_theta_root(phi, xv, yv), dtype=float)
    # scalar slope of theta - phi(y + theta x) at the root
    tj = Jet(np.stack([theta0, np.ones_like(theta0)]), 1, 1)
    slope = np.asarray(deriv(tj - phi([yc + tj * xc for yc, xc in zip(yv, xv)]), 0).value,
                       dtype=float)
    theta = Jet.constant(theta0, ndir, order)
    for _ in range(order + 2):
        residual = theta - phi([yc + theta * xc for yc, xc in zip(y, x)])
        theta = theta - residual / slope
    residual = theta - phi([yc + theta * xc for yc, xc in zip(y, x)])
    if float(np.max(np.abs(residual.coeffs))) > 1e-9 * max(1.0, float(np.max(np.abs(theta0)))):
        raise ImplicitSolveError("jet propagation through the Funk equation stalled")
    return theta


def make_funk_implicit(phi=None, dimension=2, b=None):
    """Funk metric of the unit phi-ball, solved from theta = phi(y + theta x).

    phi may be "euclidean" (default), "randers" with a drift b, or any
    jet-evaluable Minkowski norm callable.
    """
    params = {}
    if phi is None or phi == "euclidean":
        params["phi"] = "euclidean"
        half_width = 1.0

        def phi_fn(v):
            return jsqrt(_dot(v, v))
    elif phi == "randers":
        b = np.array([0.3] + [0.0] * (dimension - 1)) if b is None else np.asarray(b, float)
        if np.linalg.norm(b) >= 1.0:
            raise InvalidParameterError(f"|b| = {np.linalg.norm(b):.3f} must be < 1")
        params["phi"] = "randers"
        params["b"] = b
        half_width = 1.0 / (1.0 - np.linalg.norm(b))

        def phi_fn(v):
            return jsqrt(_dot(v, v)) + _dot(b, v)
    elif callable(phi):
        params["phi"] = "callable"
        half_width = 2.0
        phi_fn = phi
    else:
        raise InvalidParameterError(f"unsupported Minkowski norm {phi!r}")

    def evaluate(x, y):
        if any(isinstance(c, Jet) for c in list(x) + list(y)):
            return _theta_jet(phi_fn, x, y)
        return _theta_root(phi_fn, x, y)

    spec = MetricSpec("funk_implicit", dimension, params)
    return MetricField(
        dimension=dimension,
        domain=_PhiDomain(dimension, phi_fn, half_width),
        evaluate=evaluate, name="funk_implicit", spec=spec,
        extras={"phi": phi_fn},
    )


# -- product (Berwald) metrics ------------------------------------------------

GATE_CONDITIONS = ("f_s > 0", "f_t > 0", "f_s + 2 s f_ss > 0",
                   "f_t + 2 t f_tt > 0", "f_s f_t - 2 f f_st > 0")


@dataclass(frozen=True)
class ProductProfile:
    """Positively 1-homogeneous profile f(s, t) for product metrics."""

    f: callable
    name: str = "profile"
    parameters: dict = field(default_factory=dict)

    def partials(self, s, t):
        """f and its partials up to second order at (s, t)."""
        js, jt = seed([s, t], [np.array([1.0, 0.0]), np.array([0.0, 1.0])], 2)
        fj = self.f(js, jt)
        return {
            "f": extract(fj, (0, 0)), "f_s": extract(fj, (1, 0)),
            "f_t": extract(fj, (0, 1)), "f_ss": extract(fj, (2, 0)),
            "f_st": extract(fj, (1, 1)), "f_tt": extract(fj, (0, 2)),
        }

    def gate(self, s, t):
        """Values of the five positivity conditions at (s, t)."""
        p = self.partials(s, t)
        return {
            GATE_CONDITIONS[0]: p["f_s"],
            GATE_CONDITIONS[1]: p["f_t"],
            GATE_CONDITIONS[2]: p["f_s"] + 2.0 * s * p["f_ss"],
            GATE_CONDITIONS[3]: p["f_t"] + 2.0 * t * p["f_tt"],
            GATE_CONDITIONS[4]: p["f_s"] * p["f_t"] - 2.0 * p["f"] * p["f_st"],
        }

    def validate(self, samples=None):
        """Homogeneity, non-vanishing, and the positivity gate on a quadrant grid."""
        if samples is None:
            grid = np.geomspace(1e-3, 1e3, 13)
            samples = [(s, t) for s in grid for t in grid]
        for s, t in samples:
            fval = float(value(self.f(s, t)))
            f2 = float(value(self.f(2.0 * s, 2.0 * t)))
            if abs(f2 - 2.0 * fval) > 1e-12 * max(1.0, abs(f2)):
                raise InvalidProfileError(
                    f"profile not 1-homogeneous at (s, t) = ({s:g}, {t:g})",
                    condition="homogeneity")
            if fval <= 0.0:
                raise InvalidProfileError(
                    f"profile vanishes at (s, t) = ({s:g}, {t:g})",
                    condition="f > 0")
            for cond, val in self.gate(s, t).items():
                if val <= 0.0:
                    raise InvalidProfileError(
                        f"condition {cond} fails at (s, t) = ({s:g}, {t:g}) "
                        f"(value {val:.3e})", condition=cond)
        return self


def linear_profile():
    return ProductProfile(f=lambda s, t: s + t, name="linear")


def epsilon_profile(eps):
    return ProductProfile(
        f=lambda s, t: s + t + eps * jsqrt(s * s + t * t),
        name="epsilon", parameters={"eps": float(eps)})


def make_szabo_product(alpha1, alpha2, profile, validate=True):
    """F = sqrt(f(alpha1^2, alpha2^2)) on the product chart."""
    if validate:
        profile.validate()
    n1, n2 = alpha1.dimension, alpha2.dimension
    q1 = alpha1.extras["quadratic_form"]
    q2 = alpha2.extras["quadratic_form"]

    def evaluate(x, y):
        s = q1(x[:n1], y[:n1])
        t = q2(x[n1:], y[n1:])
        return jsqrt(profile.f(s, t))

    params = {"profile": profile.name, **profile.parameters,
              "factor1": alpha1.spec.to_dict() if alpha1.spec else None,
              "factor2": alpha2.spec.to_dict() if alpha2.spec else None}
    spec = MetricSpec("szabo_product", n1 + n2, params)
    return MetricField(
        dimension=n1 + n2,
        domain=product_domain(alpha1.domain, alpha2.domain, n1, n2),
        evaluate=evaluate, name="szabo_product", spec=spec,
        extras={"factors": (alpha1, alpha2), "profile": profile},
    )


def make_szabo_epsilon(eps=0.5):
    """Hyperbolic-plane x flat-line Berwald family with the 4th-root profile."""
    alpha1 = make_riemannian("hyperbolic_disk", 2)
    alpha2 = make_riemannian("flat", 1)
    metric = make_szabo_product(alpha1, alpha2, epsilon_profile(eps))
    spec = MetricSpec("szabo_epsilon", 3, {"eps": float(eps)})
    return MetricField(
        dimension=3, domain=metric.domain, evaluate=metric.evaluate,
        name="szabo_epsilon", spec=spec, extras=metric.extras)


# -- incomplete slab ----------------------------------------------------------

def make_incomplete_slab(dimension=3):
    """Flat, zero-S metric on the solid cylinder s^2 + t^2 < 1 with J != 0."""
    if dimension < 2:
        raise InvalidParameterError("slab metric needs dimension >= 2")

    def evaluate(x, y):
        s, t = x[0], x[1]
        u, v = y[0], y[1]
        w = s * v - t * u
        c = 1.0 - (s * s + t * t)
        q = _dot(y, y)
        r = jsqrt(w * w + q * c)
        # (r - w) / c cancels catastrophically for w > 0 as c -> 0; switch
        # to the conjugate form q / (r + w) on that branch
        w_val = np.asarray(value(w))
        if isinstance(w, Jet) or isinstance(r, Jet):
            if float(np.min(w_val)) >= 0.0:
                return q / (r + w)
            return (r - w) / c
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(w_val >= 0.0, q / (r + w), (r - w) / c)

    spec = MetricSpec("incomplete_slab", dimension)
    return MetricField(dimension=dimension, domain=DiskCylinder(dimension),
                       evaluate=evaluate, name="incomplete_slab", spec=spec)


# -- spec-driven construction --------------------------------------------------

def build_metric(spec):
    """Construct the metric described by a MetricSpec (or its dict form)."""
    if isinstance(spec, dict):
        spec = MetricSpec.from_dict(spec)
    p = dict(spec.parameters)
    n = spec.dimension
    if spec.kind == "euclidean":
        return make_euclidean(n)
    if spec.kind == "minkowski":
        return make_minkowski(n, b=p.get("b"))
    if spec.kind == "riemannian":
        return make_riemannian(p.get("model", "flat"), n)
    if spec.kind == "randers":
        return make_randers(p.get("model", "flat"), n, b=p.get("b"))
    if spec.kind == "funk_ball_shifted":
        return make_funk_shifted(p.get("a"), n)
    if spec.kind == "funk_implicit":
        return make_funk_implicit(p.get("phi", "euclidean"), n, b=p.get("b"))
    if spec.kind == "szabo_product":
        f1 = build_metric(p["factor1"]) if p.get("factor1") else make_riemannian("hyperbolic_disk", 2)
        f2 = build_metric(p["factor2"]) if p.get("factor2") else make_riemannian("flat", 1)
        if p.get("profile", "epsilon") == "linear":
            profile = linear_profile()
        else:
            profile = epsilon_profile(p.get("eps", 0.5))
        return make_szabo_product(f1, f2, profile)
    if spec.kind == "szabo_epsilon":
        return make_szabo_epsilon(p.get("eps", 0.5))
    if spec.kind == "incomplete_slab":
        return make_incomplete_slab(n)
    raise InvalidParameterError(f"unknown metric kind {spec.kind!r}")


def default_specs():
    """One representative spec per zoo kind (the acceptance sampling set)."""
    return [
        MetricSpec("euclidean", 2),
        MetricSpec("minkowski", 2, {"b": [0.4, 0.0]}),
        MetricSpec("riemannian", 2, {"model": "hyperbolic_disk"}),
        MetricSpec("randers", 2, {"model": "flat", "b": [0.5, 0.0]}),
        MetricSpec("funk_ball_shifted", 2, {"a": [0.3, 0.0]}),
        MetricSpec("funk_implicit", 2, {"phi": "euclidean"}),
        MetricSpec("szabo_product", 3, {"profile": "epsilon", "eps": 0.5}),
        MetricSpec("szabo_epsilon", 3, {"eps": 0.5}),
        MetricSpec("incomplete_slab", 3),
    ]
