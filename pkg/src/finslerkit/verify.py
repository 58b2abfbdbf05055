"""Declarative verification: claims as data, sampled checks, reports.

A Claim names a metric, a quantity, a target, a tolerance, and a sampling
plan.  run_claim evaluates the quantity over the plan and compares against
the target; run_suite executes many claims with deterministic aggregation.
Constructor or geometry errors become failed reports, never crashes.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np
import yaml

from .errors import FinslerError, InvalidParameterError
from .geometry import (TangentSample, flag_curvature, fundamental_tensor,
                       mean_cartan, mean_landsberg, riemann, s_curvature,
                       spray, _spray_jets)
from .jets import deriv, extract, seed, value
from .zoo import MetricSpec, build_metric
from . import flow

QUANTITIES = ("flag_curvature", "s_curvature", "s_curvature_ratio",
              "mean_cartan", "mean_landsberg", "cartan_orthogonality",
              "sskk1_residual", "det_identity", "spray_split", "funk_pde",
              "berwald_quadratic", "phi_convexity", "phi_constancy",
              "closed_one_form", "cartan_bound", "riemann_annihilates_torsion")

TARGET_KINDS = ("constant", "zero", "upper_bound", "exceeds")


@dataclass(frozen=True)
class SamplePlan:
    """Deterministic sampling of tangent vectors: interior points with a
    boundary margin, directions uniform on the sphere."""

    count: int = 200
    margin: float = 0.05
    seed: int = 0

    def draw(self, metric):
        rng = np.random.default_rng(self.seed)
        out = []
        for _ in range(self.count):
            x = metric.domain.sample_interior(rng, margin=self.margin)
            y = rng.standard_normal(metric.dimension)
            y /= np.linalg.norm(y)
            out.append(TangentSample(x, y))
        return out


@dataclass(frozen=True)
class Claim:
    id: str
    metric: MetricSpec
    quantity: str
    target: dict = field(default_factory=lambda: {"kind": "zero"})
    tolerance: float = 1e-8
    tolerance_kind: str = "absolute"
    samples: SamplePlan = field(default_factory=SamplePlan)
    parameters: dict = field(default_factory=dict)
    reference: str = ""

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise InvalidParameterError(f"unknown quantity {self.quantity!r}")
        if self.target.get("kind", "zero") not in TARGET_KINDS:
            raise InvalidParameterError(f"unknown target kind {self.target!r}")
        if self.tolerance <= 0.0:
            raise InvalidParameterError("tolerance must be positive")

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        metric = data.pop("metric")
        if isinstance(metric, dict):
            metric = MetricSpec.from_dict(metric)
        plan = data.pop("samples", {})
        if isinstance(plan, dict):
            plan = SamplePlan(**plan)
        if "tolerance" in data:
            data["tolerance"] = float(data["tolerance"])
        target = data.get("target")
        if isinstance(target, dict) and "value" in target:
            data["target"] = {**target, "value": float(target["value"])}
        return cls(metric=metric, samples=plan, **data)

    def to_dict(self):
        out = asdict(self)
        out["metric"] = self.metric.to_dict()
        return out


@dataclass(frozen=True)
class ClaimReport:
    claim_id: str
    passed: bool
    count: int
    stats: dict
    worst_sample: dict
    tolerance: float
    seed: int
    runtime: float
    detail: str = ""

    def to_dict(self):
        return asdict(self)


def load_claims(path_or_stream):
    """Claims from a YAML document: a list of claim records."""
    own = isinstance(path_or_stream, (str, bytes))
    stream = open(path_or_stream) if own else path_or_stream
    try:
        data = yaml.safe_load(stream) or []
    finally:
        if own:
            stream.close()
    return [Claim.from_dict(rec) for rec in data]


# -- quantity evaluators ------------------------------------------------------

def _random_flag_pole(rng, n, y):
    while True:
        u = rng.standard_normal(n)
        u -= (u @ y) / (y @ y) * y
        if np.linalg.norm(u) > 1e-3:
            return u / np.linalg.norm(u)


def _eval_flag_curvature(metric, at, rng, params):
    u = params.get("u")
    u = _random_flag_pole(rng, metric.dimension, at.y) if u is None else np.asarray(u, float)
    return flag_curvature(metric, at, u)


def _eval_s_curvature(metric, at, rng, params):
    return s_curvature(metric, at)


def _eval_s_ratio(metric, at, rng, params):
    n = metric.dimension
    return s_curvature(metric, at) / ((n + 1) * float(metric.evaluate(at.x, at.y)))


def _eval_mean_cartan(metric, at, rng, params):
    tv = mean_cartan(metric, at)
    gt = fundamental_tensor(metric, at)
    return tv.norm(gt.g_inverse)


def _eval_mean_landsberg(metric, at, rng, params):
    lv = mean_landsberg(metric, at)
    gt = fundamental_tensor(metric, at)
    return lv.norm(gt.g_inverse)


def _eval_cartan_orthogonality(metric, at, rng, params):
    """|I_i y^i| scaled by ||I||_g F; zero by homogeneity."""
    tv = mean_cartan(metric, at)
    gt = fundamental_tensor(metric, at)
    scale = tv.norm(gt.g_inverse) * float(metric.evaluate(at.x, at.y))
    return abs(tv.covariant @ at.y) / max(scale, 1e-30)


def _eval_sskk1(metric, at, rng, params):
    """Max torsion-equation residual along a short geodesic, relative to
    the largest torsion norm on the trace."""
    t_span = tuple(params.get("t_span", (0.0, 1.0)))
    nodes = int(params.get("nodes", 33))
    trace = flow.integrate_geodesic(metric, at.x, at.y, t_span,
                                    tol=params.get("ode_tol", 1e-10), nodes=nodes)
    tt = flow.torsion_trace(metric, trace, check_tol=None)
    scale = max(float(np.max(tt.phi_of_t)), 1e-30)
    return float(np.max(tt.residual_of_t)) / scale


def _factor_data(metric, at):
    """Factor metrics, split sample, factor fundamental tensors, and the
    profile partials at (s, t) for a product metric."""
    a1, a2 = metric.extras["factors"]
    profile = metric.extras["profile"]
    n1 = a1.dimension
    x1, y1 = at.x[:n1], at.y[:n1]
    x2, y2 = at.x[n1:], at.y[n1:]
    g1 = fundamental_tensor(a1, TangentSample(x1, y1)).g
    g2 = fundamental_tensor(a2, TangentSample(x2, y2)).g
    s = float(y1 @ g1 @ y1)
    t = float(y2 @ g2 @ y2)
    return a1, a2, (x1, y1, g1), (x2, y2, g2), s, t, profile


def _eval_det_identity(metric, at, rng, params):
    """Relative error of det g against the product factorization."""
    a1, a2, (x1, y1, g1), (x2, y2, g2), s, t, profile = _factor_data(metric, at)
    p = profile.partials(s, t)
    n1, n2 = a1.dimension, a2.dimension
    h = (p["f_s"] ** (n1 - 1) * p["f_t"] ** (n2 - 1)
         * (p["f_s"] * p["f_t"] - 2.0 * p["f"] * p["f_st"]))
    predicted = h * np.linalg.det(g1) * np.linalg.det(g2)
    actual = np.linalg.det(fundamental_tensor(metric, at).g)
    return abs(actual - predicted) / abs(actual)


def _eval_spray_split(metric, at, rng, params):
    """Relative error of the product spray against the factor sprays."""
    a1, a2, (x1, y1, g1), (x2, y2, g2), s, t, profile = _factor_data(metric, at)
    n1 = a1.dimension
    G = spray(metric, at).G
    G1 = spray(a1, TangentSample(x1, y1)).G
    G2 = spray(a2, TangentSample(x2, y2)).G
    predicted = np.concatenate([G1, G2])
    scale = max(float(np.max(np.abs(predicted))), 1.0)
    return float(np.max(np.abs(G - predicted))) / scale


def _eval_riemann_annihilates_torsion(metric, at, rng, params):
    """max(||R(I)||, |g(R(I), I)|) scaled by ||R|| ||I||; zero for products
    whose factor curvatures annihilate the factor torsion components."""
    rop = riemann(metric, at)
    tv = mean_cartan(metric, at)
    gt = fundamental_tensor(metric, at)
    ri = rop.R @ tv.contravariant
    scale = max(np.linalg.norm(rop.R) * max(tv.norm(gt.g_inverse), 1e-30), 1e-30)
    ri_norm = np.sqrt(max(ri @ gt.g @ ri, 0.0))
    pairing = abs(ri @ gt.g @ tv.contravariant)
    return max(ri_norm, pairing) / scale


def _eval_funk_pde(metric, at, rng, params):
    """max_k |F_{x^k} - F F_{y^k}| for Funk-type metrics."""
    n = metric.dimension
    dirs = list(np.eye(2 * n))
    jets = seed(np.concatenate([at.x, at.y]), dirs, 1)
    theta = metric.evaluate(jets[:n], jets[n:])
    th = extract(theta, (0,) * 2 * n)
    worst = 0.0
    for k in range(n):
        ex = tuple(1 if i == k else 0 for i in range(2 * n))
        ey = tuple(1 if i == n + k else 0 for i in range(2 * n))
        worst = max(worst, abs(extract(theta, ex) - th * extract(theta, ey)))
    return worst


def _eval_berwald_quadratic(metric, at, rng, params):
    """Deviation of G from y-quadratic: finite difference, in a random
    direction, of the jet-exact y-Hessian of the spray."""
    h = params.get("step", 1e-4)
    n = metric.dimension
    d = rng.standard_normal(n)
    d /= np.linalg.norm(d)

    def hessian(yv):
        gvec, _, _ = _spray_jets(metric, at.x, yv, 2)
        out = np.empty((n, n, n))
        for i, gj in enumerate(gvec):
            for j in range(n):
                dj = deriv(gj, n + j)
                for k in range(n):
                    out[i, j, k] = float(value(deriv(dj, n + k)))
        return out

    diff = (hessian(at.y + h * d) - hessian(at.y - h * d)) / (2.0 * h)
    return float(np.max(np.abs(diff)))


def _eval_phi_convexity(metric, at, rng, params):
    """Largest violation of discrete phi'' >= 0 along a geodesic."""
    t_span = tuple(params.get("t_span", (0.0, 1.5)))
    nodes = int(params.get("nodes", 33))
    trace = flow.integrate_geodesic(metric, at.x, at.y, t_span,
                                    tol=params.get("ode_tol", 1e-10), nodes=nodes)
    tt = flow.torsion_trace(metric, trace, check_tol=None)
    seconds = flow.phi_second_differences(tt, floor=params.get("floor", 1e-6))
    if seconds.size == 0:
        return 0.0
    return max(0.0, -float(np.min(seconds)))


def _eval_phi_constancy(metric, at, rng, params):
    """Relative spread of phi along a geodesic (zero when phi is constant)."""
    t_span = tuple(params.get("t_span", (0.0, 1.5)))
    nodes = int(params.get("nodes", 33))
    trace = flow.integrate_geodesic(metric, at.x, at.y, t_span,
                                    tol=params.get("ode_tol", 1e-10), nodes=nodes)
    tt = flow.torsion_trace(metric, trace, check_tol=None)
    phi = tt.phi_of_t
    return float(phi.max() - phi.min()) / max(float(phi.max()), 1e-30)


def _eval_cartan_bound(metric, at, rng, params):
    """||I||_g minus the Randers bound (n+1)/sqrt(2) sqrt(1 - sqrt(1 - b^2))."""
    beta_norm = metric.extras.get("beta_norm")
    if beta_norm is None:
        raise InvalidParameterError(
            f"metric {metric.name} does not expose a drift-form norm")
    b = float(beta_norm(at.x))
    bound = (metric.dimension + 1) / np.sqrt(2.0) * np.sqrt(1.0 - np.sqrt(1.0 - b * b))
    # ||I_y|| is (-1)-homogeneous in y; the bound applies at F-unit vectors
    return float(metric.evaluate(at.x, at.y)) * _eval_mean_cartan(metric, at, rng, params) - bound


def _eval_closed_one_form(metric, at, rng, params):
    """Worst residual of the almost-constant S-curvature test at a point."""
    c = params["c"]
    rep = closed_one_form_check(metric, c, SamplePlan(count=1, seed=int(rng.integers(2 ** 31))),
                                base_points=[at.x])
    return rep.stats["max"]


_EVALUATORS = {
    "flag_curvature": _eval_flag_curvature,
    "s_curvature": _eval_s_curvature,
    "s_curvature_ratio": _eval_s_ratio,
    "mean_cartan": _eval_mean_cartan,
    "mean_landsberg": _eval_mean_landsberg,
    "cartan_orthogonality": _eval_cartan_orthogonality,
    "sskk1_residual": _eval_sskk1,
    "det_identity": _eval_det_identity,
    "spray_split": _eval_spray_split,
    "funk_pde": _eval_funk_pde,
    "berwald_quadratic": _eval_berwald_quadratic,
    "phi_convexity": _eval_phi_convexity,
    "phi_constancy": _eval_phi_constancy,
    "closed_one_form": _eval_closed_one_form,
    "cartan_bound": _eval_cartan_bound,
    "riemann_annihilates_torsion": _eval_riemann_annihilates_torsion,
}


# -- targets ------------------------------------------------------------------

def _deviation(observed, target, tolerance_kind):
    kind = target.get("kind", "zero")
    if kind == "zero":
        return abs(observed)
    ref = float(target["value"])
    if kind == "constant":
        dev = abs(observed - ref)
        return dev / max(abs(ref), 1e-30) if tolerance_kind == "relative" else dev
    if kind == "upper_bound":
        return max(0.0, observed - ref)
    raise InvalidParameterError(f"no pointwise deviation for target {kind!r}")


def run_claim(claim):
    """Evaluate one claim; errors are captured into a failed report."""
    start = time.perf_counter()
    seed_used = claim.samples.seed

    def failed(msg):
        return ClaimReport(claim_id=claim.id, passed=False, count=0, stats={},
                           worst_sample={}, tolerance=claim.tolerance,
                           seed=seed_used, runtime=time.perf_counter() - start,
                           detail=msg)

    try:
        metric = build_metric(claim.metric)
    except FinslerError as exc:
        return failed(f"metric construction failed: {exc}")
    rng = np.random.default_rng(seed_used + 1)
    evaluator = _EVALUATORS[claim.quantity]
    values = []
    samples = claim.samples.draw(metric)
    for at in samples:
        try:
            values.append(float(evaluator(metric, at, rng, claim.parameters)))
        except FinslerError as exc:
            return failed(f"evaluation failed at x={at.x}, y={at.y}: {exc}")
    values = np.asarray(values)
    kind = claim.target.get("kind", "zero")
    if kind == "exceeds":
        threshold = float(claim.target["value"])
        passed = bool(values.size) and float(values.max()) > threshold
        worst_idx = int(values.argmax()) if values.size else 0
        worst_dev = threshold - float(values.max()) if values.size else np.inf
    else:
        devs = np.array([_deviation(v, claim.target, claim.tolerance_kind)
                         for v in values])
        passed = bool(np.all(devs <= claim.tolerance)) if values.size else True
        worst_idx = int(devs.argmax()) if values.size else 0
        worst_dev = float(devs.max()) if values.size else 0.0
    stats = {}
    worst = {}
    if values.size:
        stats = {"min": float(values.min()), "max": float(values.max()),
                 "mean": float(values.mean()), "stddev": float(values.std())}
        at = samples[worst_idx]
        worst = {"x": at.x.tolist(), "y": at.y.tolist(),
                 "observed": float(values[worst_idx]), "deviation": worst_dev}
    return ClaimReport(claim_id=claim.id, passed=passed, count=len(values),
                       stats=stats, worst_sample=worst, tolerance=claim.tolerance,
                       seed=seed_used, runtime=time.perf_counter() - start)


def closed_one_form_check(metric, c, samples=None, tol=1e-3, base_points=None,
                          directions=None, fd_step=1e-4):
    """Test S(x, y) = (n+1) c F(x, y) + gamma_x(y) with gamma a closed 1-form.

    gamma is fitted as a linear form in y over >= 2n unit directions; the fit
    residual checks linearity, and antisymmetry of the finite-difference
    x-Jacobian of the fitted coefficients checks closedness.  The reported
    statistic is the worse of the two residuals per base point.
    """
    start = time.perf_counter()
    samples = samples or SamplePlan(count=10)
    n = metric.dimension
    rng = np.random.default_rng(samples.seed + 2)
    if directions is None:
        directions = max(2 * n, 6)
    dirs = rng.standard_normal((directions, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    if base_points is None:
        base_points = [metric.domain.sample_interior(rng, margin=samples.margin)
                       for _ in range(samples.count)]

    def gamma_coeffs(x):
        g = np.array([s_curvature(metric, TangentSample(x, d))
                      - (n + 1) * c * float(metric.evaluate(x, d)) for d in dirs])
        coeff, res, rank, _ = np.linalg.lstsq(dirs, g, rcond=None)
        if rank < n:
            raise InvalidParameterError("direction set is rank-deficient")
        resid = float(np.max(np.abs(dirs @ coeff - g)))
        return coeff, resid, float(np.max(np.abs(g)))

    residuals = []
    worst = {}
    for x in base_points:
        coeff0, lin_resid, g_scale = gamma_coeffs(np.asarray(x, float))
        scale = max(g_scale, 1.0)
        jac = np.empty((n, n))
        for m in range(n):
            e = np.zeros(n)
            e[m] = fd_step
            cp, rp, sp = gamma_coeffs(np.asarray(x, float) + e)
            cm, rm, sm = gamma_coeffs(np.asarray(x, float) - e)
            jac[:, m] = (cp - cm) / (2.0 * fd_step)
            lin_resid = max(lin_resid, rp, rm)
            scale = max(scale, sp, sm)
        closed_resid = float(np.max(np.abs(jac - jac.T)))
        total = max(lin_resid, closed_resid) / scale
        residuals.append(total)
        if not worst or total >= max(residuals):
            worst = {"x": np.asarray(x, float).tolist(), "observed": total,
                     "deviation": total,
                     "linearity": lin_resid / scale, "closedness": closed_resid / scale}
    residuals = np.asarray(residuals)
    passed = bool(np.all(residuals <= tol))
    stats = {"min": float(residuals.min()), "max": float(residuals.max()),
             "mean": float(residuals.mean()), "stddev": float(residuals.std())}
    return ClaimReport(claim_id=f"closed_one_form[{metric.name}]", passed=passed,
                       count=len(residuals), stats=stats, worst_sample=worst,
                       tolerance=tol, seed=samples.seed,
                       runtime=time.perf_counter() - start)


def run_suite(claims, parallelism=1):
    """Run claims (possibly in parallel) and merge reports by claim id."""
    if parallelism > 1 and len(claims) > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            reports = list(pool.map(run_claim, claims))
    else:
        reports = [run_claim(c) for c in claims]
    reports.sort(key=lambda r: r.claim_id)
    return SuiteReport(reports=reports)


@dataclass(frozen=True)
class SuiteReport:
    reports: list

    @property
    def passed(self):
        return all(r.passed for r in self.reports)

    @property
    def exit_status(self):
        return 0 if self.passed else 1

    def failures(self):
        return [r for r in self.reports if not r.passed]

    def to_json(self, include_runtime=True):
        recs = []
        for r in self.reports:
            d = r.to_dict()
            if not include_runtime:
                d.pop("runtime")
            recs.append(d)
        return json.dumps({"passed": self.passed, "claims": recs},
                          indent=2, sort_keys=True)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["claim_id", "passed", "count", "min", "max", "mean",
                         "stddev", "worst_deviation", "tolerance", "seed",
                         "runtime"])
        for r in self.reports:
            writer.writerow([
                r.claim_id, r.passed, r.count,
                r.stats.get("min", ""), r.stats.get("max", ""),
                r.stats.get("mean", ""), r.stats.get("stddev", ""),
                r.worst_sample.get("deviation", ""), r.tolerance, r.seed,
                f"{r.runtime:.3f}",
            ])
        return buf.getvalue()
