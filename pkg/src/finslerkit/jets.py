"""Truncated multivariate Taylor (jet) arithmetic.

A jet represents the Taylor expansion of a scalar function along a set of
seeded directions, truncated at a fixed total order.  Arithmetic on jets
(+, -, *, /, powers, sqrt/exp/log) propagates all mixed partial
derivatives exactly, so every derivative a geometric formula needs comes
out to machine precision instead of finite-difference accuracy.

Coefficients are stored densely, indexed by graded multi-index, so the
index set of order p is a prefix of the index set of order q > p for the
same number of directions.  Truncating a jet is a slice; that keeps mixed-
order products cheap.  Coefficient arrays may carry trailing batch axes,
which lets quadrature rules push whole node sets through one evaluation.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import OutOfOrderError, UnsupportedOrderError

MAX_ORDER = 4
MAX_DIRECTIONS = 8


def _compositions(total, m):
    """All multi-indices of length m with entries summing to `total`."""
    if m == 0:
        if total == 0:
            yield ()
        return
    if m == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for tail in _compositions(total - head, m - 1):
            yield (head,) + tail


@lru_cache(maxsize=None)
def _index_table(ndir, order):
    indices = []
    for total in range(order + 1):
        indices.extend(_compositions(total, ndir))
    position = {alpha: i for i, alpha in enumerate(indices)}
    return tuple(indices), position


@lru_cache(maxsize=None)
def _num_coeffs(ndir, order):
    return math.comb(ndir + order, order)


@lru_cache(maxsize=None)
def _mul_table(ndir, order):
    indices, position = _index_table(ndir, order)
    ia, ib, ic = [], [], []
    for i, a in enumerate(indices):
        da = sum(a)
        for j, b in enumerate(indices):
            if da + sum(b) > order:
                continue
            ia.append(i)
            ib.append(j)
            ic.append(position[tuple(x + y for x, y in zip(a, b))])
    return (np.asarray(ia, dtype=np.intp),
            np.asarray(ib, dtype=np.intp),
            np.asarray(ic, dtype=np.intp))


@lru_cache(maxsize=None)
def _deriv_table(ndir, order, direction):
    """Gather indices/factors mapping an order-p jet to the (p-1)-jet of its
    partial derivative along seeded direction `direction`."""
    low, _ = _index_table(ndir, order - 1)
    _, pos_hi = _index_table(ndir, order)
    src = np.empty(len(low), dtype=np.intp)
    fac = np.empty(len(low), dtype=np.float64)
    for i, beta in enumerate(low):
        lifted = list(beta)
        lifted[direction] += 1
        src[i] = pos_hi[tuple(lifted)]
        fac[i] = beta[direction] + 1
    return src, fac


def _batch_view(coeffs, batch):
    """Broadcast a coefficient array to a common trailing batch shape."""
    n = coeffs.shape[0]
    pad = (1,) * (len(batch) - (coeffs.ndim - 1))
    return np.broadcast_to(coeffs.reshape((n,) + pad + coeffs.shape[1:]),
                           (n,) + batch)


class Jet:
    """Truncated Taylor value over `ndir` seeded directions.

    coeffs[k] is the Taylor coefficient (mixed partial divided by the
    factorials of the multi-index) for the k-th graded multi-index.
    """

    __slots__ = ("coeffs", "ndir", "order")
    __array_ufunc__ = None  # force numpy to defer to reflected operators

    def __init__(self, coeffs, ndir, order):
        self.coeffs = coeffs
        self.ndir = ndir
        self.order = order

    @classmethod
    def constant(cls, value, ndir, order):
        value = np.asarray(value, dtype=np.float64)
        coeffs = np.zeros((_num_coeffs(ndir, order),) + value.shape)
        coeffs[0] = value
        return cls(coeffs, ndir, order)

    @property
    def value(self):
        return self.coeffs[0]

    @property
    def batch_shape(self):
        return self.coeffs.shape[1:]

    def truncated(self, order):
        if order >= self.order:
            return self
        return Jet(self.coeffs[: _num_coeffs(self.ndir, order)], self.ndir, order)

    def copy(self):
        return Jet(self.coeffs.copy(), self.ndir, self.order)

    def _coerce(self, other):
        """Align two jets to a common order; returns (a, b, order)."""
        if other.ndir != self.ndir:
            raise ValueError("jets seeded over different direction sets")
        order = min(self.order, other.order)
        return self.truncated(order), other.truncated(order), order

    # -- ring operations -------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b, order = self._coerce(other)
            batch = np.broadcast_shapes(a.batch_shape, b.batch_shape)
            return Jet(_batch_view(a.coeffs, batch) + _batch_view(b.coeffs, batch),
                       self.ndir, order)
        other = np.asarray(other, dtype=np.float64)
        batch = np.broadcast_shapes(self.batch_shape, other.shape)
        out = _batch_view(self.coeffs, batch).copy()
        out[0] = out[0] + other
        return Jet(out, self.ndir, self.order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.coeffs, self.ndir, self.order)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet) else -np.asarray(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=np.float64)
            batch = np.broadcast_shapes(self.batch_shape, other.shape)
            return Jet(_batch_view(self.coeffs, batch) * other, self.ndir, self.order)
        a, b, order = self._coerce(other)
        ia, ib, ic = _mul_table(self.ndir, order)
        batch = np.broadcast_shapes(a.batch_shape, b.batch_shape)
        ca = _batch_view(a.coeffs, batch)
        cb = _batch_view(b.coeffs, batch)
        prod = ca[ia] * cb[ib]
        n = _num_coeffs(self.ndir, order)
        if not batch:
            out = np.bincount(ic, weights=prod, minlength=n)
        else:
            out = np.zeros((n,) + batch)
            np.add.at(out, ic, prod)
        return Jet(out, self.ndir, order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other._reciprocal()
        other = np.asarray(other, dtype=np.float64)
        batch = np.broadcast_shapes(self.batch_shape, other.shape)
        return Jet(_batch_view(self.coeffs, batch) / other, self.ndir, self.order)

    def __rtruediv__(self, other):
        return self._reciprocal() * other

    def __pow__(self, exponent):
        if isinstance(exponent, (int, np.integer)):
            if exponent < 0:
                return (self ** (-exponent))._reciprocal()
            result = Jet.constant(np.ones(self.batch_shape), self.ndir, self.order)
            base = self
            k = int(exponent)
            while k:
                if k & 1:
                    result = result * base
                k >>= 1
                if k:
                    base = base * base
            return result
        return jpow(self, exponent)

    # -- analytic composition --------------------------------------------

    def _compose(self, series):
        """Evaluate sum_k series[k] * (self - value)^k by Horner."""
        h = self.copy()
        h.coeffs[0] = np.zeros(self.batch_shape)
        result = Jet.constant(series[-1], self.ndir, self.order)
        for k in range(len(series) - 2, -1, -1):
            result = result * h + series[k]
        return result

    def _reciprocal(self):
        v = self.value
        series = [1.0 / v]
        for _ in range(self.order):
            series.append(-series[-1] / v)
        return self._compose(series)

    def __repr__(self):
        return (f"Jet(order={self.order}, ndir={self.ndir}, "
                f"value={self.value!r})")


# -- seeding and extraction ----------------------------------------------

def seed(point, directions, order):
    """Seed jet coordinates at `point` along `directions`.

    Returns one jet per coordinate of `point`.  With no directions (or
    order zero) returns plain floats, so downstream formulas reduce to
    ordinary arithmetic.
    """
    point = np.asarray(point, dtype=np.float64)
    if order == 0 or len(directions) == 0:
        return [float(p) for p in point]
    if not isinstance(order, (int, np.integer)) or not 1 <= order <= MAX_ORDER:
        raise UnsupportedOrderError(f"jet order {order!r} not in 1..{MAX_ORDER}")
    m = len(directions)
    if m > MAX_DIRECTIONS:
        raise UnsupportedOrderError(
            f"{m} directions exceed the supported maximum {MAX_DIRECTIONS}")
    _, position = _index_table(m, order)
    n = _num_coeffs(m, order)
    jets = []
    for i in range(point.size):
        coeffs = np.zeros(n)
        coeffs[0] = point[i]
        for d, vec in enumerate(directions):
            unit = [0] * m
            unit[d] = 1
            coeffs[position[tuple(unit)]] = vec[i]
        jets.append(Jet(coeffs, m, order))
    return jets


def extract(jet, multi_index):
    """Mixed partial derivative of the evaluated function with respect to
    the seeded directions (factorial normalization applied)."""
    multi_index = tuple(int(k) for k in multi_index)
    total = sum(multi_index)
    if not isinstance(jet, Jet):
        if total == 0:
            return float(jet)
        raise OutOfOrderError("plain value carries no derivative information")
    if total > jet.order:
        raise OutOfOrderError(
            f"multi-index {multi_index} exceeds jet order {jet.order}")
    if len(multi_index) != jet.ndir:
        raise ValueError(
            f"multi-index length {len(multi_index)} != {jet.ndir} directions")
    _, position = _index_table(jet.ndir, jet.order)
    factor = 1.0
    for k in multi_index:
        factor *= math.factorial(k)
    return jet.coeffs[position[multi_index]] * factor


def deriv(jet, direction):
    """Jet of the partial derivative along seeded direction `direction`.

    Valid whenever the seeded directions are coordinate axes (how all of
    the geometry layer seeds them); drops the truncation order by one.
    """
    if jet.order < 1:
        raise OutOfOrderError("cannot differentiate an order-0 jet")
    src, fac = _deriv_table(jet.ndir, jet.order, direction)
    coeffs = jet.coeffs[src] * fac.reshape((-1,) + (1,) * len(jet.batch_shape))
    return Jet(coeffs, jet.ndir, jet.order - 1)


def value(x):
    """Scalar (value) part of a jet, or the input itself for plain numbers."""
    return x.value if isinstance(x, Jet) else x


# -- lifted smooth primitives ----------------------------------------------

def jsqrt(x):
    if not isinstance(x, Jet):
        return np.sqrt(x)
    v = x.value
    series = [np.sqrt(v)]
    for k in range(1, x.order + 1):
        series.append(series[-1] * (0.5 - (k - 1)) / (k * v))
    return x._compose(series)


def jexp(x):
    if not isinstance(x, Jet):
        return np.exp(x)
    series = [np.exp(x.value)]
    for k in range(1, x.order + 1):
        series.append(series[-1] / k)
    return x._compose(series)


def jlog(x):
    if not isinstance(x, Jet):
        return np.log(x)
    v = x.value
    series = [np.log(v)]
    for k in range(1, x.order + 1):
        if k == 1:
            series.append(1.0 / v)
        else:
            series.append(-series[-1] * (k - 1) / (k * v))
    return x._compose(series)


def jpow(x, exponent):
    if not isinstance(x, Jet):
        return np.power(x, exponent)
    if isinstance(exponent, (int, np.integer)):
        return x ** int(exponent)
    v = x.value
    series = [np.power(v, exponent)]
    for k in range(1, x.order + 1):
        series.append(series[-1] * (exponent - (k - 1)) / (k * v))
    return x._compose(series)
