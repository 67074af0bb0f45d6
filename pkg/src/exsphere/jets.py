"""Forward-mode truncated Taylor arithmetic (jets) up to third order.

A :class:`Jet` carries the value of a (possibly array-valued) quantity at a
point together with its partial derivatives with respect to ``nvars`` chart
variables.  Coefficient ``m`` has shape ``value.shape + (nvars,) * m`` and
stores the plain partial derivatives (not Taylor coefficients), so
``d2[..., i, j] == ∂_i ∂_j f``.

Every elementary function in this module accepts jets as well as floats and
numpy arrays, which lets one evaluator serve both differentiation and the
finite-difference oracle.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .summary import ResidualSummary

MAX_ORDER = 3
_DERIV_LETTERS = "UVW"


class JetDomainError(ValueError):
    """Raised when an operation leaves the domain of the underlying function."""

    def __init__(self, message: str, point=None):
        self.point = None if point is None else np.asarray(point, dtype=float)
        if point is not None:
            message = f"{message} (at point {np.array2string(self.point, precision=6)})"
        super().__init__(message)


def _shuffles(p: int, q: int):
    """Positions of the first factor's derivative slots for every (p, q) shuffle."""
    return list(itertools.combinations(range(p + q), p))


def _symmetrize(prod: Callable[[int, int, str, str, str], np.ndarray], p: int, q: int) -> np.ndarray:
    """Sum ``prod`` over all distinct assignments of p + q derivative slots.

    ``prod(p, q, left, right, out)`` must return the product of a degree-p and a
    degree-q coefficient with derivative letters ``left`` / ``right`` laid out
    as ``out``.  It is evaluated once; the other shuffles are axis permutations.
    """
    m = p + q
    letters = _DERIV_LETTERS[:m]
    base = prod(p, q, letters[:p], letters[p:], letters)
    shuffles = _shuffles(p, q)
    if len(shuffles) == 1:
        return base
    lead = base.ndim - m
    total = None
    for pos in shuffles:
        rest = [i for i in range(m) if i not in pos]
        # derivative slot pos[j] receives the first factor's j-th axis
        src = list(pos) + rest
        axes = list(range(lead)) + [lead + src.index(i) for i in range(m)]
        term = base.transpose(axes)
        total = term if total is None else total + term
    return total


class Jet:
    """Value plus partial derivatives up to ``order`` with respect to ``nvars`` variables."""

    __slots__ = ("coeffs", "nvars", "point")
    __array_ufunc__ = None

    def __init__(self, coeffs: Sequence[np.ndarray], nvars: int, point=None):
        if not 1 <= len(coeffs) <= MAX_ORDER + 1:
            raise ValueError(f"jet needs 1..{MAX_ORDER + 1} coefficient arrays, got {len(coeffs)}")
        self.coeffs = tuple(np.asarray(c, dtype=float) for c in coeffs)
        self.nvars = int(nvars)
        self.point = point
        shape = self.coeffs[0].shape
        for m, c in enumerate(self.coeffs):
            if c.shape != shape + (self.nvars,) * m:
                raise ValueError(f"coefficient {m} has shape {c.shape}, expected {shape + (self.nvars,) * m}")

    # -- accessors -----------------------------------------------------------------
    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[0]

    @property
    def d1(self):
        return self.coeffs[1] if self.order >= 1 else None

    @property
    def d2(self):
        return self.coeffs[2] if self.order >= 2 else None

    @property
    def d3(self):
        return self.coeffs[3] if self.order >= 3 else None

    @property
    def shape(self) -> tuple:
        return self.coeffs[0].shape

    @property
    def ndim(self) -> int:
        return self.coeffs[0].ndim

    def __len__(self):
        return self.shape[0]

    def __repr__(self):
        return f"Jet(order={self.order}, nvars={self.nvars}, shape={self.shape}, value={self.value!r})"

    # -- structural helpers --------------------------------------------------------
    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        return Jet(self.coeffs[: order + 1], self.nvars, self.point)

    def apply(self, fn: Callable[[np.ndarray], np.ndarray]) -> "Jet":
        """Apply a linear map acting on the leading (value) axes of every coefficient."""
        return Jet([fn(c) for c in self.coeffs], self.nvars, self.point)

    def diff(self) -> "Jet":
        """Jet of the gradient: a new trailing value axis, one order lower."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        return Jet(self.coeffs[1:], self.nvars, self.point)

    def constant_part(self) -> "Jet":
        return Jet([self.coeffs[0]] + [np.zeros_like(c) for c in self.coeffs[1:]], self.nvars, self.point)

    def nilpotent_part(self) -> "Jet":
        return Jet([np.zeros_like(self.coeffs[0])] + list(self.coeffs[1:]), self.nvars, self.point)

    def _axis(self, axis: int) -> int:
        return axis + self.ndim if axis < 0 else axis

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        if any(i is Ellipsis for i in idx):
            k = idx.index(Ellipsis)
            used = sum(1 for i in idx if i is not None and i is not Ellipsis)
            idx = idx[:k] + (slice(None),) * (self.ndim - used) + idx[k + 1:]
        return self.apply(lambda c: c[idx])

    def sum(self, axis=None) -> "Jet":
        if axis is None:
            axes = tuple(range(self.ndim))
        elif isinstance(axis, int):
            axes = (self._axis(axis),)
        else:
            axes = tuple(self._axis(a) for a in axis)
        return self.apply(lambda c: c.sum(axis=axes))

    def transpose(self, *axes) -> "Jet":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        axes = tuple(self._axis(a) for a in axes)
        return Jet([c.transpose(axes + tuple(range(self.ndim, c.ndim))) for c in self.coeffs], self.nvars, self.point)

    @property
    def T(self) -> "Jet":
        return self.transpose()

    def swapaxes(self, a: int, b: int) -> "Jet":
        a, b = self._axis(a), self._axis(b)
        return self.apply(lambda c: np.swapaxes(c, a, b))

    def moveaxis(self, src: int, dst: int) -> "Jet":
        src, dst = self._axis(src), self._axis(dst)
        return self.apply(lambda c: np.moveaxis(c, src, dst))

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        n = self.nvars
        return Jet([c.reshape(tuple(shape) + (n,) * m) for m, c in enumerate(self.coeffs)], n, self.point)

    # -- arithmetic ----------------------------------------------------------------
    def __neg__(self):
        return self.apply(np.negative)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = _align(self, other)
            return Jet([x + y for x, y in zip(a.coeffs, b.coeffs)], a.nvars, _pt(a, b))
        other = np.asarray(other, dtype=float)
        return Jet([self.coeffs[0] + other] + [np.broadcast_to(c, np.broadcast_shapes(self.shape, other.shape) + c.shape[self.ndim:]) for c in self.coeffs[1:]], self.nvars, self.point)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            return mul(self, other)
        other = np.asarray(other, dtype=float)
        return Jet([c * other.reshape(other.shape + (1,) * m) for m, c in enumerate(self.coeffs)], self.nvars, self.point)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return mul(self, reciprocal(other))
        other = np.asarray(other, dtype=float)
        if np.any(other == 0):
            raise JetDomainError("division by zero", self.point)
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            return exp(log(self) * p)
        return power(self, p)

    def __rpow__(self, base):
        return exp(self * math.log(base))

    def __matmul__(self, other):
        return einsum("...ij,...jk->...ik" if _ndim(other) >= 2 else "...ij,...j->...i", self, other)

    def __rmatmul__(self, other):
        return einsum("...ij,...jk->...ik" if _ndim(self) >= 2 else "...j,...jk->...k", other, self)


def _ndim(x) -> int:
    return x.ndim if isinstance(x, Jet) else np.ndim(x)


def _align(a: Jet, b: Jet) -> tuple[Jet, Jet]:
    if a.nvars != b.nvars:
        raise ValueError(f"jets over {a.nvars} and {b.nvars} variables cannot be combined")
    order = min(a.order, b.order)
    return a.truncate(order), b.truncate(order)


def is_jet(x) -> bool:
    return isinstance(x, Jet)


def as_jet(x, nvars: int, order: int, point=None) -> Jet:
    """Promote a constant to a jet with vanishing derivatives."""
    if isinstance(x, Jet):
        return x.truncate(order)
    x = np.asarray(x, dtype=float)
    return Jet([x] + [np.zeros(x.shape + (nvars,) * m) for m in range(1, order + 1)], nvars, point)


def lift_coordinate(i: int, x0, order: int) -> Jet:
    """Jet of the ``i``-th coordinate function at ``x0``."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    n = x0.shape[0]
    if order not in (1, 2, 3):
        raise ValueError(f"jet order must be 1, 2 or 3, got {order}")
    if not 0 <= i < n:
        raise IndexError(f"coordinate index {i} out of range for a {n}-dimensional point")
    d1 = np.zeros(n)
    d1[i] = 1.0
    coeffs = [np.array(x0[i]), d1] + [np.zeros((n,) * m) for m in range(2, order + 1)]
    return Jet(coeffs, n, x0)


def variables(x0, order: int) -> Jet:
    """All coordinate functions at ``x0`` as one vector-valued jet."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    n = x0.shape[0]
    if order not in (0, 1, 2, 3):
        raise ValueError(f"jet order must be at most 3, got {order}")
    coeffs = [x0.copy(), np.eye(n)] + [np.zeros((n,) + (n,) * m) for m in range(2, order + 1)]
    return Jet(coeffs[: order + 1], n, x0)


# -- bilinear products ------------------------------------------------------------------
def _bilinear(a: Jet, b: Jet, prod) -> Jet:
    a, b = _align(a, b)
    live_a = [bool(np.any(c)) for c in a.coeffs]
    live_b = [bool(np.any(c)) for c in b.coeffs]
    coeffs = []
    for m in range(a.order + 1):
        total = None
        for p in range(m + 1):
            if not (live_a[p] and live_b[m - p]):
                continue
            term = _symmetrize(lambda pp, qq, l, r, o: prod(a.coeffs[pp], b.coeffs[qq], l, r, o), p, m - p)
            total = term if total is None else total + term
        if total is None:
            # shape of the product from a zero-order evaluation
            shape = prod(a.coeffs[0], b.coeffs[0], "", "", "").shape
            total = np.zeros(shape + (a.nvars,) * m)
        coeffs.append(total)
    return Jet(coeffs, a.nvars, _pt(a, b))


def _elementwise_prod(x, y, left, right, out):
    p, q = len(left), len(right)
    # place derivative axes per ``out`` layout via einsum on broadcast operands
    xs = x.reshape(x.shape + (1,) * q)
    ys = y.reshape(y.shape[: y.ndim - q] + (1,) * p + y.shape[y.ndim - q:])
    t = xs * ys
    src = left + right
    if src == out or len(out) < 2:
        return t
    return np.einsum(f"...{src}->...{out}", t)


def mul(a, b):
    """Product of two jets (elementwise, numpy broadcasting on value axes)."""
    if not isinstance(a, Jet):
        return b * a
    if not isinstance(b, Jet):
        return a * b
    return _bilinear(a, b, _elementwise_prod)


_BLAS_SIZE = 1_000_000


def _einsum2(spec: str, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # large operands go through tensordot/BLAS; path search costs more than it saves on small ones
    return np.einsum(spec, x, y, optimize=x.size * y.size > _BLAS_SIZE)


def einsum(spec: str, a, b):
    """Bilinear ``np.einsum`` extended to jets; either operand may be a constant."""
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        return np.einsum(spec, a, b)
    lhs, out = spec.split("->")
    left, right = lhs.split(",")
    used = set(spec)
    if used & set(_DERIV_LETTERS):
        raise ValueError(f"einsum spec may not use reserved letters {_DERIV_LETTERS}")
    if not isinstance(b, Jet):
        b = np.asarray(b, dtype=float)
        return Jet([_einsum2(f"{left}{_DERIV_LETTERS[:m]},{right}->{out}{_DERIV_LETTERS[:m]}", c, b)
                    for m, c in enumerate(a.coeffs)], a.nvars, a.point)
    if not isinstance(a, Jet):
        a = np.asarray(a, dtype=float)
        return Jet([_einsum2(f"{left},{right}{_DERIV_LETTERS[:m]}->{out}{_DERIV_LETTERS[:m]}", a, c)
                    for m, c in enumerate(b.coeffs)], b.nvars, b.point)

    def prod(x, y, l, r, o):
        return _einsum2(f"{left}{l},{right}{r}->{out}{o}", x, y)

    return _bilinear(a, b, prod)


def permute(x, spec: str):
    """Reorder value axes with an einsum-style spec such as ``"abc->cab"``."""
    src, dst = spec.split("->")
    if not isinstance(x, Jet):
        return np.einsum(spec, x)
    return x.apply(lambda c: np.einsum(f"{src}...->{dst}...", c))


def trace(x, axis1: int = -2, axis2: int = -1):
    if not isinstance(x, Jet):
        return np.trace(x, axis1=axis1, axis2=axis2)
    a1, a2 = x._axis(axis1), x._axis(axis2)
    return x.apply(lambda c: np.trace(c, axis1=a1, axis2=a2))


def outer(a, b):
    """Outer product on the value axes."""
    la = "abcdefgh"[: _ndim(a)]
    lb = "ijklmnop"[: _ndim(b)]
    return einsum(f"{la},{lb}->{la}{lb}", a, b)


def contract(const, jet: Jet, naxes: int) -> Jet:
    """``tensordot(const, jet, naxes)`` with a constant left factor."""
    if not isinstance(jet, Jet):
        return np.tensordot(const, jet, naxes)
    return jet.apply(lambda c: np.tensordot(const, c, naxes))


# -- univariate functions ----------------------------------------------------------------
def _compose_univariate(a: Jet, derivs: Sequence[np.ndarray]) -> Jet:
    """Chain rule for an elementwise function with derivatives ``derivs[m]`` at ``a.value``."""
    coeffs = [np.asarray(derivs[0], dtype=float)]
    c = a.coeffs

    def ew(x, y, left, right, out):
        return _elementwise_prod(x, y, left, right, out)

    def scale(f, arr):
        return f.reshape(f.shape + (1,) * (arr.ndim - f.ndim)) * arr

    if a.order >= 1:
        coeffs.append(scale(derivs[1], c[1]))
    if a.order >= 2:
        coeffs.append(scale(derivs[2], ew(c[1], c[1], "U", "V", "UV")) + scale(derivs[1], c[2]))
    if a.order >= 3:
        a11 = ew(c[1], c[1], "U", "V", "UV")
        a111 = ew(a11, c[1], "UV", "W", "UVW")
        a21 = _symmetrize(lambda p, q, l, r, o: ew(c[p], c[q], l, r, o), 2, 1)
        coeffs.append(scale(derivs[3], a111) + scale(derivs[2], a21) + scale(derivs[1], c[3]))
    return Jet(coeffs, a.nvars, a.point)


def _unary(fn_np, derivs_fn):
    def f(x):
        if isinstance(x, Jet):
            return _compose_univariate(x, derivs_fn(x.value, x.order, x.point))
        return fn_np(x)

    return f


def _exp_derivs(v, order, point):
    e = np.exp(v)
    return [e] * (order + 1)


def _log_derivs(v, order, point):
    if np.any(v <= 0):
        raise JetDomainError("log of non-positive value", point)
    return [np.log(v), 1 / v, -1 / v**2, 2 / v**3][: order + 1]


def _sin_derivs(v, order, point):
    s, c = np.sin(v), np.cos(v)
    return [s, c, -s, -c][: order + 1]


def _cos_derivs(v, order, point):
    s, c = np.sin(v), np.cos(v)
    return [c, -s, -c, s][: order + 1]


def _tan_derivs(v, order, point):
    t = np.tan(v)
    s2 = 1 + t * t
    return [t, s2, 2 * t * s2, s2 * (2 * s2 + 4 * t * t)][: order + 1]


def _atan_derivs(v, order, point):
    w = 1 / (1 + v * v)
    return [np.arctan(v), w, -2 * v * w**2, (6 * v * v - 2) * w**3][: order + 1]


def _recip_derivs(v, order, point):
    if np.any(v == 0):
        raise JetDomainError("division by zero jet value", point)
    return [1 / v, -1 / v**2, 2 / v**3, -6 / v**4][: order + 1]


def _sqrt_derivs(v, order, point):
    if np.any(v <= 0):
        raise JetDomainError("sqrt of non-positive value", point)
    r = np.sqrt(v)
    return [r, 0.5 / r, -0.25 / (r * v), 0.375 / (r * v * v)][: order + 1]


def _check_recip(x):
    x = np.asarray(x, dtype=float)
    if np.any(x == 0):
        raise JetDomainError("division by zero")
    return 1 / x


def _check_sqrt(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise JetDomainError("sqrt of negative value")
    return np.sqrt(x)


def _check_log(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise JetDomainError("log of non-positive value")
    return np.log(x)


exp = _unary(np.exp, _exp_derivs)
log = _unary(_check_log, _log_derivs)
sin = _unary(np.sin, _sin_derivs)
cos = _unary(np.cos, _cos_derivs)
tan = _unary(np.tan, _tan_derivs)
atan = _unary(np.arctan, _atan_derivs)
reciprocal = _unary(_check_recip, _recip_derivs)
sqrt = _unary(_check_sqrt, _sqrt_derivs)


def power(x, p: float):
    """``x ** p`` for a real exponent; integer exponents allow any sign of ``x``."""
    if not isinstance(x, Jet):
        return np.asarray(x, dtype=float) ** p
    p = float(p)
    v = x.value
    if p.is_integer() and p >= 0:
        # falling factorial p (p-1) ... times v**(p-m), exact for nonnegative integers
        derivs = []
        for m in range(x.order + 1):
            coef = math.prod(p - j for j in range(m))
            derivs.append(coef * v ** (p - m) if p - m >= 0 else np.zeros_like(v))
        return _compose_univariate(x, derivs)
    if np.any(v <= 0) and not p.is_integer():
        raise JetDomainError(f"non-integer power {p} of non-positive value", x.point)
    if np.any(v == 0):
        raise JetDomainError(f"negative power {p} of zero value", x.point)
    derivs = [math.prod(p - j for j in range(m)) * v ** (p - m) for m in range(x.order + 1)]
    return _compose_univariate(x, derivs)


def atan2(y, x):
    """Angle of (x, y), differentiable away from the origin and the negative x-axis branch cut."""
    if not isinstance(x, Jet) and not isinstance(y, Jet):
        return np.arctan2(y, x)
    theta0 = np.arctan2(_val(y), _val(x))
    # atan(y/x) has the right derivatives wherever x != 0; use the rotated form otherwise
    xv = _val(x)
    if np.all(np.abs(xv) >= np.abs(_val(y))):
        t = atan(y / x)
    else:
        t = -atan(x / y)
    return t + (theta0 - _val(t))


def _val(x):
    return x.value if isinstance(x, Jet) else np.asarray(x, dtype=float)


def value(x) -> np.ndarray:
    """Plain value of a jet or constant."""
    return _val(x)


# -- constructors -------------------------------------------------------------------------
def _common(items):
    jets = [x for x in items if isinstance(x, Jet)]
    if not jets:
        return None, None, None
    nvars = jets[0].nvars
    if any(j.nvars != nvars for j in jets):
        raise ValueError("cannot combine jets over different variable counts")
    order = min(j.order for j in jets)
    point = next((j.point for j in jets if j.point is not None), None)
    return nvars, order, point


def stack(items, axis: int = 0):
    """``np.stack`` for a list mixing jets and constants."""
    items = list(items)
    nvars, order, point = _common(items)
    if nvars is None:
        return np.stack([np.asarray(x, dtype=float) for x in items], axis=axis)
    jets = [as_jet(x, nvars, order, point) for x in items]
    nd = jets[0].ndim
    ax = axis + nd + 1 if axis < 0 else axis
    # broadcast value shapes first so constants of shape () can be stacked with arrays
    shape = np.broadcast_shapes(*(j.shape for j in jets))
    coeffs = []
    for m in range(order + 1):
        arrs = [np.broadcast_to(j.coeffs[m], shape + (nvars,) * m) for j in jets]
        coeffs.append(np.stack(arrs, axis=ax))
    return Jet(coeffs, nvars, point)


def concatenate(items, axis: int = 0):
    items = list(items)
    nvars, order, point = _common(items)
    if nvars is None:
        return np.concatenate([np.atleast_1d(np.asarray(x, dtype=float)) for x in items], axis=axis)
    jets = [as_jet(x, nvars, order, point) for x in items]
    jets = [j.reshape(1) if j.ndim == 0 else j for j in jets]
    ax = axis + jets[0].ndim if axis < 0 else axis
    return Jet([np.concatenate([j.coeffs[m] for j in jets], axis=ax) for m in range(order + 1)], nvars, point)


def block_diag(*blocks):
    """Block-diagonal matrix from square blocks (jets or arrays)."""
    sizes = [(_val(b).shape[0] if _ndim(b) == 2 else 1) for b in blocks]
    n = sum(sizes)
    rows = []
    start = 0
    for b, s in zip(blocks, sizes):
        b2 = b if _ndim(b) == 2 else stack([stack([b])])
        parts = []
        if start:
            parts.append(np.zeros((s, start)))
        parts.append(b2)
        if n - start - s:
            parts.append(np.zeros((s, n - start - s)))
        rows.append(concatenate(parts, axis=1) if len(parts) > 1 else b2)
        start += s
    return concatenate(rows, axis=0)


def eye_like(n: int):
    return np.eye(n)


# -- matrix functions ----------------------------------------------------------------------
def inv(a):
    """Matrix inverse over the last two value axes (nilpotent Neumann series)."""
    if not isinstance(a, Jet):
        return np.linalg.inv(a)
    a0inv = np.linalg.inv(a.value)
    e = a.nilpotent_part()
    c = -einsum("...ij,...jk->...ik", a0inv, e)
    m = a.shape[-1]
    total = as_jet(np.broadcast_to(np.eye(m), a.shape), a.nvars, a.order, a.point)
    power_ = total
    for _ in range(a.order):
        power_ = einsum("...ij,...jk->...ik", power_, c)
        total = total + power_
    return einsum("...ij,...jk->...ik", total, a0inv)


def logdet(a):
    """``log det`` of a matrix with positive determinant."""
    if not isinstance(a, Jet):
        sign, ld = np.linalg.slogdet(a)
        if np.any(sign <= 0):
            raise JetDomainError("logdet of matrix with non-positive determinant")
        return ld
    sign, ld0 = np.linalg.slogdet(a.value)
    if np.any(sign <= 0):
        raise JetDomainError("logdet of matrix with non-positive determinant", a.point)
    d = einsum("...ij,...jk->...ik", np.linalg.inv(a.value), a.nilpotent_part())
    total = as_jet(ld0, a.nvars, a.order, a.point)
    power_ = None
    for k in range(1, a.order + 1):
        power_ = d if power_ is None else einsum("...ij,...jk->...ik", power_, d)
        tr = power_.apply(lambda c: np.trace(c, axis1=power_.ndim - 2, axis2=power_.ndim - 1))
        total = total + tr * ((-1) ** (k + 1) / k)
    return total


def compose(f: Jet, y: Jet) -> Jet:
    """Evaluate the Taylor expansion ``f`` (in m variables) along the vector jet ``y``.

    ``f`` is a jet at ``y.value``; the result is a jet in ``y``'s variables whose
    order is ``min(f.order, y.order)``.
    """
    if not isinstance(y, Jet):
        return f.value
    if y.ndim != 1 or y.shape[0] != f.nvars:
        raise ValueError(f"composition needs a vector jet of length {f.nvars}, got shape {y.shape}")
    order = min(f.order, y.order)
    dy = y.truncate(order).nilpotent_part()
    total = as_jet(f.value, y.nvars, order, y.point)
    power_ = None
    for m in range(1, order + 1):
        power_ = dy if power_ is None else outer(power_, dy)
        if np.any(f.coeffs[m]):
            total = total + contract(f.coeffs[m], power_, m) * (1.0 / math.factorial(m))
    return total


def embed_vars(jet: Jet, nvars: int, positions: Sequence[int]) -> Jet:
    """Re-express a jet over a larger variable set; absent variables get zero derivatives."""
    positions = list(positions)
    if len(positions) != jet.nvars:
        raise ValueError("one position per existing variable required")
    coeffs = [jet.coeffs[0]]
    for m in range(1, jet.order + 1):
        c = np.zeros(jet.shape + (nvars,) * m)
        idx = (Ellipsis,) + tuple(np.ix_(*([positions] * m)))
        c[idx] = jet.coeffs[m]
        coeffs.append(c)
    return Jet(coeffs, nvars, None)


# -- finite-difference oracle ------------------------------------------------------------
class FiniteDifferenceReport(NamedTuple):
    d1: ResidualSummary
    d2: ResidualSummary


def _rel_err(exact: np.ndarray, approx: np.ndarray) -> np.ndarray:
    # unit floor: a vanishing exact coefficient would otherwise turn stencil rounding into error 1
    return np.abs(exact - approx) / max(float(np.max(np.abs(exact))), 1.0)


def finite_difference_check(f: Callable, x0, h: float = 1e-4) -> FiniteDifferenceReport:
    """Compare the jet gradient/Hessian of scalar ``f`` at ``x0`` with central differences."""
    if h <= 0:
        raise ValueError("step h must be positive")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    n = x0.size
    jet = f(variables(x0, 2))
    if not isinstance(jet, Jet):
        jet = as_jet(jet, n, 2)

    def ev(x):
        try:
            return float(np.asarray(f(x), dtype=float))
        except (JetDomainError, ZeroDivisionError, FloatingPointError) as exc:
            raise JetDomainError(f"evaluation failed on the stencil: {exc}", x) from exc

    f0 = ev(x0)
    e = np.eye(n) * h
    grad = np.array([(ev(x0 + e[i]) - ev(x0 - e[i])) / (2 * h) for i in range(n)])
    hess = np.empty((n, n))
    for i in range(n):
        hess[i, i] = (ev(x0 + e[i]) - 2 * f0 + ev(x0 - e[i])) / h**2
        for j in range(i + 1, n):
            hess[i, j] = hess[j, i] = (
                ev(x0 + e[i] + e[j]) - ev(x0 + e[i] - e[j]) - ev(x0 - e[i] + e[j]) + ev(x0 - e[i] - e[j])
            ) / (4 * h * h)
    return FiniteDifferenceReport(
        ResidualSummary.from_values("d1", _rel_err(jet.d1, grad).ravel()),
        ResidualSummary.from_values("d2", _rel_err(jet.d2, hess).ravel()),
    )


def _pt(a: Jet, b: Jet):
    return a.point if a.point is not None else b.point
