"""Exterior and covariant calculus of differential forms on a chart.

Components are stored as full antisymmetric arrays with the evaluation
convention ``σ(e_{i1}, ..., e_{ik}) = σ[i1, ..., ik]`` (no 1/k! factor).  The
wedge product carries the full alternation sum, so ``(dx∧dy)(e_x, e_y) = 1``,
and the pointwise inner product of k-forms is ``(1/k!) Σ σ_I τ^I``.

The codifferential is ``d* = -Σ_i e_i ⌟ ∇_{e_i}``.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from . import jets
from .jets import Jet
from .riemann import MetricField, SingularMetricError, christoffel_jet, orthonormal_frame, to_frame

_LETTERS = "abcdefghijklmnopqrst"


class FormField:
    """Degree-k form on an n-dimensional chart.

    Either ``components(x)`` (a jet-evaluable function returning the full
    antisymmetric component array) or ``jet_fn(x0, order)`` is given.  A field
    of degree ``n + 1`` exists only as the trivially-zero result of
    differentiating a top-degree form.
    """

    def __init__(self, degree: int, dim: int, components: Optional[Callable] = None, *,
                 jet_fn: Optional[Callable] = None, metric: Optional[MetricField] = None, label: str = "form",
                 trivially_zero: bool = False):
        if degree < 0 or degree > dim + 1 or (degree == dim + 1 and not trivially_zero):
            raise ValueError(f"degree {degree} invalid on a {dim}-dimensional chart")
        if components is None and jet_fn is None and not trivially_zero:
            raise ValueError("form needs components or jet_fn")
        self.degree = degree
        self.dim = dim
        self.components = components
        self._jet_fn = jet_fn
        self.metric = metric
        self.label = label
        self.trivially_zero = trivially_zero

    def __repr__(self):
        return f"FormField({self.label!r}, degree={self.degree}, dim={self.dim})"

    @property
    def shape(self) -> tuple:
        return (self.dim,) * self.degree

    def jet(self, x0, order: int) -> Jet:
        x0 = np.asarray(x0, dtype=float)
        if self.trivially_zero:
            return jets.as_jet(np.zeros(self.shape), self.dim, order, x0)
        if self._jet_fn is not None:
            s = self._jet_fn(x0, order)
        else:
            s = self.components(jets.variables(x0, order))
        s = jets.as_jet(s, self.dim, order, x0)
        if s.shape != self.shape:
            s = s + np.zeros(self.shape)
        return s

    def at(self, x0) -> np.ndarray:
        return self.jet(x0, 0).value


def constant_form(values, label: str = "constant form", metric: Optional[MetricField] = None) -> FormField:
    values = np.asarray(values, dtype=float)
    dim = values.shape[0] if values.ndim else (metric.dim if metric else 0)
    return FormField(values.ndim, dim, lambda x: values, metric=metric, label=label)


# -- algebra on component arrays ----------------------------------------------------------
def permutation_sign(perm) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def basis_form(n: int, indices) -> np.ndarray:
    """Full antisymmetric array of ``dx^{i1} ∧ ... ∧ dx^{ik}``."""
    indices = tuple(indices)
    k = len(indices)
    out = np.zeros((n,) * k)
    if len(set(indices)) < k:
        return out
    for perm in itertools.permutations(range(k)):
        out[tuple(indices[p] for p in perm)] = permutation_sign(perm)
    return out


def _transpose_leading(x, axes):
    if isinstance(x, Jet):
        return x.apply(lambda c: c.transpose(tuple(axes) + tuple(range(len(axes), c.ndim))))
    return np.transpose(x, axes)


def _outer(a, b):
    if isinstance(a, Jet) or isinstance(b, Jet):
        return jets.outer(a, b)
    return np.multiply.outer(a, b)


def wedge_values(a, p: int, b, q: int):
    """Wedge of a p-form and a q-form given as component arrays or jets."""
    t = _outer(a, b)
    total = None
    for pos in itertools.combinations(range(p + q), p):
        rest = [i for i in range(p + q) if i not in pos]
        order = list(pos) + rest
        axes = [0] * (p + q)
        for r, slot in enumerate(order):
            axes[slot] = r
        term = _transpose_leading(t, axes) * permutation_sign(order)
        total = term if total is None else total + term
    return total


def interior_values(v, s, k: int):
    """``v ⌟ σ`` for component arrays (or jets) of a k-form."""
    if k < 1:
        raise ValueError("interior product of a 0-form is undefined")
    if isinstance(s, Jet) or isinstance(v, Jet):
        lett = _LETTERS[:k]
        return jets.einsum(f"{lett[0]},{lett}->{lett[1:]}", v, s)
    return np.tensordot(np.asarray(v, dtype=float), s, axes=([0], [0]))


def antisymmetry_residual(s: np.ndarray) -> float:
    k = s.ndim
    worst = 0.0
    for i in range(k - 1):
        worst = max(worst, float(np.max(np.abs(s + np.swapaxes(s, i, i + 1)))))
    return worst


def form_inner(g: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """Pointwise inner product ``(1/k!) a_I b^I``."""
    k = a.ndim
    ginv = np.linalg.inv(g)
    braised = b
    for ax in range(k):
        braised = np.moveaxis(np.tensordot(ginv, braised, axes=([1], [ax])), 0, ax)
    return float(np.sum(a * braised) / math.factorial(k))


def frame_norm(t: np.ndarray, g: np.ndarray) -> float:
    """Largest component of a covariant tensor in a g-orthonormal frame."""
    if t.ndim == 0:
        return float(abs(t))
    return float(np.max(np.abs(to_frame(t, orthonormal_frame(g)))))


# -- differential operators on jets ---------------------------------------------------------
def d_jet(s: Jet, k: int) -> Jet:
    """Exterior derivative of a k-form jet (one order lower)."""
    dd = s.diff()  # derivative index last
    total = None
    for j in range(k + 1):
        term = dd.moveaxis(k, j) * ((-1) ** j)
        total = term if total is None else total + term
    return total


def nabla_jet(gamma: Jet, s: Jet, k: int) -> Jet:
    """``∇σ`` with the direction as axis 0, one order below ``σ``."""
    ds = s.diff().moveaxis(k, 0)
    if k == 0:
        return ds
    gm = gamma.truncate(ds.order)
    s0 = s.truncate(ds.order)
    lett = _LETTERS[:k]
    total = ds
    for slot in range(k):
        src = lett[:slot] + "p" + lett[slot + 1:]
        total = total - jets.einsum(f"pm{lett[slot]},{src}->m{lett}", gm, s0)
    return total


def codifferential_jet(g: Jet, gamma: Jet, s: Jet, k: int) -> Jet:
    """``d*σ = -g^{ij} (∇_i σ)(e_j, ...)``."""
    if k == 0:
        return jets.as_jet(np.zeros(()), s.nvars, max(s.order - 1, 0), s.point)
    nab = nabla_jet(gamma, s, k)
    ginv = jets.inv(g.truncate(nab.order))
    rest = _LETTERS[:k - 1]
    return -jets.einsum(f"ij,ij{rest}->{rest}", ginv, nab)


@lru_cache(maxsize=None)
def levi_civita(n: int) -> np.ndarray:
    eps = np.zeros((n,) * n)
    for perm in itertools.permutations(range(n)):
        eps[perm] = permutation_sign(perm)
    return eps


def raise_all(g, s, k: int):
    ginv = jets.inv(g) if isinstance(g, Jet) else np.linalg.inv(g)
    out = s
    lett = _LETTERS[:k]
    for slot in range(k):
        src = lett[:slot] + "z" + lett[slot + 1:]
        out = jets.einsum(f"{lett[slot]}z,{src}->{lett}", ginv, out) if isinstance(out, Jet) or isinstance(ginv, Jet) \
            else np.einsum(f"{lett[slot]}z,{src}->{lett}", ginv, out)
    return out


def hodge_jet(g, s, k: int, orientation: int = 1):
    """Hodge star ``(*σ)_J = (1/k!) √det g σ^I ε_{IJ}``."""
    n = (g.shape[0])
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    up = raise_all(g, s, k)
    vol = jets.exp(jets.logdet(g) * 0.5) if isinstance(g, Jet) else np.sqrt(np.linalg.det(g))
    eps = levi_civita(n) * (orientation / math.factorial(k))
    if isinstance(up, Jet):
        return jets.contract(np.moveaxis(eps, list(range(k)), list(range(n - k, n))), up, k) * vol if k else up * (eps * 1.0) * vol
    return vol * np.tensordot(up, eps, axes=(list(range(k)), list(range(k))))


# -- field-level operations ------------------------------------------------------------------
def _metric_of(f: FormField, metric: Optional[MetricField]) -> MetricField:
    m = metric or f.metric
    if m is None:
        raise ValueError(f"{f.label}: a metric is required")
    return m


def exterior_derivative(f: FormField) -> FormField:
    if f.degree >= f.dim:
        return FormField(f.degree + 1, f.dim, metric=f.metric, label=f"d({f.label})", trivially_zero=True)
    return FormField(f.degree + 1, f.dim, jet_fn=lambda x0, order: d_jet(f.jet(x0, order + 1), f.degree),
                     metric=f.metric, label=f"d({f.label})")


def nabla_field_jet(f: FormField, x0, order: int, metric: Optional[MetricField] = None) -> Jet:
    m = _metric_of(f, metric)
    gamma = christoffel_jet(m.jet(x0, order + 1))
    return nabla_jet(gamma, f.jet(x0, order + 1), f.degree)


def covariant_derivative_form(f: FormField, X, x, metric: Optional[MetricField] = None) -> np.ndarray:
    nab = nabla_field_jet(f, x, 0, metric).value
    return np.tensordot(np.asarray(X, dtype=float), nab, axes=([0], [0]))


def codifferential_field(f: FormField, metric: Optional[MetricField] = None) -> FormField:
    m = _metric_of(f, metric)
    if f.degree == 0:
        raise ValueError("codifferential of a 0-form is not defined here")

    def jet_fn(x0, order):
        g = m.jet(x0, order + 1)
        return codifferential_jet(g, christoffel_jet(g), f.jet(x0, order + 1), f.degree)

    return FormField(f.degree - 1, f.dim, jet_fn=jet_fn, metric=m, label=f"d*({f.label})")


def codifferential(f: FormField, x, metric: Optional[MetricField] = None) -> np.ndarray:
    return codifferential_field(f, metric).at(x)


def wedge(a: FormField, b: FormField) -> FormField:
    if a.dim != b.dim:
        raise ValueError("forms live on charts of different dimension")
    if a.degree + b.degree > a.dim:
        raise ValueError(f"degree overflow: {a.degree} + {b.degree} > {a.dim}")
    return FormField(a.degree + b.degree, a.dim,
                     jet_fn=lambda x0, order: wedge_values(a.jet(x0, order), a.degree, b.jet(x0, order), b.degree),
                     metric=a.metric or b.metric, label=f"{a.label}∧{b.label}")


def interior_product(v, f: FormField, x) -> np.ndarray:
    if f.degree == 0:
        raise ValueError("interior product of a 0-form is undefined")
    return interior_values(v, f.at(x), f.degree)


def hodge_star_field(f: FormField, orientation: Optional[int] = None, metric: Optional[MetricField] = None) -> FormField:
    m = _metric_of(f, metric)
    o = m.orientation if orientation is None else orientation
    return FormField(f.dim - f.degree, f.dim,
                     jet_fn=lambda x0, order: hodge_jet(m.jet(x0, order), f.jet(x0, order), f.degree, o),
                     metric=m, label=f"*({f.label})")


def hodge_star(f: FormField, x, orientation: Optional[int] = None, metric: Optional[MetricField] = None) -> np.ndarray:
    m = _metric_of(f, metric)
    if np.linalg.eigvalsh(m.at(x)).min() <= 0:
        raise SingularMetricError(f"singular metric at {x}")
    o = m.orientation if orientation is None else orientation
    return hodge_jet(m.at(x), f.at(x), f.degree, o)


def volume_form(metric: MetricField, orientation: Optional[int] = None) -> FormField:
    n = metric.dim
    o = metric.orientation if orientation is None else orientation

    def jet_fn(x0, order):
        vol = jets.exp(jets.logdet(metric.jet(x0, order)) * 0.5)
        return jets.outer(vol, levi_civita(n) * float(o)) if n else vol

    return FormField(n, n, jet_fn=jet_fn, metric=metric, label=f"vol({metric.label})")
