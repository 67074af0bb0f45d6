"""Levi-Civita connection and curvature of a metric given in a coordinate chart.

Curvature convention: ``R(X, Y, Z, W) = g(R_{X,Y} Z, W)`` with
``R_{X,Y} = [∇_X, ∇_Y] - ∇_{[X,Y]}``.  Then ``R(X, Y, Y, X)`` is the sectional
curvature of an orthonormal pair (``+1`` on the unit sphere) and the curvature
operator defined by ``g(R(X∧Y), Z∧W) = -R(X, Y, Z, W)`` is the identity on the
unit sphere.  Ricci is ``Ric(X, Y) = Σ_i R(X, e_i, e_i, Y)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import jets
from .charts import DEFAULT_SEED, ChartDomain
from .jets import Jet, JetDomainError


class SingularMetricError(ValueError):
    """The metric matrix is singular or not positive definite at a point."""


class MetricField:
    """Riemannian metric on a chart, evaluable as a jet of its components.

    ``components(x)`` receives the point as a vector jet (or a plain array) and
    returns the symmetric matrix ``g_ij``.  Derived metrics that are not given
    by an evaluator (induced metrics, for instance) pass ``jet_fn(x0, order)``
    instead.
    """

    def __init__(self, dim: int, components: Optional[Callable] = None, domain: Optional[ChartDomain] = None,
                 label: str = "metric", *, jet_fn: Optional[Callable] = None, einstein: bool = False,
                 orientation: int = 1):
        if dim < 1:
            raise ValueError("metric dimension must be positive")
        if (components is None) == (jet_fn is None):
            raise ValueError("give exactly one of components or jet_fn")
        self.dim = dim
        self.components = components
        self._jet_fn = jet_fn
        self.domain = domain if domain is not None else ChartDomain.box(-1.0, 1.0, dim)
        self.label = label
        self.einstein = einstein
        self.orientation = orientation

    def __repr__(self):
        return f"MetricField({self.label!r}, dim={self.dim})"

    def jet(self, x0, order: int) -> Jet:
        x0 = np.asarray(x0, dtype=float)
        if self._jet_fn is not None:
            g = self._jet_fn(x0, order)
        else:
            g = self.components(jets.variables(x0, order))
        g = jets.as_jet(g, self.dim, order, x0)
        if g.shape != (self.dim, self.dim):
            raise ValueError(f"{self.label}: components have shape {g.shape}, expected {(self.dim, self.dim)}")
        return g

    def at(self, x0) -> np.ndarray:
        x0 = np.asarray(x0, dtype=float)
        if self._jet_fn is not None:
            return self.jet(x0, 0).value
        return np.asarray(jets.value(self.components(x0)), dtype=float) * np.ones((self.dim, self.dim))

    def check_point(self, x0, tol: float = 1e-12) -> np.ndarray:
        """Return ``g(x0)`` after checking symmetry and positive definiteness."""
        g = self.at(x0)
        if np.max(np.abs(g - g.T)) > tol * max(1.0, np.max(np.abs(g))):
            raise SingularMetricError(f"{self.label}: metric not symmetric at {x0}")
        if np.linalg.eigvalsh(g).min() <= 0:
            raise SingularMetricError(f"{self.label}: metric not positive definite at {x0}")
        return g

    def sample(self, count: int, seed: int = DEFAULT_SEED) -> np.ndarray:
        return self.domain.sample(count, seed)


def _checked_inverse(g: Jet) -> Jet:
    try:
        w = np.linalg.eigvalsh(g.value)
    except np.linalg.LinAlgError as exc:
        raise SingularMetricError(str(exc)) from exc
    if w.min() <= 1e-14 * max(1.0, abs(w.max())):
        raise SingularMetricError(f"singular metric at {g.point}: eigenvalues {w}")
    return jets.inv(g)


def christoffel_jet(g: Jet) -> Jet:
    """``Γ[k, i, j] = Γ^k_ij`` as a jet one order below the metric jet."""
    if g.order < 1:
        raise ValueError("Christoffel symbols need a metric jet of order >= 1")
    dg = g.diff()  # dg[i, j, l] = ∂_l g_ij
    s = jets.permute(dg, "jli->lij") + jets.permute(dg, "ilj->lij") - jets.permute(dg, "ijl->lij")
    ginv = _checked_inverse(g.truncate(g.order - 1))
    return jets.einsum("kl,lij->kij", ginv, s) * 0.5


def riemann_jet(g: Jet) -> tuple[Jet, Jet]:
    """``(R, Γ)`` with ``R[a, b, c, d] = R(∂_a, ∂_b, ∂_c, ∂_d)`` two orders below ``g``."""
    if g.order < 2:
        raise ValueError("curvature needs a metric jet of order >= 2")
    gamma = christoffel_jet(g)
    dgam = gamma.diff()  # dgam[e, b, c, a] = ∂_a Γ^e_bc
    g0 = gamma.truncate(gamma.order - 1)
    rup = (jets.permute(dgam, "ebca->ecab") - jets.permute(dgam, "eacb->ecab")
           + jets.einsum("eaf,fbc->ecab", g0, g0) - jets.einsum("ebf,fac->ecab", g0, g0))
    r = jets.einsum("de,ecab->abcd", g.truncate(rup.order), rup)
    return r, g0


@dataclass
class CurvatureAtPoint:
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    point: np.ndarray
    metric: np.ndarray = field(repr=False)


def christoffels(metric: MetricField, x) -> np.ndarray:
    """Value-level ``Γ[k, i, j]`` at ``x``."""
    return christoffel_jet(metric.jet(x, 1)).value


def ricci_direct(metric: MetricField, x) -> np.ndarray:
    """Ricci tensor from Christoffel derivatives, without forming the Riemann tensor."""
    gamma = christoffel_jet(metric.jet(x, 2))
    d = gamma.diff().value  # d[e, b, c, a] = ∂_a Γ^e_bc
    gm = gamma.value
    ric = (np.einsum("abca->bc", d) - np.einsum("aacb->bc", d)
           + np.einsum("aaf,fbc->bc", gm, gm) - np.einsum("abf,fac->bc", gm, gm))
    return 0.5 * (ric + ric.T)


def curvature(metric: MetricField, x) -> CurvatureAtPoint:
    x = np.asarray(x, dtype=float)
    g = metric.jet(x, 2)
    r, _ = riemann_jet(g)
    return curvature_from_tensor(r.value, g.value, x)


def curvature_from_tensor(r: np.ndarray, g: np.ndarray, x=None) -> CurvatureAtPoint:
    ginv = np.linalg.inv(g)
    ric = np.einsum("bc,abcd->ad", ginv, r)
    return CurvatureAtPoint(r, ric, float(np.einsum("ad,ad->", ginv, ric)),
                            None if x is None else np.asarray(x, dtype=float), g)


def sectional_curvature(curv: CurvatureAtPoint, X, Y) -> float:
    X, Y = np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
    g = curv.metric
    xx, yy, xy = X @ g @ X, Y @ g @ Y, X @ g @ Y
    area = xx * yy - xy * xy
    if area <= 1e-14 * max(xx * yy, 1e-300):
        raise ValueError("degenerate plane: X and Y are linearly dependent")
    return float(np.einsum("abcd,a,b,c,d->", curv.riemann, X, Y, Y, X) / area)


def orthonormal_frame(g: np.ndarray) -> np.ndarray:
    """Columns form a g-orthonormal basis (``E.T @ g @ E = I``)."""
    try:
        low = np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise SingularMetricError(f"metric not positive definite: {exc}") from exc
    return np.linalg.inv(low).T


def bivector_basis(n: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(n), 2))


def to_frame(t: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """Covariant tensor components in the frame given by the columns of ``frame``."""
    for _ in range(t.ndim):
        t = np.tensordot(t, frame, axes=([0], [0]))
    return t


def curvature_operator(curv: CurvatureAtPoint) -> np.ndarray:
    """Matrix of the curvature operator on Λ² in the orthonormal basis e_a∧e_b, a < b."""
    rf = to_frame(curv.riemann, orthonormal_frame(curv.metric))
    pairs = bivector_basis(curv.metric.shape[0])
    op = np.array([[-rf[a, b, c, d] for (c, d) in pairs] for (a, b) in pairs])
    return 0.5 * (op + op.T)


def symmetry_residuals(curv: CurvatureAtPoint) -> dict[str, float]:
    """Violations of the Riemann index symmetries and the first Bianchi identity."""
    r = curv.riemann
    scale = max(1.0, float(np.max(np.abs(r))))
    return {
        "antisym_12": float(np.max(np.abs(r + r.transpose(1, 0, 2, 3)))) / scale,
        "antisym_34": float(np.max(np.abs(r + r.transpose(0, 1, 3, 2)))) / scale,
        "pair_sym": float(np.max(np.abs(r - r.transpose(2, 3, 0, 1)))) / scale,
        "bianchi": float(np.max(np.abs(r + r.transpose(1, 2, 0, 3) + r.transpose(2, 0, 1, 3)))) / scale,
    }


def einstein_residual(curv: CurvatureAtPoint) -> float:
    n = curv.metric.shape[0]
    return float(np.max(np.abs(curv.ricci - curv.scalar / n * curv.metric)))


__all__ = [
    "CurvatureAtPoint", "JetDomainError", "MetricField", "SingularMetricError", "christoffel_jet",
    "christoffels", "curvature", "curvature_from_tensor", "curvature_operator", "einstein_residual",
    "orthonormal_frame", "ricci_direct", "riemann_jet", "sectional_curvature", "symmetry_residuals", "to_frame",
]
