"""Geometry of a hypersurface embedded in a chart of an (n+1)-manifold.

Sign conventions: ``N`` is the unit normal selected by the embedding's
orientation (``det[∂_1 x, ..., ∂_n x, N] > 0`` for orientation ``+1``).  The
scalar second fundamental form is ``II_ab = ḡ(∇̄_{∂a} ∂_b, N)`` and the shape
operator is ``A = -(∇̄ N)^T``, so that ``ḡ(II(X, Y), N) = g(A X, Y)``.  On an
umbilical hypersurface ``II = λ g`` and ``∇̄_X N = -λ X``; the unit sphere in
flat space has ``λ = 1`` for the inward normal.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import jets
from .charts import DEFAULT_SEED, ChartDomain
from .forms import FormField, frame_norm, interior_values, permutation_sign, wedge_values
from .jets import Jet
from .riemann import MetricField, christoffel_jet, curvature_from_tensor, orthonormal_frame, riemann_jet, to_frame
from .summary import ResidualSummary

UMBILIC_TOL = 1e-7
RANK_TOL = 1e-10


class DegenerateParametrizationError(ValueError):
    """The embedding's differential is rank deficient at a point."""


class NotUmbilicalError(ValueError):
    """An identity that presupposes umbilicity was applied at a non-umbilical point."""


class NotEinsteinError(ValueError):
    """The ambient metric is not flagged Einstein."""


class Embedding:
    """Map from an n-dimensional chart into the chart of an (n+1)-dimensional ambient metric."""

    def __init__(self, ambient: MetricField, map: Optional[Callable] = None, *, intrinsic_dim: Optional[int] = None,
                 domain: Optional[ChartDomain] = None, orientation: int = 1, label: str = "embedding",
                 map_jet_fn: Optional[Callable] = None, max_order: int = 3):
        if (map is None) == (map_jet_fn is None):
            raise ValueError("give exactly one of map or map_jet_fn")
        if orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        n = ambient.dim - 1 if intrinsic_dim is None else intrinsic_dim
        if n != ambient.dim - 1:
            raise ValueError("a hypersurface has dimension ambient.dim - 1")
        self.ambient = ambient
        self.map = map
        self._map_jet_fn = map_jet_fn
        self.intrinsic_dim = n
        self.domain = domain if domain is not None else ChartDomain.box(-1.0, 1.0, n)
        self.orientation = orientation
        self.label = label
        self.max_order = max_order

    def __repr__(self):
        return f"Embedding({self.label!r}, n={self.intrinsic_dim})"

    def flipped(self) -> "Embedding":
        e = Embedding.__new__(Embedding)
        e.__dict__.update(self.__dict__)
        e.__dict__.pop("_jet_cache", None)
        e.orientation = -self.orientation
        e.label = f"{self.label} (flipped)"
        return e

    def with_ambient(self, ambient: MetricField, label: Optional[str] = None) -> "Embedding":
        e = Embedding.__new__(Embedding)
        e.__dict__.update(self.__dict__)
        e.__dict__.pop("_jet_cache", None)
        e.ambient = ambient
        e.label = label or self.label
        return e

    def map_jet(self, u0, order: int) -> Jet:
        u0 = np.asarray(u0, dtype=float)
        if order > self.max_order:
            raise ValueError(f"{self.label}: map is jet-evaluable only to order {self.max_order}")
        if self._map_jet_fn is not None:
            x = self._map_jet_fn(u0, order)
        else:
            x = self.map(jets.variables(u0, order))
        return jets.as_jet(x, self.intrinsic_dim, order, u0)

    def position(self, u0) -> np.ndarray:
        return self.map_jet(u0, 0).value

    def induced_metric(self) -> MetricField:
        return MetricField(self.intrinsic_dim, jet_fn=lambda u0, order: tangent_jets(self, u0, order).g,
                           domain=self.domain, label=f"induced({self.label})")

    def sample(self, count: int, seed: int = DEFAULT_SEED) -> np.ndarray:
        return self.domain.sample(count, seed)


def _reference_normal(jac: np.ndarray, gbar: np.ndarray, orientation: int, u0) -> np.ndarray:
    """Unit normal at value level; ``jac`` has shape (n+1, n)."""
    frame = orthonormal_frame(gbar)
    # singular values of the differential measured in a ḡ-orthonormal ambient frame
    sv = np.linalg.svd(np.linalg.solve(frame, jac), compute_uv=False)
    if sv.min() <= RANK_TOL * max(1.0, sv.max()):
        raise DegenerateParametrizationError(f"rank-deficient differential at u = {np.asarray(u0)} (σ_min = {sv.min():.3e})")
    _, _, vt = np.linalg.svd(jac.T)
    nu = vt[-1]
    nvec = np.linalg.solve(gbar, nu)
    nvec = nvec / np.sqrt(nvec @ gbar @ nvec)
    if np.linalg.det(np.column_stack([jac, nvec])) * orientation < 0:
        nvec = -nvec
    return nvec


@dataclass
class TangentJets:
    x: Jet          # position, order + 1
    jac: Jet        # ∂_a x^i as [i, a], order
    gbar: Jet       # ambient metric along the map, order
    g: Jet          # induced metric, order
    normal: Jet     # unit normal, order


_CACHE_SIZE = 2048


def _cached(kind: str):
    """Memoise per-point jet bundles on the embedding; they are never mutated."""
    def wrap(fn):
        def inner(e: Embedding, u0, order: int):
            u0 = np.asarray(u0, dtype=float)
            cache = e.__dict__.setdefault("_jet_cache", {})
            key = (kind, order, e.orientation, id(e.ambient), u0.tobytes())
            hit = cache.get(key)
            if hit is None:
                if len(cache) >= _CACHE_SIZE:
                    cache.clear()
                hit = cache[key] = fn(e, u0, order)
            return hit
        inner.__name__, inner.__doc__ = fn.__name__, fn.__doc__
        return inner
    return wrap


@_cached("tangent")
def tangent_jets(e: Embedding, u0, order: int) -> TangentJets:
    x = e.map_jet(u0, order + 1)
    jac = x.diff()
    x0 = x.value
    gbar = jets.compose(e.ambient.jet(x0, order), x.truncate(order))
    g = jets.einsum("ia,ij->aj", jac, gbar)
    g = jets.einsum("aj,jb->ab", g, jac)
    nref = _reference_normal(jac.value, gbar.value, e.orientation, u0)
    # project the fixed reference vector off the tangent space, then normalise
    proj = jets.einsum("ia,ij->aj", jac, gbar)
    coef = jets.einsum("aj,j->a", proj, nref)
    coef = jets.einsum("ab,b->a", jets.inv(g), coef)
    w = -jets.einsum("ia,a->i", jac, coef) + nref
    norm2 = jets.einsum("i,ij->j", w, gbar)
    norm2 = jets.einsum("j,j->", norm2, w)
    normal = w * jets.power(norm2, -0.5)
    return TangentJets(x, jac, gbar, g, normal)


@dataclass
class ExtrinsicJets(TangentJets):
    hess: Jet        # ∂_a ∂_b x^i as [i, a, b]
    gamma_bar: Jet   # ambient Christoffels along the map
    second: Jet      # II_ab
    shape: Jet       # A^a_b
    lam: Jet         # tr(A) / n


@_cached("extrinsic")
def extrinsic_jets(e: Embedding, u0, order: int) -> ExtrinsicJets:
    x = e.map_jet(u0, order + 2)
    t = tangent_jets(e, u0, order)
    hess = x.diff().diff()
    x0 = x.value
    gam = jets.compose(christoffel_jet(e.ambient.jet(x0, order + 1)), x.truncate(order))
    accel = jets.einsum("kij,ia->kaj", gam, t.jac)
    accel = jets.einsum("kaj,jb->kab", accel, t.jac) + hess
    nlow = jets.einsum("kl,l->k", t.gbar, t.normal)
    second = jets.einsum("k,kab->ab", nlow, accel)
    shape = jets.einsum("ac,cb->ab", jets.inv(t.g), second)
    lam = jets.trace(shape) * (1.0 / e.intrinsic_dim)
    return ExtrinsicJets(t.x, t.jac, t.gbar, t.g, t.normal, hess, gam, second, shape, lam)


@dataclass
class HypersurfacePointData:
    induced_metric: np.ndarray
    normal: np.ndarray
    second_fundamental: np.ndarray
    shape_operator: np.ndarray
    mean_curvature: float
    lambda_estimate: float
    point: np.ndarray
    position: np.ndarray
    jacobian: np.ndarray


def first_fundamental_form(e: Embedding, u) -> np.ndarray:
    return tangent_jets(e, u, 0).g.value


def second_fundamental_form(e: Embedding, u) -> HypersurfacePointData:
    ex = extrinsic_jets(e, u, 0)
    lam = float(ex.lam.value)
    return HypersurfacePointData(ex.g.value, ex.normal.value, ex.second.value, ex.shape.value, lam, lam,
                                 np.asarray(u, dtype=float), ex.x.value, ex.jac.value)


def _umbilicity(shape: np.ndarray) -> float:
    n = shape.shape[0]
    traceless = shape - np.trace(shape) / n * np.eye(n)
    return float(np.sqrt(max(np.trace(traceless @ traceless), 0.0)))


def umbilicity_residual(e: Embedding, u) -> float:
    """g-norm of the traceless part of II; zero exactly at umbilical points."""
    return _umbilicity(extrinsic_jets(e, u, 0).shape.value)


def _require_umbilical(e: Embedding, u, shape: np.ndarray, tol: float = UMBILIC_TOL):
    r = _umbilicity(shape)
    if r >= tol:
        raise NotUmbilicalError(f"{e.label}: umbilicity residual {r:.3e} >= {tol:g} at u = {np.asarray(u)}")


def shape_operator_from_normal(e: Embedding, u) -> np.ndarray:
    """``A = -(∇̄N)^T`` computed from the derivative of the normal field."""
    ex = extrinsic_jets(e, u, 1)
    n = ex.normal.truncate(1)
    dn = n.diff().value  # dn[i, a] = ∂_a N^i
    jac, gbar, gam = ex.jac.value, ex.gbar.value, ex.gamma_bar.value
    cov = dn + np.einsum("kij,ia,j->ka", gam, jac, n.value)
    lowered = jac.T @ gbar @ cov  # g(∂_b, ∇̄_{∂a} N) as [b, a]
    return -np.linalg.solve(ex.g.value, lowered)


def shape_duality_residual(e: Embedding, u) -> float:
    ex = extrinsic_jets(e, u, 0)
    a = shape_operator_from_normal(e, u)
    return float(np.max(np.abs(ex.second.value - ex.g.value @ a)))


def gauss_weingarten_residual(e: Embedding, u) -> tuple[float, float]:
    """Norms of ``∇̄_X Y - ∇_X Y - λ g(X,Y) N`` and ``∇̄_X N + λ X`` over coordinate fields."""
    ex = extrinsic_jets(e, u, 1)
    jac, gbar = ex.jac.value, ex.gbar.value
    lam = float(ex.lam.value)
    gam_int = christoffel_jet(ex.g).value
    nv = ex.normal.value
    n = e.intrinsic_dim
    accel = ex.hess.value + np.einsum("kij,ia,jb->kab", ex.gamma_bar.value, jac, jac)
    intr = np.einsum("cab,kc->kab", gam_int, jac)
    res1 = accel - intr - lam * np.einsum("ab,k->kab", ex.g.value, nv)
    dn = ex.normal.diff().value
    cov = dn + np.einsum("kij,ia,j->ka", ex.gamma_bar.value, jac, nv)
    res2 = cov + lam * jac
    norm = lambda v: float(np.sqrt(max(v @ gbar @ v, 0.0)))
    r1 = max(norm(res1[:, a, b]) for a in range(n) for b in range(n))
    r2 = max(norm(res2[:, a]) for a in range(n))
    return r1, r2


def _gauss_tensors(e: Embedding, u):
    ex = extrinsic_jets(e, u, 1)
    _require_umbilical(e, u, ex.shape.value)
    xv = ex.x.value
    rbar, _ = riemann_jet(e.ambient.jet(xv, 2))
    rbar = rbar.value
    tj = tangent_jets(e, u, 2)
    rint, _ = riemann_jet(tj.g)
    return ex, rbar, rint.value


def gauss_residual(e: Embedding, u) -> ResidualSummary:
    """``|R̄(X,Y,Z,W) - R(X,Y,Z,W) - λ² g(X∧Y, Z∧W)|`` over orthonormal frame components."""
    ex, rbar, rint = _gauss_tensors(e, u)
    jac, g = ex.jac.value, ex.g.value
    lam = float(ex.lam.value)
    rbar_t = np.einsum("ijkl,ia,jb,kc,ld->abcd", rbar, jac, jac, jac, jac)
    wedge_gg = np.einsum("ac,bd->abcd", g, g) - np.einsum("ad,bc->abcd", g, g)
    res = to_frame(rbar_t - rint - lam**2 * wedge_gg, orthonormal_frame(g))
    return ResidualSummary.from_values("gauss", np.abs(res).ravel())


class CodazziResult(NamedTuple):
    codazzi: ResidualSummary
    traced: ResidualSummary
    dlambda: np.ndarray


def codazzi_residual(e: Embedding, u) -> CodazziResult:
    """``R̄(X,Y,Z,N) - (dλ∧Z)(X,Y)`` and the traced form ``Ric̄(X,N) - (n-1) dλ(X)``."""
    ex = extrinsic_jets(e, u, 1)
    _require_umbilical(e, u, ex.shape.value)
    xv = ex.x.value
    rbar_jet, _ = riemann_jet(e.ambient.jet(xv, 2))
    rbar = rbar_jet.value
    curv = curvature_from_tensor(rbar, ex.gbar.value)
    jac, g, nv = ex.jac.value, ex.g.value, ex.normal.value
    dlam = ex.lam.diff().value
    lhs = np.einsum("ijkl,ia,jb,kc,l->abc", rbar, jac, jac, jac, nv)
    rhs = np.einsum("a,bc->abc", dlam, g) - np.einsum("b,ac->abc", dlam, g)
    frame = orthonormal_frame(g)
    res = to_frame(lhs - rhs, frame)
    n = e.intrinsic_dim
    traced = curv.ricci @ nv @ jac - (n - 1) * dlam
    traced = to_frame(traced, frame)
    return CodazziResult(ResidualSummary.from_values("codazzi", np.abs(res).ravel()),
                         ResidualSummary.from_values("codazzi_traced", np.abs(traced).ravel()), dlam)


@dataclass
class EinsteinLambdaReport:
    formula: ResidualSummary
    lambda_values: np.ndarray
    scal_values: np.ndarray
    ambient_scal_values: np.ndarray
    lambda_spread: float
    scal_spread: float
    inequality_holds: bool
    equality_gap: float  # max |(n+1) scal_g - (n-1) scal_ḡ|, zero in the totally geodesic case

    @property
    def constancy_note(self) -> str:
        return "constant on samples" if max(self.lambda_spread, self.scal_spread) < 1e-7 else "not constant on samples"


def einstein_lambda_check(e: Embedding, sample) -> EinsteinLambdaReport:
    """Residual of ``λ² = scal_g / (n(n-1)) - scal_ḡ / (n(n+1))`` on a sample set."""
    if not e.ambient.einstein:
        raise NotEinsteinError(f"{e.ambient.label} is not flagged Einstein")
    n = e.intrinsic_dim
    res, lams, scals, scal_bars = [], [], [], []
    for u in np.atleast_2d(sample):
        ex, rbar, rint = _gauss_tensors(e, u)
        lam = float(ex.lam.value)
        scal = curvature_from_tensor(rint, ex.g.value).scalar
        scal_bar = curvature_from_tensor(rbar, ex.gbar.value).scalar
        res.append(abs(lam**2 - scal / (n * (n - 1)) + scal_bar / (n * (n + 1))))
        lams.append(lam)
        scals.append(scal)
        scal_bars.append(scal_bar)
    lams, scals, scal_bars = np.array(lams), np.array(scals), np.array(scal_bars)
    gap = (n + 1) * scals - (n - 1) * scal_bars
    return EinsteinLambdaReport(ResidualSummary.from_values("einstein_lambda", res), lams, scals, scal_bars,
                                float(np.ptp(lams)), float(np.ptp(scals)), bool(np.all(gap >= -1e-8)),
                                float(np.max(np.abs(gap))))


# -- pullback of ambient forms ---------------------------------------------------------------
_L = "abcdefgh"


def pull_back_jet(s: Jet, jac: Jet, k: int) -> Jet:
    """Contract every slot of an ambient k-form jet with the differential ``jac[i, a]``."""
    out = s
    for slot in range(k):
        lett = _L[:k]
        src = lett[:slot] + "z" + lett[slot + 1:]
        out = jets.einsum(f"{src},z{lett[slot]}->{lett}", out, jac)
    return out


@lru_cache(maxsize=None)
def _index_tables(dim: int, k: int):
    """Increasing k-subsets of ``range(dim)`` and the signed unpacking map to full arrays."""
    subsets = list(itertools.combinations(range(dim), k))
    unpack = np.zeros((len(subsets),) + (dim,) * k)
    for p, sub in enumerate(subsets):
        for perm in itertools.permutations(range(k)):
            unpack[(p,) + tuple(sub[i] for i in perm)] = permutation_sign(perm)
    pick = tuple(np.array([sub[j] for sub in subsets], dtype=int) for j in range(k))
    return subsets, unpack, pick


@lru_cache(maxsize=None)
def _laplace_tables(rows: int, cols: int, k: int):
    """Gather indices expanding each k×k minor along its first column."""
    r_k, r_km = (list(itertools.combinations(range(rows), m)) for m in (k, k - 1))
    c_k, c_km = (list(itertools.combinations(range(cols), m)) for m in (k, k - 1))
    r_pos = {sub: i for i, sub in enumerate(r_km)}
    c_pos = {sub: i for i, sub in enumerate(c_km)}
    first_col = np.array([a[0] for a in c_k], dtype=int)
    rest_col = np.array([c_pos[a[1:]] for a in c_k], dtype=int)
    terms = []
    for j in range(k):
        row = np.array([sub[j] for sub in r_k], dtype=int)
        rest_row = np.array([r_pos[sub[:j] + sub[j + 1:]] for sub in r_k], dtype=int)
        terms.append(((-1) ** j, row, rest_row))
    return first_col, rest_col, terms


@_cached("minors")
def minor_jets(e: Embedding, u0, order: int) -> list[Jet]:
    """``M[k][I, A] = det(∂_A x^I)`` for increasing index sets, k = 0..n."""
    jac = tangent_jets(e, u0, order).jac
    n = e.intrinsic_dim
    out = [jets.as_jet(np.ones((1, 1)), n, order, jac.point)]
    for k in range(1, n + 1):
        first_col, rest_col, terms = _laplace_tables(n + 1, n, k)
        prev = out[-1]
        total = None
        for sign, row, rest_row in terms:
            term = jac[np.ix_(row, first_col)] * prev[np.ix_(rest_row, rest_col)]
            total = term * float(sign) if total is None else total + term * float(sign)
        out.append(total)
    return out


def _pull_back_packed(s: Jet, k: int, e: Embedding, u0, order: int) -> Jet:
    """Pullback of a k-form jet (full ambient components) through the map, via minors."""
    n = e.intrinsic_dim
    if k == 0:
        return s
    _, _, pick = _index_tables(n + 1, k)
    _, unpack, _ = _index_tables(n, k)
    packed = jets.einsum("p,pq->q", s[pick], minor_jets(e, u0, order)[k])
    lett = "abcdefgh"[:k]
    return jets.einsum(f"q,q{lett}->{lett}", packed, unpack)


def pullback_jets(e: Embedding, sigma: FormField, u0, order: int, part: str = "both"):
    """Jets of ``γ = i*(N ⌟ σ)`` and ``β = i*σ`` on the hypersurface chart.

    ``part`` selects ``"gamma"``, ``"beta"`` or ``"both"`` (a pair).
    """
    k = sigma.degree
    n = e.intrinsic_dim
    if not 1 <= k <= n + 1 or sigma.dim != e.ambient.dim:
        raise ValueError(f"form degree {k} out of range for a hypersurface of dimension {n}")
    t = tangent_jets(e, u0, order)
    s = jets.compose(sigma.jet(t.x.value, order), t.x.truncate(order))
    gamma = beta = None
    if part in ("beta", "both"):
        beta = _pull_back_packed(s, k, e, u0, order) if k <= n else jets.as_jet(np.zeros((n,) * k), n, order, u0)
    if part in ("gamma", "both"):
        gamma = _pull_back_packed(interior_values(t.normal, s, k), k - 1, e, u0, order)
    return {"gamma": gamma, "beta": beta}.get(part, (gamma, beta))


def pullback_forms(e: Embedding, sigma: FormField, u) -> tuple[np.ndarray, np.ndarray]:
    gamma, beta = pullback_jets(e, sigma, u, 0)
    return gamma.value, beta.value


def pullback_fields(e: Embedding, sigma: FormField) -> tuple[FormField, FormField]:
    n, k = e.intrinsic_dim, sigma.degree
    metric = e.induced_metric()
    gamma = FormField(k - 1, n, jet_fn=lambda u0, order: pullback_jets(e, sigma, u0, order, "gamma"), metric=metric,
                      label=f"i*(N⌟{sigma.label})")
    if k > n:
        beta = FormField(k, n, metric=metric, label=f"i*{sigma.label}", trivially_zero=True)
    else:
        beta = FormField(k, n, jet_fn=lambda u0, order: pullback_jets(e, sigma, u0, order, "beta"), metric=metric,
                         label=f"i*{sigma.label}")
    return gamma, beta


def decomposition_residual(e: Embedding, sigma: FormField, u) -> float:
    """Max component of ``σ - (N♭∧γ + β)`` along the hypersurface, with γ, β extended by zero on N."""
    t = tangent_jets(e, u, 0)
    jac, gbar, nv, g = t.jac.value, t.gbar.value, t.normal.value, t.g.value
    k = sigma.degree
    gamma, beta = pullback_forms(e, sigma, u)
    # left inverse of the differential with N in its kernel: covectors dual to ∂_a
    proj = np.linalg.solve(g, jac.T @ gbar)  # [a, i]
    ext = lambda f, deg: f if deg == 0 else np.einsum(
        ",".join([_L[:deg]] + [f"{_L[s]}{'pqrstuvw'[s]}" for s in range(deg)]) + "->" + "pqrstuvw"[:deg], f,
        *([proj] * deg))
    nflat = gbar @ nv
    tau = wedge_values(nflat, 1, ext(gamma, k - 1), k - 1)
    if k <= e.intrinsic_dim:
        tau = tau + ext(beta, k)
    sig = sigma.at(t.x.value)
    return float(np.max(np.abs(sig - tau))) if sig.size else 0.0


def orient_for_nonnegative_lambda(e: Embedding, u=None) -> Embedding:
    """Flip the normal branch when it makes λ negative at ``u`` (chart centre by default)."""
    u = 0.5 * (e.domain.lo + e.domain.hi) if u is None else u
    lam = second_fundamental_form(e, u).lambda_estimate
    if lam >= -1e-12:
        return e
    f = e.flipped()
    f.label = e.label
    return f


def sample_umbilicity(e: Embedding, sample) -> ResidualSummary:
    return ResidualSummary.from_values("umbilicity", [umbilicity_residual(e, u) for u in np.atleast_2d(sample)])


__all__ = [
    "CodazziResult", "DegenerateParametrizationError", "Embedding", "EinsteinLambdaReport", "HypersurfacePointData",
    "NotEinsteinError", "NotUmbilicalError", "codazzi_residual", "decomposition_residual", "einstein_lambda_check",
    "extrinsic_jets", "first_fundamental_form", "frame_norm", "gauss_residual", "gauss_weingarten_residual",
    "pullback_fields", "pullback_forms", "pullback_jets", "second_fundamental_form", "shape_duality_residual",
    "shape_operator_from_normal", "tangent_jets", "umbilicity_residual",
]
