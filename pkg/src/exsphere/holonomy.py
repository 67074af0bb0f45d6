"""Parallel transport along curves, loop holonomy, and transport-invariant forms.

Only the restricted holonomy around a base point inside one chart is
estimated.  All ranks are numerical: singular values below
``RANK_REL_TOL × largest`` (or below ``RANK_ABS_TOL``) count as zero.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import logm

from . import jets
from .charts import DEFAULT_SEED
from .forms import basis_form, nabla_jet
from .riemann import MetricField, christoffel_jet, christoffels, orthonormal_frame, riemann_jet, to_frame

RANK_REL_TOL = 1e-6
# absolute floor at the transport accuracy: RK4 error on a flat but curvilinear chart is ~1e-8
RANK_ABS_TOL = 1e-6
DEFAULT_STEPS = 64
LOOP_SCALES = (0.05, 0.1, 0.2)
RANDOM_LOOPS = 8
MIN_LOOPS = 20


class CurveOutsideDomainError(ValueError):
    """A transport curve left the chart's domain."""


@dataclass(frozen=True)
class Curve:
    """Curve on ``[0, 1]`` given by position and velocity functions; breakpoints mark corners."""

    position: Callable[[float], np.ndarray]
    velocity: Callable[[float], np.ndarray]
    breakpoints: tuple = ()

    @classmethod
    def from_function(cls, f: Callable) -> "Curve":
        """Velocity from the jet of ``f`` at ``s``; ``f`` must accept a scalar jet."""
        def vel(s):
            return np.asarray(f(jets.variables(np.array([s]), 1)[0]).d1, dtype=float)[..., 0]
        return cls(lambda s: np.asarray(jets.value(f(s)), dtype=float), vel)

    def reversed(self) -> "Curve":
        return Curve(lambda s: self.position(1.0 - s), lambda s: -self.velocity(1.0 - s),
                     tuple(sorted(1.0 - b for b in self.breakpoints)))


def segment(a, b) -> Curve:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return Curve(lambda s: a + s * (b - a), lambda s: b - a)


def polygon(vertices) -> Curve:
    """Closed piecewise-linear loop through ``vertices`` (returns to the first)."""
    pts = [np.asarray(v, dtype=float) for v in vertices]
    pts.append(pts[0])
    m = len(pts) - 1

    def piece(s):
        j = min(int(math.floor(s * m)), m - 1)
        return j, s * m - j

    def pos(s):
        j, t = piece(s)
        return pts[j] + t * (pts[j + 1] - pts[j])

    def vel(s):
        j, _ = piece(s)
        return m * (pts[j + 1] - pts[j])

    return Curve(pos, vel, tuple(j / m for j in range(1, m)))


def parallelogram(x0, a, b) -> Curve:
    x0 = np.asarray(x0, dtype=float)
    return polygon([x0, x0 + a, x0 + a + b, x0 + b])


def fourier_loop(x0, coeffs: np.ndarray) -> Curve:
    """``x0 + Σ_m a_m (cos 2πms - 1) + b_m sin 2πms``; ``coeffs`` has shape (modes, 2, dim)."""
    x0 = np.asarray(x0, dtype=float)
    modes = np.arange(1, coeffs.shape[0] + 1)

    def pos(s):
        w = 2 * math.pi * modes * s
        return x0 + (np.cos(w) - 1) @ coeffs[:, 0] + np.sin(w) @ coeffs[:, 1]

    def vel(s):
        w = 2 * math.pi * modes * s
        k = 2 * math.pi * modes
        return (-k * np.sin(w)) @ coeffs[:, 0] + (k * np.cos(w)) @ coeffs[:, 1]

    return Curve(pos, vel)


@dataclass(frozen=True)
class LoopSpec:
    base_point: np.ndarray
    loop: Curve
    step_count: int = DEFAULT_STEPS

    def __post_init__(self):
        object.__setattr__(self, "base_point", np.asarray(self.base_point, dtype=float))
        if np.max(np.abs(self.loop.position(0.0) - self.loop.position(1.0))) > 1e-12:
            raise ValueError("loop is not closed")
        if np.max(np.abs(self.loop.position(0.0) - self.base_point)) > 1e-12:
            raise ValueError("loop does not start at its base point")


def _vector_term(gam, xdot, v):
    return -np.einsum("kij,i,j...->k...", gam, xdot, v)


def _form_term(k: int):
    lett = "abcdefgh"[:k]

    def term(gam, xdot, s):
        g = np.einsum("pia,i->pa", gam, xdot)
        out = np.zeros_like(s)
        for slot in range(k):
            src = lett[:slot] + "p" + lett[slot + 1:]
            out += np.einsum(f"p{lett[slot]},{src}->{lett}", g, s)
        return out

    return term


def parallel_transport(metric: MetricField, curve: Curve, v0, steps: int = DEFAULT_STEPS,
                       degree: Optional[int] = None, check_domain: bool = True) -> np.ndarray:
    """Integrate ``∇_{c'} V = 0`` with classical RK4.

    ``v0`` is a vector, a matrix whose columns are vectors, or (with
    ``degree = k``) the component array of a k-form.
    """
    if steps < 16:
        raise ValueError("at least 16 steps are required")
    term = _vector_term if degree is None else _form_term(degree)
    cache: dict[bytes, np.ndarray] = {}

    def gamma_at(x):
        key = x.tobytes()
        if key not in cache:
            if check_domain and not metric.domain.contains(x):
                raise CurveOutsideDomainError(f"curve leaves the chart of {metric.label} at {x}")
            cache[key] = christoffels(metric, x)
        return cache[key]

    # steps land on corners so each RK4 step sees a smooth piece
    pieces = [0.0, *curve.breakpoints, 1.0]
    per = max(1, steps // (len(pieces) - 1))
    v = np.array(v0, dtype=float)
    for a, b in zip(pieces[:-1], pieces[1:]):
        h = (b - a) / per
        inner = 1e-9 * (b - a)
        for j in range(per):
            s = a + j * h
            ts = (s, s + h / 2, s + h)
            xs = [curve.position(t) for t in ts]
            gs = [gamma_at(x) for x in xs]
            ds = [curve.velocity(min(max(t, a + inner), b - inner)) for t in ts]
            k1 = term(gs[0], ds[0], v)
            k2 = term(gs[1], ds[1], v + 0.5 * h * k1)
            k3 = term(gs[1], ds[1], v + 0.5 * h * k2)
            k4 = term(gs[2], ds[2], v + h * k3)
            v = v + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return v


def holonomy_matrix(metric: MetricField, spec: LoopSpec) -> np.ndarray:
    """Transport of a g-orthonormal frame at the base point, in that frame's coordinates."""
    e = orthonormal_frame(metric.at(spec.base_point))
    h = parallel_transport(metric, spec.loop, e, spec.step_count)
    return np.linalg.solve(e, h)


def transport_isometry_error(metric: MetricField, spec: LoopSpec) -> float:
    """Largest ``| |V_end| - |V_0| |`` over an orthonormal frame."""
    hf = holonomy_matrix(metric, spec)
    return float(np.max(np.abs(np.linalg.norm(hf, axis=0) - 1.0)))


def compound_matrix(a: np.ndarray, k: int) -> np.ndarray:
    """Matrix of ``Λ^k a`` on the basis ``e_I``, ``I`` increasing."""
    idx = list(itertools.combinations(range(a.shape[0]), k))
    if k == 0:
        return np.ones((1, 1))
    return np.array([[np.linalg.det(a[np.ix_(i, j)]) for j in idx] for i in idx])


def exterior_power_transport(h: np.ndarray, s0: np.ndarray) -> np.ndarray:
    """Coordinate k-form transported by the tangent map ``h``: ``σ(h⁻¹·, ..., h⁻¹·)``."""
    hinv = np.linalg.inv(h)
    out = s0
    for ax in range(s0.ndim):
        out = np.moveaxis(np.tensordot(out, hinv, axes=([ax], [0])), -1, ax)
    return out


def _rank(mat: np.ndarray, rel: float = RANK_REL_TOL, abs_tol: float = RANK_ABS_TOL) -> tuple[int, np.ndarray]:
    if mat.size == 0:
        return 0, np.zeros(0)
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv.size == 0 or sv[0] <= abs_tol:
        return 0, sv
    return int(np.sum(sv > max(rel * sv[0], abs_tol))), sv


def _skew_vec(a: np.ndarray) -> np.ndarray:
    i, j = np.triu_indices(a.shape[0], 1)
    return a[i, j]


def _skew_mat(v: np.ndarray, n: int) -> np.ndarray:
    a = np.zeros((n, n))
    i, j = np.triu_indices(n, 1)
    a[i, j] = v
    return a - a.T


def lie_closure_dimension(generators: Sequence[np.ndarray], rel: float = RANK_REL_TOL,
                          abs_tol: float = RANK_ABS_TOL) -> int:
    """Dimension of the Lie algebra generated by skew matrices."""
    if not generators:
        return 0
    n = generators[0].shape[0]
    mat = np.array([_skew_vec(g) for g in generators])
    r, sv = _rank(mat, rel, abs_tol)
    if r == 0:
        return 0
    scale = sv[0]
    basis = np.linalg.svd(mat)[2][:r]
    while True:
        mats = [_skew_mat(b, n) for b in basis]
        brackets = [_skew_vec(a @ b - b @ a) for a, b in itertools.combinations(mats, 2)]
        stacked = np.vstack([basis * scale] + ([np.array(brackets)] if brackets else []))
        r2, _ = _rank(stacked, rel, abs_tol * scale)
        if r2 == basis.shape[0] or r2 >= n * (n - 1) // 2:
            return min(r2, n * (n - 1) // 2)
        basis = np.linalg.svd(stacked)[2][:r2]


def curvature_span_dimension(metric: MetricField, x, include_first_derivative: bool = False) -> int:
    """Rank of the span of the curvature operators ``R(X∧Y)`` (and optionally ``∇_Z R(X∧Y)``) in so(n)."""
    x = np.asarray(x, dtype=float)
    g = metric.jet(x, 3 if include_first_derivative else 2)
    r, _ = riemann_jet(g)
    e = orthonormal_frame(g.value)
    n = metric.dim
    rf = to_frame(r.value, e)
    ops = [_skew_vec(rf[a, b].T) for a, b in itertools.combinations(range(n), 2)]
    if include_first_derivative:
        nab = nabla_jet(christoffel_jet(g.truncate(2)), r, 4).value
        nf = to_frame(nab, e)
        ops += [_skew_vec(nf[c, a, b].T) for c in range(n) for a, b in itertools.combinations(range(n), 2)]
    return _rank(np.array(ops))[0]


def default_loops(metric: MetricField, base_point, seed: int = DEFAULT_SEED, steps: int = DEFAULT_STEPS,
                  scales: Sequence[float] = LOOP_SCALES, random_loops: int = RANDOM_LOOPS) -> list[LoopSpec]:
    """Coordinate-plane parallelograms at several scales plus seeded random Fourier loops."""
    x0 = np.asarray(base_point, dtype=float)
    n = metric.dim
    width = np.min(np.minimum(x0 - metric.domain.lo, metric.domain.hi - x0))
    size = min(1.0, 0.5 * width)
    loops = []
    for scale in scales:
        for a, b in itertools.combinations(range(n), 2):
            ea, eb = np.eye(n)[a] * scale * size, np.eye(n)[b] * scale * size
            loops.append(LoopSpec(x0, parallelogram(x0, ea, eb), steps))
    rng = np.random.default_rng(seed)
    # low dimensions have few coordinate planes; top up so the fixed-form detector has enough loops
    for _ in range(max(random_loops, MIN_LOOPS - len(loops))):
        coeffs = rng.normal(size=(2, 2, n))
        coeffs *= 0.1 * size / np.abs(coeffs).sum(axis=(0, 1)).max()
        loops.append(LoopSpec(x0, fourier_loop(x0, coeffs), steps))
    return loops


def _fixed_subspace(hols: Sequence[np.ndarray], k: int, rel: float, abs_tol: float) -> np.ndarray:
    """Rows span the common fixed vectors of ``Λ^k h`` (orthonormal-frame coordinates)."""
    m = math.comb(hols[0].shape[0], k)
    stacked = np.vstack([compound_matrix(h, k) - np.eye(m) for h in hols])
    _, sv, vt = np.linalg.svd(stacked)
    sv = np.concatenate([sv, np.zeros(m - sv.size)])
    cut = max(rel * sv[0], abs_tol)
    return vt[sv <= cut]


def _coeffs_to_form(c: np.ndarray, n: int, k: int, frame: np.ndarray) -> np.ndarray:
    """Coordinate components of ``Σ_I c_I θ^I`` where ``θ`` is the coframe dual to ``frame``."""
    full = sum(ci * basis_form(n, idx) for ci, idx in zip(c, itertools.combinations(range(n), k)))
    coframe = np.linalg.inv(frame)  # coframe[a, i]
    for ax in range(k):
        full = np.moveaxis(np.tensordot(full, coframe, axes=([ax], [0])), -1, ax)
    return full


def radial_extension(metric: MetricField, x0, s0: np.ndarray, x, steps: int = 64) -> np.ndarray:
    """Value at ``x`` of the form obtained by transporting ``s0`` along the segment from ``x0``."""
    return parallel_transport(metric, segment(x0, x), s0, steps, degree=s0.ndim, check_domain=False)


def nabla_residual_of_extension(metric: MetricField, x0, s0: np.ndarray, offset: float = 0.05,
                                h: float = 1e-3) -> float:
    """Largest orthonormal-frame component of ``∇σ`` at a point near ``x0`` for the radial extension."""
    x0 = np.asarray(x0, dtype=float)
    n = metric.dim
    k = s0.ndim
    x1 = x0 + offset * np.ones(n) / math.sqrt(n)
    s1 = radial_extension(metric, x0, s0, x1)
    grads = []
    for i in range(n):
        dx = h * np.eye(n)[i]
        grads.append((radial_extension(metric, x0, s0, x1 + dx) - radial_extension(metric, x0, s0, x1 - dx)) / (2 * h))
    nab = np.array(grads)
    gam = christoffels(metric, x1)
    lett = "abcdefgh"[:k]
    for slot in range(k):
        src = lett[:slot] + "p" + lett[slot + 1:]
        nab = nab - np.einsum(f"pm{lett[slot]},{src}->m{lett}", gam, s1)
    return float(np.max(np.abs(to_frame(nab, orthonormal_frame(metric.at(x1)))))) if nab.size else 0.0


@dataclass
class HolonomyEstimate:
    """Numerical restricted-holonomy data at one base point (an estimated algebra dimension, not a certificate)."""

    algebra_dim: int
    fixed_form_subspaces: dict[int, list[np.ndarray]]
    loop_count: int
    tolerance_used: float
    curvature_span: int
    base_point: np.ndarray
    nabla_residuals: dict[int, list[float]] = field(default_factory=dict)
    isometry_error: float = 0.0

    def to_dict(self) -> dict:
        return {
            "estimated_algebra_dimension": self.algebra_dim,
            "curvature_span_dimension": self.curvature_span,
            "loop_count": self.loop_count,
            "tolerance_used": self.tolerance_used,
            "absolute_floor": RANK_ABS_TOL,
            "base_point": [float(v) for v in self.base_point],
            "transport_isometry_error": self.isometry_error,
            "fixed_form_subspaces": {
                str(k): [{"components": np.round(f, 12).tolist(), "nabla_residual": r}
                         for f, r in zip(v, self.nabla_residuals.get(k, []))]
                for k, v in sorted(self.fixed_form_subspaces.items())
            },
        }


def fixed_form_subspace(metric: MetricField, loops: Sequence[LoopSpec], degree: int,
                        hols: Optional[Sequence[np.ndarray]] = None) -> list[np.ndarray]:
    """Coordinate component arrays spanning the k-forms fixed by every loop's transport."""
    if len(loops) < MIN_LOOPS:
        raise ValueError(f"at least {MIN_LOOPS} loops are required")
    x0 = loops[0].base_point
    if any(np.max(np.abs(sp.base_point - x0)) > 1e-12 for sp in loops):
        raise ValueError("loops have inconsistent base points")
    hols = [holonomy_matrix(metric, sp) for sp in loops] if hols is None else hols
    frame = orthonormal_frame(metric.at(x0))
    rows = _fixed_subspace(hols, degree, RANK_REL_TOL, RANK_ABS_TOL)
    return [_coeffs_to_form(r, metric.dim, degree, frame) for r in rows]


def estimate_holonomy(metric: MetricField, base_point=None, degrees: Sequence[int] = (2,), seed: int = DEFAULT_SEED,
                      steps: int = DEFAULT_STEPS, loops: Optional[Sequence[LoopSpec]] = None,
                      with_residuals: bool = True) -> HolonomyEstimate:
    x0 = 0.5 * (metric.domain.lo + metric.domain.hi) if base_point is None else np.asarray(base_point, dtype=float)
    loops = default_loops(metric, x0, seed, steps) if loops is None else list(loops)
    hols = [holonomy_matrix(metric, sp) for sp in loops]
    logs = [np.real(logm(h)) for h in hols]
    logs = [0.5 * (a - a.T) for a in logs]
    dim = lie_closure_dimension(logs)
    fixed, residuals = {}, {}
    for k in degrees:
        fixed[k] = fixed_form_subspace(metric, loops, k, hols)
        residuals[k] = [nabla_residual_of_extension(metric, x0, f) for f in fixed[k]] if with_residuals else []
    iso = max(float(np.max(np.abs(np.linalg.norm(h, axis=0) - 1.0))) for h in hols)
    return HolonomyEstimate(dim, fixed, len(loops), RANK_REL_TOL, curvature_span_dimension(metric, x0), x0,
                            residuals, iso)


__all__ = [
    "Curve", "CurveOutsideDomainError", "HolonomyEstimate", "LoopSpec", "compound_matrix", "curvature_span_dimension",
    "default_loops", "estimate_holonomy", "exterior_power_transport", "fixed_form_subspace", "fourier_loop",
    "holonomy_matrix", "lie_closure_dimension", "nabla_residual_of_extension", "parallel_transport", "parallelogram",
    "polygon", "radial_extension", "segment", "transport_isometry_error",
]
