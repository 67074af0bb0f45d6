"""Metric cones, sine-cosine joins and products, all as explicit product charts.

Chart layouts are fixed: a cone over ``(M, g)`` uses ``(u..., t)`` with the
radial coordinate last; a join of ``g1`` and ``g2`` uses ``(u1..., u2..., θ)``;
a product uses ``(x1..., x2...)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import jets
from .charts import ChartDomain
from .hypersurface import Embedding
from .riemann import MetricField
from .summary import ResidualSummary

APEX_CUTOFF = 0.1


def _box(*domains: ChartDomain, extra=()) -> ChartDomain:
    lo = np.concatenate([d.lo for d in domains] + [np.array([a for a, _ in extra])])
    hi = np.concatenate([d.hi for d in domains] + [np.array([b for _, b in extra])])
    preds = [(d, d.predicate) for d in domains if d.predicate is not None]
    if not preds:
        return ChartDomain(lo, hi)
    offsets = np.cumsum([0] + [d.dim for d in domains])
    slices = {id(d): slice(offsets[i], offsets[i + 1]) for i, d in enumerate(domains)}
    return ChartDomain(lo, hi, lambda x: all(p(x[slices[id(d)]]) for d, p in preds))


def _sub_jet(metric: MetricField, x0, order: int, positions) -> jets.Jet:
    g = metric.jet(x0[list(positions)], order)
    out = jets.embed_vars(g, len(x0), positions)
    out.point = x0
    return out


@dataclass(frozen=True, eq=False)
class ConeSpec:
    base: MetricField
    radial_range: tuple[float, float]
    result: MetricField


def cone_metric(base: MetricField, radial_range=(0.5, 2.0)) -> MetricField:
    """``t² g + dt²`` on ``base.domain × radial_range``."""
    return cone(base, radial_range).result


def cone(base: MetricField, radial_range=(0.5, 2.0)) -> ConeSpec:
    lo, hi = (float(v) for v in radial_range)
    if not 0 < lo < hi or not math.isfinite(hi):
        raise ValueError(f"radial range must lie in (0, inf), got {radial_range}")
    lo = max(lo, APEX_CUTOFF)
    n = base.dim

    def jet_fn(x0, order):
        t = jets.variables(x0, order)[n]
        g = _sub_jet(base, x0, order, range(n))
        return jets.block_diag(g * (t * t), jets.as_jet(np.ones((1, 1)), n + 1, order, x0))

    result = MetricField(n + 1, jet_fn=jet_fn, domain=_box(base.domain, extra=[(lo, hi)]),
                         label=f"cone({base.label})", einstein=False)
    return ConeSpec(base, (lo, hi), result)


def cone_slice(spec: ConeSpec, t: float = 1.0) -> Embedding:
    """Base manifold sitting at radius ``t``; an extrinsic hypersphere with ``|λ| = 1/t``."""
    lo, hi = spec.radial_range
    if not lo < t < hi:
        raise ValueError(f"slice radius {t} outside the cone chart {spec.radial_range}")
    n = spec.base.dim
    return Embedding(spec.result, lambda u: jets.concatenate([u, jets.as_jet(np.array([t]), n, u.order, u.value)]),
                     domain=spec.base.domain, label=f"{spec.result.label}|t={t:g}")


def sine_cone_join(g1: MetricField, g2: MetricField, theta_range=(0.05, math.pi / 2 - 0.05)) -> MetricField:
    """``sin²θ g1 + cos²θ g2 + dθ²`` in coordinates ``(u1, u2, θ)``."""
    if g1.dim < 1 or g2.dim < 1:
        raise ValueError("join factors must have dimension >= 1")
    lo, hi = (float(v) for v in theta_range)
    if not 0 < lo < hi < math.pi / 2:
        raise ValueError(f"θ range must lie inside (0, π/2), got {theta_range}")
    n1, n2 = g1.dim, g2.dim
    n = n1 + n2 + 1

    def jet_fn(x0, order):
        th = jets.variables(x0, order)[n - 1]
        a = _sub_jet(g1, x0, order, range(n1)) * (jets.sin(th) ** 2)
        b = _sub_jet(g2, x0, order, range(n1, n1 + n2)) * (jets.cos(th) ** 2)
        return jets.block_diag(a, b, jets.as_jet(np.ones((1, 1)), n, order, x0))

    return MetricField(n, jet_fn=jet_fn, domain=_box(g1.domain, g2.domain, extra=[(lo, hi)]),
                       label=f"join({g1.label}, {g2.label})")


def product_metric(g1: MetricField, g2: MetricField) -> MetricField:
    n1, n2 = g1.dim, g2.dim

    def jet_fn(x0, order):
        return jets.block_diag(_sub_jet(g1, x0, order, range(n1)), _sub_jet(g2, x0, order, range(n1, n1 + n2)))

    return MetricField(n1 + n2, jet_fn=jet_fn, domain=_box(g1.domain, g2.domain),
                       label=f"{g1.label} × {g2.label}", einstein=False)


def theta_slice(join: MetricField, n1: int, theta: float) -> Embedding:
    """Level set ``θ = const`` of a join; principal curvatures ``-cot θ`` on the first factor, ``tan θ`` on the second."""
    n = join.dim - 1
    sub = ChartDomain(join.domain.lo[:n], join.domain.hi[:n])
    return Embedding(join, lambda u: jets.concatenate([u, jets.as_jet(np.array([theta]), n, u.order, u.value)]),
                     domain=sub, label=f"{join.label}|θ={theta:g}")


def _polar_map(n1: int, n2: int):
    """``(u1, u2, θ, r) ↦ (u1, r sinθ, u2, r cosθ)``."""
    def f(y):
        u1, u2, th, r = y[:n1], y[n1:n1 + n2], y[n1 + n2], y[n1 + n2 + 1]
        return jets.concatenate([u1, jets.stack([r * jets.sin(th)]), u2, jets.stack([r * jets.cos(th)])])
    return f


def join_slice_in_product(c1: ConeSpec, c2: ConeSpec) -> Embedding:
    """The join at ``r = 1`` inside the product of two cones, an extrinsic hypersphere."""
    n1, n2 = c1.base.dim, c2.base.dim
    lo = max(math.asin(min(c1.radial_range[0], 0.99)), math.acos(min(c2.radial_range[1], 1.0)), 0.05)
    hi = min(math.acos(min(c2.radial_range[0], 0.99)), math.asin(min(c1.radial_range[1], 1.0)), math.pi / 2 - 0.05)
    if not lo < hi:
        raise ValueError("radial ranges leave no room for the unit join slice")
    amb = product_metric(c1.result, c2.result)
    f = _polar_map(n1, n2)
    dom = _box(c1.base.domain, c2.base.domain, extra=[(lo, hi)])
    return Embedding(amb, lambda u: f(jets.concatenate([u, jets.as_jet(np.ones(1), u.nvars, u.order, u.value)])),
                     domain=dom, label=f"join slice in {amb.label}")


def product_cone_isometry_residual(g1: MetricField, g2: MetricField, sample) -> ResidualSummary:
    """Compare the pulled-back product of cones with the cone over the join, sample-wise."""
    n1, n2 = g1.dim, g2.dim
    n = n1 + n2 + 2
    prod = product_metric(cone(g1, (1e-3, 1e3)).result, cone(g2, (1e-3, 1e3)).result)
    target = cone(sine_cone_join(g1, g2, (1e-6, math.pi / 2 - 1e-6)), (1e-3, 1e3)).result
    f = _polar_map(n1, n2)
    res = []
    for y in np.atleast_2d(np.asarray(sample, dtype=float)):
        th, r = y[n - 2], y[n - 1]
        if y.shape[0] != n or r <= 0 or not 0 < th < math.pi / 2:
            raise ValueError(f"degenerate sample {y}: need r > 0 and 0 < θ < π/2")
        phi = f(jets.variables(y, 1))
        jac = phi.d1
        pulled = jac.T @ prod.at(phi.value) @ jac
        res.append(float(np.max(np.abs(pulled - target.at(y)))))
    return ResidualSummary.from_values("product_cone_isometry", res)


def join_cone_domain(g1: MetricField, g2: MetricField, r_range=(0.5, 2.0)) -> ChartDomain:
    return _box(g1.domain, g2.domain, extra=[(0.05, math.pi / 2 - 0.05), r_range])


__all__ = [
    "APEX_CUTOFF", "ConeSpec", "cone", "cone_metric", "cone_slice", "join_cone_domain", "join_slice_in_product",
    "product_cone_isometry_residual", "product_metric", "sine_cone_join", "theta_slice",
]
