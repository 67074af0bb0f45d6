"""Special Killing form identities for the forms induced on an umbilical hypersurface, and the cone lift.

For a k-form σ on the ambient and an umbilical hypersurface with ``II = λ g N``
the candidate is ``γ = i*(N ⌟ σ)`` (degree k-1) and ``β = i*σ`` (degree k).
All residual arrays carry the direction ``X = ∂_m`` on their first axis and are
measured in a g-orthonormal frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import jets
from .forms import FormField, codifferential_jet, d_jet, nabla_jet, wedge_values
from .hypersurface import Embedding, pullback_fields, second_fundamental_form
from .riemann import MetricField, christoffel_jet, orthonormal_frame, to_frame
from .summary import ResidualSummary

ZERO_TOL = 1e-12
NON_PARALLEL_TOL = 1e-6
IDENTITIES = ("i", "ii", "iii", "iv", "closed", "coclosed")
RELATIONS = ("d_gamma", "codiff_beta")


class DegenerateCandidateError(ValueError):
    """γ vanishes on every sample, so the check has nothing to witness."""


@dataclass
class KillingCandidate:
    gamma: FormField
    beta: FormField
    k: int
    lam: float
    metric: MetricField
    label: str = "candidate"
    rescaling: float = 1.0
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.gamma.degree != self.k - 1 or self.beta.degree != self.k:
            raise ValueError(f"degree mismatch: γ has degree {self.gamma.degree}, β has {self.beta.degree}, k = {self.k}")
        if self.gamma.dim != self.metric.dim or self.beta.dim != self.metric.dim:
            raise ValueError("forms and metric live on charts of different dimension")

    @property
    def n(self) -> int:
        return self.metric.dim

    def normalized(self) -> "KillingCandidate":
        """Rescale the metric by λ² so that λ² = 1 (γ scales by 1/|λ|, β is unchanged)."""
        if abs(self.lam) < 1e-14:
            raise ValueError("cannot normalise a totally geodesic candidate (λ = 0)")
        c = abs(self.lam)
        if abs(c - 1.0) < 1e-14:
            return self
        base = self.metric
        metric = MetricField(base.dim, jet_fn=lambda x0, order: base.jet(x0, order) * (c * c), domain=base.domain,
                             label=f"{c * c:.6g}·{base.label}")
        g = self.gamma
        gamma = FormField(g.degree, g.dim, jet_fn=lambda x0, order: g.jet(x0, order) * (1.0 / c), metric=metric,
                          label=g.label)
        b = self.beta
        beta = FormField(b.degree, b.dim, jet_fn=b.jet, metric=metric, label=b.label, trivially_zero=b.trivially_zero)
        return replace(self, gamma=gamma, beta=beta, lam=math.copysign(1.0, self.lam), metric=metric,
                       rescaling=self.rescaling * c * c,
                       notes=self.notes + [f"metric rescaled by λ² = {c * c:.12g} before the cone lift"])


def candidate_from_embedding(e: Embedding, sigma: FormField, lam: Optional[float] = None) -> KillingCandidate:
    gamma, beta = pullback_fields(e, sigma)
    if lam is None:
        lam = second_fundamental_form(e, 0.5 * (e.domain.lo + e.domain.hi)).lambda_estimate
    return KillingCandidate(gamma, beta, sigma.degree, float(lam), gamma.metric,
                            label=f"{sigma.label} on {e.label}")


@dataclass
class PointTerms:
    """All derivatives needed by the identities at one point."""

    g: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    nabla_gamma: np.ndarray
    d_gamma: np.ndarray
    nabla_d_gamma: np.ndarray
    nabla_beta: np.ndarray
    codiff_beta: np.ndarray
    nabla_codiff_beta: np.ndarray
    d_beta: Optional[np.ndarray]
    codiff_gamma: Optional[np.ndarray]


def point_terms(c: KillingCandidate, u) -> PointTerms:
    k, n = c.k, c.n
    g = c.metric.jet(u, 2)
    gam = christoffel_jet(g)
    gj = c.gamma.jet(u, 2)
    bj = c.beta.jet(u, 2)
    dg = d_jet(gj, k - 1)
    if k <= n:
        db = codifferential_jet(g.truncate(1), gam, bj, k)
        nab_db = nabla_jet(gam, db, k - 1).value
        db = db.value
        d_beta = d_jet(bj.truncate(1), k).value if k < n else None
    else:
        db = np.zeros((n,) * (k - 1))
        nab_db = np.zeros((n,) * k)
        d_beta = None
    co_g = codifferential_jet(g.truncate(0), gam.truncate(0), gj.truncate(1), k - 1).value if k >= 2 else None
    return PointTerms(
        g=g.value, gamma=gj.value, beta=bj.value,
        nabla_gamma=nabla_jet(gam, gj.truncate(1), k - 1).value,
        d_gamma=dg.truncate(0).value,
        nabla_d_gamma=nabla_jet(gam, dg, k).value if k <= n else np.zeros((n,) * (k + 1)),
        nabla_beta=nabla_jet(gam, bj.truncate(1), k).value,
        codiff_beta=db, nabla_codiff_beta=nab_db, d_beta=d_beta, codiff_gamma=co_g,
    )


def _frame_max(t: np.ndarray, frame: np.ndarray) -> float:
    if t is None or t.size == 0:
        return 0.0
    return float(np.max(np.abs(to_frame(t, frame)))) if t.ndim else float(abs(t))


def _wedge_rows(g: np.ndarray, s: np.ndarray, q: int) -> np.ndarray:
    """``[X♭ ∧ s for X = ∂_m]`` stacked on axis 0."""
    return np.array([wedge_values(g[m], 1, s, q) for m in range(g.shape[0])])


def identity_residuals_at(c: KillingCandidate, u, terms: Optional[PointTerms] = None) -> dict[str, float]:
    t = terms or point_terms(c, u)
    k, n, lam = c.k, c.n, c.lam
    frame = orthonormal_frame(t.g)
    m = n - k + 1
    r1 = t.nabla_gamma - t.d_gamma / k
    r2 = t.nabla_d_gamma + k * lam**2 * _wedge_rows(t.g, t.gamma, k - 1) if k <= n else t.nabla_d_gamma
    if m > 0:
        r3 = t.nabla_beta + _wedge_rows(t.g, t.codiff_beta, k - 1) / m
        r4 = t.nabla_codiff_beta - m * lam**2 * t.beta
    else:
        r3, r4 = t.nabla_beta, t.nabla_codiff_beta
    return {
        "i": _frame_max(r1, frame), "ii": _frame_max(r2, frame), "iii": _frame_max(r3, frame),
        "iv": _frame_max(r4, frame), "closed": _frame_max(t.d_beta, frame),
        "coclosed": _frame_max(t.codiff_gamma, frame),
    }


def relation_residuals_at(c: KillingCandidate, u, terms: Optional[PointTerms] = None) -> dict[str, float]:
    t = terms or point_terms(c, u)
    k, n, lam = c.k, c.n, c.lam
    frame = orthonormal_frame(t.g)
    beta = t.beta if k <= n else np.zeros((n,) * k)
    return {"d_gamma": _frame_max(t.d_gamma + k * lam * beta, frame),
            "codiff_beta": _frame_max(t.codiff_beta + (n - k + 1) * lam * t.gamma, frame)}


def _summaries(rows: list[dict[str, float]], names) -> dict[str, ResidualSummary]:
    return {name: ResidualSummary.from_values(name, [r[name] for r in rows]) for name in names}


def special_killing_residuals(c: KillingCandidate, sample) -> dict[str, ResidualSummary]:
    """Residual summaries of identities (i)-(iv), closedness of β and coclosedness of γ."""
    rows = [identity_residuals_at(c, u) for u in np.atleast_2d(sample)]
    return _summaries(rows, IDENTITIES)


def relation_check(c: KillingCandidate, sample) -> dict[str, ResidualSummary]:
    """Residuals of ``dγ + kλβ`` and ``d*β + (n-k+1)λγ``."""
    rows = [relation_residuals_at(c, u) for u in np.atleast_2d(sample)]
    return _summaries(rows, RELATIONS)


@dataclass
class KillingReport:
    identities: dict[str, ResidualSummary]
    relations: dict[str, ResidualSummary]
    gamma_max: float
    beta_max: float
    status: str
    tolerance: float

    @property
    def degenerate(self) -> bool:
        return self.status == "degenerate"

    @property
    def all_summaries(self) -> dict[str, ResidualSummary]:
        return {**self.identities, **self.relations}


def verify_candidate(c: KillingCandidate, sample, tol: float = 1e-8) -> KillingReport:
    """Identities and relations in one sweep; status is ``pass``, ``fail`` or ``degenerate``."""
    ids, rels, gmax, bmax = [], [], 0.0, 0.0
    for u in np.atleast_2d(sample):
        t = point_terms(c, u)
        ids.append(identity_residuals_at(c, u, t))
        rels.append(relation_residuals_at(c, u, t))
        frame = orthonormal_frame(t.g)
        gmax = max(gmax, _frame_max(t.gamma, frame))
        bmax = max(bmax, _frame_max(t.beta, frame) if c.k <= c.n else 0.0)
    identities, relations = _summaries(ids, IDENTITIES), _summaries(rels, RELATIONS)
    if gmax < ZERO_TOL or bmax < ZERO_TOL:
        status = "degenerate"
    else:
        ok = all(s.passes(tol) for s in (*identities.values(), *relations.values()))
        status = "pass" if ok else "fail"
    return KillingReport(identities, relations, gmax, bmax, status, tol)


def is_degenerate(c: KillingCandidate, sample) -> bool:
    return verify_candidate(c, sample).degenerate


def non_parallel_check(c: KillingCandidate, sample, tol: float = NON_PARALLEL_TOL) -> tuple[bool, np.ndarray]:
    """``(max |∇γ| > tol, point of the maximum)``; refuses a γ that vanishes on all samples."""
    best, witness, gmax = -1.0, None, 0.0
    for u in np.atleast_2d(sample):
        t = point_terms(c, u)
        frame = orthonormal_frame(t.g)
        gmax = max(gmax, _frame_max(t.gamma, frame))
        v = _frame_max(t.nabla_gamma, frame)
        if v > best:
            best, witness = v, np.asarray(u, dtype=float)
    if gmax < ZERO_TOL:
        raise DegenerateCandidateError(f"{c.label}: γ vanishes on all samples")
    return best > tol, witness


def _include(x, n: int, k: int):
    """Pad a k-form on an n-chart to the (n+1)-chart of a cone (zero on the radial index)."""
    inc = np.eye(n, n + 1)
    lett = "abcdefgh"[:k]
    for slot in range(k):
        src = lett[:slot] + "z" + lett[slot + 1:]
        x = jets.einsum(f"{src},z{lett[slot]}->{lett}", x, inc)
    return x


def cone_lift(psi: FormField, k: int, cone_metric: Optional[MetricField] = None) -> FormField:
    """``ψ̃ = (1/k) d(t^k ψ) = t^{k-1} dt ∧ ψ + (1/k) t^k dψ`` on the chart ``(u, t)``."""
    if psi.degree != k - 1:
        raise ValueError(f"cone lift of degree k = {k} needs a ({k - 1})-form, got degree {psi.degree}")
    n = psi.dim
    dt = np.eye(n + 1)[n]

    def jet_fn(x0, order):
        u0 = x0[:n]
        pj = psi.jet(u0, order + 1)
        dpsi = d_jet(pj, k - 1) if k - 1 < n else None
        pj = pj.truncate(order)
        emb = lambda j: _reembed(j, n, x0)
        t = jets.variables(x0, order)[n]
        out = wedge_values(dt, 1, _include(emb(pj), n, k - 1), k - 1) * (t ** (k - 1) if k > 1 else 1.0)
        if dpsi is not None:
            out = out + _include(emb(dpsi), n, k) * (t**k * (1.0 / k))
        return out

    return FormField(k, n + 1, jet_fn=jet_fn, metric=cone_metric, label=f"lift({psi.label})")


def _reembed(j: jets.Jet, n: int, x0) -> jets.Jet:
    out = jets.embed_vars(j, n + 1, range(n))
    out.point = x0
    return out


def lift_candidate(c: KillingCandidate, cone_metric: MetricField) -> FormField:
    """Lift of ``-λ γ`` after normalising λ² = 1; it reproduces the ambient σ on a flat cone."""
    c = c.normalized()
    g = c.gamma
    sign = -c.lam
    psi = FormField(g.degree, g.dim, jet_fn=lambda x0, order: g.jet(x0, order) * sign, metric=c.metric, label=g.label)
    return cone_lift(psi, c.k, cone_metric)


def parallel_residual(form: FormField, metric: MetricField, sample) -> ResidualSummary:
    """Largest orthonormal-frame component of ``∇form`` at each sample point."""
    vals = []
    for x in np.atleast_2d(sample):
        g = metric.jet(x, 1)
        nab = nabla_jet(christoffel_jet(g), form.jet(x, 1), form.degree).value
        vals.append(float(np.max(np.abs(to_frame(nab, orthonormal_frame(g.value))))))
    return ResidualSummary.from_values(f"nabla {form.label}", vals)


__all__ = [
    "DegenerateCandidateError", "IDENTITIES", "KillingCandidate", "KillingReport", "RELATIONS",
    "candidate_from_embedding", "cone_lift", "identity_residuals_at", "is_degenerate", "lift_candidate",
    "non_parallel_check", "parallel_residual", "point_terms", "relation_check", "relation_residuals_at",
    "special_killing_residuals", "verify_candidate",
]
