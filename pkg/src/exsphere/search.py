"""Derivative-free search for umbilical hypersurfaces among normal graphs.

A family perturbs a base hypersurface along its unit normal,
``x_θ(u) = x(u) + f_θ(u) N(u)`` with ``f_θ = Σ θ_i b_i``.  The objective is
the mean squared umbilicity residual over a fixed sample plus the sample
variance of the mean curvature λ.  It vanishes exactly on extrinsic spheres
(and totally geodesic members) of the family.

The objective is evaluated in batch from precomputed base data; the result
agrees with :func:`hypersurface.umbilicity_residual` on the member embedding,
which the tests check.  A search that fails to find a zero is data, not
evidence of nonexistence.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from . import jets, zoo
from .charts import DEFAULT_SEED, ChartDomain
from .hypersurface import Embedding, tangent_jets

IMMERSION_TOL = 1e-3
PENALTY = 1e6
MAX_PARAMS = 32
MIN_BUDGET = 100
CONFIG_VERSION = 1
VERDICTS = ("converged_to_umbilical", "stalled_above_floor", "immersion_failure")
# reflection, expansion, contraction, shrink
SIMPLEX_COEFFICIENTS = (1.0, 2.0, 0.5, 0.5)


@dataclass(eq=False)
class HypersurfaceFamily:
    base: Embedding
    perturbation_basis: Sequence[Callable]
    trust_radius: float = 0.5
    label: str = "family"
    exploratory: bool = False

    @property
    def param_dim(self) -> int:
        return len(self.perturbation_basis)

    def _check(self, params) -> np.ndarray:
        p = np.asarray(params, dtype=float).reshape(-1)
        if p.shape != (self.param_dim,):
            raise ValueError(f"{self.label}: expected {self.param_dim} parameters, got {p.shape[0]}")
        return p

    def profile(self, params, u: jets.Jet):
        """``f_θ`` as a scalar jet (or float)."""
        p = self._check(params)
        out = 0.0
        for t, b in zip(p, self.perturbation_basis):
            if t != 0.0:
                out = out + float(t) * b(u)
        return out

    def member(self, params) -> Embedding:
        """The displaced hypersurface; ``params = 0`` returns the base map unchanged."""
        p = self._check(params)
        base = self.base

        def map_jet(u0, order):
            x = base.map_jet(u0, order)
            if not np.any(p):
                return x
            normal = tangent_jets(base, u0, order).normal
            f = jets.as_jet(self.profile(p, jets.variables(u0, order)), base.intrinsic_dim, order, u0)
            return x + jets.outer(f, normal)

        return Embedding(base.ambient, map_jet_fn=map_jet, domain=base.domain, orientation=base.orientation,
                         label=f"{self.label}[θ]", max_order=base.max_order - 1)


@dataclass
class _BaseData:
    sample: np.ndarray
    x: np.ndarray      # (P, m)
    x1: np.ndarray     # (P, m, n)
    x2: np.ndarray     # (P, m, n, n)
    n0: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    b0: np.ndarray     # (P, K)
    b1: np.ndarray     # (P, K, n)
    b2: np.ndarray     # (P, K, n, n)


def _precompute(family: HypersurfaceFamily, sample) -> _BaseData:
    sample = np.atleast_2d(np.asarray(sample, dtype=float))
    cols = {k: [] for k in ("x", "x1", "x2", "n0", "n1", "n2", "b0", "b1", "b2")}
    for u in sample:
        t = tangent_jets(family.base, u, 2)
        cols["x"].append(t.x.value)
        cols["x1"].append(t.x.d1)
        cols["x2"].append(t.x.d2)
        cols["n0"].append(t.normal.value)
        cols["n1"].append(t.normal.d1)
        cols["n2"].append(t.normal.d2)
        uj = jets.variables(u, 2)
        bs = [jets.as_jet(b(uj), len(u), 2, u) for b in family.perturbation_basis]
        cols["b0"].append([b.value for b in bs])
        cols["b1"].append([b.d1 for b in bs])
        cols["b2"].append([b.d2 for b in bs])
    return _BaseData(sample, **{k: np.array(v, dtype=float) for k, v in cols.items()})


@dataclass(frozen=True)
class ObjectiveValue:
    value: float
    umbilic_term: float
    lambda_variance: float
    lambda_values: tuple = ()
    immersed: bool = True
    diagnostic: str = ""


def _ambient_data(metric, xs: np.ndarray):
    gs, dgs = [], []
    for x in xs:
        gj = metric.jet(x, 1)
        gs.append(gj.value)
        dgs.append(gj.d1)
    g, dg = np.array(gs), np.array(dgs)     # dg[p, i, j, k] = ∂_k g_ij
    ginv = np.linalg.inv(g)
    low = 0.5 * (np.einsum("plji->plij", dg) + dg - np.einsum("pijl->plij", dg))
    return g, np.einsum("pkl,plij->pkij", ginv, low)


def _evaluate(family: HypersurfaceFamily, data: _BaseData, params: np.ndarray) -> ObjectiveValue:
    e = family.base
    n = e.intrinsic_dim
    f = data.b0 @ params
    df = np.einsum("pka,k->pa", data.b1, params)
    ddf = np.einsum("pkab,k->pab", data.b2, params)
    x = data.x + f[:, None] * data.n0
    jac = data.x1 + np.einsum("pi,pa->pia", data.n0, df) + f[:, None, None] * data.n1
    cross = np.einsum("pia,pb->piab", data.n1, df)
    hess = data.x2 + np.einsum("pi,pab->piab", data.n0, ddf) + cross + cross.transpose(0, 1, 3, 2) \
        + f[:, None, None, None] * data.n2
    dom = e.ambient.domain
    outside = [i for i, xi in enumerate(x) if not dom.contains(xi)]
    if outside:
        return ObjectiveValue(PENALTY, math.nan, math.nan, (), False,
                              f"member leaves the ambient chart at u = {data.sample[outside[0]].tolist()}")
    gbar, gam = _ambient_data(e.ambient, x)
    chol = np.linalg.cholesky(gbar)
    smin = np.linalg.svd(np.einsum("pji,pja->pia", chol, jac), compute_uv=False)[:, -1]
    if smin.min() <= IMMERSION_TOL:
        i = int(np.argmin(smin))
        return ObjectiveValue(PENALTY, math.nan, math.nan, (), False,
                              f"σ_min = {smin[i]:.3e} at u = {data.sample[i].tolist()}")
    nu = np.linalg.svd(jac.transpose(0, 2, 1))[2][:, -1, :]
    normal = np.linalg.solve(gbar, nu[..., None])[..., 0]
    normal /= np.sqrt(np.einsum("pi,pij,pj->p", normal, gbar, normal))[:, None]
    sign = np.sign(np.linalg.det(np.concatenate([jac, normal[..., None]], axis=2))) * e.orientation
    normal *= sign[:, None]
    g = np.einsum("pia,pij,pjb->pab", jac, gbar, jac)
    accel = hess + np.einsum("pikl,pka,plb->piab", gam, jac, jac)
    second = np.einsum("piab,pij,pj->pab", accel, gbar, normal)
    shape = np.linalg.solve(g, second)
    lam = np.trace(shape, axis1=1, axis2=2) / n
    free = shape - lam[:, None, None] * np.eye(n)
    umb2 = np.einsum("pab,pba->p", free, free)
    umb_term = float(np.mean(umb2))
    var = float(np.var(lam, ddof=1)) if lam.size > 1 else 0.0
    return ObjectiveValue(umb_term + var, umb_term, var, tuple(float(v) for v in lam))


def evaluate(family: HypersurfaceFamily, params, sample) -> ObjectiveValue:
    """Objective with both terms reported; immersion failures give the penalty sentinel."""
    p = family._check(params)
    if np.linalg.norm(p) > family.trust_radius:
        raise ValueError(f"‖θ‖ = {np.linalg.norm(p):.3g} exceeds the trust radius {family.trust_radius}")
    return _evaluate(family, _precompute(family, sample), p)


def objective(family: HypersurfaceFamily, params, sample) -> float:
    return evaluate(family, params, sample).value


# -- families ----------------------------------------------------------------------------------
def _gaussian(center, width: float) -> Callable:
    c = np.asarray(center, dtype=float)

    def b(u):
        d = u - c
        return jets.exp(-(jets.einsum("i,i->", d, d) if jets.is_jet(d) else d @ d) / (2 * width * width))

    return b


def _odd_pair(center, width: float) -> Callable:
    plus, minus = _gaussian(center, width), _gaussian(-np.asarray(center, dtype=float), width)
    return lambda u: plus(u) - minus(u)


def _bump_centers(dim: int, count: int, seed: int) -> np.ndarray:
    return ChartDomain.box(-0.7, 0.7, dim).sample(count, seed, margin=0.0)


def s3_in_r4(param_dim: int = 8, width: float = 0.6, seed: int = DEFAULT_SEED) -> HypersurfaceFamily:
    """Unit S³ in ℝ⁴ perturbed by Gaussian bumps in its stereographic chart."""
    base = zoo.sphere_in_flat(4)
    basis = [_gaussian(c, width) for c in _bump_centers(3, param_dim, seed)]
    return HypersurfaceFamily(base, basis, 0.5, "s3-in-r4")


def equator_in_s4(param_dim: int = 8, width: float = 0.6, seed: int = DEFAULT_SEED) -> HypersurfaceFamily:
    """Great S³ through the chart center of S⁴, perturbed by odd bump pairs.

    Odd profiles keep the family away from the nearby small spheres, so a
    zero of the objective is totally geodesic.
    """
    base = zoo.hyperplane(4, zoo.sphere_metric(4))
    basis = [_odd_pair(c, width) for c in _bump_centers(3, param_dim, seed)]
    return HypersurfaceFamily(base, basis, 0.5, "equator-in-s4")


def _unit_vector(u):
    return zoo.inverse_stereographic(u)


def _cp2_basis() -> list[Callable]:
    out = []
    for i in range(4):
        for j in range(i, 4):
            out.append(lambda u, i=i, j=j: _unit_vector(u)[i] * _unit_vector(u)[j])

    def hopf_a(u):
        s = _unit_vector(u)
        q = s[0] * s[0] + s[1] * s[1]
        return q * q

    def hopf_b(u):
        s = _unit_vector(u)
        a = s[0] * s[2] + s[1] * s[3]
        b = s[0] * s[3] - s[1] * s[2]
        return a * a + b * b

    return out + [hopf_a, hopf_b]


def cp2_probe(rho: float = math.atan(0.3)) -> HypersurfaceFamily:
    """Distance sphere in CP² with quadratic (ellipsoid-type) and two Hopf-invariant quartic profiles.

    Exploratory: no threshold is attached to the floor this family reaches.
    """
    base = zoo.cp2_geodesic_sphere(rho)
    return HypersurfaceFamily(base, _cp2_basis(), 0.15, "cp2-probe", exploratory=True)


FAMILIES = {"s3-in-r4": s3_in_r4, "equator-in-s4": equator_in_s4, "cp2-probe": cp2_probe}


def make_family(name: str, param_dim: Optional[int] = None) -> HypersurfaceFamily:
    if name not in FAMILIES:
        raise ValueError(f"unknown family {name!r}; known: {', '.join(FAMILIES)}")
    fam = FAMILIES[name]() if name == "cp2-probe" else FAMILIES[name](**({} if param_dim is None else {"param_dim": param_dim}))
    if param_dim is not None and fam.param_dim != param_dim:
        raise ValueError(f"family {name!r} has {fam.param_dim} parameters, config asks for {param_dim}")
    return fam


# -- optimization ------------------------------------------------------------------------------
@dataclass
class SearchConfig:
    family: str
    param_dim: int
    budget: int = 2000
    seed: int = 0
    converged: float = 1e-6
    start_radius: float = 0.2
    initial_step: float = 0.05
    sample_count: int = 24
    xatol: float = 1e-10
    fatol: float = 1e-16
    schema_version: int = CONFIG_VERSION

    def __post_init__(self):
        if not 1 <= self.param_dim <= MAX_PARAMS:
            raise ValueError(f"param_dim must be in 1..{MAX_PARAMS}")
        if self.budget < MIN_BUDGET:
            raise ValueError(f"budget must be at least {MIN_BUDGET} evaluations")
        if self.sample_count < 2:
            raise ValueError("sample_count must be at least 2")
        if self.schema_version != CONFIG_VERSION:
            raise ValueError(f"unsupported schema_version {self.schema_version}")

    @classmethod
    def from_dict(cls, data: dict) -> "SearchConfig":
        if not isinstance(data, dict):
            raise ValueError("search config must be a JSON object")
        known = set(cls.__dataclass_fields__) | {"thresholds"}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown search config fields: {sorted(extra)}")
        for key in ("family", "param_dim"):
            if key not in data:
                raise ValueError(f"search config needs {key!r}")
        d = dict(data)
        thresholds = d.pop("thresholds", {}) or {}
        if set(thresholds) - {"converged"}:
            raise ValueError(f"unknown thresholds: {sorted(set(thresholds) - {'converged'})}")
        if "converged" in thresholds:
            d["converged"] = thresholds["converged"]
        ints = ("param_dim", "budget", "seed", "sample_count", "schema_version")
        for k in ints:
            if k in d and (not isinstance(d[k], int) or isinstance(d[k], bool)):
                raise ValueError(f"{k} must be an integer")
        if not isinstance(d["family"], str):
            raise ValueError("family must be a string")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["thresholds"] = {"converged": d.pop("converged")}
        return d


def load_config(path) -> SearchConfig:
    with open(path, encoding="utf-8") as fh:
        return SearchConfig.from_dict(json.load(fh))


@dataclass
class SearchResult:
    family: str
    best_params: list
    best_objective: float
    evaluations: int
    trace: list
    verdict: str
    umbilic_term: float = math.nan
    lambda_variance: float = math.nan
    lambda_mean: float = math.nan
    lambda_max_abs: float = math.nan
    immersion_failures: int = 0
    budget_exhausted: bool = False
    exploratory: bool = False
    message: str = ""
    config: dict = field(default_factory=dict)

    @property
    def floor(self) -> float:
        return self.best_objective

    def to_dict(self) -> dict:
        return asdict(self)


def start_point(config: SearchConfig, param_dim: int) -> np.ndarray:
    rng = np.random.default_rng(config.seed)
    v = rng.normal(size=param_dim)
    return config.start_radius * v / np.linalg.norm(v)


def optimize(family: HypersurfaceFamily, config: SearchConfig, sample=None) -> SearchResult:
    """Nelder–Mead descent from a seeded start; deterministic for a fixed config."""
    if family.param_dim != config.param_dim:
        raise ValueError(f"family has {family.param_dim} parameters, config asks for {config.param_dim}")
    if sample is None:
        sample = family.base.sample(config.sample_count, DEFAULT_SEED)
    data = _precompute(family, sample)
    failures = 0

    def fun(p):
        nonlocal failures
        if np.linalg.norm(p) > family.trust_radius:
            failures += 1
            return PENALTY + float(np.linalg.norm(p))
        v = _evaluate(family, data, p)
        if not v.immersed:
            failures += 1
        return v.value

    x0 = start_point(config, family.param_dim)
    simplex = np.vstack([x0, x0 + config.initial_step * np.eye(family.param_dim)])
    trace = [float(fun(x0))]
    best = [x0.copy()]

    def record(intermediate_result):
        trace.append(float(intermediate_result.fun))
        best.append(np.array(intermediate_result.x))

    res = minimize(fun, x0, method="Nelder-Mead", callback=record,
                   options={"maxfev": config.budget, "maxiter": 100 * config.budget, "initial_simplex": simplex,
                            "xatol": config.xatol, "fatol": config.fatol, "adaptive": False})
    i = int(np.argmin(trace))
    p_best = best[i]
    final = _evaluate(family, data, p_best) if np.linalg.norm(p_best) <= family.trust_radius else None
    if final is None or not final.immersed:
        verdict = "immersion_failure"
    elif trace[i] < config.converged:
        verdict = "converged_to_umbilical"
    else:
        verdict = "stalled_above_floor"
    lam = np.array(final.lambda_values) if final is not None and final.immersed else np.array([math.nan])
    return SearchResult(
        family=family.label, best_params=[float(v) for v in p_best], best_objective=trace[i],
        evaluations=int(res.nfev), trace=trace, verdict=verdict,
        umbilic_term=final.umbilic_term if final else math.nan,
        lambda_variance=final.lambda_variance if final else math.nan,
        lambda_mean=float(np.mean(lam)), lambda_max_abs=float(np.max(np.abs(lam))),
        immersion_failures=failures, budget_exhausted=res.nfev >= config.budget,
        exploratory=family.exploratory, message=str(res.message), config=config.to_dict())


def run_config(config: SearchConfig) -> SearchResult:
    return optimize(make_family(config.family, config.param_dim), config)


__all__ = [
    "FAMILIES", "HypersurfaceFamily", "IMMERSION_TOL", "ObjectiveValue", "PENALTY",
    "SIMPLEX_COEFFICIENTS", "SearchConfig", "SearchResult", "VERDICTS", "cp2_probe", "equator_in_s4", "evaluate",
    "load_config", "make_family", "objective", "optimize", "run_config", "s3_in_r4", "start_point",
]
