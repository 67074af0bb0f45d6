"""Catalogue of explicit manifolds: charts, metrics, distinguished forms and umbilical embeddings.

Every entry is validated when built: the expected scalar curvature, Einstein
constant and holonomy dimension are recomputed from the metric at a few
sample points and compared against the catalogue values.
"""

from __future__ import annotations

import ast
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from . import cones, jets
from .charts import DEFAULT_SEED, ChartDomain
from .forms import FormField, basis_form, constant_form, volume_form
from .hypersurface import Embedding, orient_for_nonnegative_lambda, umbilicity_residual
from .riemann import MetricField, curvature

SCHEMA_VERSION = 1
MAX_DIM = 10
VALIDATION_TOL = 1e-7
NAMES = ("euclidean", "round_sphere", "flat_torus", "sasakian_sphere", "nearly_kahler_s6", "fubini_study_cp2",
         "product", "cone", "sine_join")

# 1-indexed triples (i, j, k, sign) with φ(e_i, e_j, e_k) = sign
G2_TRIPLES = ((1, 2, 3, 1), (1, 4, 5, 1), (1, 6, 7, 1), (2, 4, 6, 1), (2, 5, 7, -1), (3, 4, 7, -1), (3, 5, 6, -1))


class UnknownManifoldError(KeyError):
    pass


class ValidationError(ValueError):
    pass


class UnsupportedSpecError(ValueError):
    """The catalogue has no canonical umbilical embedding for this entry."""


@dataclass
class KnownScalars:
    scalar_curvature: Optional[Union[float, Callable]] = None
    einstein_constant: Optional[float] = None
    holonomy_dim: Optional[int] = None

    def scalar_at(self, x) -> Optional[float]:
        s = self.scalar_curvature
        return s(x) if callable(s) else s

    def to_dict(self) -> dict:
        s = self.scalar_curvature
        return {"scalar_curvature": "point-dependent" if callable(s) else s,
                "einstein_constant": self.einstein_constant, "holonomy_dim": self.holonomy_dim}


@dataclass
class ManifoldSpec:
    name: str
    params: dict
    metric: MetricField
    distinguished_forms: dict[str, FormField]
    known_scalars: KnownScalars
    canonical_embeddings: dict[str, Embedding] = field(default_factory=dict)
    parallel_forms: tuple[str, ...] = ()
    other_embeddings: dict[str, Embedding] = field(default_factory=dict)
    unit_sphere: bool = False
    validation: dict[str, float] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.metric.dim

    @property
    def label(self) -> str:
        return self.metric.label

    def describe(self) -> dict:
        return {"name": self.name, "label": self.label, "dim": self.dim,
                "forms": sorted(self.distinguished_forms), "parallel_forms": list(self.parallel_forms),
                "canonical_embeddings": sorted(self.canonical_embeddings), "known_scalars": self.known_scalars.to_dict()}


# -- building blocks ---------------------------------------------------------------------
def _sumsq(x):
    return (x * x).sum()


def _conformal(factor: Callable, n: int) -> Callable:
    def comp(x):
        f = factor(x)
        return jets.outer(f, np.eye(n)) if jets.is_jet(f) else f * np.eye(n)
    return comp


def inverse_stereographic(v):
    """``ℝ^n → S^n ⊂ ℝ^{n+1}``, ``v ↦ (2v, |v|² - 1) / (1 + |v|²)``; ``v = 0`` goes to the south pole."""
    s = _sumsq(v)
    f = 1.0 / (s + 1.0)
    return jets.concatenate([v * (f * 2.0), jets.stack([(s - 1.0) * f])])


def sphere_metric(n: int, r: float = 1.0, half_width: float = 1.0) -> MetricField:
    """Round metric ``4r² |dv|² / (1 + |v|²)²`` on a stereographic chart."""
    return MetricField(n, _conformal(lambda x: 4.0 * r * r / (_sumsq(x) + 1.0) ** 2, n),
                       ChartDomain.box(-half_width, half_width, n), label=f"S^{n}(r={r:g})", einstein=True)


def flat_metric(n: int, lo=-2.0, hi=2.0, label: Optional[str] = None) -> MetricField:
    return MetricField(n, lambda x: np.eye(n), ChartDomain.box(lo, hi, n), label=label or f"R^{n}", einstein=True)


def _const_jet_fn(values: np.ndarray, n: int):
    return lambda x0, order: jets.as_jet(values, n, order, x0)


def g2_form() -> np.ndarray:
    phi = np.zeros((7, 7, 7))
    for i, j, k, s in G2_TRIPLES:
        phi += s * basis_form(7, (i - 1, j - 1, k - 1))
    return phi


def cross_product_defect(phi: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    """``| |x×y|² - |x|²|y|² + <x,y>² |`` for the cross product ``<x×y, z> = φ(x, y, z)``."""
    c = np.einsum("ijk,i,j->k", phi, x, y)
    return float(abs(c @ c - (x @ x) * (y @ y) + (x @ y) ** 2))


def kahler_form_flat(n: int) -> np.ndarray:
    return sum(basis_form(n, (2 * i, 2 * i + 1)) for i in range(n // 2))


def _sphere_map(radius: float):
    return lambda v: inverse_stereographic(v) * radius


def sphere_in_flat(n: int, radius: float = 1.0, ambient: Optional[MetricField] = None) -> Embedding:
    """Round ``S^{n-1}`` of the given radius in ℝ^n, stereographic chart around the south pole."""
    amb = ambient or flat_metric(n)
    e = Embedding(amb, _sphere_map(radius), domain=ChartDomain.box(-1.0, 1.0, n - 1),
                  label=f"S^{n - 1}(r={radius:g}) in {amb.label}")
    return orient_for_nonnegative_lambda(e)


def hyperplane(n: int, ambient: Optional[MetricField] = None) -> Embedding:
    amb = ambient or flat_metric(n)
    return Embedding(amb, lambda u: jets.concatenate([u, jets.as_jet(np.zeros(1), n - 1, u.order, u.value)]),
                     domain=ChartDomain.box(-1.0, 1.0, n - 1), label=f"hyperplane in {amb.label}")


def geodesic_sphere(ambient: MetricField, rho: float, r: float = 1.0) -> Embedding:
    """Geodesic sphere of radius ``ρ r`` about ``v = 0`` in the round ``S^n(r)`` chart; ``λ = cot ρ / r``."""
    n = ambient.dim
    if not 0 < rho < math.pi:
        raise ValueError("geodesic radius must be in (0, π)")
    rad = math.tan(rho / 2)
    # keep the image inside the ambient chart
    half = 1.0 if rad * 2 < ambient.domain.hi.min() * 0.9 else 0.6
    e = Embedding(ambient, _sphere_map(rad), domain=ChartDomain.box(-half, half, n - 1),
                  label=f"geodesic sphere ρ={rho:.6g} in {ambient.label}")
    return orient_for_nonnegative_lambda(e)


def contact_form_s3() -> FormField:
    """Pullback of ``x1 dx2 - x2 dx1 + x3 dx4 - x4 dx3`` to the stereographic chart of S³."""
    jm = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], dtype=float)

    def jet_fn(v0, order):
        x = inverse_stereographic(jets.variables(v0, order + 1))
        jx = jets.einsum("ij,j->i", jm, x.truncate(order))
        return jets.einsum("i,ia->a", jx, x.diff())

    return FormField(1, 3, jet_fn=jet_fn, label="contact form")


def nearly_kahler_form_s6() -> FormField:
    """``ω = i*(x ⌟ φ)`` on the stereographic chart of S⁶, with ``x`` the outward unit normal."""
    phi = g2_form()

    def jet_fn(v0, order):
        x = inverse_stereographic(jets.variables(v0, order + 1))
        dx = x.diff()
        w = jets.einsum("i,ijk->jk", x.truncate(order), phi)
        w = jets.einsum("jk,ja->ak", w, dx)
        return jets.einsum("ak,kb->ab", w, dx)

    return FormField(2, 6, jet_fn=jet_fn, label="nearly Kähler form")


J_CP2 = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], dtype=float)


def fubini_study_metric(half_width: float = 1.0) -> MetricField:
    """Fubini–Study metric on the affine chart ℂ² ⊂ CP², holomorphic sectional curvature 4."""
    def comp(x):
        s = _sumsq(x) + 1.0
        jx = jets.einsum("ij,j->i", J_CP2, x) if jets.is_jet(x) else J_CP2 @ x
        num = jets.outer(s, np.eye(4)) - jets.outer(x, x) - jets.outer(jx, jx) if jets.is_jet(x) else \
            s * np.eye(4) - np.outer(x, x) - np.outer(jx, jx)
        return num * (1.0 / (s * s))

    return MetricField(4, comp, ChartDomain.box(-half_width, half_width, 4), label="CP^2(FS)", einstein=True)


def kahler_form_cp2(metric: MetricField) -> FormField:
    """``ω(X, Y) = g(JX, Y)`` for the standard complex structure of the chart."""
    return FormField(2, 4, jet_fn=lambda x0, order: jets.einsum("ca,cb->ab", J_CP2, metric.jet(x0, order)),
                     metric=metric, label="Kähler form")


def _pad_form(f: FormField, n: int, positions) -> FormField:
    """Extend a form on a factor chart to the product chart by zero."""
    positions = list(positions)
    k = f.degree

    def jet_fn(x0, order):
        s = f.jet(x0[positions], order)
        s = jets.embed_vars(s, n, positions)
        s.point = x0
        inc = np.zeros((len(positions), n))
        inc[np.arange(len(positions)), positions] = 1.0
        lett = "abcdefgh"[:k]
        for slot in range(k):
            src = lett[:slot] + "z" + lett[slot + 1:]
            s = jets.einsum(f"{src},z{lett[slot]}->{lett}", s, inc)
        return s

    return FormField(k, n, jet_fn=jet_fn, label=f.label)


# -- entries -------------------------------------------------------------------------------
def _euclidean(n: int = 4) -> ManifoldSpec:
    metric = flat_metric(n)
    forms = {"volume": volume_form(metric)}
    if n % 2 == 0:
        forms["kahler"] = constant_form(kahler_form_flat(n), "flat Kähler form", metric)
    if n == 7:
        forms["g2"] = constant_form(g2_form(), "G2 3-form", metric)
    for f in forms.values():
        f.metric = metric
    emb = {"unit_sphere": sphere_in_flat(n, 1.0, metric), "hyperplane": hyperplane(n, metric)} if n >= 2 else {}
    return ManifoldSpec("euclidean", {"n": n}, metric, forms, KnownScalars(0.0, 0.0, 0), emb, tuple(forms))


def _sphere_embeddings(metric: MetricField, r: float) -> dict[str, Embedding]:
    if metric.dim < 2:
        return {}
    out = {}
    for label, rho in (("pi/6", math.pi / 6), ("pi/3", math.pi / 3), ("pi/2", math.pi / 2)):
        out[f"geodesic_sphere(rho={label})"] = geodesic_sphere(metric, rho, r)
    out["equator"] = out["geodesic_sphere(rho=pi/2)"]
    return out


def _round_sphere(n: int = 4, r: float = 1.0) -> ManifoldSpec:
    metric = sphere_metric(n, r)
    known = KnownScalars(n * (n - 1) / r**2, (n - 1) / r**2, n * (n - 1) // 2)
    return ManifoldSpec("round_sphere", {"n": n, "r": r}, metric, {"volume": volume_form(metric)}, known,
                        _sphere_embeddings(metric, r), ("volume",), unit_sphere=(r == 1.0))


def _flat_torus(n: int = 2) -> ManifoldSpec:
    metric = flat_metric(n, 0.0, 2 * math.pi, label=f"T^{n}")
    forms = {"volume": volume_form(metric), "dx1": constant_form(np.eye(n)[0], "dx1", metric)}
    return ManifoldSpec("flat_torus", {"n": n}, metric, forms, KnownScalars(0.0, 0.0, 0), {}, tuple(forms))


def _sasakian_sphere(n: int = 3) -> ManifoldSpec:
    if n != 3:
        raise ValueError("sasakian_sphere is catalogued for n = 3 only")
    metric = sphere_metric(3)
    eta = contact_form_s3()
    eta.metric = metric
    forms = {"volume": volume_form(metric), "contact": eta}
    return ManifoldSpec("sasakian_sphere", {"n": 3}, metric, forms, KnownScalars(6.0, 2.0, 3),
                        _sphere_embeddings(metric, 1.0), ("volume",), unit_sphere=True)


def _nearly_kahler_s6() -> ManifoldSpec:
    metric = sphere_metric(6)
    omega = nearly_kahler_form_s6()
    omega.metric = metric
    forms = {"volume": volume_form(metric), "nearly_kahler": omega}
    return ManifoldSpec("nearly_kahler_s6", {}, metric, forms, KnownScalars(30.0, 5.0, 15),
                        _sphere_embeddings(metric, 1.0), ("volume",), unit_sphere=True)


def cp2_geodesic_sphere(rho: float = math.pi / 4, metric: Optional[MetricField] = None) -> Embedding:
    """``|z| = tan ρ`` in the affine chart: a distance sphere, not umbilical."""
    metric = metric or fubini_study_metric()
    rad = math.tan(rho)
    if rad * 2 > metric.domain.hi.min():
        raise ValueError("geodesic sphere leaves the chart")
    e = Embedding(metric, _sphere_map(rad), domain=ChartDomain.box(-1.0, 1.0, 3), label=f"CP^2 distance sphere ρ={rho:.4g}")
    return orient_for_nonnegative_lambda(e)


def _fubini_study_cp2() -> ManifoldSpec:
    metric = fubini_study_metric()
    forms = {"volume": volume_form(metric), "kahler": kahler_form_cp2(metric)}
    return ManifoldSpec("fubini_study_cp2", {}, metric, forms, KnownScalars(24.0, 6.0, 4), {}, ("volume", "kahler"),
                        other_embeddings={"distance_sphere": cp2_geodesic_sphere(math.atan(0.3), metric)})


def _product(a: ManifoldSpec, b: ManifoldSpec) -> ManifoldSpec:
    metric = cones.product_metric(a.metric, b.metric)
    n = metric.dim
    forms = {"volume": volume_form(metric),
             "vol_1": _pad_form(volume_form(a.metric), n, range(a.dim)),
             "vol_2": _pad_form(volume_form(b.metric), n, range(a.dim, n))}
    for f in forms.values():
        f.metric = metric
    ka, kb = a.known_scalars, b.known_scalars
    scal = None
    if ka.scalar_curvature is not None and kb.scalar_curvature is not None \
            and not callable(ka.scalar_curvature) and not callable(kb.scalar_curvature):
        scal = ka.scalar_curvature + kb.scalar_curvature
    ein = ka.einstein_constant if ka.einstein_constant is not None and ka.einstein_constant == kb.einstein_constant else None
    hol = ka.holonomy_dim + kb.holonomy_dim if ka.holonomy_dim is not None and kb.holonomy_dim is not None else None
    metric.einstein = ein is not None
    emb = {}
    if a.name == "cone" and b.name == "cone":
        emb["join_slice"] = cones.join_slice_in_product(a.params["_cone"], b.params["_cone"])
    return ManifoldSpec("product", {"factors": [describe_params(a), describe_params(b)]}, metric, forms,
                        KnownScalars(scal, ein, hol), emb, ("volume", "vol_1", "vol_2"))


def _cone(base: ManifoldSpec, t_min: float = 0.5, t_max: float = 2.0) -> ManifoldSpec:
    from .killing import cone_lift

    spec = cones.cone(base.metric, (t_min, t_max))
    metric = spec.result
    n = base.dim
    forms = {"volume": volume_form(metric)}
    parallel = ["volume"]
    for name, f in base.distinguished_forms.items():
        if name == "volume":
            continue
        lifted = cone_lift(f, f.degree + 1, metric)
        forms[f"lift({name})"] = lifted
        if base.name in ("sasakian_sphere", "nearly_kahler_s6"):
            parallel.append(f"lift({name})")
    kb = base.known_scalars
    scal, ein, hol = None, None, None
    if kb.scalar_curvature is not None and not callable(kb.scalar_curvature):
        s0 = kb.scalar_curvature
        scal = lambda x, s0=s0: (s0 - n * (n - 1)) / x[-1] ** 2
    if kb.einstein_constant is not None and abs(kb.einstein_constant - (n - 1)) < 1e-12:
        ein = 0.0
        metric.einstein = True
    if base.unit_sphere:
        hol = 0
    emb = {"slice(t=1)": orient_for_nonnegative_lambda(cones.cone_slice(spec, 1.0))}
    params = {"base": describe_params(base), "t_min": t_min, "t_max": t_max, "_cone": spec}
    return ManifoldSpec("cone", params, metric, forms, KnownScalars(scal, ein, hol), emb, tuple(parallel))


def _sine_join(a: ManifoldSpec, b: ManifoldSpec) -> ManifoldSpec:
    metric = cones.sine_cone_join(a.metric, b.metric)
    m = metric.dim
    known = KnownScalars()
    unit = a.unit_sphere and b.unit_sphere
    if unit:
        known = KnownScalars(m * (m - 1.0), m - 1.0, m * (m - 1) // 2)
        metric.einstein = True
    return ManifoldSpec("sine_join", {"factors": [describe_params(a), describe_params(b)]}, metric,
                        {"volume": volume_form(metric)}, known, {}, ("volume",), unit_sphere=unit)


_BUILDERS = {
    "euclidean": _euclidean, "round_sphere": _round_sphere, "flat_torus": _flat_torus,
    "sasakian_sphere": _sasakian_sphere, "nearly_kahler_s6": _nearly_kahler_s6, "fubini_study_cp2": _fubini_study_cp2,
    "product": _product, "cone": _cone, "sine_join": _sine_join,
}
_COMPOSITE = {"product": ("a", "b"), "cone": ("base",), "sine_join": ("a", "b")}


def describe_params(spec: ManifoldSpec) -> dict:
    return {"name": spec.name, "params": {k: v for k, v in spec.params.items() if not k.startswith("_")}}


def _validate(spec: ManifoldSpec, points: int = 3, tol: float = VALIDATION_TOL) -> dict[str, float]:
    from .holonomy import curvature_span_dimension

    known = spec.known_scalars
    out = {}
    for x in spec.metric.sample(points, DEFAULT_SEED):
        curv = curvature(spec.metric, x)
        expected = known.scalar_at(x)
        if expected is not None:
            err = abs(curv.scalar - expected)
            out["scalar_curvature"] = max(out.get("scalar_curvature", 0.0), float(err))
            if err > tol * max(1.0, abs(expected)):
                raise ValidationError(f"{spec.label}: scalar curvature {curv.scalar:.10g} != expected {expected:.10g}")
        if known.einstein_constant is not None:
            err = float(np.max(np.abs(curv.ricci - known.einstein_constant * curv.metric)))
            out["einstein_constant"] = max(out.get("einstein_constant", 0.0), err)
            if err > tol:
                raise ValidationError(f"{spec.label}: Ricci differs from {known.einstein_constant} g by {err:.3e}")
    if known.holonomy_dim is not None:
        span = curvature_span_dimension(spec.metric, spec.metric.sample(1, DEFAULT_SEED)[0])
        out["holonomy_dim"] = float(abs(span - known.holonomy_dim))
        if span != known.holonomy_dim:
            raise ValidationError(f"{spec.label}: curvature span {span} != expected holonomy dimension {known.holonomy_dim}")
    for name, e in spec.canonical_embeddings.items():
        u = e.sample(1, DEFAULT_SEED)[0]
        r = umbilicity_residual(e, u)
        if r >= 1e-9:
            raise ValidationError(f"{spec.label}: canonical embedding {name} has umbilicity residual {r:.3e}")
    return out


def build(name: str, params: Optional[dict] = None, validate: bool = True, **kwargs) -> ManifoldSpec:
    """Construct and validate a catalogue entry; composite entries take other specs as parameters."""
    params = dict(params or {}, **kwargs)
    if name not in _BUILDERS:
        raise UnknownManifoldError(f"unknown manifold {name!r}; known: {', '.join(NAMES)}")
    for key in _COMPOSITE.get(name, ()):
        if isinstance(params.get(key), dict):
            sub = params[key]
            params[key] = build(sub["name"], sub.get("params", {}), validate=validate)
    if name == "product" and "factors" in params:
        params["a"], params["b"] = (build(f["name"], f.get("params", {}), validate=validate) for f in params.pop("factors"))
    if name == "sine_join" and "factors" in params:
        params["a"], params["b"] = (build(f["name"], f.get("params", {}), validate=validate) for f in params.pop("factors"))
    dim_keys = [params[k] for k in ("n",) if k in params]
    if any(not isinstance(d, int) or d < 1 for d in dim_keys):
        raise ValueError(f"{name}: dimension must be a positive integer")
    if any(d > MAX_DIM for d in dim_keys):
        raise ValueError(f"{name}: dimension {dim_keys[0]} exceeds the catalogue limit {MAX_DIM}")
    try:
        spec = _BUILDERS[name](**params)
    except TypeError as exc:
        raise ValueError(f"{name}: bad parameters {sorted(params)} ({exc})") from exc
    if spec.dim > MAX_DIM:
        raise ValueError(f"{name}: dimension {spec.dim} exceeds the catalogue limit {MAX_DIM}")
    if validate:
        spec.validation = _validate(spec)
    return spec


def canonical_umbilical_embeddings(spec: ManifoldSpec) -> list[Embedding]:
    if not spec.canonical_embeddings:
        raise UnsupportedSpecError(f"{spec.label}: no umbilical canonical embedding")
    seen, out = set(), []
    for e in spec.canonical_embeddings.values():
        if id(e) not in seen:
            seen.add(id(e))
            out.append(e)
    return out


# -- expressions and spec files ---------------------------------------------------------------
def _eval_node(node):
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        args = [_eval_node(a) for a in node.args]
        kw = {k.arg: _eval_node(k.value) for k in node.keywords}
        name = node.func.id
        if name not in _BUILDERS:
            raise UnknownManifoldError(f"unknown manifold {name!r}")
        slots = _COMPOSITE.get(name, ())
        if len(args) > len(slots):
            raise ValueError(f"{name}: too many positional arguments")
        kw.update(dict(zip(slots, args)))
        return {"name": name, "params": kw}
    if isinstance(node, ast.Name):
        return {"name": node.id, "params": {}}
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, str)):
        return node.value
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        return -_eval_node(node.operand)
    raise ValueError(f"unsupported manifold expression element: {ast.dump(node)}")


def parse_expression(text: str) -> dict:
    """``"cone(sasakian_sphere(n=3))"`` → nested ``{"name", "params"}`` description."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse manifold expression {text!r}") from exc
    out = _eval_node(tree.body)
    if not isinstance(out, dict):
        raise ValueError(f"{text!r} does not describe a manifold")
    return out


@dataclass
class SpecFile:
    name: str
    params: dict
    orientation: int = 1
    sample_count: int = 50
    tolerance_overrides: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def build(self, validate: bool = True) -> ManifoldSpec:
        return build(self.name, self.params, validate=validate)


_SPEC_KEYS = {"name", "params", "orientation", "sample_count", "tolerance_overrides", "schema_version"}


def parse_spec_dict(data: dict) -> SpecFile:
    if not isinstance(data, dict) or "name" not in data:
        raise ValueError("manifold spec must be an object with a 'name' field")
    extra = set(data) - _SPEC_KEYS
    if extra:
        raise ValueError(f"unknown manifold spec fields: {sorted(extra)}")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {version}")
    orientation = data.get("orientation", 1)
    if orientation not in (1, -1):
        raise ValueError("orientation must be 1 or -1")
    count = data.get("sample_count", 50)
    if not isinstance(count, int) or count < 1:
        raise ValueError("sample_count must be a positive integer")
    tol = data.get("tolerance_overrides", {})
    if not isinstance(tol, dict) or not all(isinstance(v, (int, float)) for v in tol.values()):
        raise ValueError("tolerance_overrides must map identity ids to numbers")
    return SpecFile(data["name"], dict(data.get("params", {})), orientation, count, dict(tol), version)


def load_spec_file(path) -> SpecFile:
    with open(path, encoding="utf-8") as fh:
        return parse_spec_dict(json.load(fh))


def resolve(target: str, extra_params: Optional[dict] = None) -> SpecFile:
    """A JSON path, a zoo name, or an expression such as ``cone(round_sphere(n=3))``."""
    if target.endswith(".json") or Path(target).is_file():
        spec = load_spec_file(target)
    else:
        d = parse_expression(target)
        spec = SpecFile(d["name"], d["params"])
    if extra_params:
        spec.params.update(extra_params)
    return spec


__all__ = [
    "G2_TRIPLES", "KnownScalars", "ManifoldSpec", "NAMES", "SCHEMA_VERSION", "SpecFile", "UnknownManifoldError",
    "UnsupportedSpecError", "ValidationError", "build", "canonical_umbilical_embeddings", "contact_form_s3",
    "cp2_geodesic_sphere", "cross_product_defect", "flat_metric", "fubini_study_metric", "g2_form",
    "geodesic_sphere", "hyperplane", "inverse_stereographic", "kahler_form_cp2", "kahler_form_flat",
    "load_spec_file", "nearly_kahler_form_s6", "parse_expression", "parse_spec_dict", "resolve", "sphere_in_flat",
    "sphere_metric",
]
