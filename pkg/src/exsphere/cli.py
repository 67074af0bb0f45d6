"""Command-line driver: ``verify``, ``holonomy``, ``search`` and ``list-zoo``.

Exit codes: 0 pass, 1 identity failure, 2 input error, 3 degenerate or
unsupported input.  JSON reports are canonical (sorted keys, no timestamps),
so identical inputs give byte-identical output.
"""

from __future__ import annotations

import argparse
import ast
import json
import math
import re
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, holonomy, killing, search, zoo
from .charts import DEFAULT_SEED
from .hypersurface import (
    NotEinsteinError, codazzi_residual, einstein_lambda_check, gauss_residual, gauss_weingarten_residual,
    sample_umbilicity, shape_duality_residual,
)
from .summary import ResidualSummary

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_DEGENERATE = 0, 1, 2, 3
REPORT_VERSION = 1
SUITES = ("fundamental", "killing", "cone", "all")

ANCHORS = {
    "umbilicity": "totally umbilical: II = λ g N",
    "gauss": "Gauss equation",
    "codazzi": "Codazzi equation",
    "codazzi_traced": "traced Codazzi: Ric̄(X, N) = (n-1) dλ(X)",
    "shape_duality": "shape operator dual to II",
    "gauss_formula": "Gauss formula ∇̄_X Y = ∇_X Y + II(X, Y)",
    "weingarten": "Weingarten formula ∇̄_X N = -A X",
    "einstein_lambda": "λ² = scal_g / n(n-1) - scal_ḡ / n(n+1)",
    "i": "special Killing identity (i)",
    "ii": "special Killing identity (ii)",
    "iii": "special Killing identity (iii)",
    "iv": "special Killing identity (iv)",
    "closed": "β closed",
    "coclosed": "γ coclosed",
    "d_gamma": "dγ = -kλβ",
    "codiff_beta": "d*β = -(n-k+1)λγ",
    "cone_parallel": "cone lift is ∇-parallel",
    "cone_round_trip": "slice restriction lifts back to the cone form",
}

DEFAULT_TOLERANCES = {
    **{k: 1e-7 for k in ("umbilicity", "gauss", "codazzi", "codazzi_traced", "shape_duality", "gauss_formula",
                         "weingarten", "einstein_lambda")},
    **{k: 1e-8 for k in (*killing.IDENTITIES, *killing.RELATIONS)},
    "cone_parallel": 1e-7,
    "cone_round_trip": 1e-8,
}


class InputError(ValueError):
    pass


class DegenerateInput(ValueError):
    pass


@dataclass
class ReportRow:
    group: str
    identity: str
    anchor: str
    max: float
    mean: float
    count: int
    tolerance: float
    passed: bool

    @classmethod
    def from_summary(cls, group: str, identity: str, s: ResidualSummary, tol: float) -> "ReportRow":
        return cls(group, identity, ANCHORS[identity], s.max, s.mean, s.count, tol, s.max <= tol)


@dataclass
class VerificationReport:
    suite: str
    manifold: str
    rows: list[ReportRow] = field(default_factory=list)
    statuses: dict[str, str] = field(default_factory=dict)
    environment: dict = field(default_factory=dict)
    schema_version: int = REPORT_VERSION

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def status(self) -> str:
        if not self.rows:
            return "degenerate"
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["status"] = self.status
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "VerificationReport":
        d = json.loads(text)
        d.pop("status", None)
        d["rows"] = [ReportRow(**r) for r in d["rows"]]
        return cls(**d)

    def to_markdown(self) -> str:
        lines = [f"## {self.suite}: {self.manifold}", "",
                 "| anchor | group | max | mean | samples | tolerance | pass |",
                 "|---|---|---|---|---|---|---|"]
        for r in self.rows:
            lines.append(f"| {r.anchor} | {r.group} | {r.max:.3e} | {r.mean:.3e} | {r.count} | {r.tolerance:.1e} | "
                         f"{'yes' if r.passed else 'NO'} |")
        for group, status in sorted(self.statuses.items()):
            lines.append(f"\n- {group}: {status}")
        lines.append(f"\nstatus: {self.status}")
        return "\n".join(lines) + "\n"


# -- manifold arguments ------------------------------------------------------------------------
_BARE_CALL = re.compile(r"([A-Za-z_]\w*)((?:\s+\w+\s*=\s*[^\s(),]+)+)")


def _normalize_expression(text: str) -> str:
    """``cone(sasakian_sphere n=3)`` → ``cone(sasakian_sphere(n=3))``."""
    def repl(m):
        args = ", ".join(a.replace(" ", "") for a in re.findall(r"\w+\s*=\s*[^\s(),]+", m.group(2)))
        return f"{m.group(1)}({args})"
    return _BARE_CALL.sub(repl, text.strip())


def _literal(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def resolve_manifold(tokens: list[str]) -> zoo.SpecFile:
    if not tokens:
        raise InputError("no manifold given")
    if len(tokens) == 1 and (tokens[0].endswith(".json") or Path(tokens[0]).is_file()):
        return zoo.resolve(tokens[0])
    head = [t for t in tokens if "=" not in t or "(" in t]
    params = dict(t.split("=", 1) for t in tokens if "=" in t and "(" not in t)
    if len(head) != 1:
        return zoo.resolve(_normalize_expression(" ".join(tokens)))
    spec = zoo.resolve(_normalize_expression(head[0]))
    spec.params.update({k: _literal(v) for k, v in params.items()})
    return spec


def _environment(args, spec_file: Optional[zoo.SpecFile], tolerances: dict) -> dict:
    overrides = {k: getattr(args, k) for k in ("tolerance", "samples", "seed") if getattr(args, k) is not None}
    return {"version": __version__, "seed": args.seed if args.seed is not None else DEFAULT_SEED,
            "samples": _sample_count(args, spec_file), "tolerances": dict(sorted(tolerances.items())),
            "overrides": overrides}


def _sample_count(args, spec_file) -> int:
    if args.samples is not None:
        return args.samples
    return spec_file.sample_count if spec_file is not None else 50


def _tolerances(args, spec_file: Optional[zoo.SpecFile]) -> dict:
    tol = dict(DEFAULT_TOLERANCES)
    if spec_file is not None:
        unknown = set(spec_file.tolerance_overrides) - set(tol)
        if unknown:
            raise InputError(f"unknown identity ids in tolerance_overrides: {sorted(unknown)}")
        tol.update(spec_file.tolerance_overrides)
    if args.tolerance is not None:
        tol = {k: args.tolerance for k in tol}
    return tol


# -- suites ------------------------------------------------------------------------------------
def _embeddings(spec: zoo.ManifoldSpec):
    """Canonical embeddings by name, aliases of the same object dropped."""
    seen = set()
    for name, e in sorted(spec.canonical_embeddings.items()):
        if id(e) not in seen:
            seen.add(id(e))
            yield name, e


def _fundamental(spec: zoo.ManifoldSpec, sample_count: int, seed: int, tol: dict) -> list[ReportRow]:
    rows = []
    for name, e in _embeddings(spec):
        sample = e.sample(sample_count, seed)
        umb = sample_umbilicity(e, sample)
        rows.append(ReportRow.from_summary(name, "umbilicity", umb, tol["umbilicity"]))
        if not umb.passes(tol["umbilicity"]):
            continue
        gauss = [gauss_residual(e, u).max for u in sample]
        cod = [codazzi_residual(e, u) for u in sample]
        gw = [gauss_weingarten_residual(e, u) for u in sample]
        parts = {
            "gauss": gauss,
            "codazzi": [c.codazzi.max for c in cod],
            "codazzi_traced": [c.traced.max for c in cod],
            "shape_duality": [shape_duality_residual(e, u) for u in sample],
            "gauss_formula": [r[0] for r in gw],
            "weingarten": [r[1] for r in gw],
        }
        try:
            parts["einstein_lambda"] = einstein_lambda_check(e, sample).formula
        except NotEinsteinError:
            pass
        for ident, vals in parts.items():
            s = vals if isinstance(vals, ResidualSummary) else ResidualSummary.from_values(ident, vals)
            rows.append(ReportRow.from_summary(name, ident, s, tol[ident]))
    return rows


def _killing(spec: zoo.ManifoldSpec, sample_count: int, seed: int, tol: dict,
             statuses: dict) -> list[ReportRow]:
    rows = []
    for name, e in _embeddings(spec):
        sample = e.sample(sample_count, seed)
        for fname in spec.parallel_forms:
            sigma = spec.distinguished_forms[fname]
            if sigma.degree < 1:
                continue
            group = f"{name} / {fname}"
            report = killing.verify_candidate(killing.candidate_from_embedding(e, sigma), sample)
            statuses[group] = report.status if report.status != "degenerate" else \
                "degenerate: γ or β vanishes identically"
            for ident, s in report.all_summaries.items():
                rows.append(ReportRow.from_summary(group, ident, s, tol[ident]))
    return rows


def _cone_spec(spec: zoo.ManifoldSpec) -> zoo.ManifoldSpec:
    if spec.name == "cone":
        return spec
    return zoo.build("cone", {"base": zoo.describe_params(spec)})


def _cone(spec: zoo.ManifoldSpec, sample_count: int, seed: int, tol: dict, statuses: dict) -> list[ReportRow]:
    cs = _cone_spec(spec)
    metric = cs.metric
    sample = metric.sample(sample_count, seed)
    slice_emb = cs.canonical_embeddings["slice(t=1)"]
    rows = []
    for fname in cs.parallel_forms:
        form = cs.distinguished_forms[fname]
        rows.append(ReportRow.from_summary(fname, "cone_parallel", killing.parallel_residual(form, metric, sample),
                                           tol["cone_parallel"]))
        cand = killing.candidate_from_embedding(slice_emb, form)
        lifted = killing.lift_candidate(cand, metric)
        diffs = [float(np.max(np.abs(lifted.at(x) - form.at(x)))) for x in sample]
        rows.append(ReportRow.from_summary(fname, "cone_round_trip",
                                           ResidualSummary.from_values("cone_round_trip", diffs),
                                           tol["cone_round_trip"]))
        statuses[fname] = "parallel on the cone"
    return rows


def cmd_verify(args) -> tuple[int, VerificationReport]:
    spec_file = resolve_manifold(args.manifold)
    tol = _tolerances(args, spec_file)
    spec = spec_file.build()
    n_samples = _sample_count(args, spec_file)
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    report = VerificationReport(args.suite, spec.label, environment=_environment(args, spec_file, tol))
    suites = ("fundamental", "killing", "cone") if args.suite == "all" else (args.suite,)
    if spec_file.orientation == -1:
        spec.canonical_embeddings = {k: e.flipped() for k, e in spec.canonical_embeddings.items()}
    for suite in suites:
        if suite in ("fundamental", "killing") and not spec.canonical_embeddings:
            report.statuses[suite] = "degenerate: no umbilical canonical embedding"
            continue
        if suite == "fundamental":
            report.rows += _fundamental(spec, n_samples, seed, tol)
        elif suite == "killing":
            report.rows += _killing(spec, n_samples, seed, tol, report.statuses)
        else:
            report.rows += _cone(spec, n_samples, seed, tol, report.statuses)
    if not report.rows:
        return EXIT_DEGENERATE, report
    return (EXIT_PASS if report.passed else EXIT_FAIL), report


# -- holonomy, search, zoo listing ----------------------------------------------------------------
def cmd_holonomy(args) -> tuple[int, dict]:
    spec_file = resolve_manifold(args.manifold)
    spec = spec_file.build()
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    est = holonomy.estimate_holonomy(spec.metric, degrees=(args.degree,), seed=seed)
    out = {"manifold": spec.label, "degree": args.degree, "estimate": est.to_dict(),
           "environment": {"version": __version__, "seed": seed}, "schema_version": REPORT_VERSION}
    return EXIT_PASS, out


def _holonomy_markdown(d: dict) -> str:
    est = d["estimate"]
    forms = est["fixed_form_subspaces"].get(str(d["degree"]), [])
    lines = [f"## holonomy: {d['manifold']}", "",
             "| quantity | value |", "|---|---|",
             f"| estimated algebra dimension | {est['estimated_algebra_dimension']} |",
             f"| curvature span dimension | {est['curvature_span_dimension']} |",
             f"| loops | {est['loop_count']} |",
             f"| transport isometry error | {est['transport_isometry_error']:.3e} |",
             f"| fixed {d['degree']}-forms | {len(forms)} |"]
    for i, f in enumerate(forms):
        lines.append(f"| ∇-residual of fixed form {i} | {f['nabla_residual']:.3e} |")
    return "\n".join(lines) + "\n"


def cmd_search(args) -> tuple[int, dict]:
    try:
        config = search.load_config(args.config)
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        raise InputError(f"cannot read search config {args.config}: {exc}") from exc
    if args.seed is not None:
        config.seed = args.seed
    if args.samples is not None:
        config.sample_count = args.samples
    result = search.run_config(config)
    out = result.to_dict()
    out["environment"] = {"version": __version__}
    out["schema_version"] = REPORT_VERSION
    return EXIT_PASS, out


def _search_markdown(d: dict) -> str:
    label = d["family"] + (" (exploratory)" if d["exploratory"] else "")
    lines = [f"## search: {label}", "", "| quantity | value |", "|---|---|",
             f"| verdict | {d['verdict']} |",
             f"| best objective | {d['best_objective']:.3e} |",
             f"| umbilicity term | {d['umbilic_term']:.3e} |",
             f"| λ variance | {d['lambda_variance']:.3e} |",
             f"| λ mean at optimum | {d['lambda_mean']:.3e} |",
             f"| max abs λ at optimum | {d['lambda_max_abs']:.3e} |",
             f"| evaluations | {d['evaluations']} |",
             f"| iterations | {len(d['trace']) - 1} |",
             f"| immersion failures | {d['immersion_failures']} |"]
    if d["verdict"] == "stalled_above_floor":
        lines.append(f"| floor | {d['best_objective']:.6e} |")
    return "\n".join(lines) + "\n"


def cmd_list_zoo(args) -> tuple[int, dict]:
    out = {}
    for name in zoo.NAMES:
        slots = zoo._COMPOSITE.get(name)
        if slots:
            out[name] = {"composite": True, "slots": list(slots)}
        else:
            out[name] = {"composite": False, **zoo.build(name, validate=False).describe()}
    return EXIT_PASS, {"entries": out, "schema_version": REPORT_VERSION}


def _zoo_markdown(d: dict) -> str:
    lines = ["| name | dim | parallel forms | canonical embeddings |", "|---|---|---|---|"]
    for name, e in d["entries"].items():
        if e["composite"]:
            lines.append(f"| {name}({', '.join(e['slots'])}) | composite | | |")
        else:
            lines.append(f"| {name} | {e['dim']} | {', '.join(e['parallel_forms'])} | "
                         f"{', '.join(e['canonical_embeddings']) or 'none'} |")
    return "\n".join(lines) + "\n"


# -- entry point -------------------------------------------------------------------------------
def _json_dump(d: dict) -> str:
    return json.dumps(d, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tolerance", type=float, help="override every identity tolerance")
    common.add_argument("--samples", type=int, help="sample points per check")
    common.add_argument("--seed", type=int, help="sampling / search seed")
    common.add_argument("--out", help="write the JSON report here (markdown goes next to it as .md)")
    common.add_argument("--format", choices=("markdown", "json"), default="markdown", help="stdout format")
    p = argparse.ArgumentParser(prog="exsphere", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", parents=[common], help="run residual suites on a manifold")
    v.add_argument("manifold", nargs="+", help="zoo name, expression such as 'cone(sasakian_sphere n=3)', or JSON file")
    v.add_argument("--suite", choices=SUITES, default="all")
    h = sub.add_parser("holonomy", parents=[common], help="estimate the restricted holonomy algebra")
    h.add_argument("manifold", nargs="+")
    h.add_argument("--degree", type=int, default=2)
    s = sub.add_parser("search", parents=[common], help="run an umbilic search from a JSON config")
    s.add_argument("config")
    sub.add_parser("list-zoo", parents=[common], help="list catalogue entries")
    return p


_COMMANDS = {
    "verify": (cmd_verify, lambda r: r.to_markdown()),
    "holonomy": (cmd_holonomy, _holonomy_markdown),
    "search": (cmd_search, _search_markdown),
    "list-zoo": (cmd_list_zoo, _zoo_markdown),
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_PASS
    if args.samples is not None and args.samples < 1:
        print("error: --samples must be positive", file=sys.stderr)
        return EXIT_INPUT
    if args.tolerance is not None and not (args.tolerance > 0 and math.isfinite(args.tolerance)):
        print("error: --tolerance must be a positive number", file=sys.stderr)
        return EXIT_INPUT
    run, to_md = _COMMANDS[args.command]
    try:
        code, report = run(args)
    except (zoo.UnsupportedSpecError, DegenerateInput) as exc:
        print(f"degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (zoo.UnknownManifoldError, zoo.ValidationError, InputError, ValueError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INPUT
    text = report.to_json() if isinstance(report, VerificationReport) else _json_dump(report)
    md = to_md(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        Path(args.out).with_suffix(".md").write_text(md, encoding="utf-8")
    sys.stdout.write(text if args.format == "json" else md)
    if isinstance(report, VerificationReport):
        for group, status in sorted(report.statuses.items()):
            if status.startswith("degenerate: no"):
                print(f"{group}: {status}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
