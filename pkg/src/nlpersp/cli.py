"""Command-line front end.

Every command reads one JSON job document (``--config``) or a named preset
(``--preset``); ``--set key.path=VALUE`` overrides single fields, with
VALUE parsed as JSON when possible.  Exit codes: 0 success, 1 verification
failure, 2 configuration error, 3 hypothesis violation.
"""

import argparse
import copy
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .envelopes import berhu, huber
from .errors import (ConfigParse, DimensionMismatch, EmptyNegativeSet, EmptyPositiveSet,
                     GammaOutOfRange, GridRequired, HypothesisViolated, NlperspError,
                     ParameterOutOfRange, UnknownConjugate)
from .extreal import render, to_json_value
from .funcs import (Affine, BrenierMobility, ClippedQuadraticScaling, GeoMeanScaling, GridSpec,
                    LogMeanScaling, MaxZeroAffine, NormPowerShifted, PointIndicator,
                    PowerScaling, RadialIndicator)
from .perspective import (compare_conjugate_with_oracle, compare_perspective_with_oracle,
                          convexity_conditions, perspective_report)
from .transform import oracle_convergence

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_HYPOTHESIS = 0, 1, 2, 3

# --- families ---------------------------------------------------------------


def _radial_kw(d):
    return {"norm": d.get("norm", "euclidean"), "dim": int(d.get("dim", 1))}


def _radial_indicator(d):
    base = NormPowerShifted(d.get("p", 2.0), d.get("mult", 1.0), d.get("shift", 0.0), **_radial_kw(d))
    return RadialIndicator(d["a"], d.get("b", math.inf), base=base, **_radial_kw(d))


PHI_FAMILIES = {
    "huber": lambda d: huber(d.get("alpha", 1.0), d.get("p", 2.0), **_radial_kw(d)),
    "berhu": lambda d: berhu(d.get("alpha", 1.0), d.get("p", 2.0), **_radial_kw(d)),
    "norm_power": lambda d: NormPowerShifted(d.get("p", 2.0), d.get("mult", 1.0),
                                             d.get("shift", 0.0), **_radial_kw(d)),
    "radial_indicator": _radial_indicator,
    "affine": lambda d: Affine(d["w"], d.get("b", 0.0)),
    "point_indicator": lambda d: PointIndicator(d["center"], d.get("value", 0.0)),
}


def _below(d):
    v = d.get("below", "+inf")
    return math.inf if str(v).strip() in ("+inf", "inf") else -math.inf


S_FAMILIES = {
    "identity": lambda d: Affine([1.0], 0.0),
    "affine": lambda d: Affine(d["w"], d.get("b", 0.0)),
    "power": lambda d: PowerScaling(d["q"], _below(d)),
    "clipped_quadratic": lambda d: ClippedQuadraticScaling(d.get("beta", 0.5)),
    "max_zero": lambda d: MaxZeroAffine(),
    "brenier": lambda d: BrenierMobility(d["alpha"], d["beta"]),
    "geo_mean": lambda d: GeoMeanScaling(),
    "log_mean": lambda d: LogMeanScaling(),
}


def build(spec, table, role):
    if not isinstance(spec, dict) or "family" not in spec:
        raise ConfigParse(f"{role} must be an object with a 'family' field")
    name = str(spec["family"]).lower()
    if name not in table:
        raise ConfigParse(f"unknown {role} family {spec['family']!r}; known: {sorted(table)}")
    try:
        return table[name](spec)
    except KeyError as exc:
        raise ConfigParse(f"{role} family {name!r} needs field {exc.args[0]!r}") from None
    except TypeError as exc:
        raise ConfigParse(f"bad parameters for {role} family {name!r}: {exc}") from None


def grid_from(d, what):
    if d is None:
        raise ConfigParse(f"grid '{what}' is required")
    try:
        return GridSpec(tuple(map(float, d["lower"])), tuple(map(float, d["upper"])),
                        tuple(int(c) for c in d["counts"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigParse(f"grid '{what}' is malformed: {exc}") from None


# --- presets ----------------------------------------------------------------

HUBER = {"family": "huber", "alpha": 1.0, "p": 2.0}
BERHU = {"family": "berhu", "alpha": 1.0, "p": 2.0}
PHI3 = {"family": "norm_power", "p": 2.0, "shift": 0.5}
CLIPPED = {"family": "clipped_quadratic", "beta": 0.5}
EXAMPLE_JOINT = {"lower": [-3.0, -1.5], "upper": [3.0, 3.0], "counts": [201, 201]}
EXAMPLE_DUAL = {"lower": [-3.0, -3.0], "upper": [3.0, 3.0], "counts": [201, 201]}
EXAMPLE_SURFACE = {"lower": [-3.0, -1.5], "upper": [3.0, 3.0], "counts": [61, 46]}


def _pair(phi, s, name):
    return {"name": name, "phi": phi, "s": s, "grids": {"surface": EXAMPLE_SURFACE,
            "joint": EXAMPLE_JOINT, "dual": EXAMPLE_DUAL}, "tolerance": 0.08, "margin": 0.2,
            "points": [{"x": 1.0, "y": 2.0}, {"x": 0.3, "y": 0.2}, {"x": -2.0, "y": -1.0}]}


PRESETS = {
    "figure1": {"name": "figure1", "kind": "figure1",
                "grids": {"surface": {"lower": [-2.0, -2.0], "upper": [2.0, 2.0], "counts": [41, 41]}}},
    "figure2": {"name": "figure2", "cases": {
        "phi1": _pair(HUBER, CLIPPED, "phi1"), "phi2": _pair(BERHU, CLIPPED, "phi2"),
        "phi3": _pair(PHI3, CLIPPED, "phi3")}},
    "figure3": {"name": "figure3", "cases": {
        "q_half": dict(_pair(PHI3, {"family": "power", "q": 0.5, "below": "+inf"}, "q_half"),
                       grids={"surface": {"lower": [-3.0, -0.5], "upper": [3.0, 3.0],
                                          "counts": [61, 36]}}),
        "q_two": dict(_pair(PHI3, {"family": "power", "q": 2.0, "below": "+inf"}, "q_two"),
                      grids={"surface": {"lower": [-3.0, -0.5], "upper": [3.0, 3.0],
                                         "counts": [61, 36]}})}},
    "figure4": {"name": "figure4", "phi": {"family": "radial_indicator", "a": 1.0, "b": 2.0, "p": 2.0},
                "s": {"family": "power", "q": 0.5, "below": "-inf"},
                "grids": {"surface": {"lower": [-3.0, -0.5], "upper": [3.0, 3.0], "counts": [61, 36]}},
                "points": [{"x": 1.0, "y": 1.0}]},
    "example61": _pair(HUBER, CLIPPED, "example61"),
    "example62": _pair(BERHU, CLIPPED, "example62"),
    "example63": _pair(PHI3, CLIPPED, "example63"),
    "classical": {"name": "classical", "phi": {"family": "norm_power", "p": 2.0},
                  "s": {"family": "identity"}, "points": [{"x": 2.0, "y": 4.0}],
                  "grids": {"surface": {"lower": [-2.0, -1.0], "upper": [2.0, 2.0],
                                        "counts": [41, 31]}}},
}


def _set_path(cfg, path, value):
    keys = path.split(".")
    node = cfg
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigParse(f"cannot set {path}: {k} is not an object")
    node[keys[-1]] = value


def load_config(args):
    if args.config and args.preset:
        raise ConfigParse("use either --config or --preset, not both")
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigParse(f"cannot read config: {exc}") from None
    elif args.preset:
        if args.preset not in PRESETS:
            raise ConfigParse(f"unknown preset {args.preset!r}; known: {sorted(PRESETS)}")
        cfg = copy.deepcopy(PRESETS[args.preset])
    else:
        cfg = {}
    if not isinstance(cfg, dict):
        raise ConfigParse("the config must be a JSON object")
    for item in args.set or []:
        if "=" not in item:
            raise ConfigParse(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        _set_path(cfg, key, value)
    tol = cfg.get("tolerance")
    if tol is not None and not (isinstance(tol, (int, float)) and tol > 0):
        raise ConfigParse("tolerance must be a number > 0")
    return cfg


def _cases(cfg):
    if "cases" in cfg:
        out = []
        for name in sorted(cfg["cases"]):
            case = copy.deepcopy(cfg["cases"][name])
            case.setdefault("name", name)
            out.append(case)
        return out
    return [cfg]


def _pair_from(case):
    return build(case.get("phi"), PHI_FAMILIES, "phi"), build(case.get("s"), S_FAMILIES, "s")


def _points(case, phi, s, key="points", xk="x", yk="y"):
    pts = case.get(key)
    if not pts:
        raise ConfigParse(f"'{key}' must be a nonempty list of {{{xk}, {yk}}} objects")
    try:
        xs = np.array([np.atleast_1d(np.asarray(p[xk], float)) for p in pts])
        ys = np.array([np.atleast_1d(np.asarray(p[yk], float)) for p in pts])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigParse(f"bad entry in '{key}': {exc}") from None
    if xs.shape[1] != phi.dim or ys.shape[1] != s.dim:
        raise ConfigParse(f"points in '{key}' do not match the dimensions of phi and s")
    return xs, ys


def _fmt(v):
    return render(float(v))


def _coords(p):
    return ",".join(repr(float(c)) for c in np.atleast_1d(p))


# --- commands ---------------------------------------------------------------


def cmd_eval(cfg, args, out):
    for case in _cases(cfg):
        phi, s = _pair_from(case)
        rep = perspective_report(phi, s)
        xs, ys = _points(case, phi, s)
        pre = np.atleast_1d(rep.preperspective(xs, ys))
        per = np.atleast_1d(rep.perspective(xs, ys, args.force_branch))
        out.write(f"case {case.get('name', 'job')}: branch {rep.branch} "
                  f"(general case {rep.theorem_branch})\n")
        for x, y, a, b in zip(xs, ys, pre, per):
            out.write(f"  x=({_coords(x)}) y=({_coords(y)}) prepersp={_fmt(a)} persp={_fmt(b)}\n")
        if case.get("conjugate_points"):
            xs, ys = _points(case, phi, s, "conjugate_points", "xstar", "ystar")
            cv = np.atleast_1d(rep.preperspective_conjugate(xs, ys))
            for x, y, c in zip(xs, ys, cv):
                out.write(f"  x*=({_coords(x)}) y*=({_coords(y)}) conjugate={_fmt(c)}\n")
    return EXIT_OK


def cmd_classify(cfg, args, out):
    result = {}
    for case in _cases(cfg):
        phi, s = _pair_from(case)
        rep = perspective_report(phi, s)
        d = rep.to_dict()
        d["convexity_conditions"] = convexity_conditions(phi, s)
        result[case.get("name", "job")] = d
    out.write(json.dumps(result, sort_keys=True, indent=2, default=_plain) + "\n")
    return EXIT_OK


def _plain(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.generic,)):
        return o.item()
    raise TypeError(type(o).__name__)


def _metadata(spec, params, norm):
    return {"norm": norm, "params": params, "grid": spec.to_dict(), "version": __version__}


def _cell(v):
    if isinstance(v, str):
        return v
    v = float(v)
    return repr(v) if math.isfinite(v) else render(v)


def _json_cell(v):
    return v if isinstance(v, str) else to_json_value(float(v))


def _write_table(stem, header, rows, meta):
    """CSV plus a JSON mirror; rows hold floats and strings."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(c) for c in r])
    Path(f"{stem}.csv").write_text(buf.getvalue())
    doc = {"metadata": meta, "header": header, "rows": [[_json_cell(c) for c in r] for r in rows]}
    Path(f"{stem}.json").write_text(json.dumps(doc, sort_keys=True) + "\n")


def _surface_figure1(case, outdir):
    spec = grid_from(case.get("grids", {}).get("surface"), "surface")
    if spec.dim != 2:
        raise ConfigParse("figure1 needs a 2-D surface grid")
    nodes = spec.nodes().reshape(-1, 2)
    hu, be = huber(1.0, 2.0, dim=2), berhu(1.0, 2.0, dim=2)
    a, b = hu(nodes), be(nodes)
    f = (np.sum(nodes ** 2, axis=1) + 1) / 2
    rows = [[p[0], p[1], u, v, max(u, v), w] for p, u, v, w in zip(nodes, a, b, f)]
    meta = _metadata(spec, {"alpha": 1.0, "p": 2.0}, "euclidean")
    stem = outdir / case.get("name", "figure1")
    _write_table(stem, ["x0", "x1", "huber", "berhu", "max", "f"], rows, meta)
    return [f"{stem}.csv"]


def _surface_pair(case, outdir, force_branch):
    phi, s = _pair_from(case)
    spec = grid_from(case.get("grids", {}).get("surface"), "surface")
    if spec.dim != phi.dim + s.dim:
        raise ConfigParse("the surface grid dimension must equal dim(phi) + dim(s)")
    rep = perspective_report(phi, s)
    nodes = spec.nodes().reshape(-1, spec.dim)
    x, y = nodes[:, :phi.dim], nodes[:, phi.dim:]
    pre = np.atleast_1d(rep.preperspective(x, y))
    per = np.atleast_1d(rep.perspective(x, y, force_branch))
    branch = force_branch or rep.branch
    header = ([f"x{i}" for i in range(phi.dim)] + [f"y{i}" for i in range(s.dim)]
              + ["prepersp", "persp", "branch"])
    rows = [list(p) + [a, b, branch] for p, a, b in zip(nodes, pre, per)]
    params = {"phi": {"family": phi.family, **phi.params()}, "s": {"family": s.family, **s.params()}}
    meta = _metadata(spec, params, case.get("phi", {}).get("norm", "euclidean"))
    stem = outdir / case.get("name", "surface")
    _write_table(stem, header, rows, meta)
    return [f"{stem}.csv"]


def cmd_surface(cfg, args, out):
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for case in _cases(cfg):
        if case.get("kind") == "figure1":
            written += _surface_figure1(case, outdir)
        else:
            written += _surface_pair(case, outdir, args.force_branch)
    for w in written:
        out.write(f"wrote {w}\n")
    return EXIT_OK


def _tolerance(case):
    return float(case.get("tolerance", 0.08))


def cmd_verify(cfg, args, out):
    ok = True
    for case in _cases(cfg):
        phi, s = _pair_from(case)
        grids = case.get("grids", {})
        joint = grid_from(grids.get("joint"), "joint")
        dual = grid_from(grids.get("dual"), "dual") if grids.get("dual") else None
        margin = float(case.get("margin", 0.2))
        tol = _tolerance(case)
        cmp = compare_perspective_with_oracle(phi, s, joint, dual, margin, args.force_branch)
        passed = math.isfinite(cmp.max_error) and cmp.max_error <= tol
        rep = perspective_report(phi, s)
        out.write(f"case {case.get('name', 'job')}: branch {args.force_branch or rep.branch}: "
                  f"max interior error {cmp.max_error:.6g} vs tolerance {tol:g} over "
                  f"{cmp.nodes_compared} nodes: {'PASS' if passed else 'FAIL'}\n")
        if args.conjugate:
            if dual is None:
                raise ConfigParse("conjugate verification needs grid 'dual'")
            c2 = compare_conjugate_with_oracle(phi, s, joint, dual, margin)
            p2 = math.isfinite(c2.max_error) and c2.max_error <= tol
            out.write(f"  conjugate: max interior error {c2.max_error:.6g} vs tolerance {tol:g}: "
                      f"{'PASS' if p2 else 'FAIL'}\n")
            passed = passed and p2
        ok = ok and passed
    return EXIT_OK if ok else EXIT_FAIL


def cmd_convergence(cfg, args, out):
    phi = build(cfg.get("phi"), PHI_FAMILIES, "phi")
    base = grid_from(cfg.get("grids", {}).get("primal"), "primal")
    levels = int(cfg.get("levels", 3))
    if levels < 2:
        raise ConfigParse("levels must be at least 2")
    specs = [base]
    for _ in range(levels - 1):
        specs.append(specs[-1].refine())
    hull = phi.closed_hull()
    reference = hull if hull is not None else None
    rep = oracle_convergence(phi, specs, reference=reference, margin=float(cfg.get("margin", 0.1)))
    doc = json.loads(rep.to_json())
    doc["metadata"] = _metadata(base, {"family": phi.family, **phi.params()},
                                cfg.get("phi", {}).get("norm", "euclidean"))
    out.write(json.dumps(doc, sort_keys=True) + "\n")
    return EXIT_OK


COMMANDS = {"eval": cmd_eval, "surface": cmd_surface, "verify": cmd_verify,
            "classify": cmd_classify, "convergence": cmd_convergence}


def make_parser():
    parser = argparse.ArgumentParser(prog="nlpersp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"nlpersp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON job document")
        p.add_argument("--preset", help=f"one of {', '.join(sorted(PRESETS))}")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config field (dotted path, JSON value)")
        if name in ("eval", "surface", "verify"):
            p.add_argument("--force-branch", default=None,
                           help="debug: evaluate with this branch formula instead of the dispatched one")
        if name == "surface":
            p.add_argument("--out-dir", default=".", help="directory for CSV/JSON output")
        if name == "verify":
            p.add_argument("--conjugate", action="store_true",
                           help="also compare the conjugate of the preperspective")
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg, args, out)
    except (HypothesisViolated, EmptyPositiveSet, EmptyNegativeSet) as exc:
        sys.stderr.write(f"hypothesis violated: {exc}\n")
        return EXIT_HYPOTHESIS
    except (ConfigParse, ParameterOutOfRange, DimensionMismatch, GammaOutOfRange,
            GridRequired, UnknownConjugate) as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_CONFIG
    except ValueError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_CONFIG
    except NlperspError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
