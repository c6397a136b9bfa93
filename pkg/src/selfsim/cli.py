"""Command-line front end.

Subcommands: eval, branch-eval, sample, verify, adjudicate, list.
Settings are resolved as CLI flags > ``--config`` JSON > built-in defaults.
Exit status: 0 success, 1 bad configuration, 2 domain error, 3 series
non-convergence (``eval`` still prints the best value).  ``verify`` exits 0
whatever the residuals are; the verdict is in the report.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import math
import sys

from .errors import ConvergenceError, DomainError
from .families import (
    COORDINATES,
    FamilyParams,
    PdeFamilyId,
    Point,
    SolutionBranch,
    eval_branch,
    list_branches,
)
from .hyperfun import (
    EvalOptions,
    KdFSpec,
    PFQSpec,
    Psi2Spec,
    clausen_3f2_integral,
    eval_kdf,
    kdf_partial,
    pfq_derivative,
)
from .verify import (
    FDScheme,
    adjudicate_prefactors,
    default_grid,
    default_scheme,
    make_grid,
    pde_residual_sweep,
)

EXIT_CONFIG, EXIT_DOMAIN, EXIT_CONVERGENCE = 1, 2, 3

PARAM_KEYS = ("alpha", "beta", "m", "n", "k", "nu", "E_amp")
FUNCTIONS = ("1f1", "2f1", "0f2", "1f3", "3f2", "pfq", "psi2", "kdf", "clausen-int")
KDF_GROUPS = ("joint_up", "x_up", "y_up", "joint_low", "x_low", "y_low")

DEFAULTS = {
    "eval": {"rel_tol": 1e-12, "max_terms": 10_000, "order": None, "quad_nodes": 64,
             "format": "csv", "out": None},
    "branch-eval": {"rel_tol": 1e-12, "max_terms": 10_000, "format": "csv", "out": None},
    "sample": {"rel_tol": 1e-12, "max_terms": 10_000, "format": "csv", "out": None},
    "verify": {"rel_tol": 1e-16, "max_terms": 10_000, "h": None, "workers": 1,
               "format": "csv", "out": None},
    "adjudicate": {"rel_tol": 1e-16, "max_terms": 10_000, "h": None,
                   "format": "json", "out": None},
    "list": {"family": None, "format": "csv", "out": None},
}


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"


def _floats(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file with settings")
    common.add_argument("--dump-config", metavar="PATH",
                        help="write the resolved settings as JSON, then run")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"))

    series = _Parser(add_help=False)
    series.add_argument("--rel-tol", dest="rel_tol", type=float)
    series.add_argument("--max-terms", dest="max_terms", type=int)

    physics = _Parser(add_help=False)
    physics.add_argument("--family")
    for key in PARAM_KEYS:
        physics.add_argument("--" + key.replace("_", "-"), dest=key, type=float)

    grid = _Parser(add_help=False)
    grid.add_argument("--grid", action="append", metavar="AXIS=MIN:MAX:COUNT[:log|lin]",
                      help="grid axis; repeat per coordinate (default log-spaced 0.5..2)")

    fd = _Parser(add_help=False)
    fd.add_argument("--h", type=float, help="base finite-difference step")

    parser = _Parser(prog="selfsim", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ev = sub.add_parser("eval", parents=[common, series], help="evaluate a special function")
    ev.add_argument("--fn", choices=FUNCTIONS)
    for name in ("a", "b", "c", "c1", "c2", "c3", "x", "y"):
        ev.add_argument("--" + name, type=float)
    ev.add_argument("--num", type=_floats, help="upper parameters, comma separated")
    ev.add_argument("--den", type=_floats, help="lower parameters, comma separated")
    for g in KDF_GROUPS:
        ev.add_argument("--" + g.replace("_", "-"), dest=g, type=_floats)
    ev.add_argument("--order", type=_ints, help="derivative order (i or i,j)")
    ev.add_argument("--quad-nodes", dest="quad_nodes", type=int)

    be = sub.add_parser("branch-eval", parents=[common, series, physics],
                        help="evaluate a solution branch at one point")
    be.add_argument("--branch", type=int)
    for name in ("x", "y", "t"):
        be.add_argument("--" + name, type=float)

    sa = sub.add_parser("sample", parents=[common, series, physics, grid],
                        help="tabulate a branch over a grid")
    sa.add_argument("--branch", type=int)

    ve = sub.add_parser("verify", parents=[common, series, physics, grid, fd],
                        help="finite-difference residual sweep")
    ve.add_argument("--branch", type=int)
    ve.add_argument("--workers", type=int)

    sub.add_parser("adjudicate", parents=[common, series, physics, grid, fd],
                   help="compare both forms of every disputed branch")

    li = sub.add_parser("list", parents=[common], help="print the branch catalog")
    li.add_argument("--family")
    return parser


# --- configuration -----------------------------------------------------------


def _grid_entries(raw) -> dict:
    if raw is None:
        return {}
    if isinstance(raw, dict):
        return {str(k): str(v) for k, v in raw.items()}
    if isinstance(raw, list):
        out = {}
        for item in raw:
            name, sep, spec = str(item).partition("=")
            if not sep:
                raise ConfigError(f"grid entry {item!r} must look like AXIS=MIN:MAX:COUNT")
            out[name.strip()] = spec.strip()
        return out
    raise ConfigError("grid must be a list of AXIS=... strings or a mapping")


def resolve_config(ns: argparse.Namespace) -> dict:
    command = ns.command
    flags = {k: v for k, v in vars(ns).items()
             if v is not None and k not in ("config", "dump_config", "command")}
    file_cfg = {}
    if ns.config:
        try:
            with open(ns.config, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {ns.config}: {exc}")
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        if file_cfg.get("command", command) != command:
            raise ConfigError(
                f"config is for {file_cfg['command']!r}, not {command!r}")
    allowed = set(DEFAULTS[command]) | {a.dest for a in _subparser(command)._actions}
    allowed |= {"command", "params", "grid"}
    unknown = set(file_cfg) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")

    cfg = dict(DEFAULTS[command])
    cfg.update({k: v for k, v in file_cfg.items() if k not in ("params", "grid", "command")})
    cfg.update({k: v for k, v in flags.items() if k not in PARAM_KEYS and k != "grid"})
    cfg["command"] = command
    if command in ("branch-eval", "sample", "verify", "adjudicate"):
        params = FamilyParams().to_dict()
        file_params = file_cfg.get("params", {})
        if not isinstance(file_params, dict) or set(file_params) - set(PARAM_KEYS):
            raise ConfigError(f"params must be a mapping over {', '.join(PARAM_KEYS)}")
        params.update(file_params)
        params.update({k: flags[k] for k in PARAM_KEYS if k in flags})
        cfg["params"] = params
        for k in PARAM_KEYS:
            cfg.pop(k, None)
    if command in ("sample", "verify", "adjudicate"):
        grid = _grid_entries(file_cfg.get("grid"))
        grid.update(_grid_entries(flags.get("grid")))
        cfg["grid"] = grid
    return cfg


_PARSER = None


def _subparser(command):
    global _PARSER
    if _PARSER is None:
        _PARSER = build_parser()
    sub = next(a for a in _PARSER._actions if isinstance(a, argparse._SubParsersAction))
    return sub.choices[command]


def _need(cfg, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise ConfigError(f"{cfg['command']} needs: {', '.join('--' + k for k in missing)}")
    return [cfg[k] for k in keys]


def _family(cfg) -> PdeFamilyId:
    (name,) = _need(cfg, "family")
    try:
        return PdeFamilyId.parse(name)
    except ValueError as exc:
        raise ConfigError(str(exc))


def _options(cfg) -> EvalOptions:
    try:
        return EvalOptions(rel_tol=float(cfg["rel_tol"]), max_terms=int(cfg["max_terms"]))
    except ValueError as exc:
        raise ConfigError(str(exc))


def _params(cfg) -> FamilyParams:
    return FamilyParams(**{k: float(v) for k, v in cfg["params"].items()})


def _scheme(cfg, family) -> FDScheme:
    base = default_scheme(family)
    if cfg.get("h") is None:
        return base
    try:
        return FDScheme(base.order_required, float(cfg["h"]))
    except ValueError as exc:
        raise ConfigError(str(exc))


def _parse_axis(name, spec):
    parts = spec.split(":")
    if len(parts) not in (3, 4):
        raise ConfigError(f"grid axis {name}: expected MIN:MAX:COUNT[:log|lin], got {spec!r}")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"grid axis {name}: bad numbers in {spec!r}")
    scale = parts[3] if len(parts) == 4 else "log"
    if scale not in ("log", "lin"):
        raise ConfigError(f"grid axis {name}: scale must be log or lin")
    if scale == "log" and lo <= 0:
        raise ConfigError(f"grid axis {name}: log spacing needs a positive minimum")
    return lo, hi, count, scale == "log"


def _grid(cfg, family, params, scheme=None):
    entries = cfg.get("grid") or {}
    if not entries:
        return default_grid(family, params, scheme=scheme)
    extra = set(entries) - set(COORDINATES[family])
    if extra:
        raise ConfigError(f"family {family.value} has no axis {', '.join(sorted(extra))}")
    axes = {name: _parse_axis(name, spec) for name, spec in entries.items()}
    try:
        return make_grid(family, axes)
    except ValueError as exc:
        raise ConfigError(str(exc))


# --- commands ----------------------------------------------------------------


def _group(cfg, key, size=None):
    v = cfg.get(key)
    if v is None:
        v = []
    if size is not None and len(v) != size:
        raise ConfigError(f"--{key.replace('_', '-')} needs {size} values, got {len(v)}")
    return tuple(float(a) for a in v)


def _evaluate(cfg):
    (fn, x) = _need(cfg, "fn", "x")
    opts = _options(cfg)
    order = cfg.get("order") or [0]
    if fn in ("psi2", "kdf"):
        y = _need(cfg, "y")[0]
        if len(order) == 1:
            order = [order[0], 0]
        if fn == "psi2":
            a, c1, c2 = _need(cfg, "a", "c1", "c2")
            spec = Psi2Spec(a, c1, c2).as_kdf()
        else:
            spec = KdFSpec(*(_group(cfg, g) for g in KDF_GROUPS))
        if order == [0, 0]:
            return eval_kdf(spec, x, y, opts)
        return kdf_partial(spec, x, y, order[0], order[1], opts)
    if fn == "clausen-int":
        num, den = _group(cfg, "num", 3), _group(cfg, "den", 2)
        return clausen_3f2_integral(*num, *den, x, quad_nodes=int(cfg["quad_nodes"]))
    if fn == "1f1":
        spec = PFQSpec(_need(cfg, "a"), _need(cfg, "c"))
    elif fn == "2f1":
        spec = PFQSpec(_need(cfg, "a", "b"), _need(cfg, "c"))
    elif fn == "0f2":
        spec = PFQSpec((), _need(cfg, "c1", "c2"))
    elif fn == "1f3":
        spec = PFQSpec(_need(cfg, "a"), _need(cfg, "c1", "c2", "c3"))
    elif fn == "3f2":
        spec = PFQSpec(_group(cfg, "num", 3), _group(cfg, "den", 2))
    else:
        spec = PFQSpec(_group(cfg, "num"), _group(cfg, "den"))
    if len(order) != 1:
        raise ConfigError(f"{fn} takes a single derivative order")
    return pfq_derivative(spec, x, order[0], opts)


def cmd_eval(cfg, out):
    result = _evaluate(cfg)
    if isinstance(result, float):
        record = {"function": cfg["fn"], "value": result}
    else:
        record = {"function": cfg["fn"], "value": result.value,
                  "terms_used": result.terms_used,
                  "truncation_estimate": result.truncation_estimate,
                  "converged": result.converged}
    if cfg["format"] == "json":
        out.write(_dumps(record))
    else:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(list(record))
        w.writerow([fmt(v) for v in record.values()])
    # the best value is still reported; the status flags the budget overrun
    return EXIT_CONVERGENCE if record.get("converged") is False else 0


def cmd_branch_eval(cfg, out):
    family = _family(cfg)
    (index,) = _need(cfg, "branch")
    names = COORDINATES[family]
    coords = _need(cfg, *names)
    p = Point.from_coords(family, coords)
    u = eval_branch(_branch(family, index), _params(cfg), p, _options(cfg))
    if cfg["format"] == "json":
        out.write(_dumps({"family": family.value, "branch": index,
                          "point": dict(zip(names, coords)), "u": u}))
    else:
        w = csv.writer(out, lineterminator="\n")
        w.writerow([*names, "u"])
        w.writerow([fmt(float(c)) for c in coords] + [fmt(u)])
    return 0


def _branch(family, index):
    try:
        return SolutionBranch(family, int(index))
    except ValueError as exc:
        raise ConfigError(str(exc))


def cmd_sample(cfg, out):
    family = _family(cfg)
    branch = _branch(family, _need(cfg, "branch")[0])
    params, opts = _params(cfg), _options(cfg)
    names = COORDINATES[family]
    rows = [(p.coords(family), eval_branch(branch, params, p, opts))
            for p in _grid(cfg, family, params)]
    if cfg["format"] == "json":
        out.write(_dumps({"family": family.value, "branch": branch.index,
                          "columns": [*names, "u"],
                          "rows": [[*c, u] for c, u in rows]}))
    else:
        w = csv.writer(out, lineterminator="\n")
        w.writerow([*names, "u"])
        for c, u in rows:
            w.writerow([fmt(v) for v in c] + [fmt(u)])
    return 0


def cmd_verify(cfg, out):
    family = _family(cfg)
    branch = _branch(family, _need(cfg, "branch")[0])
    params = _params(cfg)
    scheme = _scheme(cfg, family)
    grid = _grid(cfg, family, params, scheme)
    report = pde_residual_sweep(branch, params, grid, scheme, opts=_options(cfg),
                                workers=max(1, int(cfg["workers"])))
    summary = report.summary()
    names = COORDINATES[family]
    if cfg["format"] == "json":
        summary["points"] = [
            {**dict(zip(names, r.coords)), "residual": r.residual,
             "rel_residual": r.rel_residual, "ratio": r.ratio, "error": r.error}
            for r in report.per_point
        ]
        out.write(_dumps(summary))
        return 0
    w = csv.writer(out, lineterminator="\n")
    w.writerow([*names, "residual", "rel_residual"])
    for r in report.per_point:
        w.writerow([fmt(v) for v in r.coords] + [fmt(r.residual), fmt(r.rel_residual)])
    if cfg.get("out"):
        with open(cfg["out"] + ".summary.json", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_dumps(summary))
    else:
        sys.stderr.write(_dumps(summary))
    return 0


def cmd_adjudicate(cfg, out):
    family = _family(cfg)
    params = _params(cfg)
    scheme = _scheme(cfg, family)
    grid = _grid(cfg, family, params, scheme)
    try:
        report = adjudicate_prefactors(family, params, grid, scheme, opts=_options(cfg))
    except DomainError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc))
    if cfg["format"] == "json":
        out.write(_dumps(report.summary()))
        return 0
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["branch", "form", "max_abs_residual", "max_rel_residual",
                "observed_order", "min_ratio", "verdict", "proportional"])
    for e in report.entries:
        for r in (e.canonical, e.printed):
            w.writerow([e.branch, r.label, fmt(r.max_abs_residual), fmt(r.max_rel_residual),
                        fmt(r.observed_order), fmt(r.min_ratio), r.verdict,
                        fmt(e.proportional)])
    return 0


def cmd_list(cfg, out):
    if cfg.get("family"):
        families = [_family(cfg)]
    else:
        families = list(PdeFamilyId)
    rows = [b for f in families for b in list_branches(f)]
    if cfg["format"] == "json":
        out.write(_dumps([{"family": b.family.value, "branch": b.index, "tag": b.tag,
                           "function": b.function, "omega": b.form} for b in rows]))
    else:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["family", "branch", "tag", "function", "omega"])
        for b in rows:
            w.writerow([b.family.value, b.index, b.tag, b.function, b.form])
    return 0


COMMANDS = {
    "eval": cmd_eval,
    "branch-eval": cmd_branch_eval,
    "sample": cmd_sample,
    "verify": cmd_verify,
    "adjudicate": cmd_adjudicate,
    "list": cmd_list,
}


def run(cfg: dict) -> int:
    """Execute a resolved configuration; return the exit status."""
    if cfg.get("out"):
        target = open(cfg["out"], "w", encoding="utf-8", newline="\n")
    else:
        target = contextlib.nullcontext(sys.stdout)
    with target as out:
        return COMMANDS[cfg["command"]](cfg, out)


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = resolve_config(ns)
        if ns.dump_config:
            with open(ns.dump_config, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
        return run(cfg)
    except ConfigError as exc:
        print(f"selfsim: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"selfsim: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ConvergenceError as exc:
        print(f"selfsim: no convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ValueError, OSError) as exc:
        print(f"selfsim: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
