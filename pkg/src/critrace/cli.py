"""Command-line front end.

    critrace {norm|constants|verify-expansions|theorem42|fermi-check}
             --config PATH [--out DIR] [--tol REL] [--seed U64]

Exit codes: 0 pass, 1 inconclusive or failed check, 2 bad input or
violated hypothesis, 3 numerical failure.
"""
import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import __version__
from .energy import f_coefficients, theorem42_verdict
from .errors import InputError, NumericalError
from .expansions import verify_expansion
from .extremal import (BubbleParams, QuadratureSpec, TABLE_SPEC, bubble_integral_table,
                       trace_constant_closed_form)
from .fermi import GeometrySpec, expansion_residual_check
from .fields import ProblemConfig
from .luxemburg import SampledField, luxemburg_norm, modular, norm_relations, sobolev_modular, sobolev_norm

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _load_field(spec, base):
    if isinstance(spec, str):
        path = os.path.join(base, spec)
        return SampledField.from_csv(path) if path.endswith(".csv") else SampledField.from_json(path)
    if isinstance(spec, dict):
        return SampledField.from_dict(spec)
    raise InputError("a field must be an inline object or a file path")


def _table_spec(args):
    return QuadratureSpec(rtol=args.tol) if args.tol else TABLE_SPEC


def _manifest(args):
    return {"command": args.command, "config": os.path.abspath(args.config), "out": args.out,
            "tol": args.tol, "seed": args.seed, "version": __version__}


def _write(args, name, text):
    if args.out is None:
        return
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, name), "w", newline="") as fh:
        fh.write(text)


def _emit(args, name, report):
    """Full report to the output directory, summary without inputs to stdout."""
    _write(args, name, _dump(report))
    sys.stdout.write(_dump({k: v for k, v in report.items() if k != "resolved"}))


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def cmd_norm(args):
    data = _load_json(args.config)
    base = os.path.dirname(os.path.abspath(args.config))
    u = _load_field(data["u"], base)
    p = data.get("p", 2.0)
    p = p if isinstance(p, (int, float)) else _load_field(p, base)
    report = {"manifest": _manifest(args),
              "resolved": {"u": u.to_dict(), "p": p if isinstance(p, (int, float)) else p.to_dict()},
              "luxemburg_norm": luxemburg_norm(u, p), "modular": modular(u, p),
              "relations": norm_relations(u, p)}
    if "grad" in data:
        grad = [_load_field(g, base) for g in data["grad"]]
        report["resolved"]["grad"] = [g.to_dict() for g in grad]
        report["sobolev_norm"] = sobolev_norm(u, grad, p)
        report["sobolev_modular"] = sobolev_modular(u, grad, p)
    rel = report["relations"]
    ok = all(v for k, v in rel.items() if isinstance(v, (bool, np.bool_)))
    report["passed"] = bool(ok)
    _emit(args, "norm_report.json", report)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_constants(args):
    data = _load_json(args.config)
    pairs = data.get("pairs")
    if not pairs:
        raise InputError("constants config needs a non-empty 'pairs' list")
    names = data.get("entries", ["G0", "G1", "G2", "Gy", "Gty", "Vp", "S0", "Sy"])
    spec = _table_spec(args)
    rows = []
    for N, p in pairs:
        params = BubbleParams(int(N), float(p))
        table = bubble_integral_table(params, spec, ["G0", "S0"] + [n for n in names if n not in ("G0", "S0")])
        ps = params.p_star
        K = table["S0"] ** (1 / ps) / table["G0"] ** (1 / p)
        f0 = (1 / p - 1 / ps) * K ** (-p * ps / (ps - p))
        row = {"N": int(N), "p": float(p), "K": K, "K_closed_form": trace_constant_closed_form(int(N), float(p)),
               "f0(1)": f0}
        for n in names:
            e = table.get(n)
            row[n] = e.value if e.available else "unavailable"
        rows.append(row)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    _write(args, "constants.csv", buf.getvalue())
    _write(args, "constants.json", _dump({"manifest": _manifest(args), "resolved": data, "rows": rows}))
    sys.stdout.write(buf.getvalue())
    return EXIT_PASS


def _default_kinds(config):
    kinds = ["gradient"]
    if config.p0 < (config.N - 1) / 2:
        kinds.append("boundary")
    if config.p0 ** 2 < config.N:
        kinds.append("volume")
    return kinds


def _parse_faults(items):
    out = {}
    for item in items or ():
        name, _, factor = item.partition("=")
        out[name] = float(factor) if factor else 1.5
    return out


def cmd_verify_expansions(args):
    data = _load_json(args.config)
    config = ProblemConfig.from_dict(data)
    kinds = data.get("kinds") or _default_kinds(config)
    table = bubble_integral_table(BubbleParams(config.N, config.p0), _table_spec(args))
    faults = _parse_faults(args.inject_fault)
    reports = {}
    for kind in kinds:
        perturb = {k: v for k, v in faults.items()
                   if k[0] == {"gradient": "D", "boundary": "A", "volume": "C"}[kind]}
        rep = verify_expansion(config, kind, table=table, order=int(data.get("order", 24)),
                               convention=data.get("convention", "trace"), perturb=perturb)
        reports[kind] = rep.to_dict()
        if args.out is not None:
            os.makedirs(args.out, exist_ok=True)
            rep.to_csv(os.path.join(args.out, f"samples_{kind}.csv"))
    passed = all(r["passed"] for r in reports.values())
    _emit(args, "verify_report.json", {"manifest": _manifest(args), "resolved": config.to_dict(), "passed": passed,
                  "reports": reports, "injected_faults": faults})
    return EXIT_PASS if passed else EXIT_FAIL


def cmd_theorem42(args):
    config = ProblemConfig.from_json(args.config)
    table = bubble_integral_table(BubbleParams(config.N, config.p0), _table_spec(args))
    verdict = theorem42_verdict(config, table)
    fc = f_coefficients(config, table)
    out = {"manifest": _manifest(args), "resolved": config.to_dict(), "verdict": verdict.to_dict(),
           "f_at_1": {k: float(v(1.0)) for k, v in fc.f.items()}}
    _emit(args, "theorem42.json", out)
    return EXIT_PASS if verdict.passed else EXIT_FAIL


def cmd_fermi_check(args):
    data = _load_json(args.config)
    geo = GeometrySpec.from_dict(data.get("geometry", data))
    rep = expansion_residual_check(geo, seed=args.seed, convention=data.get("convention", "trace"))
    _emit(args, "fermi_check.json", {"manifest": _manifest(args), "resolved": geo.to_dict(), "report": rep.to_dict()})
    return EXIT_PASS if rep.passed else EXIT_FAIL


COMMANDS = {
    "norm": cmd_norm,
    "constants": cmd_constants,
    "verify-expansions": cmd_verify_expansions,
    "theorem42": cmd_theorem42,
    "fermi-check": cmd_fermi_check,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="critrace", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True)
    ap.add_argument("--out", default=None, help="directory for report files")
    ap.add_argument("--tol", type=float, default=None, help="relative quadrature tolerance")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--inject-fault", action="append", metavar="NAME[=FACTOR]", help=argparse.SUPPRESS)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if not 0 <= args.seed < 2 ** 64:
        print("error: seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InputError, OSError, KeyError, TypeError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
