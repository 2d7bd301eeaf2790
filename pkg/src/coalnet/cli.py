"""Command-line front end.

    coalnet net show FILE
    coalnet net coalesce A I B J -o OUT
    coalnet spectrum FILE [--check-union]
    coalnet classify FILE [--jet JET] [--mu MU]
    coalnet verify FILE [--jet JET] [--mu MU] [--dump DIR]

FILE is a path or the name of a bundled example (``coalnet net list``).
Every global option can also be set through an environment variable
``COALNET_<OPTION>`` (for example ``COALNET_LAMBDA_MAX=1e-3``).

Exit codes: 0 success, 2 unreadable input, 3 precondition not met,
4 prediction and oracle disagree.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings
from fractions import Fraction
from pathlib import Path

import numpy as np
import sympy as sp

from . import io
from .branches import predict
from .continuation import OracleConfig, branch_rows
from .errors import (CellIndexError, CoalnetError, ConnectivityError, ConsistencyError, GenericityError,
                     InputError, JetError, ParseError, PreconditionError, RankError)
from .network import Coalescence, adjacency, coalesce, is_regular, laplacian
from .spectral import coupling_condition, eigen_structure, spectrum_union_check
from .verify import AGREE, verify

EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION, EXIT_DISAGREE = 0, 2, 3, 4
ENV_PREFIX = "COALNET_"


def _env(name: str, default):
    raw = os.environ.get(ENV_PREFIX + name.upper())
    if raw is None:
        return default
    if isinstance(default, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    return type(default)(raw) if default is not None else raw


# rendering


def plain(x):
    """Convert library values into JSON-friendly ones; exact numbers become strings."""
    if isinstance(x, dict):
        return {str(k): plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [plain(v) for v in x]
    if isinstance(x, sp.MatrixBase):
        if x.cols == 1:
            return [plain(v) for v in x]
        return [[plain(v) for v in x.row(i)] for i in range(x.rows)]
    if isinstance(x, np.ndarray):
        return plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    if isinstance(x, complex):
        return float(x.real) if x.imag == 0 else str(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, sp.Basic):
        return str(sp.nsimplify(x)) if x.is_Float else str(x)
    if hasattr(x, "value") and isinstance(getattr(x, "value"), str):
        return x.value
    return x


def _matrix_text(M) -> list[str]:
    cells = [[str(M[i, j]) for j in range(M.cols)] for i in range(M.rows)]
    width = max((len(c) for row in cells for c in row), default=1)
    return ["  [" + " ".join(c.rjust(width) for c in row) + "]" for row in cells]


def _table(header: list[str], rows: list[list]) -> list[str]:
    rows = [[str(c) for c in r] for r in rows]
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    fmt = "  ".join("{:<%d}" % w for w in widths)
    return [fmt.format(*header), fmt.format(*("-" * w for w in widths))] + [fmt.format(*r) for r in rows]


def emit(args, data: dict, text: list[str]) -> None:
    if args.format == "json":
        print(json.dumps(plain(data), indent=2))
    else:
        print("\n".join(text))


# commands


def _load_any(name: str):
    """Network or coalescence file; returns ``(network, coalescence or None, mu or None)``."""
    path = io.resolve(name)
    if io.is_coalescence_file(path):
        coal, mu = io.load_coalescence(path)
        return coal.network, coal, mu
    return io.load_network(path), None, None


def _network_data(net) -> dict:
    W, L = adjacency(net), laplacian(net)
    D = sp.diag(*[sum(W.row(i)) for i in range(net.n_cells)])
    return {"n_cells": net.n_cells, "labels": list(net.labels), "edges": [list(e) for e in net.edges],
            "W": W, "D": D, "L": L, "regular": is_regular(net)}


def _network_text(net, title: str) -> list[str]:
    d = _network_data(net)
    out = [f"{title}: {net.n_cells} cells, {len(net.edges)} edges, regular={d['regular']}",
           "labels: " + " ".join(net.labels), "edges (source -> target, weight):"]
    out += [f"  {s} -> {t}  {w}" for s, t, w in net.edges]
    for key in ("W", "D", "L"):
        out.append(f"{key} =")
        out += _matrix_text(d[key])
    return out


def cmd_net(args) -> int:
    if args.net_command == "list":
        names = io.bundled_names()
        emit(args, {"examples": names}, names)
        return EXIT_OK
    if args.net_command == "show":
        net, coal, mu = _load_any(args.file)
        data = _network_data(net)
        text = _network_text(net, "network")
        if coal is not None:
            data |= {"first": _network_data(coal.first), "merge_1": coal.merge_1,
                     "second": _network_data(coal.second), "merge_2": coal.merge_2,
                     "ffcn": coal.is_ffcn, "mu": mu}
            text = ([f"coalescence: cell {coal.merge_1} of the first component merged with "
                     f"cell {coal.merge_2} of the second; feedforward={coal.is_ffcn}"]
                    + _network_text(coal.first, "first component")
                    + _network_text(coal.second, "second component") + text)
        emit(args, data, text)
        return EXIT_OK
    # coalesce
    a = io.load_network(io.resolve(args.first))
    b = io.load_network(io.resolve(args.second))
    try:
        net, cmap = coalesce(a, args.merge_1, b, args.merge_2)
    except CellIndexError as exc:
        raise InputError(str(exc)) from None
    if args.output:
        io.save_network(net, args.output)
    data = _network_data(net) | {"merge_cell": cmap.merge_cell, "ffcn": Coalescence(a, args.merge_1, b, args.merge_2).is_ffcn}
    text = _network_text(net, "coalesced network") + [f"merge cell: {cmap.merge_cell}"]
    if args.output:
        text.append(f"written to {args.output}")
    emit(args, data, text)
    return EXIT_OK


def _chain_text(chain) -> str:
    return " -> ".join("(" + ", ".join(str(x) for x in v) + ")" for v in chain)


def cmd_spectrum(args) -> int:
    net, coal, _ = _load_any(args.file)
    exact = True if args.exact else None
    S = eigen_structure(laplacian(net), exact, args.tol)
    rows, data_rows = [], []
    for e in S.eigenvalues:
        rows.append([e.value, e.m_a, e.m_g, "yes" if e.semisimple else "no",
                     " | ".join(_chain_text(c) for c in e.chains)])
        data_rows.append({"mu": e.value, "exact": e.exact, "m_a": e.m_a, "m_g": e.m_g,
                          "semisimple": e.semisimple, "chains": e.chains})
    data = {"n_cells": net.n_cells, "exact": S.exact, "eigenvalues": data_rows, "warnings": S.warnings}
    text = _table(["mu", "m_a", "m_g", "semisimple", "Jordan chains"], rows) + S.warnings
    if coal is not None and coal.is_ffcn:
        verdicts = []
        for e in S.eigenvalues:
            v = coupling_condition(coal, e.value, args.tol)
            verdicts.append({"mu": e.value, "coupling": v.holds, "tail_eigenvalue": v.is_tail_eigenvalue})
        data["coupling"] = verdicts
        text += ["", "merge-cell column in Im(L_tail - mu I):"]
        text += [f"  mu={d['mu']}: {'yes' if d['coupling'] else 'no'}"
                 + (" (eigenvalue of L_tail)" if d["tail_eigenvalue"] else "") for d in verdicts]
    if args.check_union:
        if coal is None:
            raise PreconditionError("--check-union needs a coalescence file")
        coal.require_ffcn()
        rep = spectrum_union_check(coal, exact, args.tol)
        data["union"] = {"ok": rep.ok, "missing": list(rep.missing),
                         "rows": [{k: getattr(r, k) for k in r.__dataclass_fields__} for r in rep.rows]}
        urows = [[r.mu, r.m_a, f"{r.m_a_first}+{r.m_a_second}", "ok" if r.multiplicity_ok else "FAIL",
                  {True: "ok", False: "FAIL", None: "-"}[r.semisimplicity_ok]] for r in rep.rows]
        text += ["", "multiplicity identity:"] + _table(["mu", "m_a", "components", "identity", "semisimplicity"], urows)
        text.append("union check: " + ("passed" if rep.ok else "FAILED"))
        emit(args, data, text)
        return EXIT_OK if rep.ok else EXIT_DISAGREE
    emit(args, data, text)
    return EXIT_OK


def _oracle_config(args) -> OracleConfig:
    return OracleConfig(lambda_min=args.lambda_min, lambda_max=args.lambda_max,
                        n_lambda=args.n_lambda, seed_delta=args.seed_delta)


def _coalescence_and_jet(args):
    path = io.resolve(args.file)
    if not io.is_coalescence_file(path):
        raise PreconditionError("classification needs a coalescence file")
    coal, mu_file = io.load_coalescence(path)
    jet = io.load_jet(args.jet) if args.jet else io.load_jet(io.default_jet_path())
    mu = Fraction(args.mu) if args.mu is not None else mu_file
    if mu is not None:
        jet = jet.at_eigenvalue(sp.Rational(mu.numerator, mu.denominator))
    elif jet.g_x is None:
        raise PreconditionError("no critical eigenvalue: give --mu, a mu entry, or g_x in the jet")
    return coal, jet


def _fmt_ex(ex) -> str:
    return "(" + ", ".join(str(e) for e in ex) + ")" if ex is not None else "-"


def _seed_label(seed) -> str:
    if seed.trivial:
        return "trivial"
    if seed.slope is not None:
        return "slope " + _fmt_ex(list(seed.slope))
    return "exponents " + _fmt_ex(seed.exponents)


def _prediction_data(report) -> list[dict]:
    out = []
    for p in report.predictions:
        out.append({"seed": _seed_label(p.seed), "seed_domain": p.seed.domain, "case": p.case_tag,
                    "branch_count": p.branch_count, "exponents": p.growth_exponent_per_cell,
                    "lambda_domain": p.lambda_domain, "ls_coefficients": p.ls_coefficients,
                    "derivatives": p.derivatives, "note": p.note,
                    "branches": [{"exponents": b.exponents, "domain": b.domain, "trivial": b.trivial,
                                  "role": b.role} for b in p.branches]})
    return out


def _prediction_text(report) -> list[str]:
    rows = [[i, _seed_label(p.seed), p.case_tag, p.branch_count if p.branch_count is not None else "-",
             p.lambda_domain or "-", _fmt_ex(p.growth_exponent_per_cell)]
            for i, p in enumerate(report.predictions)]
    text = [f"critical eigenvalue mu = {report.mu}"]
    text += _table(["#", "seed", "case", "count", "lambda domain", "exponents"], rows)
    for i, p in enumerate(report.predictions):
        extra = {k: v for k, v in p.ls_coefficients.items()}
        extra |= {k: (list(v) if isinstance(v, sp.MatrixBase) else v) for k, v in p.derivatives.items()}
        if extra:
            text.append(f"  seed {i}: " + ", ".join(f"{k}={v}" for k, v in extra.items()))
        if p.note:
            text.append(f"  seed {i}: {p.note}")
    text.append(f"predicted nontrivial branches: {report.count_on_side(-1)} for lam<0, "
                f"{report.count_on_side(1)} for lam>0"
                + ("" if report.complete else " (degenerate seeds not counted)"))
    return text


def cmd_classify(args) -> int:
    coal, jet = _coalescence_and_jet(args)
    coal.require_ffcn()
    report = predict(coal, jet, _oracle_config(args))
    data = {"mu": report.mu, "complete": report.complete, "seeds": _prediction_data(report),
            "predicted_count": {"negative": report.count_on_side(-1), "positive": report.count_on_side(1)}}
    emit(args, data, _prediction_text(report))
    return EXIT_OK


def _dump(result, n: int, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "branches.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["branch", "lam"] + [f"x{i}" for i in range(1, n + 1)])
        w.writerows(branch_rows(result))
    with open(directory / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["branch", "side"] + [f"exp{i}" for i in range(1, n + 1)] + [f"hw{i}" for i in range(1, n + 1)])
        for k, b in enumerate(result.branches):
            for p in b.pieces:
                w.writerow([k, p.side] + list(p.exponents) + list(p.halfwidths))


def cmd_verify(args) -> int:
    coal, jet = _coalescence_and_jet(args)
    coal.require_ffcn()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ver = verify(coal, jet, _oracle_config(args), args.tol_exponent)
    if args.dump:
        _dump(ver.oracle, coal.network.n_cells, Path(args.dump))
    rows, data_rows = [], []
    for r in ver.rows:
        pred = _fmt_ex(r.predicted.exponents) if r.predicted else "-"
        obs = "(" + ", ".join(f"{e:.3f}" for e in r.observed_exponents) + ")" if r.observed else "-"
        dom = (r.predicted.domain if r.predicted else "-") + " / " + (r.observed.domain if r.observed else "-")
        rows.append([r.seed if r.seed is not None else "-", r.case or "-", pred, obs, dom, r.verdict, r.reason])
        data_rows.append({"seed": r.seed, "case": r.case, "predicted": r.predicted and r.predicted.exponents,
                          "predicted_domain": r.predicted and r.predicted.domain,
                          "observed": list(r.observed_exponents) or None,
                          "observed_domain": r.observed and r.observed.domain,
                          "verdict": r.verdict, "reason": r.reason})
    text = _prediction_text(ver.report) + [""]
    text += _table(["seed", "case", "predicted", "observed", "domain (pred / obs)", "verdict", "note"], rows)
    text.append(f"oracle: {ver.observed_count(-1)} nontrivial branches for lam<0, "
                f"{ver.observed_count(1)} for lam>0; {ver.oracle.discarded} discarded")
    text += [f"warning: {w.message}" for w in caught]
    agreed = sum(1 for r in ver.rows if r.verdict == AGREE)
    text.append(f"verdict: {'all agree' if ver.ok else 'DISAGREEMENT'} ({agreed} matched rows)")
    data = {"mu": ver.report.mu, "agree": ver.ok, "seeds": _prediction_data(ver.report), "rows": data_rows,
            "observed_count": {"negative": ver.observed_count(-1), "positive": ver.observed_count(1)},
            "predicted_count": {"negative": ver.report.count_on_side(-1), "positive": ver.report.count_on_side(1)},
            "seconds": ver.seconds, "warnings": [str(w.message) for w in caught]}
    emit(args, data, text)
    return EXIT_OK if ver.ok else EXIT_DISAGREE


# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--exact", action="store_true", default=_env("exact", False),
                   help="insist on exact rational arithmetic")
    g.add_argument("--tol", type=float, default=_env("tol", 1e-9), help="relative rank/eigenvalue tolerance")
    g.add_argument("--format", choices=("text", "json"), default=_env("format", "text"))
    g.add_argument("--lambda-max", type=float, default=_env("lambda_max", 1e-2))
    g.add_argument("--lambda-min", type=float, default=_env("lambda_min", 1e-6))
    g.add_argument("--n-lambda", type=int, default=_env("n_lambda", 24))
    g.add_argument("--seed-delta", type=float, default=_env("seed_delta", 1e-3))
    g.add_argument("--tol-exponent", type=float, default=_env("tol_exponent", 0.05),
                   help="allowed gap between predicted and fitted exponents")

    parser = argparse.ArgumentParser(prog="coalnet", description="Coalescence networks: spectra and bifurcating branches.",
                                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    net = sub.add_parser("net", help="inspect or build networks", parents=[common])
    net_sub = net.add_subparsers(dest="net_command", required=True)
    show = net_sub.add_parser("show", help="print W, D and L", parents=[common])
    show.add_argument("file")
    net_sub.add_parser("list", help="list bundled examples", parents=[common])
    co = net_sub.add_parser("coalesce", help="merge two networks", parents=[common])
    co.add_argument("first")
    co.add_argument("merge_1", type=int)
    co.add_argument("second")
    co.add_argument("merge_2", type=int)
    co.add_argument("-o", "--output")
    net.set_defaults(func=cmd_net)

    spec = sub.add_parser("spectrum", help="eigenvalues, multiplicities and Jordan chains", parents=[common])
    spec.add_argument("file")
    spec.add_argument("--check-union", action="store_true", help="check the component multiplicity identity")
    spec.set_defaults(func=cmd_spectrum)

    for name, func, helptext in (("classify", cmd_classify, "case and predicted branches per seed"),
                                 ("verify", cmd_verify, "compare predictions with numerical continuation")):
        p = sub.add_parser(name, help=helptext, parents=[common])
        p.add_argument("file")
        p.add_argument("--jet", help="jet file (default: the bundled reference jet)")
        p.add_argument("--mu", help="critical eigenvalue; overrides the file")
        if name == "verify":
            p.add_argument("--dump", help="directory for CSV branch data")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ParseError, InputError, JetError, CellIndexError, ConnectivityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (PreconditionError, RankError, GenericityError) as exc:
        print(f"precondition: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ConsistencyError as exc:
        print(f"inconsistent results: {exc}", file=sys.stderr)
        return EXIT_DISAGREE
    except CoalnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
