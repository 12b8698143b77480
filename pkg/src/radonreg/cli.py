"""Command-line entry point: ``radonreg {catalog,synth,verify,fit,predict}``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings

import numpy as np

from .activations import AdmissibilityError, DistributionalKernelError, synth_rbf_kernel
from .catalog import ProfileError, catalog_profile, list_catalog
from .io import (
    DatasetError,
    ModelFileError,
    activation_for,
    load_dataset,
    load_model,
    profile_params,
    save_model,
    write_column,
)
from .lp import LpGrid, fit_lp
from .rbf import UnisolventError, fit_rbf
from .sparse import fit_mnorm
from .verify import SUITES, run_suite

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def _add_profile_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profile", required=True, help="catalog entry, see `catalog list`")
    p.add_argument("--param", type=float, action="append", default=None, help="family parameter (m or alpha)")
    p.add_argument("--antisymmetric", action="store_true", help="use the odd activation variant")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radonreg", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file of option defaults; command-line flags take precedence")
    sub = parser.add_subparsers(dest="command", required=True)

    cat = sub.add_parser("catalog", help="operator catalog")
    cat_sub = cat.add_subparsers(dest="action", required=True)
    lst = cat_sub.add_parser("list", help="list catalog entries")
    lst.add_argument("--json", action="store_true")

    syn = sub.add_parser("synth", help="tabulate activations and kernels as CSV curves")
    syn_sub = syn.add_subparsers(dest="what", required=True)
    act = syn_sub.add_parser("activation")
    _add_profile_args(act)
    act.add_argument("--t-max", type=float, default=5.0)
    act.add_argument("--points", type=int, default=401)
    act.add_argument("--out", help="CSV path (default: stdout)")
    ker = syn_sub.add_parser("kernel")
    _add_profile_args(ker)
    ker.add_argument("--dim", type=int, default=2)
    ker.add_argument("--mode", choices=("radon", "classical"), default="radon")
    ker.add_argument("--r-max", type=float, default=5.0)
    ker.add_argument("--points", type=int, default=401)
    ker.add_argument("--out")

    ver = sub.add_parser("verify", help="run a self-check suite")
    ver.add_argument("suite", choices=sorted(SUITES) + ["all"])

    fit = sub.add_parser("fit", help="fit a model to a CSV dataset")
    _add_profile_args(fit)
    fit.add_argument("--mode", choices=("rbf", "mnorm", "lp"), required=True)
    fit.add_argument("--data", required=True)
    fit.add_argument("--out", required=True, help="model JSON path")
    fit.add_argument("--lambda", dest="lam", type=float, default=0.0)
    fit.add_argument("--kernel-mode", choices=("radon", "classical"), default="radon")
    fit.add_argument("--loss", choices=("squared", "logistic"), default="squared")
    fit.add_argument("--dirs", type=int, default=1, help="dictionary directions (mnorm)")
    fit.add_argument("--seed", type=int, default=None)
    fit.add_argument("--p", type=float, default=2.0, help="Radon-domain norm exponent (lp)")
    fit.add_argument("--grid-size", type=int, default=512, help="offset samples of the sinogram grid (lp)")
    fit.add_argument("--angles", type=int, default=180, help="angle samples of the sinogram grid (lp)")
    fit.add_argument("--psi", choices=("norm", "squared"), default="norm")

    pred = sub.add_parser("predict", help="evaluate a saved model")
    pred.add_argument("--model", required=True)
    pred.add_argument("--data", required=True)
    pred.add_argument("--out", help="CSV path with column yhat (default: stdout)")
    pred.add_argument(
        "--truth", nargs="?", const=True, default=None,
        help="report MSE against the data's y column, or against the y column of the given CSV",
    )
    return parser


def _subparsers(parser: argparse.ArgumentParser):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for child in action.choices.values():
                yield child
                yield from _subparsers(child)


def _apply_config(parser: argparse.ArgumentParser, path: str) -> None:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    if "lambda" in cfg:
        cfg["lam"] = cfg.pop("lambda")
    known = set()
    for p in [parser, *_subparsers(parser)]:
        dests = {a.dest for a in p._actions}
        known |= dests
        hits = {k: v for k, v in cfg.items() if k in dests}
        p.set_defaults(**hits)
        # a config value satisfies a required flag
        for a in p._actions:
            if a.dest in hits:
                a.required = False
    unknown = set(cfg) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")


def _profile(args):
    params = profile_params(args.profile, args.param or ())
    return catalog_profile(args.profile, params, antisymmetric=args.antisymmetric), params


def _emit(rows, header, out) -> None:
    fh = open(out, "w", newline="", encoding="utf-8") if out else sys.stdout
    try:
        wr = csv.writer(fh)
        wr.writerow(header)
        for row in rows:
            wr.writerow([repr(float(v)) for v in row])
    finally:
        if out:
            fh.close()


def cmd_catalog(args) -> int:
    rows = list_catalog()
    if args.json:
        print(json.dumps(rows, indent=1, default=str))
        return EXIT_OK
    for r in rows:
        print(f"{r['name']:<28} {r['formula']:<20} gamma0={r['gamma0']:<5g} gamma1={r['gamma1']:<5g} n0={r['n0']}")
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.points < 2:
        raise UsageError("--points must be at least 2")
    if args.what == "activation":
        act = activation_for(args.profile, args.param or (), args.antisymmetric)
        t = np.linspace(-args.t_max, args.t_max, args.points)
        _emit(zip(t, act(t)), ["t", "value"], args.out)
    else:
        profile, _ = _profile(args)
        kernel = synth_rbf_kernel(profile, args.dim, args.mode, strict=False)
        r = np.linspace(0.0, args.r_max, args.points)
        _emit(zip(r, kernel.radial_eval(r)), ["r", "value"], args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    names = sorted(SUITES) if args.suite == "all" else [args.suite]
    ok = True
    for name in names:
        checks, secs = run_suite(name)
        print(f"suite={name} seconds={secs:.2f}")
        for c in checks:
            print("  " + c.line())
            ok &= c.passed
    print("result=" + ("pass" if ok else "FAIL"))
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_fit(args) -> int:
    data = load_dataset(args.data)
    profile, params = _profile(args)
    n0 = max(profile.n0, -1)
    if args.mode == "rbf":
        kernel = synth_rbf_kernel(profile, data.d, args.kernel_mode, strict=False)
        model = fit_rbf(data.X, data.y, kernel, n0, args.lam, loss=args.loss)
    elif args.mode == "mnorm":
        act = activation_for(args.profile, params, args.antisymmetric)
        model = fit_mnorm(data.X, data.y, act, n0, args.lam, n_dirs=args.dirs, seed=args.seed)
    else:
        if data.d != 2:
            raise DataError(f"lp mode needs d = 2 data, got d = {data.d}")
        grid = LpGrid(args.grid_size, args.angles)
        model = fit_lp(data.X, data.y, profile, args.p, args.lam, grid=grid, psi=args.psi)
    save_model(args.out, model, args.profile, params, args.antisymmetric)
    yhat = model.predict(data.X)
    print(f"mode={args.mode} M={data.M} d={data.d} train_mse={float(np.mean((yhat - data.y) ** 2)):.6e}")
    if args.mode == "mnorm":
        print(f"K0={model.K0} reg_cost={model.reg_cost():.10g} duality_gap={model.duality_gap:.3e}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model, doc = load_model(args.model)
    data = load_dataset(args.data, require_y=False)
    if data.d != int(doc["d"]):
        raise DataError(f"dimension mismatch: model has d = {doc['d']}, data has d = {data.d}")
    yhat = np.atleast_1d(model.predict(data.X))
    if args.out:
        write_column(args.out, "yhat", yhat)
    else:
        _emit(((v,) for v in yhat), ["yhat"], None)
    if args.truth is not None:
        truth = data.y if args.truth is True else load_dataset(args.truth).y
        if truth is None:
            raise DataError("--truth needs a y column")
        if truth.size != yhat.size:
            raise DataError(f"truth has {truth.size} rows, predictions have {yhat.size}")
        print(f"mse={float(np.mean((yhat - truth) ** 2)):.6e}", file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


COMMANDS = {"catalog": cmd_catalog, "synth": cmd_synth, "verify": cmd_verify, "fit": cmd_fit, "predict": cmd_predict}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        cfg_path, argv = _split_config(argv)
        if cfg_path:
            _apply_config(parser, cfg_path)
    except UsageError as exc:
        print(f"radonreg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](args)
    except (UsageError, ProfileError, AdmissibilityError, DistributionalKernelError) as exc:
        print(f"radonreg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DatasetError, ModelFileError, UnisolventError, OSError) as exc:
        print(f"radonreg: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"radonreg: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def _split_config(argv) -> tuple[str | None, list[str]]:
    # --config may appear anywhere, so it is taken out before argparse sees the subcommand
    rest, path, i = [], None, 0
    while i < len(argv):
        tok = argv[i]
        if tok == "--config":
            if i + 1 >= len(argv):
                raise UsageError("--config needs a path")
            path, i = argv[i + 1], i + 2
            continue
        if tok.startswith("--config="):
            path = tok.split("=", 1)[1]
        else:
            rest.append(tok)
        i += 1
    return path, rest


if __name__ == "__main__":
    sys.exit(main())
