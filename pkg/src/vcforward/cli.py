"""Command-line entry points: select, simulate, basis-check.

Exit codes: 0 success, 1 usage/configuration error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import datetime
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict

import numpy as np

from .data import load_csv
from .errors import ConfigError, DataError, NumericalError
from .regression import fit_full
from .report import (
    build_selection_report,
    curve_grid,
    selection_curves,
    write_curves,
    write_report,
)
from .selection import (
    CRITERIA,
    EbicConfig,
    auto_eta,
    marginal_rank_screen,
    run_forward,
)
from .simulation import SimScenario, _rep_task, aggregate, snr
from .splines import DesignBlock, basis_matrix, build_basis

SCENARIO_KEYS = (
    "example",
    "n",
    "p",
    "t1",
    "t2",
    "seed",
    "reps",
    "L",
    "order",
    "eta_rule",
    "eta",
    "patience",
    "criterion",
    "screen_k",
)

_CRITERION_FLAG = {"argmin-sigma": "argmin_sigma", "argmax-corr": "argmax_corr"}


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so usage errors map to code 1."""

    def error(self, message):
        raise ConfigError(message)


def _timestamp() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def _build_parser() -> _Parser:
    parser = _Parser(prog="vcforward", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sel = sub.add_parser("select", help="forward selection on a CSV dataset")
    sel.add_argument("--data", required=True, help="input CSV with header row")
    sel.add_argument("--y-column", required=True, help="response column name")
    sel.add_argument("--t-column", required=True, help="index-variable column name")
    sel.add_argument("--L", type=int, default=7, help="spline dimension (default 7)")
    sel.add_argument("--order", type=int, default=4, help="spline order (default 4, cubic)")
    sel.add_argument("--eta-rule", choices=("auto", "explicit"), default="explicit")
    sel.add_argument("--eta", type=float, default=None, help="EBIC weight (0 = BIC)")
    sel.add_argument("--patience", type=int, default=5)
    sel.add_argument("--max-steps", type=int, default=None)
    sel.add_argument("--criterion", choices=sorted(_CRITERION_FLAG), default="argmin-sigma")
    sel.add_argument("--screen-k", type=int, default=0, help="marginal pre-screen size (0 = off)")
    sel.add_argument("--initial", default="intercept", help="'intercept', 'empty', or comma-separated columns")
    sel.add_argument("--out", default="report.json", help="report JSON path")
    sel.add_argument("--curves-out", default=None, help="optional coefficient-curve CSV path")
    sel.add_argument("--no-timestamp", action="store_true", help="omit the timestamp (golden tests)")

    sim = sub.add_parser("simulate", help="run a Monte Carlo scenario")
    sim.add_argument("--scenario", default=None, help="scenario file with key=value lines")
    sim.add_argument("--example", choices=("ex1", "ex2"), default=None)
    sim.add_argument("--n", type=int, default=None)
    sim.add_argument("--p", type=int, default=None)
    sim.add_argument("--t1", type=float, default=None)
    sim.add_argument("--t2", type=float, default=None)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--reps", type=int, default=None)
    sim.add_argument("--L", type=int, default=None)
    sim.add_argument("--order", type=int, default=None)
    sim.add_argument("--eta-rule", choices=("auto", "explicit"), default=None)
    sim.add_argument("--eta", type=float, default=None)
    sim.add_argument("--patience", type=int, default=None)
    sim.add_argument("--criterion", choices=sorted(_CRITERION_FLAG), default=None)
    sim.add_argument("--screen-k", type=int, default=None)
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--snr-samples", type=int, default=100_000)
    sim.add_argument("--out", default="aggregate.json", help="aggregate JSON path")
    sim.add_argument("--per-rep-out", default=None, help="optional per-repetition CSV path")
    sim.add_argument("--no-timestamp", action="store_true")

    chk = sub.add_parser("basis-check", help="print partition-of-unity diagnostics")
    chk.add_argument("--L", type=int, default=7)
    chk.add_argument("--order", type=int, default=4)
    chk.add_argument("--points", type=int, default=1000)
    return parser


def _parse_initial(arg: str, column_names) -> tuple[int, ...]:
    if arg == "intercept":
        return (0,)
    if arg == "empty":
        return ()
    names = {name: j for j, name in enumerate(column_names)}
    out = []
    for item in arg.split(","):
        item = item.strip()
        if not item:
            continue
        if item in names:
            out.append(names[item])
        else:
            try:
                out.append(int(item))
            except ValueError:
                raise ConfigError(f"unknown initial covariate {item!r}") from None
    return tuple(out)


def cmd_select(args) -> int:
    if args.eta_rule == "auto" and args.eta is not None:
        raise ConfigError("--eta conflicts with --eta-rule auto")
    eta = args.eta if args.eta is not None else 0.0
    config = EbicConfig(
        eta=eta, eta_rule=args.eta_rule, patience=args.patience, max_steps=args.max_steps
    )
    basis = build_basis(args.L, args.order)
    dataset = load_csv(args.data, args.y_column, args.t_column, min_rows=2 * args.L)

    warnings: list[str] = []
    if dataset.rescale_map != (0.0, 1.0):
        a, b = dataset.rescale_map
        warnings.append(f"index variable rescaled to [0, 1] from [{a!r}, {b!r}]")
    for j in dataset.constant_columns:
        warnings.append(
            f"constant covariate {dataset.column_names[j]!r} excluded from candidates"
        )
    if args.eta_rule == "auto":
        raw = auto_eta(dataset.n, dataset.p)
        if raw < 0.0:
            warnings.append(f"auto eta {raw:.4f} clamped to 0")

    initial = _parse_initial(args.initial, dataset.column_names)
    pool = None
    if args.screen_k > 0:
        pool = marginal_rank_screen(dataset, basis, args.screen_k)
    criterion = _CRITERION_FLAG[args.criterion]
    trace = run_forward(
        dataset, basis, config, initial_set=initial, candidate_pool=pool, criterion=criterion
    )

    bmat = basis_matrix(basis, dataset.t)
    blocks = [DesignBlock(j, bmat * dataset.x[:, j : j + 1]) for j in trace.final_set]
    fit = fit_full(blocks, dataset.y)
    grid = curve_grid()
    curves = selection_curves(fit, basis, dataset.column_names, grid)

    config_echo = {
        "command": "select",
        "data": args.data,
        "y_column": args.y_column,
        "t_column": args.t_column,
        "L": args.L,
        "order": args.order,
        "eta_rule": args.eta_rule,
        "eta": trace.eta,
        "patience": args.patience,
        "max_steps": args.max_steps,
        "criterion": args.criterion,
        "screen_k": args.screen_k,
        "initial": args.initial,
    }
    dataset_info = {
        "n": dataset.n,
        "p": dataset.p,
        "rescale_map": list(dataset.rescale_map),
        "constant_columns": list(dataset.constant_columns),
    }
    report = build_selection_report(
        config=config_echo,
        dataset_info=dataset_info,
        trace=trace,
        final_names=[dataset.column_names[j] for j in trace.final_set],
        curves=curves,
        grid=grid,
        metrics=None,
        warnings=warnings,
        timestamp=None if args.no_timestamp else _timestamp(),
    )
    write_report(report, args.out)
    if args.curves_out:
        write_curves(curves, grid, args.curves_out)

    names = ", ".join(dataset.column_names[j] for j in trace.final_set) or "(none)"
    print(f"selected {len(trace.final_set)} covariates: {names}")
    print(f"stop reason: {trace.stop_reason}; report written to {args.out}")
    return 0


def _read_scenario_file(path) -> dict:
    values: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, _, value = line.partition("=")
                key = key.strip()
                if key not in SCENARIO_KEYS:
                    raise ConfigError(
                        f"{path}:{lineno}: unknown key {key!r}; valid keys: "
                        + ", ".join(SCENARIO_KEYS)
                    )
                values[key] = value.strip()
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from exc
    return values


def _scenario_setting(args, file_values, key, cast, default):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in file_values:
        try:
            return cast(file_values[key])
        except ValueError:
            raise ConfigError(f"scenario key {key!r} has invalid value {file_values[key]!r}") from None
    return default


def cmd_simulate(args) -> int:
    file_values = _read_scenario_file(args.scenario) if args.scenario else {}

    example = _scenario_setting(args, file_values, "example", str, None)
    if example is None:
        raise ConfigError("an example id is required (--example or scenario file)")
    scenario = SimScenario(
        example_id=example,
        n=_scenario_setting(args, file_values, "n", int, 400),
        p=_scenario_setting(args, file_values, "p", int, 1000),
        t1=_scenario_setting(args, file_values, "t1", float, 0.0),
        t2=_scenario_setting(args, file_values, "t2", float, 0.0),
        seed=_scenario_setting(args, file_values, "seed", int, 1),
        reps=_scenario_setting(args, file_values, "reps", int, 200),
    )
    dim = _scenario_setting(args, file_values, "L", int, 7)
    order = _scenario_setting(args, file_values, "order", int, 4)
    eta_rule = _scenario_setting(args, file_values, "eta_rule", str, "explicit")
    eta_raw = _scenario_setting(args, file_values, "eta", float, None)
    if eta_rule == "auto" and eta_raw is not None:
        raise ConfigError("eta conflicts with eta_rule auto")
    patience = _scenario_setting(args, file_values, "patience", int, 5)
    criterion_flag = _scenario_setting(args, file_values, "criterion", str, "argmin-sigma")
    criterion = _CRITERION_FLAG.get(criterion_flag, criterion_flag)
    if criterion not in CRITERIA:
        raise ConfigError(f"unknown criterion {criterion_flag!r}")
    screen_k = _scenario_setting(args, file_values, "screen_k", int, 0)

    config = EbicConfig(
        eta=eta_raw if eta_raw is not None else 0.0,
        eta_rule=eta_rule,
        patience=patience,
    )
    build_basis(dim, order)  # validate early

    tasks = [
        (scenario, r, dim, order, config, criterion, screen_k)
        for r in range(scenario.reps)
    ]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_rep_task, tasks, chunksize=1))
    else:
        results = [_rep_task(t) for t in tasks]
    results.sort(key=lambda r: r[0])

    metrics = [m for _, m, _, _ in results]
    snr_estimate = snr(scenario, args.snr_samples)
    agg = aggregate(metrics, snr_estimate=snr_estimate)

    out = {"schema": 1}
    if not args.no_timestamp:
        out["generated_at"] = _timestamp()
    out["scenario"] = asdict(scenario)
    out["settings"] = {
        "L": dim,
        "order": order,
        "eta_rule": eta_rule,
        "eta": eta_raw,
        "patience": patience,
        "criterion": criterion,
        "screen_k": screen_k,
        "workers": args.workers,
    }
    out["metrics"] = asdict(agg)
    write_report(out, args.out)

    if args.per_rep_out:
        try:
            with open(args.per_rep_out, "w", encoding="utf-8", newline="") as fh:
                fh.write("rep,tp,fp,pe,model_size,selected,stop_reason\n")
                for rep, m, final_set, stop in results:
                    sel = ";".join(str(j) for j in final_set)
                    fh.write(
                        f"{rep},{m.tp},{m.fp},{m.pe!r},{m.model_size},{sel},{stop}\n"
                    )
        except OSError as exc:
            raise DataError(f"{args.per_rep_out}: {exc.strerror or exc}") from exc

    print(
        f"{scenario.example_id} [{scenario.t1:g},{scenario.t2:g}] reps={scenario.reps}: "
        f"TP={agg.mean_tp:.2f} FP={agg.mean_fp:.2f} PE={agg.mean_pe:.3f} "
        f"size={agg.mean_size:.2f} SNR={agg.snr_estimate:.2f}"
    )
    print(f"aggregate written to {args.out}")
    return 0


def cmd_basis_check(args) -> int:
    basis = build_basis(args.L, args.order)
    grid = np.linspace(0.0, 1.0, args.points)
    bmat = basis_matrix(basis, grid)
    sums = bmat.sum(axis=1)
    nonzero = (bmat != 0.0).sum(axis=1)
    print(f"basis: dim={basis.dim} order={basis.order}")
    print(f"interior knots: {', '.join(f'{k:.6g}' for k in basis.interior_knots) or '(none)'}")
    print(f"max |sum - 1| over {args.points} points: {np.abs(sums - 1.0).max():.3e}")
    print(f"max nonzero entries per point: {int(nonzero.max())} (order = {basis.order})")
    print(f"min basis value: {bmat.min():.3e}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "select":
            return cmd_select(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "basis-check":
            return cmd_basis_check(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
