"""Command-line surface.

Five subcommands cover the workflow: ``fit`` estimates a model on a CSV
series and writes a report plus plot-ready data files, ``simulate`` draws a
path from a configured model, ``study`` runs a Monte Carlo design,
``diagnose`` scores a series at fixed parameter values and ``check``
evaluates the stationarity condition.  All artifacts are written atomically
and the same configuration with the same seed reproduces them byte for
byte.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.  Failures emit a one-line JSON error object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import diagnostics, estimate, simulate, stationarity
from .engine import Orders, ParamVector, filter_moments, filter_path
from .estimate import FitConfig
from .exceptions import (
    ConfigError,
    DataError,
    DomainError,
    EstimationError,
    GarmaGarchError,
    NumericalError,
    SimulationError,
    StudyError,
)
from .families import Family, get_family

_ESTIMATOR_CHOICES = ("mle", "gmle", "gmle+pseudo")
_DEFAULT_LAGS = (1, 5, 22)


@dataclass
class RunConfig:
    """Validated arguments of one invocation."""

    command: str
    family: Optional[str] = None
    p: int = 0
    q: int = 0
    r: int = 0
    s: int = 0
    estimator: str = "mle"
    input: Optional[Path] = None
    column: str = "0"
    scale: float = 1.0
    output_dir: Path = Path(".")
    seed: int = 0
    reps: int = 200
    T: Optional[int] = None
    burn_in: int = 500
    lags: tuple[int, ...] = _DEFAULT_LAGS
    preset: Optional[str] = None
    h_max: int = 64
    params: Optional[dict] = None
    compute_se: bool = True

    def __post_init__(self) -> None:
        if not (self.scale > 0.0) or not math.isfinite(self.scale):
            raise ConfigError(f"scale must be a positive number, got {self.scale}")
        for name in ("p", "q", "r", "s"):
            if getattr(self, name) < 0:
                raise ConfigError(f"order {name} must be nonnegative")

    def orders(self) -> Orders:
        return Orders(self.p, self.q, self.r, self.s)


# ---------------------------------------------------------------------------
# input plumbing


def ingest_csv(path, column: str = "0", scale: float = 1.0) -> np.ndarray:
    """Read one numeric column of a CSV file, multiplied by ``scale``.

    ``column`` is a zero-based index or a header name.  A header row is
    required when selecting by name and detected automatically (first row
    not parseable as a number) when selecting by index.  Parse failures
    name the offending physical row.
    """
    path = Path(path)
    try:
        index: Optional[int] = int(column)
    except ValueError:
        index = None
    try:
        with open(path, newline="", encoding="utf-8-sig") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError:
        raise DataError(f"input file not found: {path}") from None
    except OSError as err:
        raise DataError(f"could not read {path}: {err}") from None
    except UnicodeDecodeError as err:
        raise DataError(f"{path} is not valid UTF-8: {err}") from None

    rows = [(rno, row) for rno, row in enumerate(rows, start=1)
            if any(cell.strip() for cell in row)]
    if not rows:
        raise DataError(f"{path} contains no data rows")

    start = 0
    if index is None:
        header = [cell.strip() for cell in rows[0][1]]
        if column not in header:
            raise DataError(
                f"column {column!r} not found in header {header} of {path}"
            )
        idx = header.index(column)
        start = 1
    else:
        idx = index
        if idx < 0:
            raise DataError(f"column index must be nonnegative, got {idx}")
        first = rows[0][1]
        try:
            float(first[idx])
        except (ValueError, IndexError):
            start = 1  # treat the first row as a header

    values = []
    for rno, row in rows[start:]:
        if idx >= len(row):
            raise DataError(f"row {rno}: no column {idx} (row has {len(row)} cells)")
        cell = row[idx].strip()
        if cell == "":
            raise DataError(f"row {rno}: missing value")
        try:
            values.append(float(cell) * scale)
        except ValueError:
            raise DataError(
                f"row {rno}: could not parse {cell!r} as a number"
            ) from None
    if not values:
        raise DataError(f"{path} contains a header but no data rows")
    return np.asarray(values, dtype=float)


def load_params(spec: str) -> dict:
    """Parse a parameter mapping given inline as JSON or as ``@file``."""
    if spec.startswith("@"):
        try:
            text = Path(spec[1:]).read_text(encoding="utf-8")
        except OSError as err:
            raise ConfigError(f"could not read parameter file: {err}") from None
    else:
        text = spec
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"invalid parameter JSON: {err}") from None
    if not isinstance(obj, dict):
        raise ConfigError("parameters must be a JSON object of name: value pairs")
    return obj


def params_from_dict(family: Family, orders: Orders, mapping: dict) -> ParamVector:
    """Build a parameter vector from named values.

    Expects ``phi0``, ``phi1..phiP``, ``delta1..deltaQ`` and, when the
    variance recursion is active, ``omega``, ``alpha1..alphaR`` and
    ``beta1..betaS``.  The family's extra parameters are accepted all
    together or omitted entirely.
    """
    garch = orders.r + orders.s > 0
    expected = ["phi0"]
    expected += [f"phi{j}" for j in range(1, orders.p + 1)]
    expected += [f"delta{j}" for j in range(1, orders.q + 1)]
    if garch:
        expected += ["omega"]
        expected += [f"alpha{i}" for i in range(1, orders.r + 1)]
        expected += [f"beta{j}" for j in range(1, orders.s + 1)]
    inv_names = list(family.invariant_names)
    have_inv = [n for n in inv_names if n in mapping]
    if have_inv and len(have_inv) != len(inv_names):
        raise ConfigError(
            f"{family.tag} needs all of {inv_names} when any is given, "
            f"got only {have_inv}"
        )
    unknown = sorted(set(mapping) - set(expected) - set(inv_names))
    if unknown:
        raise ConfigError(f"unknown parameter names: {unknown}")
    missing = [k for k in expected if k not in mapping]
    if missing:
        raise ConfigError(f"missing parameters: {missing}")

    def num(name):
        v = mapping[name]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"parameter {name!r} must be a number, got {v!r}")
        return float(v)

    return ParamVector(
        phi0=num("phi0"),
        phi=tuple(num(f"phi{j}") for j in range(1, orders.p + 1)),
        delta=tuple(num(f"delta{j}") for j in range(1, orders.q + 1)),
        omega=num("omega") if garch else None,
        alpha=tuple(num(f"alpha{i}") for i in range(1, orders.r + 1)),
        beta=tuple(num(f"beta{j}") for j in range(1, orders.s + 1)),
        phi_inv=tuple(num(n) for n in inv_names) if have_inv else (),
    )


def _resolve_model(cfg: RunConfig, need_params: bool = True):
    """Family, orders and parameters from either a preset or explicit flags."""
    if cfg.preset is not None:
        preset = simulate.get_preset(cfg.preset)
        return get_family(preset.family), preset.orders, preset.theta
    if cfg.family is None:
        raise ConfigError("either --preset or --family must be given")
    family = get_family(cfg.family)
    orders = cfg.orders()
    theta = None
    if cfg.params is not None:
        theta = params_from_dict(family, orders, cfg.params)
    elif need_params:
        raise ConfigError("--params is required when no --preset is given")
    return family, orders, theta


# ---------------------------------------------------------------------------
# output plumbing


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _sanitize(obj):
    """Replace non-finite floats by None so reports stay strict JSON."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _write_json(path: Path, obj: dict) -> None:
    _write_atomic(path, json.dumps(_sanitize(obj), indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([x.item() if isinstance(x, np.generic) else x for x in row])
    _write_atomic(path, buf.getvalue())


def _port_dict(res: diagnostics.PortmanteauResult) -> dict:
    return {
        "statistic": res.statistic,
        "p_value": res.p_value,
        "lags": res.lags,
        "df": res.df,
        "available": res.available,
        "note": res.note,
    }


def _diag_dict(rep: Optional[diagnostics.DiagnosticsReport],
               lags: tuple[int, ...], note: str = "") -> dict:
    if rep is None:
        empty = {
            str(m): {"statistic": None, "p_value": None, "lags": m, "df": None,
                     "available": False, "note": "not computed"}
            for m in lags
        }
        return {
            "available": False,
            "note": note,
            "rss": None,
            "q": empty,
            "q_squared": dict(empty),
            "jb": {"statistic": None, "p_value": None, "skewness": None,
                   "kurtosis": None, "available": False, "note": "not computed"},
            "ks": {"statistic": None, "p_value": None},
            "notes": [],
        }
    return {
        "available": True,
        "note": note,
        "rss": rep.rss,
        "q": {str(m): _port_dict(r) for m, r in rep.q.items()},
        "q_squared": {str(m): _port_dict(r) for m, r in rep.q_squared.items()},
        "jb": {
            "statistic": rep.jb.statistic,
            "p_value": rep.jb.p_value,
            "skewness": rep.jb.skewness,
            "kurtosis": rep.jb.kurtosis,
            "available": rep.jb.available,
            "note": rep.jb.note,
        },
        "ks": {"statistic": rep.ks.statistic, "p_value": rep.ks.p_value},
        "notes": list(rep.notes),
    }


def _orders_dict(orders: Orders) -> dict:
    return {"p": orders.p, "q": orders.q, "r": orders.r, "s": orders.s}


def _write_plot_data(out_dir: Path, series: np.ndarray, filt,
                     diag: Optional[diagnostics.DiagnosticsReport]) -> list[str]:
    """Emit the four plot files; skip those needing the full distribution
    when it is not identified (then only the residual band is written)."""
    written = []
    t = np.arange(1, series.size + 1)
    sigma = np.sqrt(filt.sigma2)
    _write_csv(out_dir / "residuals.csv", ("t", "resid", "sigma"),
               zip(t, filt.eps, sigma))
    written.append("residuals.csv")
    if diag is not None:
        _write_csv(out_dir / "fitted.csv", ("t", "y", "y_hat"),
                   zip(t, series, diag.fitted))
        _write_csv(out_dir / "params.csv", ("t", "gamma1", "gamma2"),
                   zip(t, filt.gamma1, filt.gamma2))
        _write_csv(out_dir / "pp.csv", ("u", "nu"), zip(diag.pp.u, diag.pp.nu))
        written += ["fitted.csv", "params.csv", "pp.csv"]
    return written


# ---------------------------------------------------------------------------
# command handlers


def _cmd_fit(cfg: RunConfig) -> list[str]:
    if cfg.input is None:
        raise ConfigError("fit requires --input")
    if cfg.family is None:
        raise ConfigError("fit requires --family")
    family = get_family(cfg.family)
    orders = cfg.orders()
    series = ingest_csv(cfg.input, cfg.column, cfg.scale)
    estimator = "pseudo_ml" if cfg.estimator == "gmle+pseudo" else cfg.estimator
    fit_cfg = FitConfig(seed=cfg.seed, compute_se=cfg.compute_se)
    report = estimate.fit(family, orders, series, estimator=estimator, config=fit_cfg)

    diag = None
    diag_note = ""
    filt = None
    try:
        filt = filter_path(family, orders, report.theta, series)
        diag = diagnostics.compute_diagnostics(
            family, orders, report.theta, series, lags=cfg.lags
        )
    except (DomainError, NumericalError) as err:
        diag_note = f"diagnostics unavailable: {err}"

    artifacts = ["report.json"]
    if filt is not None:
        artifacts += _write_plot_data(cfg.output_dir, series, filt, diag)
    else:
        # the fitted parameter vector does not identify the distribution,
        # so only the innovation and volatility paths can be written
        mu, sigma2, eps = filter_moments(family, orders, report.theta, series)
        if sigma2 is not None:
            t = np.arange(1, series.size + 1)
            _write_csv(cfg.output_dir / "residuals.csv", ("t", "resid", "sigma"),
                       zip(t, eps, np.sqrt(sigma2)))
            artifacts.append("residuals.csv")

    doc = {
        "command": "fit",
        "family": family.tag,
        "orders": _orders_dict(orders),
        "estimator": cfg.estimator,
        "input": str(cfg.input),
        "column": cfg.column,
        "scale": cfg.scale,
        "seed": cfg.seed,
        "n_obs": report.n_obs,
        "n_free": report.n_free,
        "estimates": report.params(family),
        "se": report.se,
        "se_message": report.se_message,
        "converged": report.converged,
        "message": report.message,
        "start_index": report.start_index,
        "objective": report.objective,
        "loglik": report.loglik,
        "aic": report.aic,
        "bic": report.bic,
        "diagnostics": _diag_dict(diag, cfg.lags, diag_note),
        "artifacts": sorted(artifacts),
    }
    _write_json(cfg.output_dir / "report.json", doc)
    return sorted(artifacts)


def _cmd_diagnose(cfg: RunConfig) -> list[str]:
    if cfg.input is None:
        raise ConfigError("diagnose requires --input")
    family, orders, theta = _resolve_model(cfg)
    series = ingest_csv(cfg.input, cfg.column, cfg.scale)
    filt = filter_path(family, orders, theta, series)
    diag = diagnostics.compute_diagnostics(family, orders, theta, series,
                                           lags=cfg.lags)
    artifacts = ["report.json"]
    artifacts += _write_plot_data(cfg.output_dir, series, filt, diag)
    doc = {
        "command": "diagnose",
        "family": family.tag,
        "orders": _orders_dict(orders),
        "input": str(cfg.input),
        "column": cfg.column,
        "scale": cfg.scale,
        "n_obs": diag.n_obs,
        "params": dict(zip(theta.names(family), theta.to_array())),
        "loglik": filt.loglik,
        "diagnostics": _diag_dict(diag, cfg.lags),
        "artifacts": sorted(artifacts),
    }
    _write_json(cfg.output_dir / "report.json", doc)
    return sorted(artifacts)


def _cmd_simulate(cfg: RunConfig) -> list[str]:
    if cfg.T is None:
        raise ConfigError("simulate requires --T")
    family, orders, theta = _resolve_model(cfg)
    y = simulate.simulate_path(
        family, orders, theta, cfg.T, seed=cfg.seed, burn_in=cfg.burn_in
    )
    t = np.arange(1, y.size + 1)
    _write_csv(cfg.output_dir / "series.csv", ("t", "y"), zip(t, y))
    doc = {
        "command": "simulate",
        "family": family.tag,
        "orders": _orders_dict(orders),
        "preset": cfg.preset,
        "params": dict(zip(theta.names(family), theta.to_array())),
        "T": cfg.T,
        "seed": cfg.seed,
        "burn_in": cfg.burn_in,
        "artifacts": ["report.json", "series.csv"],
    }
    _write_json(cfg.output_dir / "report.json", doc)
    return ["report.json", "series.csv"]


def _cmd_study(cfg: RunConfig) -> list[str]:
    if cfg.preset is None:
        raise ConfigError("study requires --preset")
    if cfg.T is None:
        raise ConfigError("study requires --T")
    result = simulate.run_study(
        cfg.preset, cfg.T, n_reps=cfg.reps, seed=cfg.seed,
        burn_in=cfg.burn_in, compute_se=cfg.compute_se,
    )
    cells = []
    csv_rows = []
    for (model, est), cell in result.cells.items():
        params = {}
        for name in cell.mean:
            params[name] = {
                "truth": cell.truth.get(name),
                "mean": cell.mean[name],
                "rmse": cell.rmse[name],
                "sd": cell.sd[name],
                "se_mean": cell.se_mean.get(name),
            }
            csv_rows.append([
                model, est, name,
                _blank(cell.truth.get(name)), cell.mean[name],
                cell.rmse[name], cell.sd[name],
                _blank(cell.se_mean.get(name)),
            ])
        cells.append({
            "model": model,
            "estimator": est,
            "n_used": cell.n_used,
            "n_failed": cell.n_failed,
            "params": params,
        })
    _write_csv(
        cfg.output_dir / "summary.csv",
        ("model", "estimator", "param", "truth", "mean", "rmse", "sd", "se_mean"),
        csv_rows,
    )
    doc = {
        "command": "study",
        "preset": result.preset,
        "T": result.T,
        "n_reps": result.n_reps,
        "seed": result.seed,
        "burn_in": result.burn_in,
        "cells": cells,
        "artifacts": ["report.json", "summary.csv"],
    }
    _write_json(cfg.output_dir / "report.json", doc)
    return ["report.json", "summary.csv"]


def _blank(x):
    return "" if x is None else x


def _cmd_check(cfg: RunConfig) -> list[str]:
    family, orders, theta = _resolve_model(cfg, need_params=False)
    if theta is None:
        raise ConfigError("check requires --params or --preset")
    rep = stationarity.check_stationarity(family, orders, theta, h_max=cfg.h_max)
    doc = {
        "command": "check",
        "family": family.tag,
        "orders": _orders_dict(orders),
        "params": dict(zip(theta.names(family), theta.to_array())),
        "status": rep.status,
        "satisfied": rep.satisfied,
        "h": rep.h,
        "bk_norm": rep.bk_norm,
        "mean_ok": rep.mean_ok,
        "h_max": rep.h_max,
        "details": rep.details,
        "artifacts": ["report.json"],
    }
    _write_json(cfg.output_dir / "report.json", doc)
    return ["report.json"]


_HANDLERS = {
    "fit": _cmd_fit,
    "simulate": _cmd_simulate,
    "study": _cmd_study,
    "diagnose": _cmd_diagnose,
    "check": _cmd_check,
}


# ---------------------------------------------------------------------------
# argument parsing


def _parse_lags(text: str) -> tuple[int, ...]:
    try:
        lags = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"--lags expects comma-separated integers, got {text!r}")
    if not lags or any(m < 1 for m in lags):
        raise ConfigError(f"--lags entries must be positive, got {text!r}")
    return lags


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="garmagarch",
        description="Conditional mean and variance models for positive and "
                    "bounded time series: fit, simulate, study, diagnose, check.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--family", help="distribution family tag")
    model.add_argument("--p", type=int, default=0, help="autoregressive order")
    model.add_argument("--q", type=int, default=0, help="moving-average order")
    model.add_argument("--r", type=int, default=0, help="variance innovation order")
    model.add_argument("--s", type=int, default=0, help="variance persistence order")
    model.add_argument("--params", help="parameter values as JSON or @file")
    model.add_argument("--preset", help="named experiment design (table1|table2)")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--input", type=Path, help="input CSV path")
    data.add_argument("--column", default="0",
                      help="column name or zero-based index (default 0)")
    data.add_argument("--scale", type=float, default=1.0,
                      help="multiply the series by this factor before modelling")

    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("--output-dir", type=Path, default=Path("."),
                     help="directory for report and data files")

    p_fit = sub.add_parser("fit", parents=[model, data, out],
                           help="estimate a model from a CSV series")
    p_fit.add_argument("--estimator", choices=_ESTIMATOR_CHOICES, default="mle")
    p_fit.add_argument("--seed", type=int, default=0,
                       help="seed for the extra optimizer starts")
    p_fit.add_argument("--lags", default="1,5,22",
                       help="portmanteau lags, comma separated")
    p_fit.add_argument("--no-se", action="store_true",
                       help="skip standard error computation")

    p_sim = sub.add_parser("simulate", parents=[model, out],
                           help="draw a path from a configured model")
    p_sim.add_argument("--T", type=int, required=True, help="retained length")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--burn-in", type=int, default=500)

    p_study = sub.add_parser("study", parents=[out],
                             help="run a Monte Carlo experiment preset")
    p_study.add_argument("--preset", required=True)
    p_study.add_argument("--T", type=int, required=True)
    p_study.add_argument("--reps", type=int, default=200)
    p_study.add_argument("--seed", type=int, default=20240901)
    p_study.add_argument("--burn-in", type=int, default=500)
    p_study.add_argument("--se", action="store_true",
                         help="attach information-based standard errors")

    p_diag = sub.add_parser("diagnose", parents=[model, data, out],
                            help="residual diagnostics at fixed parameters")
    p_diag.add_argument("--lags", default="1,5,22")

    p_check = sub.add_parser("check", parents=[model, out],
                             help="verify the stationarity condition")
    p_check.add_argument("--h-max", type=int, default=64,
                         help="largest horizon tried")

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    kw = {"command": args.command}
    for name in ("family", "p", "q", "r", "s", "input", "column", "scale",
                 "preset", "reps", "T", "seed", "h_max"):
        if hasattr(args, name):
            value = getattr(args, name)
            if value is not None:
                kw[name] = value
    if getattr(args, "burn_in", None) is not None:
        kw["burn_in"] = args.burn_in
    if getattr(args, "output_dir", None) is not None:
        kw["output_dir"] = args.output_dir
    if getattr(args, "estimator", None) is not None:
        kw["estimator"] = args.estimator
    if getattr(args, "lags", None) is not None:
        kw["lags"] = _parse_lags(args.lags)
    if getattr(args, "params", None) is not None:
        kw["params"] = load_params(args.params)
    if getattr(args, "no_se", False):
        kw["compute_se"] = False
    if getattr(args, "se", False):
        kw["compute_se"] = True
    elif args.command == "study":
        kw["compute_se"] = False
    return RunConfig(**kw)


_EXIT_CODES = (
    (DataError, 3),
    (ConfigError, 2),
    (DomainError, 2),
    (SimulationError, 4),
    (EstimationError, 4),
    (StudyError, 4),
    (NumericalError, 4),
    (GarmaGarchError, 4),
)


def _exit_code(err: Exception) -> int:
    for cls, code in _EXIT_CODES:
        if isinstance(err, cls):
            return code
    return 4


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        artifacts = _HANDLERS[cfg.command](cfg)
    except (GarmaGarchError, DomainError, NumericalError) as err:
        code = _exit_code(err)
        payload = {"error": {"type": type(err).__name__, "message": str(err),
                             "exit_code": code}}
        sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
        return code
    for name in artifacts:
        print(os.path.join(str(cfg.output_dir), name))
    return 0


if __name__ == "__main__":
    sys.exit(main())
