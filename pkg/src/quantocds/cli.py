"""Command-line interface.

Subcommands: price, survival-curve, validate, calibrate, backtest, sweep.
Values cross the CLI boundary in basis points (printed with two decimals);
everything internal is annualized decimals.  Every command honors --seed
and writes byte-identical outputs for identical inputs.  Exit codes:
0 success, 1 compute/validation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import validation
from .calibration import (
    CalibrationConfig,
    CalibrationError,
    MarketSnapshot,
    backtest,
    historical_correlation,
)
from .cds import CdsContract, quanto_par_spread
from .model import HazardParams, QuantoFxParams, RatePair
from .pde import PdeInstabilityError, SolverConfig, quanto_survival_curve

_OUT_DIR_ENV = "QCDS_OUT_DIR"

SWEEP_AXES = ("gamma", "rho", "sigma_z", "sigma_y", "y0", "b", "a", "z0", "r", "r_hat")


def _fbp(x: float) -> str:
    """decimal -> basis points, two decimals (the CLI quoting convention)."""
    return f"{x * 1e4:.2f}"


def _fpar(x: float) -> str:
    return f"{x:.6g}"


def _add_model_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model parameters (annualized decimals)")
    g.add_argument("--a", type=float, default=1e-4, help="hazard mean-reversion speed")
    g.add_argument("--b", type=float, default=-210.45, help="hazard long-term log level")
    g.add_argument("--sigma-y", type=float, default=0.2, help="log-hazard volatility")
    g.add_argument("--y0", type=float, default=-4.089, help="initial log-hazard")
    g.add_argument("--z0", type=float, default=0.8, help="spot FX (liquid per contractual)")
    g.add_argument("--sigma-z", type=float, default=0.1, help="FX volatility")
    g.add_argument("--gamma", type=float, default=0.0, help="FX devaluation rate at default")
    g.add_argument("--rho", type=float, default=0.0, help="hazard/FX Brownian correlation")
    g.add_argument("--r", type=float, default=0.0, help="liquid-currency flat rate")
    g.add_argument("--r-hat", type=float, default=0.0, help="contractual-currency flat rate")


def _add_common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="INI-style key=value file; flags override it")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", type=Path, default=None,
                   help=f"output directory (fallback: ${_OUT_DIR_ENV})")
    p.add_argument("--grid-x", type=int, default=101, help="PDE nodes on the log-FX axis")
    p.add_argument("--grid-y", type=int, default=101, help="PDE nodes on the log-hazard axis")
    p.add_argument("--grid-t", type=int, default=300, help="PDE time steps over the horizon")
    p.add_argument("--mc-paths", type=int, default=100_000)
    p.add_argument("--mc-steps", type=int, default=500, help="MC time steps over the horizon")
    p.add_argument("--tolerance-bp", type=float, default=0.5)
    p.add_argument("--sigma-y-mode", choices=("passthrough", "implied"), default="passthrough")


def _hazard(args) -> HazardParams:
    return HazardParams(a=args.a, b=args.b, sigma_y=args.sigma_y, y0=args.y0)


def _fx(args) -> QuantoFxParams:
    return QuantoFxParams(z0=args.z0, sigma_z=args.sigma_z, gamma_z=args.gamma, rho=args.rho)


def _rates(args) -> RatePair:
    return RatePair(r=args.r, r_hat=args.r_hat)


def _solver_cfg(args) -> SolverConfig:
    return SolverConfig(n_x=args.grid_x, n_y=args.grid_y, n_t=args.grid_t)


def _out_dir(args) -> Path | None:
    if args.out_dir is not None:
        return args.out_dir
    env = os.environ.get(_OUT_DIR_ENV)
    return Path(env) if env else None


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _apply_config(parser: argparse.ArgumentParser, args: argparse.Namespace,
                  argv: list[str]) -> argparse.Namespace:
    """Merge a flat key=value config file under the explicit flags."""
    if getattr(args, "config", None) is None:
        return args
    known = {a.dest: a for a in parser._actions if a.dest != "help"}
    defaults = {}
    try:
        text = args.config.read_text()
    except OSError as exc:
        parser.error(f"cannot read config file: {exc}")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            parser.error(f"config line {lineno}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        dest = key.replace("-", "_")
        if dest not in known:
            parser.error(f"config line {lineno}: unknown key {key!r}")
        action = known[dest]
        try:
            if action.type is not None:
                parsed = action.type(value)
            elif isinstance(action.const, bool) or isinstance(action.default, bool):
                parsed = value.lower() in ("1", "true", "yes", "on")
            else:
                parsed = value
        except (TypeError, ValueError) as exc:
            parser.error(f"config line {lineno}: bad value for {key!r}: {exc}")
        if action.choices is not None and parsed not in action.choices:
            parser.error(f"config line {lineno}: {key!r} must be one of {action.choices}")
        defaults[dest] = parsed
    parser.set_defaults(**defaults)
    return parser.parse_args(argv)


# --------------------------------------------------------------------------
# price / survival-curve
# --------------------------------------------------------------------------


def _cmd_price(args) -> int:
    contract = CdsContract(tenor=args.tenor, recovery=args.recovery, notional=args.notional)
    res = quanto_par_spread(_hazard(args), _fx(args), _rates(args), contract,
                            _solver_cfg(args), engine=args.engine)
    liq, con = res.liquid, res.contractual
    print(f"par spread {args.liquid_ccy} (liquid):       {_fbp(liq.par_spread)} bp")
    print(f"par spread {args.contractual_ccy} (contractual): {_fbp(con.par_spread)} bp")
    print(f"risky annuity {args.liquid_ccy}: {_fpar(liq.premium_pv01)} y   "
          f"{args.contractual_ccy}: {_fpar(con.premium_pv01)} y")
    print(f"protection pv {args.liquid_ccy}: {_fpar(liq.protection_pv)}   "
          f"{args.contractual_ccy}: {_fpar(con.protection_pv)}")
    print("tenor_years,p_liquid,p_contractual")
    rows = []
    for t, p, ph in zip(res.curve_liquid.tenors, res.curve_liquid.probs,
                        res.curve_contractual.probs):
        print(f"{t:g},{_fpar(p)},{_fpar(ph)}")
        rows.append([f"{t:g}", _fpar(p), _fpar(ph)])
    out = _out_dir(args)
    if out is not None:
        _write_csv(out / "price_curve.csv", ["tenor_years", "p_liquid", "p_contractual"], rows)
        _write_csv(out / "price_summary.csv",
                   ["currency", "par_spread_bp", "risky_annuity_years", "protection_pv"],
                   [[args.liquid_ccy, _fbp(liq.par_spread), _fpar(liq.premium_pv01),
                     _fpar(liq.protection_pv)],
                    [args.contractual_ccy, _fbp(con.par_spread), _fpar(con.premium_pv01),
                     _fpar(con.protection_pv)]])
    return 0


def _cmd_survival_curve(args) -> int:
    if args.tenors:
        tenors = sorted(float(t) for t in args.tenors.split(","))
    else:
        n = int(round(args.tenor * 4))
        tenors = [0.25 * k for k in range(1, n + 1)]
    curve_hat, curve_p = quanto_survival_curve(
        _hazard(args), _fx(args), _rates(args), tenors, _solver_cfg(args), engine=args.engine
    )
    header = ["tenor_years", "p_liquid", "p_contractual", "default_ratio"]
    rows = []
    for t, p, ph in zip(curve_p.tenors, curve_p.probs, curve_hat.probs):
        ratio = (1.0 - ph) / (1.0 - p) if p < 1.0 else math.nan
        rows.append([f"{t:g}", _fpar(p), _fpar(ph), _fpar(ratio)])
    print(",".join(header))
    for row in rows:
        print(",".join(row))
    out = _out_dir(args)
    if out is not None:
        _write_csv(out / "survival_curve.csv", header, rows)
    return 0


# --------------------------------------------------------------------------
# validate
# --------------------------------------------------------------------------


def _cmd_validate(args) -> int:
    out = _out_dir(args)
    checks: list[tuple[str, bool, str]] = []

    if args.study in ("all", "bracketing"):
        points = validation.bracketing_study(
            step_counts=args.bracket_steps,
            path_counts=(args.mc_paths,),
            fixed_steps=args.mc_steps,
            growth_paths=(args.mc_paths, 10 * args.mc_paths),
            seed=args.seed,
            # the million-path interval is ~1e-4 wide; the hazard axis
            # needs the 200-node resolution of the tabulated study
            n_y=max(args.grid_y, 201),
        )
        rows = [[str(pt.n_steps), str(pt.n_paths), _fpar(pt.pde_value), _fpar(pt.mc.mean),
                 _fpar(pt.mc.ci95_low), _fpar(pt.mc.ci95_high), str(pt.inside).lower()]
                for pt in points]
        if out is not None:
            _write_csv(out / "validate_bracketing.csv",
                       ["n_steps", "n_paths", "pde", "mc_mean", "ci_low", "ci_high", "inside"],
                       rows)
        for pt in points:
            tag = f"steps={pt.n_steps} paths={pt.n_paths}"
            detail = (f"pde={pt.pde_value:.6f} ci=({pt.mc.ci95_low:.6f},"
                      f"{pt.mc.ci95_high:.6f})")
            if pt.n_steps >= 300:
                checks.append((f"bracketing {tag}", pt.inside, detail))
            else:
                print(f"[info] bracketing {tag}: inside={pt.inside} {detail}")

    if args.study in ("all", "deviation"):
        h = validation.SWEEP_HAZARD_HIGH if args.sweep_scenario == "high" \
            else validation.SWEEP_HAZARD_LOW
        cells = validation.deviation_sweep(h=h)
        rows = [[_fpar(c.gamma), _fpar(c.rho), _fpar(c.tenor), f"{c.deviation_pct:.4f}",
                 "" if c.reference_pct is None else f"{c.reference_pct:.2f}"]
                for c in cells]
        if out is not None:
            _write_csv(out / "validate_deviation.csv",
                       ["gamma", "rho", "tenor_years", "deviation_pct", "reference_pct"],
                       rows)
        by_key = {(c.gamma, c.rho, c.tenor): c for c in cells}
        for gamma, ref in ((0.0, 0.47), (0.5, 0.67)):
            c = by_key[(gamma, 0.0, 1.0)]
            ok = abs(c.deviation_pct - ref) <= 0.5
            checks.append((f"deviation 1y gamma={gamma:+.2f}", ok,
                           f"model={c.deviation_pct:.3f}% ref={ref:.2f}% tol=0.5pp"))
        for c in cells:
            if c.tenor != 10.0 or c.reference_pct is None:
                continue
            if abs(c.reference_pct) > 2.5:
                ok = (c.deviation_pct > 0) == (c.reference_pct > 0)
                checks.append((f"deviation 10y sign gamma={c.gamma:+.2f} rho={c.rho:+.1f}",
                               ok, f"model={c.deviation_pct:.2f}% ref={c.reference_pct:.2f}%"))
            ok = abs(c.deviation_pct - c.reference_pct) <= 5.0
            checks.append((f"deviation 10y magnitude gamma={c.gamma:+.2f} rho={c.rho:+.1f}",
                           ok, f"model={c.deviation_pct:.2f}% ref={c.reference_pct:.2f}%"))

    if args.study in ("all", "deviation"):
        curve_points = validation.ratio_maturity_study()
        rows = [[p.scenario, _fpar(p.tenor), _fpar(p.gamma), _fpar(p.ratio),
                 _fpar(p.limit), f"{p.deviation_pct:.4f}"]
                for p in curve_points]
        if out is not None:
            _write_csv(out / "validate_ratio_curves.csv",
                       ["scenario", "tenor_years", "gamma", "default_ratio",
                        "short_tenor_limit", "deviation_pct"], rows)
        by_key = {(p.scenario, p.tenor, p.gamma): p for p in curve_points}
        shortest = min(p.tenor for p in curve_points)
        longest = max(p.tenor for p in curve_points)
        for scenario in ("low", "high"):
            p_short = by_key[(scenario, shortest, -0.5)]
            p_long = by_key[(scenario, longest, -0.5)]
            ok = abs(p_short.deviation_pct) < abs(p_long.deviation_pct)
            checks.append((f"ratio approximation degrades with tenor ({scenario})", ok,
                           f"|dev| {abs(p_short.deviation_pct):.3f}% at {shortest:.3g}y vs "
                           f"{abs(p_long.deviation_pct):.3f}% at {longest:.3g}y"))
        ok = all(
            abs(by_key[("high", t, g)].deviation_pct)
            >= abs(by_key[("low", t, g)].deviation_pct)
            for t in (4.0, 10.0) for g in (-0.5, 0.5)
        )
        checks.append(("ratio approximation degrades with spread level", ok,
                       "high-spread scenario deviates at least as much as low"))

    if args.study in ("all", "symmetry"):
        points = validation.fx_symmetry_study(n_paths=args.mc_paths, seed=args.seed)
        rows = []
        for pt in points:
            rep = pt.report
            rows.append([_fpar(pt.gamma),
                         _fpar(rep.p_hat_liquid.mean), _fpar(rep.p_hat_contractual.mean),
                         _fpar(rep.p_liquid.mean), _fpar(rep.p_contractual.mean),
                         _fpar(pt.martingale.mean),
                         "" if pt.martingale_biased is None else _fpar(pt.martingale_biased.mean)])
            checks.append((f"fx symmetry dual gamma={pt.gamma:+.2f}", pt.dual_ok,
                           f"max z={rep.max_z_score():.2f}"))
            checks.append((f"density martingale gamma={pt.gamma:+.2f}", pt.martingale_ok,
                           f"E[L]={pt.martingale.mean:.5f} z={pt.martingale.z_score(1.0):+.2f}"))
            if pt.martingale_biased is not None:
                checks.append((f"negative control gamma={pt.gamma:+.2f}", pt.control_detected,
                               f"E[L]={pt.martingale_biased.mean:.5f} "
                               f"z={pt.martingale_biased.z_score(1.0):+.2f}"))
        if out is not None:
            _write_csv(out / "validate_symmetry.csv",
                       ["gamma", "p_hat_liquid", "p_hat_contractual", "p_liquid",
                        "p_contractual", "density_mean", "density_mean_uncompensated"],
                       rows)

    failed = 0
    for name, ok, detail in checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        failed += 0 if ok else 1
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 1 if failed else 0


# --------------------------------------------------------------------------
# sweep
# --------------------------------------------------------------------------


def _parse_axis(spec: str) -> tuple[str, np.ndarray]:
    name, _, rng = spec.partition("=")
    name = name.strip().replace("-", "_")
    if name not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {name!r}; choose from {', '.join(SWEEP_AXES)}")
    parts = rng.split(":")
    if len(parts) != 3:
        raise ValueError(f"axis {name!r} needs lo:hi:n, got {rng!r}")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1:
        raise ValueError("axis point count must be >= 1")
    return name, (np.array([lo]) if n == 1 else np.linspace(lo, hi, n))


def _cmd_sweep(args) -> int:
    specs = args.axis if isinstance(args.axis, list) else [args.axis]
    try:
        axes = [_parse_axis(spec) for spec in specs]
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not 1 <= len(axes) <= 2:
        print("error: provide one or two --axis specs", file=sys.stderr)
        return 2
    base = dict(a=args.a, b=args.b, sigma_y=args.sigma_y, y0=args.y0, z0=args.z0,
                sigma_z=args.sigma_z, gamma=args.gamma, rho=args.rho, r=args.r,
                r_hat=args.r_hat)
    contract = CdsContract(tenor=args.tenor, recovery=args.recovery)
    grids = [ax[1] for ax in axes]
    names = [ax[0] for ax in axes]
    mesh = np.meshgrid(*grids, indexing="ij")
    header = names + ["spread_liquid_bp", "spread_contractual_bp", "basis_bp", "rel_basis"]
    rows = []
    for idx in np.ndindex(*mesh[0].shape):
        point = dict(base)
        for name, grid in zip(names, mesh):
            point[name] = float(grid[idx])
        h = HazardParams(a=point["a"], b=point["b"], sigma_y=point["sigma_y"], y0=point["y0"])
        fx = QuantoFxParams(z0=point["z0"], sigma_z=point["sigma_z"],
                            gamma_z=point["gamma"], rho=point["rho"])
        rates = RatePair(point["r"], point["r_hat"])
        try:
            res = quanto_par_spread(h, fx, rates, contract, _solver_cfg(args),
                                    engine=args.engine)
        except PdeInstabilityError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        s_l = res.liquid.par_spread
        s_c = res.contractual.par_spread
        rows.append([_fpar(point[n]) for n in names]
                    + [_fbp(s_l), _fbp(s_c), _fbp(s_c - s_l), _fpar((s_c - s_l) / s_l)])
    print(",".join(header))
    for row in rows:
        print(",".join(row))
    out = _out_dir(args)
    if out is not None:
        _write_csv(out / "sweep.csv", header, rows)
    return 0


# --------------------------------------------------------------------------
# calibrate / backtest
# --------------------------------------------------------------------------

_SNAPSHOT_HEADER = ["date", "spread_usd_5y_bp", "spread_usd_10y_bp", "spread_eur_5y_bp",
                    "spread_eur_10y_bp", "fx_atm_vol", "index_option_vol_1m", "rate"]


def read_snapshots(path: Path) -> list[MarketSnapshot]:
    """Parse the snapshot CSV; raises ValueError naming the offending line."""
    snaps: list[MarketSnapshot] = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != _SNAPSHOT_HEADER:
            raise ValueError(
                f"{path}: header must be exactly {','.join(_SNAPSHOT_HEADER)}"
            )
        for row in reader:
            line = reader.line_num
            try:
                if None in row or any(row[k] is None for k in _SNAPSHOT_HEADER):
                    raise ValueError("wrong number of fields")
                vol_raw = row["index_option_vol_1m"].strip()
                snaps.append(MarketSnapshot(
                    date=row["date"].strip(),
                    spread_usd_5y=float(row["spread_usd_5y_bp"]) / 1e4,
                    spread_usd_10y=float(row["spread_usd_10y_bp"]) / 1e4,
                    spread_eur_5y=float(row["spread_eur_5y_bp"]) / 1e4,
                    spread_eur_10y=float(row["spread_eur_10y_bp"]) / 1e4,
                    fx_atm_vol=float(row["fx_atm_vol"]),
                    index_option_vol_1m=float(vol_raw) if vol_raw else None,
                    rate=float(row["rate"]),
                ))
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}: malformed row at line {line}: {exc}") from exc
    return snaps


def _calibration_config(args) -> CalibrationConfig:
    return CalibrationConfig(
        tolerance_bp=args.tolerance_bp,
        sigma_y_mode=args.sigma_y_mode,
        seed=args.seed,
        n_y=args.grid_y,
        n_t_per_year=max(1, args.grid_t // 10),
    )


_RESULT_HEADER = ["date", "b", "y0", "sigma_y", "rho", "gamma", "ab",
                  "res_usd_5y_bp", "res_usd_10y_bp", "res_eur_5y_bp", "res_eur_10y_bp",
                  "max_residual_bp", "iterations", "converged", "error"]

_DIAG_HEADER = ["date", "gamma", "rho", "rel_basis_1y", "rel_basis_10y",
                "basis_gap_observed", "basis_gap_diffusive",
                "spread_usd_1y_bp", "spread_eur_1y_bp",
                "spread_usd_5y_bp", "spread_eur_5y_bp",
                "spread_usd_10y_bp", "spread_eur_10y_bp"]


def _run_calibration(args) -> tuple[list, list[list[str]], list[list[str]]]:
    snaps = read_snapshots(args.snapshots)
    rows = backtest(snaps, _calibration_config(args))
    result_rows: list[list[str]] = []
    diag_rows: list[list[str]] = []
    for row in rows:
        if row.result is None:
            result_rows.append([row.date] + [""] * 12 + ["false", row.error or "failed"])
            continue
        r = row.result
        result_rows.append([
            r.date, _fpar(r.b), _fpar(r.y0), _fpar(r.sigma_y), _fpar(r.rho), _fpar(r.gamma),
            _fpar(r.ab),
            f"{r.residuals_bp['usd_5y']:.4f}", f"{r.residuals_bp['usd_10y']:.4f}",
            f"{r.residuals_bp['eur_5y']:.4f}", f"{r.residuals_bp['eur_10y']:.4f}",
            f"{r.max_residual_bp():.4f}", str(r.iterations),
            str(r.converged).lower(), "",
        ])
        diag_rows.append([
            row.date, _fpar(r.gamma), _fpar(r.rho),
            _fpar(row.rel_basis_1y), _fpar(row.rel_basis_10y),
            _fpar(row.basis_gap_observed), _fpar(row.basis_gap_diffusive),
            _fbp(row.model_spread_1y["usd"]), _fbp(row.model_spread_1y["eur"]),
            _fbp(row.model_spread_5y["usd"]), _fbp(row.model_spread_5y["eur"]),
            _fbp(row.model_spread_10y["usd"]), _fbp(row.model_spread_10y["eur"]),
        ])
    return rows, result_rows, diag_rows


def _cmd_calibrate(args) -> int:
    try:
        rows, result_rows, diag_rows = _run_calibration(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = _out_dir(args) or Path(".")
    _write_csv(out / "calibration_results.csv", _RESULT_HEADER, result_rows)
    _write_csv(out / "calibration_diagnostics.csv", _DIAG_HEADER, diag_rows)
    n_fail = sum(1 for r in rows if r.result is None)
    n_conv = sum(1 for r in rows if r.result is not None and r.result.converged)
    print(f"calibrated {len(rows)} dates: {n_conv} converged, "
          f"{len(rows) - n_conv - n_fail} unconverged, {n_fail} failed")
    for r in rows:
        if r.result is None:
            print(f"  {r.date}: FAILED ({r.error})")
    return 0


def _cmd_backtest(args) -> int:
    try:
        rows, result_rows, diag_rows = _run_calibration(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = _out_dir(args) or Path(".")
    _write_csv(out / "calibration_results.csv", _RESULT_HEADER, result_rows)
    _write_csv(out / "calibration_diagnostics.csv", _DIAG_HEADER, diag_rows)
    good = [r for r in rows if r.result is not None]
    if len(good) >= 3:
        gammas = np.array([r.result.gamma for r in good])
        basis = np.array([r.rel_basis_1y for r in good])
        if float(np.ptp(basis)) > 0:
            slope, intercept = np.polyfit(basis, gammas, 1)
            print(f"gamma vs 1y relative basis: slope={slope:.4f} intercept={intercept:.4f}")
    if args.history is not None:
        try:
            hist_rows = _rolling_correlation_rows(args.history, args.window)
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        _write_csv(out / "historical_correlation.csv", ["date", "rolling_correlation"],
                   hist_rows)
    n_fail = sum(1 for r in rows if r.result is None)
    print(f"backtested {len(rows)} dates ({n_fail} failures)")
    return 0


def _rolling_correlation_rows(path: Path, window: int) -> list[list[str]]:
    dates: list[str] = []
    fx_vals: list[float] = []
    sp_vals: list[float] = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        need = {"date", "fx", "spread"}
        if reader.fieldnames is None or not need.issubset(set(reader.fieldnames)):
            raise ValueError(f"{path}: header must contain date,fx,spread")
        for row in reader:
            try:
                dates.append(row["date"].strip())
                fx_vals.append(float(row["fx"]))
                sp_vals.append(float(row["spread"]))
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}: malformed row at line {reader.line_num}: {exc}")
    corr = historical_correlation(fx_vals, sp_vals, window)
    aligned = dates[window:]
    return [[d, _fpar(c)] for d, c in zip(aligned, corr)]


# --------------------------------------------------------------------------
# parser assembly
# --------------------------------------------------------------------------


def _build_subparsers() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    top = argparse.ArgumentParser(
        prog="quantocds",
        description="Multi-currency CDS pricing with an FX devaluation jump at default",
    )
    subs = top.add_subparsers(dest="command", required=True)
    registry: dict[str, argparse.ArgumentParser] = {}

    p = subs.add_parser("price", help="quanto par spreads for one contract")
    _add_common_args(p)
    _add_model_args(p)
    p.add_argument("--tenor", type=float, default=5.0)
    p.add_argument("--recovery", type=float, default=0.4)
    p.add_argument("--notional", type=float, default=1.0)
    p.add_argument("--liquid-ccy", default="USD")
    p.add_argument("--contractual-ccy", default="EUR")
    p.add_argument("--engine", choices=("adi", "reduced"), default="adi")
    p.set_defaults(handler=_cmd_price)
    registry["price"] = p

    p = subs.add_parser("survival-curve", help="liquid and contractual survival curves")
    _add_common_args(p)
    _add_model_args(p)
    p.add_argument("--tenor", type=float, default=10.0, help="horizon for a quarterly grid")
    p.add_argument("--tenors", default=None, help="comma-separated override")
    p.add_argument("--engine", choices=("adi", "reduced"), default="adi")
    p.set_defaults(handler=_cmd_survival_curve)
    registry["survival-curve"] = p

    p = subs.add_parser("validate", help="cross-engine validation studies")
    _add_common_args(p)
    p.add_argument("--study", choices=("all", "bracketing", "deviation", "symmetry"),
                   default="all")
    p.add_argument("--bracket-steps", type=lambda s: tuple(int(x) for x in s.split(",")),
                   default=(50, 100, 200, 300, 500))
    p.add_argument("--sweep-scenario", choices=("low", "high"), default="low")
    p.set_defaults(handler=_cmd_validate)
    registry["validate"] = p

    p = subs.add_parser("sweep", help="par-spread sensitivity sweeps")
    _add_common_args(p)
    _add_model_args(p)
    p.add_argument("--tenor", type=float, default=5.0)
    p.add_argument("--recovery", type=float, default=0.4)
    p.add_argument("--axis", action="append", default=None, required=True,
                   help="axis spec name=lo:hi:n (repeat for a 2-d grid)", metavar="SPEC")
    p.add_argument("--engine", choices=("adi", "reduced"), default="reduced")
    p.set_defaults(handler=_cmd_sweep)
    registry["sweep"] = p

    for name, handler in (("calibrate", _cmd_calibrate), ("backtest", _cmd_backtest)):
        p = subs.add_parser(name, help=f"{name} against a snapshot file")
        _add_common_args(p)
        p.add_argument("--snapshots", type=Path, required=True,
                       help=f"CSV with header {','.join(_SNAPSHOT_HEADER)}")
        if name == "backtest":
            p.add_argument("--history", type=Path, default=None,
                           help="CSV date,fx,spread for rolling correlation")
            p.add_argument("--window", type=int, default=50)
        p.set_defaults(handler=handler)
        registry[name] = p

    return top, registry


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    top, registry = _build_subparsers()
    args = top.parse_args(argv)
    if getattr(args, "config", None) is not None:
        sub = registry[args.command]
        rest = argv[argv.index(args.command) + 1:]
        args = _apply_config(sub, args, rest)
    try:
        return args.handler(args)
    except (ValueError, PdeInstabilityError, CalibrationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
