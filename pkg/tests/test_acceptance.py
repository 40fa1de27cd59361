"""Acceptance suite: one test per criterion, each printing PASS/FAIL lines.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
report.  Criterion 4's long-maturity block asserts against externally
tabulated reference deviations that the model's exact mathematics cannot
reproduce (the reference's zero-devaluation row is structurally nonzero
and its correlation ordering flips between rows, both impossible under
the model identity); that single check is expected to fail and says so.
"""

import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.optimize import brentq

from quantocds.calibration import CalibrationConfig, MarketSnapshot, _SpreadModel, backtest
from quantocds.cds import CdsContract, quanto_par_spread
from quantocds.model import HazardParams, QuantoFxParams, RatePair
from quantocds.pde import SolverConfig, quanto_survival_curve
from quantocds.validation import (
    SWEEP_HAZARD_LOW,
    bracketing_study,
    deviation_sweep,
    fx_symmetry_study,
)

RATES0 = RatePair(0.0, 0.0)


def _report(name: str, ok: bool, detail: str) -> bool:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return ok


class TestCriterion1McPdeBracketing:
    def test_pde_inside_mc_confidence_interval(self):
        points = bracketing_study(
            step_counts=(50, 100, 200, 300, 500),
            path_counts=(100_000,),
            fixed_steps=500,
            growth_paths=(100_000, 1_000_000),
            seed=20120507,
            n_y=201,
        )
        ok_all = True
        for pt in points:
            required = pt.n_steps >= 300
            detail = (f"steps={pt.n_steps} paths={pt.n_paths} pde={pt.pde_value:.6f} "
                      f"ci=({pt.mc.ci95_low:.6f},{pt.mc.ci95_high:.6f})")
            if required:
                ok_all &= _report("criterion 1 bracketing", pt.inside, detail)
            else:
                print(f"[info] bracketing {detail} inside={pt.inside}")
        assert ok_all


class TestCriterion2DeterministicClosedForm:
    def test_pipeline_recovers_flat_hazard_survival(self):
        h = HazardParams(a=0.0, b=0.0, sigma_y=1e-6, y0=-4.089)
        fx = QuantoFxParams(z0=0.8, sigma_z=0.1, gamma_z=0.0, rho=0.0)
        curve_hat, curve_p = quanto_survival_curve(
            h, fx, RATES0, [5.0], SolverConfig(n_x=81, n_y=81, n_t=200)
        )
        exact = math.exp(-math.exp(-4.089) * 5.0)
        ok = abs(curve_p.probs[0] - exact) < 1e-3 and abs(curve_hat.probs[0] - exact) < 1e-3
        ok &= abs(curve_p.probs[0] - 0.91968) < 1e-3
        assert _report(
            "criterion 2 deterministic hazard",
            ok,
            f"p={curve_p.probs[0]:.6f} p_hat={curve_hat.probs[0]:.6f} exact={exact:.6f}",
        )


class TestCriterion3SpreadRescaling:
    GAMMA = -0.2045

    def test_one_month_ratio(self):
        h = HazardParams(a=0.0, b=0.0, sigma_y=1e-6, y0=-4.089)
        fx = QuantoFxParams(z0=0.8, sigma_z=0.1, gamma_z=self.GAMMA, rho=0.0)
        res = quanto_par_spread(h, fx, RATES0, CdsContract(tenor=1.0 / 12.0),
                                SolverConfig(n_x=81, n_y=81, n_t=40))
        ratio = res.contractual.par_spread / res.liquid.par_spread
        ok = abs(ratio / (1.0 + self.GAMMA) - 1.0) < 0.005
        assert _report("criterion 3 one-month spread ratio", ok,
                       f"ratio={ratio:.6f} target={1 + self.GAMMA:.4f}")

    def test_abstract_quote_anchor(self):
        # flat hazard chosen so the liquid 1Y par spread is exactly 440 bp
        def one_year_spread(lam):
            times = np.arange(0.25, 1.0 + 1e-9, 0.25)
            annuity = float(np.sum(0.25 * np.exp(-lam * times)))
            return 0.6 * (1.0 - math.exp(-lam)) / annuity

        lam_440 = brentq(lambda l: one_year_spread(l) - 0.0440, 1e-4, 0.5, xtol=1e-14)
        h = HazardParams(a=0.0, b=0.0, sigma_y=1e-6, y0=math.log(lam_440))
        fx = QuantoFxParams(z0=0.8, sigma_z=0.1, gamma_z=self.GAMMA, rho=0.0)
        res = quanto_par_spread(h, fx, RATES0, CdsContract(tenor=1.0),
                                SolverConfig(n_x=81, n_y=81, n_t=60))
        usd_bp = res.liquid.par_spread * 1e4
        eur_bp = res.contractual.par_spread * 1e4
        ok = abs(usd_bp - 440.0) < 0.5 and abs(eur_bp - 350.0) < 2.0
        assert _report("criterion 3 quote anchor", ok,
                       f"USD={usd_bp:.2f} bp -> EUR={eur_bp:.2f} bp (target 350 +- 2)")


class TestCriterion4DeviationTable:
    @classmethod
    def cells(cls):
        if not hasattr(cls, "_cells"):
            cls._cells = deviation_sweep(h=SWEEP_HAZARD_LOW)
        return cls._cells

    def test_short_tenor_anchor_cells(self):
        by_key = {(c.gamma, c.rho, c.tenor): c for c in self.cells()}
        ok_all = True
        for gamma, ref in ((0.0, 0.47), (0.5, 0.67)):
            c = by_key[(gamma, 0.0, 1.0)]
            ok = abs(c.deviation_pct - ref) <= 0.5
            ok_all &= _report(
                f"criterion 4 anchor cell gamma={gamma:+.2f} rho=0 T=1",
                ok, f"model={c.deviation_pct:.3f}% reference={ref:.2f}% tol=0.5pp"
            )
        assert ok_all

    def test_long_tenor_magnitudes(self):
        # The model values here are exact (the one-factor reduction is
        # cross-validated against the two-factor solver and Monte Carlo
        # elsewhere in the suite); most long-maturity reference cells sit
        # far outside any parameterization of the model, so this check is
        # kept strict and is expected to fail.
        failures = []
        for c in self.cells():
            if c.tenor != 10.0 or c.reference_pct is None:
                continue
            ok = abs(c.deviation_pct - c.reference_pct) <= 5.0
            _report(
                f"criterion 4 long-tenor cell gamma={c.gamma:+.2f} rho={c.rho:+.1f}",
                ok, f"model={c.deviation_pct:+.2f}% reference={c.reference_pct:+.2f}%"
            )
            if not ok:
                failures.append(c)
        assert not failures, (
            f"{len(failures)}/18 long-maturity reference cells differ by more than "
            "5pp from the model's exact values. The reference block cannot be "
            "produced by this model: its zero-devaluation row should vanish "
            "identically but does not, and its correlation ordering is "
            "non-monotone where the exact survival-ratio identity forces "
            "monotonicity. Expected failure; kept strict instead of loosened."
        )


class TestCriterion5FxSymmetry:
    def test_dual_construction_martingale_and_control(self):
        points = fx_symmetry_study(
            gammas=(-0.5, -0.2, 0.0, 1.0), rho=0.3, sigma_z=0.1,
            T=5.0, n_paths=200_000, n_steps=250, seed=17,
        )
        ok_all = True
        for pt in points:
            ok_all &= _report(
                f"criterion 5 dual construction gamma={pt.gamma:+.2f}",
                pt.dual_ok, f"max |z|={pt.report.max_z_score():.2f} (< 3)"
            )
            ok_all &= _report(
                f"criterion 5 density martingale gamma={pt.gamma:+.2f}",
                pt.martingale_ok,
                f"E[L]={pt.martingale.mean:.5f} z={pt.martingale.z_score(1.0):+.2f}"
            )
            if pt.martingale_biased is not None:
                ok_all &= _report(
                    f"criterion 5 negative control gamma={pt.gamma:+.2f}",
                    pt.control_detected,
                    f"E[L]={pt.martingale_biased.mean:.5f} "
                    f"z={pt.martingale_biased.z_score(1.0):+.2f} (> 5 required)"
                )
        assert ok_all


class TestCriterion6SensitivityMagnitudes:
    CFG = SolverConfig(n_x=81, n_y=161, n_t=200)

    def rho_impact(self, sigma_y: float) -> float:
        h = HazardParams(a=1e-4, b=204.0, sigma_y=sigma_y, y0=-4.089)
        spreads = []
        for rho in (-1.0, 1.0):
            fx = QuantoFxParams(z0=0.8, sigma_z=0.1, gamma_z=0.0, rho=rho)
            res = quanto_par_spread(h, fx, RATES0, CdsContract(tenor=5.0),
                                    self.CFG, engine="reduced")
            spreads.append(res.contractual.par_spread)
        return abs(spreads[1] - spreads[0]) * 1e4

    def test_correlation_impact_modest_at_low_hazard_vol(self):
        impact = self.rho_impact(0.2)
        assert _report("criterion 6 rho impact at sigma_y=0.2", impact <= 15.0,
                       f"{impact:.2f} bp (<= 15)")

    def test_correlation_impact_grows_with_hazard_vol(self):
        impact = self.rho_impact(0.6)
        assert _report("criterion 6 rho impact at sigma_y=0.6", impact >= 20.0,
                       f"{impact:.2f} bp (>= 20)")

    def test_total_devaluation_kills_contractual_spread(self):
        h = HazardParams(a=1e-4, b=-210.45, sigma_y=0.2, y0=-4.089)
        fx = QuantoFxParams(z0=0.8, sigma_z=0.1, gamma_z=-1.0, rho=0.0)
        res = quanto_par_spread(h, fx, RATES0, CdsContract(tenor=5.0),
                                self.CFG, engine="reduced")
        bp = res.contractual.par_spread * 1e4
        assert _report("criterion 6 total devaluation", bp < 1.0,
                       f"contractual 5Y spread = {bp:.4f} bp (< 1)")


class TestCriterion7CalibrationRoundTrip:
    def test_twenty_synthetic_snapshots(self):
        cfg = CalibrationConfig()
        gammas = (-0.4, -0.3, -0.2, -0.1, 0.0)
        rhos = (-0.6, -0.2, 0.2, 0.6)
        sigma_y_true = 0.5
        snaps, truth = [], []
        probe = MarketSnapshot("probe", 0.01, 0.01, 0.01, 0.01, 0.1, sigma_y_true, 0.0)
        model = _SpreadModel(probe, cfg)
        i = 0
        for g in gammas:
            for rho in rhos:
                b_true = -120.0 - 5.0 * i
                y0_true = -4.5 + 0.02 * i
                usd5, usd10 = model.usd_spreads(b_true, y0_true, sigma_y_true)
                eur5, eur10 = model.eur_spreads(b_true, y0_true, sigma_y_true, rho, g)
                snaps.append(MarketSnapshot(f"d{i:02d}", usd5, usd10, eur5, eur10,
                                            0.1, sigma_y_true, 0.0))
                truth.append((g, rho))
                i += 1
        rows = backtest(snaps, cfg)

        ok_all = True
        gamma_errs, rho_errs, residuals = [], [], []
        for row, (g_true, rho_true) in zip(rows, truth):
            assert row.result is not None, row.error
            gamma_errs.append(abs(row.result.gamma - g_true))
            rho_errs.append(abs(row.result.rho - rho_true))
            residuals.append(row.result.max_residual_bp())
        ok_all &= _report("criterion 7 gamma recovery", max(gamma_errs) < 0.01,
                          f"max |gamma error| = {max(gamma_errs):.4f} (< 0.01)")
        ok_all &= _report("criterion 7 repricing residuals", max(residuals) < 0.5,
                          f"max residual = {max(residuals):.4f} bp (< 0.5)")
        ok_all &= _report("criterion 7 rho recovery", max(rho_errs) < 0.1,
                          f"max |rho error| = {max(rho_errs):.4f} (< 0.1)")

        basis = np.array([row.rel_basis_1y for row in rows])
        fitted = np.array([row.result.gamma for row in rows])
        slope, intercept = np.polyfit(basis, fitted, 1)
        ok_all &= _report("criterion 7 one-year diagnostic slope",
                          abs(slope - 1.0) < 0.05 and abs(intercept) < 0.01,
                          f"slope={slope:.4f} intercept={intercept:.5f}")
        assert ok_all


class TestCriterion8Determinism:
    def _run(self, out_dir: Path, extra: list[str]) -> None:
        cmd = [sys.executable, "-m", "quantocds.cli", *extra, "--out-dir", str(out_dir)]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        assert proc.returncode in (0, 1), proc.stderr

    @pytest.mark.parametrize("label,extra", [
        ("sweep", ["sweep", "--axis", "rho=-0.5:0.5:3", "--tenor", "1", "--seed", "7",
                   "--grid-x", "41", "--grid-y", "61", "--grid-t", "60"]),
        ("validate", ["validate", "--study", "symmetry", "--mc-paths", "20000",
                      "--seed", "7"]),
    ])
    def test_repeated_runs_byte_identical(self, tmp_path, label, extra):
        a, b = tmp_path / "a", tmp_path / "b"
        self._run(a, extra)
        self._run(b, extra)
        files_a = sorted(p.name for p in a.iterdir())
        files_b = sorted(p.name for p in b.iterdir())
        assert files_a == files_b and files_a
        same = all((a / n).read_bytes() == (b / n).read_bytes() for n in files_a)
        assert _report(f"criterion 8 determinism ({label})", same,
                       f"{len(files_a)} file(s) byte-identical")
