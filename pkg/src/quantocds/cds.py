"""CDS cash-flow engine: leg PVs, par spreads and quanto par spreads.

Conventions are deliberately light: quarterly premium schedule with flat
accrual fractions (a short final stub if the tenor is not a multiple of a
quarter), a single recovery shared by every currency, continuous discount
factors from flat rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curves import SurvivalCurve
from .model import HazardParams, QuantoFxParams, RatePair
from . import pde


@dataclass(frozen=True)
class CdsContract:
    """Single-name CDS with a quarterly premium schedule.

    ``recovery`` is the auction recovery (LGD = 1 - recovery), shared by
    both currencies of a quanto pair.
    """

    tenor: float
    recovery: float = 0.4
    payments_per_year: int = 4
    notional: float = 1.0
    contractual_currency: str = "USD"
    effective_date: str | None = None

    def __post_init__(self) -> None:
        if not self.tenor > 0:
            raise ValueError(f"tenor must be > 0, got {self.tenor}")
        if not 0.0 <= self.recovery < 1.0:
            raise ValueError(f"recovery must lie in [0, 1), got {self.recovery}")
        if self.payments_per_year < 1:
            raise ValueError("payments_per_year must be >= 1")

    @property
    def lgd(self) -> float:
        return 1.0 - self.recovery

    def payment_times(self) -> np.ndarray:
        """Payment grid T_1...T_N; appends a stub if the tenor is ragged."""
        dt = 1.0 / self.payments_per_year
        n_full = int(math.floor(self.tenor / dt + 1e-9))
        times = dt * np.arange(1, n_full + 1)
        if times.size == 0 or times[-1] < self.tenor - 1e-9:
            times = np.append(times, self.tenor)
        return times

    def accruals(self) -> np.ndarray:
        times = self.payment_times()
        return np.diff(np.concatenate(([0.0], times)))


@dataclass(frozen=True)
class ParSpreadResult:
    """Par spread with its building blocks.

    ``premium_pv01`` is the risky annuity in years (PV of one unit of
    running spread per unit notional); ``protection_pv`` carries the
    notional, so par_spread = protection_pv / (notional * premium_pv01).
    """

    par_spread: float
    premium_pv01: float
    protection_pv: float


@dataclass(frozen=True)
class QuantoParSpreads:
    liquid: ParSpreadResult
    contractual: ParSpreadResult
    curve_liquid: SurvivalCurve
    curve_contractual: SurvivalCurve


def premium_leg_pv(
    curve: SurvivalCurve,
    r: float,
    contract: CdsContract,
    spread: float,
    accrual_on_default: bool = False,
) -> float:
    """PV of the premium leg: S * sum_i delta_i * DF(T_i) * p(T_i).

    ``accrual_on_default`` adds the half-period accrual convention: half of
    each period's coupon weighted by the default probability in the period.
    """
    times = contract.payment_times()
    _require_coverage(curve, times[-1])
    deltas = contract.accruals()
    df = np.exp(-r * times)
    p = curve(times)
    pv = float(np.sum(deltas * df * p))
    if accrual_on_default:
        p_prev = curve(np.concatenate(([0.0], times[:-1])))
        mids = times - 0.5 * deltas
        pv += float(np.sum(0.5 * deltas * np.exp(-r * mids) * (p_prev - p)))
    return contract.notional * spread * pv


def protection_leg_pv(
    curve: SurvivalCurve, r: float, contract: CdsContract, max_step: float = 1.0 / 52.0
) -> float:
    """PV of the default payment: LGD * int DF(t) (-dp(t)).

    The integral is discretized on a refinement of at most ``max_step``
    (weekly by default) with midpoint discounting of each interval's
    default mass.
    """
    T = contract.payment_times()[-1]
    _require_coverage(curve, T)
    n = max(1, int(math.ceil(T / max_step)))
    ts = np.linspace(0.0, T, n + 1)
    p = curve(ts)
    df_mid = np.exp(-r * 0.5 * (ts[:-1] + ts[1:]))
    return contract.notional * contract.lgd * float(np.sum(df_mid * (p[:-1] - p[1:])))


def par_spread(curve: SurvivalCurve, r: float, contract: CdsContract) -> ParSpreadResult:
    """Spread equating the two legs, plus the risky annuity behind it."""
    times = contract.payment_times()
    _require_coverage(curve, times[-1])
    deltas = contract.accruals()
    annuity = float(np.sum(deltas * np.exp(-r * times) * curve(times)))
    if annuity <= 0.0:
        raise ValueError("risky annuity is not positive; cannot quote a par spread")
    protection = protection_leg_pv(curve, r, contract)
    return ParSpreadResult(
        par_spread=protection / (contract.notional * annuity),
        premium_pv01=annuity,
        protection_pv=protection,
    )


def _require_coverage(curve: SurvivalCurve, T: float) -> None:
    if curve.horizon < T * (1 - 1e-12):
        raise ValueError(
            f"survival curve ends at {curve.horizon:g}y, contract needs {T:g}y"
        )


def deterministic_survival(hazard, T: float, knots=None) -> float:
    """exp(-int_0^T H) for a flat or piecewise-constant hazard H.

    Scalar ``hazard`` means a flat rate.  Otherwise ``knots`` are the left
    endpoints of the constancy intervals (starting at 0) and ``hazard`` the
    rate on each interval, the last one extending beyond the final knot.
    """
    if np.isscalar(hazard):
        if hazard < 0:
            raise ValueError("hazard must be >= 0")
        return math.exp(-float(hazard) * T)
    rates = np.asarray(hazard, dtype=float)
    knots = np.asarray(knots, dtype=float)
    if knots.shape != rates.shape or knots[0] != 0.0 or np.any(np.diff(knots) <= 0):
        raise ValueError("knots must start at 0, strictly increase, and match rates")
    if np.any(rates < 0):
        raise ValueError("hazard must be >= 0")
    edges = np.concatenate((knots, [np.inf]))
    lengths = np.clip(np.minimum(edges[1:], T) - np.minimum(edges[:-1], T), 0.0, None)
    return math.exp(-float(np.sum(rates * lengths)))


def quanto_par_spread(
    h: HazardParams,
    fx: QuantoFxParams,
    rates: RatePair,
    contract: CdsContract,
    cfg: pde.SolverConfig | None = None,
    engine: str = "adi",
) -> QuantoParSpreads:
    """Par spreads of the same contract quoted in the liquid and the
    contractual currency.

    Each leg pair is priced off its own survival curve (liquid-measure p,
    contractual-measure p_hat on the payment tenors) and its own flat
    discount rate.
    """
    tenors = contract.payment_times()
    curve_hat, curve_p = pde.quanto_survival_curve(h, fx, rates, tenors, cfg, engine=engine)
    liquid = par_spread(curve_p, rates.r, contract)
    contractual = par_spread(curve_hat, rates.r_hat, contract)
    return QuantoParSpreads(
        liquid=liquid,
        contractual=contractual,
        curve_liquid=curve_p,
        curve_contractual=curve_hat,
    )
