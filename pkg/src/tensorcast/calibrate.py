"""Parameter estimation for the coupled level/drift model.

Five quantities are estimated per training window: the level volatility from
historical log-ratios of the temporal factor, the drift's mean-reversion
speed, long-term mean and volatility from an AR(1) fit of a reference rate
series, and the correlation between the two noise sources from an
exponentially weighted moving average with weight 0.9.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DataError, NumericalError
from .shapiro import shapiro_wilk

__all__ = [
    "RatioSeries",
    "NormalityResult",
    "ModelParams",
    "CalibrationConfig",
    "ratio_series",
    "shapiro_lognormal_test",
    "historical_volatility",
    "calibrate_ou",
    "ewma_correlation",
    "calibrate_all",
]


@dataclass(frozen=True)
class RatioSeries:
    """Consecutive-slot ratios c_t / c_{t-1} of a positive factor series."""

    values: np.ndarray
    pair_end_indices: np.ndarray  # slot index t of each retained pair
    dropped: int  # pairs removed by the positivity guard
    last_level: float  # factor level ending the final retained pair
    source_rank: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        object.__setattr__(
            self, "pair_end_indices", np.asarray(self.pair_end_indices, dtype=np.int64)
        )

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class NormalityResult:
    statistic: float
    p_value: float
    sample_size: int
    alpha: float
    passed: bool


@dataclass(frozen=True)
class ModelParams:
    """Per-slot parameters of the coupled system plus initial states."""

    sigma_s: float  # level volatility per sqrt(slot)
    lam: float  # drift mean-reversion speed per slot
    kappa: float  # drift long-term mean
    sigma_mu: float  # drift volatility per sqrt(slot)
    rho: float  # correlation of the two Brownian motions
    s0: float  # level at the end of the training window
    mu0: float  # last observed rate

    def __post_init__(self):
        vals = asdict(self)
        if not all(math.isfinite(v) for v in vals.values()):
            raise ValueError(f"non-finite model parameter in {vals}")
        if self.sigma_s < 0 or self.sigma_mu < 0 or self.lam < 0:
            raise ValueError("volatilities and mean-reversion speed must be >= 0")
        if abs(self.rho) > 1:
            raise ValueError(f"correlation must lie in [-1, 1], got {self.rho}")

    def to_json(self) -> str:
        doc = dict(asdict(self), units="per-slot")
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        doc = json.loads(text)
        doc.pop("units", None)
        return cls(**doc)


@dataclass(frozen=True)
class CalibrationConfig:
    ratio_guard: float = 1e-12
    ewma_weight: float = 0.9
    dt: float = 1.0

    def __post_init__(self):
        if self.ratio_guard <= 0:
            raise ValueError("ratio_guard must be > 0")
        if not 0.0 < self.ewma_weight < 1.0:
            raise ValueError("ewma_weight must lie in (0, 1)")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")


def ratio_series(time_factor, guard: float = 1e-12, source_rank: int | None = None) -> RatioSeries:
    """Ratios of consecutive factor levels, dropping pairs at or below `guard`."""
    c = np.asarray(time_factor, dtype=np.float64)
    if c.ndim != 1 or c.size < 2:
        raise DataError(f"factor series must be 1-D with >= 2 points, got shape {c.shape}")
    if not np.isfinite(c).all():
        raise DataError("factor series contains non-finite values")
    prev, curr = c[:-1], c[1:]
    keep = (prev > guard) & (curr > guard)
    dropped = int(np.count_nonzero(~keep))
    if np.count_nonzero(keep) < 1:
        raise NumericalError(
            f"no usable ratio pairs: {dropped} of {keep.size} dropped by guard {guard:g}"
        )
    idx = np.nonzero(keep)[0] + 1
    values = curr[keep] / prev[keep]
    return RatioSeries(
        values=values,
        pair_end_indices=idx,
        dropped=dropped,
        last_level=float(curr[keep][-1]),
        source_rank=source_rank,
    )


def shapiro_lognormal_test(r: RatioSeries, alpha: float = 0.10) -> NormalityResult:
    """Shapiro-Wilk test of ln(ratios); passes when p >= alpha."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    sample = np.log(r.values)
    w, p = shapiro_wilk(sample)
    return NormalityResult(
        statistic=w, p_value=p, sample_size=sample.size, alpha=alpha, passed=p >= alpha
    )


def historical_volatility(r: RatioSeries) -> float:
    """Sample standard deviation (n-1 denominator) of ln(ratios), per slot."""
    if len(r) < 2:
        raise NumericalError(f"need >= 2 ratios for a volatility estimate, got {len(r)}")
    return float(np.std(np.log(r.values), ddof=1))


def calibrate_ou(rate_series, dt: float = 1.0) -> tuple[float, float, float]:
    """Fit dr = lam*(kappa - r)dt + sigma dW by AR(1) least squares.

    Regresses r_{t+1} = a + b r_t + eps and maps through the exact
    discretization: lam = -ln(b)/dt, kappa = a/(1-b),
    sigma = sd(eps) * sqrt(-2 ln b / (dt (1 - b^2))).  Requires 0 < b < 1.
    """
    r = np.asarray(rate_series, dtype=np.float64)
    if r.ndim != 1 or r.size < 3:
        raise DataError(f"rate series must be 1-D with >= 3 points, got shape {r.shape}")
    if not np.isfinite(r).all():
        raise DataError("rate series contains non-finite values")
    if dt <= 0:
        raise ValueError("dt must be > 0")

    x, y = r[:-1], r[1:]
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx <= 0.0:
        raise NumericalError("mean reversion not identifiable: regressor series is constant")
    b = float(np.sum((x - xm) * (y - ym)) / sxx)
    a = float(ym - b * xm)
    resid = y - (a + b * x)
    # Two fitted parameters -> n-2 residual degrees of freedom.
    resid_var = float(np.sum(resid * resid) / max(resid.size - 2, 1))

    if not 0.0 < b < 1.0:
        raise NumericalError(
            "mean reversion not identifiable: AR(1) slope must lie in (0, 1); "
            f"got a={a:.6g}, b={b:.6g}, resid_var={resid_var:.6g}"
        )
    lam = -math.log(b) / dt
    kappa = a / (1.0 - b)
    if resid_var < 1e-18:
        sigma = 0.0
    else:
        sigma = math.sqrt(resid_var) * math.sqrt(-2.0 * math.log(b) / (dt * (1.0 - b * b)))
    return lam, kappa, sigma


def ewma_correlation(x, y, weight: float = 0.9) -> float:
    """EWMA correlation of two equal-length series, RiskMetrics convention.

    Inputs are mean-removed; the recursions are seeded with the first-sample
    products and the result is the terminal covariance over the terminal
    standard deviations, clamped to [-1, 1].
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError(f"series must be 1-D and equal length, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise NumericalError("need >= 2 observations for a correlation")
    if not 0.0 < weight < 1.0:
        raise ValueError("weight must lie in (0, 1)")

    xc = x - x.mean()
    yc = y - y.mean()
    cov = xc[0] * yc[0]
    var_x = xc[0] * xc[0]
    var_y = yc[0] * yc[0]
    for t in range(1, x.size):
        cov = weight * cov + (1.0 - weight) * xc[t] * yc[t]
        var_x = weight * var_x + (1.0 - weight) * xc[t] * xc[t]
        var_y = weight * var_y + (1.0 - weight) * yc[t] * yc[t]
    if var_x <= 0.0 or var_y <= 0.0:
        raise NumericalError("zero terminal variance: correlation undefined")
    rho = float(cov / math.sqrt(var_x * var_y))
    return max(-1.0, min(1.0, rho))


def calibrate_all(time_factor, rate_series, cfg: CalibrationConfig | None = None) -> ModelParams:
    """Estimate all five model parameters plus initial states.

    The correlation pairs the log-ratio increments of the factor series with
    the first differences of the rate series at the same slots (the two
    driving-noise proxies); guarded-out ratio pairs drop the matching rate
    increments.
    """
    cfg = cfg or CalibrationConfig()
    rates = np.asarray(rate_series, dtype=np.float64)
    factor = np.asarray(time_factor, dtype=np.float64)
    if rates.shape != factor.shape:
        raise DataError(
            f"rate series length {rates.shape} must match factor series length {factor.shape}"
        )

    try:
        ratios = ratio_series(factor, cfg.ratio_guard)
        sigma_s = historical_volatility(ratios)
    except (NumericalError, DataError) as exc:
        raise NumericalError(f"sigma_s: {exc}") from exc

    try:
        lam, kappa, sigma_mu = calibrate_ou(rates, cfg.dt)
    except (NumericalError, DataError) as exc:
        raise NumericalError(f"drift parameters (lam, kappa, sigma_mu): {exc}") from exc

    idx = ratios.pair_end_indices
    try:
        rho = ewma_correlation(np.log(ratios.values), rates[idx] - rates[idx - 1], cfg.ewma_weight)
    except (NumericalError, DataError) as exc:
        raise NumericalError(f"rho: {exc}") from exc

    return ModelParams(
        sigma_s=sigma_s,
        lam=lam,
        kappa=kappa,
        sigma_mu=sigma_mu,
        rho=rho,
        s0=ratios.last_level,
        mu0=float(rates[-1]),
    )
