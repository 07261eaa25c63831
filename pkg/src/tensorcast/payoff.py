"""Digital payoff evaluation and horizon-by-horizon forecast scoring.

The digital value of a simulated terminal array is the fraction of paths at
or above a strike; a prediction is scored against the realized factor level
at the same horizon.  Following the two-class scheme of the source
methodology, a "true positive" is any agreement between the thresholded
probability and the realized indicator, a "false positive" any disagreement;
a standard 2x2 confusion matrix is reported alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .calibrate import CalibrationConfig, calibrate_all
from .errors import NumericalError
from .mc import SimConfig, simulate_coupled
from .util import derive_seed

__all__ = [
    "DigitalSpec",
    "DigitalReport",
    "HorizonSplit",
    "EvaluationResult",
    "digital_value",
    "classify",
    "evaluate_horizons",
]


@dataclass(frozen=True)
class DigitalSpec:
    strike: float
    horizon: int
    rank: int  # 1-based factor index
    threshold: float = 0.60

    def __post_init__(self):
        if not (math.isfinite(self.strike) and self.strike > 0):
            raise ValueError("strike must be a positive real")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.rank < 1:
            raise ValueError("rank index must be >= 1")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")


@dataclass(frozen=True)
class DigitalReport:
    spec: DigitalSpec
    probability: float
    std_err: float
    actual_value: float
    actual_indicator: int
    label: str  # "TP" or "FP"


@dataclass(frozen=True)
class HorizonSplit:
    train_len: int
    horizon: int

    def __post_init__(self):
        if self.train_len < 2:
            raise ValueError("train_len must be >= 2")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")


@dataclass
class EvaluationResult:
    reports: list[DigitalReport]
    skipped: list[dict]
    horizon_rates: dict[int, dict]  # horizon -> {n, tp, fp, tp_rate, fp_rate}
    confusion: dict[str, int]  # standard 2x2: tp/fp/tn/fn
    params_by_cell: dict[tuple[int, int], object]  # (rank, horizon) -> ModelParams


def digital_value(terminals, strike: float) -> tuple[float, float]:
    """Fraction of terminal values at or above the strike, with its standard error."""
    t = np.asarray(terminals, dtype=np.float64)
    if t.size < 1:
        raise ValueError("need at least one terminal value")
    p = float(np.count_nonzero(t >= strike)) / t.size
    se = math.sqrt(p * (1.0 - p) / t.size)
    return p, se


def classify(probability: float, threshold: float, actual_indicator: int) -> str:
    """Two-class scheme: TP when the thresholded forecast matches the outcome.

    Probability exactly at the threshold counts as "higher".
    """
    if not 0.0 <= probability <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {probability}")
    predicted = probability >= threshold
    return "TP" if predicted == bool(actual_indicator) else "FP"


def evaluate_horizons(
    time_factors: np.ndarray,
    rate_series,
    splits,
    strikes,
    *,
    strike_mode: str = "absolute",
    calib_cfg: CalibrationConfig | None = None,
    sim_cfg: SimConfig | None = None,
    threshold: float = 0.60,
    workers: int = 1,
) -> EvaluationResult:
    """Calibrate-forecast-score every (rank, horizon, strike) cell.

    time_factors: (K, R) matrix of per-slot factor levels (columns are ranks).
    For each split, the first train_len slots calibrate the model, the
    simulation runs `horizon` steps from the end of the training window, and
    the realized level at slot train_len + horizon - 1 (0-based) provides the
    indicator.  With strike_mode="multiple_of_s0" the strike list is scaled
    by each cell's starting level.  Cells whose calibration fails or whose
    series is too short are skipped with a diagnostic.
    """
    factors = np.asarray(time_factors, dtype=np.float64)
    if factors.ndim != 2:
        raise ValueError(f"time_factors must be (slots, ranks), got shape {factors.shape}")
    rates = np.asarray(rate_series, dtype=np.float64)
    if rates.shape[0] != factors.shape[0]:
        raise ValueError("rate series and factor series must cover the same slots")
    if strike_mode not in ("absolute", "multiple_of_s0"):
        raise ValueError(f"unknown strike_mode {strike_mode!r}")
    calib_cfg = calib_cfg or CalibrationConfig()
    sim_cfg = sim_cfg or SimConfig(n_paths=100_000, n_steps=1)

    n_slots, n_ranks = factors.shape
    reports: list[DigitalReport] = []
    skipped: list[dict] = []
    params_by_cell: dict[tuple[int, int], object] = {}
    per_horizon: dict[int, dict] = {}
    confusion = {"tp": 0, "fp": 0, "tn": 0, "fn": 0}

    for split in splits:
        target = split.train_len + split.horizon
        stats = per_horizon.setdefault(
            split.horizon, {"n": 0, "tp": 0, "fp": 0, "tp_rate": 0.0, "fp_rate": 0.0}
        )
        if target > n_slots:
            skipped.append(
                {
                    "horizon": split.horizon,
                    "reason": f"series has {n_slots} slots, split needs {target}",
                }
            )
            continue
        for rank in range(1, n_ranks + 1):
            series = factors[:, rank - 1]
            train = series[: split.train_len]
            realized = float(series[target - 1])
            try:
                params = calibrate_all(train, rates[: split.train_len], calib_cfg)
            except NumericalError as exc:
                skipped.append({"rank": rank, "horizon": split.horizon, "reason": str(exc)})
                continue
            params_by_cell[(rank, split.horizon)] = params

            cell_cfg = replace(
                sim_cfg,
                n_steps=split.horizon,
                seed=derive_seed(sim_cfg.seed, f"cell:{rank}:{split.horizon}"),
            )
            bundle = simulate_coupled(params, cell_cfg, workers=workers)

            for strike in strikes:
                k = strike * params.s0 if strike_mode == "multiple_of_s0" else strike
                spec = DigitalSpec(
                    strike=k, horizon=split.horizon, rank=rank, threshold=threshold
                )
                prob, se = digital_value(bundle.terminal, k)
                actual = 1 if realized >= k else 0
                label = classify(prob, threshold, actual)
                reports.append(
                    DigitalReport(
                        spec=spec,
                        probability=prob,
                        std_err=se,
                        actual_value=realized,
                        actual_indicator=actual,
                        label=label,
                    )
                )
                stats["n"] += 1
                stats[label.lower()] += 1
                predicted = prob >= threshold
                if predicted and actual:
                    confusion["tp"] += 1
                elif predicted and not actual:
                    confusion["fp"] += 1
                elif not predicted and not actual:
                    confusion["tn"] += 1
                else:
                    confusion["fn"] += 1

    for stats in per_horizon.values():
        if stats["n"]:
            stats["tp_rate"] = 100.0 * stats["tp"] / stats["n"]
            stats["fp_rate"] = 100.0 * stats["fp"] / stats["n"]

    return EvaluationResult(
        reports=reports,
        skipped=skipped,
        horizon_rates=per_horizon,
        confusion=confusion,
        params_by_cell=params_by_cell,
    )
