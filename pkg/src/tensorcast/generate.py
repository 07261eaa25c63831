"""Seeded synthetic transaction and rate generator.

Transactions are drawn from a latent rank structure: each component couples
a heavy-tailed group of senders and receivers with a smooth positive time
profile, and cells are sampled from the factored mixture so the expected
amount tensor is exactly the latent model.  Amounts are exponential with a
configurable mean; the rate series is a discretized mean-reverting path.
The same seed always produces byte-identical CSV output.
"""

from __future__ import annotations

import datetime as _dt
import math
from dataclasses import asdict, dataclass

import numpy as np

from .ingest import FOUR_DAYS, TransactionRecord

__all__ = ["GeneratorConfig", "generate", "write_transactions_csv", "write_rates_csv"]


@dataclass(frozen=True)
class GeneratorConfig:
    n_senders: int = 60
    n_receivers: int = 80
    n_slots: int = 52
    rank: int = 5
    n_transactions: int = 100_000
    mean_amount: float = 76.0
    activity_exponent: float = 1.1  # power-law decay of account weights
    time_vol: float = 0.06  # per-slot log volatility of the latent time profiles
    time_mean_reversion: float = 0.15  # pull of log-profiles toward their level
    rate0: float = -0.0011
    rate_lam: float = 0.1851
    rate_kappa: float = -0.0011
    rate_sigma: float = 2e-4
    window_start: float = 0.0
    slot_duration: float = FOUR_DAYS
    seed: int = 0

    def __post_init__(self):
        if min(self.n_senders, self.n_receivers, self.n_slots, self.rank) < 1:
            raise ValueError("population sizes and rank must be >= 1")
        if self.n_transactions < 1:
            raise ValueError("n_transactions must be >= 1")
        if self.mean_amount <= 0:
            raise ValueError("mean_amount must be > 0")
        if self.time_vol < 0 or self.rate_sigma < 0:
            raise ValueError("volatilities must be >= 0")

    @property
    def window_end(self) -> float:
        return self.window_start + self.n_slots * self.slot_duration


def _account_weights(rng, n: int, exponent: float, rank: int) -> np.ndarray:
    """Per-component account weights: shared power-law scale, random emphasis."""
    base = np.arange(1, n + 1, dtype=np.float64) ** (-exponent)
    emphasis = rng.gamma(shape=0.5, scale=1.0, size=(n, rank))
    w = base[:, None] * emphasis
    return w / w.sum(axis=0, keepdims=True)


def _time_profiles(rng, cfg: GeneratorConfig) -> np.ndarray:
    """Positive (n_slots, rank) profiles: mean-reverting log random walks."""
    levels = rng.uniform(-0.3, 1.2, size=cfg.rank)
    logs = np.empty((cfg.n_slots, cfg.rank))
    logs[0] = levels + rng.normal(scale=0.2, size=cfg.rank)
    shocks = rng.normal(scale=cfg.time_vol, size=(cfg.n_slots, cfg.rank))
    for k in range(1, cfg.n_slots):
        pull = cfg.time_mean_reversion * (levels - logs[k - 1])
        logs[k] = logs[k - 1] + pull + shocks[k]
    return np.exp(logs)


def generate(cfg: GeneratorConfig) -> tuple[list[TransactionRecord], np.ndarray, dict]:
    """Return (records sorted by time, rate series per slot, ground truth)."""
    rng = np.random.default_rng(cfg.seed)

    a = _account_weights(rng, cfg.n_senders, cfg.activity_exponent, cfg.rank)
    b = _account_weights(rng, cfg.n_receivers, cfg.activity_exponent, cfg.rank)
    c = _time_profiles(rng, cfg)

    # Sample (component, sender, receiver, slot) from the factored mixture.
    comp_mass = c.sum(axis=0)
    comp_p = comp_mass / comp_mass.sum()
    n = cfg.n_transactions
    comps = rng.choice(cfg.rank, size=n, p=comp_p)
    senders = np.empty(n, dtype=np.int64)
    receivers = np.empty(n, dtype=np.int64)
    slots = np.empty(n, dtype=np.int64)
    for r in range(cfg.rank):
        mask = comps == r
        m = int(mask.sum())
        if not m:
            continue
        senders[mask] = rng.choice(cfg.n_senders, size=m, p=a[:, r])
        receivers[mask] = rng.choice(cfg.n_receivers, size=m, p=b[:, r])
        slots[mask] = rng.choice(cfg.n_slots, size=m, p=c[:, r] / comp_mass[r])

    amounts = rng.exponential(scale=cfg.mean_amount, size=n)
    offsets = rng.uniform(size=n)
    timestamps = cfg.window_start + (slots + offsets) * cfg.slot_duration

    order = np.argsort(timestamps, kind="stable")
    sender_width = len(str(cfg.n_senders - 1))
    receiver_width = len(str(cfg.n_receivers - 1))
    records = [
        TransactionRecord(
            tx_id=f"t{pos:08d}",
            sender=f"s{senders[i]:0{sender_width}d}",
            receiver=f"r{receivers[i]:0{receiver_width}d}",
            amount=float(amounts[i]),
            timestamp=float(timestamps[i]),
        )
        for pos, i in enumerate(order)
    ]

    # Mean-reverting rate path on the slot grid (exact one-step discretization).
    rates = np.empty(cfg.n_slots)
    phi = math.exp(-cfg.rate_lam)
    noise_sd = (
        cfg.rate_sigma * math.sqrt((1.0 - phi * phi) / (2.0 * cfg.rate_lam))
        if cfg.rate_lam > 0
        else cfg.rate_sigma
    )
    shocks = rng.normal(scale=1.0, size=cfg.n_slots)
    prev = cfg.rate0
    for k in range(cfg.n_slots):
        prev = cfg.rate_kappa + phi * (prev - cfg.rate_kappa) + noise_sd * shocks[k]
        rates[k] = prev

    truth = {
        "config": asdict(cfg),
        "time_profiles": c.tolist(),
        "component_mass": comp_mass.tolist(),
    }
    return records, rates, truth


def write_transactions_csv(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("tx_id,sender,receiver,amount,timestamp\n")
        for r in records:
            fh.write(f"{r.tx_id},{r.sender},{r.receiver},{r.amount!r},{r.timestamp!r}\n")


def write_rates_csv(rates, cfg: GeneratorConfig, path) -> None:
    """One observation per slot, dated at the slot end."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("date,rate\n")
        for k, rate in enumerate(rates):
            ts = cfg.window_start + (k + 1) * cfg.slot_duration
            day = _dt.datetime.fromtimestamp(ts, tz=_dt.timezone.utc).date().isoformat()
            fh.write(f"{day},{float(rate)!r}\n")
