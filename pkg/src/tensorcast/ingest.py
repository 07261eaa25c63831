"""Transaction-log parsing, activity filtering and tensor construction.

Transactions arrive as CSV with header tx_id,sender,receiver,amount,timestamp.
Accounts are ranked by transaction count per axis (outgoing for senders,
incoming for receivers); the top quantile of each axis is retained and the
surviving transfers are summed into a sender x receiver x time-slot tensor.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .tensor import Tensor3

__all__ = [
    "TransactionRecord",
    "IngestConfig",
    "AccountIndex",
    "ParseResult",
    "ActivityStats",
    "TensorBuild",
    "parse_transactions",
    "activity_stats",
    "filter_top_active",
    "build_tensor",
    "load_rate_series",
]

_HEADER = ["tx_id", "sender", "receiver", "amount", "timestamp"]

FOUR_DAYS = 4 * 86_400.0


@dataclass(frozen=True)
class TransactionRecord:
    tx_id: str
    sender: str
    receiver: str
    amount: float
    timestamp: float


@dataclass(frozen=True)
class IngestConfig:
    window_start: float
    window_end: float
    # 4-day slots turn the reference 208-day window into 52 slots.
    slot_duration: float = FOUR_DAYS
    activity_quantile: float = 0.01

    def __post_init__(self):
        if not self.window_start < self.window_end:
            raise ValueError("window_start must precede window_end")
        if self.slot_duration <= 0:
            raise ValueError("slot_duration must be > 0")
        if not 0.0 < self.activity_quantile <= 1.0:
            raise ValueError("activity_quantile must lie in (0, 1]")

    @property
    def n_slots(self) -> int:
        return int(math.ceil((self.window_end - self.window_start) / self.slot_duration))


@dataclass
class RowIssue:
    line: int
    reason: str


@dataclass
class ParseResult:
    records: list[TransactionRecord]
    issues: list[RowIssue] = field(default_factory=list)

    @property
    def rejected(self) -> int:
        return len(self.issues)


@dataclass(frozen=True)
class ActivityStats:
    tx_count: int
    mean_amount: float
    mean_tx_per_sender: float
    mean_tx_per_receiver: float
    single_payment_senders: int
    single_payment_receivers: int


@dataclass(frozen=True)
class AccountIndex:
    """Retained account ids in rank order with their dense indices."""

    senders: tuple[str, ...]
    receivers: tuple[str, ...]
    sender_counts: dict[str, int]
    receiver_counts: dict[str, int]

    def sender_pos(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.senders)}

    def receiver_pos(self) -> dict[str, int]:
        return {r: i for i, r in enumerate(self.receivers)}


@dataclass
class TensorBuild:
    tensor: Tensor3
    dropped_out_of_window: int


def parse_transactions(source, fmt: str = "csv") -> ParseResult:
    """Parse a transaction CSV; malformed rows are reported, not fatal."""
    if fmt != "csv":
        raise DataError(f"unsupported format {fmt!r}")
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "rb") as fh:
            return parse_transactions(fh)
    if isinstance(source, io.TextIOBase):
        text = source
    else:
        text = io.TextIOWrapper(source, encoding="utf-8")

    reader = csv.reader(text)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty transaction stream: missing header") from None
    if [h.strip() for h in header] != _HEADER:
        raise DataError(f"unexpected header {header!r}, want {_HEADER}")

    result = ParseResult(records=[])
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 5:
            result.issues.append(RowIssue(lineno, f"expected 5 fields, got {len(row)}"))
            continue
        tx_id, sender, receiver, amount_s, ts_s = (f.strip() for f in row)
        if not sender or not receiver:
            result.issues.append(RowIssue(lineno, "empty sender or receiver id"))
            continue
        try:
            amount = float(amount_s)
            ts = float(ts_s)
        except ValueError:
            result.issues.append(RowIssue(lineno, f"non-numeric amount or timestamp: {row!r}"))
            continue
        if not (math.isfinite(amount) and math.isfinite(ts)):
            result.issues.append(RowIssue(lineno, "non-finite amount or timestamp"))
            continue
        if amount < 0:
            result.issues.append(RowIssue(lineno, f"negative amount {amount}"))
            continue
        result.records.append(TransactionRecord(tx_id, sender, receiver, amount, ts))
    return result


def activity_stats(records) -> ActivityStats:
    """Exact means and single-payment counts over the record list."""
    records = list(records)
    if not records:
        return ActivityStats(0, 0.0, 0.0, 0.0, 0, 0)
    sender_counts: dict[str, int] = {}
    receiver_counts: dict[str, int] = {}
    total = 0.0
    for r in records:
        sender_counts[r.sender] = sender_counts.get(r.sender, 0) + 1
        receiver_counts[r.receiver] = receiver_counts.get(r.receiver, 0) + 1
        total += r.amount
    n = len(records)
    return ActivityStats(
        tx_count=n,
        mean_amount=total / n,
        mean_tx_per_sender=n / len(sender_counts),
        mean_tx_per_receiver=n / len(receiver_counts),
        single_payment_senders=sum(1 for c in sender_counts.values() if c == 1),
        single_payment_receivers=sum(1 for c in receiver_counts.values() if c == 1),
    )


def _top_accounts(counts: dict[str, int], quantile: float) -> tuple[str, ...]:
    # Rank by count descending, ties to the lexicographically smaller id.
    ranked = sorted(counts, key=lambda acct: (-counts[acct], acct))
    keep = math.ceil(quantile * len(ranked))
    return tuple(ranked[:keep])


def filter_top_active(records, cfg: IngestConfig) -> tuple[list[TransactionRecord], AccountIndex]:
    """Keep records whose sender and receiver both rank in the top quantile."""
    records = list(records)
    sender_counts: dict[str, int] = {}
    receiver_counts: dict[str, int] = {}
    for r in records:
        sender_counts[r.sender] = sender_counts.get(r.sender, 0) + 1
        receiver_counts[r.receiver] = receiver_counts.get(r.receiver, 0) + 1

    senders = _top_accounts(sender_counts, cfg.activity_quantile)
    receivers = _top_accounts(receiver_counts, cfg.activity_quantile)
    index = AccountIndex(
        senders=senders,
        receivers=receivers,
        sender_counts={s: sender_counts[s] for s in senders},
        receiver_counts={r: receiver_counts[r] for r in receivers},
    )
    keep_s = set(senders)
    keep_r = set(receivers)
    filtered = [r for r in records if r.sender in keep_s and r.receiver in keep_r]
    return filtered, index


def build_tensor(records, index: AccountIndex, cfg: IngestConfig) -> TensorBuild:
    """Sum amounts into (sender, receiver, slot) cells; slot = floor((t - start)/duration)."""
    spos = index.sender_pos()
    rpos = index.receiver_pos()
    dims = (len(index.senders), len(index.receivers), cfg.n_slots)
    if min(dims) < 1:
        raise DataError(f"cannot build a tensor with empty axes, dims {dims}")
    data = np.zeros(dims, dtype=np.float64)
    dropped = 0
    for r in records:
        if r.sender not in spos or r.receiver not in rpos:
            raise DataError(f"record endpoint not in index: {r.sender}->{r.receiver}")
        k = math.floor((r.timestamp - cfg.window_start) / cfg.slot_duration)
        if k < 0 or k >= dims[2]:
            dropped += 1
            continue
        data[spos[r.sender], rpos[r.receiver], k] += r.amount
    return TensorBuild(tensor=Tensor3(data, copy=False), dropped_out_of_window=dropped)


def _parse_date_field(value: str) -> float:
    value = value.strip()
    try:
        return float(value)
    except ValueError:
        pass
    try:
        day = _dt.date.fromisoformat(value)
    except ValueError:
        raise DataError(f"cannot parse date {value!r} as ISO date or epoch seconds") from None
    return float(
        _dt.datetime(day.year, day.month, day.day, tzinfo=_dt.timezone.utc).timestamp()
    )


def load_rate_series(source, cfg: IngestConfig) -> np.ndarray:
    """Read a date,rate CSV and resample onto the slot grid.

    Each slot takes the last observation at or before the slot's end
    (last-observation-carried-forward).  Fails when the first slot has no
    prior observation.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return load_rate_series(fh, cfg)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty rate stream: missing header") from None
    if [h.strip() for h in header] != ["date", "rate"]:
        raise DataError(f"unexpected rate header {header!r}, want ['date', 'rate']")
    obs: list[tuple[float, float]] = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 2:
            raise DataError(f"rate line {lineno}: expected 2 fields, got {len(row)}")
        ts = _parse_date_field(row[0])
        try:
            rate = float(row[1])
        except ValueError:
            raise DataError(f"rate line {lineno}: non-numeric rate {row[1]!r}") from None
        obs.append((ts, rate))
    if not obs:
        raise DataError("rate stream has no observations")
    obs.sort(key=lambda pair: pair[0])

    out = np.empty(cfg.n_slots, dtype=np.float64)
    pos = -1
    for k in range(cfg.n_slots):
        slot_end = cfg.window_start + (k + 1) * cfg.slot_duration
        while pos + 1 < len(obs) and obs[pos + 1][0] <= slot_end:
            pos += 1
        if pos < 0:
            raise DataError(
                f"no rate observation at or before the end of slot 0 ({slot_end})"
            )
        out[k] = obs[pos][1]
    return out
