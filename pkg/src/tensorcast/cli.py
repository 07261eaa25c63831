"""Command-line pipeline: generate/ingest -> decompose -> normality -> calibrate
-> simulate -> evaluate, driven by a single JSON config.

Configuration lives in one JSON document (see DEFAULT_CONFIG); --set
key.path=value overrides individual fields.  Every emitted table carries the
resolved-config hash and the global seed in a header comment, and a rerun
with the same config and seed reproduces every output byte for byte
regardless of --workers.

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import _kernels
from .calibrate import CalibrationConfig, ModelParams, calibrate_all, ratio_series, shapiro_lognormal_test
from .cp import FactorSet, SolverConfig, extract_time_factor, nncp_decompose
from .errors import ConfigError, DataError, NumericalError
from .generate import GeneratorConfig, generate, write_rates_csv, write_transactions_csv
from .ingest import (
    IngestConfig,
    activity_stats,
    build_tensor,
    filter_top_active,
    load_rate_series,
    parse_transactions,
)
from .mc import SimConfig, simulate_coupled, simulate_gbm, simulate_ou, terminals_to_csv
from .payoff import HorizonSplit, evaluate_horizons
from .tensor import Tensor3, dump_sparse_csv, load_sparse_csv
from .util import config_hash, derive_seed

DEFAULT_CONFIG = {
    "seed": 0,
    "out_dir": "out",
    "transactions_csv": None,
    "rates_csv": None,
    "generate_inputs": False,
    "generator": {
        "n_senders": 60,
        "n_receivers": 80,
        "n_slots": 52,
        "rank": 5,
        "n_transactions": 100000,
        "mean_amount": 76.0,
        "activity_exponent": 1.1,
        "time_vol": 0.06,
        "time_mean_reversion": 0.15,
        "rate0": -0.0011,
        "rate_lam": 0.1851,
        "rate_kappa": -0.0011,
        "rate_sigma": 0.0002,
        "window_start": 0.0,
        "slot_duration": 345600.0,
    },
    "ingest": {
        "window_start": None,
        "window_end": None,
        "slot_duration": 345600.0,
        "activity_quantile": 0.01,
    },
    "solver": {"rank": 5, "epsilon": 0.001, "max_iters": 2000, "track_fit": False},
    "normality": {"alpha": 0.10, "ratio_guard": 1e-12},
    "calibration": {"ratio_guard": 1e-12, "ewma_weight": 0.9, "dt": 1.0},
    "splits": [[26, 26], [42, 10], [47, 5]],
    "strikes": {"mode": "multiple_of_s0", "values": [0.5, 0.8, 1.25, 2.0]},
    "threshold": 0.6,
    "sim": {"n_paths": 100000, "dt": 1.0},
}


def _merge(defaults, override, path=""):
    if isinstance(defaults, dict):
        if not isinstance(override, dict):
            raise ConfigError(f"config field {path or '<root>'} must be an object")
        out = dict(defaults)
        for key, value in override.items():
            if key not in defaults:
                raise ConfigError(f"unknown config field {path + key!r}")
            if isinstance(defaults[key], dict) and defaults[key]:
                out[key] = _merge(defaults[key], value, path + key + ".")
            else:
                out[key] = value
        return out
    return override


def _apply_set(cfg: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(f"--set expects key.path=value, got {assignment!r}")
    dotted, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = cfg
    keys = dotted.split(".")
    for key in keys[:-1]:
        if not isinstance(node.get(key), (dict, list)):
            raise ConfigError(f"--set path {dotted!r}: {key!r} is not a config section")
        node = node[key]
    leaf = keys[-1]
    if isinstance(node, dict) and leaf not in node:
        raise ConfigError(f"--set path {dotted!r}: unknown field {leaf!r}")
    node[leaf] = value


def load_config(path: str | None, overrides) -> dict:
    user = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                user = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    cfg = _merge(DEFAULT_CONFIG, user)
    for assignment in overrides or ():
        _apply_set(cfg, assignment)
    return cfg


@contextlib.contextmanager
def _stage(name: str):
    try:
        yield
    except (ConfigError, DataError, NumericalError) as exc:
        raise type(exc)(f"[{name}] {exc}") from exc
    except (ValueError, OSError) as exc:
        raise NumericalError(f"[{name}] {exc}") from exc


def _semantic_hash(cfg: dict) -> str:
    # out_dir is a pure output location: runs that differ only there must
    # still produce byte-identical tables
    doc = {k: v for k, v in cfg.items() if k != "out_dir"}
    return config_hash(doc)


def _header(cfg: dict) -> str:
    return f"config={_semantic_hash(cfg)} seed={cfg['seed']}"


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _ingest_config(cfg: dict) -> IngestConfig:
    ing = cfg["ingest"]
    start, end = ing["window_start"], ing["window_end"]
    if start is None or end is None:
        gen = cfg["generator"]
        start = gen["window_start"]
        end = gen["window_start"] + gen["n_slots"] * gen["slot_duration"]
    return IngestConfig(
        window_start=float(start),
        window_end=float(end),
        slot_duration=float(ing["slot_duration"]),
        activity_quantile=float(ing["activity_quantile"]),
    )


def _tx_path(cfg: dict) -> Path:
    p = cfg["transactions_csv"] or str(_out_dir(cfg) / "transactions.csv")
    return Path(p)


def _rates_path(cfg: dict) -> Path:
    p = cfg["rates_csv"] or str(_out_dir(cfg) / "rates.csv")
    return Path(p)


def cmd_generate(cfg: dict) -> None:
    with _stage("generate"):
        gen_cfg = GeneratorConfig(seed=derive_seed(cfg["seed"], "generate"), **cfg["generator"])
        records, rates, truth = generate(gen_cfg)
        out = _out_dir(cfg)
        write_transactions_csv(records, _tx_path(cfg))
        write_rates_csv(rates, gen_cfg, _rates_path(cfg))
        truth.update(config=truth["config"], config_hash=_semantic_hash(cfg), seed=cfg["seed"])
        _write_json(out / "ground_truth.json", truth)
    print(f"generate: {len(records)} transactions -> {_tx_path(cfg)}")


def _run_ingest(cfg: dict) -> Tensor3:
    ing_cfg = _ingest_config(cfg)
    tx = _tx_path(cfg)
    if not tx.exists():
        raise DataError(f"transactions file not found: {tx}")
    parsed = parse_transactions(tx)
    stats = activity_stats(parsed.records)
    filtered, index = filter_top_active(parsed.records, ing_cfg)
    build = build_tensor(filtered, index, ing_cfg)

    out = _out_dir(cfg)
    dump_sparse_csv(build.tensor, out / "tensor.csv", extra_comments=[_header(cfg)])
    _write_json(
        out / "account_index.json",
        {
            "config_hash": _semantic_hash(cfg),
            "seed": cfg["seed"],
            "senders": list(index.senders),
            "receivers": list(index.receivers),
            "sender_counts": index.sender_counts,
            "receiver_counts": index.receiver_counts,
        },
    )
    _write_json(
        out / "ingest_stats.json",
        {
            "config_hash": _semantic_hash(cfg),
            "seed": cfg["seed"],
            "parse_rejected": parsed.rejected,
            "dropped_out_of_window": build.dropped_out_of_window,
            "tensor_dims": list(build.tensor.dims),
            **asdict(stats),
        },
    )
    return build.tensor


def cmd_ingest(cfg: dict) -> None:
    with _stage("ingest"):
        tensor = _run_ingest(cfg)
    print(f"ingest: tensor dims {tensor.dims} -> {_out_dir(cfg) / 'tensor.csv'}")


def _solver_config(cfg: dict) -> SolverConfig:
    s = cfg["solver"]
    return SolverConfig(
        rank=int(s["rank"]),
        epsilon=float(s["epsilon"]),
        max_iters=int(s["max_iters"]),
        seed=derive_seed(cfg["seed"], "solver"),
        track_fit=bool(s["track_fit"]),
    )


def _run_decompose(cfg: dict, tensor: Tensor3):
    factors, trace = nncp_decompose(tensor, _solver_config(cfg))
    doc = {
        "config_hash": _semantic_hash(cfg),
        "seed": cfg["seed"],
        "rank": factors.rank,
        "dims": list(factors.dims),
        "a": factors.a.tolist(),
        "b": factors.b.tolist(),
        "c": factors.c.tolist(),
        "trace": {
            "norms": trace.norms,
            "iterations": trace.iterations,
            "converged": trace.converged,
            "rel_error": trace.rel_error,
        },
    }
    _write_json(_out_dir(cfg) / "factors.json", doc)
    return factors, trace


def _load_factors(cfg: dict) -> FactorSet:
    path = _out_dir(cfg) / "factors.json"
    if not path.exists():
        raise DataError(f"factors file not found: {path}; run decompose first")
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return FactorSet(
        rank=int(doc["rank"]),
        a=np.array(doc["a"]),
        b=np.array(doc["b"]),
        c=np.array(doc["c"]),
    )


def cmd_decompose(cfg: dict) -> None:
    with _stage("decompose"):
        path = _out_dir(cfg) / "tensor.csv"
        if not path.exists():
            raise DataError(f"tensor file not found: {path}; run ingest first")
        tensor = load_sparse_csv(path)
        factors, trace = _run_decompose(cfg, tensor)
    print(
        f"decompose: rank {factors.rank}, {trace.iterations} sweeps, "
        f"converged={trace.converged}, rel_error={trace.rel_error:.3e}"
    )


def _run_normality(cfg: dict, factors: FactorSet) -> list[dict]:
    alpha = float(cfg["normality"]["alpha"])
    guard = float(cfg["normality"]["ratio_guard"])
    rows = []
    for r in range(1, factors.rank + 1):
        series = extract_time_factor(factors, r)
        try:
            ratios = ratio_series(series, guard, source_rank=r)
            res = shapiro_lognormal_test(ratios, alpha)
            rows.append(
                {
                    "rank": r,
                    "n": res.sample_size,
                    "W": res.statistic,
                    "p_value": res.p_value,
                    "passed": int(res.passed),
                    "error": "",
                }
            )
        except NumericalError as exc:
            rows.append({"rank": r, "n": 0, "W": "", "p_value": "", "passed": 0, "error": str(exc)})
    if all(row["error"] for row in rows):
        raise NumericalError("log-normality test failed for every rank")
    out = _out_dir(cfg) / "normality.csv"
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(f"# {_header(cfg)}\n")
        fh.write("rank,n,W,p_value,passed,error\n")
        for row in rows:
            w = repr(row["W"]) if row["W"] != "" else ""
            p = repr(row["p_value"]) if row["p_value"] != "" else ""
            fh.write(f"{row['rank']},{row['n']},{w},{p},{row['passed']},{row['error']}\n")
    return rows


def cmd_normality(cfg: dict) -> None:
    with _stage("normality"):
        factors = _load_factors(cfg)
        rows = _run_normality(cfg, factors)
    passed = sum(r["passed"] for r in rows)
    print(f"normality: {passed}/{len(rows)} ranks pass at alpha={cfg['normality']['alpha']}")


def _splits(cfg: dict) -> list[HorizonSplit]:
    splits = []
    for item in cfg["splits"]:
        if not (isinstance(item, (list, tuple)) and len(item) == 2):
            raise ConfigError(f"splits entries must be [train_len, horizon], got {item!r}")
        splits.append(HorizonSplit(train_len=int(item[0]), horizon=int(item[1])))
    return splits


def _calibration_config(cfg: dict) -> CalibrationConfig:
    c = cfg["calibration"]
    return CalibrationConfig(
        ratio_guard=float(c["ratio_guard"]),
        ewma_weight=float(c["ewma_weight"]),
        dt=float(c["dt"]),
    )


def _load_rates(cfg: dict) -> np.ndarray:
    path = _rates_path(cfg)
    if not path.exists():
        raise DataError(f"rates file not found: {path}")
    return load_rate_series(path, _ingest_config(cfg))


def _run_calibrate(cfg: dict, factors: FactorSet, rates: np.ndarray) -> list[dict]:
    calib = _calibration_config(cfg)
    rows = []
    failures = []
    for split in _splits(cfg):
        for r in range(1, factors.rank + 1):
            series = extract_time_factor(factors, r)
            if split.train_len + split.horizon > series.size:
                failures.append(f"rank {r} horizon {split.horizon}: series too short")
                continue
            try:
                params = calibrate_all(series[: split.train_len], rates[: split.train_len], calib)
            except NumericalError as exc:
                failures.append(f"rank {r} horizon {split.horizon}: {exc}")
                continue
            rows.append({"horizon": split.horizon, "rank": r, **asdict(params)})
    if not rows:
        raise NumericalError("calibration failed for every (rank, horizon) cell: " + "; ".join(failures))
    out = _out_dir(cfg) / "params.csv"
    cols = ["horizon", "rank", "sigma_s", "lam", "kappa", "sigma_mu", "rho", "s0", "mu0"]
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(f"# {_header(cfg)}\n")
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(repr(row[c]) if isinstance(row[c], float) else str(row[c]) for c in cols) + "\n")
    return rows


def cmd_calibrate(cfg: dict) -> None:
    with _stage("calibrate"):
        factors = _load_factors(cfg)
        rates = _load_rates(cfg)
        rows = _run_calibrate(cfg, factors, rates)
    print(f"calibrate: {len(rows)} (rank, horizon) cells -> {_out_dir(cfg) / 'params.csv'}")


def _sim_config(cfg: dict, n_steps: int, record: bool = False) -> SimConfig:
    s = cfg["sim"]
    return SimConfig(
        n_paths=int(s["n_paths"]),
        n_steps=n_steps,
        dt=float(s["dt"]),
        seed=derive_seed(cfg["seed"], "sim"),
        record=record,
    )


def _run_evaluate(cfg: dict, factors: FactorSet, rates: np.ndarray, workers: int):
    strikes_cfg = cfg["strikes"]
    result = evaluate_horizons(
        factors.c,
        rates,
        _splits(cfg),
        [float(v) for v in strikes_cfg["values"]],
        strike_mode=strikes_cfg["mode"],
        calib_cfg=_calibration_config(cfg),
        sim_cfg=_sim_config(cfg, n_steps=1),
        threshold=float(cfg["threshold"]),
        workers=workers,
    )
    if not result.reports:
        raise NumericalError(
            "no evaluation cells produced a report: "
            + "; ".join(str(s) for s in result.skipped[:5])
        )
    out = _out_dir(cfg)
    with open(out / "digital_report.csv", "w", encoding="utf-8") as fh:
        fh.write(f"# {_header(cfg)}\n")
        fh.write("rank,horizon,strike,probability,std_err,actual_value,actual_indicator,label\n")
        for rep in result.reports:
            fh.write(
                f"{rep.spec.rank},{rep.spec.horizon},{rep.spec.strike!r},{rep.probability!r},"
                f"{rep.std_err!r},{rep.actual_value!r},{rep.actual_indicator},{rep.label}\n"
            )
    _write_json(
        out / "summary.json",
        {
            "config_hash": _semantic_hash(cfg),
            "seed": cfg["seed"],
            "horizon_rates": {str(h): v for h, v in result.horizon_rates.items()},
            "confusion": result.confusion,
            "n_reports": len(result.reports),
            "skipped": result.skipped,
        },
    )
    return result


def cmd_evaluate(cfg: dict, workers: int) -> None:
    with _stage("evaluate"):
        factors = _load_factors(cfg)
        rates = _load_rates(cfg)
        result = _run_evaluate(cfg, factors, rates, workers)
    for horizon in sorted(result.horizon_rates):
        rates_h = result.horizon_rates[horizon]
        print(
            f"evaluate: horizon {horizon}: TP {rates_h['tp_rate']:.1f}% "
            f"FP {rates_h['fp_rate']:.1f}% over {rates_h['n']} cells"
        )


def cmd_simulate(cfg: dict, args) -> None:
    with _stage("simulate"):
        sim_cfg = _sim_config(cfg, n_steps=int(args.steps))
        if args.process == "gbm":
            bundle = simulate_gbm(args.s0, args.mu, args.sigma, sim_cfg, workers=args.workers)
        elif args.process == "ou":
            bundle = simulate_ou(args.s0, args.lam, args.kappa, args.sigma, sim_cfg, workers=args.workers)
        else:
            if not args.params_file:
                raise ConfigError("coupled simulation needs --params-file with a ModelParams JSON")
            with open(args.params_file, "r", encoding="utf-8") as fh:
                params = ModelParams.from_json(fh.read())
            bundle = simulate_coupled(params, sim_cfg, workers=args.workers)
        out = _out_dir(cfg) / "terminals.csv"
        terminals_to_csv(bundle, out)
    print(
        f"simulate: {args.process}, {sim_cfg.n_paths} paths x {sim_cfg.n_steps} steps, "
        f"mean terminal {float(np.mean(bundle.terminal)):.6g}, absorbed {bundle.absorbed} -> {out}"
    )


def cmd_run(cfg: dict, workers: int) -> None:
    out = _out_dir(cfg)
    _write_json(out / "run_config.json", {"config_hash": _semantic_hash(cfg), "resolved": cfg})
    if cfg["generate_inputs"]:
        cmd_generate(cfg)
    with _stage("ingest"):
        tensor = _run_ingest(cfg)
    print(f"run[ingest]: tensor dims {tensor.dims}")
    with _stage("decompose"):
        factors, trace = _run_decompose(cfg, tensor)
    print(f"run[decompose]: {trace.iterations} sweeps, converged={trace.converged}")
    with _stage("normality"):
        rows = _run_normality(cfg, factors)
    print(f"run[normality]: {sum(r['passed'] for r in rows)}/{len(rows)} ranks pass")
    with _stage("calibrate"):
        rates = _load_rates(cfg)
        cal_rows = _run_calibrate(cfg, factors, rates)
    print(f"run[calibrate]: {len(cal_rows)} cells")
    with _stage("evaluate"):
        result = _run_evaluate(cfg, factors, rates, workers)
    for horizon in sorted(result.horizon_rates):
        rates_h = result.horizon_rates[horizon]
        print(
            f"run[evaluate]: horizon {horizon}: TP {rates_h['tp_rate']:.1f}% "
            f"FP {rates_h['fp_rate']:.1f}% over {rates_h['n']} cells"
        )
    print(f"run: outputs in {out} (backend: {_kernels.BACKEND})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tensorcast",
        description="Transaction-tensor factorization and temporal factor forecasting",
    )
    parser.add_argument("-c", "--config", help="JSON config file", default=None)
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        metavar="KEY.PATH=VALUE",
        help="override a config field (JSON-typed value); repeatable",
    )
    parser.add_argument("--workers", type=int, default=1, help="path-simulation thread count")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("generate", "ingest", "decompose", "normality", "calibrate", "evaluate", "run"):
        sub.add_parser(name)
    sim = sub.add_parser("simulate")
    sim.add_argument("--process", choices=("gbm", "ou", "coupled"), default="gbm")
    sim.add_argument("--s0", type=float, default=1.0)
    sim.add_argument("--mu", type=float, default=0.0)
    sim.add_argument("--sigma", type=float, default=0.2)
    sim.add_argument("--lam", type=float, default=0.1)
    sim.add_argument("--kappa", type=float, default=0.0)
    sim.add_argument("--steps", type=int, default=10)
    sim.add_argument("--params-file", default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides)
        if args.command == "generate":
            cmd_generate(cfg)
        elif args.command == "ingest":
            cmd_ingest(cfg)
        elif args.command == "decompose":
            cmd_decompose(cfg)
        elif args.command == "normality":
            cmd_normality(cfg)
        elif args.command == "calibrate":
            cmd_calibrate(cfg)
        elif args.command == "evaluate":
            cmd_evaluate(cfg, args.workers)
        elif args.command == "simulate":
            args.workers = args.workers or 1
            cmd_simulate(cfg, args)
        elif args.command == "run":
            cmd_run(cfg, args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
