"""Non-negative CP decomposition by multiplicative-update alternating least squares.

A rank-R model approximates x[i,j,k] by sum_r a[i,r]*b[j,r]*c[k,r] with all
three factor matrices non-negative.  Each sweep rescales every factor entry
by the ratio of the matched unfolding-times-Khatri-Rao product over the
current factor times the Gram matrix of the other two factors:

    A <- A * (X1 (C kr B)) / (A ((C'C) o (B'B)) + guard)

and cyclically for B and C, each update consuming the freshest other
factors.  Non-negative inputs and starts keep every iterate non-negative,
and the squared residual is non-increasing sweep to sweep.  Iteration stops
when the norm of the model tensor moves by at most `epsilon` between sweeps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .tensor import Tensor3, frobenius_norm, khatri_rao, matricize

__all__ = [
    "FactorSet",
    "SolverConfig",
    "FitTrace",
    "reconstruct",
    "nncp_decompose",
    "extract_time_factor",
    "factors_to_json",
    "factors_from_json",
]


@dataclass(frozen=True)
class FactorSet:
    """The three CP factor matrices: a is I x R, b is J x R, c is K x R."""

    rank: int
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        for name in ("a", "b", "c"):
            m = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if m.ndim != 2 or m.shape[1] != self.rank:
                raise ValueError(f"factor {name} must have {self.rank} columns, got shape {m.shape}")
            if not np.isfinite(m).all():
                raise ValueError(f"factor {name} has non-finite entries")
            if (m < 0.0).any():
                raise ValueError(f"factor {name} has negative entries")
            object.__setattr__(self, name, m)

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.a.shape[0], self.b.shape[0], self.c.shape[0])


@dataclass(frozen=True)
class SolverConfig:
    rank: int = 5
    epsilon: float = 1e-3  # 0 disables the norm-difference stop
    max_iters: int = 1000
    seed: int = 0
    denom_guard: float = 1e-12
    # Record the exact residual norm each sweep (materializes the model
    # tensor: costly at production scale, meant for tests and diagnostics).
    track_fit: bool = False

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.denom_guard <= 0:
            raise ValueError("denom_guard must be > 0")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")


@dataclass
class FitTrace:
    """Per-sweep record of the fit: model norms, final relative error, stop info."""

    norms: list[float] = field(default_factory=list)
    rel_error: float = float("nan")
    iterations: int = 0
    converged: bool = False
    rel_errors: list[float] = field(default_factory=list)  # only when track_fit


def reconstruct(f: FactorSet) -> Tensor3:
    """Materialize the model tensor sum_r a_r o b_r o c_r."""
    data = np.einsum("ir,jr,kr->ijk", f.a, f.b, f.c)
    return Tensor3(np.ascontiguousarray(data), copy=False)


def extract_time_factor(f: FactorSet, r: int) -> np.ndarray:
    """Column r (1-based, matching report tables) of the time factor matrix."""
    if not 1 <= r <= f.rank:
        raise ValueError(f"rank index {r} out of range 1..{f.rank}")
    return f.c[:, r - 1].copy()


def _model_norm(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
    # ||X_hat||^2 = sum of (A'A o B'B o C'C); all entries non-negative here.
    g = (a.T @ a) * (b.T @ b) * (c.T @ c)
    return float(np.sqrt(g.sum()))


def nncp_decompose(t: Tensor3, cfg: SolverConfig) -> tuple[FactorSet, FitTrace]:
    """Fit a rank-`cfg.rank` non-negative CP model to `t`.

    Factors start from seeded uniform(0,1) draws.  Returns the factors and a
    trace with one model-norm entry per sweep; `converged` is False when the
    sweep budget ran out before the norm-difference criterion fired (the
    factors are still returned).
    """
    t.require_nonnegative()
    i_dim, j_dim, k_dim = t.dims
    r = cfg.rank

    rng = np.random.default_rng(cfg.seed)
    a = rng.uniform(size=(i_dim, r))
    b = rng.uniform(size=(j_dim, r))
    c = rng.uniform(size=(k_dim, r))

    x1 = matricize(t, 1)
    x2 = matricize(t, 2)
    x3 = matricize(t, 3)
    x_norm = frobenius_norm(t)

    trace = FitTrace()
    guard = cfg.denom_guard

    for sweep in range(cfg.max_iters):
        a *= (x1 @ khatri_rao(c, b)) / (a @ ((c.T @ c) * (b.T @ b)) + guard)
        b *= (x2 @ khatri_rao(c, a)) / (b @ ((c.T @ c) * (a.T @ a)) + guard)
        mttkrp3 = x3 @ khatri_rao(b, a)
        c *= mttkrp3 / (c @ ((b.T @ b) * (a.T @ a)) + guard)

        model_norm = _model_norm(a, b, c)
        if not np.isfinite(model_norm):
            raise NumericalError(f"model norm became non-finite at sweep {sweep + 1}")
        trace.norms.append(model_norm)
        trace.iterations = sweep + 1

        if cfg.track_fit:
            resid = t.data - np.einsum("ir,jr,kr->ijk", a, b, c)
            err = float(np.linalg.norm(resid.ravel()))
            trace.rel_errors.append(err / x_norm if x_norm > 0 else 0.0)

        if cfg.epsilon > 0 and sweep >= 1:
            if abs(trace.norms[-1] - trace.norms[-2]) <= cfg.epsilon:
                trace.converged = True
                break

    factors = FactorSet(rank=r, a=a, b=b, c=c)
    resid = t.data - reconstruct(factors).data
    trace.rel_error = float(np.linalg.norm(resid.ravel()) / x_norm) if x_norm > 0 else 0.0
    return factors, trace


def factors_to_json(f: FactorSet) -> str:
    """Serialize to JSON; row-major matrices, exact float round trip."""
    doc = {
        "rank": f.rank,
        "dims": list(f.dims),
        "a": f.a.tolist(),
        "b": f.b.tolist(),
        "c": f.c.tolist(),
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def factors_from_json(text: str) -> FactorSet:
    doc = json.loads(text)
    f = FactorSet(
        rank=int(doc["rank"]),
        a=np.array(doc["a"], dtype=np.float64),
        b=np.array(doc["b"], dtype=np.float64),
        c=np.array(doc["c"], dtype=np.float64),
    )
    if list(f.dims) != list(doc["dims"]):
        raise ValueError(f"dims field {doc['dims']} does not match matrices {f.dims}")
    return f
