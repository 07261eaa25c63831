"""Pure-numpy Monte Carlo kernels.

Draw contract (shared with the compiled backend, bit for bit): the standard
normal consumed by global path index p at Euler step t and shock index
s in {0, 1} is

    block = philox4x32_10(counter=(lo32(p), hi32(p), t, 0), key=(lo32(seed), hi32(seed)))
    u64   = words (0,1) of the block for s=0, words (2,3) for s=1
    u     = ((u64 >> 12) + 0.5) * 2**-52          # in (0, 1), exactly representable
    z     = inverse standard normal CDF of u       # Wichura's PPND16

Path dynamics depend only on (seed, p, t), so splitting the path range into
chunks, in any order or thread count, cannot change a single output value.

The state updates here are written expression-for-expression like the
compiled kernels; keep the two in sync (test_rng cross-checks bitwise).
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_BUMP0 = 0x9E3779B9
_BUMP1 = 0xBB67AE85
_MASK32 = 0xFFFFFFFF
_SHIFT32 = np.uint64(32)
_SHIFT12 = np.uint64(12)
_TWO_NEG52 = 2.0**-52


def _philox_rounds_u64(c0, c1, c2, c3, k0: int, k1: int):
    """Ten Philox-4x32 rounds; counters and outputs as uint64 arrays < 2**32.

    Everything stays uint64 with preallocated scratch (word values never
    exceed 32 bits, so no masking of the xor results is needed).
    """
    p0 = np.empty_like(c0)
    p1 = np.empty_like(c0)
    w0 = np.empty_like(c0)
    w1 = np.empty_like(c0)
    w2 = np.empty_like(c0)
    w3 = np.empty_like(c0)
    for rnd in range(10):
        if rnd:
            k0 = (k0 + _BUMP0) & _MASK32
            k1 = (k1 + _BUMP1) & _MASK32
        np.multiply(c0, _M0, out=p0)
        np.multiply(c2, _M1, out=p1)
        np.right_shift(p1, _SHIFT32, out=w0)
        np.bitwise_xor(w0, c1, out=w0)
        np.bitwise_xor(w0, np.uint64(k0), out=w0)
        np.bitwise_and(p1, np.uint64(_MASK32), out=w1)
        np.right_shift(p0, _SHIFT32, out=w2)
        np.bitwise_xor(w2, c3, out=w2)
        np.bitwise_xor(w2, np.uint64(k1), out=w2)
        np.bitwise_and(p0, np.uint64(_MASK32), out=w3)
        c0, c1, c2, c3, w0, w1, w2, w3 = w0, w1, w2, w3, c0, c1, c2, c3
    return c0, c1, c2, c3


def philox4x32_10(c0, c1, c2, c3, k0: int, k1: int):
    """One Philox-4x32 block (10 rounds) per element of the counter arrays."""
    words = _philox_rounds_u64(
        np.asarray(c0, dtype=np.uint32).astype(np.uint64),
        np.asarray(c1, dtype=np.uint32).astype(np.uint64),
        np.asarray(c2, dtype=np.uint32).astype(np.uint64),
        np.asarray(c3, dtype=np.uint32).astype(np.uint64),
        k0 & _MASK32,
        k1 & _MASK32,
    )
    return tuple(w.astype(np.uint32) for w in words)


# Wichura's PPND16 (double-precision inverse normal CDF), |relative error| < 1e-15.
_A = (
    2.5090809287301226727e3,
    3.3430575583588128105e4,
    6.7265770927008700853e4,
    4.5921953931549871457e4,
    1.3731693765509461125e4,
    1.9715909503065514427e3,
    1.3314166789178437745e2,
    3.3871328727963666080e0,
)
_B = (
    5.2264952788528545610e3,
    2.8729085735721942674e4,
    3.9307895800092710610e4,
    2.1213794301586595867e4,
    5.3941960214247511077e3,
    6.8718700749205790830e2,
    4.2313330701600911252e1,
    1.0,
)
_C = (
    7.74545014278341407640e-4,
    2.27238449892691845833e-2,
    2.41780725177450611770e-1,
    1.27045825245236838258e0,
    3.64784832476320460504e0,
    5.76949722146069140550e0,
    4.63033784615654529590e0,
    1.42343711074968357734e0,
)
_D = (
    1.05075007164441684324e-9,
    5.47593808499534494600e-4,
    1.51986665636164571966e-2,
    1.48103976427480074590e-1,
    6.89767334985100004550e-1,
    1.67638483018380384940e0,
    2.05319162663775882187e0,
    1.0,
)
_E = (
    2.01033439929228813265e-7,
    2.71155556874348757815e-5,
    1.24266094738807843860e-3,
    2.65321895265761230930e-2,
    2.96560571828504891230e-1,
    1.78482653991729133580e0,
    5.46378491116411436990e0,
    6.65790464350110377720e0,
)
_F = (
    2.04426310338993978564e-15,
    1.42151175831644588870e-7,
    1.84631831751005468180e-5,
    7.86869131145613259100e-4,
    1.48753612908506148525e-2,
    1.36929880922735805310e-1,
    5.99832206555887937690e-1,
    1.0,
)


def _horner(coeffs, r):
    acc = np.full_like(r, coeffs[0])
    for c in coeffs[1:]:
        acc = acc * r + c
    return acc


_LN2 = 0.6931471805599453
_SQRT_HALF = 0.7071067811865476
# atanh series coefficients 1/19 .. 1/3 (highest power first; 1/21 seeds Horner).
_LOG_SEED = 1.0 / 21.0
_LOG_COEFFS = tuple(1.0 / k for k in (19.0, 17.0, 15.0, 13.0, 11.0, 9.0, 7.0, 5.0, 3.0))


def _portable_log(x):
    """Natural log via frexp + atanh series: identical bits on every backend.

    Library log routines (libm vs numpy's vectorized path) disagree in the
    last ulp on some inputs, so the kernels use this shared formulation:
    x = m 2^e with m in [sqrt(1/2), sqrt(2)), s = (m-1)/(m+1),
    log x = e log 2 + 2 s (1 + s^2/3 + s^4/5 + ...).
    """
    m, e = np.frexp(x)
    cond = m < _SQRT_HALF
    m = np.where(cond, m + m, m)
    e = np.where(cond, e - 1, e).astype(np.float64)
    s = (m - 1.0) / (m + 1.0)
    t = s * s
    poly = np.full_like(t, _LOG_SEED)
    for c in _LOG_COEFFS:
        poly = poly * t + c
    poly = poly * t + 1.0
    return e * _LN2 + 2.0 * s * poly


def ndtri(p):
    """Inverse standard normal CDF for p in (0, 1), vectorized PPND16."""
    p = np.asarray(p, dtype=np.float64)
    q = p - 0.5
    z = np.empty_like(p)

    central = np.abs(q) <= 0.425
    if central.any():
        qc = q[central]
        r = 0.180625 - qc * qc
        z[central] = qc * _horner(_A, r) / _horner(_B, r)

    tails = ~central
    if tails.any():
        qt = q[tails]
        r = np.where(qt < 0.0, p[tails], 1.0 - p[tails])
        r = np.sqrt(-_portable_log(r))
        near = r <= 5.0
        val = np.empty_like(r)
        if near.any():
            rn = r[near] - 1.6
            val[near] = _horner(_C, rn) / _horner(_D, rn)
        far = ~near
        if far.any():
            rf = r[far] - 5.0
            val[far] = _horner(_E, rf) / _horner(_F, rf)
        z[tails] = np.where(qt < 0.0, -val, val)
    return z


def _block_words(seed: int, step: int, p0: int, p1: int):
    paths = np.arange(p0, p1, dtype=np.uint64)
    c0 = paths & np.uint64(_MASK32)
    c1 = paths >> _SHIFT32
    c2 = np.full(c0.shape, step & _MASK32, dtype=np.uint64)
    c3 = np.zeros(c0.shape, dtype=np.uint64)
    return _philox_rounds_u64(c0, c1, c2, c3, seed & _MASK32, (seed >> 32) & _MASK32)


def _to_unit(hi, lo):
    # 52-bit resolution keeps the +0.5 offset exactly representable, so the
    # result lies in [2**-53, 1 - 2**-53] and never collapses to 0 or 1.
    u64 = (hi << _SHIFT32) | lo
    return ((u64 >> _SHIFT12).astype(np.float64) + 0.5) * _TWO_NEG52


def normals_block(seed: int, step: int, shock: int, p0: int, p1: int) -> np.ndarray:
    """Standard normals for paths [p0, p1) at (step, shock); shock in {0, 1}."""
    w0, w1, w2, w3 = _block_words(seed, step, p0, p1)
    if shock == 0:
        return ndtri(_to_unit(w0, w1))
    return ndtri(_to_unit(w2, w3))


def _normals_pair(seed: int, step: int, p0: int, p1: int):
    w0, w1, w2, w3 = _block_words(seed, step, p0, p1)
    return ndtri(_to_unit(w0, w1)), ndtri(_to_unit(w2, w3))


def gbm_chunk(s0, mu, sigma, dt, n_steps, seed, p0, p1, terminal, paths=None):
    """Euler GBM for paths [p0, p1); writes terminals (and levels if given)."""
    n = p1 - p0
    sqrt_dt = np.sqrt(dt)
    mu_dt = mu * dt
    s = np.full(n, s0, dtype=np.float64)
    if paths is not None:
        paths[:, 0] = s
    for step in range(n_steps):
        z = normals_block(seed, step, 0, p0, p1)
        dw = sqrt_dt * z
        s = s * (1.0 + mu_dt + sigma * dw)
        s[s <= 0.0] = 0.0
        if paths is not None:
            paths[:, step + 1] = s
    terminal[:] = s


def ou_chunk(r0, lam, kappa, sigma, dt, n_steps, seed, p0, p1, terminal, paths=None):
    """Euler mean-reverting process for paths [p0, p1)."""
    n = p1 - p0
    sqrt_dt = np.sqrt(dt)
    r = np.full(n, r0, dtype=np.float64)
    if paths is not None:
        paths[:, 0] = r
    for step in range(n_steps):
        z = normals_block(seed, step, 0, p0, p1)
        dw = sqrt_dt * z
        r = r + lam * (kappa - r) * dt + sigma * dw
        if paths is not None:
            paths[:, step + 1] = r
    terminal[:] = r


def coupled_chunk(
    s0,
    mu0,
    sigma_s,
    lam,
    kappa,
    sigma_mu,
    rho,
    dt,
    n_steps,
    seed,
    p0,
    p1,
    terminal,
    s_paths=None,
    mu_paths=None,
    w1=None,
    w2=None,
):
    """Coupled level/drift system: shock 0 drives the level, shock 1 the drift.

    Both states advance from their time-t values; the level update uses the
    pre-update drift.
    """
    n = p1 - p0
    sqrt_dt = np.sqrt(dt)
    chol = np.sqrt(1.0 - rho * rho)
    s = np.full(n, s0, dtype=np.float64)
    mu = np.full(n, mu0, dtype=np.float64)
    if s_paths is not None:
        s_paths[:, 0] = s
    if mu_paths is not None:
        mu_paths[:, 0] = mu
    for step in range(n_steps):
        z1, z2 = _normals_pair(seed, step, p0, p1)
        dw1 = sqrt_dt * z1
        dw2 = sqrt_dt * (rho * z1 + chol * z2)
        s = s * (1.0 + mu * dt + sigma_s * dw1)
        s[s <= 0.0] = 0.0
        mu = mu + lam * (kappa - mu) * dt + sigma_mu * dw2
        if s_paths is not None:
            s_paths[:, step + 1] = s
        if mu_paths is not None:
            mu_paths[:, step + 1] = mu
        if w1 is not None:
            w1[:, step] = dw1
        if w2 is not None:
            w2[:, step] = dw2
    terminal[:] = s
