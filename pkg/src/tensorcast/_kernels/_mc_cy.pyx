# cython: language_level=3
"""Compiled Monte Carlo kernels.

Algorithm and arithmetic are the mirror image of mc_py.py: Philox-4x32-10
counter-based blocks addressed by (seed, path, step), a 52-bit uniform in
(0, 1), Wichura's PPND16 inverse normal, and explicit Euler updates written
with the same expression grouping.  The module is compiled with
-ffp-contract=off so results stay bit-identical to the numpy backend.
"""

import numpy as np

cimport numpy as cnp  # noqa: F401  (numpy include path)
from libc.stdint cimport uint32_t, uint64_t
from libc.math cimport frexp, sqrt

BACKEND_NAME = "cython"

cdef double TWO_NEG52 = 2.0 ** -52

cdef double LN2 = 0.6931471805599453
cdef double SQRT_HALF = 0.7071067811865476
cdef double LOG_SEED = 1.0 / 21.0
cdef double LC0 = 1.0 / 19.0
cdef double LC1 = 1.0 / 17.0
cdef double LC2 = 1.0 / 15.0
cdef double LC3 = 1.0 / 13.0
cdef double LC4 = 1.0 / 11.0
cdef double LC5 = 1.0 / 9.0
cdef double LC6 = 1.0 / 7.0
cdef double LC7 = 1.0 / 5.0
cdef double LC8 = 1.0 / 3.0


cdef inline double _portable_log(double x) noexcept nogil:
    # frexp + atanh series; mirror of mc_py._portable_log (library log
    # routines differ across backends in the last ulp).
    cdef int e
    cdef double m = frexp(x, &e)
    cdef double ed, s, t, poly
    if m < SQRT_HALF:
        m = m + m
        e = e - 1
    ed = <double>e
    s = (m - 1.0) / (m + 1.0)
    t = s * s
    poly = LOG_SEED
    poly = poly * t + LC0
    poly = poly * t + LC1
    poly = poly * t + LC2
    poly = poly * t + LC3
    poly = poly * t + LC4
    poly = poly * t + LC5
    poly = poly * t + LC6
    poly = poly * t + LC7
    poly = poly * t + LC8
    poly = poly * t + 1.0
    return ed * LN2 + 2.0 * s * poly

cdef uint32_t PHILOX_M0 = 0xD2511F53u
cdef uint32_t PHILOX_M1 = 0xCD9E8D57u
cdef uint32_t BUMP0 = 0x9E3779B9u
cdef uint32_t BUMP1 = 0xBB67AE85u


cdef inline void _philox_rounds(uint32_t c0, uint32_t c1, uint32_t c2,
                                uint32_t c3, uint32_t k0, uint32_t k1,
                                uint32_t* w) noexcept nogil:
    cdef uint64_t prod0, prod1
    cdef uint32_t hi0, lo0, hi1, lo1
    cdef int rnd
    for rnd in range(10):
        if rnd:
            k0 = k0 + BUMP0
            k1 = k1 + BUMP1
        prod0 = (<uint64_t>c0) * (<uint64_t>PHILOX_M0)
        prod1 = (<uint64_t>c2) * (<uint64_t>PHILOX_M1)
        hi0 = <uint32_t>(prod0 >> 32)
        lo0 = <uint32_t>prod0
        hi1 = <uint32_t>(prod1 >> 32)
        lo1 = <uint32_t>prod1
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
    w[0] = c0
    w[1] = c1
    w[2] = c2
    w[3] = c3


# PPND16 coefficients, highest degree first (same tables as mc_py).
cdef double A0 = 2.5090809287301226727e3
cdef double A1 = 3.3430575583588128105e4
cdef double A2 = 6.7265770927008700853e4
cdef double A3 = 4.5921953931549871457e4
cdef double A4 = 1.3731693765509461125e4
cdef double A5 = 1.9715909503065514427e3
cdef double A6 = 1.3314166789178437745e2
cdef double A7 = 3.3871328727963666080e0
cdef double B0 = 5.2264952788528545610e3
cdef double B1 = 2.8729085735721942674e4
cdef double B2 = 3.9307895800092710610e4
cdef double B3 = 2.1213794301586595867e4
cdef double B4 = 5.3941960214247511077e3
cdef double B5 = 6.8718700749205790830e2
cdef double B6 = 4.2313330701600911252e1
cdef double B7 = 1.0
cdef double C0 = 7.74545014278341407640e-4
cdef double C1 = 2.27238449892691845833e-2
cdef double C2 = 2.41780725177450611770e-1
cdef double C3 = 1.27045825245236838258e0
cdef double C4 = 3.64784832476320460504e0
cdef double C5 = 5.76949722146069140550e0
cdef double C6 = 4.63033784615654529590e0
cdef double C7 = 1.42343711074968357734e0
cdef double D0 = 1.05075007164441684324e-9
cdef double D1 = 5.47593808499534494600e-4
cdef double D2 = 1.51986665636164571966e-2
cdef double D3 = 1.48103976427480074590e-1
cdef double D4 = 6.89767334985100004550e-1
cdef double D5 = 1.67638483018380384940e0
cdef double D6 = 2.05319162663775882187e0
cdef double D7 = 1.0
cdef double E0 = 2.01033439929228813265e-7
cdef double E1 = 2.71155556874348757815e-5
cdef double E2 = 1.24266094738807843860e-3
cdef double E3 = 2.65321895265761230930e-2
cdef double E4 = 2.96560571828504891230e-1
cdef double E5 = 1.78482653991729133580e0
cdef double E6 = 5.46378491116411436990e0
cdef double E7 = 6.65790464350110377720e0
cdef double F0 = 2.04426310338993978564e-15
cdef double F1 = 1.42151175831644588870e-7
cdef double F2 = 1.84631831751005468180e-5
cdef double F3 = 7.86869131145613259100e-4
cdef double F4 = 1.48753612908506148525e-2
cdef double F5 = 1.36929880922735805310e-1
cdef double F6 = 5.99832206555887937690e-1
cdef double F7 = 1.0


cdef inline double _ndtri(double p) noexcept nogil:
    cdef double q = p - 0.5
    cdef double r, num, den, val
    if -0.425 <= q <= 0.425:
        r = 0.180625 - q * q
        num = ((((((A0 * r + A1) * r + A2) * r + A3) * r + A4) * r + A5) * r + A6) * r + A7
        den = ((((((B0 * r + B1) * r + B2) * r + B3) * r + B4) * r + B5) * r + B6) * r + B7
        return q * num / den
    if q < 0.0:
        r = p
    else:
        r = 1.0 - p
    r = sqrt(-_portable_log(r))
    if r <= 5.0:
        r = r - 1.6
        num = ((((((C0 * r + C1) * r + C2) * r + C3) * r + C4) * r + C5) * r + C6) * r + C7
        den = ((((((D0 * r + D1) * r + D2) * r + D3) * r + D4) * r + D5) * r + D6) * r + D7
        val = num / den
    else:
        r = r - 5.0
        num = ((((((E0 * r + E1) * r + E2) * r + E3) * r + E4) * r + E5) * r + E6) * r + E7
        den = ((((((F0 * r + F1) * r + F2) * r + F3) * r + F4) * r + F5) * r + F6) * r + F7
        val = num / den
    if q < 0.0:
        return -val
    return val


cdef inline void _normals_pair(uint64_t seed, uint64_t path, uint32_t step,
                               double* z1, double* z2) noexcept nogil:
    cdef uint32_t w[4]
    cdef uint64_t u0, u1
    _philox_rounds(<uint32_t>(path & <uint64_t>0xFFFFFFFFu), <uint32_t>(path >> 32),
                   step, 0, <uint32_t>(seed & <uint64_t>0xFFFFFFFFu),
                   <uint32_t>(seed >> 32), w)
    u0 = ((<uint64_t>w[0]) << 32) | (<uint64_t>w[1])
    u1 = ((<uint64_t>w[2]) << 32) | (<uint64_t>w[3])
    z1[0] = _ndtri(((<double>(u0 >> 12)) + 0.5) * TWO_NEG52)
    z2[0] = _ndtri(((<double>(u1 >> 12)) + 0.5) * TWO_NEG52)


_DUMMY_2D = np.zeros((1, 1), dtype=np.float64)


def philox4x32_10(c0, c1, c2, c3, k0, k1):
    """Element-wise Philox block on uint32 arrays (test surface)."""
    c0a = np.ascontiguousarray(c0, dtype=np.uint32)
    c1a = np.ascontiguousarray(c1, dtype=np.uint32)
    c2a = np.ascontiguousarray(c2, dtype=np.uint32)
    c3a = np.ascontiguousarray(c3, dtype=np.uint32)
    out0 = np.empty_like(c0a)
    out1 = np.empty_like(c0a)
    out2 = np.empty_like(c0a)
    out3 = np.empty_like(c0a)
    cdef uint32_t[::1] v0 = c0a, v1 = c1a, v2 = c2a, v3 = c3a
    cdef uint32_t[::1] o0 = out0, o1 = out1, o2 = out2, o3 = out3
    cdef uint32_t kk0 = <uint32_t>(int(k0) & 0xFFFFFFFF)
    cdef uint32_t kk1 = <uint32_t>(int(k1) & 0xFFFFFFFF)
    cdef Py_ssize_t i, n = c0a.shape[0]
    cdef uint32_t w[4]
    with nogil:
        for i in range(n):
            _philox_rounds(v0[i], v1[i], v2[i], v3[i], kk0, kk1, w)
            o0[i] = w[0]
            o1[i] = w[1]
            o2[i] = w[2]
            o3[i] = w[3]
    return out0, out1, out2, out3


def ndtri(p):
    """Scalar-loop PPND16 over an array (test surface)."""
    pa = np.ascontiguousarray(p, dtype=np.float64).ravel()
    out = np.empty_like(pa)
    cdef double[::1] pv = pa
    cdef double[::1] ov = out
    cdef Py_ssize_t i, n = pa.shape[0]
    with nogil:
        for i in range(n):
            ov[i] = _ndtri(pv[i])
    return out.reshape(np.shape(p))


def normals_block(seed, step, shock, p0, p1):
    """Standard normals for paths [p0, p1) at (step, shock)."""
    cdef uint64_t s = <uint64_t>int(seed)
    cdef uint32_t st = <uint32_t>(int(step) & 0xFFFFFFFF)
    cdef int sh = int(shock)
    cdef uint64_t a = <uint64_t>int(p0), b = <uint64_t>int(p1)
    out = np.empty(int(b - a), dtype=np.float64)
    cdef double[::1] ov = out
    cdef uint64_t p
    cdef double z1, z2
    cdef Py_ssize_t i
    with nogil:
        for i in range(<Py_ssize_t>(b - a)):
            p = a + <uint64_t>i
            _normals_pair(s, p, st, &z1, &z2)
            ov[i] = z1 if sh == 0 else z2
    return out


def gbm_chunk(double s0, double mu, double sigma, double dt, int n_steps,
              seed, p0, p1, double[::1] terminal, paths=None):
    cdef uint64_t sd = <uint64_t>int(seed)
    cdef uint64_t a = <uint64_t>int(p0), b = <uint64_t>int(p1)
    cdef bint want_paths = paths is not None
    cdef double[:, ::1] pv = paths if want_paths else _DUMMY_2D
    cdef double sqrt_dt = sqrt(dt)
    cdef double mu_dt = mu * dt
    cdef double s, z1, z2, dw
    cdef uint64_t p
    cdef Py_ssize_t i
    cdef int step
    with nogil:
        for i in range(<Py_ssize_t>(b - a)):
            p = a + <uint64_t>i
            s = s0
            if want_paths:
                pv[i, 0] = s
            for step in range(n_steps):
                _normals_pair(sd, p, <uint32_t>step, &z1, &z2)
                dw = sqrt_dt * z1
                s = s * (1.0 + mu_dt + sigma * dw)
                if s <= 0.0:
                    s = 0.0
                if want_paths:
                    pv[i, step + 1] = s
            terminal[i] = s


def ou_chunk(double r0, double lam, double kappa, double sigma, double dt,
             int n_steps, seed, p0, p1, double[::1] terminal, paths=None):
    cdef uint64_t sd = <uint64_t>int(seed)
    cdef uint64_t a = <uint64_t>int(p0), b = <uint64_t>int(p1)
    cdef bint want_paths = paths is not None
    cdef double[:, ::1] pv = paths if want_paths else _DUMMY_2D
    cdef double sqrt_dt = sqrt(dt)
    cdef double r, z1, z2, dw
    cdef uint64_t p
    cdef Py_ssize_t i
    cdef int step
    with nogil:
        for i in range(<Py_ssize_t>(b - a)):
            p = a + <uint64_t>i
            r = r0
            if want_paths:
                pv[i, 0] = r
            for step in range(n_steps):
                _normals_pair(sd, p, <uint32_t>step, &z1, &z2)
                dw = sqrt_dt * z1
                r = r + lam * (kappa - r) * dt + sigma * dw
                if want_paths:
                    pv[i, step + 1] = r
            terminal[i] = r


def coupled_chunk(double s0, double mu0, double sigma_s, double lam,
                  double kappa, double sigma_mu, double rho, double dt,
                  int n_steps, seed, p0, p1, double[::1] terminal,
                  s_paths=None, mu_paths=None, w1=None, w2=None):
    cdef uint64_t sd = <uint64_t>int(seed)
    cdef uint64_t a = <uint64_t>int(p0), b = <uint64_t>int(p1)
    cdef bint want_s = s_paths is not None
    cdef bint want_mu = mu_paths is not None
    cdef bint want_w1 = w1 is not None
    cdef bint want_w2 = w2 is not None
    cdef double[:, ::1] sv = s_paths if want_s else _DUMMY_2D
    cdef double[:, ::1] mv = mu_paths if want_mu else _DUMMY_2D
    cdef double[:, ::1] w1v = w1 if want_w1 else _DUMMY_2D
    cdef double[:, ::1] w2v = w2 if want_w2 else _DUMMY_2D
    cdef double sqrt_dt = sqrt(dt)
    cdef double chol = sqrt(1.0 - rho * rho)
    cdef double s, mu, z1, z2, dw1, dw2
    cdef uint64_t p
    cdef Py_ssize_t i
    cdef int step
    with nogil:
        for i in range(<Py_ssize_t>(b - a)):
            p = a + <uint64_t>i
            s = s0
            mu = mu0
            if want_s:
                sv[i, 0] = s
            if want_mu:
                mv[i, 0] = mu
            for step in range(n_steps):
                _normals_pair(sd, p, <uint32_t>step, &z1, &z2)
                dw1 = sqrt_dt * z1
                dw2 = sqrt_dt * (rho * z1 + chol * z2)
                s = s * (1.0 + mu * dt + sigma_s * dw1)
                if s <= 0.0:
                    s = 0.0
                mu = mu + lam * (kappa - mu) * dt + sigma_mu * dw2
                if want_s:
                    sv[i, step + 1] = s
                if want_mu:
                    mv[i, step + 1] = mu
                if want_w1:
                    w1v[i, step] = dw1
                if want_w2:
                    w2v[i, step] = dw2
            terminal[i] = s
