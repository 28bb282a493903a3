"""Hot numeric kernels: phase reduction and closed-form PPCM evaluation.

Two implementations are kept side by side. The numba path compiles scalar
loops with ``@njit``; the numpy path is fully vectorised. ``BACKEND`` names
the one used by default and is chosen at import time: set
``PPCM_DISABLE_NUMBA=1`` (or run without numba installed) to force numpy.

Both paths take contiguous 1-D float64 arrays of equal length.
"""
import math
import os

import numpy as np

# 2*pi as an unevaluated sum of three doubles (~159 significant bits).
TWO_PI_HI = 6.283185307179586
TWO_PI_MID = 2.4492935982947064e-16
TWO_PI_LO = -5.989539619436679e-33
_SPLIT = 134217729.0  # 2**27 + 1, Veltkamp splitter


def _flag_set(name):
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA and not _flag_set("PPCM_DISABLE_NUMBA") else "numpy"


# --------------------------------------------------------------------------
# scalar code shared by the numba loops
# --------------------------------------------------------------------------

def _two_prod(a, b):
    p = a * b
    c = _SPLIT * a
    ah = c - (c - a)
    al = a - ah
    c = _SPLIT * b
    bh = c - (c - b)
    bl = b - bh
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def _reduce_scalar(n, x):
    hi, lo = _two_prod(n, x)
    k = np.floor(hi / TWO_PI_HI)
    a, b = _two_prod(k, TWO_PI_HI)
    r = hi - a  # exact: a and hi are within a factor of two
    m_hi, m_lo = _two_prod(k, TWO_PI_MID)
    r = (((r - b) + lo) - m_hi) - (m_lo + k * TWO_PI_LO)
    if r < 0.0:
        r += TWO_PI_HI
    elif r >= TWO_PI_HI:
        r -= TWO_PI_HI
    if r >= TWO_PI_HI or r < 0.0:
        r = 0.0
    return r


def _ppcm_scalar(ti, tf, eps, g, n, kappa):
    phi = kappa * g
    ssf = math.sin(ti) * math.sin(tf)
    h = math.sin(0.5 * phi)
    log_env = -2.0 * n * h * h
    env = math.exp(log_env)
    one_minus_env = -math.expm1(log_env)
    psi = _reduce_scalar(n, math.sin(phi)) + eps
    sh = math.sin(0.5 * psi)
    a = math.sin(0.5 * ((math.pi - ti) - tf))  # cos((ti+tf)/2), exact zero at ti + tf = pi
    p_raw = a * a + 0.5 * ssf * (one_minus_env + 2.0 * env * sh * sh)
    p = min(max(p_raw, 0.0), 1.0)
    q = 1.0 - p
    trig = math.sin(psi + phi)
    pre = 0.5 * kappa * n * ssf
    s = pre * env * trig
    curv = 0.5 * kappa * kappa * n * ssf * env * (
        -n * math.sin(phi) * trig + (n * math.cos(phi) + 1.0) * math.cos(psi + phi)
    )
    if not p * q > 0.0:
        # P_d pinned at 0 or 1: the ratio tends to twice the curvature
        f = 2.0 * abs(curv)
        log_f = math.log(f) if f > 0.0 else -np.inf
    elif pre == 0.0 or trig == 0.0:
        f = 0.0
        log_f = -np.inf
    else:
        log_f = 2.0 * (math.log(abs(pre)) + log_env + math.log(abs(trig))) - math.log(p) - math.log(q)
        f = math.exp(log_f)
    return p_raw, p, log_env, psi, s, curv, f, log_f


def _reduce_loop(n, x, out):
    for i in range(n.shape[0]):
        out[i] = _reduce_scalar(n[i], x[i])


def _ppcm_loop(ti, tf, eps, g, n, kappa, p_raw, p, log_env, psi, s, curv, f, log_f):
    for i in range(ti.shape[0]):
        (p_raw[i], p[i], log_env[i], psi[i], s[i], curv[i], f[i], log_f[i]) = _ppcm_scalar(
            ti[i], tf[i], eps[i], g[i], n[i], kappa[i]
        )


# --------------------------------------------------------------------------
# numpy backend
# --------------------------------------------------------------------------

def _two_prod_np(a, b):
    p = a * b
    c = _SPLIT * a
    ah = c - (c - a)
    al = a - ah
    c = _SPLIT * b
    bh = c - (c - b)
    bl = b - bh
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def reduce_phase_numpy(n, x):
    hi, lo = _two_prod_np(n, x)
    k = np.floor(hi / TWO_PI_HI)
    a, b = _two_prod_np(k, TWO_PI_HI)
    r = hi - a
    m_hi, m_lo = _two_prod_np(k, TWO_PI_MID)
    r = (((r - b) + lo) - m_hi) - (m_lo + k * TWO_PI_LO)
    r = np.where(r < 0.0, r + TWO_PI_HI, np.where(r >= TWO_PI_HI, r - TWO_PI_HI, r))
    return np.where((r >= TWO_PI_HI) | (r < 0.0), 0.0, r)


def ppcm_numpy(ti, tf, eps, g, n, kappa):
    phi = kappa * g
    ssf = np.sin(ti) * np.sin(tf)
    h = np.sin(0.5 * phi)
    log_env = -2.0 * n * h * h
    env = np.exp(log_env)
    one_minus_env = -np.expm1(log_env)
    psi = reduce_phase_numpy(n, np.sin(phi)) + eps
    sh = np.sin(0.5 * psi)
    a = np.sin(0.5 * ((np.pi - ti) - tf))
    p_raw = a * a + 0.5 * ssf * (one_minus_env + 2.0 * env * sh * sh)
    p = np.clip(p_raw, 0.0, 1.0)
    q = 1.0 - p
    trig = np.sin(psi + phi)
    pre = 0.5 * kappa * n * ssf
    s = pre * env * trig
    curv = 0.5 * kappa * kappa * n * ssf * env * (
        -n * np.sin(phi) * trig + (n * np.cos(phi) + 1.0) * np.cos(psi + phi)
    )
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        regular = 2.0 * (np.log(np.abs(pre)) + log_env + np.log(np.abs(trig))) - np.log(p) - np.log(q)
        limit = 2.0 * np.abs(curv)
        pinned = ~(p * q > 0.0)
        zero = ~pinned & ((pre == 0.0) | (trig == 0.0))
        log_f = np.where(pinned, np.log(limit), np.where(zero, -np.inf, regular))
        f = np.where(pinned, limit, np.where(zero, 0.0, np.exp(regular)))
    return p_raw, p, log_env, psi, s, curv, f, log_f


# --------------------------------------------------------------------------
# numba backend
# --------------------------------------------------------------------------

if HAVE_NUMBA:
    _jit = numba.njit(cache=True, fastmath=False)
    _two_prod = _jit(_two_prod)
    _reduce_scalar = _jit(_reduce_scalar)
    _ppcm_scalar = _jit(_ppcm_scalar)
    _reduce_loop = _jit(_reduce_loop)
    _ppcm_loop = _jit(_ppcm_loop)


def reduce_phase_numba(n, x):
    out = np.empty_like(n)
    _reduce_loop(n, x, out)
    return out


def ppcm_numba(ti, tf, eps, g, n, kappa):
    outs = tuple(np.empty_like(ti) for _ in range(8))
    _ppcm_loop(ti, tf, eps, g, n, kappa, *outs)
    return outs


if BACKEND == "numba":
    reduce_phase_kernel = reduce_phase_numba
    ppcm_kernel = ppcm_numba
else:
    reduce_phase_kernel = reduce_phase_numpy
    ppcm_kernel = ppcm_numpy
