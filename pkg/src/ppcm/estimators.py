"""Estimating the coupling ``g`` from accepted/rejected count records."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import BracketError, DegenerateDesignError, DomainError, IllConditionedError
from .phase_model import ModelParams, evaluate
from .shot_simulator import ShotRecord

DEFAULT_SWEEP_EPSILONS = (0.05, 0.075, 0.1, 0.125, 0.15, 0.175, 0.2)
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class EstimationResult:
    g_hat: float
    std_err: float
    method: str
    diagnostics: dict = field(default_factory=dict)


def estimate_prob(records: Iterable[ShotRecord]) -> float:
    """Pooled accepted fraction ``sum N_d / sum (N_d + N_r)``."""
    n_d = n_tot = 0
    for r in records:
        n_d += r.n_d
        n_tot += r.n_d + r.n_r
    if n_tot < 1:
        raise DomainError("no counts to estimate a probability from")
    return n_d / n_tot


def invert_small_g(p_hat: float, n: float, epsilon: float, n_total: int | None = None) -> EstimationResult:
    """Invert ``P_d = (1 - cos(2 g n + eps)) / 2`` on the branch ``2gn + eps in [0, pi]``.

    ``std_err`` propagates the binomial error of ``p_hat`` over ``n_total``
    events; without ``n_total`` it is reported as ``inf``.
    """
    if not 0.0 <= p_hat <= 1.0:
        raise DomainError(f"p_hat = {p_hat!r} not in [0, 1]")
    if not n > 0:
        raise DomainError(f"n = {n!r} must be > 0")
    phase = math.acos(1.0 - 2.0 * p_hat)
    g_hat = (phase - epsilon) / (2.0 * n)
    slope = n * math.sin(phase)
    if abs(slope) < 1e-300:
        raise IllConditionedError(f"fringe slope vanishes at p_hat = {p_hat!r}")
    if n_total:
        std_err = math.sqrt(p_hat * (1.0 - p_hat) / n_total) / abs(slope)
    else:
        std_err = math.inf
    diag = {"fringe_phase": phase, "below_zero": g_hat < 0.0}
    return EstimationResult(g_hat, std_err, "inversion", diag)


def _loglik_terms(g, n_d, n_r, fixed: ModelParams):
    ev = evaluate(fixed.theta_i, fixed.theta_f, fixed.epsilon, g, fixed.n, fixed.kappa)
    p, q = ev.p_d, 1.0 - ev.p_d
    with np.errstate(divide="ignore", invalid="ignore"):
        ll = np.where(n_d > 0, n_d * np.log(p), 0.0) + np.where(n_r > 0, n_r * np.log(q), 0.0)
    return ll, ev


def mle_g(
    records: Sequence[ShotRecord],
    fixed: ModelParams,
    bracket: tuple[float, float] | None = None,
    grid_points: int = 257,
) -> EstimationResult:
    """Maximum-likelihood ``g`` from pooled binomial counts.

    The bracket is scanned on a grid, the best cell is refined by golden
    section and the result polished with Newton steps on the analytic score.
    ``std_err`` is ``1/sqrt(observed information)``. A maximum sitting on a
    lower bracket edge at ``g = 0`` is returned pinned there; any other edge
    maximum raises :class:`BracketError`.
    """
    if not records:
        raise DomainError("mle_g needs at least one record")
    n_d = float(sum(r.n_d for r in records))
    n_r = float(sum(r.n_r for r in records))
    if bracket is None:
        bracket = default_bracket(n_d / (n_d + n_r), fixed.n, fixed.epsilon)
    lo, hi = map(float, bracket)
    if not hi > lo:
        raise DomainError(f"empty bracket {bracket!r}")

    grid = np.linspace(lo, hi, grid_points)
    ll, _ = _loglik_terms(grid, n_d, n_r, fixed)
    k = int(np.argmax(ll))
    diag = {"bracket": (lo, hi), "boundary": None}
    if k == grid_points - 1 or (k == 0 and lo != 0.0):
        raise BracketError(
            f"likelihood maximum on the edge of [{lo:g}, {hi:g}]", float(ll[0]), float(ll[-1])
        )
    if k == 0:
        g_hat = lo
        diag["boundary"] = "lower"
    else:
        a, b = grid[k - 1], grid[k + 1]

        def negll(x):
            return -float(_loglik_terms(np.array([x]), n_d, n_r, fixed)[0][0])

        c, d = b - _GOLDEN * (b - a), a + _GOLDEN * (b - a)
        fc, fd = negll(c), negll(d)
        for _ in range(60):
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - _GOLDEN * (b - a)
                fc = negll(c)
            else:
                a, c, fc = c, d, fd
                d = a + _GOLDEN * (b - a)
                fd = negll(d)
        g_hat = 0.5 * (a + b)
        left, right = grid[k - 1], grid[k + 1]
        for _ in range(8):
            score, curv = _score(g_hat, n_d, n_r, fixed)
            if not curv < 0.0:
                break
            step = -score / curv
            nxt = min(max(g_hat + step, left), right)
            if nxt == g_hat:
                break
            g_hat = nxt
    score, curv = _score(g_hat, n_d, n_r, fixed)
    info = -curv
    std_err = 1.0 / math.sqrt(info) if info > 0 else math.inf
    diag.update(loglik=float(_loglik_terms(np.array([g_hat]), n_d, n_r, fixed)[0][0]), score=score)
    return EstimationResult(float(g_hat), std_err, "mle", diag)


def _score(g, n_d, n_r, fixed: ModelParams):
    ev = evaluate(fixed.theta_i, fixed.theta_f, fixed.epsilon, g, fixed.n, fixed.kappa)
    p = float(ev.p_d)
    q = 1.0 - p
    s, c = float(ev.sensitivity), float(ev.curvature)
    if p <= 0.0 or q <= 0.0:
        return 0.0, -math.inf
    a = n_d / p - n_r / q
    return s * a, c * a - s * s * (n_d / p**2 + n_r / q**2)


def default_bracket(p_hat: float, n: float, epsilon: float) -> tuple[float, float]:
    try:
        g_inv = max(invert_small_g(p_hat, n, epsilon).g_hat, 0.0)
    except (DomainError, IllConditionedError):
        g_inv = 0.0
    return 0.0, 10.0 * g_inv + math.pi / (4.0 * n)


def fit_epsilon_sweep(
    points: Sequence[tuple[float, float, int]], n: float, max_iter: int = 50
) -> EstimationResult:
    """Weighted least-squares fit of the small-coupling fringe across ``epsilon``.

    ``points`` are ``(epsilon, p_hat, total_count)``. Weights are inverse
    binomial variances evaluated at the current model, so the fit iterates
    to the Gauss-Newton fixed point; ``std_err`` comes from the curvature of
    the weighted sum of squares.
    """
    if len(points) < 3:
        raise DegenerateDesignError(f"{len(points)} sweep points; need at least 3")
    eps = np.array([p[0] for p in points], dtype=float)
    p_hat = np.array([p[1] for p in points], dtype=float)
    tot = np.array([p[2] for p in points], dtype=float)
    if np.unique(eps).size < 3:
        raise DegenerateDesignError("need at least 3 distinct epsilon values")

    def model(g):
        ph = 2.0 * g * n + eps
        return (1.0 - np.cos(ph)) / 2.0, n * np.sin(ph)

    starts = [(math.acos(1 - 2 * min(max(p, 0.0), 1.0)) - e) / (2 * n) for e, p in zip(eps, p_hat)]
    g = float(np.median(starts))
    info = 0.0
    for it in range(max_iter):
        p, jac = model(g)
        w = tot / np.clip(p * (1.0 - p), 1e-300, None)
        info = float(np.sum(w * jac * jac))
        if not info > 0:
            raise IllConditionedError("sweep carries no information about g")
        step = float(np.sum(w * jac * (p_hat - p))) / info
        g += step
        if abs(step) <= 1e-14 * max(abs(g), 1e-300) or step == 0.0:
            break
    p, jac = model(g)
    w = tot / np.clip(p * (1.0 - p), 1e-300, None)
    info = float(np.sum(w * jac * jac))
    resid = p_hat - p
    diag = {
        "residuals": resid.tolist(),
        "chi2": float(np.sum(w * resid * resid)),
        "dof": len(points) - 1,
        "iterations": it + 1,
    }
    return EstimationResult(g, 1.0 / math.sqrt(info), "epsilon_sweep", diag)


def _linear_fit(x, y, w=None):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.unique(x).size < 2:
        raise DegenerateDesignError("need at least 2 distinct abscissae")
    w = np.ones_like(x) if w is None else np.asarray(w, dtype=float)
    xm = np.sum(w * x) / np.sum(w)
    ym = np.sum(w * y) / np.sum(w)
    sxx = np.sum(w * (x - xm) ** 2)
    slope = np.sum(w * (x - xm) * (y - ym)) / sxx
    return float(slope), float(ym - slope * xm)


def fit_sensitivity(points: Sequence[tuple[float, float]], weights: Sequence[float] | None = None) -> float:
    """Least-squares slope of ``p_hat`` against ``g`` (unweighted by default)."""
    g = [p[0] for p in points]
    ph = [p[1] for p in points]
    return _linear_fit(g, ph, weights)[0]


def precision(delta_p: float, s: float) -> float:
    if s == 0.0:
        raise IllConditionedError("zero sensitivity; precision undefined")
    return delta_p / abs(s)

