"""Reproducible experiments: FI surface, delay scan, precision scaling, large-n theory.

Every experiment returns a list of row dicts whose keys match a table schema
in :mod:`ppcm.tables`. Random work is keyed by ``(master_seed, point index,
repetition)`` so tables are identical however the points are scheduled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import curve_fit

from . import phase_model as pm
from .errors import DomainError
from .estimators import estimate_prob, fit_sensitivity, precision
from .phase_model import ModelParams
from .shot_simulator import (
    NoiseParams,
    OverlapParams,
    effective_g,
    effective_prob,
    exact_summary,
    run_repetitions,
)

LN10 = math.log(10.0)
DEFAULT_G_GRID = tuple(k * 1e-8 for k in range(1, 7))
DEFAULT_N_LIST = (2e4, 5e4, 1e5, 2e5, 5e5, 1e6)


@dataclass(frozen=True)
class ScalingPoint:
    n: float
    delta_g: float
    f_extracted: float  # per detected event
    f_extracted_per_rep: float = 0.0
    s_slope: float = 0.0
    delta_p: float = 0.0

    def row(self) -> dict:
        return {
            "n": self.n,
            "delta_g": self.delta_g,
            "f_extracted_per_event": self.f_extracted,
            "f_extracted_per_rep": self.f_extracted_per_rep,
            "s_slope": self.s_slope,
            "delta_p": self.delta_p,
        }


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    r_squared: float


@dataclass(frozen=True)
class ScalingConfig:
    base: ModelParams = field(default_factory=ModelParams)
    nu: int = 10
    n_total: int = 1_000_000
    mode: str = "mc"  # "mc" or "exact"
    designated_g: float | None = None  # None: mean of the g grid
    noise: NoiseParams = field(default_factory=NoiseParams)
    noise_onset_n: float = 0.0  # background applies to points with n >= this
    weighted_slope: bool = False
    delta_p_mode: str = "dispersion"  # or "designated"
    master_seed: int = 0


def fi_surface(n: float, g_grid, eps_grid, kappa: int = 2, theta_i=math.pi / 2, theta_f=math.pi / 2) -> list[dict]:
    if len(g_grid) == 0 or len(eps_grid) == 0:
        raise DomainError("fi_surface needs nonempty grids")
    gg, ee = np.meshgrid(np.asarray(g_grid, float), np.asarray(eps_grid, float), indexing="ij")
    ev = pm.evaluate(theta_i, theta_f, ee, gg, n, kappa)
    rows = []
    for i in range(gg.shape[0]):
        for j in range(gg.shape[1]):
            rows.append({
                "g": float(gg[i, j]),
                "epsilon": float(ee[i, j]),
                "f_p": float(ev.f_p[i, j]),
                "log10_f_p": float(ev.log_f_p[i, j] / LN10),
            })
    return rows


def delay_scan(
    delays: Sequence[float],
    g0: float,
    n_list: Sequence[float],
    base: ModelParams,
    noise: NoiseParams = NoiseParams(),
    n_total: int = 1_000_000,
    nu: int = 10,
    overlap: OverlapParams = OverlapParams(),
    master_seed: int = 0,
    exact: bool = False,
) -> list[dict]:
    """Accepted probability against probe/photon delay for several ``n``."""
    rows = []
    for i, n in enumerate(n_list):
        for j, delay in enumerate(delays):
            g_eff = effective_g(g0, replace(overlap, delay=float(delay)))
            params = replace(base, g=g_eff, n=float(n))
            p_exact = effective_prob(pm.accepted_probability(params).p_d, noise)
            if exact:
                p_hat = p_exact
            else:
                _, recs = run_repetitions(params, noise, nu, n_total, master_seed, index=(i, j))
                p_hat = estimate_prob(recs)
            rows.append({"delay_fs": float(delay), "n": float(n), "g_eff": g_eff, "p_hat": p_hat, "p_exact": p_exact})
    return rows


def _gauss(x, amp, centre, sigma, offset):
    return offset + amp * np.exp(-((x - centre) ** 2) / (2.0 * sigma**2))


def fit_delay_peak(delays, p_hat) -> dict:
    """Gaussian-plus-offset fit of one delay scan; returns centre and FWHM (fs)."""
    x = np.asarray(delays, float)
    y = np.asarray(p_hat, float)
    if x.size < 5:
        raise DomainError("peak fit needs at least 5 delays")
    k = int(np.argmax(y))
    guess = (y.max() - y.min(), x[k], (x.max() - x.min()) / 6.0, y.min())
    popt, pcov = curve_fit(_gauss, x, y, p0=guess, maxfev=20000)
    fwhm = abs(popt[2]) * math.sqrt(8.0 * math.log(2.0))
    return {"centre": float(popt[1]), "centre_err": float(math.sqrt(max(pcov[1, 1], 0.0))),
            "fwhm": float(fwhm), "amplitude": float(popt[0]), "offset": float(popt[3])}


def infer_single_fwhm(fwhm_fit: float, fwhm_pump: float = 150.0) -> float:
    """Single-photon FWHM implied by a fitted cross-correlation width."""
    if fwhm_fit <= fwhm_pump:
        raise DomainError("fitted width not larger than the pump width")
    return math.sqrt(fwhm_fit**2 - fwhm_pump**2)


def _dispersion(summaries) -> float:
    """Pooled ``sigma^2 / (p (1 - p))`` over all measured points at one ``n``."""
    ratios = [sm.sigma**2 / (sm.p_mean * (1.0 - sm.p_mean)) for sm in summaries if 0.0 < sm.p_mean < 1.0]
    if not ratios:
        raise DomainError("no interior probabilities to estimate the dispersion from")
    return float(np.mean(ratios))


def scaling_sweep(n_list: Sequence[float], g_grid: Sequence[float], cfg: ScalingConfig) -> list[ScalingPoint]:
    """Precision and extracted FI against ``n``.

    For each ``n``: the accepted probability is measured (``nu`` repetitions of
    ``n_total`` events) at every grid coupling, the sensitivity is the slope
    of a straight-line fit through those points and the precision is
    ``delta_p / s`` with ``delta_p = sigma / sqrt(nu)`` at the designated
    coupling. In ``exact`` mode the probabilities are the model values and
    ``sigma`` is the binomial standard deviation.

    ``delta_p_mode="designated"`` takes ``sigma`` from the ``nu`` repetitions
    at the designated coupling alone. The default ``"dispersion"`` pools
    every measured point at that ``n`` through the ratio
    ``sigma^2 / (p (1 - p))`` and rescales it to the designated probability,
    which reduces to the same number in exact mode but uses all the data.
    """
    if len(n_list) < 3:
        raise DomainError("scaling_sweep needs at least 3 values of n")
    if list(n_list) != sorted(n_list):
        raise DomainError("n_list must be ascending")
    if cfg.mode not in ("mc", "exact"):
        raise DomainError(f"mode {cfg.mode!r} not in ('mc', 'exact')")
    if cfg.delta_p_mode not in ("dispersion", "designated"):
        raise DomainError(f"delta_p_mode {cfg.delta_p_mode!r} not in ('dispersion', 'designated')")
    g_grid = [float(g) for g in g_grid]
    g_des = float(np.mean(g_grid)) if cfg.designated_g is None else float(cfg.designated_g)

    points = []
    for i, n in enumerate(n_list):
        noise = cfg.noise if n >= cfg.noise_onset_n else NoiseParams()

        def measure(g, j):
            params = replace(cfg.base, g=g, n=float(n))
            if cfg.mode == "exact":
                return exact_summary(params, noise, cfg.nu, cfg.n_total)
            return run_repetitions(params, noise, cfg.nu, cfg.n_total, cfg.master_seed, index=(i, j))[0]

        summaries = [measure(g, j) for j, g in enumerate(g_grid)]
        weights = None
        if cfg.weighted_slope:
            weights = [1.0 / max(s.delta_p, 1e-300) ** 2 for s in summaries]
        s = fit_sensitivity([(g, sm.p_mean) for g, sm in zip(g_grid, summaries)], weights)
        if g_des in g_grid:
            des = summaries[g_grid.index(g_des)]
            measured = summaries
        else:
            des = measure(g_des, len(g_grid))
            measured = summaries + [des]
        if cfg.delta_p_mode == "designated":
            delta_p = des.delta_p
        else:
            delta_p = math.sqrt(_dispersion(measured) * des.p_mean * (1.0 - des.p_mean) / cfg.nu)
        dg = precision(delta_p, s)
        f_event = pm.fisher_from_prob(des.p_mean, s)
        points.append(ScalingPoint(float(n), dg, f_event, f_event * cfg.n_total, s, delta_p))
    return points


def theory_curve_large_n(
    g: float,
    n_grid: Sequence[float],
    base: ModelParams = ModelParams(),
    operating_phase: float | None = math.pi / 2,
) -> list[dict]:
    """Closed-form ``F_p`` out to very large ``n`` at fixed coupling.

    With ``operating_phase`` set, epsilon is retuned at every ``n`` so the
    fringe phase ``n sin(kappa g) + epsilon`` sits at that value; ``None``
    keeps ``base.epsilon`` fixed and lets the fringe wrap. ``envelope`` is the
    squared overlap ``exp(-4 n sin^2(kappa g / 2))``.
    """
    if not g > 0:
        raise DomainError("theory curve needs g > 0")
    n = np.asarray(n_grid, float)
    phi = base.kappa * g
    if operating_phase is None:
        eps = np.full_like(n, base.epsilon)
    else:
        wrapped = np.array([pm.reduce_phase(float(x), math.sin(phi)) for x in n])
        eps = operating_phase - wrapped
    ev = pm.evaluate(base.theta_i, base.theta_f, eps, g, n, base.kappa)
    envelope = np.exp(-4.0 * n * math.sin(phi / 2) ** 2)
    rows = []
    for k in range(n.size):
        rows.append({
            "n": float(n[k]),
            "f_p": float(ev.f_p[k]),
            "f_p_over_n2": float(np.exp(ev.log_f_p[k] - 2.0 * math.log(n[k]))),
            "envelope": float(envelope[k]),
        })
    return rows


def power_law(x, y) -> PowerLawFit:
    """Least-squares line through ``(log x, log y)``."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.size < 3:
        raise DomainError("power-law fit needs at least 3 points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("power-law fit needs positive data")
    lx, ly = np.log(x), np.log(y)
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(float(slope), float(math.exp(intercept)), min(max(r2, 0.0), 1.0))


FIELDS = {
    "delta_g": lambda p: p.delta_g,
    "f_extracted": lambda p: p.f_extracted,
    "f_extracted_per_event": lambda p: p.f_extracted,
    "f_extracted_per_rep": lambda p: p.f_extracted_per_rep,
    "s_slope": lambda p: p.s_slope,
    "delta_p": lambda p: p.delta_p,
}


def fit_power_law(points: Sequence[ScalingPoint], field_name: str = "delta_g") -> PowerLawFit:
    if field_name not in FIELDS:
        raise DomainError(f"unknown field {field_name!r}; choose from {sorted(FIELDS)}")
    get = FIELDS[field_name]
    return power_law([p.n for p in points], [get(p) for p in points])


def synthetic_epsilon_sweep(
    g: float,
    n: float,
    epsilons: Sequence[float],
    total: int,
    master_seed: int,
    base: ModelParams = ModelParams(),
    noise: NoiseParams = NoiseParams(),
    index: tuple = (),
) -> list[tuple[float, float, int]]:
    """Simulated ``(epsilon, p_hat, total)`` points for a calibration sweep.

    Point ``k`` draws from the stream ``(master_seed, *index, k)``.
    """
    from .shot_simulator import sample_counts, stream

    out = []
    for k, eps in enumerate(epsilons):
        params = replace(base, epsilon=float(eps), g=float(g), n=float(n))
        p_eff = effective_prob(pm.accepted_probability(params).p_d, noise)
        rec = sample_counts(p_eff, int(total), stream(master_seed, *index, k))
        out.append((float(eps), rec.p_hat, int(total)))
    return out
