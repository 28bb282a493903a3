"""Monte Carlo count records for projective photon counting.

Each repetition draws ``N_d ~ Binomial(N_tot, p_eff)``; the rejected count is
the remainder. Streams are derived from ``(master_seed, *indices)`` through
``numpy.random.SeedSequence`` so a record never depends on evaluation order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .phase_model import ModelParams, accepted_probability

FWHM_TO_SIGMA2 = 1.0 / (8.0 * math.log(2.0))


@dataclass(frozen=True)
class OverlapParams:
    """Temporal overlap of the probe pulse and the single photon (fs)."""

    fwhm_pump: float = 150.0
    fwhm_single: float = 480.0
    peak_overlap: float = 0.77
    delay: float = 0.0

    def __post_init__(self):
        if not (self.fwhm_pump > 0 and self.fwhm_single > 0):
            raise DomainError("pulse widths must be > 0")
        if not 0.0 < self.peak_overlap <= 1.0:
            raise DomainError(f"peak_overlap = {self.peak_overlap!r} not in (0, 1]")

    @property
    def sigma2(self) -> float:
        # variance of the cross-correlation of two Gaussian envelopes
        return (self.fwhm_pump**2 + self.fwhm_single**2) * FWHM_TO_SIGMA2


@dataclass(frozen=True)
class NoiseParams:
    """Background events mixed into the detected stream.

    A fraction ``bg_fraction`` of detections come from leaked probe photons,
    each accepted with probability ``bg_prob``.
    """

    bg_fraction: float = 0.0
    bg_prob: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.bg_fraction < 1.0:
            raise DomainError(f"bg_fraction = {self.bg_fraction!r} not in [0, 1)")
        if not 0.0 <= self.bg_prob <= 1.0:
            raise DomainError(f"bg_prob = {self.bg_prob!r} not in [0, 1]")


@dataclass(frozen=True)
class ShotRecord:
    n_d: int
    n_r: int
    seed_tag: str = ""

    @property
    def total(self) -> int:
        return self.n_d + self.n_r

    @property
    def p_hat(self) -> float:
        return self.n_d / self.total


@dataclass(frozen=True)
class RepetitionSummary:
    p_mean: float
    sigma: float
    delta_p: float
    nu: int


def effective_g(g0: float, ov: OverlapParams) -> float:
    return g0 * ov.peak_overlap * math.exp(-ov.delay**2 / (2.0 * ov.sigma2))


def effective_prob(p_d: float, noise: NoiseParams) -> float:
    return (1.0 - noise.bg_fraction) * p_d + noise.bg_fraction * noise.bg_prob


def stream(master_seed: int, *index: int) -> np.random.Generator:
    """Private generator for the task addressed by ``index``."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(i) for i in index))
    return np.random.Generator(np.random.PCG64(ss))


def _tag(master_seed, index):
    return ":".join(str(int(i)) for i in (master_seed, *index))


def sample_counts(p_eff: float, n_tot: int, rng: np.random.Generator, seed_tag: str = "") -> ShotRecord:
    if n_tot < 1:
        raise DomainError(f"n_tot = {n_tot!r} must be >= 1")
    if not 0.0 <= p_eff <= 1.0:
        raise DomainError(f"p_eff = {p_eff!r} not in [0, 1]")
    n_d = int(rng.binomial(int(n_tot), p_eff))
    return ShotRecord(n_d, int(n_tot) - n_d, seed_tag)


def summarize(records: Sequence[ShotRecord]) -> RepetitionSummary:
    nu = len(records)
    if nu < 2:
        raise DomainError(f"nu = {nu} repetitions; the standard deviation needs at least 2")
    ps = np.array([r.p_hat for r in records])
    sigma = float(np.std(ps, ddof=1))
    return RepetitionSummary(float(np.mean(ps)), sigma, sigma / math.sqrt(nu), nu)


def run_repetitions(
    params: ModelParams,
    noise: NoiseParams,
    nu: int,
    n_tot: int,
    master_seed: int,
    index: tuple = (),
) -> tuple[RepetitionSummary, list[ShotRecord]]:
    """Simulate ``nu`` independent count records at one parameter point.

    ``index`` extends the stream key so callers running many points from one
    master seed get disjoint streams; repetition ``i`` uses
    ``(master_seed, *index, i)``.
    """
    if nu < 2:
        raise DomainError(f"nu = {nu} repetitions; the standard deviation needs at least 2")
    p_eff = effective_prob(accepted_probability(params).p_d, noise)
    records = []
    for i in range(nu):
        key = (*index, i)
        records.append(sample_counts(p_eff, n_tot, stream(master_seed, *key), _tag(master_seed, key)))
    return summarize(records), records


def exact_summary(params: ModelParams, noise: NoiseParams, nu: int, n_tot: int) -> RepetitionSummary:
    """Noise-free counterpart of :func:`run_repetitions`.

    ``p_mean`` is the exact probability and ``sigma`` the binomial standard
    deviation of a single repetition's ratio.
    """
    p = effective_prob(accepted_probability(params).p_d, noise)
    sigma = math.sqrt(p * (1.0 - p) / n_tot)
    return RepetitionSummary(p, sigma, sigma / math.sqrt(nu), nu)
