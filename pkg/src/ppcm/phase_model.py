"""Closed-form physics of projective photon counting on a single photon.

A single photon in ``cos(theta_i/2)|U> + sin(theta_i/2)|D>`` picks up, in its
``D`` branch, a cross-phase kick that displaces a coherent probe of mean
photon number ``n`` by the phase ``phi = kappa * g``. The photon is then
projected onto ``cos(theta_f/2)|U> + e^{i(pi - epsilon)} sin(theta_f/2)|D>``.
Everything here follows from the coherent-state overlap
``<alpha|alpha e^{i phi}> = exp(-n(1 - cos phi)) e^{i n sin phi}``.

Phase convention: the fringe phase is ``n sin(phi) + epsilon`` so that for
``kappa = 2`` and small ``g`` the accepted probability is
``(1 - cos(2 g n + epsilon)) / 2``.

Large ``n`` is handled by reducing ``n * sin(phi)`` modulo 2*pi in extended
precision and by carrying the overlap magnitude and the Fisher information
in log space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import DomainError

_CLAMP_WINDOW = 4 * np.finfo(float).eps


@dataclass(frozen=True)
class ModelParams:
    """One PPCM configuration.

    ``g`` is not sign-checked here; negative couplings are useful for
    finite-difference work and are rejected by the run configuration instead.
    """

    theta_i: float = math.pi / 2
    theta_f: float = math.pi / 2
    epsilon: float = 0.1
    g: float = 0.0
    n: float = 0.0
    kappa: int = 2

    def __post_init__(self):
        for name in ("theta_i", "theta_f"):
            v = getattr(self, name)
            if not 0.0 <= v <= math.pi:
                raise DomainError(f"{name} = {v!r} not in [0, pi]")
        if not self.n >= 0.0 or not math.isfinite(self.n):
            raise DomainError(f"n = {self.n!r} must be finite and >= 0")
        if self.kappa not in (1, 2):
            raise DomainError(f"kappa = {self.kappa!r} not in {{1, 2}}")
        if not (math.isfinite(self.g) and math.isfinite(self.epsilon)):
            raise DomainError("g and epsilon must be finite")


class ProbabilityPair(NamedTuple):
    p_d: float
    p_r: float


@dataclass(frozen=True)
class CoherentOverlap:
    """``<alpha|alpha e^{i phi}>`` kept as log-magnitude and reduced phase."""

    log_magnitude: float
    phase: float

    @property
    def magnitude(self) -> float:
        return math.exp(self.log_magnitude)

    @property
    def value(self) -> complex:
        m = self.magnitude
        return complex(m * math.cos(self.phase), m * math.sin(self.phase))

    def __complex__(self):
        return self.value


class QuantumFisherJoint(NamedTuple):
    as_printed: float
    generator_variance: float


@dataclass(frozen=True)
class FisherBudget:
    f_p: float
    pd_qd: float
    pr_qr: float
    f_tot: float
    q_j: float
    provenance: dict = field(default_factory=dict)


class PPCMArrays(NamedTuple):
    """Vectorised closed-form outputs; all arrays share the broadcast shape."""

    p_d: np.ndarray
    log_envelope: np.ndarray  # log |<alpha|alpha e^{i phi}>|
    fringe_phase: np.ndarray  # n sin(phi) (mod 2 pi) + epsilon
    sensitivity: np.ndarray
    curvature: np.ndarray
    f_p: np.ndarray
    log_f_p: np.ndarray

    @property
    def p_r(self) -> np.ndarray:
        return 1.0 - self.p_d


def evaluate(theta_i, theta_f, epsilon, g, n, kappa=2) -> PPCMArrays:
    """Evaluate every closed-form quantity on broadcast array inputs."""
    arrs = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (theta_i, theta_f, epsilon, g, n, kappa)))
    shape = arrs[0].shape
    flat = [np.array(a.ravel(), dtype=float) for a in arrs]  # owned, writeable copies
    if not all(np.all(np.isfinite(a)) for a in flat):
        raise DomainError("non-finite model input")
    p_raw, p, log_env, psi, s, curv, f, log_f = _kernels.ppcm_kernel(*flat)
    bad = (p_raw < -_CLAMP_WINDOW) | (p_raw > 1.0 + _CLAMP_WINDOW)
    if np.any(bad):
        raise FloatingPointError(f"accepted probability left [0, 1] beyond round-off: {p_raw[bad][:3]}")
    return PPCMArrays(*(a.reshape(shape) for a in (p, log_env, psi, s, curv, f, log_f)))


def _point(p: ModelParams) -> PPCMArrays:
    return evaluate(p.theta_i, p.theta_f, p.epsilon, p.g, p.n, p.kappa)


def reduce_phase(n: float, x: float) -> float:
    """Return ``(n * x) mod 2*pi`` in ``[0, 2*pi)``.

    The product is formed exactly as a double-double and reduced against a
    triple-double 2*pi, so the result is good to ~1e-15 rad even when
    ``n * x`` is of order 1e16.
    """
    if not (math.isfinite(n) and math.isfinite(x)):
        raise DomainError("reduce_phase needs finite inputs")
    if n < 0:
        raise DomainError(f"n = {n!r} must be >= 0")
    out = _kernels.reduce_phase_kernel(np.array([float(n)]), np.array([float(x)]))
    return float(out[0])


def coherent_overlap(n: float, phi: float) -> CoherentOverlap:
    if n < 0:
        raise DomainError(f"n = {n!r} must be >= 0")
    h = math.sin(0.5 * phi)
    return CoherentOverlap(-2.0 * n * h * h, reduce_phase(n, math.sin(phi)))


def accepted_probability(p: ModelParams) -> ProbabilityPair:
    p_d = float(_point(p).p_d[()])
    return ProbabilityPair(p_d, 1.0 - p_d)


def accepted_probability_limit(g: float, n: float, epsilon: float) -> float:
    """Small-coupling fringe ``(1 - cos(2 g n + epsilon)) / 2``.

    Valid while ``2 n sin(g)**2 << 1``; it differs from
    ``accepted_probability`` (kappa=2, theta_i = theta_f = pi/2) by at most
    ``2 n sin(g)**2``.
    """
    return (1.0 - math.cos(2.0 * g * n + epsilon)) / 2.0


def sensitivity(p: ModelParams) -> float:
    """Analytic derivative of the accepted probability with respect to ``g``."""
    return float(_point(p).sensitivity[()])


def fisher_projective(p: ModelParams) -> float:
    """Classical Fisher information of the accepted/rejected outcome.

    Computed as ``exp(log F)`` so it underflows cleanly to 0 once the overlap
    envelope dies; at the measure-zero points where ``P_d`` is exactly 0 or 1
    the 0/0 ratio is replaced by its limit ``2 |d^2 P_d / dg^2|``.
    """
    return float(_point(p).f_p[()])


def log_fisher_projective(p: ModelParams) -> float:
    return float(_point(p).log_f_p[()])


def fisher_from_prob(p_d: float, dp_dg: float) -> float:
    if p_d <= 0.0:
        raise DomainError(f"p_d = {p_d!r} at or below the lower bound 0")
    if p_d >= 1.0:
        raise DomainError(f"p_d = {p_d!r} at or above the upper bound 1")
    return dp_dg * dp_dg / p_d + dp_dg * dp_dg / (1.0 - p_d)


def quantum_fisher_joint(theta_i: float, n: float, kappa: int = 2) -> QuantumFisherJoint:
    """Quantum Fisher information of the joint photon-probe state.

    ``as_printed`` is ``n^2 sin^2(theta_i) + n sin^2(theta_i/2)``;
    ``generator_variance`` is ``4 Var(kappa * n_hat (x) |D><D|)``, the exact
    pure-state value. They differ in the term linear in ``n``.
    """
    s2 = math.sin(theta_i) ** 2
    h2 = math.sin(theta_i / 2) ** 2
    return QuantumFisherJoint(
        n * n * s2 + n * h2,
        kappa * kappa * (n * n * s2 + 4.0 * n * h2),
    )


def fisher_budget_small_g(
    n: float,
    epsilon: float,
    kappa: int = 2,
    calibrated: bool = False,
    reference_n: float = 16.0,
) -> FisherBudget:
    """Fisher-information split at ``theta_i = theta_f = pi/2``, ``g -> 0``.

    With ``calibrated=False`` the textbook limits are returned:
    ``F_p = kappa^2 n^2``, ``P_d Q_d = (1 - eps^2/4) n`` and
    ``P_r Q_r = eps^2 n / 4`` with ``Q_j`` in its printed form.

    With ``calibrated=True`` the two conditional terms are taken from a
    Fock-space run of the brute-force oracle at ``min(n, reference_n)`` and
    scaled linearly in ``n``; ``Q_j`` is then the generator-variance form.
    """
    qj = quantum_fisher_joint(math.pi / 2, n, kappa)
    f_p = float(kappa * kappa) * n * n
    if not calibrated:
        pd_qd = (1.0 - epsilon * epsilon / 4.0) * n
        pr_qr = epsilon * epsilon * n / 4.0
        q_j = qj.as_printed
        tag = "printed"
    else:
        from .fock_oracle import conditional_qfi

        n_ref = min(float(n), reference_n)
        if n_ref <= 0.0:
            pd_qd = pr_qr = 0.0
        else:
            q_d, q_r, p_d = conditional_qfi(
                theta_i=math.pi / 2, n=n_ref, kappa=kappa, theta_f=math.pi / 2, epsilon=epsilon, g=1e-6
            )
            scale = n / n_ref
            pd_qd = p_d * q_d * scale
            pr_qr = (1.0 - p_d) * q_r * scale
        q_j = qj.generator_variance
        tag = "oracle-calibrated"
    prov = {"f_p": "closed-form", "pd_qd": tag, "pr_qr": tag, "q_j": tag}
    return FisherBudget(f_p, pd_qd, pr_qr, f_p + pd_qd + pr_qr, q_j, prov)


def cramer_rao(f_tot: float, nu: int = 1) -> float:
    if not f_tot > 0.0:
        raise DomainError(f"f_tot = {f_tot!r} must be > 0")
    if nu < 1 or int(nu) != nu:
        raise DomainError(f"nu = {nu!r} must be an integer >= 1")
    return 1.0 / math.sqrt(nu * f_tot)
