"""Brute-force Fock-space oracle for the joint photon-probe state.

The probe is written out in a truncated photon-number basis and every
quantity is obtained by plain linear algebra on amplitude vectors. Nothing
here calls the closed forms in :mod:`ppcm.phase_model`, so the two can be
checked against each other. Intended for ``n <= 400``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import gammaln

from .errors import ConditioningError, DomainError, NumericalInstabilityError, TruncationError

MAX_ORACLE_N = 400.0
LEAKAGE_TOL = 1e-12
DEFAULT_STEP = 1e-5
RICHARDSON_RTOL = 1e-4


def default_cutoff(n: float) -> int:
    return int(math.ceil(n + 10.0 * math.sqrt(n) + 25.0))


def poisson_weights(n: float, cutoff: int) -> np.ndarray:
    """Poisson probabilities ``e^{-n} n^m / m!`` for ``m < cutoff`` via log-gamma."""
    m = np.arange(cutoff, dtype=float)
    if n == 0.0:
        w = np.zeros(cutoff)
        w[0] = 1.0
        return w
    return np.exp(-n + m * math.log(n) - gammaln(m + 1.0))


@dataclass(frozen=True)
class FockJointState:
    cutoff: int
    amp_u: np.ndarray
    amp_d: np.ndarray
    leakage: float = 0.0

    def vector(self) -> np.ndarray:
        return np.concatenate([self.amp_u, self.amp_d])

    def norm2(self) -> float:
        return float(np.vdot(self.amp_u, self.amp_u).real + np.vdot(self.amp_d, self.amp_d).real)


class Projection(NamedTuple):
    p_d: float
    accepted_meter: np.ndarray
    rejected_meter: np.ndarray


def build_joint_state(
    theta_i: float, n: float, g: float, kappa: int = 2, cutoff: int | None = None
) -> FockJointState:
    if not 0.0 <= n <= MAX_ORACLE_N:
        raise DomainError(f"oracle needs 0 <= n <= {MAX_ORACLE_N:g}, got {n!r}")
    if cutoff is None:
        cutoff = default_cutoff(n)
    w = poisson_weights(n, cutoff)
    kept = float(math.fsum(w))
    leakage = max(0.0, 1.0 - kept)
    if leakage > LEAKAGE_TOL:
        need = default_cutoff(n)
        raise TruncationError(
            f"cutoff {cutoff} leaks {leakage:.3e} of the probe norm at n={n:g}; use cutoff >= {need}", need
        )
    base = np.sqrt(w / kept).astype(complex)
    m = np.arange(cutoff)
    amp_u = math.cos(theta_i / 2) * base
    amp_d = math.sin(theta_i / 2) * base * np.exp(1j * kappa * g * m)
    return FockJointState(cutoff, amp_u, amp_d, leakage)


def project(state: FockJointState, theta_f: float, epsilon: float) -> Projection:
    """Project the photon on ``cos(theta_f/2)|U> + e^{i(pi-eps)} sin(theta_f/2)|D>``.

    The meter vectors are left unnormalised; their squared norms are the
    outcome probabilities.
    """
    c, s = math.cos(theta_f / 2), math.sin(theta_f / 2)
    ph = np.exp(-1j * (math.pi - epsilon))
    accepted = c * state.amp_u + ph * s * state.amp_d
    rejected = s * state.amp_u - ph * c * state.amp_d
    p_d = float(np.vdot(accepted, accepted).real)
    return Projection(p_d, accepted, rejected)


def _pure_qfi(minus: np.ndarray, centre: np.ndarray, plus: np.ndarray, step: float) -> float:
    d = (plus - minus) / (2.0 * step)
    val = 4.0 * (np.vdot(d, d).real - abs(np.vdot(centre, d)) ** 2)
    return max(float(val), 0.0)


def _checked_qfi(vec_fn: Callable[[float], np.ndarray], g: float, step: float) -> float:
    centre = vec_fn(g)
    coarse = _pure_qfi(vec_fn(g - 2 * step), centre, vec_fn(g + 2 * step), 2 * step)
    fine = _pure_qfi(vec_fn(g - step), centre, vec_fn(g + step), step)
    if abs(coarse - fine) > RICHARDSON_RTOL * max(abs(coarse), abs(fine)) + 1e-12:
        raise NumericalInstabilityError(
            f"QFI not converged at step {step:g}: {coarse!r} (2h) vs {fine!r} (h)", coarse, fine
        )
    return fine


def qfi_pure(state_fn: Callable[[float], FockJointState], g: float, step: float = DEFAULT_STEP) -> float:
    """Pure-state QFI ``4(<dpsi|dpsi> - |<psi|dpsi>|^2)`` by central differences.

    The estimate at ``step`` is checked against the one at ``2*step``.
    """
    return _checked_qfi(lambda x: state_fn(x).vector(), g, step)


def conditional_qfi(
    theta_i: float,
    n: float,
    kappa: int,
    theta_f: float,
    epsilon: float,
    g: float,
    step: float = DEFAULT_STEP,
    cutoff: int | None = None,
    min_prob: float = 1e-10,
) -> tuple[float, float, float]:
    """QFI of the probe conditioned on each projection outcome.

    Returns ``(Q_d, Q_r, P_d)``.
    """

    def meters(x):
        return project(build_joint_state(theta_i, n, x, kappa, cutoff), theta_f, epsilon)

    centre = meters(g)
    p_d = centre.p_d
    p_r = float(np.vdot(centre.rejected_meter, centre.rejected_meter).real)
    if p_d < min_prob or p_r < min_prob:
        raise ConditioningError(f"outcome probabilities ({p_d:.3e}, {p_r:.3e}) below {min_prob:g}")

    def normed(x, which):
        v = meters(x)[which]
        return v / math.sqrt(np.vdot(v, v).real)

    q_d = _checked_qfi(lambda x: normed(x, 1), g, step)
    q_r = _checked_qfi(lambda x: normed(x, 2), g, step)
    return q_d, q_r, p_d


def binomial_fisher(theta_i, theta_f, epsilon, g, n, kappa=2, step=1e-3) -> float:
    """Fisher information of the oracle's accepted/rejected outcome.

    ``dP_d/dg`` comes from a five-point stencil on oracle probabilities.
    """

    def pd(x):
        return project(build_joint_state(theta_i, n, x, kappa), theta_f, epsilon).p_d

    d = (-pd(g + 2 * step) + 8 * pd(g + step) - 8 * pd(g - step) + pd(g - 2 * step)) / (12 * step)
    p = pd(g)
    return d * d / (p * (1.0 - p))


ORACLE_GRID = {
    "n": (1.0, 4.0, 9.0, 16.0),
    "g": (0.0, 0.05, 0.1, 0.2, 0.3),
    "theta": (math.pi / 4, math.pi / 2, 3 * math.pi / 4),
    "epsilon": (0.0, 0.1, 1.0),
    "kappa": (1, 2),
}


def oracle_check(tol: float = 1e-8, grid: dict | None = None) -> list[dict]:
    """Compare closed-form and oracle accepted probabilities over a grid.

    Returns one row per grid node with the columns of the ``oracle_check``
    table.
    """
    from .phase_model import ModelParams, accepted_probability

    grid = grid or ORACLE_GRID
    rows = []
    for n in grid["n"]:
        for g in grid["g"]:
            for ti in grid["theta"]:
                for tf in grid["theta"]:
                    for eps in grid["epsilon"]:
                        for kappa in grid["kappa"]:
                            closed = accepted_probability(ModelParams(ti, tf, eps, g, n, kappa)).p_d
                            oracle = project(build_joint_state(ti, n, g, kappa), tf, eps).p_d
                            err = abs(closed - oracle)
                            rows.append(
                                dict(n=n, g=g, theta_i=ti, theta_f=tf, epsilon=eps, kappa=kappa,
                                     p_closed=closed, p_oracle=oracle, abs_err=err, **{"pass": err <= tol})
                            )
    return rows


def qfi_adjudication(thetas=(math.pi / 4, math.pi / 2, 3 * math.pi / 4), ns=(25.0, 100.0), kappa: int = 1):
    """Oracle QFI of the joint state next to both closed-form expressions.

    ``subleading_ratio`` divides the oracle's term linear in ``n`` by the
    printed one; the exact value is 4.
    """
    from .phase_model import quantum_fisher_joint

    rows = []
    for n in ns:
        for th in thetas:
            q = qfi_pure(lambda x: build_joint_state(th, n, x, kappa), 0.0)
            ref = quantum_fisher_joint(th, n, kappa)
            lead = kappa * kappa * n * n * math.sin(th) ** 2
            printed_sub = ref.as_printed - n * n * math.sin(th) ** 2
            rows.append(
                dict(theta_i=th, n=n, kappa=kappa, qfi_oracle=q,
                     generator_variance=ref.generator_variance, as_printed=ref.as_printed,
                     rel_err_generator=abs(q - ref.generator_variance) / ref.generator_variance,
                     subleading_ratio=(q - lead) / (kappa * kappa * printed_sub))
            )
    return rows


def fisher_chain_check(rtol: float = 1e-4, grid: dict | None = None) -> list[dict]:
    """Binomial FI from oracle probabilities against the closed-form ``F_p``.

    Couplings below 1e-4 are skipped; there the finite differences cannot
    resolve the slope.
    """
    from .phase_model import ModelParams, fisher_projective

    grid = grid or ORACLE_GRID
    rows = []
    for n in grid["n"]:
        for g in grid["g"]:
            if g < 1e-4:
                continue
            for ti in grid["theta"]:
                for tf in grid["theta"]:
                    for eps in grid["epsilon"]:
                        for kappa in grid["kappa"]:
                            closed = fisher_projective(ModelParams(ti, tf, eps, g, n, kappa))
                            oracle = binomial_fisher(ti, tf, eps, g, n, kappa)
                            rel = abs(oracle - closed) / max(abs(closed), 1e-300)
                            rows.append(
                                dict(n=n, g=g, theta_i=ti, theta_f=tf, epsilon=eps, kappa=kappa,
                                     f_closed=closed, f_oracle=oracle, rel_err=rel, **{"pass": rel <= rtol})
                            )
    return rows
