"""Decision and information quality of an outcome table.

Logs are base 2 and ``0 * log 0`` is taken as 0 everywhere.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .scheme import OutcomeTable

BISECT_TOL = 1e-10
BISECT_MAX_ITER = 200
INFO_TOL = 1e-12


def binary_entropy(p):
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(p * np.log2(p) + (1 - p) * np.log2(1 - p))
    return np.where((p <= 0) | (p >= 1), 0.0, h)


def _xlogx(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, x * np.log2(np.where(x > 0, x, 1.0)), 0.0)


def mutual_information_rows(rows, p) -> np.ndarray:
    """Mutual information in bits for ``rows`` of shape ``(..., 2, n)``.

    Row 0 is the vacuum-input distribution, row 1 the photon-input one;
    ``p`` is the photon prior and broadcasts against the batch shape.
    """
    rows = np.asarray(rows, dtype=float)
    p = np.asarray(p, dtype=float)
    prior = np.stack([1.0 - p, p], axis=-1)[..., None]
    joint = rows * prior
    marginal = joint.sum(axis=-2, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(joint > 0, rows / np.where(marginal > 0, marginal, 1.0), 1.0)
        terms = np.where(joint > 0, joint * np.log2(ratio), 0.0)
    return np.maximum(terms.sum(axis=(-2, -1)), 0.0)


def mutual_information(table: OutcomeTable, p: float) -> float:
    return float(mutual_information_rows(table.rows, p))


def base_rows(eta, xi=0.0) -> np.ndarray:
    """Outcome rows of a bare detector, shape ``(..., 2, 2)``."""
    eta = np.asarray(eta, dtype=float)
    dark = eta * np.asarray(xi, dtype=float)
    eta, dark = np.broadcast_arrays(eta, dark)
    return np.stack([np.stack([1 - dark, dark], -1), np.stack([1 - eta, eta], -1)], axis=-2)


def base_info(eta, p):
    """Information carried by a noiseless bare detector of efficiency ``eta``."""
    out = mutual_information_rows(base_rows(eta), p)
    return float(out) if out.ndim == 0 else out


def invert_base_info(i_m, p) -> np.ndarray:
    """Vectorized bisection for the efficiency that reproduces ``i_m``.

    ``i_m`` and ``p`` broadcast together; ``p`` must lie strictly in (0, 1).
    """
    i_m, p = np.broadcast_arrays(np.asarray(i_m, dtype=float), np.asarray(p, dtype=float))
    lo = np.zeros(i_m.shape)
    hi = np.ones(i_m.shape)
    for _ in range(BISECT_MAX_ITER):
        if np.all(hi - lo <= BISECT_TOL):
            break
        mid = 0.5 * (lo + hi)
        below = mutual_information_rows(base_rows(mid), p) < i_m
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    eta = 0.5 * (lo + hi)
    h = binary_entropy(p)
    eta = np.where(i_m <= 0, 0.0, eta)
    return np.where(np.abs(i_m - h) <= INFO_TOL, 1.0, eta)


def effective_efficiency(i_m: float, p: float) -> Optional[float]:
    """Efficiency of a noiseless bare detector carrying ``i_m`` bits.

    Returns None when the prior is certain, where the inversion is undefined.
    """
    if p <= 0.0 or p >= 1.0:
        return None
    h = float(binary_entropy(p))
    if i_m > h + INFO_TOL:
        raise ValueError(f"I_m={i_m!r} exceeds the source entropy {h!r}")
    if i_m < -INFO_TOL:
        raise ValueError(f"I_m={i_m!r} is negative")
    return float(invert_base_info(i_m, p))


@dataclass(frozen=True)
class InfoResult:
    i_m: float
    eta_e: Optional[float]


def information(table: OutcomeTable, p: float) -> InfoResult:
    i_m = mutual_information(table, p)
    return InfoResult(i_m, effective_efficiency(i_m, p))


def eta_e_closed_form(eps: float, eta: float) -> float:
    return eps * (1.0 - (1.0 - eta) ** 2)


def eta_e_recursion(eps, eta, N: int):
    """Effective efficiency after N noiseless layers (vacuum on failure, no dark counts)."""
    out = eta
    for _ in range(N):
        out = eps * (1.0 - (1.0 - out) ** 2)
    return out


def eta_e_limit(eps: float) -> float:
    """Fixed point reached by infinitely many layers."""
    return max(2.0 - 1.0 / eps, 0.0) if eps > 0 else 0.0


# -- maximum likelihood --------------------------------------------------------


@dataclass(frozen=True)
class MLResult:
    estimator: np.ndarray
    q: float
    degenerate: bool

    def guess(self, outcome: int) -> int:
        return int(self.estimator[outcome])


def ml_success_rows(rows, p) -> np.ndarray:
    rows = np.asarray(rows, dtype=float)
    p = np.asarray(p, dtype=float)
    joint_vac = (1.0 - p)[..., None] * rows[..., 0, :]
    joint_pho = p[..., None] * rows[..., 1, :]
    return np.maximum(joint_vac, joint_pho).sum(axis=-1)


def ml_estimate(table: OutcomeTable, p: float) -> MLResult:
    """Per-outcome posterior argmax; exact ties go to vacuum.

    The degenerate flag looks only at outcomes that can occur.
    """
    joint_vac = (1.0 - p) * table.p_given_vacuum
    joint_pho = p * table.p_given_photon
    est = (joint_pho > joint_vac).astype(np.int8)
    est.setflags(write=False)
    q = float(np.maximum(joint_vac, joint_pho).sum())
    seen = est[(joint_vac + joint_pho) > 0]
    return MLResult(est, q, bool(np.all(seen == seen[0])))


def q_detector_only(eta, xi, p):
    """Success of 'click means photon' with a bare detector."""
    return 1 - p + eta * (p - xi * (1 - p))


def q_single_copier(eps, eta, xi, p):
    """Success of 'any click means photon' behind one noisy copier (vacuum on failure)."""
    ex = eta * xi
    return 1 - p - ex * (1 - 2 * p) * (2 - ex) + eps * eta * p * (2 - eta - xi * (2 - ex))


def detector_only_useful(eta: float, xi: float, p: float) -> bool:
    """True when a bare detector's ML guess follows the click."""
    click_means_photon = p * eta > (1 - p) * eta * xi
    silence_means_vacuum = p * (1 - eta) <= (1 - p) * (1 - eta * xi)
    return bool(click_means_photon and silence_means_vacuum)


class Usefulness(str, enum.Enum):
    COUNT_MEANS_PHOTON = "useful-count-means-photon"
    COUNT_MEANS_VACUUM_LIKE = "useful-count-means-vacuum-like"
    DEGENERATE = "degenerate"


def ml_usefulness(eps: float, eta: float, xi: float, p: float) -> Usefulness:
    """Classify the single-copier ML estimator (vacuum on failure).

    Useful means two clicks point to a photon and silence points to vacuum;
    the split then depends on how a single click is read.
    """
    ex = eta * xi
    # two clicks -> photon; eta cancels once it is nonzero
    both = eta > 0 and p * (eps * (1 - xi**2) + 2 * xi**2) > xi**2
    # silence -> vacuum (ties resolve to vacuum)
    denom = 2 * (1 - ex) ** 2 - eps * eta * (2 - eta * (1 + xi)) * (1 - xi)
    none = p * denom <= (1 - ex) ** 2
    if not (both and none):
        return Usefulness.DEGENERATE
    one_photon = eps * eta * (1 - eta) + (1 - eps) * ex * (1 - ex)
    one_vacuum = ex * (1 - ex)
    if p * one_photon > (1 - p) * one_vacuum:
        return Usefulness.COUNT_MEANS_PHOTON
    return Usefulness.COUNT_MEANS_VACUUM_LIKE


def ml_gain_threshold(eta: float, xi: float, p: float) -> float:
    """Copier efficiency above which one copier beats the bare detector."""
    num = xi * (1 - eta * xi) * (2 * p - 1) - p * (1 - xi)
    den = p * (1 - xi) * (eta * (1 + xi) - 2)
    return num / den


def ml_gain_condition(eps: float, eta: float, xi: float, p: float) -> bool:
    """True iff the single-copier success probability beats the bare detector's.

    Cross-multiplied form of the threshold, so p = 0 and eta = 0 are safe.
    """
    if eta <= 0 or p <= 0:
        return False
    num = p * (1 - xi) - xi * (1 - eta * xi) * (2 * p - 1)
    den = p * (1 - xi) * (2 - eta * (1 + xi))
    return eps * den > num


def ml_gain_threshold_weak_dark(eta: float) -> float:
    """Threshold when dark counts are much rarer than photons."""
    return 1.0 / (2.0 - eta)


# -- weak detectors -------------------------------------------------------------


def weak_detector_info(eta: float, p: float) -> float:
    """Leading-order information of a bare detector as eta -> 0."""
    if p <= 0:
        return 0.0
    return -eta * p * math.log2(p)


def ab_weak_info(eta, p, A, B):
    """Leading-order information behind a copier with parameters (A, B)."""
    mix = p * A + (1 - p) * B
    out = eta * (p * _xlogx(A) + (1 - p) * _xlogx(B) - _xlogx(mix))
    return float(out) if np.ndim(out) == 0 else out
