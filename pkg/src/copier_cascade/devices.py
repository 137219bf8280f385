"""Detector and copier models.

Copiers are single-input, two-output maps on populations.  Each one is
represented by a 4x2 column-stochastic transfer matrix: the column is the
input occupation (0 = vacuum, 1 = photon) and the row is the two-mode output
index ``original + 2 * copy``.  The dummy input that becomes the copy is
always vacuum.

Coherence terms of a general copier never reach the populations measured by
the detectors, so they are not represented.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .popstate import PopulationVector, apply_per_mode

VACUUM_PAIR = 0
PHOTON_PAIR = 3


def _check_range(name: str, value: float, lo: float, hi: float, *, open_hi: bool = False) -> float:
    value = float(value)
    bad = not (lo <= value < hi) if open_hi else not (lo <= value <= hi)
    if bad or np.isnan(value):
        bracket = ")" if open_hi else "]"
        raise ValueError(f"{name}={value!r} outside [{lo}, {hi}{bracket}")
    return value


@dataclass(frozen=True)
class DetectorModel:
    """Photodetector with quantum efficiency ``eta``; ``eta * xi`` is the dark-count probability."""

    eta: float
    xi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "eta", _check_range("eta", self.eta, 0.0, 1.0))
        object.__setattr__(self, "xi", _check_range("xi", self.xi, 0.0, 1.0, open_hi=True))

    @property
    def matrix(self) -> np.ndarray:
        """2x2 matrix ``[outcome, occupation]``; outcome 1 is a click."""
        return detector_matrix(self.eta, self.xi)


@dataclass(frozen=True)
class ClickProbabilities:
    p_click_given_photon: float
    p_click_given_vacuum: float

    @property
    def p_noclick_given_photon(self) -> float:
        return 1.0 - self.p_click_given_photon

    @property
    def p_noclick_given_vacuum(self) -> float:
        return 1.0 - self.p_click_given_vacuum


def click_probs(d: DetectorModel) -> ClickProbabilities:
    return ClickProbabilities(d.eta, d.eta * d.xi)


def detector_matrix(eta, xi) -> np.ndarray:
    """Vectorized detector POVM populations, shape ``(..., 2, 2)``."""
    eta = np.asarray(eta, dtype=float)
    xi = np.asarray(xi, dtype=float)
    dark = eta * xi
    eta, dark = np.broadcast_arrays(eta, dark)
    return np.stack(
        [np.stack([1.0 - dark, 1.0 - eta], -1), np.stack([dark, eta], -1)],
        axis=-2,
    )


def measure_all(v: PopulationVector, d: DetectorModel) -> np.ndarray:
    """Joint click distribution of one detector per mode.

    Bit b of the returned index is the click of the detector on mode b.
    """
    return apply_per_mode(v.probs, d.matrix, v.modes)


# -- copiers -----------------------------------------------------------------


@dataclass(frozen=True)
class NoisyWZ:
    """Wootters-Zurek copier that works with probability ``eps``.

    On failure it emits a noise pair set by ``mu``: vacuum for -1, uniformly
    random for 0, two photons for +1, and linear mixtures in between.
    """

    eps: float
    mu: float = -1.0

    def __post_init__(self):
        object.__setattr__(self, "eps", _check_range("eps", self.eps, 0.0, 1.0))
        object.__setattr__(self, "mu", _check_range("mu", self.mu, -1.0, 1.0))

    @property
    def transfer(self) -> np.ndarray:
        return noisy_wz_matrix(self.eps, self.mu)


@dataclass(frozen=True)
class GeneralAB:
    """Population part of a copier whose two copies have identical reduced states.

    A photon goes to two photons with weight ``a1``, to two vacua with ``a2``
    and to one photon split evenly over the two copies otherwise.  ``b1``,
    ``b2`` play the same role for a vacuum input.
    """

    a1: float
    a2: float
    b1: float
    b2: float

    def __post_init__(self):
        for name in ("a1", "a2", "b1", "b2"):
            object.__setattr__(self, name, _check_range(name, getattr(self, name), 0.0, 1.0))
        if self.a1 + self.a2 > 1.0 + 1e-12:
            raise ValueError(f"a1+a2={self.a1 + self.a2!r} exceeds 1")
        if self.b1 + self.b2 > 1.0 + 1e-12:
            raise ValueError(f"b1+b2={self.b1 + self.b2!r} exceeds 1")

    @property
    def transfer(self) -> np.ndarray:
        return general_ab_matrix(self.a1, self.a2, self.b1, self.b2)

    @classmethod
    def from_ab(cls, A: float, B: float) -> "GeneralAB":
        """Representative copier for an (A, B) point.

        Chooses the member with no vacuum-to-vacuum-pair (or photon-pair)
        weight on the side it is not needed, which places the Wootters-Zurek
        copier at (2, 0) and the universal cloner's populations at (5/3, 1/3).
        """
        A = _check_range("A", A, 0.0, 2.0)
        B = _check_range("B", B, 0.0, 2.0)
        return cls(*(float(x) for x in ab_populations(A, B)))

    @classmethod
    def from_noisy_wz(cls, c: NoisyWZ) -> "GeneralAB":
        t = c.transfer
        return cls(t[PHOTON_PAIR, 1], t[VACUUM_PAIR, 1], t[PHOTON_PAIR, 0], t[VACUUM_PAIR, 0])


@dataclass(frozen=True)
class Classical:
    """Measure-and-prepare copier built from the same imperfect detector.

    A click prepares two photons, no click prepares two vacua.
    """

    detector: DetectorModel

    @property
    def transfer(self) -> np.ndarray:
        return classical_matrix(self.detector.eta, self.detector.xi)


CopierModel = Union[NoisyWZ, GeneralAB, Classical]

WOOTTERS_ZUREK = GeneralAB(1.0, 0.0, 0.0, 1.0)
UQCM = GeneralAB(2.0 / 3.0, 0.0, 0.0, 2.0 / 3.0)


def noise_populations(mu) -> np.ndarray:
    """Failure-output populations, shape ``(..., 4)``; mu == 0 uses the vacuum branch."""
    mu = np.asarray(mu, dtype=float)
    w = np.abs(mu)
    base = (1.0 - w) / 4.0
    out = np.stack([base, base, base, base], axis=-1)
    out[..., VACUUM_PAIR] += np.where(mu <= 0, w, 0.0)
    out[..., PHOTON_PAIR] += np.where(mu > 0, w, 0.0)
    return out


def noise_state(mu: float) -> PopulationVector:
    _check_range("mu", mu, -1.0, 1.0)
    return PopulationVector(2, noise_populations(mu))


def noisy_wz_matrix(eps, mu) -> np.ndarray:
    eps = np.asarray(eps, dtype=float)
    noise = noise_populations(mu)
    eps, noise = np.broadcast_arrays(eps[..., None], noise)
    eps = eps[..., 0]
    fail = ((1.0 - eps)[..., None] * noise)
    vac = fail.copy()
    vac[..., VACUUM_PAIR] += eps
    pho = fail.copy()
    pho[..., PHOTON_PAIR] += eps
    return np.stack([vac, pho], axis=-1)


def general_ab_matrix(a1, a2, b1, b2) -> np.ndarray:
    a1, a2, b1, b2 = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (a1, a2, b1, b2)))

    def column(pair1, pair0):
        split = (1.0 - pair1 - pair0) / 2.0
        return np.stack([pair0, split, split, pair1], axis=-1)

    return np.stack([column(b1, b2), column(a1, a2)], axis=-1)


def ab_populations(A, B) -> tuple:
    """(a1, a2, b1, b2) of the representative copier at (A, B); vectorized."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    return np.maximum(A - 1, 0), np.maximum(1 - A, 0), np.maximum(B - 1, 0), np.maximum(1 - B, 0)


def classical_matrix(eta, xi) -> np.ndarray:
    d = detector_matrix(eta, xi)
    zero = np.zeros_like(d[..., 0, :])
    # rows: no click -> |00>, click -> |11>
    return np.stack([d[..., 0, :], zero, zero, d[..., 1, :]], axis=-2)


def apply_copier(c: CopierModel, v: PopulationVector) -> PopulationVector:
    if v.modes != 1:
        raise ValueError(f"copier input must be a single mode, got {v.modes}")
    return PopulationVector(2, c.transfer @ v.probs)


def apply_noisy_wz(c: NoisyWZ, v: PopulationVector) -> PopulationVector:
    return apply_copier(c, v)


def apply_general_ab(c: GeneralAB, v: PopulationVector) -> PopulationVector:
    return apply_copier(c, v)


def ab_parameters(c: GeneralAB) -> tuple[float, float]:
    return 1.0 + c.a1 - c.a2, 1.0 + c.b1 - c.b2


def ab_from_eps_mu(eps: float, mu: float) -> tuple[float, float]:
    _check_range("eps", eps, 0.0, 1.0)
    _check_range("mu", mu, -1.0, 1.0)
    return 1.0 + mu + eps * (1.0 - mu), 1.0 + mu - eps * (1.0 + mu)


def classical_copier_count_prob(eta: float) -> float:
    """Chance that either copy detector clicks for a photon sent through a classical copier."""
    eta = _check_range("eta", eta, 0.0, 1.0)
    return eta * eta * (2.0 - eta)
