"""N-layer copier cascades and their exact detector statistics.

Every copier output is fed to a fresh copier at the next layer, so N layers
end on 2**N detectors.  Detector d sits on the leaf whose root-to-leaf branch
choices (original = 0, copy = 1), first layer first, spell d in binary with
the first layer as the most significant bit.  Outcome index bit d is the
click of detector d.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .devices import (
    Classical,
    CopierModel,
    DetectorModel,
    GeneralAB,
    NoisyWZ,
    noise_populations,
)
from .popstate import DensityMatrix4, apply_per_mode, check_density_matrix

MAX_EXACT_LAYERS = 4
VACUUM, PHOTON = 0, 1


@dataclass(frozen=True)
class SchemeConfig:
    layers: int
    copier: CopierModel
    detector: DetectorModel
    prior: float = 0.5

    def __post_init__(self):
        if int(self.layers) != self.layers or self.layers < 0:
            raise ValueError(f"N={self.layers!r} must be a nonnegative integer")
        if not 0.0 <= self.prior <= 1.0:
            raise ValueError(f"p={self.prior!r} outside [0, 1]")
        object.__setattr__(self, "layers", int(self.layers))


@dataclass(frozen=True)
class OutcomeTable:
    layers: int
    p_given_photon: np.ndarray
    p_given_vacuum: np.ndarray

    def __post_init__(self):
        n = 2 ** (2**self.layers)
        for name in ("p_given_photon", "p_given_vacuum"):
            row = np.array(getattr(self, name), dtype=float, copy=True)
            if row.shape != (n,):
                raise ValueError(f"{name} must have {n} entries for N={self.layers}")
            if np.any(row < -1e-12) or abs(row.sum() - 1.0) > 1e-9:
                raise ValueError(f"{name} is not a probability distribution")
            row.setflags(write=False)
            object.__setattr__(self, name, row)

    @property
    def n_detectors(self) -> int:
        return 2**self.layers

    @property
    def rows(self) -> np.ndarray:
        """Shape (2, n_outcomes): row 0 vacuum input, row 1 photon input."""
        return np.stack([self.p_given_vacuum, self.p_given_photon])

    def to_dict(self) -> dict:
        return {
            "layers": self.layers,
            "p_given_photon": self.p_given_photon.tolist(),
            "p_given_vacuum": self.p_given_vacuum.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "OutcomeTable":
        return cls(int(d["layers"]), np.asarray(d["p_given_photon"]), np.asarray(d["p_given_vacuum"]))

    @classmethod
    def from_json(cls, text: str) -> "OutcomeTable":
        return cls.from_dict(json.loads(text))


def outcome_label(index: int, n_detectors: int) -> str:
    """'+'/'-' string with detector 0 first, e.g. index 1 of 2 detectors -> '+-'."""
    return "".join("+" if (index >> d) & 1 else "-" for d in range(n_detectors))


def cascade_rows(transfer, det_matrix, layers: int) -> np.ndarray:
    """Outcome distributions for both inputs, vectorized over parameter batches.

    ``transfer`` is ``(..., 4, 2)`` and ``det_matrix`` is ``(..., 2, 2)``;
    the result is ``(..., 2, 2**(2**layers))`` with the input on axis -2.
    """
    transfer = np.asarray(transfer, dtype=float)
    det_matrix = np.asarray(det_matrix, dtype=float)
    batch = np.broadcast_shapes(transfer.shape[:-2], det_matrix.shape[:-2])
    state = np.broadcast_to(np.eye(2), batch + (2, 2))
    t = transfer[..., None, :, :]
    d = det_matrix[..., None, :, :]
    modes = 1
    for _ in range(layers):
        state = apply_per_mode(state, t, modes)
        modes *= 2
    return apply_per_mode(state, d, modes)


def build_outcome_table(cfg: SchemeConfig) -> OutcomeTable:
    if cfg.layers > MAX_EXACT_LAYERS:
        raise ValueError(f"N={cfg.layers} exceeds the exact-enumeration limit of {MAX_EXACT_LAYERS}")
    rows = cascade_rows(cfg.copier.transfer, cfg.detector.matrix, cfg.layers)
    return OutcomeTable(cfg.layers, rows[PHOTON], rows[VACUUM])


def simple_scheme_probs(eta: float, N: int, p: float) -> tuple[float, float]:
    """Perfect copiers and noiseless detectors: (P(count | photon), P(no photon | no count))."""
    miss = (1.0 - eta) ** (2**N)
    return 1.0 - miss, (1.0 - p) / (1.0 - p + p * miss)


# -- Monte Carlo ---------------------------------------------------------------

RNG_ALGORITHM = "numpy PCG64"


@dataclass(frozen=True)
class SampleRun:
    """Per-trial record of a simulated cascade."""

    layers: int
    inputs: np.ndarray
    outcomes: np.ndarray
    counts: np.ndarray = field(repr=False)

    @property
    def trials(self) -> int:
        return len(self.inputs)

    def frequencies(self, input_state: int) -> np.ndarray:
        n = self.counts[input_state].sum()
        if n == 0:
            raise ValueError(f"no trial drew input {input_state}")
        return self.counts[input_state] / n

    @property
    def table(self) -> OutcomeTable:
        return OutcomeTable(self.layers, self.frequencies(PHOTON), self.frequencies(VACUUM))


def _copy_step(c: CopierModel, occ: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    n = len(occ)
    if isinstance(c, NoisyWZ):
        ok = rng.random(n) < c.eps
        noise = rng.choice(4, size=n, p=noise_populations(c.mu))
        pair = np.where(ok, occ * 3, noise)
    else:
        cdf = np.cumsum(c.transfer, axis=0)
        u = rng.random(n)
        pair = (u[:, None] >= cdf[:, occ].T[:, :3]).sum(axis=1)
    return pair & 1, pair >> 1


def sample_outcomes(cfg: SchemeConfig, trials: int, seed: int = 0) -> SampleRun:
    """Simulate the physical process trial by trial.

    Each trial draws the input, runs every copier (branching on success or
    failure), then draws every detector click.  Deterministic for a seed.
    """
    if trials < 1:
        raise ValueError(f"trials={trials!r} must be at least 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    inputs = (rng.random(trials) < cfg.prior).astype(np.int64)
    modes = inputs[:, None]
    for _ in range(cfg.layers):
        cols = []
        for j in range(modes.shape[1]):
            cols.extend(_copy_step(cfg.copier, modes[:, j], rng))
        modes = np.stack(cols, axis=1)
    click_p = np.where(modes == 1, cfg.detector.eta, cfg.detector.eta * cfg.detector.xi)
    clicks = rng.random(modes.shape) < click_p
    weights = 1 << np.arange(modes.shape[1], dtype=np.int64)
    outcomes = clicks.astype(np.int64) @ weights
    n_out = 2 ** modes.shape[1]
    counts = np.stack([np.bincount(outcomes[inputs == i], minlength=n_out) for i in (VACUUM, PHOTON)])
    return SampleRun(cfg.layers, inputs, outcomes, counts)


def binomial_bound(p: np.ndarray, n: int, sigmas: float = 4.0) -> np.ndarray:
    return sigmas * np.sqrt(np.asarray(p) * (1.0 - np.asarray(p)) / n)


# -- density-matrix oracle -------------------------------------------------------

# |orig, copy> basis, index = orig + 2 * copy; control = original, target = copy
CNOT = np.eye(4)[[0, 3, 2, 1]]


@dataclass(frozen=True)
class CnotOracleResult:
    state: DensityMatrix4
    outcomes: np.ndarray


def cnot_oracle(rho, detector: DetectorModel) -> CnotOracleResult:
    """Copy a single-mode state with an exact CNOT and measure both outputs.

    Works at amplitude level, so superposition inputs come out entangled.
    Outcome probabilities use the trace rule with the product POVM.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"input must be a 2x2 density matrix, got shape {rho.shape}")
    check_density_matrix(rho)
    dummy = np.array([[1, 0], [0, 0]], dtype=complex)
    joint = CNOT @ np.kron(dummy, rho) @ CNOT.conj().T
    a_click = np.diag([detector.eta * detector.xi, detector.eta]).astype(complex)
    povm = [np.eye(2) - a_click, a_click]
    outcomes = np.array(
        [np.trace(joint @ np.kron(povm[o >> 1], povm[o & 1])).real for o in range(4)]
    )
    return CnotOracleResult(DensityMatrix4(joint), outcomes)
