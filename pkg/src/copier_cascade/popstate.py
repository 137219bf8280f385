"""Population bookkeeping for registers of photon/vacuum modes.

A k-mode register is stored as 2**k probabilities indexed by the occupation
bitstring, with mode 0 in the least significant bit.  Every detector and
copier used in this package is diagonal in the occupation basis, so the
populations carry all the information needed for outcome statistics.

``DensityMatrix4`` is a small dense two-mode density matrix kept only for the
amplitude-level cross-check in :mod:`copier_cascade.scheme`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

NEG_TOL = 1e-12
SUM_TOL = 1e-9


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PopulationVector:
    modes: int
    probs: np.ndarray

    def __post_init__(self):
        if int(self.modes) != self.modes or self.modes < 1:
            raise ValueError(f"modes must be a positive integer, got {self.modes!r}")
        probs = _readonly(self.probs)
        if probs.shape != (2**self.modes,):
            raise ValueError(
                f"expected {2**self.modes} probabilities for {self.modes} modes, got shape {probs.shape}"
            )
        if np.any(probs < -NEG_TOL):
            raise ValueError("populations must be nonnegative")
        if abs(probs.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"populations sum to {probs.sum()!r}, not 1")
        object.__setattr__(self, "modes", int(self.modes))
        object.__setattr__(self, "probs", probs)

    def __getitem__(self, index: int) -> float:
        return float(self.probs[index])

    def __len__(self) -> int:
        return len(self.probs)

    def prob_of(self, occupation: str) -> float:
        """Probability of the bitstring ``occupation`` (written mode k-1 first)."""
        if len(occupation) != self.modes:
            raise ValueError(f"occupation {occupation!r} does not have {self.modes} bits")
        return float(self.probs[int(occupation, 2)])


def pure_state(modes: int, occupation: str) -> PopulationVector:
    """Register with certain occupation.

    The string is read like a binary number, so its last character is mode 0:
    ``pure_state(2, "10")`` puts a photon in mode 1 and vacuum in mode 0.
    """
    if len(occupation) != modes or set(occupation) - {"0", "1"}:
        raise ValueError(f"occupation {occupation!r} is not a {modes}-bit string")
    probs = np.zeros(2**modes)
    probs[int(occupation, 2)] = 1.0
    return PopulationVector(modes, probs)


def uniform(modes: int) -> PopulationVector:
    return PopulationVector(modes, np.full(2**modes, 2.0**-modes))


def mixture(weights: Iterable[float], vectors: Iterable[PopulationVector]) -> PopulationVector:
    weights = list(weights)
    vectors = list(vectors)
    modes = {v.modes for v in vectors}
    if len(modes) != 1:
        raise ValueError("cannot mix registers with different mode counts")
    probs = sum(w * v.probs for w, v in zip(weights, vectors))
    return PopulationVector(modes.pop(), probs)


def tensor(a: PopulationVector, b: PopulationVector) -> PopulationVector:
    """Product register; ``a`` keeps the low-order modes."""
    return PopulationVector(a.modes + b.modes, np.outer(b.probs, a.probs).ravel())


def marginalize(v: PopulationVector, keep: Iterable[int]) -> PopulationVector:
    """Sum out every mode not in ``keep``.

    Kept modes are renumbered in increasing order of their original index.
    """
    keep = sorted(set(int(m) for m in keep))
    if not keep:
        raise ValueError("keep must name at least one mode")
    if keep[0] < 0 or keep[-1] >= v.modes:
        raise ValueError(f"mode indices {keep} out of range for {v.modes} modes")
    t = v.probs.reshape((2,) * v.modes)
    # axis a of t holds mode (modes - 1 - a)
    drop = tuple(v.modes - 1 - m for m in range(v.modes) if m not in keep)
    out = t.sum(axis=drop).ravel() if drop else t.ravel()
    return PopulationVector(len(keep), out / out.sum())


def apply_per_mode(flat: np.ndarray, matrix: np.ndarray, modes: int) -> np.ndarray:
    """Apply the same column-stochastic map to every mode of a register.

    ``flat`` has shape ``(*batch, 2**modes)``.  ``matrix`` has shape
    ``(*mbatch, out, 2)`` where ``mbatch`` broadcasts against ``batch``.
    Mode j of the input becomes digit j (base ``out``) of the output index,
    so with ``out == 4`` mode j is replaced by modes 2j and 2j+1.
    """
    flat = np.asarray(flat, dtype=float)
    matrix = np.asarray(matrix, dtype=float)
    batch = flat.shape[:-1]
    n_out = matrix.shape[-2]
    m = matrix.reshape(matrix.shape[:-2] + (1,) * (modes - 1) + matrix.shape[-2:])
    t = flat.reshape(batch + (2,) * modes)
    lead = len(batch)
    for _ in range(modes):
        t = np.moveaxis(t, lead, -1)
        t = np.einsum("...j,...oj->...o", t, m)
    return t.reshape(t.shape[:lead] + (n_out**modes,))


@dataclass(frozen=True)
class DensityMatrix4:
    """Two-mode density matrix; basis index = mode0 + 2 * mode1."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex, copy=True)
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
        check_density_matrix(m)
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @classmethod
    def from_ket(cls, ket) -> "DensityMatrix4":
        ket = np.asarray(ket, dtype=complex)
        return cls(np.outer(ket, ket.conj()))


def check_density_matrix(m: np.ndarray) -> None:
    """Raise ValueError unless ``m`` is Hermitian, unit trace and PSD."""
    if np.max(np.abs(m - m.conj().T)) > 1e-12:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(m) - 1.0) > SUM_TOL:
        raise ValueError(f"density matrix has trace {np.trace(m).real:.12g}, not 1")
    if np.linalg.eigvalsh(m).min() < -SUM_TOL:
        raise ValueError("density matrix is not positive semidefinite")


def diagonal_of(dm: DensityMatrix4) -> PopulationVector:
    diag = np.real(np.diag(dm.entries))
    if np.any(diag < -SUM_TOL):
        raise ValueError("density matrix has a negative population")
    return PopulationVector(2, np.clip(diag, 0.0, None))
