"""Density profile, single-particle correlation matrix and population imbalance.

Every function accepts either a :class:`QuantumState` or, through the
``*_batch`` variants, a ``(T, dim)`` array of amplitude rows sharing one basis.
"""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionMismatchError
from .fock_basis import FockBasis
from .groundstate import QuantumState
from .hamiltonian import build_hop_operator
from .tables import write_csv


@lru_cache(maxsize=16)
def _hop_operators(basis: FockBasis) -> dict[tuple[int, int], object]:
    # off-diagonal b†_i b_j for i != j; diagonal entries come from density()
    return {(i, j): build_hop_operator(basis, i, j).matrix
            for i in range(basis.L) for j in range(basis.L) if i != j}


def _rows(basis: FockBasis, amps: np.ndarray) -> np.ndarray:
    amps = np.asarray(amps, dtype=complex)
    if amps.ndim == 1:
        amps = amps[None, :]
    if amps.shape[1] != basis.dim:
        raise DimensionMismatchError(f"state dim {amps.shape[1]} != basis dim {basis.dim}")
    return amps


def density_batch(basis: FockBasis, amps: np.ndarray) -> np.ndarray:
    """(T, L) array of <n_i> for each amplitude row."""
    amps = _rows(basis, amps)
    return (np.abs(amps) ** 2) @ basis.states.astype(float)


def correlations_batch(basis: FockBasis, amps: np.ndarray) -> np.ndarray:
    """(T, L, L) array with C[t, i, j] = <b†_i b_j>."""
    amps = _rows(basis, amps)
    T, L = amps.shape[0], basis.L
    C = np.zeros((T, L, L), dtype=complex)
    dens = density_batch(basis, amps)
    idx = np.arange(L)
    C[:, idx, idx] = dens
    cols = amps.T
    for (i, j), op in _hop_operators(basis).items():
        if i < j:
            val = np.einsum("dt,dt->t", cols.conj(), op @ cols)
            C[:, i, j] = val
            C[:, j, i] = val.conj()
    return C


def imbalance_batch(basis: FockBasis, amps: np.ndarray, split: int) -> np.ndarray:
    if not 1 <= split <= basis.L - 1:
        raise ConfigError(f"split must lie in [1, {basis.L - 1}]", "split")
    if basis.kind == "sector" and basis.N == 0:
        raise ConfigError("imbalance is undefined without particles", "N")
    dens = density_batch(basis, amps)
    total = dens.sum(axis=1) if basis.kind != "sector" else basis.N
    left = dens[:, :split].sum(axis=1)
    right = dens[:, split:].sum(axis=1)
    return (left - right) / total


def density(state: QuantumState) -> np.ndarray:
    return density_batch(state.basis, state.amplitudes)[0]


def correlations(state: QuantumState) -> np.ndarray:
    return correlations_batch(state.basis, state.amplitudes)[0]


def imbalance(state: QuantumState, split: int) -> float:
    """z = (N_left - N_right) / N with sites [0, split) on the left."""
    return float(imbalance_batch(state.basis, state.amplitudes, split)[0])


def write_density(profile: np.ndarray, path: str | Path) -> Path:
    return write_csv(path, ["site", "value"], ((i, v) for i, v in enumerate(profile)))


def write_correlations(C: np.ndarray, path: str | Path) -> Path:
    L = C.shape[0]
    return write_csv(path, ["i", "j", "re", "im"],
                     ((i, j, C[i, j].real, C[i, j].imag) for i in range(L) for j in range(L)))
