"""Phase-imprint quench dynamics.

Protocol: ground state -> multiply by exp(i phi N_A) for a site subset A ->
evolve under the same Hamiltonian, recording density, correlations and the
population imbalance at every output step.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal

from .errors import ConfigError, DimensionMismatchError, StepSizeError
from .fock_basis import FockBasis, enumerate_sector
from .groundstate import (DENSE_MAX_DIM, DegenerateGroundStateWarning, QuantumState,
                          lowest_eigenpairs)
from .hamiltonian import LatticeSpec, RegionLayout, SparseOperator, build_hamiltonian
from .observables import correlations_batch, density_batch, imbalance_batch
from .tables import write_csv

IMPRINT_MODES = ("symmetric", "asymmetric")
METHODS = ("auto", "dense-exponential", "krylov")


@dataclass(frozen=True)
class ImprintSpec:
    """Phase imprint exp(i phi N_A).

    ``site_set`` may be given explicitly; otherwise it is derived from the
    mode (and ``split`` for the asymmetric mode) by :func:`resolve_site_set`.
    """

    mode: str = "symmetric"
    phi: float = math.pi
    split: int | None = None
    site_set: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.mode not in IMPRINT_MODES:
            raise ConfigError(f"must be one of {IMPRINT_MODES}", "imprint.mode")
        if not math.isfinite(self.phi):
            raise ConfigError("must be finite", "imprint.phi")
        if self.site_set is not None:
            object.__setattr__(self, "site_set", tuple(sorted(int(s) for s in self.site_set)))

    def resolve(self, L: int, layout: RegionLayout | None = None) -> tuple[tuple[int, ...], int]:
        """(site set, imbalance split) for a chain of L sites."""
        if self.site_set is not None:
            sites = _validate_site_set(self.site_set, L)
            if sites == tuple(range(len(sites))):
                split = len(sites) if self.split is None else self.split
            elif self.split is None:
                raise ConfigError("a non-prefix site_set needs an explicit split for z",
                                  "imprint.split")
            else:
                split = self.split
            if not 1 <= split <= L - 1:
                raise ConfigError(f"split must lie in [1, {L - 1}]", "imprint.split")
            return sites, split
        sites = resolve_site_set(L, layout, self.mode, self.split)
        return sites, len(sites)


def _validate_site_set(sites: Sequence[int], L: int) -> tuple[int, ...]:
    sites = tuple(sorted(set(int(s) for s in sites)))
    if not sites:
        raise ConfigError("site set is empty; no relative phase would result", "imprint.site_set")
    if len(sites) >= L:
        raise ConfigError("site set covers every site; no relative phase would result",
                          "imprint.site_set")
    if sites[0] < 0 or sites[-1] >= L:
        raise ConfigError(f"sites must lie in [0, {L - 1}]", "imprint.site_set")
    return sites


def resolve_site_set(L: int, layout: RegionLayout | None, mode: str,
                     split: int | None = None) -> tuple[int, ...]:
    """Sites that receive the phase.

    symmetric: region 1 plus the first half of region 2, i.e. ``[0, L1 + L2//2)``;
    the two-site chain is special-cased to ``{0}``.  Odd L admits no symmetric
    partition and is rejected.
    asymmetric: ``[0, split)``.
    """
    if mode == "symmetric":
        if L % 2:
            raise ConfigError(
                f"L={L} is odd: symmetric imprint is impossible, use mode='asymmetric' "
                "with an explicit split", "imprint.mode")
        if layout is None:
            if L == 2:
                return (0,)
            raise ConfigError("symmetric imprint needs a region layout", "imprint.mode")
        if layout.L != L:
            raise ConfigError(f"layout covers {layout.L} sites, chain has {L}", "regions.sizes")
        L1, L2, _ = layout.sizes
        return _validate_site_set(range(L1 + L2 // 2), L)
    if mode == "asymmetric":
        if split is None:
            raise ConfigError("asymmetric imprint needs a split", "imprint.split")
        if not 1 <= split <= L - 1:
            raise ConfigError(f"split must lie in [1, {L - 1}]", "imprint.split")
        return tuple(range(split))
    raise ConfigError(f"must be one of {IMPRINT_MODES}", "imprint.mode")


def build_imprint(basis: FockBasis, site_set: Sequence[int], phi: float) -> SparseOperator:
    """Diagonal unitary exp(i phi sum_{i in A} n_i)."""
    sites = _validate_site_set(site_set, basis.L)
    counts = basis.states[:, list(sites)].sum(axis=1)
    # reduce phi first so that phi = 2 pi k gives the identity exactly
    phase = np.exp(1j * np.mod(phi, 2 * np.pi) * counts)
    return SparseOperator(sp.diags(phase, format="csr"), basis)


@dataclass(frozen=True)
class EvolutionConfig:
    t_final: float = 100.0
    dt: float = 0.05
    method: str = "auto"
    krylov_dim: int = 30
    tol: float = 1e-9

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError("must be > 0", "evolution.dt")
        if not self.t_final >= self.dt:
            raise ConfigError("must be >= dt", "evolution.t_final")
        if self.method not in METHODS:
            raise ConfigError(f"must be one of {METHODS}", "evolution.method")
        if self.krylov_dim < 4:
            raise ConfigError("must be >= 4", "evolution.krylov_dim")
        if not self.tol > 0:
            raise ConfigError("must be > 0", "evolution.tol")

    def times(self) -> np.ndarray:
        n = int(round(self.t_final / self.dt))
        return self.dt * np.arange(n + 1)


class SpectralPropagator:
    """exp(-iHt) through a full eigendecomposition (dense matrices only)."""

    def __init__(self, H: SparseOperator):
        self.energies, self.vectors = np.linalg.eigh(H.toarray())

    def coefficients(self, psi0: np.ndarray) -> np.ndarray:
        return self.vectors.conj().T @ psi0

    def evolve(self, psi0: np.ndarray, times: np.ndarray | float) -> np.ndarray:
        """Rows are psi(t) for each t in ``times``."""
        c = self.coefficients(psi0)
        phases = np.exp(-1j * np.outer(np.atleast_1d(times), self.energies))
        return (phases * c) @ self.vectors.T


def krylov_step(matvec: Callable[[np.ndarray], np.ndarray], v: np.ndarray, tau: float,
                m: int) -> tuple[np.ndarray, float]:
    """One Lanczos approximation of exp(-i tau H) v.

    Returns the propagated vector and the a posteriori error estimate
    beta_m |e_m^T exp(-i tau T_m) e_1| ||v||.
    """
    beta0 = np.linalg.norm(v)
    if beta0 == 0:
        return v.copy(), 0.0
    m = min(m, v.shape[0])
    Q = np.zeros((v.shape[0], m), dtype=complex)
    alpha = np.zeros(m)
    beta = np.zeros(m)
    Q[:, 0] = v / beta0
    size = m
    for j in range(m):
        w = matvec(Q[:, j])
        alpha[j] = np.vdot(Q[:, j], w).real
        w -= Q[:, : j + 1] @ (Q[:, : j + 1].conj().T @ w)
        w -= Q[:, : j + 1] @ (Q[:, : j + 1].conj().T @ w)
        beta[j] = np.linalg.norm(w)
        if beta[j] < 1e-13 * max(1.0, abs(alpha[j])):
            # invariant subspace: the projection is exact
            size = j + 1
            beta[j] = 0.0
            break
        if j + 1 < m:
            Q[:, j + 1] = w / beta[j]
    lam, S = eigh_tridiagonal(alpha[:size], beta[: size - 1])
    y = S @ (np.exp(-1j * tau * lam) * S[0, :])
    err = beta0 * abs(beta[size - 1] * y[-1])
    return beta0 * (Q[:, :size] @ y), float(err)


def krylov_propagate(H: SparseOperator, psi: np.ndarray, t: float, krylov_dim: int = 30,
                     tol: float = 1e-9, min_step: float | None = None) -> np.ndarray:
    """exp(-iHt) psi by adaptive substeps, each with estimated error <= tol."""
    matvec = H.matrix.dot
    remaining = float(t)
    sign = 1.0 if t >= 0 else -1.0
    remaining = abs(remaining)
    min_step = min_step if min_step is not None else max(abs(t), 1.0) * 1e-10
    tau = remaining
    v = np.asarray(psi, dtype=complex)
    while remaining > 0:
        tau = min(tau, remaining)
        w, err = krylov_step(matvec, v, sign * tau, krylov_dim)
        if err > tol:
            tau *= 0.5
            if tau < min_step:
                raise StepSizeError(
                    f"Krylov step {tau:.3e} below minimum {min_step:.3e}; "
                    f"error estimate {err:.3e} > tol {tol:.1e} "
                    f"(krylov_dim={krylov_dim}, t remaining {remaining:.4g})")
            continue
        v = w
        remaining -= tau
        if remaining < 1e-14 * max(1.0, abs(t)):
            remaining = 0.0
        tau *= 2.0
    return v


@dataclass(eq=False)
class ObservableTimeSeries:
    times: np.ndarray
    density: np.ndarray
    correlations: np.ndarray | None
    z: np.ndarray | None
    norm: np.ndarray
    energy: np.ndarray
    split: int | None = None
    states: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def long_rows(self):
        """(t, observable, indices, value) rows in a fixed order."""
        L = self.density.shape[1]
        for k, t in enumerate(self.times):
            if self.z is not None:
                yield (t, "z", "", self.z[k])
            yield (t, "norm", "", self.norm[k])
            yield (t, "energy", "", self.energy[k])
            for i in range(L):
                yield (t, "density", str(i), self.density[k, i])
            if self.correlations is not None:
                for i in range(L):
                    for j in range(L):
                        c = self.correlations[k, i, j]
                        yield (t, "corr_re", f"{i},{j}", c.real)
                        yield (t, "corr_im", f"{i},{j}", c.imag)

    def write_csv(self, path: str | Path) -> Path:
        return write_csv(path, ["t", "observable", "indices", "value"], self.long_rows())

    def write_metadata(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.metadata, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
        return path


def _resolve_method(cfg: EvolutionConfig, dim: int) -> str:
    if cfg.method == "auto":
        return "dense-exponential" if dim <= DENSE_MAX_DIM else "krylov"
    return cfg.method


def evolve(H: SparseOperator, psi0: QuantumState, cfg: EvolutionConfig,
           split: int | None = None, record_correlations: bool = True,
           keep_states: bool = False) -> ObservableTimeSeries:
    """Sample psi(t) = exp(-iHt) psi0 at t = 0, dt, ..., t_final and record observables."""
    if psi0.basis.dim != H.dim:
        raise DimensionMismatchError("state and Hamiltonian dimensions differ")
    basis = psi0.basis
    times = cfg.times()
    method = _resolve_method(cfg, H.dim)
    if method == "dense-exponential":
        states = SpectralPropagator(H).evolve(psi0.amplitudes, times)
    else:
        states = np.empty((len(times), H.dim), dtype=complex)
        v = psi0.amplitudes.copy()
        states[0] = v
        for k in range(1, len(times)):
            v = krylov_propagate(H, v, times[k] - times[k - 1], cfg.krylov_dim, cfg.tol)
            states[k] = v
    norm = np.linalg.norm(states, axis=1)
    energy = np.einsum("td,td->t", states.conj(), (H.matrix @ states.T).T).real
    return ObservableTimeSeries(
        times=times,
        density=density_batch(basis, states),
        correlations=correlations_batch(basis, states) if record_correlations else None,
        z=imbalance_batch(basis, states, split) if split is not None else None,
        norm=norm,
        energy=energy,
        split=split,
        states=states if keep_states else None,
        metadata={"method": method},
    )


def prepare_quench(spec: LatticeSpec, imprint: ImprintSpec, ground_method: str = "auto"):
    """Ground state, imprinted state, Hamiltonian and bookkeeping for a quench."""
    sites, split = imprint.resolve(spec.L, spec.layout)
    basis = enumerate_sector(spec.L, spec.N)
    H = build_hamiltonian(spec, basis)
    k = 2 if basis.dim >= 2 else 1
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegenerateGroundStateWarning)
        sl = lowest_eigenpairs(H, k, method=ground_method)
    for w in caught:
        warnings.warn(w.message, w.category, stacklevel=2)
    ground = sl.ground
    psi0 = QuantumState(basis, build_imprint(basis, sites, imprint.phi) @ ground.amplitudes)
    info = {
        "site_set": list(sites),
        "split": split,
        "ground_energy": float(sl.energies[0]),
        "gap": float(sl.gap) if k == 2 else None,
        "degenerate_ground_state": bool(sl.degenerate),
        "ground_method": sl.method,
        "dim": basis.dim,
    }
    return H, ground, psi0, info


def run_quench(spec: LatticeSpec, imprint: ImprintSpec, cfg: EvolutionConfig,
               record_correlations: bool = True, keep_states: bool = False
               ) -> ObservableTimeSeries:
    H, _, psi0, info = prepare_quench(spec, imprint)
    series = evolve(H, psi0, cfg, split=info["split"],
                    record_correlations=record_correlations, keep_states=keep_states)
    series.metadata.update(info)
    series.metadata.update({
        "lattice": spec.to_dict(),
        "imprint": {**asdict(imprint), "site_set": info["site_set"]},
        "evolution": asdict(cfg),
    })
    return series
