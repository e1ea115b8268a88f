"""Low-lying spectrum, ground states and the first excitation gap."""

from __future__ import annotations

import dataclasses
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceError, DimensionMismatchError
from .fock_basis import FockBasis, enumerate_sector
from .hamiltonian import LatticeSpec, SparseOperator, build_hamiltonian
from .tables import write_csv

DENSE_MAX_DIM = 2000
DEGENERACY_TOL = 1e-10
RESIDUAL_TOL = 1e-8
NORM_TOL = 1e-10


class DegenerateGroundStateWarning(UserWarning):
    pass


def fix_global_phase(v: np.ndarray) -> np.ndarray:
    """Rotate ``v`` so that its largest-magnitude entry is real and positive.

    Ties (common for reflection-symmetric states) go to the lowest index, after
    rounding magnitudes to 12 digits so the choice is solver-independent.
    """
    mags = np.round(np.abs(v), 12)
    k = int(np.argmax(mags))
    if abs(v[k]) == 0:
        return v
    out = v * (abs(v[k]) / v[k])
    out[k] = abs(v[k])
    return out


@dataclass(frozen=True, eq=False)
class QuantumState:
    basis: FockBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.basis.dim,):
            raise DimensionMismatchError(
                f"amplitude vector of shape {amps.shape} for basis of dim {self.basis.dim}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def fock(cls, basis: FockBasis, occ: Sequence[int]) -> "QuantumState":
        amps = np.zeros(basis.dim, dtype=complex)
        amps[basis.index(occ)] = 1.0
        return cls(basis, amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "QuantumState":
        return QuantumState(self.basis, self.amplitudes / self.norm)

    def expectation(self, op: SparseOperator) -> complex:
        return complex(np.vdot(self.amplitudes, op @ self.amplitudes))


@dataclass(frozen=True, eq=False)
class SpectrumSlice:
    energies: np.ndarray
    states: list[QuantumState]
    residuals: np.ndarray
    method: str
    degenerate: bool = False
    matvecs: int = field(default=0, compare=False)

    @property
    def ground(self) -> QuantumState:
        return self.states[0]

    @property
    def gap(self) -> float:
        return float(self.energies[1] - self.energies[0])


def _start_vector(dim: int, seed: int = 0) -> np.ndarray:
    # fixed seed: the start vector is part of the deterministic pipeline
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def lanczos_lowest(
    matvec: Callable[[np.ndarray], np.ndarray],
    dim: int,
    k: int = 1,
    tol: float = 1e-10,
    max_iter: int = 5000,
    krylov_max: int = 200,
) -> tuple[np.ndarray, np.ndarray, int]:
    """k lowest eigenpairs of a Hermitian operator by restarted Lanczos.

    Each eigenpair is found by its own Lanczos run with full
    reorthogonalization against the current Krylov basis and against all
    previously converged (locked) vectors, so degenerate levels are resolved
    one copy at a time.  A run that reaches ``krylov_max`` vectors without
    converging restarts from its best Ritz vector.

    Convergence means ||H x - E x|| <= tol * max(1, |E|).  Returns
    ``(energies, vectors as columns, matvec count)``.
    """
    locked: list[np.ndarray] = []
    energies: list[float] = []
    matvecs = 0
    for n in range(k):
        L = np.array(locked).T if locked else np.zeros((dim, 0), dtype=complex)

        def project(w):
            return w - L @ (L.conj().T @ w) if locked else w

        v = project(_start_vector(dim, seed=n))
        v /= np.linalg.norm(v)
        residual = np.inf
        while True:
            m_cap = min(krylov_max, dim - len(locked))
            Q = np.zeros((dim, m_cap), dtype=complex)
            alpha = np.zeros(m_cap)
            beta = np.zeros(m_cap)
            Q[:, 0] = v
            m = 0
            for m in range(m_cap):
                w = project(matvec(Q[:, m]))
                matvecs += 1
                alpha[m] = np.vdot(Q[:, m], w).real
                w -= Q[:, : m + 1] @ (Q[:, : m + 1].conj().T @ w)
                w -= Q[:, : m + 1] @ (Q[:, : m + 1].conj().T @ w)
                w = project(w)
                beta[m] = np.linalg.norm(w)
                ritz, s = eigh_tridiagonal(alpha[: m + 1], beta[:m], select="i",
                                           select_range=(0, 0))
                # beta_m |s_m| is the Lanczos residual estimate of the lowest Ritz pair
                if abs(beta[m] * s[-1, 0]) <= 0.1 * tol * max(1.0, abs(ritz[0])):
                    break
                if beta[m] < 1e-13 or m + 1 == m_cap or matvecs >= max_iter:
                    break
                Q[:, m + 1] = w / beta[m]
            size = m + 1
            ritz, s = eigh_tridiagonal(alpha[:size], beta[: size - 1], select="i",
                                       select_range=(0, 0))
            x = Q[:, :size] @ s[:, 0]
            x = project(x)
            x /= np.linalg.norm(x)
            e = float(np.vdot(x, matvec(x)).real)
            matvecs += 1
            residual = float(np.linalg.norm(project(matvec(x)) - e * x))
            matvecs += 1
            if residual <= tol * max(1.0, abs(e)):
                break
            if matvecs >= max_iter:
                raise ConvergenceError(
                    f"Lanczos did not converge eigenpair {n} within {max_iter} matvecs "
                    f"(residual {residual:.3e})", residual=residual)
            v = x
        locked.append(x)
        energies.append(e)
    vecs = np.array(locked).T
    order = np.argsort(energies, kind="stable")
    return np.asarray(energies)[order], vecs[:, order], matvecs


def lowest_eigenpairs(H: SparseOperator, k: int = 1, method: str = "auto",
                      tol: float = 1e-10, max_iter: int = 5000) -> SpectrumSlice:
    """k lowest eigenpairs; dense for dim <= 2000 unless ``method`` forces one."""
    dim = H.dim
    if not 1 <= k <= dim:
        raise ValueError(f"k must lie in [1, {dim}]")
    if method == "auto":
        method = "dense" if dim <= DENSE_MAX_DIM else "lanczos"
    if method == "dense":
        E, V = np.linalg.eigh(H.toarray())
        E, V = E[:k], V[:, :k]
        matvecs = 0
    elif method == "lanczos":
        E, V, matvecs = lanczos_lowest(H.matrix.dot, dim, k, tol=tol, max_iter=max_iter)
    else:
        raise ValueError(f"unknown method {method!r}")
    states, residuals = [], []
    for i in range(k):
        v = fix_global_phase(V[:, i] / np.linalg.norm(V[:, i]))
        r = float(np.linalg.norm(H @ v - E[i] * v))
        if r > RESIDUAL_TOL * max(1.0, abs(E[i])):
            raise ConvergenceError(f"eigenpair {i} residual {r:.3e} above bound", residual=r)
        states.append(QuantumState(H.basis, v))
        residuals.append(r)
    degenerate = k >= 2 and (E[1] - E[0]) < DEGENERACY_TOL
    if degenerate:
        warnings.warn(f"ground state is degenerate (E1 - E0 = {E[1] - E[0]:.2e})",
                      DegenerateGroundStateWarning, stacklevel=2)
    return SpectrumSlice(np.asarray(E, dtype=float), states, np.asarray(residuals),
                         method, degenerate, matvecs)


def excitation_gap(H: SparseOperator, method: str = "auto") -> float:
    if H.dim < 2:
        raise ValueError("gap needs at least two states")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateGroundStateWarning)
        return lowest_eigenpairs(H, 2, method=method).gap


@dataclass(frozen=True)
class GapRow:
    theta: float
    J: float
    E0: float
    E1: float

    @property
    def gap(self) -> float:
        return self.E1 - self.E0


def gap_scan(template: LatticeSpec, J_values: Sequence[float], theta_values: Sequence[float],
             workers: int = 1, method: str = "auto") -> list[GapRow]:
    """First excitation gap on the (theta, J) grid; theta and J are set uniformly.

    Rows come back theta-major, in the order of the inputs.
    """
    basis = enumerate_sector(template.L, template.N)
    grid = [(float(th), float(j)) for th in theta_values for j in J_values]
    # validates every theta before any diagonalization starts
    specs = [dataclasses.replace(template, J=j, theta=th, layout=None) for th, j in grid]

    def run(spec: LatticeSpec) -> GapRow:
        H = build_hamiltonian(spec, basis)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateGroundStateWarning)
            sl = lowest_eigenpairs(H, 2, method=method)
        return GapRow(spec.theta[0], spec.J[0] if spec.J else 0.0,
                      float(sl.energies[0]), float(sl.energies[1]))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, specs))
    return [run(s) for s in specs]


def write_gap_table(rows: Sequence[GapRow], path: str | Path) -> Path:
    return write_csv(path, ["theta", "J", "E0", "E1", "gap"],
                     ([r.theta, r.J, r.E0, r.E1, r.gap] for r in rows))
