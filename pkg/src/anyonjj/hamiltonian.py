"""Lattice definitions and sparse operator construction.

The Hamiltonian is the bosonic form of the anyonic Hubbard chain,

    H = -sum_b J_b (b†_j b_k exp(i theta_b n_j) + h.c.) + sum_j U_j/2 n_j (n_j - 1),

for bonds b = (j, k = j+1).  The phase is evaluated on the occupation of the
destination site *before* the hop, because exp(i theta n_j) is the rightmost
factor of the operator string.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DimensionMismatchError, HermiticityError
from .fock_basis import FockBasis

HERMITICITY_TOL = 1e-12
_THETA_SLACK = 1e-12

BOUNDARIES = ("open", "periodic")
BOND_THETA_CONVENTIONS = ("left", "right")


def _as_floats(value, n: int, name: str) -> tuple[float, ...]:
    if np.isscalar(value):
        return (float(value),) * n
    vals = tuple(float(v) for v in value)
    if len(vals) != n:
        raise ConfigError(f"expected {n} entries, got {len(vals)}", name)
    return vals


@dataclass(frozen=True)
class RegionLayout:
    """Three-region junction: region sizes plus one (theta, U) pair per region."""

    sizes: tuple[int, int, int]
    theta: tuple[float, float, float] = (0.0, 0.0, 0.0)
    U: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        object.__setattr__(self, "theta", _as_floats(self.theta, 3, "regions.theta"))
        object.__setattr__(self, "U", _as_floats(self.U, 3, "regions.U"))
        if len(self.sizes) != 3:
            raise ConfigError("exactly three region sizes required", "regions.sizes")
        if any(s < 0 for s in self.sizes) or sum(self.sizes) < 1:
            raise ConfigError("sizes must be non-negative with a positive total", "regions.sizes")

    @property
    def L(self) -> int:
        return sum(self.sizes)

    def region_of(self, site: int) -> int:
        edges = np.cumsum(self.sizes)
        return int(np.searchsorted(edges, site, side="right"))

    def sites(self, region: int) -> range:
        start = sum(self.sizes[:region])
        return range(start, start + self.sizes[region])

    def expand(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        """Per-site (theta, U) arrays."""
        theta: list[float] = []
        U: list[float] = []
        for size, th, u in zip(self.sizes, self.theta, self.U):
            theta += [th] * size
            U += [u] * size
        return tuple(theta), tuple(U)


@dataclass(frozen=True)
class LatticeSpec:
    """Complete model definition.

    ``J`` holds one amplitude per bond (``L-1`` open, ``L`` periodic);
    ``theta`` and ``U`` hold one value per site.  Scalars are broadcast.
    ``bond_theta`` selects whether a bond (j, j+1) uses theta_j ("left") or
    theta_{j+1} ("right"); the two only differ at region boundaries.
    """

    L: int
    N: int
    J: Sequence[float] | float = 1.0
    theta: Sequence[float] | float = 0.0
    U: Sequence[float] | float = 0.0
    boundary: str = "open"
    bond_theta: str = "left"
    layout: RegionLayout | None = field(default=None, compare=False)

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise ConfigError("must be a positive integer", "L")
        if int(self.N) != self.N or self.N < 0:
            raise ConfigError("must be a non-negative integer", "N")
        object.__setattr__(self, "L", int(self.L))
        object.__setattr__(self, "N", int(self.N))
        if self.boundary not in BOUNDARIES:
            raise ConfigError(f"must be one of {BOUNDARIES}", "boundary")
        if self.bond_theta not in BOND_THETA_CONVENTIONS:
            raise ConfigError(f"must be one of {BOND_THETA_CONVENTIONS}", "bond_theta")
        nb = len(self.bonds())
        object.__setattr__(self, "J", _as_floats(self.J, nb, "J"))
        object.__setattr__(self, "theta", _as_floats(self.theta, self.L, "theta"))
        object.__setattr__(self, "U", _as_floats(self.U, self.L, "U"))
        if not all(math.isfinite(j) for j in self.J):
            raise ConfigError("entries must be finite", "J")
        for th in self.theta:
            if not (-_THETA_SLACK <= th <= math.pi + _THETA_SLACK):
                raise ConfigError("theta must lie in [0, π]", "theta")
        for u in self.U:
            if not (math.isfinite(u) and u >= 0):
                raise ConfigError("U must be finite and >= 0", "U")
        if self.layout is not None and self.layout.L != self.L:
            raise ConfigError(
                f"region sizes {self.layout.sizes} sum to {self.layout.L}, not L={self.L}",
                "regions.sizes",
            )

    @classmethod
    def uniform(cls, L: int, N: int | None = None, J: float = 1.0, theta: float = 0.0,
                U: float = 0.0, boundary: str = "open") -> "LatticeSpec":
        return cls(L=L, N=L if N is None else N, J=J, theta=theta, U=U, boundary=boundary)

    @classmethod
    def from_layout(cls, layout: RegionLayout, N: int | None = None, J=1.0,
                    boundary: str = "open", bond_theta: str = "left") -> "LatticeSpec":
        theta, U = layout.expand()
        return cls(L=layout.L, N=layout.L if N is None else N, J=J, theta=theta, U=U,
                   boundary=boundary, bond_theta=bond_theta, layout=layout)

    def bonds(self) -> list[tuple[int, int]]:
        bonds = [(j, j + 1) for j in range(self.L - 1)]
        if self.boundary == "periodic" and self.L > 1:
            bonds.append((self.L - 1, 0))
        return bonds

    def bond_phase(self, b: int) -> float:
        j, k = self.bonds()[b]
        return self.theta[j] if self.bond_theta == "left" else self.theta[k]

    def to_dict(self) -> dict:
        d = {
            "L": self.L, "N": self.N, "J": list(self.J), "theta": list(self.theta),
            "U": list(self.U), "boundary": self.boundary, "bond_theta": self.bond_theta,
        }
        if self.layout is not None:
            d["regions"] = {"sizes": list(self.layout.sizes), "theta": list(self.layout.theta),
                            "U": list(self.layout.U)}
        return d


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Complex CSR matrix tied to the basis it acts on."""

    matrix: sp.csr_matrix
    basis: FockBasis | None = None
    hermitian: bool = False

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            return SparseOperator((self.matrix @ other.matrix).tocsr(), self.basis)
        return self.matrix @ other

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def adjoint(self) -> "SparseOperator":
        return SparseOperator(self.matrix.conj().T.tocsr(), self.basis, self.hermitian)

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def hermiticity_error(self) -> float:
        diff = (self.matrix - self.matrix.conj().T).tocoo()
        return float(np.max(np.abs(diff.data))) if diff.nnz else 0.0

    def shifted(self, c: float) -> "SparseOperator":
        eye = sp.identity(self.dim, dtype=complex, format="csr")
        return SparseOperator((self.matrix + c * eye).tocsr(), self.basis, self.hermitian)


def _csr(rows, cols, vals, dim: int) -> sp.csr_matrix:
    m = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=complex).tocsr()
    m.sum_duplicates()
    m.eliminate_zeros()
    return m


def _check_site(basis: FockBasis, site: int) -> None:
    if not 0 <= site < basis.L:
        raise IndexError(f"site {site} out of range for L={basis.L}")


def _transfer(basis: FockBasis, dst: int, src: int):
    """Matrix elements of b†_dst b_src (dst != src).

    Returns (rows, cols, amplitude, n_dst_before) over all basis states the
    operator does not annihilate.
    """
    st = basis.states
    mask = st[:, src] > 0
    if basis.kind == "truncated":
        mask &= st[:, dst] < basis.n_max
    cols = np.nonzero(mask)[0]
    moved = st[cols].copy()
    n_dst = moved[:, dst].copy()
    n_src = moved[:, src].copy()
    moved[:, dst] += 1
    moved[:, src] -= 1
    rows = basis.lookup(moved)
    amp = np.sqrt(n_src) * np.sqrt(n_dst + 1.0)
    return rows, cols, amp, n_dst


def build_hamiltonian(spec: LatticeSpec, basis: FockBasis, check: bool = True) -> SparseOperator:
    if basis.L != spec.L:
        raise DimensionMismatchError(f"basis has L={basis.L}, spec has L={spec.L}")
    if basis.kind == "sector" and basis.N != spec.N:
        raise DimensionMismatchError(f"basis has N={basis.N}, spec has N={spec.N}")
    dim = basis.dim
    rows, cols, vals = [], [], []
    for b, (j, k) in enumerate(spec.bonds()):
        r, c, amp, n_j = _transfer(basis, j, k)
        hop = -spec.J[b] * amp * np.exp(1j * spec.bond_phase(b) * n_j)
        rows += [r, c]
        cols += [c, r]
        vals += [hop, hop.conj()]
    occ = basis.states
    diag = 0.5 * (occ * (occ - 1)) @ np.asarray(spec.U, dtype=float)
    idx = np.arange(dim)
    rows.append(idx)
    cols.append(idx)
    vals.append(diag.astype(complex))
    H = SparseOperator(_csr(np.concatenate(rows), np.concatenate(cols),
                            np.concatenate(vals), dim), basis, hermitian=True)
    if check:
        err = H.hermiticity_error()
        if err > HERMITICITY_TOL:
            raise HermiticityError(f"|H - H†| = {err:.3e} exceeds {HERMITICITY_TOL}")
    return H


def build_number_operator(basis: FockBasis, site: int) -> SparseOperator:
    _check_site(basis, site)
    m = sp.diags(basis.states[:, site].astype(complex), format="csr")
    return SparseOperator(m, basis, hermitian=True)


def build_total_number(basis: FockBasis, sites: Sequence[int] | None = None) -> SparseOperator:
    cols = list(range(basis.L)) if sites is None else list(sites)
    for s in cols:
        _check_site(basis, s)
    m = sp.diags(basis.states[:, cols].sum(axis=1).astype(complex), format="csr")
    return SparseOperator(m, basis, hermitian=True)


def build_hop_operator(basis: FockBasis, i: int, j: int) -> SparseOperator:
    """b†_i b_j; for i == j this is the number operator on site i."""
    _check_site(basis, i)
    _check_site(basis, j)
    if i == j:
        return build_number_operator(basis, i)
    rows, cols, amp, _ = _transfer(basis, i, j)
    return SparseOperator(_csr(rows, cols, amp.astype(complex), basis.dim), basis)


def build_boson_ops(basis: FockBasis, site: int) -> tuple[SparseOperator, SparseOperator]:
    """(b†_site, b_site) on a truncated basis.  b† annihilates states at the cap."""
    if basis.kind != "truncated":
        raise DimensionMismatchError("ladder operators need a truncated basis")
    _check_site(basis, site)
    st = basis.states
    cols = np.nonzero(st[:, site] > 0)[0]
    lowered = st[cols].copy()
    lowered[:, site] -= 1
    rows = basis.lookup(lowered)
    amp = np.sqrt(st[cols, site]).astype(complex)
    annihilation = _csr(rows, cols, amp, basis.dim)
    creation = annihilation.conj().T.tocsr()
    return SparseOperator(creation, basis), SparseOperator(annihilation, basis)


def build_anyon_ops(basis: FockBasis, site: int, theta: float,
                    string_sign: int = -1) -> tuple[SparseOperator, SparseOperator]:
    """(a†_site, a_site) from the string mapping a_j = b_j exp(i s theta sum_{i<j} n_i).

    With the default ``string_sign=-1`` the operators satisfy

        a_j a†_k - exp(-i theta sgn(j-k)) a†_k a_j = delta_jk
        a_j a_k  = exp(+i theta sgn(j-k)) a_k a_j

    on the occupancy-interior subspace.  ``string_sign=+1`` gives the
    mirrored convention (theta -> -theta in both relations), under which
    -J sum_j a†_j a_{j+1} + h.c. is exactly the hopping of build_hamiltonian.
    """
    if string_sign not in (-1, 1):
        raise ValueError("string_sign must be +1 or -1")
    _, b = build_boson_ops(basis, site)
    string = basis.states[:, :site].sum(axis=1)
    phase = sp.diags(np.exp(1j * string_sign * theta * string), format="csr")
    annihilation = (b.matrix @ phase).tocsr()
    creation = annihilation.conj().T.tocsr()
    return SparseOperator(creation, basis), SparseOperator(annihilation, basis)
