"""Occupation-number bases for bosons on a chain.

Two kinds of basis are supported:

* ``"sector"`` -- all occupation vectors of ``L`` sites holding exactly ``N``
  particles, with no per-site cap.  This is the space the Hubbard
  Hamiltonian is diagonalized in.
* ``"truncated"`` -- every vector with entries in ``0..n_max``.  Particle
  number is not fixed, so ladder operators can be represented.

Both kinds are enumerated in lexicographically descending order, e.g. the
``L=2, N=2`` sector is ``(2,0), (1,1), (0,2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CapacityError, ConfigError, NotInBasisError

DEFAULT_MAX_DIM = 5_000_000

# Integer keys are used for reverse lookup whenever base**L fits comfortably
# in int64; otherwise an exact tuple dictionary is used.
_KEY_LIMIT = 2**62


@dataclass(frozen=True, eq=False)
class FockBasis:
    kind: str
    L: int
    states: np.ndarray
    N: int | None = None
    n_max: int | None = None
    _base: int = field(default=0, repr=False)
    _weights: np.ndarray | None = field(default=None, repr=False)
    _keys_ascending: np.ndarray | None = field(default=None, repr=False)
    _table: dict | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    def __len__(self) -> int:
        return self.dim

    def __repr__(self) -> str:
        extra = f"N={self.N}" if self.kind == "sector" else f"n_max={self.n_max}"
        return f"FockBasis(kind={self.kind!r}, L={self.L}, {extra}, dim={self.dim})"

    def contains(self, occ: Sequence[int]) -> bool:
        try:
            self.index(occ)
        except NotInBasisError:
            return False
        return True

    def index(self, occ: Sequence[int]) -> int:
        """Ordinal of a single occupation vector."""
        arr = np.asarray(occ, dtype=np.int64).reshape(1, -1)
        return int(self.lookup(arr)[0])

    def lookup(self, occs: np.ndarray) -> np.ndarray:
        """Vectorized reverse lookup for an ``(M, L)`` array of occupations.

        Raises NotInBasisError if any row is outside the basis.
        """
        occs = np.asarray(occs, dtype=np.int64)
        if occs.ndim != 2 or occs.shape[1] != self.L:
            raise NotInBasisError(f"expected occupation vectors of length {self.L}")
        if occs.shape[0] == 0:
            return np.zeros(0, dtype=np.int64)
        bad = np.any(occs < 0, axis=1) | np.any(occs >= self._base, axis=1)
        if self._table is not None:
            out = np.empty(occs.shape[0], dtype=np.int64)
            for r, row in enumerate(occs):
                k = None if bad[r] else self._table.get(tuple(int(x) for x in row))
                if k is None:
                    raise NotInBasisError(f"{tuple(int(x) for x in row)} not in {self!r}")
                out[r] = k
            return out
        if np.any(bad):
            row = occs[np.argmax(bad)]
            raise NotInBasisError(f"{tuple(int(x) for x in row)} not in {self!r}")
        keys = occs @ self._weights
        pos = np.searchsorted(self._keys_ascending, keys)
        pos_clipped = np.minimum(pos, self.dim - 1)
        found = self._keys_ascending[pos_clipped] == keys
        if not np.all(found):
            row = occs[np.argmin(found)]
            raise NotInBasisError(f"{tuple(int(x) for x in row)} not in {self!r}")
        return (self.dim - 1 - pos_clipped).astype(np.int64)


def _make_basis(kind: str, L: int, states: np.ndarray, base: int, **kw) -> FockBasis:
    states = np.ascontiguousarray(states, dtype=np.int64)
    states.setflags(write=False)
    if base**L < _KEY_LIMIT:
        weights = base ** np.arange(L - 1, -1, -1, dtype=np.int64)
        keys = states @ weights
        # descending enumeration order means descending keys
        asc = np.ascontiguousarray(keys[::-1])
        asc.setflags(write=False)
        return FockBasis(kind, L, states, _base=base, _weights=weights,
                         _keys_ascending=asc, **kw)
    table = {tuple(int(x) for x in row): k for k, row in enumerate(states)}
    return FockBasis(kind, L, states, _base=base, _table=table, **kw)


def sector_dimension(L: int, N: int) -> int:
    return math.comb(N + L - 1, L - 1)


def _sector_rows(L: int, N: int, memo: dict) -> np.ndarray:
    key = (L, N)
    if key in memo:
        return memo[key]
    if L == 1:
        out = np.array([[N]], dtype=np.int64)
    else:
        blocks = []
        for n0 in range(N, -1, -1):
            rest = _sector_rows(L - 1, N - n0, memo)
            head = np.full((rest.shape[0], 1), n0, dtype=np.int64)
            blocks.append(np.hstack([head, rest]))
        out = np.vstack(blocks)
    memo[key] = out
    return out


def enumerate_sector(L: int, N: int, max_dim: int = DEFAULT_MAX_DIM) -> FockBasis:
    """Fixed-particle-number basis, lexicographically descending."""
    if L < 1:
        raise ConfigError("must be >= 1", "L")
    if N < 0:
        raise ConfigError("must be >= 0", "N")
    dim = sector_dimension(L, N)
    if dim > max_dim:
        raise CapacityError(f"sector L={L}, N={N} has dimension {dim} > cap {max_dim}")
    states = _sector_rows(L, N, {})
    return _make_basis("sector", L, states, N + 1, N=N)


def enumerate_truncated(L: int, n_max: int, max_dim: int = DEFAULT_MAX_DIM) -> FockBasis:
    """All occupations with every site in ``0..n_max``, lexicographically descending."""
    if L < 1:
        raise ConfigError("must be >= 1", "L")
    if n_max < 1:
        raise ConfigError("must be >= 1", "n_max")
    dim = (n_max + 1) ** L
    if dim > max_dim:
        raise CapacityError(f"truncated L={L}, n_max={n_max} has dimension {dim} > cap {max_dim}")
    grid = np.indices((n_max + 1,) * L).reshape(L, -1).T
    return _make_basis("truncated", L, n_max - grid, n_max + 1, n_max=n_max)


def state_index(basis: FockBasis, occ: Sequence[int]) -> int:
    return basis.index(occ)
