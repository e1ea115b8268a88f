"""Residuals of the deformed anyon commutation relations.

For sites j, k the two relations checked are

    R1 = a_j a†_k - exp(-i theta sgn(j-k)) a†_k a_j - delta_jk
    R2 = a_j a_k  - exp(+i theta sgn(j-k)) a_k a_j

Truncating the Fock space at n_max breaks ladder algebra on states where a
site is full, so residuals are measured only on rows and columns whose
occupations are all strictly below n_max.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fock_basis import FockBasis, enumerate_truncated
from .hamiltonian import build_anyon_ops


@dataclass(frozen=True)
class RelationResidual:
    theta: float
    j: int
    k: int
    relation: str
    max_error: float


def interior_indices(basis: FockBasis) -> np.ndarray:
    return np.nonzero(np.all(basis.states < basis.n_max, axis=1))[0]


def _restricted_max(m: sp.spmatrix, idx: np.ndarray) -> float:
    sub = m.tocsr()[idx][:, idx]
    return float(np.max(np.abs(sub.data))) if sub.nnz else 0.0


def relation_residuals(basis: FockBasis, theta: float,
                       string_sign: int = -1) -> list[RelationResidual]:
    idx = interior_indices(basis)
    ops = [build_anyon_ops(basis, s, theta, string_sign) for s in range(basis.L)]
    eye = sp.identity(basis.dim, dtype=complex, format="csr")
    out = []
    for j in range(basis.L):
        for k in range(basis.L):
            sgn = int(np.sign(j - k))
            cj, aj = ops[j][0].matrix, ops[j][1].matrix
            ck, ak = ops[k][0].matrix, ops[k][1].matrix
            r1 = aj @ ck - np.exp(-1j * theta * sgn) * (ck @ aj) - (eye if j == k else 0 * eye)
            r2 = aj @ ak - np.exp(1j * theta * sgn) * (ak @ aj)
            out.append(RelationResidual(theta, j, k, "a_j a+_k", _restricted_max(r1, idx)))
            out.append(RelationResidual(theta, j, k, "a_j a_k", _restricted_max(r2, idx)))
    return out


def check_algebra(L: int, n_max: int, thetas, string_sign: int = -1) -> list[RelationResidual]:
    basis = enumerate_truncated(L, n_max)
    res = []
    for th in thetas:
        res += relation_residuals(basis, float(th), string_sign)
    return res
