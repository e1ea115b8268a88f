from __future__ import annotations

import math
from functools import reduce

import numpy as np
import pytest

from anyonjj.errors import ConfigError, DimensionMismatchError
from anyonjj.fock_basis import enumerate_sector, enumerate_truncated
from anyonjj.hamiltonian import (LatticeSpec, RegionLayout, build_anyon_ops, build_boson_ops,
                                 build_hamiltonian, build_hop_operator, build_number_operator,
                                 build_total_number)

THETAS = [0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4, math.pi]


# ---------------------------------------------------------------- dense oracle
def kron_hamiltonian(L, N, J, theta, U, periodic=False):
    """Dense reference built from single-site matrices with np.kron.

    Works in the full product space with cap N, then projects onto the
    N-particle sector in the package's canonical order.
    """
    d = N + 1
    a = np.diag(np.sqrt(np.arange(1, d)), 1)
    n = np.diag(np.arange(d, dtype=float))
    eye = np.eye(d)

    def site_op(op, i):
        return reduce(np.kron, [op if s == i else eye for s in range(L)])

    bs = [site_op(a, i) for i in range(L)]
    ns = [site_op(n, i) for i in range(L)]
    H = np.zeros((d**L, d**L), dtype=complex)
    bonds = [(j, j + 1) for j in range(L - 1)] + ([(L - 1, 0)] if periodic else [])
    for j, k in bonds:
        phase = np.diag(np.exp(1j * theta[j] * np.diag(ns[j])))
        hop = bs[j].T @ bs[k] @ phase
        H -= J * (hop + hop.conj().T)
    for i in range(L):
        H += U[i] / 2 * ns[i] @ (ns[i] - np.eye(d**L))
    basis = enumerate_sector(L, N)
    idx = basis.states @ (d ** np.arange(L - 1, -1, -1))
    return H[np.ix_(idx, idx)]


def test_two_site_matrix():
    b = enumerate_sector(2, 2)
    H = build_hamiltonian(LatticeSpec.uniform(2, J=1.0), b).toarray()
    off = H[~np.eye(3, dtype=bool)]
    assert np.allclose(off[np.abs(off) > 0], -math.sqrt(2))
    np.testing.assert_allclose(np.linalg.eigvalsh(H), [-2, 0, 2], atol=1e-12)


def test_two_site_interaction_only():
    b = enumerate_sector(2, 2)
    H = build_hamiltonian(LatticeSpec.uniform(2, J=0.0, U=0.7), b).toarray()
    np.testing.assert_allclose(H, np.diag([0.7, 0, 0.7]), atol=0)


def test_two_site_theta_pi_gauge():
    b = enumerate_sector(2, 2)
    H = build_hamiltonian(LatticeSpec.uniform(2, J=1.0, theta=math.pi), b).toarray()
    # hop (1,1) -> (2,0): destination held one particle, phase e^{i pi} = -1
    assert H[0, 1] == pytest.approx(math.sqrt(2), abs=1e-15)
    assert H[1, 2] == pytest.approx(-math.sqrt(2), abs=1e-15)
    np.testing.assert_allclose(np.linalg.eigvalsh(H), [-2, 0, 2], atol=1e-12)


@pytest.mark.parametrize("L,N", [(2, 3), (3, 3), (4, 3), (4, 4)])
@pytest.mark.parametrize("theta", THETAS)
def test_against_kron_oracle(L, N, theta):
    rng = np.random.default_rng(L * 10 + N)
    U = rng.uniform(0, 2, L)
    th = np.full(L, theta)
    spec = LatticeSpec(L=L, N=N, J=0.8, theta=th, U=U)
    H = build_hamiltonian(spec, enumerate_sector(L, N)).toarray()
    np.testing.assert_allclose(H, kron_hamiltonian(L, N, 0.8, th, U), atol=1e-12)


def test_periodic_against_kron_oracle():
    L, N = 4, 3
    th = np.array([0.3, 1.1, 2.0, 0.0])
    U = np.array([0.5, 1.0, 0.2, 0.0])
    spec = LatticeSpec(L=L, N=N, J=1.0, theta=th, U=U, boundary="periodic")
    H = build_hamiltonian(spec, enumerate_sector(L, N)).toarray()
    np.testing.assert_allclose(H, kron_hamiltonian(L, N, 1.0, th, U, periodic=True), atol=1e-12)


def test_bose_hubbard_spectrum_gauge_reduction():
    L, N = 4, 4
    spec = LatticeSpec.uniform(L, J=1.0, U=1.3)
    E = np.linalg.eigvalsh(build_hamiltonian(spec, enumerate_sector(L, N)).toarray())
    ref = np.linalg.eigvalsh(kron_hamiltonian(L, N, 1.0, np.zeros(L), np.full(L, 1.3)))
    np.testing.assert_allclose(E, ref, atol=1e-10)


def test_bond_theta_convention():
    layout = RegionLayout((1, 1, 1), theta=(0.0, math.pi, 0.0))
    left = LatticeSpec.from_layout(layout, J=1.0)
    right = LatticeSpec.from_layout(layout, J=1.0, bond_theta="right")
    assert [left.bond_phase(b) for b in range(2)] == [0.0, math.pi]
    assert [right.bond_phase(b) for b in range(2)] == [math.pi, 0.0]


@pytest.mark.parametrize("theta", THETAS)
def test_hermitian_and_number_conserving_on_truncated(theta):
    b = enumerate_truncated(3, 3)
    spec = LatticeSpec(L=3, N=0, J=[1.0, 0.6], theta=theta, U=[0.5, 1, 2])
    H = build_hamiltonian(spec, b)
    assert H.hermiticity_error() <= 1e-12
    Ntot = build_total_number(b).matrix
    comm = (H.matrix @ Ntot - Ntot @ H.matrix)
    assert comm.nnz == 0 or np.max(np.abs(comm.data)) == 0.0


def test_number_operator():
    b = enumerate_sector(2, 2)
    np.testing.assert_array_equal(build_number_operator(b, 0).diagonal().real, [2, 1, 0])
    b = enumerate_sector(4, 3)
    assert build_total_number(b).diagonal().real.sum() == 3 * b.dim
    with pytest.raises(IndexError):
        build_number_operator(b, 4)


def test_number_expectation_bounds():
    b = enumerate_sector(4, 3)
    rng = np.random.default_rng(3)
    psi = rng.normal(size=b.dim) + 1j * rng.normal(size=b.dim)
    psi /= np.linalg.norm(psi)
    for i in range(4):
        v = np.vdot(psi, build_number_operator(b, i) @ psi).real
        assert 0 <= v <= 3


def test_hop_operator_matches_kron():
    b = enumerate_sector(3, 2)
    h = build_hop_operator(b, 0, 2).toarray()
    d = 3
    a = np.diag(np.sqrt(np.arange(1, d)), 1)
    eye = np.eye(d)
    full = np.kron(np.kron(a.T, eye), a)
    idx = b.states @ (d ** np.arange(2, -1, -1))
    np.testing.assert_allclose(h, full[np.ix_(idx, idx)], atol=1e-15)


def test_boson_ops_single_site():
    b = enumerate_truncated(1, 2)
    # canonical order is (2), (1), (0); reorder to (0), (1), (2)
    order = np.argsort(b.states[:, 0])
    cr, an = build_boson_ops(b, 0)
    A = an.toarray()[np.ix_(order, order)]
    np.testing.assert_allclose(A, [[0, 1, 0], [0, 0, math.sqrt(2)], [0, 0, 0]], atol=1e-15)
    np.testing.assert_array_equal(cr.toarray(), an.toarray().conj().T)


def test_boson_commutator_interior():
    b = enumerate_truncated(2, 3)
    cr, an = build_boson_ops(b, 1)
    comm = (an.matrix @ cr.matrix - cr.matrix @ an.matrix).toarray()
    inner = np.nonzero(b.states[:, 1] < 3)[0]
    np.testing.assert_allclose(comm[np.ix_(inner, inner)], np.eye(len(inner)), atol=1e-14)


def test_boson_ops_need_truncated_basis():
    with pytest.raises(DimensionMismatchError):
        build_boson_ops(enumerate_sector(2, 2), 0)


def test_anyon_reduces_to_boson():
    b = enumerate_truncated(3, 2)
    for site in range(3):
        _, a = build_anyon_ops(b, site, 0.0)
        _, bb = build_boson_ops(b, site)
        np.testing.assert_array_equal(a.toarray(), bb.toarray())
    for theta in THETAS:
        _, a0 = build_anyon_ops(b, 0, theta)
        _, b0 = build_boson_ops(b, 0)
        np.testing.assert_array_equal(a0.toarray(), b0.toarray())


def _interior(b):
    return np.nonzero(np.all(b.states < b.n_max, axis=1))[0]


def test_two_site_exchange_relation():
    b = enumerate_truncated(2, 2)
    th = math.pi / 2
    _, a0 = build_anyon_ops(b, 0, th)
    _, a1 = build_anyon_ops(b, 1, th)
    R = (a1.matrix @ a0.matrix - np.exp(1j * th) * (a0.matrix @ a1.matrix)).toarray()
    idx = _interior(b)
    assert np.max(np.abs(R[np.ix_(idx, idx)])) <= 1e-12


def test_pseudofermion_anticommutation():
    b = enumerate_truncated(2, 3)
    _, a0 = build_anyon_ops(b, 0, math.pi)
    _, a1 = build_anyon_ops(b, 1, math.pi)
    R = (a0.matrix @ a1.matrix + a1.matrix @ a0.matrix).toarray()
    idx = _interior(b)
    assert np.max(np.abs(R[np.ix_(idx, idx)])) <= 1e-12


@pytest.mark.parametrize("theta", THETAS)
def test_anyon_hopping_reproduces_hamiltonian(theta):
    """With the +theta string, -J sum a†_j a_{j+1} + h.c. is the bosonic hopping."""
    L, n_max = 3, 3
    b = enumerate_truncated(L, n_max)
    ops = [build_anyon_ops(b, s, theta, string_sign=+1) for s in range(L)]
    K = sum((ops[j][0].matrix @ ops[j + 1][1].matrix) for j in range(L - 1))
    K = -(K + K.conj().T)
    H = build_hamiltonian(LatticeSpec(L=L, N=0, J=1.0, theta=theta), b).matrix
    idx = _interior(b)
    diff = (K - H).toarray()[np.ix_(idx, idx)]
    assert np.max(np.abs(diff)) <= 1e-12


def test_spec_validation():
    with pytest.raises(ConfigError, match="theta must lie in"):
        LatticeSpec.uniform(4, theta=4.0)
    with pytest.raises(ConfigError):
        LatticeSpec.uniform(4, U=-1.0)
    with pytest.raises(ConfigError):
        LatticeSpec(L=4, N=4, J=[1.0, 1.0])
    with pytest.raises(ConfigError):
        LatticeSpec(L=8, N=8, layout=RegionLayout((30, 4, 30)))
    assert len(LatticeSpec.uniform(5).bonds()) == 4
    assert len(LatticeSpec.uniform(5, boundary="periodic").bonds()) == 5


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        build_hamiltonian(LatticeSpec.uniform(3), enumerate_sector(4, 3))
    with pytest.raises(DimensionMismatchError):
        build_hamiltonian(LatticeSpec.uniform(3, N=3), enumerate_sector(3, 2))
