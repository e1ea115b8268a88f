from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
import scipy.sparse.linalg as spla
from hypothesis import given, settings, strategies as st

from anyonjj.errors import ConvergenceError
from anyonjj.fock_basis import enumerate_sector
from anyonjj.groundstate import (DegenerateGroundStateWarning, GapRow, QuantumState,
                                 excitation_gap, fix_global_phase, gap_scan, lanczos_lowest,
                                 lowest_eigenpairs, write_gap_table)
from anyonjj.hamiltonian import LatticeSpec, RegionLayout, build_hamiltonian
from anyonjj.tables import read_csv


def hamiltonian(spec):
    return build_hamiltonian(spec, enumerate_sector(spec.L, spec.N))


@pytest.mark.parametrize("method", ["dense", "lanczos"])
def test_two_site_ground_energy(method):
    sl = lowest_eigenpairs(hamiltonian(LatticeSpec.uniform(2, J=1.0)), 1, method=method)
    assert sl.energies[0] == pytest.approx(-2.0, abs=1e-10)
    # (|20> + sqrt2 |11> + |02>) / 2, phase fixed so the largest entry is positive
    np.testing.assert_allclose(sl.ground.amplitudes, [0.5, math.sqrt(0.5), 0.5], atol=1e-9)


@pytest.mark.parametrize("theta", [0.0, math.pi / 2, math.pi])
def test_atomic_limit_ground_energy(theta):
    H = hamiltonian(LatticeSpec.uniform(5, J=0.0, U=1.0, theta=theta))
    assert lowest_eigenpairs(H, 1).energies[0] == 0.0


@pytest.mark.parametrize("u", [0.3, 1.0, 2.5])
def test_atomic_limit_gap_equals_u(u):
    assert excitation_gap(hamiltonian(LatticeSpec.uniform(4, J=0.0, U=u))) == pytest.approx(u, abs=1e-12)


CASES = [
    LatticeSpec.uniform(6, J=0.3, U=1.0),
    LatticeSpec.uniform(6, J=0.5, U=1.0, theta=math.pi / 2),
    LatticeSpec.uniform(6, J=0.5, U=1.0, theta=math.pi),
    LatticeSpec.uniform(7, N=4, J=1.0, U=0.5, theta=math.pi / 4, boundary="periodic"),
    LatticeSpec.from_layout(RegionLayout((2, 2, 2), (0, math.pi, 0), (0.5, 0.5, 0.5))),
    LatticeSpec.from_layout(RegionLayout((3, 2, 3), (0, 0, 0), (0.5, 10, 0.5)), N=5),
]


@pytest.mark.parametrize("spec", CASES, ids=lambda s: f"L{s.L}N{s.N}th{s.theta[s.L // 2]:.2f}")
def test_lanczos_matches_dense(spec):
    H = hamiltonian(spec)
    assert H.dim <= 2000
    d = lowest_eigenpairs(H, 3, method="dense")
    lz = lowest_eigenpairs(H, 3, method="lanczos")
    np.testing.assert_allclose(lz.energies, d.energies, atol=1e-8)
    # ground vectors agree once the global phase is fixed
    assert np.linalg.norm(lz.ground.amplitudes - d.ground.amplitudes) <= 1e-7
    assert np.all(lz.residuals <= 1e-8 * np.maximum(1, np.abs(lz.energies)))


def test_lanczos_large_sector_against_eigsh():
    spec = LatticeSpec.from_layout(RegionLayout((3, 2, 3), (0, 0, 0), (0.5, 10, 0.5)), J=1.0)
    H = hamiltonian(spec)
    assert H.dim == 6435
    sl = lowest_eigenpairs(H, 2)
    assert sl.method == "lanczos"
    ref = np.sort(spla.eigsh(H.matrix, k=2, which="SA", tol=1e-12)[0])
    np.testing.assert_allclose(sl.energies, ref, atol=1e-8)


def test_lanczos_resolves_degenerate_pair():
    # block-diagonal test operator with an exactly doubled lowest level
    d = np.array([-1.0, -1.0, 0.5, 2.0, 3.0, 4.0])
    E, V, _ = lanczos_lowest(lambda v: d * v, 6, k=3)
    np.testing.assert_allclose(E, [-1, -1, 0.5], atol=1e-10)


def test_convergence_error_reports_residual():
    H = hamiltonian(LatticeSpec.uniform(7, J=1.0, U=1.0))
    with pytest.raises(ConvergenceError) as info:
        lowest_eigenpairs(H, 1, method="lanczos", max_iter=5)
    assert info.value.residual is not None and info.value.residual > 0


def test_degenerate_ground_state_is_flagged():
    H = hamiltonian(LatticeSpec.uniform(3, N=1, J=0.0))
    with pytest.warns(DegenerateGroundStateWarning):
        sl = lowest_eigenpairs(H, 2)
    assert sl.degenerate


def test_gap_shift_invariance():
    H = hamiltonian(LatticeSpec.uniform(6, J=0.4, U=1.0, theta=math.pi / 4))
    g = excitation_gap(H)
    assert excitation_gap(H.shifted(12.5)) == pytest.approx(g, abs=1e-10)
    assert excitation_gap(H.shifted(-3.0)) == pytest.approx(g, abs=1e-10)


_H_VAR = hamiltonian(LatticeSpec.uniform(5, J=0.7, U=1.2, theta=math.pi / 3))
_E0_VAR = lowest_eigenpairs(_H_VAR, 1).energies[0]


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_variational_bound(seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=_H_VAR.dim) + 1j * rng.normal(size=_H_VAR.dim)
    psi = QuantumState(_H_VAR.basis, v).normalized()
    assert psi.expectation(_H_VAR).real >= _E0_VAR - 1e-8


def test_global_phase_rule():
    v = np.array([0.1j, -0.7, 0.3 + 0.2j])
    w = fix_global_phase(v)
    assert w[1] == pytest.approx(0.7) and w[1].imag == 0
    np.testing.assert_allclose(np.abs(w), np.abs(v))
    # ties resolved towards the lowest index
    w = fix_global_phase(np.array([1j, -1.0]) / math.sqrt(2))
    assert w[0].real > 0 and w[0].imag == 0


def test_gap_decreases_initially():
    g0 = excitation_gap(hamiltonian(LatticeSpec.uniform(6, J=0.0, U=1.0)))
    g1 = excitation_gap(hamiltonian(LatticeSpec.uniform(6, J=0.05, U=1.0)))
    assert g1 < g0


@pytest.fixture(scope="module")
def scan():
    J = np.round(np.linspace(0, 0.6, 13), 12)
    thetas = [0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4, math.pi]
    return gap_scan(LatticeSpec.uniform(6, U=1.0), J, thetas, workers=4)


def test_scan_layout(scan):
    assert len(scan) == 65
    assert [r.theta for r in scan[:13]] == [0.0] * 13
    assert scan[1].J == pytest.approx(0.05)


def test_scan_atomic_row(scan):
    for r in scan:
        if r.J == 0:
            assert r.gap == pytest.approx(1.0, abs=1e-10)


def test_scan_theta_pi_stays_gapped(scan):
    gaps = [r.gap for r in scan if r.theta == math.pi]
    assert min(gaps) > 0.25


@pytest.mark.parametrize("J", [0.2, 0.3])
def test_theta_ordering_near_gap_minimum(scan, J):
    """At L=6 the theta=pi gap exceeds the theta=0 gap only near the theta=0 minimum."""
    g = {r.theta: r.gap for r in scan if abs(r.J - J) < 1e-12}
    assert g[math.pi] > g[0.0]


def test_scan_threads_match_serial(scan):
    J = np.round(np.linspace(0, 0.6, 13), 12)
    serial = gap_scan(LatticeSpec.uniform(6, U=1.0), J[:4], [0.0, math.pi], workers=1)
    par = [r for r in scan if r.theta in (0.0, math.pi) and r.J in J[:4]]
    assert serial == par


def test_write_gap_table(tmp_path):
    rows = [GapRow(0.0, 0.0, 0.0, 1.0), GapRow(math.pi, 0.5, -1.25, -0.5)]
    path = write_gap_table(rows, tmp_path / "gaps.csv")
    back = read_csv(path)
    assert list(back[0]) == ["theta", "J", "E0", "E1", "gap"]
    assert float(back[1]["theta"]) == math.pi
    assert float(back[1]["gap"]) == 0.75
