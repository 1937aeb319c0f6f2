from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horizonlab import spin as sp

HALF = Fraction(1, 2)


def test_rep_algebra():
    for j in sp.half_integers(3):
        r = sp.build_rep(j)
        jf = float(j)
        assert np.allclose(r.casimir, jf * (jf + 1) * np.eye(r.dim), atol=1e-12)
        comm = r.Jx @ r.Jy - r.Jy @ r.Jx
        assert np.allclose(comm, 1j * r.Jz, atol=1e-12)
    with pytest.raises(ValueError):
        sp.build_rep(0.3)
    assert sp.build_rep("3/2").dim == 4


def test_spin_coherent_examples():
    r = sp.build_rep(HALF)
    assert np.allclose(sp.spin_coherent(r, 0.0, 0.0).amplitudes, r.ket(HALF))
    flipped = sp.spin_coherent(r, np.pi, 0.0).amplitudes
    assert abs(abs(np.vdot(r.ket(-HALF), flipped)) - 1) < 1e-12
    big = sp.build_rep(2)
    for th, ph in ((0.3, 1.0), (2.0, -0.7)):
        v = sp.spin_coherent(big, th, ph).amplitudes
        J2 = big.Jx @ big.Jx + big.Jy @ big.Jy + big.Jz @ big.Jz
        assert np.vdot(v, J2 @ v).real == pytest.approx(6.0, abs=1e-12)


def test_spin_coherent_points_along_axis():
    r = sp.build_rep(Fraction(3, 2))
    th, ph = 1.1, 0.4
    n = (np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th))
    Jn = n[0] * r.Jx + n[1] * r.Jy + n[2] * r.Jz
    v = sp.spin_coherent(r, th, ph).amplitudes
    assert np.linalg.norm(Jn @ v - 1.5 * v) < 1e-12


def test_jtilde_identity_up_to_six():
    for jp in sp.half_integers(6):
        for j in sp.half_integers(6):
            space = sp.CoupledSpinSpace.build(jp, j)
            rhs = (space.jtot_sq - float(jp * (jp + 1)) * np.eye(space.dim)
                   - float(j * (j + 1)) * np.eye(space.dim))
            assert np.max(np.abs(space.jtilde - rhs)) <= 1e-12


@settings(max_examples=20, deadline=None)
@given(st.floats(0, np.pi), st.floats(0, 2 * np.pi))
def test_jtilde_rotation_invariant(theta, phi):
    space = sp.CoupledSpinSpace.build(Fraction(3, 2), 1)
    R = space.rotation(theta, phi)
    assert np.max(np.abs(R.conj().T @ space.jtilde @ R - space.jtilde)) <= 1e-10


def test_half_spin_pair():
    c = sp.classify_eigenstates(HALF, HALF)
    xs = sorted({round(e.eigenvalue, 12) for e in c.entries})
    assert xs == [-1.5, 0.5]
    singlet = [e for e in c.entries if abs(e.eigenvalue + 1.5) < 1e-12]
    assert len(singlet) == 1 and singlet[0].j_total == 0
    up = sp.CoupledSpinSpace.build(HALF, HALF)
    top = np.kron(up.particle.ket(HALF), up.hole.ket(HALF))
    assert np.linalg.norm(up.jtilde @ top - 0.5 * top) < 1e-12


def test_standard_state_eigenvalue():
    for jp in sp.half_integers(3):
        for j in (Fraction(3, 2), 2, Fraction(5, 2), 3):
            space = sp.CoupledSpinSpace.build(jp, j)
            v = np.kron(space.particle.ket(jp), space.hole.ket(j))
            assert np.linalg.norm(space.jtilde @ v - 2 * float(jp) * float(j) * v) < 1e-12
            c = sp.classify_eigenstates(jp, j)
            if jp > 0:
                assert set(c.kinds) == {"standard_up", "standard_down"}


def test_anomalous_state_for_unit_hole():
    for jp in (1, 2, 3):
        c = sp.classify_eigenstates(jp, 1)
        anom = c.of_kind("anomalous_j1")
        assert len(anom) == 1
        e = anom[0]
        assert e.eigenvalue == pytest.approx(-2.0, abs=1e-12) and e.m_total == 0 and e.j_total == jp
        space = sp.CoupledSpinSpace.build(jp, 1)
        P, H = space.particle, space.hole
        expect = (np.kron(P.ket(-1), H.ket(1)) - np.kron(P.ket(1), H.ket(-1))) / np.sqrt(2)
        assert abs(abs(np.vdot(expect, e.vector)) - 1) < 1e-10
        assert set(c.kinds) == {"standard_up", "standard_down", "anomalous_j1"}
        for J in sp.half_integers(4):
            if J == 0:
                continue
            f = sp.conservation_filter(c, J, 0.7, 0.2)
            assert not f.of_kind("anomalous_j1")[0].conserved


def test_half_hole_families():
    for jp in sp.half_integers(3):
        if jp == 0:
            continue
        c = sp.classify_eigenstates(jp, HALF)
        xs = sorted({e.eigenvalue for e in c.entries})
        assert np.allclose(xs, sorted([float(jp), -1 - float(jp)]), atol=1e-10)
        # j' = jp - 1/2 highest weight: (sqrt(2 jp) |jp, -1/2> - |jp - 1, +1/2>) / sqrt(2 jp + 1)
        # up to phase (Clebsch-Gordan oracle)
        minus = [e for e in c.of_kind("half_integer_minus") if e.m_total == jp - HALF][0]
        space = sp.CoupledSpinSpace.build(jp, HALF)
        P, H = space.particle, space.hole
        a = np.kron(P.ket(jp - 1), H.ket(HALF))
        b = np.kron(P.ket(jp), H.ket(-HALF))
        ca, cb = np.vdot(a, minus.vector), np.vdot(b, minus.vector)
        assert ca / cb == pytest.approx(-1 / np.sqrt(2 * float(jp)), abs=1e-10)
        assert abs(cb) ** 2 == pytest.approx(2 * float(jp) / (2 * float(jp) + 1), abs=1e-10)


def test_trivial_hole():
    c = sp.classify_eigenstates(Fraction(3, 2), 0)
    assert c.kinds == ["trivial"]


def test_bruteforce_agrees():
    for jp in sp.half_integers(2):
        for j in sp.half_integers(2):
            c = sp.classify_eigenstates(jp, j)
            counts = {}
            for e in c.entries:
                counts[round(e.eigenvalue, 8)] = counts.get(round(e.eigenvalue, 8), 0) + 1
            brute = {round(k, 8): v for k, v in sp.classify_bruteforce(jp, j).items()}
            assert counts == brute
            assert c.max_residual <= 1e-10


def test_conservation_examples():
    jp, j = Fraction(3, 2), 2
    c = sp.classify_eigenstates(jp, j)
    f = sp.conservation_filter(c, jp + j, 0.9, 2.1)
    up = f.of_kind("standard_up")[0]
    assert up.conserved and up.mother_state == (jp + j, jp + j)
    for e in f.entries:
        if e.conserved:
            assert e.mother_state[0] == e.mother_state[1]
    singlet = sp.conservation_filter(sp.classify_eigenstates(HALF, HALF), 0)
    zero = [e for e in singlet.entries if e.j_total == 0][0]
    assert zero.conserved and zero.orientation_arbitrary


def test_daughter_components_follow_linear_rule():
    jp, j = 1, Fraction(5, 2)
    f = sp.conservation_filter(sp.classify_eigenstates(jp, j), jp + j)
    for e in f.entries:
        if e.conserved:
            for m_p, m_h in sp.daughter_components(e, jp, j):
                assert abs(m_h) == j and abs(m_p + m_h) == jp + j
