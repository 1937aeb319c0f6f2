"""su(2) representations and the allowed particle + daughter spin states.

Product spaces are ordered particle (x) hole.  Within one irrep the basis is
|j, m> with m = j, j-1, ..., -j.

The candidate post-emission states are alpha (x) |j, j> + beta (x) |j, -j>
(up to a global rotation).  ``classify_eigenstates`` finds every such state
that is also an eigenvector of

    Jt = J+ (x) J- + J- (x) J+ + 2 Jz (x) Jz = Jtot^2 - J^2 (x) 1 - 1 (x) J^2,

labels it, and ``conservation_filter`` keeps those whose total spin along the
mother's axis matches the mother.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np
from scipy.linalg import expm, null_space

from .haar import PureState

__all__ = [
    "SpinRep",
    "CoupledSpinSpace",
    "ClassifiedState",
    "EvaporationClassification",
    "build_rep",
    "rotation",
    "spin_coherent",
    "classify_eigenstates",
    "classify_bruteforce",
    "conservation_filter",
    "half_integers",
    "daughter_components",
]

EIG_TOL = 1e-10
CLASSES = ("standard_up", "standard_down", "anomalous_j1",
           "half_integer_plus", "half_integer_minus", "trivial")


def _half(j) -> Fraction:
    exact = Fraction(j) if isinstance(j, str) else j
    f = Fraction(exact).limit_denominator(2)
    if f < 0 or abs(float(f) - float(exact)) > 1e-12:
        raise ValueError(f"{j} is not a non-negative half-integer")
    return f


def half_integers(upto):
    """0, 1/2, 1, ..., upto."""
    return [Fraction(k, 2) for k in range(int(2 * _half(upto)) + 1)]


@dataclass(frozen=True)
class SpinRep:
    j: Fraction
    Jz: np.ndarray
    Jplus: np.ndarray
    Jminus: np.ndarray

    @property
    def dim(self) -> int:
        return self.Jz.shape[0]

    @property
    def m_values(self) -> np.ndarray:
        return np.diag(self.Jz).real

    @property
    def Jx(self):
        return 0.5 * (self.Jplus + self.Jminus)

    @property
    def Jy(self):
        return (self.Jplus - self.Jminus) / 2j

    @property
    def casimir(self):
        return self.Jplus @ self.Jminus + self.Jz @ self.Jz - self.Jz

    def ket(self, m):
        v = np.zeros(self.dim, dtype=complex)
        v[int(round(float(self.j - _m(m))))] = 1.0
        return v


def _m(m):
    return Fraction(m).limit_denominator(2)


def build_rep(j) -> SpinRep:
    """Spin-j matrices; J+ |j,m> = sqrt(j(j+1) - m(m+1)) |j,m+1>."""
    j = _half(j)
    m = np.array([float(j) - k for k in range(int(2 * j) + 1)])
    jf = float(j)
    Jz = np.diag(m).astype(complex)
    Jp = np.diag(np.sqrt(jf * (jf + 1) - m[1:] * (m[1:] + 1)), 1).astype(complex)
    return SpinRep(j, Jz, Jp, Jp.conj().T.copy())


def rotation(rep: SpinRep, theta, phi) -> np.ndarray:
    """R(theta, phi) = exp(-i phi Jz) exp(-i theta Jy), mapping z onto n(theta, phi)."""
    return expm(-1j * phi * rep.Jz) @ expm(-1j * theta * rep.Jy)


def spin_coherent(rep: SpinRep, theta, phi) -> PureState:
    return PureState(rotation(rep, theta, phi) @ rep.ket(rep.j))


def _kron_id(A, d):
    return np.kron(A, np.eye(d))


def _id_kron(d, A):
    return np.kron(np.eye(d), A)


@dataclass(frozen=True)
class CoupledSpinSpace:
    particle: SpinRep
    hole: SpinRep

    @classmethod
    def build(cls, j_p, j):
        return cls(build_rep(j_p), build_rep(j))

    @property
    def dim(self):
        return self.particle.dim * self.hole.dim

    def total(self, name):
        a, b = self.particle, self.hole
        return _kron_id(getattr(a, name), b.dim) + _id_kron(a.dim, getattr(b, name))

    @property
    def jtilde(self):
        a, b = self.particle, self.hole
        return (np.kron(a.Jplus, b.Jminus) + np.kron(a.Jminus, b.Jplus)
                + 2 * np.kron(a.Jz, b.Jz))

    @property
    def jtot_sq(self):
        Jx, Jy, Jz = self.total("Jx"), self.total("Jy"), self.total("Jz")
        return Jx @ Jx + Jy @ Jy + Jz @ Jz

    def jtot_n(self, theta, phi):
        """Total angular momentum along n(theta, phi)."""
        n = (np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta))
        return n[0] * self.total("Jx") + n[1] * self.total("Jy") + n[2] * self.total("Jz")

    def rotation(self, theta, phi):
        return np.kron(rotation(self.particle, theta, phi), rotation(self.hole, theta, phi))

    def ansatz_basis(self):
        """Orthonormal columns spanning {alpha (x) |j,j> + beta (x) |j,-j>}."""
        top, bottom = self.hole.ket(self.hole.j), self.hole.ket(-self.hole.j)
        cols = [np.kron(e, top) for e in np.eye(self.particle.dim)]
        if self.hole.j > 0:
            cols += [np.kron(e, bottom) for e in np.eye(self.particle.dim)]
        return np.array(cols, dtype=complex).T

    def jtilde_eigenvalues(self):
        """x = j'(j'+1) - jp(jp+1) - j(j+1) for each coupled j'."""
        jp, j = self.particle.j, self.hole.j
        out = []
        jt = abs(jp - j)
        while jt <= jp + j:
            out.append((jt, float(jt * (jt + 1) - jp * (jp + 1) - j * (j + 1))))
            jt += 1
        return out


@dataclass(frozen=True)
class ClassifiedState:
    vector: np.ndarray
    eigenvalue: float
    kind: str
    j_total: Fraction
    m_total: Fraction
    residual: float
    conserved: bool = False
    mother_state: tuple | None = None
    orientation_arbitrary: bool = False
    axis: tuple = (0.0, 0.0)


@dataclass(frozen=True)
class EvaporationClassification:
    j_p: Fraction
    j: Fraction
    entries: tuple = field(default_factory=tuple)

    def of_kind(self, kind):
        return [e for e in self.entries if e.kind == kind]

    @property
    def kinds(self):
        return sorted({e.kind for e in self.entries})

    @property
    def max_residual(self):
        return max((e.residual for e in self.entries), default=0.0)


def _canonical(v):
    i = int(np.argmax(np.abs(v)))
    v = v * (abs(v[i]) / v[i])
    return v / np.linalg.norm(v)


def _label(j_p, j, x, m_tot):
    jp, jh = float(j_p), float(j)
    if j == 0:
        return "trivial"
    if abs(x - 2 * jp * jh) < 1e-9 and abs(abs(m_tot) - (jp + jh)) < 1e-9:
        return "standard_up" if m_tot > 0 else "standard_down"
    if j == Fraction(1, 2):
        if abs(x - jp) < 1e-9:
            return "half_integer_plus"
        if abs(x + 1 + jp) < 1e-9:
            return "half_integer_minus"
    if j == 1 and abs(x + 2) < 1e-9:
        return "anomalous_j1"
    return "unclassified"


def classify_eigenstates(j_p, j) -> EvaporationClassification:
    """Every Jt eigenvector inside the two-term ansatz, split by Jtot_z.

    For each admissible eigenvalue x the solutions c of (Jt - x) B c = 0 are
    found as a null space (B spans the ansatz).  Jtot_z preserves each
    solution space, so diagonalising it there yields definite (j', m') states.
    """
    space = CoupledSpinSpace.build(j_p, j)
    Jt, Jz_tot = space.jtilde, space.total("Jz")
    B = space.ansatz_basis()
    entries = []
    for jprime, x in space.jtilde_eigenvalues():
        N = null_space((Jt - x * np.eye(space.dim)) @ B, rcond=1e-10)
        if N.shape[1] == 0:
            continue
        V = B @ N
        V, _ = np.linalg.qr(V)
        mz, W = np.linalg.eigh(V.conj().T @ Jz_tot @ V)
        for mval, w in zip(mz, W.T):
            v = _canonical(V @ w)
            res = float(np.linalg.norm(Jt @ v - x * v))
            m_tot = Fraction(round(2 * mval), 2)
            entries.append(ClassifiedState(v, x, _label(space.particle.j, space.hole.j, x, m_tot),
                                           jprime, m_tot, res))
    entries.sort(key=lambda e: (-e.eigenvalue, -e.m_total))
    return EvaporationClassification(space.particle.j, space.hole.j, tuple(entries))


def classify_bruteforce(j_p, j, tol=1e-8) -> dict:
    """Independent route: full eigendecomposition of Jt intersected with the ansatz.

    Returns {x: dimension of (Jt eigenspace at x) intersected with the ansatz},
    using principal angles between the two subspaces.
    """
    space = CoupledSpinSpace.build(j_p, j)
    w, V = np.linalg.eigh(space.jtilde)
    B = space.ansatz_basis()
    out = {}
    for x in np.unique(np.round(w, 8)):
        E = V[:, np.abs(w - x) < 1e-6]
        s = np.linalg.svd(E.conj().T @ B, compute_uv=False)
        k = int(np.sum(s > 1 - tol))
        if k:
            out[float(x)] = k
    return out


def conservation_filter(classification: EvaporationClassification, mother_J, theta=0.0, phi=0.0):
    """Mark entries whose total spin can be the mother's coherent state along +-n.

    An entry survives when j' equals the mother's J and |m'| = J; the state
    is then rotated onto the mother's axis and its eigenvalue of Jtot . n is
    re-checked.  A j' = 0 survivor leaves the axis undetermined.
    """
    J = _half(mother_J)
    space = CoupledSpinSpace.build(classification.j_p, classification.j)
    R = space.rotation(theta, phi)
    Jn = space.jtot_n(theta, phi)
    out = []
    for e in classification.entries:
        ok = e.j_total == J and abs(e.m_total) == J
        if ok:
            v = R @ e.vector
            ok = np.linalg.norm(Jn @ v - float(e.m_total) * v) < EIG_TOL
        out.append(replace(
            e,
            conserved=bool(ok),
            mother_state=(e.j_total, abs(e.m_total)) if ok else None,
            orientation_arbitrary=bool(ok and J == 0),
            axis=(theta, phi) if e.m_total >= 0 else (np.pi - theta, phi + np.pi),
        ))
    return replace(classification, entries=tuple(out))


def daughter_components(entry: ClassifiedState, j_p, j, tol=1e-12):
    """(particle m, hole m) pairs carrying weight in an entry's vector."""
    dp, dh = int(2 * _half(j_p)) + 1, int(2 * _half(j)) + 1
    amp = entry.vector.reshape(dp, dh)
    idx = np.argwhere(np.abs(amp) > tol)
    return [(_half(j_p) - int(a), _half(j) - int(b)) for a, b in idx]
