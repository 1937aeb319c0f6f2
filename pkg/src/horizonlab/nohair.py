"""Classical black-hole states, irreducible mass and entropy models.

States live on an integer lattice so that conservation bookkeeping is exact:
mass and energy are counted in units of ``delta``, charge in units of
``charge_quantum`` and angular momentum in units of ``spin_quantum`` (1/2 by
default).  Planck units throughout (G = c = hbar = k_B = 1).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np

__all__ = [
    "InvalidState",
    "ChannelForbidden",
    "Units",
    "NoHairVector",
    "ParticleTriple",
    "EntropyModel",
    "SCHWARZSCHILD",
    "KERR_NEWMAN",
    "irreducible_mass",
    "irreducible_mass_mqj",
    "horizon_irreducible_mass",
    "is_subextremal_mqj",
    "entropy",
    "daughter",
    "try_daughter",
    "dumps_states",
    "loads_states",
]

# slack for the extremal boundary when working with real (float) triples
EXTREMAL_TOL = 1e-12


class InvalidState(ValueError):
    """A no-hair triple violating M >= 0 or subextremality."""


class ChannelForbidden(ValueError):
    """An emission whose daughter would not be a valid black hole."""

    def __init__(self, message, state=None, particle=None):
        super().__init__(message)
        self.state = state
        self.particle = particle


@dataclass(frozen=True)
class Units:
    """Lattice spacing for mass/energy, charge and angular momentum."""

    delta: float
    charge_quantum: float = 1.0
    spin_quantum: float = 0.5

    def __post_init__(self):
        for name in ("delta", "charge_quantum", "spin_quantum"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @cached_property
    def _coefficients(self):
        # M^4 >= Q^2 M^2 + J^2 scaled to integers: c4 m^4 >= c2 q^2 m^2 + c0 j^2
        d2, e2, s2 = (Fraction(v).limit_denominator(10**12) ** 2
                      for v in (self.delta, self.charge_quantum, self.spin_quantum))
        A, Da = d2.numerator, d2.denominator
        B, Db = e2.numerator, e2.denominator
        C, Dc = s2.numerator, s2.denominator
        return A * A * Db * Dc, A * B * Da * Dc, C * Da * Da * Db

    def subextremal(self, m: int, q: int, j: int) -> bool:
        """Exact test of M^4 >= Q^2 M^2 + J^2 on lattice integers."""
        if m < 0:
            return False
        if m == 0:
            return q == 0 and j == 0
        c4, c2, c0 = self._coefficients
        m2 = m * m
        return c4 * m2 * m2 >= c2 * q * q * m2 + c0 * j * j

    def to_dict(self):
        return {"delta": self.delta, "charge_quantum": self.charge_quantum,
                "spin_quantum": self.spin_quantum}


@dataclass(frozen=True)
class NoHairVector:
    """Black-hole label X = (M, Q, J) along the axis ``(theta, phi)``.

    ``j_units`` is the signed projection of the spin on the stored axis, so a
    hole whose spin has been driven through zero by emissions keeps a fixed
    reference axis (the magnitude is ``abs(J)``).  This keeps the daughter
    rule exactly linear.
    """

    m_units: int
    q_units: int
    j_units: int
    units: Units
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        for name in ("m_units", "q_units", "j_units"):
            v = getattr(self, name)
            if isinstance(v, (bool, float)) or int(v) != v:
                raise TypeError(f"{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if not self.units.subextremal(self.m_units, self.q_units, self.j_units):
            raise InvalidState(f"not a valid black hole: {self.mqj}")

    @classmethod
    def from_real(cls, M, Q=0.0, J=0.0, units=None, theta=0.0, phi=0.0):
        """Snap real (M, Q, J) onto the lattice; raises if they are off-grid."""
        units = units if units is not None else Units(delta=0.1)
        ints = []
        for value, step in zip((M, Q, J), (units.delta, units.charge_quantum, units.spin_quantum)):
            k = round(value / step)
            if abs(k * step - value) > 1e-9 * max(1.0, abs(value)):
                raise ValueError(f"{value} is not a multiple of {step}")
            ints.append(k)
        return cls(*ints, units=units, theta=theta, phi=phi)

    @property
    def M(self) -> float:
        return self.m_units * self.units.delta

    @property
    def Q(self) -> float:
        return self.q_units * self.units.charge_quantum

    @property
    def J(self) -> float:
        return self.j_units * self.units.spin_quantum

    @property
    def mqj(self):
        return (self.M, self.Q, self.J)

    @property
    def key(self):
        return (self.m_units, self.q_units, self.j_units)

    def is_zero(self) -> bool:
        return self.m_units == 0

    def to_dict(self):
        return {"m_units": self.m_units, "q_units": self.q_units,
                "j_half_units": self.j_units, "theta": self.theta, "phi": self.phi}

    def __repr__(self):
        return f"NoHairVector(M={self.M:g}, Q={self.Q:g}, J={self.J:g})"


@dataclass(frozen=True, order=True)
class ParticleTriple:
    """Emission quantum x = (eps, q, j) in lattice units.

    ``j`` is signed, measured along the mother's axis.
    """

    eps_units: int
    q_units: int = 0
    j_units: int = 0

    def __post_init__(self):
        if self.eps_units < 0:
            raise ValueError("particle energy must be non-negative")

    def real(self, units: Units):
        return (self.eps_units * units.delta, self.q_units * units.charge_quantum,
                self.j_units * units.spin_quantum)

    def is_null(self) -> bool:
        return self.eps_units == 0 and self.q_units == 0 and self.j_units == 0

    def to_dict(self):
        return {"eps_units": self.eps_units, "q_units": self.q_units,
                "j_half_units": self.j_units}


def is_subextremal_mqj(M, Q, J, tol=EXTREMAL_TOL):
    """Vectorised subextremality test for real triples."""
    M, Q, J = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (M, Q, J)))
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = M**4 - Q**2 * M**2 - J**2
    zero = (M == 0) & (Q == 0) & (J == 0)
    ok = (M > 0) & (disc >= -tol * np.maximum(1.0, M**4))
    return ok | zero


def irreducible_mass_mqj(M, Q=0.0, J=0.0):
    """Irreducible mass of a Kerr-Newman hole, vectorised over real inputs.

    I = 1/2 sqrt(2M^2 - Q^2 + 2M sqrt(M^2 - Q^2 - a^2)),  a = J/M.
    """
    M, Q, J = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (M, Q, J)))
    if not np.all(is_subextremal_mqj(M, Q, J)):
        raise InvalidState("irreducible mass requested for a super-extremal or negative-mass state")
    with np.errstate(divide="ignore", invalid="ignore"):
        a2 = np.where(M > 0, (J / np.where(M > 0, M, 1.0)) ** 2, 0.0)
        inner = np.sqrt(np.maximum(M * M - Q * Q - a2, 0.0))
        out = 0.5 * np.sqrt(np.maximum(2 * M * M - Q * Q + 2 * M * inner, 0.0))
    return out if out.ndim else float(out)


def horizon_irreducible_mass(M, Q=0.0, J=0.0):
    """Independent route: I = 1/2 sqrt(r_+^2 + a^2) with r_+ = M + sqrt(M^2 - Q^2 - a^2)."""
    if M == 0:
        return 0.0
    a = J / M
    disc = M * M - Q * Q - a * a
    if disc < -EXTREMAL_TOL * max(1.0, M**2):
        raise InvalidState("super-extremal state has no horizon")
    r_plus = M + math.sqrt(max(disc, 0.0))
    return 0.5 * math.sqrt(r_plus**2 + a * a)


def _irreducible_scalar(M, Q, J):
    # same expression order as irreducible_mass_mqj, on Python floats
    a2 = (J / M) ** 2 if M > 0 else 0.0
    inner = math.sqrt(max(M * M - Q * Q - a2, 0.0))
    return 0.5 * math.sqrt(max(2 * M * M - Q * Q + 2 * M * inner, 0.0))


def irreducible_mass(X: NoHairVector) -> float:
    return _irreducible_scalar(*X.mqj)


def _area_law(I):
    return 4.0 * np.pi * np.square(I)


@dataclass(frozen=True)
class EntropyModel:
    """Entropy S(X) = u(I(X)).

    Both built-in kinds use the Bekenstein-Hawking law u(I) = 4 pi I^2, which
    is 4 pi M^2 for a neutral non-rotating hole; ``schwarzschild`` is the
    same function under the name used for neutral runs.  ``custom_u`` takes any
    monotone u; the gauge u(0) = 0 is the caller's responsibility.
    """

    kind: str = "kerr_newman"
    u: Callable | None = field(default=None, compare=True)

    KINDS = ("schwarzschild", "kerr_newman", "custom_u")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown entropy model {self.kind!r}")
        if self.kind == "custom_u" and self.u is None:
            raise ValueError("custom_u needs a function u(I)")

    @classmethod
    def custom(cls, u):
        return cls("custom_u", u)

    def u_of(self, I):
        return (self.u if self.kind == "custom_u" else _area_law)(I)

    def evaluate(self, M, Q=0.0, J=0.0):
        """S at real (M, Q, J); broadcasts over arrays."""
        return self.u_of(irreducible_mass_mqj(M, Q, J))

    def __call__(self, X: NoHairVector) -> float:
        return _entropy_of_state(self, X.key, X.units)

    def describe(self) -> str:
        return self.kind if self.kind != "custom_u" else f"custom_u({getattr(self.u, '__name__', 'u')})"


@lru_cache(maxsize=1 << 16)
def _entropy_of_state(model, key, units):
    m, q, j = key
    I = _irreducible_scalar(m * units.delta, q * units.charge_quantum, j * units.spin_quantum)
    return float(model.u_of(I))


SCHWARZSCHILD = EntropyModel("schwarzschild")
KERR_NEWMAN = EntropyModel("kerr_newman")


def entropy(model: EntropyModel, X: NoHairVector) -> float:
    return model(X)


def try_daughter(X: NoHairVector, x: ParticleTriple):
    """Daughter X - x, or None when the channel is forbidden."""
    m = X.m_units - x.eps_units
    q = X.q_units - x.q_units
    j = X.j_units - x.j_units
    if not X.units.subextremal(m, q, j):
        return None
    return NoHairVector(m, q, j, X.units, X.theta, X.phi)


def daughter(X: NoHairVector, x: ParticleTriple) -> NoHairVector:
    """Linear backreaction X -> X - x along the mother's axis."""
    Y = try_daughter(X, x)
    if Y is None:
        raise ChannelForbidden(f"emission {x} from {X} leaves an invalid daughter", X, x)
    return Y


def dumps_states(states, particles=(), units=None, **extra) -> str:
    """Serialise states and particles into one JSON document sharing ``delta``."""
    states = list(states)
    units = units or (states[0].units if states else None)
    if units is None:
        raise ValueError("units needed when no states are given")
    doc = dict(units.to_dict())
    doc["states"] = [s.to_dict() for s in states]
    doc["particles"] = [p.to_dict() for p in particles]
    doc.update(extra)
    return json.dumps(doc, sort_keys=True)


def loads_states(text: str):
    """Inverse of :func:`dumps_states`; returns (units, states, particles)."""
    doc = json.loads(text)
    units = Units(doc["delta"], doc.get("charge_quantum", 1.0), doc.get("spin_quantum", 0.5))
    states = [NoHairVector(s["m_units"], s["q_units"], s["j_half_units"], units,
                           s.get("theta", 0.0), s.get("phi", 0.0)) for s in doc.get("states", [])]
    particles = [ParticleTriple(p["eps_units"], p["q_units"], p["j_half_units"])
                 for p in doc.get("particles", [])]
    return units, states, particles
