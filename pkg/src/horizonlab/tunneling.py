"""Log-space tunneling weights and normalised emission spectra.

The unnormalised log-weight of emitting ``x`` from ``X`` is the entropy
difference S(X - x) - S(X).  Everything stays in log space; the only
exponentiation happens after subtracting the log-sum-exp normaliser.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .nohair import (
    ChannelForbidden,
    EntropyModel,
    InvalidState,
    NoHairVector,
    ParticleTriple,
    Units,
    is_subextremal_mqj,
    try_daughter,
)

__all__ = [
    "EvaporationStuck",
    "ChannelGrid",
    "EmissionSpectrum",
    "delta_entropy",
    "log_tunneling_weight",
    "enumerate_channels",
    "spectrum",
    "sample_emission",
    "exchange_residual",
    "entropy_gradient",
    "thermal_reference",
    "thermal_slope",
]


class EvaporationStuck(RuntimeError):
    """No emission channel is open from a state with M > 0."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class ChannelGrid:
    """Which emissions are considered: eps in {delta, ..., M}, |q| <= q_max, |j| <= j_max."""

    units: Units
    enable_charge: bool = False
    enable_spin: bool = False
    q_max: int = 0
    j_max: int = 0

    def __post_init__(self):
        if self.q_max < 0 or self.j_max < 0:
            raise ValueError("q_max and j_max must be non-negative")

    @property
    def delta(self) -> float:
        return self.units.delta

    def to_dict(self):
        return {**self.units.to_dict(), "enable_charge": self.enable_charge,
                "enable_spin": self.enable_spin, "q_max": self.q_max, "j_max": self.j_max}


def delta_entropy(model: EntropyModel, mother, particle) -> float:
    """S(X - x) - S(X) for real triples ``mother`` = (M, Q, J), ``particle`` = (eps, q, j)."""
    M, Q, J = mother
    e, q, j = particle
    if not is_subextremal_mqj(M - e, Q - q, J - j):
        raise ChannelForbidden(f"daughter of {mother} after {particle} is not a black hole")
    return float(model.evaluate(M - e, Q - q, J - j) - model.evaluate(M, Q, J))


def log_tunneling_weight(model: EntropyModel, X: NoHairVector, x: ParticleTriple) -> float:
    """Unnormalised log Gamma(x | X) = S(X - x) - S(X)."""
    if x.is_null():
        return 0.0
    Y = try_daughter(X, x)
    if Y is None:
        raise ChannelForbidden(f"emission {x} from {X} leaves an invalid daughter", X, x)
    return model(Y) - model(X)


def _check_units(X: NoHairVector, grid: ChannelGrid):
    if X.units != grid.units:
        raise ValueError("state and channel grid use different lattice units")


def enumerate_channels(X: NoHairVector, grid: ChannelGrid) -> list[ParticleTriple]:
    """All allowed emissions from X, in lexicographic (eps, q, j) order."""
    _check_units(X, grid)
    return [ParticleTriple(*k) for k in _channel_keys(X.key, grid)]


@lru_cache(maxsize=65536)
def _channel_keys(key, grid):
    m, q0, j0 = key
    qs = range(-grid.q_max, grid.q_max + 1) if grid.enable_charge else (0,)
    js = range(-grid.j_max, grid.j_max + 1) if grid.enable_spin else (0,)
    sub = grid.units.subextremal
    return tuple((e, q, j) for e in range(1, m + 1) for q in qs for j in js
                 if sub(m - e, q0 - q, j0 - j))


@dataclass(frozen=True)
class EmissionSpectrum:
    """Normalised distribution over the open channels of one state."""

    state: NoHairVector
    channels: tuple
    log_weights: np.ndarray
    log_norm: float

    @property
    def log_probabilities(self) -> np.ndarray:
        return self.log_weights - self.log_norm

    @property
    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_probabilities)

    @property
    def entries(self):
        return list(zip(self.channels, self.log_weights.tolist(), self.probabilities.tolist()))

    def __len__(self):
        return len(self.channels)

    def to_csv(self) -> str:
        u = self.state.units
        lines = ["eps,q,j_half,log_weight,probability"]
        for x, lw, p in self.entries:
            e, q, _ = x.real(u)
            lines.append(f"{e:.15g},{q:.15g},{x.j_units},{lw!r},{p!r}")
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return {
            "state": self.state.to_dict(),
            "log_norm": self.log_norm,
            "entries": [{"x": x.to_dict(), "log_weight": lw, "probability": p}
                        for x, lw, p in self.entries],
        }


@lru_cache(maxsize=65536)
def _spectrum_arrays(model, key, grid):
    chans = _channel_keys(key, grid)
    if not chans:
        return chans, np.empty(0), -np.inf
    u = grid.units
    arr = np.array(chans, dtype=np.int64)
    m, q, j = key
    Md = (m - arr[:, 0]) * u.delta
    Qd = (q - arr[:, 1]) * u.charge_quantum
    Jd = (j - arr[:, 2]) * u.spin_quantum
    S0 = float(model.evaluate(m * u.delta, q * u.charge_quantum, j * u.spin_quantum))
    logw = np.asarray(model.evaluate(Md, Qd, Jd), dtype=float) - S0
    logw.setflags(write=False)
    return chans, logw, float(logsumexp(logw))


def spectrum(model: EntropyModel, X: NoHairVector, grid: ChannelGrid) -> EmissionSpectrum:
    """Per-state normalised emission spectrum (cached per state)."""
    _check_units(X, grid)
    if X.is_zero():
        raise EvaporationStuck("a fully evaporated state has no spectrum", X)
    chans, logw, log_norm = _spectrum_arrays(model, X.key, grid)
    if not chans:
        raise EvaporationStuck(f"no allowed emission from {X}", X)
    return EmissionSpectrum(X, tuple(ParticleTriple(*c) for c in chans), logw, log_norm)


def sample_emission(spec: EmissionSpectrum, rng: np.random.Generator) -> ParticleTriple:
    """Draw one channel by inverse CDF; one uniform per call."""
    cdf = np.cumsum(spec.probabilities)
    i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return spec.channels[min(i, len(spec.channels) - 1)]


def exchange_residual(model, X, x1, x2, log_weight=None) -> float:
    """Order-swap residual of two successive emissions.

    [log G(x1|X) + log G(x2|X-x1)] - [log G(x2|X) + log G(x1|X-x2)].
    ``log_weight(X, x)`` may replace the entropy kernel (used to plant
    broken kernels); it defaults to :func:`log_tunneling_weight`.
    """
    lw = log_weight or (lambda S, p: log_tunneling_weight(model, S, p))
    first, second = try_daughter(X, x1), try_daughter(X, x2)
    for name, Y, x in (("x1 then x2", first, x2), ("x2 then x1", second, x1)):
        if Y is None or try_daughter(Y, x) is None:
            raise ChannelForbidden(f"order {name} is not allowed from {X}", X)
    a = lw(X, x1) + lw(first, x2)
    b = lw(X, x2) + lw(second, x1)
    return a - b


def fd_step(M: float) -> float:
    return 1e-5 * max(M, 1.0)


def entropy_gradient(model: EntropyModel, mqj, step=None):
    """Finite-difference gradient of S at real (M, Q, J).

    Central differences; within one step of the extremal boundary each
    affected coordinate falls back to a one-sided difference with a warning.
    """
    mqj = np.asarray(mqj, dtype=float)
    h = fd_step(mqj[0]) if step is None else step
    S = lambda v: float(model.evaluate(*v))
    grad = np.zeros(3)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        up, dn = mqj + e, mqj - e
        ok_up, ok_dn = bool(is_subextremal_mqj(*up, tol=0)), bool(is_subextremal_mqj(*dn, tol=0))
        if ok_up and ok_dn:
            grad[i] = (S(up) - S(dn)) / (2 * h)
            continue
        warnings.warn(f"one-sided derivative along axis {i} near the extremal boundary", RuntimeWarning)
        if ok_up:
            grad[i] = (-3 * S(mqj) + 4 * S(up) - S(mqj + 2 * e)) / (2 * h)
        elif ok_dn:
            grad[i] = (3 * S(mqj) - 4 * S(dn) + S(mqj - 2 * e)) / (2 * h)
        else:
            raise InvalidState(f"cannot differentiate S at {tuple(mqj)}")
    return grad


def thermal_reference(model: EntropyModel, X: NoHairVector, x: ParticleTriple) -> float:
    """Backreaction-free log-weight  -grad S(X) . x."""
    if x.is_null():
        return 0.0
    return float(-entropy_gradient(model, X.mqj) @ np.asarray(x.real(X.units)))


def thermal_slope(model: EntropyModel, mqj, eps: float, ratio: float = 2.0) -> float:
    """d log G / d eps near eps = 0, from neutral emissions eps and ratio*eps."""
    a = delta_entropy(model, mqj, (eps, 0.0, 0.0))
    b = delta_entropy(model, mqj, (ratio * eps, 0.0, 0.0))
    return (b - a) / ((ratio - 1.0) * eps)
