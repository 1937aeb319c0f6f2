"""Complete evaporation cascades with exact conservation ledgers.

Two accounting modes are kept apart:

``sampling``
    every state's spectrum is normalised on its own, giving a proper Markov
    chain; a stream's log-weight is the sum of per-step log-probabilities.
``constant_N``
    the unnormalised entropy-difference weights with one global constant
    ``log_N`` per emission; a stream's log-weight is sum(dS) + k log_N.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.special import logsumexp

from .nohair import (
    EntropyModel,
    NoHairVector,
    ParticleTriple,
    irreducible_mass_mqj,
    is_subextremal_mqj,
    try_daughter,
)
from .rng import stream as rng_stream, worker_count
from .tunneling import ChannelGrid, EvaporationStuck, sample_emission, spectrum

__all__ = [
    "InvalidStream",
    "StreamBudgetExceeded",
    "CascadeConfig",
    "RadiationStream",
    "run_cascade",
    "run_ensemble",
    "length_histogram",
    "stream_log_weight",
    "entropy_changes",
    "permutation_check",
    "enumerate_streams",
    "radiation_entropy",
    "transition_table",
    "log_theta",
    "penrose_invariance_check",
    "equal_irreducible_pairs",
    "theta_factorization_check",
]

MODES = ("sampling", "constant_N")


class InvalidStream(ValueError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class StreamBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class CascadeConfig:
    grid: ChannelGrid
    mode: str = "sampling"
    log_N: float = 0.0
    trajectories: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.trajectories < 1:
            raise ValueError("trajectories must be >= 1")


@dataclass(frozen=True)
class RadiationStream:
    """Ordered emissions from ``initial``; the ledger is derived, never stored."""

    initial: NoHairVector
    emissions: tuple = field(default_factory=tuple)

    @property
    def ledger(self):
        return tuple(sum(c) for c in zip((0, 0, 0), *((x.eps_units, x.q_units, x.j_units)
                                                       for x in self.emissions)))

    def states(self):
        """Prefix states X0, X1, ...; raises InvalidStream at the first bad step."""
        X = self.initial
        out = [X]
        for i, x in enumerate(self.emissions):
            X = try_daughter(X, x)
            if X is None:
                raise InvalidStream(f"emission {i} ({x}) leaves an invalid state", i)
            out.append(X)
        return out

    def is_prefix_valid(self) -> bool:
        try:
            self.states()
        except InvalidStream:
            return False
        return True

    @property
    def complete(self) -> bool:
        return self.ledger == self.initial.key

    def reordered(self, order):
        return RadiationStream(self.initial, tuple(self.emissions[i] for i in order))

    def __len__(self):
        return len(self.emissions)

    def to_dict(self):
        return {"initial": self.initial.to_dict(),
                "emissions": [x.to_dict() for x in self.emissions]}


def run_cascade(model: EntropyModel, X0: NoHairVector, cfg: CascadeConfig, rng) -> RadiationStream:
    """Evaporate X0 completely by sampling each state's spectrum."""
    X = X0
    emitted = []
    while not X.is_zero():
        x = sample_emission(spectrum(model, X, cfg.grid), rng)
        emitted.append(x)
        X = try_daughter(X, x)
    return RadiationStream(X0, tuple(emitted))


def run_ensemble(model, X0, cfg: CascadeConfig, workers=None, start=0):
    """``cfg.trajectories`` cascades; trajectory i always uses stream (seed, i)."""
    n = cfg.trajectories
    idx = range(start, start + n)

    def job(chunk):
        return [run_cascade(model, X0, cfg, rng_stream(cfg.seed, i)) for i in chunk]

    w = worker_count(workers)
    if w == 1 or n < 64:
        return job(idx)
    size = math.ceil(n / (4 * w))
    chunks = [idx[k:k + size] for k in range(0, n, size)]
    with ThreadPoolExecutor(max_workers=w) as pool:
        return [s for part in pool.map(job, chunks) for s in part]


def length_histogram(streams) -> dict:
    return dict(sorted(Counter(len(s) for s in streams).items()))


def entropy_changes(model, stream: RadiationStream) -> np.ndarray:
    """Per-step dS = S(X_{k+1}) - S(X_k)."""
    S = np.array([model(X) for X in stream.states()])
    return np.diff(S)


def stream_log_weight(model, stream: RadiationStream, cfg: CascadeConfig | None = None) -> float:
    """Log-weight of a stream under the accounting mode of ``cfg``.

    Without ``cfg`` this is the constant-N weight with log_N = 0, i.e. the
    plain sum of entropy changes.
    """
    if cfg is None or cfg.mode == "constant_N":
        log_N = cfg.log_N if cfg is not None else 0.0
        return float(np.sum(entropy_changes(model, stream))) + len(stream) * log_N
    total = 0.0
    for X, x in zip(stream.states(), stream.emissions):
        spec = spectrum(model, X, cfg.grid)
        try:
            i = spec.channels.index(x)
        except ValueError:
            raise InvalidStream(f"{x} is not a channel of the grid at {X}") from None
        total += spec.log_weights[i] - spec.log_norm
    return float(total)


@dataclass
class PermutationReport:
    max_residual: float
    tested: int
    skipped: int


def permutation_check(model, stream: RadiationStream, n_perm=100, rng=None, exhaustive=False):
    """Largest change of sum(dS) over reorderings of the emissions.

    Orders with an invalid intermediate state are skipped and counted.
    """
    n = len(stream)
    if n < 2:
        return PermutationReport(0.0, 0, 0)
    ref = stream_log_weight(model, stream)
    if exhaustive:
        orders = itertools.permutations(range(n))
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        orders = (rng.permutation(n) for _ in range(n_perm))
    worst, tested, skipped = 0.0, 0, 0
    for order in orders:
        s = stream.reordered(order)
        if not s.is_prefix_valid():
            skipped += 1
            continue
        tested += 1
        worst = max(worst, abs(stream_log_weight(model, s) - ref))
    return PermutationReport(worst, tested, skipped)


def enumerate_streams(model, X0: NoHairVector, grid: ChannelGrid, cfg=None, budget=10**6):
    """Every complete stream from X0 with its log-weight, depth-first.

    Branches that cannot reach X = 0 are dropped.  Order follows the
    channel enumeration order at every depth.
    """
    cfg = cfg or CascadeConfig(grid, mode="constant_N")
    out = []

    def emit(path):
        if len(out) >= budget:
            raise StreamBudgetExceeded(f"more than {budget} complete streams")
        s = RadiationStream(X0, tuple(path))
        out.append((s, stream_log_weight(model, s, cfg)))

    stack = [(X0, ())]
    while stack:
        X, path = stack.pop()
        if X.is_zero():
            emit(path)
            continue
        try:
            chans = spectrum(model, X, grid).channels
        except EvaporationStuck:
            continue
        for x in reversed(chans):
            stack.append((try_daughter(X, x), path + (x,)))
    return out


@dataclass
class RadiationEntropy:
    s_rad: float
    log_n_prime: float
    n_streams: int
    s_initial: float
    s_final: float

    @property
    def identity_residual(self) -> float:
        """|S_rad - [S(X0) - S(0) - ln N']|."""
        return abs(self.s_rad - (self.s_initial - self.s_final - self.log_n_prime))


def radiation_entropy(model, X0, grid, cfg=None) -> RadiationEntropy:
    """Shannon entropy of the normalised distribution of complete streams."""
    streams = enumerate_streams(model, X0, grid, cfg)
    w = np.array([lw for _, lw in streams])
    logp = w - logsumexp(w)
    s_rad = float(-np.sum(np.exp(logp) * logp)) + 0.0
    s0 = model(X0)
    s_end = model(NoHairVector(0, 0, 0, X0.units))
    return RadiationEntropy(s_rad, s0 - s_end - s_rad, len(streams), s0, s_end)


def transition_table(model, X: NoHairVector, grid: ChannelGrid) -> dict:
    """{(X, X'): log Theta(X, X')} over every allowed single emission from X."""
    spec = spectrum(model, X, grid)
    return {(X.key, try_daughter(X, x).key): lw for x, lw in zip(spec.channels, spec.log_weights)}


def log_theta(model, mother, daughter_) -> float:
    """Unnormalised log Theta(X, X') = S(X') - S(X) for real triples."""
    M, Q, J = mother
    Md, Qd, Jd = daughter_
    if Md > M or not is_subextremal_mqj(Md, Qd, Jd) or not is_subextremal_mqj(M, Q, J):
        raise InvalidStream(f"{daughter_} is not reachable from {mother} by one emission")
    return float(model.evaluate(Md, Qd, Jd) - model.evaluate(M, Q, J))


@dataclass
class PenroseReport:
    max_residual: float
    rows: list  # (I1, I1', residual)
    skipped: int

    def to_csv(self) -> str:
        lines = ["I1,I1_prime,residual"] + [f"{a!r},{b!r},{r!r}" for a, b, r in self.rows]
        return "\n".join(lines) + "\n"


def penrose_invariance_check(model, pairs, tol=1e-12) -> PenroseReport:
    """max |log Theta(X1, X1') - log Theta(X2, X2')| over pairs with matching I."""
    rows, skipped = [], 0
    for (X1, X1p), (X2, X2p) in pairs:
        I1, I1p, I2, I2p = (float(irreducible_mass_mqj(*v)) for v in (X1, X1p, X2, X2p))
        if abs(I1 - I2) > tol or abs(I1p - I2p) > tol:
            raise ValueError(f"pair does not share irreducible masses: {I1}/{I2}, {I1p}/{I2p}")
        try:
            r = abs(log_theta(model, X1, X1p) - log_theta(model, X2, X2p))
        except InvalidStream:
            skipped += 1
            continue
        rows.append((I1, I1p, r))
    worst = max((r for *_, r in rows), default=0.0)
    return PenroseReport(worst, rows, skipped)


def _rn_mass(I, Q):
    # Reissner-Nordstrom hole with irreducible mass I: r+ = 2I, M = (r+^2 + Q^2) / (2 r+)
    return (4 * I * I + Q * Q) / (4 * I)


def _random_state(rng, m_lo=0.5, m_hi=2.0):
    M = rng.uniform(m_lo, m_hi)
    Q = M * rng.uniform(-0.9, 0.9)
    J = M * np.sqrt(M * M - Q * Q) * rng.uniform(-0.9, 0.9)
    return (M, Q, J)


def equal_irreducible_pairs(n, rng, partner="mixed", tol=1e-12, max_tries=100000):
    """``n`` pairs ((X1, X1'), (X2, X2')) with I(X1) = I(X2), I(X1') = I(X2').

    X1 is a random Kerr-Newman hole and X1' a daughter after a random
    emission.  The partners are built by inverting the irreducible-mass
    formula: neutral holes (M = I) or charged non-rotating holes
    (closed-form Reissner-Nordstrom inverse).
    """
    pairs = []
    for _ in range(max_tries):
        if len(pairs) == n:
            break
        X1 = _random_state(rng)
        M, Q, J = X1
        x = (rng.uniform(0.01, 0.3) * M, rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2))
        X1p = (M - x[0], Q - x[1], J - x[2])
        if not is_subextremal_mqj(*X1p, tol=0):
            continue
        I, Ip = float(irreducible_mass_mqj(*X1)), float(irreducible_mass_mqj(*X1p))
        kind = partner if partner != "mixed" else ("schwarzschild", "charged")[len(pairs) % 2]
        if kind == "schwarzschild":
            X2, X2p = (I, 0.0, 0.0), (Ip, 0.0, 0.0)
        else:
            Q2 = 2 * I * rng.uniform(-0.9, 0.9)
            Q2p = 2 * Ip * rng.uniform(-0.9, 0.9)
            X2, X2p = (_rn_mass(I, Q2), Q2, 0.0), (_rn_mass(Ip, Q2p), Q2p, 0.0)
        if X2p[0] > X2[0]:
            continue
        if (abs(float(irreducible_mass_mqj(*X2)) - I) > tol
                or abs(float(irreducible_mass_mqj(*X2p)) - Ip) > tol):
            continue
        pairs.append(((X1, X1p), (X2, X2p)))
    if len(pairs) < n:
        raise RuntimeError(f"only built {len(pairs)} of {n} equal-I pairs")
    return pairs


def theta_factorization_check(model, transitions, i_grid=None) -> float:
    """Compare log Theta(X, X') with theta(I(X), I(X')) interpolated from neutral probes.

    ``transitions`` is a list of real (X, X') pairs.  The probe table is
    tabulated on neutral holes only, so agreement shows the dependence runs
    through I alone.  Returns the largest absolute disagreement.
    """
    if i_grid is None:
        i_grid = np.linspace(0.05, 2.5, 50)
    A, B = np.meshgrid(i_grid, i_grid, indexing="ij")
    table = model.evaluate(B, 0.0, 0.0) - model.evaluate(A, 0.0, 0.0)
    theta = RectBivariateSpline(i_grid, i_grid, table, kx=3, ky=3)
    worst = 0.0
    for X, Xp in transitions:
        direct = log_theta(model, X, Xp)
        via = float(theta(irreducible_mass_mqj(*X), irreducible_mass_mqj(*Xp), grid=False))
        worst = max(worst, abs(direct - via))
    return worst
