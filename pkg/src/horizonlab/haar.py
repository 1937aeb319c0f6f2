"""Small-dimension Hilbert-space evaporation |i> -> (U|i>)_{BR}.

Basis convention: a vector on B (x) R is indexed b * d_R + r, i.e. the
radiation factor is the fast index.  All sampling is batched; each batch of
``BATCH`` samples draws from its own counter-based stream so the result is
independent of how batches are spread over threads.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .rng import stream as rng_stream, worker_count

__all__ = [
    "MAX_DIM",
    "PureState",
    "BipartiteSplit",
    "haar_unitary",
    "haar_unitaries",
    "haar_states",
    "unitarity_residual",
    "evaporation_step",
    "sequential_emission_distribution",
    "permutation_symmetry_test",
    "mean_reduced_density",
    "outcome_variance",
]

MAX_DIM = 2**10
BATCH = 10_000
NORM_TOL = 1e-12


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).ravel()
        if abs(np.vdot(a, a).real - 1.0) > NORM_TOL:
            raise ValueError("state is not normalised")
        object.__setattr__(self, "amplitudes", a)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def basis(cls, d, index=0):
        a = np.zeros(d, dtype=complex)
        a[index] = 1.0
        return cls(a)

    @classmethod
    def random(cls, d, rng):
        a = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        return cls(a / np.linalg.norm(a))


@dataclass(frozen=True)
class BipartiteSplit:
    d_B: int
    d_R: int

    def __post_init__(self):
        if self.d_B < 1 or self.d_R < 1:
            raise ValueError("subsystem dimensions must be >= 1")

    @property
    def dim(self) -> int:
        return self.d_B * self.d_R


def _check_dim(d):
    if not 1 <= d <= MAX_DIM:
        raise ValueError(f"dimension {d} outside [1, {MAX_DIM}]")


def haar_unitaries(d: int, n: int, rng) -> np.ndarray:
    """``n`` Haar-random d x d unitaries, shape (n, d, d).

    QR of a complex Ginibre matrix with the phases of R's diagonal moved
    into Q, so the triangular factor has a positive real diagonal.
    """
    _check_dim(d)
    z = (rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (diag / np.abs(diag))[:, None, :]


def haar_unitary(d: int, rng) -> np.ndarray:
    return haar_unitaries(d, 1, rng)[0]


def haar_states(d: int, n: int, rng) -> np.ndarray:
    """``n`` vectors distributed as U|psi> for Haar U, shape (n, d).

    The law does not depend on |psi>: it is the uniform measure on the unit
    sphere, i.e. a normalised complex Gaussian vector.
    """
    _check_dim(d)
    z = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def unitarity_residual(U) -> np.ndarray:
    """max |U^dagger U - 1| per matrix (works on stacks)."""
    U = np.asarray(U)
    eye = np.eye(U.shape[-1])
    return np.max(np.abs(np.conj(np.swapaxes(U, -1, -2)) @ U - eye), axis=(-2, -1))


def evaporation_step(state: PureState, split: BipartiteSplit, U):
    """Apply U, measure R.  Returns (p(r), conditional interior states).

    Conditional states are None for outcomes of zero probability.
    """
    if state.dim != split.dim or np.shape(U) != (state.dim, state.dim):
        raise ValueError(f"dimension mismatch: state {state.dim}, split {split.dim}, U {np.shape(U)}")
    psi = (np.asarray(U) @ state.amplitudes).reshape(split.d_B, split.d_R)
    p = np.sum(np.abs(psi) ** 2, axis=0)
    cond = [PureState(psi[:, r] / np.sqrt(p[r])) if p[r] > 1e-300 else None for r in range(split.d_R)]
    return p, cond


def _two_step_batch(amplitudes, d_r1, d_r2, n, rng, scramble=True):
    """One batch of sequential measurements; returns (counts[d_r1, d_r2], max unitarity residual)."""
    d = amplitudes.size
    d2 = d // d_r1
    if scramble:
        U1, U2 = haar_unitaries(d, n, rng), haar_unitaries(d2, n, rng)
        res = max(unitarity_residual(U1).max(), unitarity_residual(U2).max())
        psi = (U1 @ amplitudes).reshape(n, d2, d_r1)
    else:
        res = 0.0
        psi = np.broadcast_to(amplitudes.reshape(d2, d_r1), (n, d2, d_r1))
    p1 = np.sum(np.abs(psi) ** 2, axis=1)
    r1 = _draw(p1, rng)
    chi = psi[np.arange(n), :, r1]
    chi = chi / np.linalg.norm(chi, axis=1, keepdims=True)
    if scramble:
        chi = np.einsum("nij,nj->ni", U2, chi)
    p2 = np.sum(np.abs(chi.reshape(n, d2 // d_r2, d_r2)) ** 2, axis=1)
    r2 = _draw(p2, rng)
    counts = np.zeros((d_r1, d_r2), dtype=np.int64)
    np.add.at(counts, (r1, r2), 1)
    return counts, float(res)


def _draw(p, rng):
    cdf = np.cumsum(p, axis=1)
    u = rng.random(p.shape[0]) * cdf[:, -1]
    return np.minimum((cdf < u[:, None]).sum(axis=1), p.shape[1] - 1)


@dataclass
class JointEstimate:
    probabilities: np.ndarray
    std_errors: np.ndarray
    samples: int
    max_unitarity_residual: float


def _run_batches(fn, samples, seed, tag, workers):
    sizes = [min(BATCH, samples - k) for k in range(0, samples, BATCH)]
    jobs = [(i, s) for i, s in enumerate(sizes)]
    run = lambda job: fn(job[1], rng_stream(seed, job[0], tag))
    w = worker_count(workers)
    if w == 1 or len(jobs) == 1:
        return [run(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=w) as pool:
        return list(pool.map(run, jobs))


def sequential_emission_distribution(state: PureState, dims, samples, seed, tag=0,
                                     workers=None, scramble=True) -> JointEstimate:
    """Empirical joint law of two successive emissions of sizes ``dims``.

    Each sample draws a fresh Haar U1 on the full space, measures R1, then a
    fresh Haar U2 on the conditional interior and measures R2.
    ``scramble=False`` replaces both unitaries with the identity (control).
    """
    d_r1, d_r2 = dims
    d = state.dim
    _check_dim(d)
    if d % (d_r1 * d_r2):
        raise ValueError(f"dimension {d} not divisible by {d_r1} * {d_r2}")
    parts = _run_batches(lambda n, rng: _two_step_batch(state.amplitudes, d_r1, d_r2, n, rng, scramble),
                         samples, seed, tag, workers)
    counts = sum(c for c, _ in parts)
    p = counts / samples
    return JointEstimate(p, np.sqrt(p * (1 - p) / samples), samples, max(r for _, r in parts))


@dataclass
class SymmetryVerdict:
    tv_distance: float
    threshold: float
    passed: bool
    forward: JointEstimate
    reverse: JointEstimate

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self):
        return {
            "tv_distance": self.tv_distance,
            "threshold": self.threshold,
            "verdict": self.verdict,
            "mean_distribution": self.forward.probabilities.tolist(),
            "max_unitarity_residual": max(self.forward.max_unitarity_residual,
                                          self.reverse.max_unitarity_residual),
        }


def permutation_symmetry_test(state: PureState, d_r1, d_r2, samples, seed, c=3.0,
                              workers=None, scramble=True) -> SymmetryVerdict:
    """Total-variation distance between emission orders (d_r1, d_r2) and (d_r2, d_r1).

    The reversed joint law is transposed so both are indexed
    (outcome of the size-d_r1 event, outcome of the size-d_r2 event).
    Passes when TV < c * sqrt(d_r1 * d_r2 / samples).
    """
    fwd = sequential_emission_distribution(state, (d_r1, d_r2), samples, seed, 0, workers, scramble)
    rev = sequential_emission_distribution(state, (d_r2, d_r1), samples, seed, 1, workers, scramble)
    tv = 0.5 * float(np.abs(fwd.probabilities - rev.probabilities.T).sum())
    thr = c * np.sqrt(d_r1 * d_r2 / samples)
    return SymmetryVerdict(tv, float(thr), bool(tv < thr), fwd, rev)


def mean_reduced_density(state: PureState, d_R, samples, seed, tag=2, workers=None):
    """Haar average of the radiation's reduced density matrix; returns (mean, std error)."""
    d = state.dim
    if d % d_R:
        raise ValueError("d_R must divide the dimension")

    def batch(n, rng):
        psi = haar_states(d, n, rng).reshape(n, d // d_R, d_R)
        rho = np.einsum("nbr,nbs->nrs", psi, psi.conj())
        return rho.sum(axis=0), (np.abs(rho) ** 2).sum(axis=0)

    parts = _run_batches(batch, samples, seed, tag, workers)
    s1 = sum(a for a, _ in parts)
    s2 = sum(b for _, b in parts)
    mean = s1 / samples
    var = np.maximum(s2 / samples - np.abs(mean) ** 2, 0.0)
    return mean, np.sqrt(var / samples)


def outcome_variance(d, d_R, samples, seed, tag=3, workers=None):
    """Sample variance of p(r = 0) across Haar unitaries, with its standard error."""

    def batch(n, rng):
        psi = haar_states(d, n, rng).reshape(n, d // d_R, d_R)
        return np.sum(np.abs(psi[:, :, 0]) ** 2, axis=1)

    p = np.concatenate(_run_batches(batch, samples, seed, tag, workers))
    var = p.var(ddof=1)
    m4 = np.mean((p - p.mean()) ** 4)
    se = np.sqrt(max(m4 - var**2, 0.0) / samples)
    return float(var), float(se)
