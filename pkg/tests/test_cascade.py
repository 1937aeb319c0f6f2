import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horizonlab import cascade as cs
from horizonlab.nohair import (
    KERR_NEWMAN,
    SCHWARZSCHILD,
    EntropyModel,
    NoHairVector,
    ParticleTriple,
    Units,
    irreducible_mass_mqj,
)
from horizonlab.rng import stream
from horizonlab.tunneling import ChannelGrid, spectrum
from horizonlab.verify import NonIrreducibleEntropy

FOUR_PI = 4 * math.pi
U = Units(0.1)
GRID = ChannelGrid(U)


def cfg(**kw):
    return cs.CascadeConfig(kw.pop("grid", GRID), **kw)


def test_single_quantum_cascade():
    s = cs.run_cascade(SCHWARZSCHILD, NoHairVector(1, 0, 0, U), cfg(), stream(0))
    assert s.emissions == (ParticleTriple(1),)
    assert s.complete and s.ledger == (1, 0, 0)


def two_chain_probability():
    # from M = 2 delta: emit 2 delta with p2, else two single quanta
    spec = spectrum(SCHWARZSCHILD, NoHairVector(2, 0, 0, U), GRID)
    return float(spec.probabilities[1])


def test_two_chain_oracle():
    # hand value: p(2 delta) = 1 / (1 + exp(S(delta))) with S(delta) = 4 pi delta^2
    p2 = 1.0 / (1.0 + math.exp(FOUR_PI * 0.01))
    assert two_chain_probability() == pytest.approx(p2, rel=1e-12)
    n = 20_000
    streams = cs.run_ensemble(SCHWARZSCHILD, NoHairVector(2, 0, 0, U), cfg(trajectories=n, seed=3))
    hist = cs.length_histogram(streams)
    assert set(hist) <= {1, 2}
    assert abs(hist.get(1, 0) - n * p2) <= 4 * math.sqrt(n * p2 * (1 - p2))
    assert all(s.emissions in ((ParticleTriple(2),), (ParticleTriple(1), ParticleTriple(1))) for s in streams)


def test_ensemble_independent_of_workers():
    X0 = NoHairVector(10, 0, 0, U)
    c = cfg(trajectories=300, seed=11)
    a = cs.run_ensemble(SCHWARZSCHILD, X0, c, workers=1)
    b = cs.run_ensemble(SCHWARZSCHILD, X0, c, workers=8)
    assert a == b
    # trajectory i depends only on (seed, i)
    tail = cs.run_ensemble(SCHWARZSCHILD, X0, cfg(trajectories=100, seed=11), start=200)
    assert tail == a[200:]


def test_stream_log_weight_examples():
    u = Units(0.05)
    X0 = NoHairVector(20, 0, 0, u)
    streams = cs.run_ensemble(SCHWARZSCHILD, X0, cs.CascadeConfig(ChannelGrid(u), trajectories=50, seed=1))
    w = [cs.stream_log_weight(SCHWARZSCHILD, s) for s in streams]
    assert max(abs(x + FOUR_PI) for x in w) <= 1e-9
    X2 = NoHairVector(2, 0, 0, U)
    c = cfg(mode="constant_N", log_N=-1.0)
    long = cs.stream_log_weight(SCHWARZSCHILD, cs.RadiationStream(X2, (ParticleTriple(1),) * 2), c)
    short = cs.stream_log_weight(SCHWARZSCHILD, cs.RadiationStream(X2, (ParticleTriple(2),)), c)
    assert math.exp(long) / math.exp(short) == pytest.approx(math.exp(-1.0), rel=1e-12)


def test_sampling_mode_weight_is_probability():
    X2 = NoHairVector(2, 0, 0, U)
    c = cfg()
    p = sum(math.exp(cs.stream_log_weight(SCHWARZSCHILD, cs.RadiationStream(X2, e), c))
            for e in ((ParticleTriple(2),), (ParticleTriple(1), ParticleTriple(1))))
    assert p == pytest.approx(1.0, abs=1e-12)


def test_invalid_stream_reports_index():
    X = NoHairVector(10, 0, 0, Units(0.1, charge_quantum=0.1))
    s = cs.RadiationStream(X, (ParticleTriple(1), ParticleTriple(8, 3, 0)))
    with pytest.raises(cs.InvalidStream) as err:
        cs.stream_log_weight(KERR_NEWMAN, s)
    assert err.value.index == 1
    assert not s.is_prefix_valid()


def test_permutation_check_examples():
    X = NoHairVector(10, 0, 0, U)
    s = cs.RadiationStream(X, (ParticleTriple(1), ParticleTriple(2)))
    assert cs.permutation_check(SCHWARZSCHILD, s).max_residual == 0.0
    one = cs.permutation_check(SCHWARZSCHILD, cs.RadiationStream(X, (ParticleTriple(1),)))
    assert (one.max_residual, one.tested) == (0.0, 0)


def test_permutation_check_charged_exhaustive():
    u = Units(0.1, charge_quantum=0.1, spin_quantum=0.1)
    X = NoHairVector(20, 3, 2, u)
    s = cs.RadiationStream(X, (ParticleTriple(2, 2, 1), ParticleTriple(3, -1, 0), ParticleTriple(4, 1, 1),
                               ParticleTriple(1, -2, -1), ParticleTriple(5, 1, 0)))
    assert s.is_prefix_valid()
    rep = cs.permutation_check(KERR_NEWMAN, s, exhaustive=True)
    assert rep.tested + rep.skipped == 120 and rep.tested > 1
    assert rep.max_residual < 1e-9


def test_enumerate_streams_compositions():
    streams = cs.enumerate_streams(SCHWARZSCHILD, NoHairVector(3, 0, 0, U), GRID)
    paths = [tuple(x.eps_units for x in s.emissions) for s, _ in streams]
    assert sorted(paths) == sorted([(3,), (1, 2), (2, 1), (1, 1, 1)])
    assert len(set(paths)) == 4
    w = [lw for _, lw in streams]
    assert max(w) - min(w) < 1e-12 and w[0] == pytest.approx(-FOUR_PI * 0.09, abs=1e-12)
    for m in range(1, 9):
        assert len(cs.enumerate_streams(SCHWARZSCHILD, NoHairVector(m, 0, 0, U), GRID)) == 2 ** (m - 1)


def test_enumerate_streams_deterministic_and_budget():
    X = NoHairVector(6, 0, 0, U)
    a = cs.enumerate_streams(SCHWARZSCHILD, X, GRID)
    b = cs.enumerate_streams(SCHWARZSCHILD, X, GRID)
    assert [s for s, _ in a] == [s for s, _ in b]
    with pytest.raises(cs.StreamBudgetExceeded):
        cs.enumerate_streams(SCHWARZSCHILD, X, GRID, budget=10)


def test_radiation_entropy_examples():
    c = cfg(mode="constant_N")
    r = cs.radiation_entropy(SCHWARZSCHILD, NoHairVector(5, 0, 0, U), GRID, c)
    assert r.n_streams == 16
    assert r.s_rad == pytest.approx(math.log(16), abs=1e-9)
    assert r.identity_residual <= 1e-9
    assert r.log_n_prime == pytest.approx(FOUR_PI * 0.25 - math.log(16), abs=1e-9)
    one = cs.radiation_entropy(SCHWARZSCHILD, NoHairVector(1, 0, 0, U), GRID, c)
    assert one.s_rad == 0.0
    p2 = two_chain_probability()
    two = cs.radiation_entropy(SCHWARZSCHILD, NoHairVector(2, 0, 0, U), GRID, cfg())
    assert two.s_rad == pytest.approx(-(p2 * math.log(p2) + (1 - p2) * math.log(1 - p2)), abs=1e-12)


def test_constant_n_equal_length_equiprobable():
    streams = cs.enumerate_streams(SCHWARZSCHILD, NoHairVector(6, 0, 0, U), GRID, cfg(mode="constant_N", log_N=0.7))
    by_len = {}
    for s, lw in streams:
        by_len.setdefault(len(s), []).append(lw)
    for ws in by_len.values():
        assert max(ws) - min(ws) < 1e-9


def test_transition_table():
    X = NoHairVector(3, 0, 0, U)
    t = cs.transition_table(SCHWARZSCHILD, X, GRID)
    assert set(t) == {((3, 0, 0), (k, 0, 0)) for k in range(3)}
    assert t[((3, 0, 0), (0, 0, 0))] == pytest.approx(-FOUR_PI * 0.09, abs=1e-12)


def test_penrose_examples():
    X1, X2 = (1.0, 0.6, 0.0), (0.9, 0.0, 0.0)
    assert irreducible_mass_mqj(*X1) == pytest.approx(0.9, abs=1e-12)
    # daughters with equal I: Schwarzschild partner of a charged daughter
    X1p = (0.8, 0.5, 0.0)
    X2p = (float(irreducible_mass_mqj(*X1p)), 0.0, 0.0)
    pair = ((X1, X1p), (X2, X2p))
    assert cs.penrose_invariance_check(KERR_NEWMAN, [pair]).max_residual <= 1e-9
    assert cs.penrose_invariance_check(KERR_NEWMAN, [((X1, X1p), (X1, X1p))]).max_residual == 0.0
    assert cs.penrose_invariance_check(NonIrreducibleEntropy(), [pair]).max_residual > 1e-3


def test_penrose_rejects_mismatched_pair():
    with pytest.raises(ValueError):
        cs.penrose_invariance_check(KERR_NEWMAN, [(((1.0, 0.6, 0.0), (0.9, 0.0, 0.0)), ((1.0, 0.0, 0.0), (0.9, 0.0, 0.0)))])


def test_penrose_constructed_pairs():
    pairs = cs.equal_irreducible_pairs(100, stream(0, 0, 31))
    good = cs.penrose_invariance_check(KERR_NEWMAN, pairs)
    assert len(good.rows) == 100 and good.max_residual <= 1e-9
    custom = cs.penrose_invariance_check(EntropyModel.custom(lambda I: np.exp(I)), pairs)
    assert custom.max_residual <= 1e-9
    assert cs.penrose_invariance_check(NonIrreducibleEntropy(), pairs).max_residual >= 1e-3
    assert good.to_csv().splitlines()[0] == "I1,I1_prime,residual"


def test_theta_factorization():
    pairs = cs.equal_irreducible_pairs(40, stream(1, 0, 31))
    transitions = [p[0] for p in pairs] + [p[1] for p in pairs]
    assert cs.theta_factorization_check(KERR_NEWMAN, transitions) <= 1e-6


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 30), st.integers(0, 2**32))
def test_telescoping_and_ledger_property(m, seed):
    u = Units(0.05, charge_quantum=0.05, spin_quantum=0.5)
    X0 = NoHairVector(m, 0, 0, u)
    grid = ChannelGrid(u, True, False, 1, 0)
    s = cs.run_cascade(KERR_NEWMAN, X0, cs.CascadeConfig(grid), stream(seed))
    assert s.ledger == X0.key
    assert abs(cs.stream_log_weight(KERR_NEWMAN, s) + KERR_NEWMAN(X0)) <= 1e-9
    assert cs.permutation_check(KERR_NEWMAN, s, n_perm=20, rng=stream(seed, 1)).max_residual <= 1e-9
