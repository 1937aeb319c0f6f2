import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horizonlab.nohair import (
    KERR_NEWMAN,
    SCHWARZSCHILD,
    ChannelForbidden,
    EntropyModel,
    InvalidState,
    NoHairVector,
    ParticleTriple,
    Units,
    daughter,
    dumps_states,
    entropy,
    horizon_irreducible_mass,
    irreducible_mass,
    irreducible_mass_mqj,
    is_subextremal_mqj,
    loads_states,
    try_daughter,
)

U = Units(0.1, charge_quantum=0.1, spin_quantum=0.5)


def test_irreducible_mass_examples():
    assert irreducible_mass_mqj(1.0, 0.0, 0.0) == pytest.approx(1.0, abs=1e-12)
    assert irreducible_mass_mqj(1.0, 1.0, 0.0) == pytest.approx(0.5, abs=1e-12)
    assert irreducible_mass_mqj(1.0, 0.6, 0.0) == pytest.approx(0.9, abs=1e-12)
    assert horizon_irreducible_mass(1.0, 0.6, 0.0) == pytest.approx(0.9, abs=1e-12)


def test_irreducible_mass_on_lattice_state():
    X = NoHairVector.from_real(1.0, 0.6, 0.0, U)
    assert irreducible_mass(X) == pytest.approx(0.9, abs=1e-12)


def test_irreducible_mass_rejects_superextremal():
    with pytest.raises(InvalidState):
        irreducible_mass_mqj(1.0, 1.2, 0.0)
    with pytest.raises(InvalidState):
        horizon_irreducible_mass(1.0, 0.0, 1.5)


def test_entropy_examples():
    assert entropy(SCHWARZSCHILD, NoHairVector.from_real(1.0, units=U)) == pytest.approx(4 * math.pi, abs=1e-12)
    assert entropy(KERR_NEWMAN, NoHairVector.from_real(1.0, 0.6, 0.0, U)) == pytest.approx(4 * math.pi * 0.81, abs=1e-12)
    for model in (SCHWARZSCHILD, KERR_NEWMAN, EntropyModel.custom(lambda I: I**3)):
        assert entropy(model, NoHairVector(0, 0, 0, U)) == 0.0


def test_custom_model_goes_through_irreducible_mass():
    model = EntropyModel.custom(lambda I: 2.0 * I)
    X = NoHairVector.from_real(1.0, 0.6, 0.0, U)
    assert model(X) == pytest.approx(1.8, abs=1e-12)
    with pytest.raises(ValueError):
        EntropyModel("custom_u")
    with pytest.raises(ValueError):
        EntropyModel("loop_quantum")


def test_daughter_examples():
    u = Units(0.1)
    X = NoHairVector.from_real(1.0, units=u)
    assert daughter(X, ParticleTriple(1)).mqj == pytest.approx((0.9, 0.0, 0.0))
    with pytest.raises(ChannelForbidden):
        daughter(X, ParticleTriple(2, 1, 0))
    assert try_daughter(X, ParticleTriple(2, 1, 0)) is None
    Y = NoHairVector.from_real(1.0, 0.0, 1.0, u, theta=0.4, phi=1.1)
    Z = daughter(Y, ParticleTriple(10, 0, 2))
    assert Z.key == (0, 0, 0) and (Z.theta, Z.phi) == (0.4, 1.1)


def test_invalid_states():
    with pytest.raises(InvalidState):
        NoHairVector(-1, 0, 0, U)
    with pytest.raises(InvalidState):
        NoHairVector(0, 1, 0, U)
    with pytest.raises(InvalidState):
        NoHairVector(10, 11, 0, U)
    with pytest.raises(TypeError):
        NoHairVector(1.5, 0, 0, U)
    with pytest.raises(ValueError):
        NoHairVector.from_real(1.05, units=Units(0.1))
    with pytest.raises(ValueError):
        ParticleTriple(-1)


def test_exact_extremal_boundary():
    # Q = M exactly is allowed; one more charge quantum is not
    assert U.subextremal(10, 10, 0)
    assert not U.subextremal(10, 11, 0)
    # M = 1, J = 1 (a = M) is extremal
    assert U.subextremal(10, 0, 2)
    assert not U.subextremal(10, 0, 3)


def test_serialisation_round_trip():
    X = NoHairVector(10, -2, 1, U, 0.3, 2.0)
    text = dumps_states([X], [ParticleTriple(1, 1, -1)])
    units, states, particles = loads_states(text)
    assert units == U and states == [X] and particles == [ParticleTriple(1, 1, -1)]
    import json
    doc = json.loads(text)
    assert doc["delta"] == 0.1
    assert set(doc["states"][0]) == {"m_units", "q_units", "j_half_units", "theta", "phi"}
    assert set(doc["particles"][0]) == {"eps_units", "q_units", "j_half_units"}


valid_mqj = st.tuples(st.floats(0.01, 10.0), st.floats(-1, 1), st.floats(-1, 1)).map(
    lambda t: (t[0], t[1] * t[0] * 0.999, t[2] * t[0] ** 2 * math.sqrt(max(1 - (t[1] * 0.999) ** 2, 0)) * 0.999))


@given(valid_mqj)
def test_irreducible_mass_bounded_by_mass(mqj):
    M, Q, J = mqj
    I = irreducible_mass_mqj(M, Q, J)
    assert I <= M * (1 + 1e-12)
    assert I == pytest.approx(horizon_irreducible_mass(M, Q, J), rel=1e-9, abs=1e-12)
    if Q == 0 and J == 0:
        assert I == pytest.approx(M, rel=1e-14)
    elif abs(Q) > 1e-3 * M or abs(J) > 1e-3 * M**2:
        assert I < M


@given(st.floats(0.1, 3.0), st.floats(0.0, 0.9))
def test_entropy_monotone_in_irreducible_mass(M, frac):
    Q = frac * M
    I1 = irreducible_mass_mqj(M, Q, 0.0)
    I2 = irreducible_mass_mqj(M * 1.01, Q, 0.0)
    assert I2 > I1
    assert KERR_NEWMAN.evaluate(M * 1.01, Q, 0.0) > KERR_NEWMAN.evaluate(M, Q, 0.0)


lattice_state = st.tuples(st.integers(1, 60), st.integers(-30, 30), st.integers(-6, 6)).filter(
    lambda k: U.subextremal(*k))
particle = st.builds(ParticleTriple, st.integers(0, 20), st.integers(-5, 5), st.integers(-2, 2))


@given(lattice_state, particle, particle)
def test_daughter_commutes_when_both_orders_allowed(key, x1, x2):
    X = NoHairVector(*key, U)
    a, b = try_daughter(X, x1), try_daughter(X, x2)
    if a is None or b is None:
        return
    ab, ba = try_daughter(a, x2), try_daughter(b, x1)
    if ab is None or ba is None:
        return
    assert ab == ba


def test_vectorised_matches_scalar():
    rng = np.random.default_rng(3)
    M = rng.uniform(0.1, 2, 500)
    Q = rng.uniform(-0.7, 0.7, 500) * M
    J = rng.uniform(-0.7, 0.7, 500) * M**2
    assert np.all(is_subextremal_mqj(M, Q, J))
    vec = irreducible_mass_mqj(M, Q, J)
    oracle = np.array([horizon_irreducible_mass(*t) for t in zip(M, Q, J)])
    assert np.max(np.abs(vec - oracle)) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_gradient_zero_set_contains_no_ball(seed):
    # wherever |grad I| looks tiny, a neighbour within 1e-3 has a clearly nonzero gradient
    rng = np.random.default_rng(seed)
    M = rng.uniform(0.2, 2.0, 2000)
    Q = rng.uniform(-0.9, 0.9, 2000) * M
    J = rng.uniform(-0.9, 0.9, 2000) * M**2 * np.sqrt(1 - (Q / M) ** 2)
    h = 1e-6

    def grad_norm(M, Q, J):
        g = [(irreducible_mass_mqj(*(p + h * (k == i) for k, p in enumerate((M, Q, J))))
              - irreducible_mass_mqj(*(p - h * (k == i) for k, p in enumerate((M, Q, J))))) / (2 * h)
             for i in range(3)]
        return np.sqrt(sum(x**2 for x in g))

    g = grad_norm(M, Q, J)
    # dI/dM >= 1/2 for subextremal states, so the zero set is empty here
    assert np.all(g > 1e-3)
    k = int(np.argmin(g))
    off = rng.uniform(-1e-3, 1e-3, (20, 3))
    near = grad_norm(M[k] + off[:, 0], Q[k] + off[:, 1] * 0.1, J[k] + off[:, 2] * 0.1)
    assert np.any(near > 1e-9)
