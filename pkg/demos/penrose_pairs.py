"""Holes with equal irreducible mass are interchangeable by reversible
processes, so their transition weights must agree."""
from horizonlab import KERR_NEWMAN, irreducible_mass_mqj
from horizonlab import cascade as cs
from horizonlab.rng import stream
from horizonlab.verify import NonIrreducibleEntropy

print("I(1, 0.6, 0) =", irreducible_mass_mqj(1.0, 0.6, 0.0), " I(0.9, 0, 0) =", irreducible_mass_mqj(0.9, 0.0, 0.0))

pairs = cs.equal_irreducible_pairs(100, stream(0))
good = cs.penrose_invariance_check(KERR_NEWMAN, pairs)
bad = cs.penrose_invariance_check(NonIrreducibleEntropy(), pairs)
print("area-law entropy, worst mismatch:", good.max_residual)
print("S = 4 pi M^2 + Q^4, worst mismatch:", bad.max_residual)
print(good.to_csv().splitlines()[:4])
