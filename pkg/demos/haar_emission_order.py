"""Two emissions of different sizes from a 16-dimensional interior, in both
orders.  With a fresh Haar unitary per event the joint law is the same."""
import numpy as np

from horizonlab import haar as hm

state = hm.PureState.basis(16)
v = hm.permutation_symmetry_test(state, 2, 4, 100_000, seed=0)
print("forward joint law:\n", np.round(v.forward.probabilities, 4))
print("reverse (transposed):\n", np.round(v.reverse.probabilities.T, 4))
print(f"TV = {v.tv_distance:.4f}, threshold {v.threshold:.4f}: {v.verdict}")

# without scrambling the outcomes are fixed by the input index
ctrl = hm.permutation_symmetry_test(hm.PureState.basis(16, 5), 2, 4, 10_000, seed=0, scramble=False)
print(f"identity control: TV = {ctrl.tv_distance:.3f}: {ctrl.verdict}")

for d in (4, 16, 64):
    var, se = hm.outcome_variance(d, 2, 20_000, seed=1)
    print(f"d = {d:3d}: variance of p(r=0) across unitaries {var:.5f} +- {se:.5f}")
