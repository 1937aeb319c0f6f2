"""Evaporate a hole completely, many times, and look at what the streams
have in common: their conserved totals and their summed entropy change."""
import math

from horizonlab import SCHWARZSCHILD, KERR_NEWMAN, CascadeConfig, ChannelGrid, NoHairVector, Units
from horizonlab import cascade as cs
from horizonlab.rng import stream

units = Units(0.05)
X0 = NoHairVector.from_real(1.0, units=units)
cfg = CascadeConfig(ChannelGrid(units), trajectories=2000, seed=1)
streams = cs.run_ensemble(SCHWARZSCHILD, X0, cfg)

print("stream lengths:", cs.length_histogram(streams))
weights = [cs.stream_log_weight(SCHWARZSCHILD, s) for s in streams]
print("sum of dS per stream: min", min(weights), "max", max(weights), "(-4 pi =", -4 * math.pi, ")")

# a charged, spinning hole with charged/spinning emissions
u = Units(0.05, charge_quantum=0.05, spin_quantum=0.05)
Y0 = NoHairVector.from_real(1.0, 0.3, 0.2, u)
grid = ChannelGrid(u, enable_charge=True, enable_spin=True, q_max=2, j_max=2)
s = cs.run_cascade(KERR_NEWMAN, Y0, CascadeConfig(grid), stream(3))
print("charged stream:", len(s), "emissions, ledger", s.ledger, "== X0", Y0.key)
rep = cs.permutation_check(KERR_NEWMAN, s, n_perm=100, rng=stream(4))
print("reordering:", rep.tested, "valid orders, max change", rep.max_residual, "skipped", rep.skipped)

# exhaustive enumeration for a tiny hole: 2^(n-1) streams
grid = ChannelGrid(Units(0.1))
small = NoHairVector(5, 0, 0, Units(0.1))
r = cs.radiation_entropy(SCHWARZSCHILD, small, grid, CascadeConfig(grid, mode="constant_N"))
print(f"{r.n_streams} streams, S_rad = {r.s_rad:.6f} (ln 16 = {math.log(16):.6f}), ln N' = {r.log_n_prime:.6f}")
