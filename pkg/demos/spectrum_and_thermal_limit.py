"""Emission spectrum of a small Schwarzschild hole and how far it sits from
the thermal (first-order) approximation."""
import numpy as np

from horizonlab import SCHWARZSCHILD, ChannelGrid, NoHairVector, ParticleTriple, Units, spectrum
from horizonlab.tunneling import log_tunneling_weight, thermal_reference, thermal_slope

units = Units(delta=0.1)
hole = NoHairVector.from_real(1.0, units=units)
spec = spectrum(SCHWARZSCHILD, hole, ChannelGrid(units))

print("eps    log-weight   thermal     probability")
for x, lw, p in spec.entries:
    th = thermal_reference(SCHWARZSCHILD, hole, x)
    print(f"{x.eps_units * units.delta:4.1f}  {lw:10.5f}  {th:10.5f}  {p:.3e}")

# the gap between exact and thermal weights grows like 4 pi eps^2
gap = log_tunneling_weight(SCHWARZSCHILD, hole, ParticleTriple(1)) - thermal_reference(SCHWARZSCHILD, hole, ParticleTriple(1))
print("gap at eps = 0.1:", gap, "vs 4 pi eps^2 =", 4 * np.pi * 0.01)

for M in (0.5, 1.0, 2.0):
    s = thermal_slope(SCHWARZSCHILD, (M, 0.0, 0.0), 1e-4)
    print(f"M = {M}: slope {s:.5f}, -8 pi M = {-8 * np.pi * M:.5f}")
