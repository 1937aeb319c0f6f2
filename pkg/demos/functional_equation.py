"""Which rate kernels are consistent with emission order not mattering?
Check residuals, then rebuild the entropy function from the kernel alone."""
import numpy as np

from horizonlab import funceq as fe
from horizonlab.rng import stream

for kernel in (fe.schwarzschild_kernel(),
               fe.planted_kernel(lambda M: np.sin(M) + 2 * M**2, lambda e: 0.3 * e**2),
               fe.broken_kernel("eps_m2")):
    fr = fe.functional_residual(kernel, 10_000, stream(0))
    pde = fe.pde_residual(kernel, 1e-4)
    print(f"{kernel.name:12s} exchange residual {fr.value:.2e}  pde residual {pde:.2e}")

dec = fe.reconstruct_f(fe.schwarzschild_kernel(), 1e-3, rng=stream(1))
err = np.max(np.abs(dec.f_samples - 4 * np.pi * dec.m_grid**2))
print("rebuilt f vs 4 pi M^2, sup error:", err)
print("rebuilt h, sup |h|:", np.max(np.abs(dec.h_samples)))

try:
    fe.reconstruct_f(fe.broken_kernel(), 1e-3, rng=stream(2))
except fe.NotASolution as exc:
    print("broken kernel refused:", exc)
