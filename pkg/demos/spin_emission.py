"""Which particle + daughter spin states can follow the emission of a
spin-j_p particle from a spin-coherent hole of spin j?"""
from horizonlab import spin as sp

for jp, j in [("1/2", "1/2"), (1, 1), ("3/2", "1/2"), (1, 2)]:
    c = sp.classify_eigenstates(jp, j)
    print(f"j_p = {jp}, j = {j}")
    for J in sorted({e.j_total for e in c.entries}):
        f = sp.conservation_filter(c, J, theta=0.4, phi=1.0)
        for e in f.entries:
            if e.j_total == J:
                print(f"   {e.kind:18s} x = {e.eigenvalue:6.2f}  j' = {e.j_total}  m' = {str(e.m_total):>4}  "
                      f"conserved: {e.conserved}")
