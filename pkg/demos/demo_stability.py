"""
Square-root stability is sharp for Burgers
==========================================

Raise the data of the stationary shock +1 | -1 by eps on (0, 2).  The initial
L2 distance is sqrt(2) eps, while at t = 1 it is sqrt(2 eps + eps^2): the
solution map is only Holder-1/2 in L2.
"""

# %%
import numpy as np

from ftlab.harness import sharpness_burgers

rows = [sharpness_burgers(eps) for eps in (1e-1, 1e-2, 1e-3, 1e-4)]
for r in rows:
    print(f"eps = {r['eps']:.0e}   initial = {r['initial']:.3e}   final = {r['final']:.3e}"
          f"   closed form = {r['final_exact']:.3e}")

# %%
# The log-log slope of final against initial distance is close to 1/2.
slope = np.polyfit(np.log([r["initial"] for r in rows]), np.log([r["final"] for r in rows]), 1)[0]
print(f"fitted exponent: {slope:.4f}")
