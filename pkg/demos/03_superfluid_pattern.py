"""Bogoliubov superfluid: condensate, quasiparticles and the scattering pattern.

Run from the repository root:  python demos/03_superfluid_pattern.py
"""
import warnings

import numpy as np

from latticelight import superfluid
from latticelight.angular import PhaseEvaluator, angular_map
from latticelight.core import RB87_D2, LatticeSpec
from latticelight.matrix_elements import LatticeModel

model = LatticeModel(LatticeSpec((30, 30, 1), (3.0, 3.0, 20.0)))

# The condensate number is found self-consistently from the depletion.
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    state = superfluid.solve_condensate(model, RB87_D2, 0.05, 2700)
print(f"N = {state.N:.0f}, N0 = {state.N0:.1f}, depletion {100 * state.depletion_fraction:.1f}%")
for w in caught:
    print("warning:", w.message)

# Low-lying modes are phonons: omega grows linearly and (u - v)^2 -> 0.
i0 = model.zero_index
row = slice(i0[0] + 1, i0[0] + 6)
print("omega  (q_x > 0):", np.round(state.omega[row, i0[1], 0], 4))
print("(u-v)^2         :", np.round(state.u_minus_v_sq[row, i0[1], 0], 4))

thetas = np.linspace(0, np.pi / 2, 361)
amap = angular_map(PhaseEvaluator(model, [state], RB87_D2), thetas=thetas, phis=np.array([0.0]))
bd = amap.breakdown
print("\ntheta     S_g0        S_g1       S_g2       S_b")
for i in [0, 1, 2, 4, 8, 16, 45, 90, 180, 270, 360]:
    print(f"{thetas[i]:.4f} {bd.g0[i, 0, 0]:10.4g} {bd.g1[i, 0, 0]:10.4g} {bd.g2[i, 0, 0]:10.4g}"
          f" {bd.b[i, 0, 0]:10.4g}")
# Close to the forward direction two-quasiparticle scattering (S_g2) wins,
# because single-phonon scattering is suppressed by (u - v)^2.
