"""Mott insulator at finite temperature, and a weakly interacting superfluid
on the same lattice.

Run from the repository root:  python demos/04_mott_versus_superfluid.py
"""
import warnings

import numpy as np

from latticelight import mott, superfluid
from latticelight.angular import PhaseEvaluator, angular_map
from latticelight.core import RB87_D2, LatticeSpec
from latticelight.matrix_elements import LatticeModel

model = LatticeModel(LatticeSpec((30, 30, 1), (15.0, 15.0, 15.0)))
cold = mott.mott_state(model, RB87_D2, 0.0)
warm = mott.mott_state(model, RB87_D2, 0.033)
print(f"U = {warm.U:.4f} E_R; at T = 0.033 the ground state carries P0 = {warm.P0:.3f}")
print(f"mean particle-hole pairs {warm.mean_pairs:.2f}, <n^2> - 1 = {warm.fluctuation:.4f}")

thetas = np.linspace(0, np.pi / 2, 361)
ev = PhaseEvaluator(model, [cold, warm], RB87_D2)
bd = angular_map(ev, thetas=thetas, phis=np.array([0.0])).breakdown
print("\ntheta     S_g0        S_g1(T=0)  S_g1(T=0.033)  S_b")
for i in [0, 2, 4, 8, 30, 90, 180, 360]:
    print(f"{thetas[i]:.4f} {bd.g0[i, 0, 1]:10.4g} {bd.g1[i, 0, 0]:10.4g} {bd.g1[i, 0, 1]:13.4g}"
          f" {bd.b[i, 0, 1]:10.4g}")
# At T = 0 the lowest-band inelastic light vanishes: the paths that move an
# atom from one site to another interfere destructively.

# Same lattice, scattering length scaled down so that tunnelling dominates.
with warnings.catch_warnings():
    warnings.simplefilter("ignore", RuntimeWarning)
    sf = superfluid.solve_condensate(model, RB87_D2, 0.0033, 900, scale=0.0006, max_depletion=0.15)
print(f"\nsuperfluid with a_s x 0.0006: N0 = {sf.N0:.1f}")
bs = angular_map(PhaseEvaluator(model, [sf], RB87_D2), thetas=thetas, phis=np.array([0.0])).breakdown
ratio = bs.total[:, 0, 0] / bd.total[:, 0, 1]
print("superfluid / Mott total S at theta =", np.round(thetas[[4, 30, 90, 180]], 3), ":",
      np.round(ratio[[4, 30, 90, 180]], 3))
