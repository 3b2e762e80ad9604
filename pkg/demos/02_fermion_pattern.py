"""Angular structure factor of a spin-polarized Fermi gas (30 x 30, half filling).

Run from the repository root:  python demos/02_fermion_pattern.py
"""
import numpy as np

from latticelight import fermi
from latticelight.angular import PhaseEvaluator, angular_map
from latticelight.core import K40_D2, LatticeSpec
from latticelight.matrix_elements import LatticeModel

model = LatticeModel(LatticeSpec((30, 30, 1), (8.0, 8.0, 15.0)))
TF = fermi.fermi_temperature(model, filling=0.5)
print(f"T_F = {TF:.4f} E_R / k_B")

states = [fermi.fermi_state(model, T, filling=0.5) for T in (0.0, 0.02, 0.1)]
for s in states:
    below = fermi.fermi_surface_count(model, s)
    print(f"T = {s.T:.3f}: mu = {s.mu:.4f}, atoms below E_F = {below:.1f} of {s.N:.0f}")

# Scan theta at phi = 0.  S_g0 is the coherent (Bragg) part, S_g1 intraband
# Pauli-limited scattering and S_b the interband background.
thetas = np.linspace(0, np.pi / 2, 181)
amap = angular_map(PhaseEvaluator(model, states, K40_D2), thetas=thetas, phis=np.array([0.0]))
bd = amap.breakdown
print("\ntheta    S_g0(T=0.02)   S_g1(T=0)   S_g1(T=0.02)  S_g1(T=0.1)   S_b(T=0.02)")
for i in range(0, len(thetas), 15):
    print(f"{thetas[i]:.3f}  {bd.g0[i, 0, 1]:12.4g}  {bd.g1[i, 0, 0]:10.4g}  {bd.g1[i, 0, 1]:12.4g}"
          f"  {bd.g1[i, 0, 2]:11.4g}  {bd.b[i, 0, 1]:11.4g}")

# Near the forward direction the intraband part is blocked: only atoms near
# the Fermi surface can take up a small momentum kick.
small = thetas[1:8]
print("\nsmall-angle S_g1 at T = 0.02:", np.round(bd.g1[1:8, 0, 1], 3), "at theta", np.round(small, 3))

# A completely filled band cannot scatter inside the band at all.
full = fermi.fermi_state(model, 0.0, filling=1.0)
g1 = fermi.structure_factor(model, [full], np.array([[0.3, 0.2, 0.1], [1.0, 0.5, 0.2]])).g1
print("filled band, T = 0: S_g1 =", g1.ravel())
