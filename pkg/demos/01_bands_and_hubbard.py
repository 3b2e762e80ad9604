"""Band structure and Hubbard parameters of the lattices used in the demos.

Run from the repository root:  python demos/01_bands_and_hubbard.py
"""
import numpy as np

from latticelight.bands import hubbard_J, hubbard_U
from latticelight.core import RB87_D2, LatticeSpec, recoil_energy
from latticelight.matrix_elements import LatticeModel

# A lattice is three independent 1D problems V sin^2(pi x / a).  Energies are
# in recoil units E_R and the spacing defaults to half the probe wavelength.
for depths in [(3.0, 3.0, 20.0), (8.0, 8.0, 15.0), (15.0, 15.0, 15.0), (20.0, 20.0, 20.0)]:
    model = LatticeModel(LatticeSpec((30, 30, 1), depths))
    sol = model.dims[0]
    width = sol.energies[0].max() - sol.energies[0].min()
    J = hubbard_J(sol)
    U = hubbard_U(model.wanniers, RB87_D2, RB87_D2.wavelength / 2)
    print(f"V = {depths}:  lowest band width {width:.4f}, gap {model.bands.gap():.3f}, "
          f"J = {J:.4f}, U(87Rb) = {U:.4f}, U/J = {U / J:.1f}")

# The band width is 4J for a tight-binding band; compare the two.
model = LatticeModel(LatticeSpec((60, 1, 1), (15.0, 15.0, 15.0)))
e = model.dims[0].energies[0]
print("\nV = 15: band width / 4J =", round((e.max() - e.min()) / (4 * hubbard_J(model.dims[0])), 4))

er = recoil_energy(LatticeSpec((1, 1, 1), (0, 0, 0)), RB87_D2)
print(f"E_R / h for 87Rb at {RB87_D2.wavelength * 1e9:.1f} nm: {er / 6.62607015e-34:.1f} Hz")

# Wannier functions: localized, unit norm, and their density transform
# f00(k) sets the Debye-Waller-like suppression of coherent scattering.
w = model.wanniers[0]
k = np.array([0.0, 0.5, 1.0, 2.0])
print("|f00| along x at k =", k, ":", np.round(np.abs(w.fourier_density(k)), 4))
