"""Photon-counting thermometry on a small lattice.

The full 150 x 150 runs are driven by the command line, e.g.
    latticelight thermometry --config configs/fig5_fermi.toml
This script walks through the same steps at 30 x 30 so it finishes quickly.
"""
from latticelight import fermi
from latticelight.angular import DetectorSpec, PhaseEvaluator, detector_integrate, total_inelastic_rate
from latticelight.core import K40_D2, LatticeSpec
from latticelight.matrix_elements import LatticeModel
from latticelight.thermometry import (ThermometryRun, collected_photons, exposure_time, repetitions,
                                      temperature_curve)

model = LatticeModel(LatticeSpec((30, 30, 1), (8.0, 8.0, 15.0)))
TF = fermi.fermi_temperature(model, filling=0.5)
T, dT = 0.5 * TF, 0.05 * TF
states = [fermi.fermi_state(model, t, filling=0.5) for t in (T, T + dT)]
ev = PhaseEvaluator(model, states, K40_D2)

# 1. heating: every inelastic photon over the whole sphere counts
heat = total_inelastic_rate(ev, rtol=1e-4)
print("inelastic rate (photons/s):", {c: v.round(0).tolist() for c, v in heat.components.items()})

# 2. the exposure stops after W = 0.1 N inelastic events
t_exp = exposure_time(heat.total, 0.1 * states[0].N)
print("exposure time (us):", (1e6 * t_exp).round(2).tolist())

# 3. light collected between the beam stop and the lens aperture
det = DetectorSpec.from_aperture(0.5, theta_stop=0.06)
coll = detector_integrate(ev, det, rtol=1e-4)
Nc = collected_photons(coll, t_exp)
print("collected photons per shot:", Nc.round(3).tolist())

# 4. shots needed to resolve dT against shot noise
print("repetitions:", repetitions(Nc[0], Nc[1]))

# The same numbers, plus the no-interband and filtered variants, in one call:
run = ThermometryRun("fermi", {"filling": 0.5}, det, (T,), dT)
row = temperature_curve(run, model, K40_D2)[0]
print("temperature_curve:", row.tau)
