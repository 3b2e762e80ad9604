"""Fast consistency checks run by ``latticelight selftest``."""
from __future__ import annotations

import itertools
import warnings

import numpy as np

from . import fermi, mott, oracles, superfluid
from .core import RB87_D2, LatticeSpec
from .matrix_elements import LatticeModel, f00, sum_rule_defect


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def check_sum_rule():
    model = LatticeModel(LatticeSpec((4, 1, 1), (15, 15, 15)))
    worst = max(sum_rule_defect(model, (i, 0, 0), (j, 0, 0), (0.37, 0.2, 0.1), 6)
                for i in range(4) for j in range(4))
    return worst < 1e-3, f"worst defect {worst:.2e} at m_max=6 (limit 1e-3)"


def check_diffraction():
    rng = np.random.default_rng(7)
    k = rng.uniform(-1.5, 1.5, size=(20, 3))
    k[:, 2] = 0.0
    pos = np.array(list(itertools.product(range(4), range(4))), float)
    direct = np.abs(np.exp(1j * np.pi * k[:, :2] @ pos.T).sum(axis=1)) ** 2
    err = np.max(np.abs(mott.diffraction_F(k, (4, 4, 1)) - direct) / direct.max())
    return err < 1e-10, f"F(k) vs direct sum on 4x4, max error {err:.1e}"


def check_fermion_oracle():
    sites, depths = (3, 2, 1), (8.0, 8.0, 15.0)
    k = np.array([0.3, 0.45, 0.2])
    model = LatticeModel(LatticeSpec(sites, depths))
    st = fermi.fermi_state(model, 0.05, N=3)
    sf = fermi.structure_factor(model, [st], k)
    ref = oracles.fermion_enumeration(depths, sites, k, 0.05, mu=st.mu)
    err = max(_rel(sf.g0[0, 0], ref["g0"]), _rel(sf.g1[0, 0], ref["g1"]), _rel(sf.b[0, 0], ref["b"]))
    return err < 1e-3, f"fermions on 3x2 vs Fock enumeration, max rel. error {err:.1e}"


def check_mott_oracle():
    sites, depths = (3, 2, 1), (20.0, 20.0, 20.0)
    k = np.array([0.3, 0.45, 0.2])
    U = 0.5
    model = LatticeModel(LatticeSpec(sites, depths))
    st = mott.ensemble(1, U / 8, U, 6)
    sf = mott.structure_factor(model, [st], k)
    ref = oracles.mott_enumeration(sites, 1, U / 8, U, k, f00(model, k))
    err = max(_rel(sf.g0[0, 0], ref["g0"]), _rel(sf.g1[0, 0], ref["g1"]))
    return err < 1e-3, f"Mott on 3x2 vs full enumeration at U/T=8, max rel. error {err:.1e}"


def check_bogoliubov():
    model = LatticeModel(LatticeSpec((2, 1, 1), (3.0, 3.0, 20.0)))
    k = np.array([0.3, 0.1, 0.2])
    N, scale = 200, 0.01
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        st = superfluid.solve_condensate(model, RB87_D2, 0.0, N, scale=scale)
    sf = superfluid.structure_factor(model, [st], k)
    ref = oracles.two_mode_bose(model, RB87_D2, N, 0.0, k, scale)
    err = _rel(sf.g1[0, 0] + sf.g2[0, 0], ref["g12"]) * st.N0
    away = np.ones(st.u.shape, bool)
    away[st.zero_index] = False
    unit = float(np.max(np.abs(st.u**2 - st.v**2 - 1)[away]))
    ok = err < 1.0 and unit < 1e-12
    return ok, f"two-mode Bogoliubov error x N0 = {err:.2f} (limit 1), |u^2-v^2-1| = {unit:.1e}"


CHECKS = [("sum_rule", check_sum_rule), ("diffraction", check_diffraction),
          ("fermion_oracle", check_fermion_oracle), ("mott_oracle", check_mott_oracle),
          ("bogoliubov_two_mode", check_bogoliubov)]


def run_selftest():
    results = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # report and keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
    return results
