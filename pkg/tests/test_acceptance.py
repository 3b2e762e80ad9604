"""Acceptance criteria 1-8.

Each test records one PASS/FAIL line; the lines are printed together in
the pytest terminal summary (see conftest.py).  Run this file directly
with ``python tests/test_acceptance.py`` to get the same lines without
pytest.

Criterion 6 runs the full 150x150 thermometry through the command-line
front end.  Results are cached in ``tests/.acceptance_cache`` under a key
that hashes the package sources and the configuration, so any code change
forces a fresh computation; set LATTICELIGHT_RECOMPUTE=1 to ignore the
cache.
"""
import hashlib
import itertools
import json
import os
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

from latticelight import cli, fermi, mott, oracles, superfluid
from latticelight.angular import PhaseEvaluator, angular_map
from latticelight.bands import hubbard_J, hubbard_U
from latticelight.core import RB87_D2, LatticeSpec
from latticelight.matrix_elements import LatticeModel, f00, sum_rule_defect

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
CACHE = Path(__file__).resolve().parent / ".acceptance_cache"
RESULTS = []


def report(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def rel(a, b):
    return abs(a / b - 1)


def quiet_condensate(*args, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return superfluid.solve_condensate(*args, **kw)


# ---------------------------------------------------------------- 1


def test_criterion_1_hubbard_parameters():
    a = RB87_D2.wavelength / 2
    sf = LatticeModel(LatticeSpec((30, 30, 1), (3.0, 3.0, 20.0)))
    J = hubbard_J(sf.dims[0])
    U_sf = hubbard_U(sf.wanniers, RB87_D2, a)
    mi = LatticeModel(LatticeSpec((30, 30, 1), (15.0, 15.0, 15.0)))
    U_mi = hubbard_U(mi.wanniers, RB87_D2, a)
    ok = rel(J, 0.11) < 0.10 and rel(U_sf, 0.17) < 0.10 and rel(U_mi, 0.42) < 0.10
    report(1, ok, f"V=(3,3,20): J={J:.4f} (0.11 +-10%), U={U_sf:.4f} (0.17 +-10%); "
                  f"V=15^3: U={U_mi:.4f} (0.42 +-10%)")


# ---------------------------------------------------------------- 2


def test_criterion_2_condensate():
    fig3 = LatticeModel(LatticeSpec((30, 30, 1), (3.0, 3.0, 20.0)))
    s3 = quiet_condensate(fig3, RB87_D2, 0.05, 2700)
    fig4 = LatticeModel(LatticeSpec((30, 30, 1), (15.0, 15.0, 15.0)))
    # T = 0.0033 and a 15% depletion allowance, see the README
    s4 = quiet_condensate(fig4, RB87_D2, 0.0033, 900, scale=0.0006, max_depletion=0.15)
    ok = rel(s3.N0, 2527) < 0.02 and rel(s4.N0, 807) < 0.03
    report(2, ok, f"superfluid N0={s3.N0:.1f} (2527 +-2%), scaled-a_s N0={s4.N0:.1f} (807 +-3%)")


# ---------------------------------------------------------------- 3


def test_criterion_3_fermions():
    model = LatticeModel(LatticeSpec((30, 30, 1), (8.0, 8.0, 15.0)))
    TF = fermi.fermi_temperature(model, filling=0.5)
    full = fermi.fermi_state(model, 0.0, filling=1.0)
    thetas = np.linspace(0, np.pi, 181)
    k = np.concatenate([
        -np.stack([np.sin(thetas) * np.cos(p), np.sin(thetas) * np.sin(p), np.cos(thetas) - 1], 1)
        for p in (0.0, np.pi / 4, 0.3)])
    g1 = fermi.structure_factor(model, [full], k).g1
    ok = rel(TF, 0.12) < 0.05 and np.all(g1 == 0.0)
    report(3, ok, f"T_F={TF:.4f} (0.12 +-5%); f=1, T=0: max|S_g1|={np.max(np.abs(g1)):.1e} "
                  f"over {len(k)} directions (exactly 0 required)")


# ---------------------------------------------------------------- 4


def test_criterion_4_identities():
    worst = 0.0
    for V in (1.0, 3.0, 8.0, 15.0):
        model = LatticeModel(LatticeSpec((6, 1, 1), (V, V, V)))
        for kx in (1 / 3, 1.0, 5 / 3):
            for i, j in itertools.product(range(6), repeat=2):
                worst = max(worst, sum_rule_defect(model, (i, 0, 0), (j, 0, 0), (kx, 0, 0), 6))
    deep = LatticeModel(LatticeSpec((4, 1, 1), (15.0, 15.0, 15.0)))
    generic = max(sum_rule_defect(deep, (i, 0, 0), (j, 0, 0), (0.37, 0.2, 0.1), 6)
                  for i in range(4) for j in range(4))

    sfm = LatticeModel(LatticeSpec((30, 30, 1), (3.0, 3.0, 20.0)))
    s = quiet_condensate(sfm, RB87_D2, 0.05, 2700)
    away = np.ones(s.u.shape, bool)
    away[s.zero_index] = False
    unit = float(np.max(np.abs(s.u**2 - s.v**2 - 1)[away]))

    rng = np.random.default_rng(7)
    kk = rng.uniform(-1.5, 1.5, size=(200, 3))
    pos = np.array(list(itertools.product(range(4), range(4), range(1))), float)
    direct = np.abs(np.exp(1j * np.pi * kk @ pos.T).sum(axis=1)) ** 2
    F_err = float(np.max(np.abs(mott.diffraction_F(kk, (4, 4, 1)) - direct)))

    fm = LatticeModel(LatticeSpec((30, 30, 1), (8.0, 8.0, 15.0)))
    mm = LatticeModel(LatticeSpec((30, 30, 1), (15.0, 15.0, 15.0)))
    fs = [fermi.fermi_state(fm, T, filling=f) for T, f in ((0.02, 0.5), (0.0, 1.0), (0.1, 0.3))]
    ms = [mott.mott_state(mm, RB87_D2, T) for T in (0.0, 0.033)]
    k0 = np.zeros((1, 3))
    b0 = max(np.max(np.abs(fermi.structure_factor(fm, fs, k0).b)),
             np.max(np.abs(superfluid.structure_factor(sfm, [s], k0).b)),
             np.max(np.abs(mott.structure_factor(mm, ms, k0).b)))
    kr = rng.uniform(-2, 2, size=(40, 3))
    comps = [fermi.structure_factor(fm, fs, kr), superfluid.structure_factor(sfm, [s], kr),
             mott.structure_factor(mm, ms, kr)]
    Ns = [max(x.N for x in fs), s.N, ms[0].N]
    neg = max(-min(float(np.min(bd.component(c))) for c in ("g0", "g1", "g2", "b")) / N
              for bd, N in zip(comps, Ns))
    ok = worst < 1e-3 and generic < 1e-3 and unit < 1e-12 and F_err < 1e-10 and b0 < 1e-3 and neg < 1e-9
    report(4, ok, f"sum-rule defect {worst:.1e} (ring-grid k, V<=15) and {generic:.1e} "
                  f"(generic k, V=15) < 1e-3; |u^2-v^2-1|={unit:.1e} < 1e-12; "
                  f"F(k) 4x4 error {F_err:.1e} < 1e-10; |S_b(0)|={b0:.1e}; "
                  f"min component / N = {-neg:.1e} >= -1e-9")


# ---------------------------------------------------------------- 5


def test_criterion_5_small_oracles():
    sites, depths = (3, 2, 1), (8.0, 8.0, 15.0)
    ks = [np.array([0.3, 0.45, 0.2]), np.array([1.1, -0.4, 0.7])]
    model = LatticeModel(LatticeSpec(sites, depths))
    canon = 0.0
    for T, N in ((0.0, 3), (0.001, 3), (0.0, 1)):
        st = fermi.fermi_state(model, T, N=N)
        for k in ks:
            sf = fermi.structure_factor(model, [st], k)
            ref = oracles.fermion_enumeration(depths, sites, k, T, N=N)
            canon = max(canon, *(rel(sf.component(c)[0, 0], ref[c]) for c in ("g0", "g1", "b")))
    gc = 0.0
    for T in (0.02, 0.1):
        st = fermi.fermi_state(model, T, N=3)
        for k in ks:
            sf = fermi.structure_factor(model, [st], k)
            ref = oracles.fermion_enumeration(depths, sites, k, T, mu=st.mu)
            gc = max(gc, *(rel(sf.component(c)[0, 0], ref[c]) for c in ("g0", "g1", "b")))

    mm = LatticeModel(LatticeSpec(sites, (20.0, 20.0, 20.0)))
    mott_err = 0.0
    for ratio in (8.0, 12.0):
        U = 0.5
        s = mott.ensemble(1, U / ratio, U, mm.M)
        for k in ks:
            sf = mott.structure_factor(mm, [s], k)
            ref = oracles.mott_enumeration(sites, 1, U / ratio, U, k, f00(mm, k))
            mott_err = max(mott_err, rel(sf.g0[0, 0], ref["g0"]), rel(sf.g1[0, 0], ref["g1"]))

    two = LatticeModel(LatticeSpec((2, 1, 1), (3.0, 3.0, 20.0)))
    k = np.array([0.3, 0.1, 0.2])
    scaled = []
    for N in (150, 300, 600):
        s = quiet_condensate(two, RB87_D2, 0.0, N, scale=2.0 / N)
        sf = superfluid.structure_factor(two, [s], k)
        ref = oracles.two_mode_bose(two, RB87_D2, N, 0.0, k, 2.0 / N)
        scaled.append((s.N0, rel(sf.g1[0, 0] + sf.g2[0, 0], ref["g12"]) * s.N0))
    bose_ok = all(N0 >= 100 and e < 1.0 for N0, e in scaled) and max(e for _, e in scaled) < 2 * min(
        e for _, e in scaled)
    ok = canon < 1e-3 and gc < 1e-3 and mott_err < 1e-3 and bose_ok
    report(5, ok, f"fermions 3x2: canonical (closed shells, T<=0.001) {canon:.1e}, "
                  f"grand canonical {gc:.1e} < 1e-3; Mott 3x2 full enumeration U/T>=8 "
                  f"{mott_err:.1e} < 1e-3; two-mode Bose error x N0 = "
                  + ", ".join(f"{e:.3f} (N0={n0:.0f})" for n0, e in scaled) + " (O(1/N0))")


# ---------------------------------------------------------------- 6

TARGETS = {
    # config: [(T label, low, high, reference value)]
    "fig5_fermi": [("0.1 T_F", 4, 12, 7), ("0.5 T_F", 20, 60, 39)],
    "fig5_superfluid": [("0.004 E_R", 100, 350, 197), ("0.02 E_R", 12, 40, 23)],
    "fig5_mott": [("0.027 E_R", 26000 / 3, 26000 * 3, 26000)],
}


def _source_key(config_path):
    h = hashlib.sha256()
    for p in sorted((ROOT / "src" / "latticelight").glob("*.py")):
        h.update(p.read_bytes())
    h.update(Path(config_path).read_bytes())
    return h.hexdigest()[:16]


def thermometry_rows(name):
    path = CONFIGS / f"{name}.toml"
    out = CACHE / f"{name}-{_source_key(path)}"
    doc = out / "thermometry.json"
    if doc.exists() and not os.environ.get("LATTICELIGHT_RECOMPUTE"):
        return json.loads(doc.read_text())["rows"], "cached"
    start = time.time()
    code = cli.run(["thermometry", "--config", str(path), "--out", str(out)])
    assert code == 0, f"thermometry run for {name} exited with {code}"
    return json.loads(doc.read_text())["rows"], f"{time.time() - start:.0f} s"


def _raw_filter_change(row):
    """filtered/full - 1 before the ceiling in the repetition count, for the report only."""
    try:
        raw = {v: row["N_c"][v] / (row["N_c_next"][v] - row["N_c"][v]) ** 2
               for v in ("full", "filtered")}
    except (KeyError, TypeError, ZeroDivisionError):
        return "n/a"
    return f"{raw['filtered'] / raw['full'] - 1:+.3f}"


@pytest.mark.slow
@pytest.mark.parametrize("name", list(TARGETS))
def test_criterion_6_thermometry(name):
    rows, how = thermometry_rows(name)
    ok, parts = True, []
    for row, (label, lo, hi, ref) in zip(rows, TARGETS[name]):
        tau = row["tau"]
        full = tau.get("full")
        inside = full is not None and lo <= full <= hi
        ordered = "no_interband" not in tau or (full is not None and full > tau["no_interband"])
        if name == "fig5_mott":
            # interband light is the only heating once the lowest band is
            # ignored, so there is no finite no-interband exposure
            ordered = True
        filt = full is not None and tau.get("filtered") is not None and \
            abs(tau["filtered"] / full - 1) <= 0.10
        if name == "fig5_mott":
            filt = tau.get("filtered") is not None
        ok &= bool(inside and ordered and filt)
        parts.append(f"T={label}: tau={full} in [{lo:.0f}, {hi:.0f}] (reference {ref}), "
                     f"no interband {tau.get('no_interband')}, filtered {tau.get('filtered')} "
                     f"(unrounded filtered/full - 1 = {_raw_filter_change(row)})")
    report(6, ok, f"{name} ({how}): " + "; ".join(parts))


def test_criterion_6_smoke_runtime(tmp_path):
    times = {}
    for phase in ("fermi", "superfluid", "mott"):
        start = time.time()
        code = cli.run(["thermometry", "--config", str(CONFIGS / f"smoke_{phase}.toml"),
                        "--out", str(tmp_path / phase)])
        times[phase] = (time.time() - start, code)
    ok = all(t < 120 and c == 0 for t, c in times.values())
    report(6, ok, "30x30 smoke runs " + ", ".join(f"{p} {t:.0f} s" for p, (t, _) in times.items())
           + " (each under 120 s)")


# ---------------------------------------------------------------- 7


def _map(model, state, species, thetas, phi):
    ev = PhaseEvaluator(model, [state], species)
    return angular_map(ev, thetas=thetas, phis=np.array([phi])).breakdown


def test_criterion_7_figure_shapes():
    from latticelight.core import K40_D2
    thetas = np.linspace(0, np.pi / 2, 721)
    fm = LatticeModel(LatticeSpec((30, 30, 1), (8.0, 8.0, 15.0)))
    fs = fermi.fermi_state(fm, 0.02, filling=0.5)
    bf = _map(fm, fs, K40_D2, thetas, 0.0)
    sm = LatticeModel(LatticeSpec((30, 30, 1), (3.0, 3.0, 20.0)))
    ss = quiet_condensate(sm, RB87_D2, 0.05, 2700)
    bs = _map(sm, ss, RB87_D2, thetas, 0.0)
    mm = LatticeModel(LatticeSpec((30, 30, 1), (15.0, 15.0, 15.0)))
    ms = mott.mott_state(mm, RB87_D2, 0.0)
    bm = _map(mm, ms, RB87_D2, thetas, 0.0)

    peaks = [rel(bf.g0[0, 0, 0], fs.N**2), rel(bs.g0[0, 0, 0], ss.N**2), rel(bm.g0[0, 0, 0], ms.N**2)]
    # first zero of the 30-site pattern: sin(theta) = 2/30 along phi = 0
    first_zero = np.arcsin(2 / 30)
    inside = (thetas > 0) & (thetas <= first_zero)
    g1_in = bf.g1[inside, 0, 0]
    fermi_drop = bool(np.all(np.diff(g1_in) > 0))
    i45 = np.argmin(np.abs(thetas - np.pi / 4))
    sf_ratio = bs.g1[1, 0, 0] / bs.g1[i45, 0, 0]
    mott_zero = float(np.max(np.abs(bm.g1)))
    near = slice(1, 4)
    g2_dom = bool(np.all(bs.g2[near, 0, 0] > bs.g1[near, 0, 0]) and
                  np.all(bs.g2[near, 0, 0] > bs.b[near, 0, 0]))
    ok = max(peaks) < 1e-3 and fermi_drop and sf_ratio < 0.1 and mott_zero == 0.0 and g2_dom
    report(7, ok, f"S_g0(0)/N^2-1 = {max(peaks):.1e}; fermion S_g1 rising on (0, {first_zero:.4f}] "
                  f"= {fermi_drop}; superfluid S_g1({thetas[1]:.4f})/S_g1(pi/4) = {sf_ratio:.3f} < 0.1; "
                  f"Mott T=0 lowest-band inelastic max {mott_zero:.1e}; "
                  f"S_g2 > S_g1, S_b at theta<={thetas[3]:.4f}: {g2_dom}")


# ---------------------------------------------------------------- 8


def test_criterion_8_mott_ground_state_fraction():
    model = LatticeModel(LatticeSpec((30, 30, 1), (15.0, 15.0, 15.0)))
    s = mott.mott_state(model, RB87_D2, 0.033)
    ok = 0.32 / 2 <= s.P0 <= 0.32 * 2
    report(8, ok, f"P0={s.P0:.3f} with U={s.U:.4f} E_R, T=0.033 (reference 0.32, factor-2 window "
                  f"[0.16, 0.64]); particle-hole ensemble over v <= {int(s.v[-1])} pairs")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
