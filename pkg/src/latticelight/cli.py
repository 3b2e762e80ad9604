"""Command-line front end: ``latticelight <command> --config run.toml``.

Every command writes its outputs atomically into ``--out`` and prints one
JSON summary line.  Exit codes: 0 success, 1 selftest failure, 2 bad
configuration, 3 physics-validity error, 4 convergence failure, 5 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import warnings

import numpy as np

from . import __version__
from .angular import PhaseEvaluator, angular_map, detector_integrate, total_inelastic_rate
from .bands import hubbard_J, hubbard_U
from .config import apply_overrides, resolve
from .core import recoil_energy
from .errors import ConfigError, ConvergenceError, ValidityError
from .fermi import fermi_surface_count, fermi_temperature
from .matrix_elements import COMPONENTS, LatticeModel
from .thermometry import VARIANTS, ThermometryRun, solve_phase, temperature_curve

EXIT_OK, EXIT_SELFTEST, EXIT_CONFIG, EXIT_VALIDITY, EXIT_CONVERGENCE, EXIT_IO = 0, 1, 2, 3, 4, 5
PHASE_COMMANDS = ("fermi", "superfluid", "mott")


# ---------------------------------------------------------------- output helpers


def atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _provenance(cfg, command):
    return {"program": "latticelight", "version": __version__, "command": command,
            "config": cfg.raw}


def write_csv(path, cfg, command, header, rows):
    buf = io.StringIO()
    buf.write(f"# latticelight {__version__} {command}\n")
    buf.write("# config: " + cfg.to_json() + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    atomic_write(path, buf.getvalue())


def write_json(path, cfg, command, payload):
    doc = {"provenance": _provenance(cfg, command), **payload}
    atomic_write(path, json.dumps(_plain(doc), indent=2, sort_keys=True) + "\n")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


# ---------------------------------------------------------------- physics helpers


def _temperature(cfg, model, value=None, scaled=False):
    ph = cfg.phase
    if value is None:
        if "T_over_TF" in ph:
            value, scaled = ph["T_over_TF"], True
        else:
            value = ph.get("T", 0.0)
    if scaled:
        return value * fermi_temperature(model, N=ph.get("N"), filling=ph.get("filling"))
    return float(value)


def _phase_params(cfg):
    keys = ("N", "filling", "n0", "scale", "max_depletion")
    return {k: cfg.phase[k] for k in keys if k in cfg.phase}


def _state(cfg, model, T):
    return solve_phase(model, cfg.species, cfg.phase["kind"], T, **_phase_params(cfg))


def _state_summary(cfg, model, state):
    kind = cfg.phase["kind"]
    out = {"kind": kind, "T": state.T, "N": float(state.N)}
    if kind == "fermi":
        out.update(mu=state.mu, T_F=fermi_temperature(model, N=state.N),
                   N_below_EF=fermi_surface_count(model, state))
    elif kind == "superfluid":
        out.update(N0=state.N0, depletion_fraction=state.depletion_fraction,
                   residual=state.residual, higher_band_ratio=state.particle_ratio,
                   U0=float(state.Uq[state.zero_index]))
    else:
        out.update(U=state.U, P0=state.P0, mean_pairs=state.mean_pairs,
                   fluctuation=state.fluctuation, v_max=int(state.v[-1]), tail=state.tail)
    return out


def _grid(cfg):
    g = cfg.grid
    thetas = np.linspace(g["theta_min"], g["theta_max"], g["n_theta"])
    if g["n_phi"] == 1:
        phis = np.array([g["phi"]])
    else:
        phis = 2 * np.pi * np.arange(g["n_phi"]) / g["n_phi"]
    return thetas, phis


def _map_rows(amap):
    rows = []
    for i, t in enumerate(amap.thetas):
        for j, p in enumerate(amap.phis):
            comps = [amap.breakdown.component(c)[i, j, 0] for c in COMPONENTS]
            rows.append([t, p, *comps, sum(comps), amap.rate("total")[i, j, 0]])
    return rows


MAP_HEADER = ["theta", "phi", "S_g0", "S_g1", "S_g2", "S_b", "S_total", "rate_total"]


# ---------------------------------------------------------------- commands


def cmd_bands(cfg, args):
    model = LatticeModel(cfg.lattice)
    a = cfg.lattice.resolved_spacing(cfg.species)
    rows = []
    for d, sol in enumerate(model.dims):
        for i, q in enumerate(sol.q):
            rows.append([d, q, *sol.energies[:, i]])
    header = ["dim", "q"] + [f"E_{m}" for m in range(cfg.lattice.n_bands)]
    path = os.path.join(args.out, "bands.csv")
    write_csv(path, cfg, "bands", header, rows)
    info = {"J": [hubbard_J(s) for s in model.dims],
            "U": hubbard_U(model.wanniers, cfg.species, a),
            "spacing": a, "recoil_energy_J": recoil_energy(cfg.lattice, cfg.species)}
    try:
        info["gap"] = model.bands.gap()
    except ValidityError:
        info["gap"] = None
    jpath = os.path.join(args.out, "bands.json")
    write_json(jpath, cfg, "bands", info)
    return {"outputs": [path, jpath], **{k: info[k] for k in ("J", "U")}}


def cmd_map(cfg, args, command="map"):
    model = LatticeModel(cfg.lattice)
    state = _state(cfg, model, _temperature(cfg, model))
    ev = PhaseEvaluator(model, [state], cfg.species, threshold=cfg.run["threshold"],
                        workers=cfg.run["threads"])
    thetas, phis = _grid(cfg)
    amap = angular_map(ev, thetas=thetas, phis=phis)
    path = os.path.join(args.out, f"{command}.csv")
    write_csv(path, cfg, command, MAP_HEADER, _map_rows(amap))
    outputs = [path]
    summary = {}
    if command in PHASE_COMMANDS:
        summary = _state_summary(cfg, model, state)
        jpath = os.path.join(args.out, f"{command}.json")
        write_json(jpath, cfg, command, {"state": summary})
        outputs.append(jpath)
    return {"outputs": outputs, **summary}


def cmd_phase(cfg, args):
    if cfg.phase["kind"] != args.command:
        raise ConfigError(f"config describes a {cfg.phase['kind']} phase, not {args.command}")
    return cmd_map(cfg, args, command=args.command)


def cmd_collect(cfg, args):
    model = LatticeModel(cfg.lattice)
    state = _state(cfg, model, _temperature(cfg, model))
    ev = PhaseEvaluator(model, [state], cfg.species, threshold=cfg.run["threshold"],
                        workers=cfg.run["threads"])
    tol = cfg.run["tolerance"]
    coll = detector_integrate(ev, cfg.detector, rtol=tol)
    heat = total_inelastic_rate(ev, rtol=tol)
    payload = {
        "detector": {"theta_stop": cfg.detector.theta_stop, "theta_max": cfg.detector.theta_max},
        "total": float(coll.total[0]),
        "components": {c: float(v[0]) for c, v in coll.components.items()},
        "quadrature_error": float(coll.total_error[0]),
        "component_errors": {c: float(v[0]) for c, v in coll.errors.items()},
        "inelastic_full_sphere": {c: float(v[0]) for c, v in heat.components.items()},
        "state": _state_summary(cfg, model, state),
        "units": "photons/s",
    }
    path = os.path.join(args.out, "collect.json")
    write_json(path, cfg, "collect", payload)
    return {"outputs": [path], "total": payload["total"]}


def cmd_thermometry(cfg, args):
    th = cfg.thermometry
    if th is None:
        raise ConfigError("thermometry command needs a [thermometry] section")
    model = LatticeModel(cfg.lattice)
    if "temperatures_over_TF" in th:
        TF = fermi_temperature(model, N=cfg.phase.get("N"), filling=cfg.phase.get("filling"))
        temps = [t * TF for t in th["temperatures_over_TF"]]
    else:
        temps = list(th["temperatures"])
    dT = th["dT"] if "dT" in th else th["dT_over_TF"] * fermi_temperature(
        model, N=cfg.phase.get("N"), filling=cfg.phase.get("filling"))
    run = ThermometryRun(kind=cfg.phase["kind"], params=_phase_params(cfg), detector=cfg.detector,
                         T_grid=tuple(temps), dT=dT, W_budget=th.get("W_budget"),
                         filter_interband=th.get("filter_interband", False),
                         efficiency=th.get("efficiency", 1.0), rtol=cfg.run["tolerance"])
    rows = temperature_curve(run, model, cfg.species, workers=cfg.run["threads"])
    header = (["T", "N", "W"] + [f"t_exp_{v}" for v in VARIANTS] + [f"N_c_{v}" for v in VARIANTS]
              + [f"tau_{v}" for v in VARIANTS]
              + [f"collected_{c}" for c in COMPONENTS] + [f"heating_{c}" for c in COMPONENTS]
              + ["error"])
    table = []
    for r in rows:
        table.append([r.T, r.N, r.W] + [r.t_exp.get(v) for v in VARIANTS]
                     + [r.N_c.get(v) for v in VARIANTS] + [r.tau.get(v) for v in VARIANTS]
                     + [r.collected.get(c) for c in COMPONENTS]
                     + [r.heating.get(c) for c in COMPONENTS] + [r.error or ""])
    path = os.path.join(args.out, "thermometry.csv")
    write_csv(path, cfg, "thermometry", header, table)
    jpath = os.path.join(args.out, "thermometry.json")
    selected = "filtered" if run.filter_interband else "full"
    write_json(jpath, cfg, "thermometry", {"dT": dT, "selected_variant": selected,
                                           "rows": [r.as_dict() for r in rows]})
    return {"outputs": [path, jpath], "tau": [r.tau.get(selected) for r in rows],
            "errors": sum(r.error is not None for r in rows)}


def cmd_selftest(args):
    from .selftest import run_selftest
    results = run_selftest()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    passed = all(ok for _, ok, _ in results)
    return passed, {"checks": len(results), "failed": sum(not ok for _, ok, _ in results)}


COMMANDS = {"bands": cmd_bands, "map": cmd_map, "collect": cmd_collect,
            "fermi": cmd_phase, "superfluid": cmd_phase, "mott": cmd_phase,
            "thermometry": cmd_thermometry}


def build_parser():
    parser = argparse.ArgumentParser(prog="latticelight",
                                     description="Light scattering from atoms in optical lattices.")
    parser.add_argument("--version", action="version", version=f"latticelight {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in list(COMMANDS) + ["selftest"]:
        p = sub.add_parser(name)
        if name == "selftest":
            continue
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--out", help="output directory (overrides run.out)")
        p.add_argument("--threads", type=int, help="worker threads (overrides run.threads)")
        p.add_argument("--tolerance", type=float, help="relative quadrature tolerance")
        p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override a config entry; may be repeated")
    return parser


def _load(args):
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        with open(args.config, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {args.config}: {exc}") from None
    sets = list(args.set)
    if args.threads is not None:
        sets.append(f"run.threads={args.threads}")
    if args.tolerance is not None:
        sets.append(f"run.tolerance={args.tolerance!r}")
    cfg = resolve(apply_overrides(data, sets))
    args.out = args.out or cfg.run["out"]
    return cfg


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            passed, summary = cmd_selftest(args)
            print(json.dumps({"command": "selftest", "status": "ok" if passed else "failed", **summary}))
            return EXIT_OK if passed else EXIT_SELFTEST
        cfg = _load(args)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            summary = COMMANDS[args.command](cfg, args)
        notes = sorted({str(w.message) for w in caught})
        line = {"command": args.command, "status": "ok", **_plain(summary)}
        if notes:
            line["warnings"] = notes
        print(json.dumps(line, sort_keys=True))
        return EXIT_OK
    except ConfigError as exc:
        return _fail(args, "config", exc, EXIT_CONFIG)
    except ConvergenceError as exc:
        return _fail(args, "convergence", exc, EXIT_CONVERGENCE)
    except ValidityError as exc:
        return _fail(args, "validity", exc, EXIT_VALIDITY)
    except OSError as exc:
        return _fail(args, "io", exc, EXIT_IO)


def _fail(args, kind, exc, code):
    print(json.dumps({"command": args.command, "status": "error", "kind": kind, "message": str(exc)}))
    print(f"latticelight: {kind} error: {exc}", file=sys.stderr)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
