"""TOML run configuration, validated against a JSON schema.

Layout (all angles in radians, energies in E_R, temperatures in E_R / k_B)::

    [lattice]      sites = [Mx, My, Mz], depths = [Vx, Vy, Vz],
                   spacing (m, optional), n_bands, cutoff
    [species]      preset = "Rb87" | "K40", optional overrides
                   mass_amu, a_s_bohr, gamma, wavelength, detuning, intensity
    [phase]        kind = "fermi" | "superfluid" | "mott",
                   T or T_over_TF, N or filling, n0, scale, max_depletion
    [grid]         theta_min, theta_max, n_theta, n_phi, phi
    [detector]     theta_stop, numerical_aperture or theta_max
    [thermometry]  temperatures or temperatures_over_TF, dT or dT_over_TF,
                   W_budget, filter_interband, efficiency
    [run]          threads, tolerance, threshold, out

Unknown keys are rejected.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass

import jsonschema
import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .angular import DetectorSpec
from .core import BOHR, AMU, SPECIES, LatticeSpec, SpeciesSpec
from .errors import ConfigError

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_triple_int = {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 3, "maxItems": 3}
_triple_num = {"type": "array", "items": _nonneg, "minItems": 3, "maxItems": 3}


def _section(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


SCHEMA = _section({
    "lattice": _section({
        "sites": _triple_int, "depths": _triple_num, "spacing": _pos,
        "n_bands": {"type": "integer", "minimum": 1}, "cutoff": {"type": "integer", "minimum": 1},
    }, required=("sites", "depths")),
    "species": _section({
        "preset": {"enum": sorted(SPECIES)}, "mass_amu": _pos, "a_s_bohr": _nonneg, "gamma": _pos,
        "wavelength": _pos, "detuning": _num, "intensity": _pos,
    }, required=("preset",)),
    "phase": _section({
        "kind": {"enum": ["fermi", "superfluid", "mott"]}, "T": _nonneg, "T_over_TF": _nonneg,
        "N": _pos, "filling": _pos, "n0": {"type": "integer", "minimum": 1}, "scale": _nonneg,
        "max_depletion": _pos,
    }, required=("kind",)),
    "grid": _section({
        "theta_min": _nonneg, "theta_max": _nonneg, "n_theta": {"type": "integer", "minimum": 1},
        "n_phi": {"type": "integer", "minimum": 1}, "phi": _num,
    }),
    "detector": _section({"theta_stop": _nonneg, "numerical_aperture": _pos, "theta_max": _pos}),
    "thermometry": _section({
        "temperatures": {"type": "array", "items": _nonneg, "minItems": 1},
        "temperatures_over_TF": {"type": "array", "items": _nonneg, "minItems": 1},
        "dT": _pos, "dT_over_TF": _pos, "W_budget": _pos, "filter_interband": {"type": "boolean"},
        "efficiency": _pos,
    }),
    "run": _section({
        "threads": {"type": "integer", "minimum": 1}, "tolerance": _pos, "threshold": _nonneg,
        "out": {"type": "string"},
    }),
}, required=("lattice", "species", "phase"))

DEFAULTS = {
    "grid": {"theta_min": 0.0, "theta_max": float(np.pi / 2), "n_theta": 90, "n_phi": 1, "phi": 0.0},
    "detector": {"theta_stop": 0.06, "numerical_aperture": 0.5},
    "run": {"threads": 1, "tolerance": 1e-4, "threshold": 0.0, "out": "out"},
}


@dataclass
class RunConfig:
    raw: dict
    lattice: LatticeSpec
    species: SpeciesSpec
    phase: dict
    grid: dict
    detector: DetectorSpec
    thermometry: dict | None
    run: dict

    def to_json(self) -> str:
        """Canonical one-line JSON of the resolved configuration."""
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))


def _exclusive(section, a, b, name, required=True):
    if a in section and b in section:
        raise ConfigError(f"[{name}] give only one of {a} or {b}")
    if required and a not in section and b not in section:
        raise ConfigError(f"[{name}] needs {a} or {b}")


def resolve(data: dict) -> RunConfig:
    """Validate a parsed configuration and build the typed objects."""
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<top>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None
    raw = copy.deepcopy(data)
    for name, values in DEFAULTS.items():
        raw[name] = {**values, **raw.get(name, {})}

    lat = raw["lattice"]
    lattice = LatticeSpec(sites=tuple(lat["sites"]), depths=tuple(lat["depths"]),
                          spacing=lat.get("spacing"), n_bands=lat.get("n_bands", 6),
                          cutoff=lat.get("cutoff", 12))

    sp = raw["species"]
    changes = {}
    if "mass_amu" in sp:
        changes["mass"] = sp["mass_amu"] * AMU
    if "a_s_bohr" in sp:
        changes["a_s"] = sp["a_s_bohr"] * BOHR
    for key in ("gamma", "wavelength", "detuning", "intensity"):
        if key in sp:
            changes[key] = sp[key]
    species = SPECIES[sp["preset"]].replace(**changes)

    ph = raw["phase"]
    kind = ph["kind"]
    if kind == "fermi":
        _exclusive(ph, "N", "filling", "phase")
        _exclusive(ph, "T", "T_over_TF", "phase", required=False)
    else:
        if "T_over_TF" in ph:
            raise ConfigError("[phase] T_over_TF only applies to fermions")
        if kind == "superfluid":
            _exclusive(ph, "N", "filling", "phase")

    det = raw["detector"]
    if "theta_max" in det:
        if "numerical_aperture" in data.get("detector", {}):
            raise ConfigError("[detector] give only one of numerical_aperture or theta_max")
        det.pop("numerical_aperture", None)
        detector = DetectorSpec(theta_stop=det["theta_stop"], theta_max=det["theta_max"])
    else:
        detector = DetectorSpec.from_aperture(det["numerical_aperture"], det["theta_stop"])

    th = raw.get("thermometry")
    if th is not None:
        _exclusive(th, "temperatures", "temperatures_over_TF", "thermometry")
        _exclusive(th, "dT", "dT_over_TF", "thermometry")
        if kind != "fermi" and ("temperatures_over_TF" in th or "dT_over_TF" in th):
            raise ConfigError("[thermometry] T_F units only apply to fermions")

    g = raw["grid"]
    if not g["theta_min"] <= g["theta_max"] <= np.pi:
        raise ConfigError("[grid] need 0 <= theta_min <= theta_max <= pi")
    return RunConfig(raw=raw, lattice=lattice, species=species, phase=ph, grid=g,
                     detector=detector, thermometry=th, run=raw["run"])


def load(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return resolve(data)


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``section.key=value`` strings; values are parsed as TOML."""
    data = copy.deepcopy(data)
    for item in overrides or ():
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        key, text = item.split("=", 1)
        section, name = key.strip().split(".", 1)
        try:
            value = tomllib.loads(f"v = {text.strip()}")["v"]
        except tomllib.TOMLDecodeError:
            value = text.strip()
        data.setdefault(section, {})[name] = value
    return data
