"""Photon-counting thermometry: exposure time, collected photons, repetitions.

Each realization is exposed until the expected number of inelastic events
reaches the budget W (default 0.1 N).  The temperature signal is the change
of the collected photon number N_c over a step dT, and the number of
repetitions tau needed to resolve it against shot noise is
ceil(N_c(T) / (N_c(T + dT) - N_c(T))^2).

Three variants are reported for every temperature:

* ``full``: every photon heats and every unblocked photon is collected;
* ``no_interband``: interband scattering ignored altogether (neither heats
  nor is collected), a reference for its effect;
* ``filtered``: interband photons still heat but are spectrally removed
  before detection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .angular import DetectorSpec, PhaseEvaluator, detector_integrate, total_inelastic_rate
from .core import SpeciesSpec
from .errors import LatticeLightError, ValidityError
from .fermi import fermi_state
from .matrix_elements import LatticeModel
from .mott import mott_state
from .superfluid import solve_condensate

VARIANTS = ("full", "no_interband", "filtered")


class SignalDegenerateError(ValidityError):
    """N_c does not increase over [T, T + dT]."""


class UnboundedExposureError(ValidityError):
    """No heating at all, so the exposure time is unbounded."""


@dataclass
class ThermometryRun:
    """A temperature scan of one phase.

    ``params`` are passed to :func:`solve_phase` (e.g. ``filling`` for
    fermions, ``N`` for the superfluid, ``n0`` for the Mott insulator).
    ``W_budget`` defaults to 0.1 N.  ``efficiency`` scales collected photons
    only.
    """

    kind: str
    params: dict
    detector: DetectorSpec
    T_grid: tuple
    dT: float
    W_budget: float | None = None
    filter_interband: bool = False
    efficiency: float = 1.0
    rtol: float = 1e-4

    def __post_init__(self):
        T = np.asarray(self.T_grid, float)
        if T.ndim != 1 or len(T) == 0:
            raise ValidityError("temperature grid must be a non-empty list")
        if np.any(np.diff(T) <= 0):
            raise ValidityError("temperature grid must be strictly increasing")
        if not self.dT > 0:
            raise ValidityError("temperature step dT must be positive")
        if self.W_budget is not None and not self.W_budget > 0:
            raise ValidityError("inelastic budget W must be positive")
        if not self.efficiency > 0:
            raise ValidityError("detection efficiency must be positive")
        if self.kind not in ("fermi", "superfluid", "mott"):
            raise ValidityError(f"unknown phase kind {self.kind!r}")


def solve_phase(model: LatticeModel, species: SpeciesSpec, kind: str, T: float, **params):
    """Solve one state of ``kind`` at temperature T (E_R / k_B)."""
    if kind == "fermi":
        return fermi_state(model, T, N=params.get("N"), filling=params.get("filling"))
    if kind == "superfluid":
        N = params.get("N")
        if N is None:
            N = params["filling"] * model.M
        return solve_condensate(model, species, T, N, scale=params.get("scale", 1.0),
                                max_depletion=params.get("max_depletion", 0.1))
    if kind == "mott":
        return mott_state(model, species, T, n0=params.get("n0", 1), scale=params.get("scale", 1.0))
    raise ValidityError(f"unknown phase kind {kind!r}")


def exposure_time(heating_rate, W_budget) -> np.ndarray:
    """t_exp = W / (inelastic photon rate), in seconds."""
    rate = np.asarray(heating_rate, float)
    if np.any(rate <= 0):
        raise UnboundedExposureError("inelastic scattering rate is zero; exposure time unbounded")
    return np.asarray(W_budget, float) / rate


def collected_photons(collected, t_exp, filter_interband: bool = False,
                      efficiency: float = 1.0) -> np.ndarray:
    """N_c = efficiency * t_exp * (detected rate), dropping S_b photons when filtered.

    ``collected`` is the :class:`AngularIntegral` over the detector aperture.
    """
    rate = collected.total - (collected.components.get("b", 0.0) if filter_interband else 0.0)
    return efficiency * np.asarray(t_exp, float) * rate


def repetitions(Nc_T, Nc_T_dT) -> int:
    """tau = ceil(N_c(T) / (N_c(T + dT) - N_c(T))^2)."""
    signal = float(Nc_T_dT) - float(Nc_T)
    if not signal > 0:
        raise SignalDegenerateError(
            f"collected photons do not increase with temperature (dN_c = {signal:.4g})")
    return int(math.ceil(float(Nc_T) / signal**2))


@dataclass
class ThermometryRow:
    T: float
    N: float | None = None
    W: float | None = None
    heating: dict = field(default_factory=dict)       # photons/s per inelastic component
    collected: dict = field(default_factory=dict)     # photons/s per component in the aperture
    t_exp: dict = field(default_factory=dict)         # variant -> seconds
    N_c: dict = field(default_factory=dict)           # variant -> photons
    N_c_next: dict = field(default_factory=dict)      # variant -> photons at T + dT
    tau: dict = field(default_factory=dict)           # variant -> repetitions
    error: str | None = None

    def as_dict(self) -> dict:
        def clean(d):
            return {k: (float(v) if v is not None else None) for k, v in d.items()}
        return {"T": self.T, "N": self.N, "W": self.W, "heating": clean(self.heating),
                "collected": clean(self.collected), "t_exp": clean(self.t_exp),
                "N_c": clean(self.N_c), "N_c_next": clean(self.N_c_next),
                "tau": dict(self.tau), "error": self.error}


def _variant_numbers(heat, coll, W, efficiency):
    """Per-variant (t_exp, N_c) arrays over the states of a batch."""
    all_heat = sum(heat.components.values())
    heat_nb = all_heat - heat.components.get("b", 0.0)
    out = {}
    for name, h, filt in (("full", all_heat, False), ("no_interband", heat_nb, True),
                          ("filtered", all_heat, True)):
        with np.errstate(divide="ignore"):
            t = np.where(h > 0, W / np.where(h > 0, h, 1.0), np.inf)
        out[name] = (t, collected_photons(coll, np.where(np.isfinite(t), t, 0.0), filt, efficiency))
    return out


def temperature_curve(run: ThermometryRun, model: LatticeModel, species: SpeciesSpec,
                      workers: int = 1) -> list:
    """One :class:`ThermometryRow` per temperature; row failures are recorded, not raised.

    All states (each T and T + dT) are evaluated together so the angular
    cubature is shared across the whole grid.
    """
    temps = [float(T) for T in run.T_grid]
    rows = [ThermometryRow(T=T) for T in temps]
    states, owners = [], []
    for i, T in enumerate(temps):
        try:
            pair = [solve_phase(model, species, run.kind, T, **run.params),
                    solve_phase(model, species, run.kind, T + run.dT, **run.params)]
        except LatticeLightError as exc:
            rows[i].error = f"{type(exc).__name__}: {exc}"
            continue
        states += pair
        owners.append(i)
    if not states:
        return rows
    try:
        ev = PhaseEvaluator(model, states, species, workers=workers)
        heat = total_inelastic_rate(ev, rtol=run.rtol)
        coll = detector_integrate(ev, run.detector, rtol=run.rtol)
    except LatticeLightError as exc:
        for i in owners:
            rows[i].error = f"{type(exc).__name__}: {exc}"
        return rows

    Ns = np.array([float(s.N) for s in states])
    W = Ns * 0.1 if run.W_budget is None else np.full(len(states), float(run.W_budget))
    numbers = _variant_numbers(heat, coll, W, run.efficiency)
    for j, i in enumerate(owners):
        a, b = 2 * j, 2 * j + 1
        row = rows[i]
        row.N, row.W = float(Ns[a]), float(W[a])
        row.heating = {c: float(v[a]) for c, v in heat.components.items()}
        row.collected = {c: float(v[a]) for c, v in coll.components.items()}
        problems = []
        for name in VARIANTS:
            t, Nc = numbers[name]
            if not (np.isfinite(t[a]) and np.isfinite(t[b])):
                row.t_exp[name] = None
                problems.append(f"{name}: UnboundedExposureError: no inelastic scattering")
                continue
            row.t_exp[name] = float(t[a])
            row.N_c[name], row.N_c_next[name] = float(Nc[a]), float(Nc[b])
            try:
                row.tau[name] = repetitions(Nc[a], Nc[b])
            except SignalDegenerateError as exc:
                problems.append(f"{name}: SignalDegenerateError: {exc}")
        if problems:
            row.error = "; ".join(problems)
    return rows
