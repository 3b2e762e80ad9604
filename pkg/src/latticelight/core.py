"""Physical configuration, units and scattering geometry.

Internal units: energies in recoil energies E_R = hbar^2 pi^2 / (2 m a^2),
temperatures in E_R / k_B, wave vectors in pi / a and positions in a.
SI values only appear in :class:`SpeciesSpec`, :class:`LatticeSpec.spacing`
and the photon-rate prefactor.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import constants as sc

from .errors import ConfigError

HBAR = sc.hbar
C_LIGHT = sc.c
AMU = sc.atomic_mass
BOHR = sc.physical_constants["Bohr radius"][0]


@dataclass(frozen=True)
class SpeciesSpec:
    """Atomic species and probe-laser parameters (SI units).

    ``detuning`` is measured in units of ``gamma``; ``gamma`` is the excited
    state linewidth in rad/s and ``wavelength`` the transition wavelength.
    """

    name: str
    mass: float
    a_s: float
    gamma: float
    wavelength: float
    detuning: float = 20.0
    intensity: float = 5.0

    def __post_init__(self):
        for field in ("mass", "gamma", "wavelength", "intensity"):
            if not getattr(self, field) > 0:
                raise ConfigError(f"species {field} must be positive")
        if self.a_s < 0:
            raise ConfigError("scattering length must be non-negative")
        if self.detuning == 0:
            raise ConfigError("detuning must be nonzero")

    def replace(self, **changes) -> "SpeciesSpec":
        return dataclasses.replace(self, **changes)


# D2-line data from standard atomic tables; a_s for 40K is zero because
# s-wave collisions are forbidden for spin-polarized fermions.
RB87_D2 = SpeciesSpec(
    name="Rb87",
    mass=86.909180527 * AMU,
    a_s=100.4 * BOHR,
    gamma=2 * np.pi * 6.0666e6,
    wavelength=780.241209686e-9,
)
K40_D2 = SpeciesSpec(
    name="K40",
    mass=39.96399848 * AMU,
    a_s=0.0,
    gamma=2 * np.pi * 6.035e6,
    wavelength=766.700921822e-9,
)
SPECIES = {"Rb87": RB87_D2, "K40": K40_D2}


@dataclass(frozen=True)
class LatticeSpec:
    """Separable cubic lattice ``V_d sin^2(pi x_d / a)``.

    ``sites`` and ``depths`` are (x, y, z) triples; depths are in E_R.
    ``cutoff`` is the plane-wave cutoff L (indices -L..L) and ``n_bands``
    the number of bands kept per dimension.  ``spacing`` may be omitted,
    in which case it defaults to half the species wavelength.
    """

    sites: tuple
    depths: tuple
    spacing: Optional[float] = None
    n_bands: int = 6
    cutoff: int = 12

    def __post_init__(self):
        sites = tuple(int(m) for m in self.sites)
        depths = tuple(float(v) for v in self.depths)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "depths", depths)
        if len(sites) != 3 or len(depths) != 3:
            raise ConfigError("sites and depths need three entries (x, y, z)")
        if min(sites) < 1:
            raise ConfigError("site counts must be positive")
        if min(depths) < 0:
            raise ConfigError("lattice depths must be non-negative")
        if self.n_bands < 1:
            raise ConfigError("n_bands must be at least 1")
        if 2 * self.cutoff + 1 <= self.n_bands:
            raise ConfigError("plane-wave basis 2L+1 must exceed n_bands")
        if self.spacing is not None and not self.spacing > 0:
            raise ConfigError("lattice spacing must be positive")

    @property
    def M(self) -> int:
        return int(np.prod(self.sites))

    def resolved_spacing(self, species: SpeciesSpec) -> float:
        return self.spacing if self.spacing is not None else species.wavelength / 2

    def replace(self, **changes) -> "LatticeSpec":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ScatterGeometry:
    theta: float
    phi: float

    def __post_init__(self):
        if not 0 <= self.theta <= np.pi:
            raise ConfigError("theta must lie in [0, pi]")
        if not 0 <= self.phi < 2 * np.pi:
            raise ConfigError("phi must lie in [0, 2 pi)")


def recoil_energy(spec: LatticeSpec, species: SpeciesSpec) -> float:
    """E_R = hbar^2 pi^2 / (2 m a^2) in joules."""
    a = spec.resolved_spacing(species)
    return HBAR**2 * np.pi**2 / (2 * species.mass * a**2)


def scattering_vector(theta, phi):
    """Momentum transfer k_i - k_f in units of pi/a, for |k_i| = pi/a.

    Broadcasts over ``theta`` and ``phi``; the last axis of the result holds
    the (x, y, z) components.
    """
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    st = np.sin(theta)
    return -np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta) - 1.0], axis=-1)


def momentum_transfer(geom: ScatterGeometry, a: float) -> np.ndarray:
    """Momentum transfer in rad/m for the illumination geometry of the lattice."""
    return scattering_vector(geom.theta, geom.phi) * (np.pi / a)


def atom_prefactor(theta, species: SpeciesSpec, a: Optional[float] = None):
    """Single-atom scattering distribution I_atom(theta) in photons/s/sr.

    Multiplying by the static structure factor and integrating over solid
    angle gives a photon rate.  The probe wave number is pi/a when the
    lattice spacing is given, otherwise 2 pi / wavelength.
    """
    k_i = np.pi / a if a is not None else 2 * np.pi / species.wavelength
    delta = species.detuning * species.gamma
    cos2 = np.cos(np.asarray(theta, float)) ** 2
    return (9 * species.intensity * species.gamma**2 * (1 + cos2)
            / (32 * HBAR * C_LIGHT * k_i**3 * delta**2))
