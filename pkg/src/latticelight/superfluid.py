"""Bogoliubov theory of the lattice superfluid in the Bloch basis.

Interaction matrix elements U_q are M-independent (cell averages of
|phi_q|^2 |phi_0|^2) and enter the quasiparticle problem through the
condensate density g = N0 / M:

    E~_q = E_q - E_0 + g (2 U_q - U_0),   B_q = g U_q,
    hbar omega_q = sqrt(E~_q^2 - B_q^2).

Only the lowest band is treated with quasiparticles; higher bands are
particle-like and enter through the interband sum rule.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import SpeciesSpec
from .errors import ConvergenceError, ValidityError
from .matrix_elements import (COMPONENTS, LatticeModel, StructureFactorBreakdown, apply_separable,
                              outer3, separable_sum)


def interaction_prefactor(model: LatticeModel, species: SpeciesSpec, scale: float = 1.0) -> float:
    """4 pi hbar^2 a_s / (m a^3) expressed in E_R: 8 a_s / (pi a)."""
    a = model.spec.resolved_spacing(species)
    return 8 * species.a_s * scale / (np.pi * a)


def interaction_Uq(model: LatticeModel, species: SpeciesSpec, scale: float = 1.0) -> np.ndarray:
    """U_q = U_{q,0,0,q} on the whole lowest-band grid, in E_R (shape ``sites``).

    ``scale`` multiplies the scattering length.
    """
    per_dim = [_cell_overlaps(model, d, 0) for d in range(3)]
    return interaction_prefactor(model, species, scale) * outer3(*per_dim)


def _cell_overlaps(model, d, band):
    """<|phi_{q,band}|^2 |phi_0|^2>_cell for every q along dimension d."""
    sol = model.dims[d]
    ref = np.abs(model.phi[d][0][sol.zero_index]) ** 2
    return (np.abs(model.phi[d][band]) ** 2) @ (model.w * ref)


@dataclass(frozen=True)
class BogoliubovSpectrum:
    """Lowest-band quasiparticles at condensate number N0; q = 0 entries are zero."""

    N0: float
    omega: np.ndarray
    u: np.ndarray
    v: np.ndarray
    u_minus_v_sq: np.ndarray


def _mask(model):
    m = np.ones(model.shape, bool)
    m[model.zero_index] = False
    return m


def bogoliubov_coeffs(model: LatticeModel, Uq: np.ndarray, N0: float) -> BogoliubovSpectrum:
    E = model.lowest_energies()
    i0 = model.zero_index
    g = N0 / model.M
    mask = _mask(model)
    Et = np.where(mask, E - E[i0] + g * (2 * Uq - Uq[i0]), 1.0)
    B = np.where(mask, g * Uq, 0.0)
    bad = mask & (Et <= np.abs(B))
    if np.any(bad):
        q = tuple(int(i[0]) for i in np.nonzero(bad))
        raise ValidityError(f"dynamically unstable Bogoliubov mode at q index {q} (N0={N0:.6g})")
    omega = np.sqrt((Et - B) * (Et + B))
    # v^2 = B^2 / (2 w (E~ + w)) avoids cancellation; u^2 - v^2 = 1 by construction
    v2 = B**2 / (2 * omega * (Et + omega))
    u = np.sqrt(1 + v2)
    v = np.sqrt(v2)
    umv = np.sqrt((Et - B) / (Et + B))
    z = ~mask
    for arr in (omega, u, v, umv):
        arr[z] = 0.0
    return BogoliubovSpectrum(N0=float(N0), omega=omega, u=u, v=v, u_minus_v_sq=umv)


def bose_occupation(omega: np.ndarray, T: float) -> np.ndarray:
    out = np.zeros_like(omega)
    if T > 0:
        pos = omega > 0
        out[pos] = 1.0 / np.expm1(omega[pos] / T)
    return out


def depletion(model: LatticeModel, Uq: np.ndarray, N0: float, T: float) -> float:
    sp = bogoliubov_coeffs(model, Uq, N0)
    n = bose_occupation(sp.omega, T)
    return float(np.sum(sp.u**2 * n + sp.v**2 * (n + 1)))


@dataclass(frozen=True)
class SuperfluidState:
    T: float
    N: float
    N0: float
    u: np.ndarray
    v: np.ndarray
    omega: np.ndarray
    n: np.ndarray
    u_minus_v_sq: np.ndarray
    Uq: np.ndarray
    residual: float
    particle_ratio: float
    zero_index: tuple

    @property
    def depletion_fraction(self) -> float:
        return (self.N - self.N0) / self.N

    @property
    def occupations(self) -> np.ndarray:
        """N_q: u^2 n + v^2 (n + 1) away from q = 0 and N0 at q = 0."""
        occ = self.u**2 * self.n + self.v**2 * (self.n + 1)
        occ[self.zero_index] = self.N0
        return occ


def higher_band_ratio(model: LatticeModel, prefactor: float, N0: float) -> float:
    """min over excited-band states of E~_{q,m} / (N0 U_{q,m} / M).

    States with one dimension excited are the lowest-lying ones; the other
    dimensions contribute their largest lowest-band overlap, so the ratio is
    a lower bound.  Large values justify u = 1, v = 0 above the lowest band.
    """
    g = N0 / model.M
    if g * prefactor == 0:
        return np.inf
    low = [_cell_overlaps(model, d, 0) for d in range(3)]
    U0 = prefactor * np.prod([low[d][sol.zero_index] for d, sol in enumerate(model.dims)])
    best = np.inf
    for d, sol in enumerate(model.dims):
        others = np.prod([low[e].max() for e in range(3) if e != d])
        for band in range(1, sol.n_bands):
            Ub = prefactor * others * _cell_overlaps(model, d, band)
            Et = sol.energies[band] - sol.energies[0, sol.zero_index] + g * (2 * Ub - U0)
            best = min(best, float(np.min(Et / (g * Ub))))
    return best


def solve_condensate(model: LatticeModel, species: SpeciesSpec, T: float, N: float,
                     scale: float = 1.0, max_depletion: float = 0.1, tol: float = 1e-6,
                     max_iter: int = 500, Uq: np.ndarray | None = None) -> SuperfluidState:
    """Self-consistent N0 with N = N0 + sum_{q != 0} (u^2 n + v^2 (n + 1)).

    Damped fixed-point iteration (factor 0.5) from N0 = N with Aitken
    extrapolation every third step.  Raises ValidityError when the
    depletion reaches ``max_depletion``.
    """
    if N <= 0:
        raise ValidityError("atom number must be positive")
    if T < 0:
        raise ValidityError("temperature must be non-negative")
    if Uq is None:
        Uq = interaction_Uq(model, species, scale)

    def G(x):
        return N - depletion(model, Uq, x, T)

    def step(x):
        return min(N, max(0.5 * x + 0.5 * G(x), 1e-12 * N))

    # G(x) - x decreases with x, so a fixed point below the depletion limit
    # shows up as G < x already at the limit
    floor = N * (1 - max_depletion)
    try:
        past_limit = G(floor) < floor
    except ValidityError:
        past_limit = False
    if past_limit:
        raise ValidityError(f"depletion fraction exceeds the Bogoliubov limit {max_depletion} "
                            f"(N={N:.6g}, T={T:.4g})")

    x = float(N)
    for _ in range(max_iter):
        g = G(x)
        if abs(g - x) < tol * N:
            break
        x1 = step(x)
        x2 = step(x1)
        den = x2 - 2 * x1 + x
        acc = x - (x1 - x) ** 2 / den if den != 0 else x2
        x = acc if 0 < acc <= N else x2
    else:
        raise ConvergenceError(f"condensate number did not converge after {max_iter} iterations")

    sp = bogoliubov_coeffs(model, Uq, x)
    n = bose_occupation(sp.omega, T)
    residual = abs(N - x - float(np.sum(sp.u**2 * n + sp.v**2 * (n + 1))))
    frac = (N - x) / N
    if frac >= max_depletion:
        raise ValidityError(f"depletion fraction {frac:.3f} exceeds the Bogoliubov limit {max_depletion}")
    ratio = higher_band_ratio(model, interaction_prefactor(model, species, scale), x)
    if ratio < 10:
        warnings.warn(f"higher-band excitations only {ratio:.1f}x the interaction shift; "
                      "particle-like treatment of excited bands is marginal", RuntimeWarning)
    return SuperfluidState(T=float(T), N=float(N), N0=x, u=sp.u, v=sp.v, omega=sp.omega, n=n,
                           u_minus_v_sq=sp.u_minus_v_sq, Uq=Uq, residual=residual,
                           particle_ratio=ratio, zero_index=model.zero_index)


def _components(model, table, states):
    i0 = model.zero_index
    u = np.stack([s.u for s in states])
    v = np.stack([s.v for s in states])
    n = np.stack([s.n for s in states])
    occ = np.stack([s.occupations for s in states])
    N0 = np.array([s.N0 for s in states])
    S = len(states)
    axes = (-3, -2, -1)

    diag = table.diagonal()
    B = table.squared()
    d2 = np.abs(diag) ** 2
    uv = u * v
    u2, v2 = u**2, v**2
    fl = (u2 + v2) ** 2 * n * (n + 1)
    g0 = np.abs(np.sum(diag * occ, axis=axes)) ** 2 + np.sum(d2 * fl, axis=axes)

    from_zero = outer3(*(Bd[i] for Bd, i in zip(B, i0)))
    umv = np.stack([s.u_minus_v_sq for s in states])
    g1 = N0 * np.sum(from_zero * umv * (2 * n + 1), axis=axes)

    m = n + 1
    right = np.stack([u2 * n, uv * n, v2 * n, u2 * m, uv * m, v2 * m], axis=1)
    AR = apply_separable(B, right.reshape((6 * S,) + right.shape[2:])).reshape(right.shape)

    def dot(a, b):
        return np.sum(a * b, axis=axes)

    # (u_q u_p + v_q v_p)^2 n_q (n_p + 1), q != p
    t1 = dot(u2 * n, AR[:, 3]) + 2 * dot(uv * n, AR[:, 4]) + dot(v2 * n, AR[:, 5])
    t1 -= np.sum(d2 * fl, axis=axes)
    # (u_q v_p + v_q u_p)^2 (n_q n_p + (n_q + 1)(n_p + 1)) / 2
    t2 = (dot(u2 * n, AR[:, 2]) + 2 * dot(uv * n, AR[:, 1]) + dot(v2 * n, AR[:, 0])
          + dot(u2 * m, AR[:, 5]) + 2 * dot(uv * m, AR[:, 4]) + dot(v2 * m, AR[:, 3]))
    g2 = t1 + 0.5 * t2

    b = occ.sum(axis=axes) - np.sum(occ * table.row_weight(), axis=axes)
    trunc = np.sum(occ * table.dropped_weight(), axis=axes) if table.threshold else 0 * b
    return g0, g1, g2, b, trunc


def _cheap(model, states, k, threshold):
    # S_g0 and S_g1 need only diagonal elements and the row leaving q = 0
    i0 = model.zero_index
    occ = np.stack([s.occupations for s in states])
    n = np.stack([s.n for s in states])
    u2 = np.stack([s.u for s in states]) ** 2
    v2 = np.stack([s.v for s in states]) ** 2
    umv = np.stack([s.u_minus_v_sq for s in states])
    N0 = np.array([s.N0 for s in states])
    diag = [model.lowest_diagonals(d, k[:, d], threshold) for d in range(3)]
    g0 = (np.abs(separable_sum(diag, occ.astype(complex))) ** 2
          + separable_sum([np.abs(x) ** 2 for x in diag], (u2 + v2) ** 2 * n * (n + 1)).real)
    rows = [np.abs(model.lowest_rows(d, k[:, d], i0[d], threshold)) ** 2 for d in range(3)]
    g1 = N0 * separable_sum(rows, umv * (2 * n + 1))
    return g0, g1


def structure_factor(model: LatticeModel, states, k, threshold: float = 0.0,
                     parts=COMPONENTS) -> StructureFactorBreakdown:
    """Components for every k in ``k[n, 3]`` and every state; arrays are (n, S).

    S_g0 and S_g1 are cheap; S_g2 and S_b need full transition matrices and
    are only computed when listed in ``parts``.  Skipped components are zero.
    """
    k = np.atleast_2d(np.asarray(k, float))
    out = np.zeros((5, len(k), len(states)))
    if "g2" in parts or "b" in parts:
        for i, kk in enumerate(k):
            out[:, i] = _components(model, model.table(kk, threshold), states)
        N = np.array([s.N for s in states])
        if np.any(out[3] < -1e-8 * N):
            raise ConvergenceError("interband component negative; sum rule violated")
    elif "g0" in parts or "g1" in parts:
        out[0], out[1] = _cheap(model, states, k, threshold)
    for j, name in enumerate(COMPONENTS):
        if name not in parts:
            out[j] = 0.0
    return StructureFactorBreakdown("superfluid", g0=out[0], g1=out[1], g2=out[2], b=out[3],
                                    truncation=out[4])


def _single(model, state, table, idx):
    return float(_components(model, table, [state])[idx][0])


def s_g0_sf(model, state, table) -> float:
    return _single(model, state, table, 0)


def s_g1_sf(model, state, table) -> float:
    return _single(model, state, table, 1)


def s_g2_sf(model, state, table) -> float:
    return _single(model, state, table, 2)


def s_b_sf(model, state, table) -> float:
    return _single(model, state, table, 3)
