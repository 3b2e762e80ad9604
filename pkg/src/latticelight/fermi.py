"""Noninteracting spin-polarized fermions in the lowest band.

Occupations follow the Fermi-Dirac form with the chemical potential fixed
by the mean atom number.  Structure factors use

    S_g0 = |sum_q f_qq N_q|^2 + sum_q |f_qq|^2 N_q (1 - N_q)
    S_g1 = sum_{q != p} |f_qp|^2 N_q (1 - N_p)
    S_b  = N - sum_{q,p} |f_qp|^2 N_q
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from .errors import ConvergenceError, ValidityError
from .matrix_elements import (COMPONENTS, LatticeModel, StructureFactorBreakdown, apply_separable,
                              separable_sum)


@dataclass(frozen=True)
class FermiState:
    T: float
    mu: float
    N: float
    occupations: np.ndarray  # shape = lattice sites

    @property
    def filling(self) -> float:
        return self.N / self.occupations.size


def step_occupations(energies: np.ndarray, N) -> np.ndarray:
    """T = 0 occupations: the N lowest states, ties broken by flat q index."""
    flat = energies.ravel()
    order = np.argsort(flat, kind="stable")
    occ = np.zeros(flat.size)
    whole = int(np.floor(N + 1e-12))
    occ[order[:whole]] = 1.0
    if whole < flat.size and N - whole > 1e-12:
        occ[order[whole]] = N - whole
    return occ.reshape(energies.shape)


def fermi_energy(energies: np.ndarray, N) -> float:
    """Zero-temperature limit of mu: midway between the last filled and first empty level."""
    flat = np.sort(energies.ravel(), kind="stable")
    whole = int(np.ceil(N - 1e-12))
    if not 0 < whole <= flat.size:
        raise ValidityError(f"cannot place {N} fermions in {flat.size} lowest-band states")
    top = flat[whole - 1]
    if whole == flat.size or N != whole:
        return float(top)
    return float(0.5 * (top + flat[whole]))


def occupations(energies: np.ndarray, mu: float, T: float) -> np.ndarray:
    if T == 0:
        return np.where(energies < mu, 1.0, np.where(energies == mu, 0.5, 0.0))
    return expit(-(energies - mu) / T)


def solve_mu(energies: np.ndarray, T: float, N, rtol: float = 1e-9) -> float:
    """Chemical potential giving mean number N, to |sum N_q - N| < rtol * N."""
    M = energies.size
    if T < 0:
        raise ValidityError("temperature must be non-negative")
    if not 0 < N <= M:
        raise ValidityError(f"filling N={N} outside (0, {M}] for a single lowest band")
    if T == 0:
        return fermi_energy(energies, N)
    lo = energies.min() - 60 * T
    hi = energies.max() + 60 * T

    def excess(mu):
        return expit(-(energies - mu) / T).sum() - N

    if excess(hi) <= 0:
        mu = hi
    else:
        mu = brentq(excess, lo, hi, xtol=1e-15 * max(1.0, abs(hi)), rtol=1e-15, maxiter=500)
    if abs(excess(mu)) >= rtol * N:
        raise ConvergenceError(f"chemical potential search missed N by {excess(mu):.3e}")
    return float(mu)


def fermi_state(model: LatticeModel, T: float, N=None, filling=None) -> FermiState:
    if (N is None) == (filling is None):
        raise ValueError("give exactly one of N or filling")
    if N is None:
        N = filling * model.M
    E = model.lowest_energies()
    if T == 0:
        if not 0 < N <= E.size:
            raise ValidityError(f"filling N={N} outside (0, {E.size}] for a single lowest band")
        occ = step_occupations(E, N)
        mu = fermi_energy(E, N)
    else:
        mu = solve_mu(E, T, N)
        occ = occupations(E, mu, T)
    return FermiState(T=float(T), mu=mu, N=float(N), occupations=occ)


def fermi_temperature(model: LatticeModel, N=None, filling=None) -> float:
    """T_F = E_F - E_min in E_R / k_B for the lowest-band Fermi sea."""
    if N is None:
        N = filling * model.M
    E = model.lowest_energies()
    return fermi_energy(E, N) - float(E.min())


def fermi_surface_count(model: LatticeModel, state: FermiState) -> float:
    """Mean number of atoms in states below the zero-temperature Fermi energy."""
    E = model.lowest_energies()
    return float(state.occupations[E < fermi_energy(E, state.N)].sum())


def _components(table, occ):
    # occ: (S, Mx, My, Mz) occupations of S states
    diag = table.diagonal()
    B = table.squared()
    fluct = np.sum(np.abs(diag) ** 2 * occ * (1 - occ), axis=(-3, -2, -1))
    g0 = np.abs(np.sum(diag * occ, axis=(-3, -2, -1))) ** 2 + fluct
    g1 = np.sum(occ * apply_separable(B, 1 - occ), axis=(-3, -2, -1)) - fluct
    kept = np.sum(occ * table.row_weight(), axis=(-3, -2, -1))
    b = occ.sum(axis=(-3, -2, -1)) - kept
    trunc = np.sum(occ * table.dropped_weight(), axis=(-3, -2, -1)) if table.threshold else 0 * b
    return g0, g1, b, trunc


def _check_b(b, N):
    if np.any(b < -1e-8 * np.maximum(N, 1)):
        raise ConvergenceError(f"interband component negative ({b.min():.3e}); sum rule violated")


def _g0_vectorized(model, occ, k, threshold):
    diag = [model.lowest_diagonals(d, k[:, d], threshold) for d in range(3)]
    coherent = separable_sum(diag, occ.astype(complex))
    fluct = separable_sum([np.abs(x) ** 2 for x in diag], occ * (1 - occ)).real
    return np.abs(coherent) ** 2 + fluct


def structure_factor(model: LatticeModel, states, k, threshold: float = 0.0,
                     parts=COMPONENTS) -> StructureFactorBreakdown:
    """Components for every k in ``k[n, 3]`` and every state; arrays are (n, S).

    ``parts`` restricts the work: S_g0 alone is cheap (diagonal elements
    only) while S_g1 and S_b need the full transition matrices.  Skipped
    components are returned as zeros.
    """
    k = np.atleast_2d(np.asarray(k, float))
    occ = np.stack([s.occupations for s in states])
    N = occ.sum(axis=(-3, -2, -1))
    out = np.zeros((4, len(k), len(states)))
    if "g1" in parts or "b" in parts:
        for i, kk in enumerate(k):
            out[:, i] = _components(model.table(kk, threshold), occ)
        _check_b(out[2], N)
    elif "g0" in parts:
        out[0] = _g0_vectorized(model, occ, k, threshold)
    for j, name in enumerate(("g0", "g1", "b")):
        if name not in parts:
            out[j] = 0.0
    return StructureFactorBreakdown("fermi", g0=out[0], g1=out[1], g2=np.zeros_like(out[0]),
                                    b=out[2], truncation=out[3])


def s_g0_fermi(state: FermiState, table) -> float:
    return float(_components(table, state.occupations[None])[0][0])


def s_g1_fermi(state: FermiState, table) -> float:
    return float(_components(table, state.occupations[None])[1][0])


def s_b_fermi(state: FermiState, table) -> float:
    b = _components(table, state.occupations[None])[2]
    _check_b(b, state.N)
    return float(b[0])


def full_matrix(table) -> np.ndarray:
    """Dense lowest-band f_{q,p} over flattened 3D indices (small lattices only)."""
    Ax, Ay, Az = table.mats
    return np.kron(np.kron(Ax, Ay), Az)


def structure_factor_dense(model: LatticeModel, state: FermiState, k, max_sites: int = 36**2):
    """Direct double-sum evaluation used to cross-check the separable path."""
    if model.M > max_sites:
        raise ValidityError(f"dense evaluation limited to {max_sites} sites")
    F = full_matrix(model.table(k))
    n = state.occupations.ravel()
    d = np.diagonal(F)
    W = np.abs(F) ** 2
    off = W - np.diag(np.diagonal(W))
    g0 = abs(np.sum(d * n)) ** 2 + np.sum(np.abs(d) ** 2 * n * (1 - n))
    g1 = n @ off @ (1 - n)
    b = n.sum() - n @ W.sum(axis=1)
    return {"g0": float(g0), "g1": float(g1), "b": float(b)}
