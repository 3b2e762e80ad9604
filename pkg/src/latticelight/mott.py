"""Mott insulator at J = 0 on a finite lattice.

Number states with v particle-hole pairs have energy v U, degeneracy
g_v = M! / ((M - 2v)! (v!)^2) and on-site fluctuation <n^2> - n0^2 = 2v/M.
All weights are kept in log space so lattices with thousands of sites are
fine.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .bands import hubbard_U
from .core import SpeciesSpec
from .errors import ValidityError
from .matrix_elements import LatticeModel, StructureFactorBreakdown, diffraction_1d, f00


def diffraction_F(k, sites) -> np.ndarray:
    """Classical diffraction pattern prod_d sin^2(M_d pi k_d / 2) / sin^2(pi k_d / 2).

    ``k`` is in units of pi/a with the last axis (x, y, z).
    """
    k = np.asarray(k, float)
    out = np.ones(k.shape[:-1])
    for d, M in enumerate(sites):
        out = out * diffraction_1d(k[..., d], int(M))
    return out


def log_degeneracy(M: int, v) -> np.ndarray:
    v = np.asarray(v, float)
    return gammaln(M + 1) - gammaln(M - 2 * v + 1) - 2 * gammaln(v + 1)


def degeneracy_exact(M: int, v: int) -> int:
    """Integer g_v for small lattices."""
    return math.comb(M, 2 * v) * math.comb(2 * v, v)


@dataclass(frozen=True)
class MottState:
    n0: int
    T: float
    U: float
    M: int
    v: np.ndarray
    log_weights: np.ndarray
    log_Z: float
    tail: float

    @property
    def N(self) -> int:
        return self.n0 * self.M

    @property
    def P0(self) -> float:
        return float(np.exp(-self.log_Z))

    @property
    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_weights - self.log_Z)

    @property
    def mean_pairs(self) -> float:
        return float(np.sum(self.v * self.probabilities))

    @property
    def fluctuation(self) -> float:
        """Thermal average of <n^2> - n0^2."""
        return 2 * self.mean_pairs / self.M


def ensemble(n0: int, T: float, U: float, M: int, v_max: int | None = None,
             tail_tol: float = 1e-12) -> MottState:
    """Particle-hole restricted canonical ensemble.

    ``v_max`` is extended as needed until the discarded weight is below
    ``tail_tol`` of Z; the discarded fraction is stored in ``tail``.
    """
    if n0 < 1 or int(n0) != n0:
        raise ValidityError("filling n0 must be a positive integer")
    if not U > 0:
        raise ValidityError("on-site energy U must be positive")
    if T < 0:
        raise ValidityError("temperature must be non-negative")
    top = M // 2
    if v_max is not None and not 0 <= v_max <= top:
        raise ValidityError(f"v_max must lie in [0, {top}]")
    if T == 0:
        return MottState(n0=int(n0), T=0.0, U=float(U), M=int(M), v=np.zeros(1, int),
                         log_weights=np.zeros(1), log_Z=0.0, tail=0.0)
    v = np.arange(top + 1)
    lw = log_degeneracy(M, v) - v * U / T
    if M <= 20:
        exact = np.log([degeneracy_exact(M, int(i)) for i in v])
        assert np.allclose(lw + v * U / T, exact, rtol=0, atol=1e-9)
    log_Z = float(logsumexp(lw))
    # tail[j] = weight fraction carried by v > j
    rev = np.logaddexp.accumulate(lw[::-1])[::-1]
    tails = np.exp(np.append(rev[1:], -np.inf) - log_Z)
    need = int(np.argmax(tails < tail_tol)) if np.any(tails < tail_tol) else top
    keep = max(need, v_max or 0)
    return MottState(n0=int(n0), T=float(T), U=float(U), M=int(M), v=v[:keep + 1],
                     log_weights=lw[:keep + 1], log_Z=float(logsumexp(lw[:keep + 1])),
                     tail=float(tails[keep]))


def mott_state(model: LatticeModel, species: SpeciesSpec, T: float, n0: int = 1,
               scale: float = 1.0, v_max: int | None = None) -> MottState:
    """Ensemble with U taken from the lattice's Wannier functions."""
    a = model.spec.resolved_spacing(species)
    U = hubbard_U(model.wanniers, species.replace(a_s=species.a_s * scale), a)
    return ensemble(n0, T, U, model.M, v_max=v_max)


def _pieces(model, states, k):
    k = np.atleast_2d(np.asarray(k, float))
    F = diffraction_F(k, model.shape)[:, None]
    w2 = (np.abs(f00(model, k)) ** 2)[:, None]
    M = model.M
    n0 = np.array([s.n0 for s in states])[None, :]
    fl = np.array([s.fluctuation for s in states])[None, :]
    N = n0 * M
    g0 = w2 * n0**2 * F
    g1 = w2 * (M**2 - F) / (M - 1) * fl if M > 1 else 0 * g0
    b = N * (1 - w2)
    return g0, g1, b


def structure_factor(model: LatticeModel, states, k) -> StructureFactorBreakdown:
    """Components for every k in ``k[n, 3]`` and every state; arrays are (n, S)."""
    for s in states:
        if s.M != model.M:
            raise ValidityError("Mott state and lattice disagree on the site count")
    g0, g1, b = _pieces(model, states, k)
    return StructureFactorBreakdown("mott", g0=g0, g1=g1, g2=np.zeros_like(g0), b=b,
                                    truncation=np.zeros_like(g0))


def s_g0_mott(model, state, k) -> float:
    return float(_pieces(model, [state], k)[0][0, 0])


def s_g1_mott(model, state, k) -> float:
    return float(_pieces(model, [state], k)[1][0, 0])


def s_b_mott(model, state, k) -> float:
    return float(_pieces(model, [state], k)[2][0, 0])
