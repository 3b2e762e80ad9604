"""Band structure of the separable sinusoidal lattice.

Each dimension is solved independently in a plane-wave basis.  With
x in units of a and q in units of pi/a, the Bloch function of band m is

    phi_{q,m}(x) = sum_l c[m, q, l] exp(i pi (q + 2 l) x),

normalized so that its average of |phi|^2 over one cell equals one.  In the
same units ``V sin^2(pi x)`` couples l to l +/- 1 with amplitude -V/4, and
the diagonal is (2 l + q)^2 + V/2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .core import LatticeSpec, SpeciesSpec
from .errors import ConvergenceError, ValidityError


def quasimomenta(sites: int) -> np.ndarray:
    """The ``sites`` allowed quasimomenta 2n/M in (-1, 1], ascending."""
    n = np.arange(sites) - (sites - 1) // 2
    return 2.0 * n / sites


@dataclass(frozen=True)
class BandSolution1D:
    depth: float
    sites: int
    cutoff: int
    q: np.ndarray         # (M,)
    energies: np.ndarray  # (n_bands, M), E_R
    coeffs: np.ndarray    # (n_bands, M, 2L+1)

    @property
    def n_bands(self) -> int:
        return self.energies.shape[0]

    @property
    def zero_index(self) -> int:
        return (self.sites - 1) // 2

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.cutoff, self.cutoff + 1)

    def bloch(self, x, band: int = 0) -> np.ndarray:
        """Cell-normalized Bloch functions of ``band`` at positions ``x``.

        Returns an array of shape (M, len(x)); row n holds phi_{q_n}(x).
        """
        x = np.asarray(x, float)
        phases = np.exp(1j * np.pi * (self.q[:, None, None]
                                      + 2 * self.orders[None, :, None]) * x[None, None, :])
        return np.einsum("ql,qlx->qx", self.coeffs[band], phases)


def _fix_gauge(vecs: np.ndarray) -> np.ndarray:
    # Sum of coefficients real and positive; odd states (zero sum) use the
    # sign of their largest coefficient instead.
    s = vecs.sum(axis=0)
    big = vecs[np.abs(vecs).argmax(axis=0), np.arange(vecs.shape[1])]
    sign = np.where(np.abs(s) > 1e-10, np.sign(s), np.sign(big))
    return vecs * sign


def _solve_q(depth, q, cutoff, n_bands):
    l = np.arange(-cutoff, cutoff + 1)
    diag = (2 * l + q) ** 2 + depth / 2
    off = np.full(2 * cutoff, -depth / 4)
    w, v = eigh_tridiagonal(diag, off, select="i", select_range=(0, n_bands - 1))
    return w, _fix_gauge(v)


def solve_bands_1d(depth: float, sites: int, cutoff: int = 12, n_bands: int = 6,
                   tol: float = 1e-8) -> BandSolution1D:
    """Diagonalize the 1D lattice on the ``sites``-point quasimomentum grid.

    Raises ConvergenceError if enlarging the plane-wave cutoff by 50% moves
    any retained energy by more than ``tol`` (checked at q = 0 and at the
    zone edge).
    """
    if 2 * cutoff + 1 <= n_bands:
        raise ValueError("plane-wave basis must be larger than n_bands")
    q = quasimomenta(sites)
    energies = np.empty((n_bands, sites))
    coeffs = np.empty((n_bands, sites, 2 * cutoff + 1))
    for i, qi in enumerate(q):
        w, v = _solve_q(depth, qi, cutoff, n_bands)
        energies[:, i] = w
        coeffs[:, i, :] = v.T

    big = int(np.ceil(1.5 * cutoff))
    for qi in (0.0, 1.0):
        w_small, _ = _solve_q(depth, qi, cutoff, n_bands)
        w_big, _ = _solve_q(depth, qi, big, n_bands)
        if np.max(np.abs(w_big - w_small)) > tol:
            raise ConvergenceError(
                f"band energies not converged at depth {depth} with cutoff {cutoff}: "
                f"shift {np.max(np.abs(w_big - w_small)):.2e} E_R")
    return BandSolution1D(depth=float(depth), sites=int(sites), cutoff=int(cutoff),
                          q=q, energies=energies, coeffs=coeffs)


@dataclass(frozen=True)
class Wannier1D:
    """Real-space samples of a Wannier function centred on site 0.

    ``x`` are Gauss-Legendre nodes (units of a) with ``weights``; the window
    covers ``2 * reach + 1`` cells, the whole ring when the lattice is small.
    """

    band: int
    x: np.ndarray
    weights: np.ndarray
    values: np.ndarray

    def norm(self) -> float:
        return float(np.sum(self.weights * np.abs(self.values) ** 2))

    def fourier_density(self, k) -> np.ndarray:
        """Integral of |w|^2 exp(i pi k x) for each k (units of pi/a)."""
        k = np.asarray(k, float)
        dens = self.weights * np.abs(self.values) ** 2
        return np.exp(1j * np.pi * k[..., None] * self.x) @ dens

    def quartic(self) -> float:
        """a * integral |w|^4 dx, the dimensionless on-site overlap."""
        return float(np.sum(self.weights * np.abs(self.values) ** 4))


def cell_rule(n: int):
    """Gauss-Legendre nodes and weights on one cell [-1/2, 1/2]."""
    t, w = np.polynomial.legendre.leggauss(n)
    return t / 2, w / 2


def wannier_from_bloch(sol: BandSolution1D, band: int = 0, reach: int = 20,
                       nodes_per_cell: int | None = None) -> Wannier1D:
    """w_m(x) = (1/M) sum_q phi_{q,m}(x) in the fixed Bloch gauge.

    With cell-normalized Bloch functions this is the usual M^{-1/2} sum over
    lattice-normalized ones, so the result has unit norm.

    For the lowest band this gauge yields a real function peaked on the site.
    """
    M = sol.sites
    if nodes_per_cell is None:
        nodes_per_cell = 4 * sol.cutoff + 18
    reach = min(reach, (M - 1) // 2)
    t, w = cell_rule(nodes_per_cell)
    if M % 2 == 0 and reach == (M - 1) // 2 and M > 1:
        # even ring: the centred window [-M/2, M/2) has one extra half cell each side
        centres = np.arange(-M // 2, M // 2) + 0.5
    else:
        centres = np.arange(-reach, reach + 1, dtype=float)
    x = (centres[:, None] + t[None, :]).ravel()
    weights = np.tile(w, len(centres))
    values = sol.bloch(x, band).sum(axis=0) / M
    imag = np.max(np.abs(values.imag))
    if band == 0:
        peak = np.max(np.abs(values))
        centre = np.abs(values[np.argmin(np.abs(x))])
        if imag > 1e-8 * peak or centre < 0.5 * peak:
            raise ConvergenceError("gauge fixing did not produce a real, site-centred Wannier function")
        values = values.real
    return Wannier1D(band=band, x=x, weights=weights, values=values)


def hubbard_J(sol: BandSolution1D) -> float:
    """Nearest-neighbour tunnelling -(1/M) sum_q E(q,0) exp(i q a), as a magnitude."""
    return float(abs(np.mean(sol.energies[0] * np.exp(1j * np.pi * sol.q)).real))


def hubbard_U(wanniers, species: SpeciesSpec, spacing: float) -> float:
    """On-site interaction (4 pi hbar^2 a_s / m) prod_d integral |w_d|^4, in E_R."""
    prod = np.prod([w.quartic() for w in wanniers])
    return float(8 * species.a_s / (np.pi * spacing) * prod)


class LatticeBands:
    """Band solutions of the three lattice directions."""

    def __init__(self, spec: LatticeSpec):
        self.spec = spec
        self.dims = tuple(
            solve_bands_1d(V, M, cutoff=spec.cutoff, n_bands=spec.n_bands)
            for V, M in zip(spec.depths, spec.sites))

    @property
    def shape(self) -> tuple:
        return self.spec.sites

    @property
    def zero_index(self) -> tuple:
        return tuple(d.zero_index for d in self.dims)

    def band_energy_3d(self, q, m=(0, 0, 0)) -> float:
        """E(q, m) = sum_d E_d(q_d, m_d); ``q`` and ``m`` are index triples."""
        total = 0.0
        for d, (qi, mi) in enumerate(zip(q, m)):
            sol = self.dims[d]
            if not (0 <= qi < sol.sites and 0 <= mi < sol.n_bands):
                raise IndexError(f"state index {(qi, mi)} out of range in dimension {d}")
            total += sol.energies[mi, qi]
        return float(total)

    def lowest_band(self) -> np.ndarray:
        """Lowest-band energies as an array of shape ``sites``."""
        ex, ey, ez = (d.energies[0] for d in self.dims)
        return ex[:, None, None] + ey[None, :, None] + ez[None, None, :]

    def gap(self) -> float:
        """Smallest energy separating the lowest band from any excited band."""
        gaps = [d.energies[1].min() - d.energies[0].max() for d in self.dims if d.n_bands > 1]
        if not gaps:
            raise ValidityError("need at least two bands to define a gap")
        return float(min(gaps))
