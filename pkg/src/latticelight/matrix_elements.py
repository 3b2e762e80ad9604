"""Transition matrix elements between Bloch states and their contractions.

Bloch functions are normalized so that f_{q,q}(0) = 1.  In one dimension

    f(q1, m1 -> q2, m2; k) = D(q1 - q2 + k) * O,
    D(kappa) = (1/M) sum_{j=0}^{M-1} exp(i pi kappa j),
    O = cell average of conj(phi_{q2,m2}) phi_{q1,m1} exp(i pi k x),

and the 3D element is the product over x, y and z.  The first state is the
initial one.  Because everything factorizes, double sums over (q, p) that
appear in structure factors reduce to applying a small matrix along each
axis of an occupation array (see :func:`apply_separable`).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bands import LatticeBands, cell_rule, wannier_from_bloch
from .core import LatticeSpec


def dirichlet(kappa, M: int) -> np.ndarray:
    """Normalized phase sum of an open M-site array, (1/M) sum_j exp(i pi kappa j).

    Evaluated in closed form; the removable singularities at even kappa are
    handled by shifting to the nearest multiple of pi first.
    """
    kappa = np.asarray(kappa, float)
    x = np.pi * kappa / 2
    n = np.rint(x / np.pi)
    xr = x - n * np.pi
    ratio = np.sinc(M * xr / np.pi) / np.sinc(xr / np.pi)
    parity = (n.astype(np.int64) * (M - 1)) & 1
    return np.exp(1j * np.pi * kappa * (M - 1) / 2) * ratio * (1 - 2 * parity)


def diffraction_1d(kappa, M: int) -> np.ndarray:
    """sin^2(M pi kappa / 2) / sin^2(pi kappa / 2), i.e. M^2 |D|^2."""
    return M**2 * np.abs(dirichlet(kappa, M)) ** 2


class LatticeModel:
    """Band structure plus the cell quadrature needed for matrix elements.

    Holds, per dimension and band, Bloch functions sampled on Gauss-Legendre
    nodes of the centred unit cell, and lowest-band Wannier functions for
    the localized (Mott) description.
    """

    def __init__(self, spec: LatticeSpec, nodes: int | None = None, cache_size: int = 512):
        self.spec = spec
        self.bands = LatticeBands(spec)
        L = spec.cutoff
        self.nodes = nodes or 2 * (2 * L + 1) + 16
        self.x, self.w = cell_rule(self.nodes)
        # phi[d][m] has shape (M_d, nodes)
        self.phi = tuple(
            np.stack([sol.bloch(self.x, m) for m in range(sol.n_bands)])
            for sol in self.bands.dims)
        self.wanniers = tuple(wannier_from_bloch(sol, 0, reach=20) for sol in self.bands.dims)
        self._lowest = lru_cache(maxsize=cache_size)(self._lowest_matrix)

    @property
    def dims(self):
        return self.bands.dims

    @property
    def shape(self) -> tuple:
        return self.spec.sites

    @property
    def M(self) -> int:
        return self.spec.M

    @property
    def zero_index(self) -> tuple:
        return self.bands.zero_index

    def band_matrix(self, d: int, kd: float, band: int) -> np.ndarray:
        """f_d(q, 0 -> p, band; kd) as an (M_d, M_d) array indexed [q, p]."""
        sol = self.dims[d]
        if not 0 <= band < sol.n_bands:
            raise IndexError(f"band {band} not retained in dimension {d}")
        phase = np.exp(1j * np.pi * kd * self.x) * self.w
        overlap = (self.phi[d][0] * phase) @ self.phi[d][band].conj().T
        kern = dirichlet(sol.q[:, None] - sol.q[None, :] + kd, sol.sites)
        return kern * overlap

    def _lowest_matrix(self, d, kd):
        A = self.band_matrix(d, kd, 0)
        A.flags.writeable = False
        return A

    def lowest_matrix(self, d: int, kd: float) -> np.ndarray:
        """Cached lowest-band block of :meth:`band_matrix` (read-only)."""
        return self._lowest(int(d), float(kd))

    def lowest_diagonals(self, d: int, kd, threshold: float = 0.0) -> np.ndarray:
        """f_d(q, 0 -> q, 0; kd) for an array of kd; shape (len(kd), M_d)."""
        kd = np.atleast_1d(np.asarray(kd, float))
        phase = np.exp(1j * np.pi * kd[:, None] * self.x[None, :]) * self.w
        kern = dirichlet(kd, self.dims[d].sites)
        if threshold > 0:
            kern = np.where(np.abs(kern) < threshold, 0.0, kern)
        return kern[:, None] * (phase @ (np.abs(self.phi[d][0]) ** 2).T)

    def lowest_rows(self, d: int, kd, i: int, threshold: float = 0.0) -> np.ndarray:
        """f_d(q_i, 0 -> p, 0; kd) for an array of kd; shape (len(kd), M_d)."""
        kd = np.atleast_1d(np.asarray(kd, float))
        sol = self.dims[d]
        phase = np.exp(1j * np.pi * kd[:, None] * self.x[None, :]) * self.w
        overlap = (phase * self.phi[d][0][i]) @ self.phi[d][0].conj().T
        kern = dirichlet(sol.q[i] - sol.q[None, :] + kd[:, None], sol.sites)
        if threshold > 0:
            kern = np.where(np.abs(kern) < threshold, 0.0, kern)
        return kern * overlap

    def table(self, k, threshold: float = 0.0) -> "TransitionTable":
        return TransitionTable(self, k, threshold)

    def lowest_energies(self) -> np.ndarray:
        return self.bands.lowest_band()


class TransitionTable:
    """Lowest-band matrix elements for one momentum transfer ``k`` (pi/a).

    The per-dimension matrices are built on first use.  With
    ``threshold > 0`` entries whose lattice factor |D| falls below it are
    dropped; :meth:`dropped_weight` then bounds the missing sum of |f|^2.
    """

    def __init__(self, model: LatticeModel, k, threshold: float = 0.0):
        self.model = model
        self.k = np.asarray(k, float).reshape(3)
        self.threshold = float(threshold)
        self._mats = None
        self._full_rows = None

    def _build(self):
        mats, rows = [], []
        for d, sol in enumerate(self.model.dims):
            A = self.model.lowest_matrix(d, self.k[d])
            rows.append(np.sum(np.abs(A) ** 2, axis=1))
            if self.threshold > 0:
                kern = dirichlet(sol.q[:, None] - sol.q[None, :] + self.k[d], sol.sites)
                A = np.where(np.abs(kern) < self.threshold, 0.0, A)
            mats.append(A)
        self._mats, self._full_rows = tuple(mats), tuple(rows)

    @property
    def mats(self) -> tuple:
        if self._mats is None:
            self._build()
        return self._mats

    def f(self, q1, q2) -> complex:
        """Lowest-band element between 3D index triples ``q1`` -> ``q2``."""
        return complex(np.prod([A[a, b] for A, a, b in zip(self.mats, q1, q2)]))

    def diagonal(self) -> np.ndarray:
        """f_{q,q}(k) on the full grid, shape ``sites``."""
        if self._mats is not None:
            return outer3(*(np.diagonal(A) for A in self._mats))
        return outer3(*(self.model.lowest_diagonals(d, self.k[d], self.threshold)[0]
                        for d in range(3)))

    def squared(self) -> tuple:
        return tuple(np.abs(A) ** 2 for A in self.mats)

    def row_weight(self) -> np.ndarray:
        """sum_p |f_{q,p}|^2 for every q, shape ``sites``."""
        return outer3(*(B.sum(axis=1) for B in self.squared()))

    def dropped_weight(self) -> np.ndarray:
        """Per-q upper bound on |f|^2 weight removed by the threshold."""
        self.mats
        return outer3(*self._full_rows) - self.row_weight()


def outer3(a, b, c) -> np.ndarray:
    return a[:, None, None] * b[None, :, None] * c[None, None, :]


def separable_sum(factors, W: np.ndarray, max_elements: int = 2**22) -> np.ndarray:
    """sum_q prod_d factors[d][n, q_d] W[s, q] for every n and s; shape (n, s).

    ``factors`` are per-dimension arrays of shape (n, M_d), for example the
    diagonals returned by :meth:`LatticeModel.lowest_diagonals`.  The k
    batch is processed in chunks to bound the intermediate array size.
    """
    fx, fy, fz = factors
    S, Mx, My, Mz = W.shape
    step = max(1, max_elements // (S * Mx * My))
    out = np.empty((len(fx), S), dtype=np.result_type(fx, fy, fz, W))
    for i in range(0, len(fx), step):
        sl = slice(i, i + step)
        T = np.einsum("nc,sabc->nsab", fz[sl], W)
        T = np.einsum("nb,nsab->nsa", fy[sl], T)
        out[sl] = np.einsum("na,nsa->ns", fx[sl], T)
    return out


def apply_separable(mats, X: np.ndarray) -> np.ndarray:
    """Y[..., q] = sum_p prod_d mats[d][q_d, p_d] X[..., p].

    ``X`` has shape (..., M_x, M_y, M_z); the leading axes are batched.
    """
    Ax, Ay, Az = mats
    lead = X.shape[:-3]
    Mx, My, Mz = X.shape[-3:]
    Y = X.reshape((-1, Mx, My * Mz))
    Y = np.matmul(Ax, Y).reshape((-1, Mx, My, Mz))
    Y = np.matmul(Ay, Y.reshape((-1, My, Mz))).reshape((-1, Mx, My, Mz))
    Y = np.matmul(Y, Az.T)
    return Y.reshape(lead + (Mx, My, Mz))


def bilinear(mats, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """sum_{q,p} left[..., q] prod_d mats[d][q_d, p_d] right[..., p]."""
    return np.sum(left * apply_separable(mats, right), axis=(-3, -2, -1))


def f_element(model: LatticeModel, q1, m1, q2, m2, k) -> complex:
    """Full matrix element f_{q1,m1,q2,m2}(k) between 3D Bloch states.

    ``q`` arguments are index triples into the quasimomentum grid and ``m``
    arguments are band triples.  Only transitions out of the lowest band
    (or between lowest-band states) are supported via the cached tables;
    general pairs are computed directly.
    """
    k = np.asarray(k, float).reshape(3)
    val = 1.0 + 0j
    for d, sol in enumerate(model.dims):
        a, b, ma, mb = int(q1[d]), int(q2[d]), int(m1[d]), int(m2[d])
        if not (0 <= a < sol.sites and 0 <= b < sol.sites):
            raise IndexError(f"quasimomentum index out of range in dimension {d}")
        if not (0 <= ma < sol.n_bands and 0 <= mb < sol.n_bands):
            raise IndexError(f"band index out of range in dimension {d}")
        phase = np.exp(1j * np.pi * k[d] * model.x) * model.w
        overlap = np.sum(model.phi[d][ma][a] * phase * model.phi[d][mb][b].conj())
        val *= dirichlet(sol.q[a] - sol.q[b] + k[d], sol.sites) * overlap
    return complex(val)


def sum_rule_defect(model: LatticeModel, q1, q2, k, m_max: int) -> float:
    """|sum_{q, m < m_max} conj(f_{q1,0,q,m}) f_{q2,0,q,m} - delta_{q1,q2}|.

    The band sum uses a box truncation: every dimension keeps its ``m_max``
    lowest bands.
    """
    k = np.asarray(k, float).reshape(3)
    total = 1.0 + 0j
    for d, sol in enumerate(model.dims):
        if m_max > sol.n_bands:
            raise ValueError(f"m_max={m_max} exceeds the {sol.n_bands} retained bands")
        s = 0j
        for m in range(m_max):
            F = model.band_matrix(d, k[d], m)
            s += np.vdot(F[q1[d]], F[q2[d]])
        total *= s
    delta = float(tuple(q1) == tuple(q2))
    return float(abs(total - delta))


def f00(model: LatticeModel, k) -> np.ndarray:
    """Fourier transform of the site density |w_0|^2; broadcasts over k[..., 3]."""
    k = np.asarray(k, float)
    out = np.ones(k.shape[:-1], complex)
    for d, wan in enumerate(model.wanniers):
        out = out * wan.fourier_density(k[..., d])
    return out


COMPONENTS = ("g0", "g1", "g2", "b")

# Components that transfer energy to the gas and therefore heat it.
INELASTIC = {
    "fermi": ("g1", "b"),
    "superfluid": ("g1", "g2", "b"),
    "mott": ("b",),
}


@dataclass
class StructureFactorBreakdown:
    """Structure-factor components evaluated on a batch of k (and states).

    Every component array has the same shape; ``g2`` is zero except for the
    superfluid.  ``truncation`` bounds the error from dropped matrix elements.
    """

    kind: str
    g0: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    b: np.ndarray
    truncation: np.ndarray | None = None

    @property
    def total(self) -> np.ndarray:
        return self.g0 + self.g1 + self.g2 + self.b

    @property
    def inelastic(self) -> np.ndarray:
        return sum(getattr(self, c) for c in INELASTIC[self.kind])

    @property
    def elastic(self) -> np.ndarray:
        return self.total - self.inelastic

    def component(self, name: str) -> np.ndarray:
        if name == "total":
            return self.total
        if name not in COMPONENTS:
            raise KeyError(name)
        return getattr(self, name)

    def as_dict(self) -> dict:
        return {c: getattr(self, c) for c in COMPONENTS} | {"total": self.total}
