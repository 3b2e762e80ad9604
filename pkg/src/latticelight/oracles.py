"""Brute-force reference calculations for small systems.

These are deliberately direct: dense diagonalization with a large
plane-wave basis, matrix elements from closed-form plane-wave integrals
over the whole lattice, and many-body sums over explicit Fock states.
They are slow and only meant for a handful of sites.
"""
from __future__ import annotations

import itertools

import numpy as np

from .bands import quasimomenta

# ---------------------------------------------------------------- single particle


def dense_bands(depth: float, q: float, cutoff: int = 30):
    """Energies and plane-wave coefficients at one q by dense ``eigh``."""
    l = np.arange(-cutoff, cutoff + 1)
    H = np.diag((2 * l + q) ** 2 + depth / 2.0)
    H += np.diag(np.full(2 * cutoff, -depth / 4.0), 1) + np.diag(np.full(2 * cutoff, -depth / 4.0), -1)
    E, C = np.linalg.eigh(H)
    C = C.T
    # same real gauge for every state: positive coefficient sum, or positive
    # largest coefficient when the sum vanishes by symmetry
    s = C.sum(axis=1)
    big = C[np.arange(len(C)), np.abs(C).argmax(axis=1)]
    C = C * np.where(np.abs(s) > 1e-10, np.sign(s), np.sign(big))[:, None]
    return E, C, l


def lattice_average(kappa, M: int) -> np.ndarray:
    """(1/M) * integral over [-1/2, M - 1/2] of exp(i pi kappa x) dx."""
    kappa = np.asarray(kappa, float)
    half = np.pi * kappa * M / 2
    return np.exp(1j * np.pi * kappa * (M - 1) / 2) * np.sinc(half / np.pi)


def f_plane_wave(depth: float, sites: int, kd: float, n_bands: int = 1, cutoff: int = 30):
    """1D elements f(q, 0 -> p, m; kd) for m < n_bands; shape (n_bands, M, M) indexed [m, q, p].

    Each element is a double sum over plane waves of the exact
    whole-lattice average, with no cell quadrature involved.
    """
    q = quasimomenta(sites)
    sols = [dense_bands(depth, qi, cutoff) for qi in q]
    l = sols[0][2]
    out = np.empty((n_bands, sites, sites), complex)
    for i, qi in enumerate(q):
        c0 = sols[i][1][0]
        for j, pj in enumerate(q):
            kap = qi - pj + kd + 2 * (l[None, :] - l[:, None])   # [l', l]
            avg = lattice_average(kap, sites)
            for m in range(n_bands):
                cm = sols[j][1][m]
                out[m, i, j] = cm.conj() @ avg @ c0
    return out


def interband_sum(depths, sites, k, occupations, n_bands: int = 60, cutoff: int = 100) -> float:
    """S_b by explicit summation over excited 3D bands (no sum rule).

    ``occupations`` are lowest-band N_q on the grid ``sites``; higher bands
    are taken as empty.  The sum over (m_x, m_y, m_z) != 0 is carried out in
    factored form, prod_d (sum_m w_dm) - prod_d w_d0.  On a finite lattice
    exp(i k x) is not periodic over the ring, so the band sum converges only
    like 1/n; the result is Richardson-extrapolated from n and 2n bands.
    """
    from .matrix_elements import outer3

    W = [(np.abs(f_plane_wave(V, M, kd, 2 * n_bands, cutoff)) ** 2).sum(axis=2)
         for V, M, kd in zip(depths, sites, k)]                     # [m, q]
    low = outer3(*(w[0] for w in W))

    def partial(n):
        return float(np.sum(occupations * (outer3(*(w[:n].sum(axis=0) for w in W)) - low)))

    return 2 * partial(2 * n_bands) - partial(n_bands)


def lowest_band_3d(depths, sites, cutoff: int = 30):
    """Lowest-band energies on the 3D grid (flattened in C order)."""
    per = [np.array([dense_bands(V, qi, cutoff)[0][0] for qi in quasimomenta(M)])
           for V, M in zip(depths, sites)]
    return (per[0][:, None, None] + per[1][None, :, None] + per[2][None, None, :]).ravel()


def lowest_f_3d(depths, sites, k, cutoff: int = 30) -> np.ndarray:
    """Dense lowest-band f_{q,p} on flattened 3D indices."""
    mats = [f_plane_wave(V, M, kd, 1, cutoff)[0] for V, M, kd in zip(depths, sites, k)]
    return np.kron(np.kron(mats[0], mats[1]), mats[2])


# ---------------------------------------------------------------- fermions


def _fermion_ops(M):
    a = np.array([[0.0, 1.0], [0.0, 0.0]])   # annihilates |1> -> |0>, basis (|0>, |1>)
    Z = np.diag([1.0, -1.0])
    I = np.eye(2)
    ops = []
    for j in range(M):
        mats = [Z] * j + [a] + [I] * (M - j - 1)
        op = mats[0]
        for m in mats[1:]:
            op = np.kron(op, m)
        ops.append(op)
    return ops


def fermion_enumeration(depths, sites, k, T: float, N=None, mu=None, cutoff: int = 30,
                        n_bands: int = 10) -> dict:
    """Exact S components of free lowest-band fermions by Fock-space sums.

    Give ``mu`` for the grand-canonical ensemble or ``N`` for the canonical
    one (fixed particle number).  S_g0 is the diagonal part <|sum f_qq n_q|^2>,
    S_g1 the rest of the lowest-band <rho^dag rho>, S_b the explicit
    interband sum with the ensemble occupations.
    """
    M = int(np.prod(sites))
    if M > 8:
        raise ValueError("enumeration limited to 8 modes")
    E = lowest_band_3d(depths, sites, cutoff)
    F = lowest_f_3d(depths, sites, k, cutoff)
    c = _fermion_ops(M)
    n = [op.T @ op for op in c]
    occ_num = np.array([np.diag(x) for x in n])          # (M, 2^M)
    count = occ_num.sum(axis=0)
    energy = E @ occ_num
    if (N is None) == (mu is None):
        raise ValueError("give exactly one of N (canonical) or mu (grand canonical)")
    if N is not None:
        allowed = np.isclose(count, N)
        x = np.where(allowed, -(energy - energy[allowed].min()) / T if T > 0 else 0.0, -np.inf)
        if T == 0:
            e_min = energy[allowed].min()
            x = np.where(allowed & np.isclose(energy, e_min), 0.0, -np.inf)
    else:
        x = -(energy - mu * count - np.min(energy - mu * count)) / T
    w = np.exp(x - x.max())
    w /= w.sum()

    rho = sum(F[q, p] * c[p].T @ c[q] for q in range(M) for p in range(M))
    diag = sum(F[q, q] * n[q] for q in range(M))
    low = np.real(np.einsum("s,s->", w, np.diag(rho.conj().T @ rho)))
    g0 = np.real(np.einsum("s,s->", w, np.diag(diag.conj().T @ diag)))
    Nq = occ_num @ w
    b = interband_sum(depths, sites, k, Nq.reshape(sites), n_bands, cutoff)
    return {"g0": float(g0), "g1": float(low - g0), "b": b, "occupations": Nq.reshape(sites)}


# ---------------------------------------------------------------- Mott insulator


def wannier_density_ft(depth: float, sites: int, kd, cutoff: int = 30, nodes: int = 4000):
    """Integral of |w(x)|^2 exp(i pi kd x) over the centred ring window.

    w is built from dense-diagonalization Bloch functions and integrated
    with a uniform midpoint rule.
    """
    q = quasimomenta(sites)
    half = sites / 2
    x = -half + (np.arange(nodes * sites) + 0.5) / nodes
    w = np.zeros_like(x, dtype=complex)
    for qi in q:
        _, C, l = dense_bands(depth, qi, cutoff)
        c0 = C[0]
        w += np.exp(1j * np.pi * (qi + 2 * l[:, None]) * x[None, :]).T @ c0
    w /= sites
    dens = np.abs(w) ** 2 / nodes
    return np.exp(1j * np.pi * np.multiply.outer(np.atleast_1d(kd), x)) @ dens


def mott_enumeration(M_sites, n0: int, T: float, U: float, k, f00: complex,
                     restricted: bool = False) -> dict:
    """J = 0 Bose-Hubbard thermal averages by listing every number state.

    ``M_sites`` is the (Mx, My, Mz) lattice; ``f00`` the single-site form
    factor at ``k``.  With ``restricted`` only n0 +/- 1 particle-hole states
    are kept.
    """
    M = int(np.prod(M_sites))
    if M > 8:
        raise ValueError("full enumeration limited to 8 sites")
    N = n0 * M
    states, energies = [], []
    for cut in itertools.combinations(range(N + M - 1), M - 1):
        bounds = (-1,) + cut + (N + M - 1,)
        occ = np.array([bounds[i + 1] - bounds[i] - 1 for i in range(M)])
        if restricted and np.any(np.abs(occ - n0) > 1):
            continue
        states.append(occ)
        energies.append(0.5 * U * np.sum(occ * (occ - 1)) - 0.5 * U * M * n0 * (n0 - 1))
    states = np.array(states, float)
    energies = np.array(energies)
    if T > 0:
        x = -energies / T
    else:
        x = np.where(np.isclose(energies, energies.min()), 0.0, -np.inf)
    w = np.exp(x - x.max())
    Z_rel = w.sum()
    w /= Z_rel
    pos = np.array(list(itertools.product(*(range(m) for m in M_sites))), float)
    phase = np.exp(1j * np.pi * pos @ np.asarray(k, float))
    amp = states @ phase                       # sum_j e^{ik r_j} n_j for each state
    f2 = abs(f00) ** 2
    low = f2 * float(w @ np.abs(amp) ** 2)
    g0 = f2 * abs(w @ amp) ** 2
    ground = np.isclose(energies, energies.min())
    return {"g0": float(g0), "g1": float(low - g0), "b": float(N * (1 - f2)),
            "P0": float(w[ground].sum() / ground.sum()) if T > 0 else 1.0,
            "Z_ratio": float(1.0 / (w[ground].sum() / ground.sum())) if T > 0 else 1.0,
            "fluctuation": float(w @ np.mean((states - n0) ** 2, axis=1))}


# ---------------------------------------------------------------- bosons in Bloch modes


class BoseModes:
    """Fixed-N Fock space of a few bosonic modes (dense matrices)."""

    def __init__(self, n_modes: int, N: int):
        self.N = int(N)
        self.basis = [s for s in itertools.product(range(N + 1), repeat=n_modes) if sum(s) == N]
        self.index = {s: i for i, s in enumerate(self.basis)}

    @property
    def dim(self) -> int:
        return len(self.basis)

    def string(self, creators, annihilators) -> np.ndarray:
        """Matrix of prod(b^dag_c) prod(b_a) (annihilators act first, right to left)."""
        out = np.zeros((self.dim, self.dim))
        for j, s in enumerate(self.basis):
            s = list(s)
            amp = 1.0
            for mode in reversed(annihilators):
                if s[mode] == 0:
                    amp = 0.0
                    break
                amp *= np.sqrt(s[mode])
                s[mode] -= 1
            if amp == 0.0:
                continue
            for mode in reversed(creators):
                s[mode] += 1
                amp *= np.sqrt(s[mode])
            out[self.index[tuple(s)], j] += amp
        return out

    def number(self, mode) -> np.ndarray:
        return np.diag([float(s[mode]) for s in self.basis])


def two_mode_bose(model, species, N: int, T: float, k, scale: float = 1.0) -> dict:
    """Exact lowest-band S components for bosons on a two-site (2, 1, 1) lattice.

    The interaction keeps every Bloch-mode process (1/2M) sum U b^dag b^dag b b
    with U from cell averages of the model's Bloch functions.  Returns
    S_g0 (diagonal part), S_g12 (all off-diagonal lowest-band scattering,
    to be compared with S_g1 + S_g2), S_b from the sum rule with exact
    occupations, and the exact occupations.
    """
    if model.shape != (2, 1, 1):
        raise ValueError("two-mode oracle needs a (2, 1, 1) lattice")
    from .superfluid import interaction_prefactor

    pre = interaction_prefactor(model, species, scale)
    w = model.w
    px = model.phi[0][0]                       # (2, nodes); q = 0 then q = 1
    other = np.prod([np.sum(w * np.abs(model.phi[d][0][0]) ** 4) for d in (1, 2)])
    q = model.dims[0].q
    E = model.lowest_energies().ravel()
    modes = BoseModes(2, N)
    H = E[0] * modes.number(0) + E[1] * modes.number(1)
    for p1, p2, p3, p4 in itertools.product(range(2), repeat=4):
        dq = q[p3] + q[p4] - q[p1] - q[p2]
        if abs(np.exp(1j * np.pi * dq) - 1) > 1e-9:
            continue
        U = pre * other * np.sum(w * px[p1].conj() * px[p2].conj() * px[p3] * px[p4])
        H = H + np.real(U) / (2 * model.M) * modes.string([p1, p2], [p3, p4])
    vals, vecs = np.linalg.eigh(H)
    if T > 0:
        wts = np.exp(-(vals - vals[0]) / T)
    else:
        wts = np.isclose(vals, vals[0]).astype(float)
    wts /= wts.sum()

    table = model.table(k)
    F = np.array([[table.f((a, 0, 0), (b, 0, 0)) for b in range(2)] for a in range(2)])
    n = [modes.number(0), modes.number(1)]
    diag = F[0, 0] * n[0] + F[1, 1] * n[1]
    off = F[0, 1] * modes.string([1], [0]) + F[1, 0] * modes.string([0], [1])

    def avg(op):
        return float(np.real(np.einsum("s,is,ij,js->", wts, vecs.conj(), op, vecs)))

    occ = np.array([avg(n[0]), avg(n[1])])
    rows = table.row_weight().ravel()
    return {"g0": avg(diag.conj().T @ diag), "g12": avg(off.conj().T @ off),
            "b": float(N - occ @ rows), "occupations": occ}


def two_site_mott_inelastic(model, k) -> float:
    """Lowest-band inelastic S for one atom per site on a (2, 1, 1) lattice at T = 0.

    The Mott state is built from Wannier operators b_j = (b_0 +/- b_1)/sqrt(2)
    in the Bloch-mode Fock space, and the scattering operator uses Bloch-basis
    matrix elements, so the cancellation between the two scattering paths
    is tested rather than assumed.
    """
    if model.shape != (2, 1, 1):
        raise ValueError("needs a (2, 1, 1) lattice")
    modes = BoseModes(2, 2)
    # |1,1> in sites = b_A^dag b_B^dag |0> with b_A = (b_0 + b_1)/sqrt2, b_B = (b_0 - b_1)/sqrt2
    # = (b_0^dag^2 - b_1^dag^2) / 2 |0>  ->  (|2,0> - |0,2>) / sqrt2
    psi = np.zeros(modes.dim)
    psi[modes.index[(2, 0)]] = 1 / np.sqrt(2)
    psi[modes.index[(0, 2)]] = -1 / np.sqrt(2)
    table = model.table(k)
    F = np.array([[table.f((a, 0, 0), (b, 0, 0)) for b in range(2)] for a in range(2)])
    rho = sum(F[a, b] * modes.string([b], [a]) for a in range(2) for b in range(2))
    mean = psi @ rho @ psi
    return float(np.real(psi @ rho.conj().T @ rho @ psi) - abs(mean) ** 2)
