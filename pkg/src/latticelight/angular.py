"""Photon-rate maps over scattering direction and their solid-angle integrals.

The rate density in direction (theta, phi) is I_atom(theta) S(k(theta, phi)).
Integrals use an adaptive tensor Gauss-Kronrod (G7/K15) cubature on
(theta, phi) rectangles.  A rectangle is bisected along the direction whose
embedded Gauss estimate disagrees most with the Kronrod one, so the sharp
diffraction ridges along the lattice axes are refined in phi only.

Components are grouped by cost: the diagonal and single-row sums (cheap,
but sharply structured) are integrated separately from the full double
sums (expensive, smooth inside the detector), each to the requested
relative tolerance.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import SpeciesSpec, atom_prefactor, scattering_vector
from .errors import ConfigError, ConvergenceError
from .fermi import FermiState
from .fermi import structure_factor as _fermi_sf
from .matrix_elements import COMPONENTS, INELASTIC, LatticeModel, StructureFactorBreakdown
from .mott import MottState
from .mott import structure_factor as _mott_sf
from .superfluid import SuperfluidState
from .superfluid import structure_factor as _sf_sf

# Kronrod 15-point nodes on [0, 1] (mirrored) with the embedded 7-point Gauss rule
_XK = np.array([0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                0.207784955007898467600689403773245, 0.0])
_WK = np.array([0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([0.0, 0.129484966168869693270611432679082, 0.0,
                0.279705391489276667901467771423780, 0.0,
                0.381830050505118944950369775488975, 0.0,
                0.417959183673469387755102040816327])


def gauss_kronrod_rule():
    """Nodes on [-1, 1] with Kronrod weights and embedded Gauss weights (zero off-rule)."""
    x = np.concatenate([-_XK[:-1], _XK[::-1]])
    wk = np.concatenate([_WK[:-1], _WK[::-1]])
    wg = np.concatenate([_WG[:-1], _WG[::-1]])
    return x, wk, wg


@dataclass(frozen=True)
class DetectorSpec:
    """Annular aperture theta_stop <= theta <= theta_max with full azimuthal coverage.

    theta_max = asin(NA).  theta_stop == theta_max is allowed and gives an
    empty aperture.
    """

    theta_stop: float = 0.06
    theta_max: float = float(np.arcsin(0.5))

    def __post_init__(self):
        if not 0 <= self.theta_stop <= self.theta_max <= np.pi / 2:
            raise ConfigError("detector needs 0 <= theta_stop <= theta_max <= pi/2")

    @classmethod
    def from_aperture(cls, numerical_aperture: float, theta_stop: float = 0.06) -> "DetectorSpec":
        if not 0 < numerical_aperture <= 1:
            raise ConfigError("numerical aperture must lie in (0, 1]")
        return cls(theta_stop=theta_stop, theta_max=float(np.arcsin(numerical_aperture)))


# components whose evaluation needs only diagonal elements or one matrix row
_CHEAP = {"fermi": ("g0",), "superfluid": ("g0", "g1"), "mott": COMPONENTS}


class PhaseEvaluator:
    """Structure factors of one or more solved states of the same phase.

    Bundles the lattice model, the states (typically a temperature grid,
    evaluated jointly) and the species that sets the photon-rate prefactor.
    ``workers > 1`` spreads batches of k over a thread pool; results do not
    depend on it.
    """

    def __init__(self, model: LatticeModel, states, species: SpeciesSpec,
                 threshold: float = 0.0, workers: int = 1, chunk: int = 64):
        states = list(states)
        if not states:
            raise ValueError("need at least one state")
        kinds = {_kind(s) for s in states}
        if len(kinds) != 1:
            raise ValueError("states must all belong to the same phase")
        self.kind = kinds.pop()
        self.model = model
        self.states = states
        self.species = species
        self.threshold = float(threshold)
        self.workers = max(1, int(workers))
        self.chunk = int(chunk)
        self.spacing = model.spec.resolved_spacing(species)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def cheap(self) -> tuple:
        return _CHEAP[self.kind]

    @property
    def inelastic(self) -> tuple:
        return INELASTIC[self.kind]

    @property
    def square(self) -> bool:
        spec = self.model.spec
        return spec.sites[0] == spec.sites[1] and spec.depths[0] == spec.depths[1]

    def _eval(self, k, parts):
        if self.kind == "fermi":
            return _fermi_sf(self.model, self.states, k, self.threshold, parts=parts)
        if self.kind == "superfluid":
            return _sf_sf(self.model, self.states, k, self.threshold, parts=parts)
        return _mott_sf(self.model, self.states, k)

    def __call__(self, k, parts=COMPONENTS) -> StructureFactorBreakdown:
        """Components at every k in ``k[n, 3]``; arrays have shape (n, n_states)."""
        k = np.atleast_2d(np.asarray(k, float))
        if self.workers == 1 or len(k) <= self.chunk:
            return self._eval(k, parts)
        pieces = [k[i:i + self.chunk] for i in range(0, len(k), self.chunk)]
        with ThreadPoolExecutor(self.workers) as pool:
            results = list(pool.map(lambda kk: self._eval(kk, parts), pieces))
        merged = {c: np.concatenate([getattr(r, c) for r in results]) for c in COMPONENTS}
        trunc = np.concatenate([r.truncation for r in results])
        return StructureFactorBreakdown(self.kind, truncation=trunc, **merged)

    def rate_density(self, theta, phi, parts=COMPONENTS) -> np.ndarray:
        """I_atom(theta) S_c(k) for every node and requested component: (n, len(parts), S)."""
        theta = np.asarray(theta, float).ravel()
        phi = np.asarray(phi, float).ravel()
        sf = self(scattering_vector(theta, phi), parts)
        pref = atom_prefactor(theta, self.species, self.spacing)
        return np.stack([pref[:, None] * sf.component(c) for c in parts], axis=1)


def _kind(state):
    if isinstance(state, FermiState):
        return "fermi"
    if isinstance(state, SuperfluidState):
        return "superfluid"
    if isinstance(state, MottState):
        return "mott"
    raise TypeError(f"unsupported state type {type(state).__name__}")


@dataclass
class AngularMap:
    """Structure factors and rate densities on a (theta, phi) tensor grid.

    ``weights`` are quadrature weights including sin(theta), so
    ``sum(weights * rate)`` approximates the solid-angle integral over the
    mapped ranges.  Component arrays have shape (n_theta, n_phi, S).
    """

    kind: str
    thetas: np.ndarray
    phis: np.ndarray
    weights: np.ndarray
    theta_range: tuple
    phi_range: tuple
    breakdown: StructureFactorBreakdown
    prefactor: np.ndarray

    def rate(self, component: str = "total") -> np.ndarray:
        return self.prefactor[:, None, None] * self.breakdown.component(component)

    def integrate(self, component: str = "total") -> np.ndarray:
        return np.einsum("tp,tps->s", self.weights, self.rate(component))


def angular_map(evaluator: PhaseEvaluator, theta_range=(0.0, np.pi / 6), n_theta: int = 64,
                n_phi: int = 64, phi_range=(0.0, 2 * np.pi), thetas=None, phis=None) -> AngularMap:
    """Evaluate every component on a tensor grid.

    By default theta uses Gauss-Legendre nodes on ``theta_range`` and phi a
    uniform periodic (midpoint) rule on ``phi_range``.  Explicit ``thetas``
    or ``phis`` replace the default nodes and get trapezoid weights.
    """
    if thetas is None:
        t, w = np.polynomial.legendre.leggauss(n_theta)
        h = (theta_range[1] - theta_range[0]) / 2
        thetas, wt = theta_range[0] + h * (t + 1), h * w
    else:
        thetas = np.asarray(thetas, float)
        theta_range = (float(thetas[0]), float(thetas[-1]))
        wt = _trapezoid_weights(thetas)
    if phis is None:
        span = phi_range[1] - phi_range[0]
        phis = phi_range[0] + span * (np.arange(n_phi) + 0.5) / n_phi
        wp = np.full(n_phi, span / n_phi)
    else:
        phis = np.asarray(phis, float)
        phi_range = (float(phis[0]), float(phis[-1]))
        wp = _trapezoid_weights(phis)
    T, P = np.meshgrid(thetas, phis, indexing="ij")
    sf = evaluator(scattering_vector(T.ravel(), P.ravel()))
    shape = T.shape + (evaluator.n_states,)
    parts = {c: getattr(sf, c).reshape(shape) for c in COMPONENTS}
    trunc = sf.truncation.reshape(shape) if sf.truncation is not None else None
    bd = StructureFactorBreakdown(sf.kind, truncation=trunc, **parts)
    return AngularMap(kind=evaluator.kind, thetas=thetas, phis=phis,
                      weights=np.outer(wt * np.sin(thetas), wp),
                      theta_range=tuple(theta_range), phi_range=tuple(phi_range), breakdown=bd,
                      prefactor=atom_prefactor(thetas, evaluator.species, evaluator.spacing))


def _trapezoid_weights(x):
    x = np.asarray(x, float)
    if len(x) < 2:
        return np.zeros_like(x)
    w = np.zeros_like(x)
    dx = np.diff(x)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    return w


@dataclass
class CubatureResult:
    value: np.ndarray
    error: np.ndarray
    n_nodes: int
    n_panels: int
    worst_panel: tuple = field(default=())


def adaptive_cubature(fn, theta_range, phi_range, rtol: float = 1e-4, floor: float = 1e-10,
                      max_width=(0.1, np.pi / 8), max_nodes: int = 2_000_000) -> CubatureResult:
    """Integrate a vector-valued fn(theta, phi) -> (n, n_out) over a rectangle.

    Each panel carries a K15 x K15 estimate and the error |K - G| against
    the embedded G7 x G7 rule.  The integration stops when, for every
    output, the summed panel errors fall below max(rtol |I|, floor * max|I|).
    The fn must include any Jacobian (e.g. sin theta).
    """
    x, wk, wg = gauss_kronrod_rule()
    gmask = wg > 0
    t0, t1 = map(float, theta_range)
    p0, p1 = map(float, phi_range)
    if t1 <= t0 or p1 <= p0:
        probe = fn(np.array([t0]), np.array([p0]))
        z = np.zeros(probe.shape[1:])
        return CubatureResult(value=z, error=z.copy(), n_nodes=0, n_panels=0)

    nt = max(1, int(np.ceil((t1 - t0) / max_width[0] - 1e-9)))
    npp = max(1, int(np.ceil((p1 - p0) / max_width[1] - 1e-9)))
    te, pe = np.linspace(t0, t1, nt + 1), np.linspace(p0, p1, npp + 1)
    panels = np.array([(te[i], te[i + 1], pe[j], pe[j + 1]) for i in range(nt) for j in range(npp)])

    def evaluate(boxes):
        ht = (boxes[:, 1] - boxes[:, 0]) / 2
        hp = (boxes[:, 3] - boxes[:, 2]) / 2
        tt = (boxes[:, 0] + ht)[:, None] + ht[:, None] * x[None, :]
        pp = (boxes[:, 2] + hp)[:, None] + hp[:, None] * x[None, :]
        T = np.broadcast_to(tt[:, :, None], tt.shape + (len(x),))
        P = np.broadcast_to(pp[:, None, :], tt.shape + (len(x),))
        vals = fn(T.ravel(), P.ravel())
        vals = vals.reshape((len(boxes), len(x), len(x), -1))
        scale = (ht * hp)[:, None]
        kk = np.einsum("i,j,bijo->bo", wk, wk, vals) * scale
        gg = np.einsum("i,j,bijo->bo", wg[gmask], wg[gmask], vals[:, gmask][:, :, gmask]) * scale
        # directional errors: Gauss in one direction only
        e_t = np.abs(np.einsum("i,j,bijo->bo", wg[gmask], wk, vals[:, gmask]) * scale - kk)
        e_p = np.abs(np.einsum("i,j,bijo->bo", wk, wg[gmask], vals[:, :, gmask]) * scale - kk)
        return kk, np.abs(kk - gg), e_t, e_p

    vals, errs, e_t, e_p = evaluate(panels)
    n_nodes = len(panels) * len(x) ** 2
    while True:
        total = vals.sum(axis=0)
        err = errs.sum(axis=0)
        tol = np.maximum(rtol * np.abs(total), floor * np.max(np.abs(total)))
        tol = np.where(tol > 0, tol, np.inf)
        if np.all(err <= tol):
            break
        score = np.max(errs / tol, axis=1)
        order = np.argsort(-score, kind="stable")
        remaining = err[None, :] - np.cumsum(errs[order], axis=0)
        ok = np.all(remaining <= 0.5 * tol, axis=1)
        n_split = int(np.argmax(ok)) + 1 if np.any(ok) else len(order)
        chosen = order[:n_split]
        if n_nodes + 2 * n_split * len(x) ** 2 > max_nodes:
            w = panels[order[0]]
            raise ConvergenceError(
                f"angular cubature did not reach rtol={rtol:g} within {max_nodes} nodes; "
                f"worst panel theta=[{w[0]:.5g}, {w[1]:.5g}] phi=[{w[2]:.5g}, {w[3]:.5g}]")
        kids = []
        for i in chosen:
            a, b, c, d = panels[i]
            if np.max(e_t[i] / tol) >= np.max(e_p[i] / tol):
                m = 0.5 * (a + b)
                kids += [(a, m, c, d), (m, b, c, d)]
            else:
                m = 0.5 * (c + d)
                kids += [(a, b, c, m), (a, b, m, d)]
        kids = np.array(kids)
        kv, ke, kt, kp = evaluate(kids)
        n_nodes += len(kids) * len(x) ** 2
        keep = np.ones(len(panels), bool)
        keep[chosen] = False
        panels = np.concatenate([panels[keep], kids])
        vals = np.concatenate([vals[keep], kv])
        errs = np.concatenate([errs[keep], ke])
        e_t = np.concatenate([e_t[keep], kt])
        e_p = np.concatenate([e_p[keep], kp])
    worst = tuple(panels[int(np.argmax(np.max(errs / tol, axis=1)))])
    return CubatureResult(value=total, error=err, n_nodes=n_nodes, n_panels=len(panels),
                          worst_panel=worst)


@dataclass
class AngularIntegral:
    """Photon rates (photons/s) per component and state, with error estimates."""

    kind: str
    components: dict
    errors: dict
    n_nodes: int

    @property
    def total(self) -> np.ndarray:
        return sum(self.components[c] for c in self.components)

    @property
    def total_error(self) -> np.ndarray:
        return sum(self.errors[c] for c in self.errors)

    def sum(self, names) -> np.ndarray:
        return sum((self.components[c] for c in names), np.zeros_like(self.total))

    def as_dict(self) -> dict:
        return {"total": self.total.tolist(),
                "components": {c: v.tolist() for c, v in self.components.items()},
                "errors": {c: v.tolist() for c, v in self.errors.items()},
                "quadrature_error": self.total_error.tolist(), "n_nodes": self.n_nodes}


def _sector(evaluator):
    # mirror symmetry in kx and ky always holds; square lattices also swap x and y
    return (np.pi / 4, 8.0) if evaluator.square else (np.pi / 2, 4.0)


def integrate_rate(evaluator: PhaseEvaluator, theta_range, parts=COMPONENTS,
                   rtol: float = 1e-4, max_nodes: int = 2_000_000) -> AngularIntegral:
    """Solid-angle integral of I_atom S_c over theta_range and all phi."""
    phi_max, mult = _sector(evaluator)
    S = evaluator.n_states
    components, errors, n_nodes = {}, {}, 0
    groups = [tuple(c for c in parts if c in evaluator.cheap),
              tuple(c for c in parts if c not in evaluator.cheap)]
    for group in groups:
        if not group:
            continue

        def fn(t, p, group=group):
            dens = evaluator.rate_density(t, p, group) * np.sin(t)[:, None, None]
            return dens.reshape(len(t), len(group) * S)

        res = adaptive_cubature(fn, theta_range, (0.0, phi_max), rtol=rtol, max_nodes=max_nodes)
        n_nodes += res.n_nodes
        val = res.value.reshape(len(group), S) * mult
        err = res.error.reshape(len(group), S) * mult
        for i, c in enumerate(group):
            components[c], errors[c] = val[i], err[i]
    ordered = [c for c in COMPONENTS if c in components]
    return AngularIntegral(evaluator.kind, {c: components[c] for c in ordered},
                           {c: errors[c] for c in ordered}, n_nodes)


def detector_integrate(source, detector: DetectorSpec, rtol: float = 1e-4,
                       parts=COMPONENTS, max_nodes: int = 2_000_000) -> AngularIntegral:
    """Photon rate collected by ``detector`` (photons/s), per component and state.

    ``source`` is a :class:`PhaseEvaluator` (adaptive cubature) or an
    :class:`AngularMap` whose theta range matches the aperture and whose
    phi range covers the full circle (fixed quadrature on its grid).
    """
    theta_range = (detector.theta_stop, detector.theta_max)
    if isinstance(source, AngularMap):
        if not np.allclose(source.theta_range, theta_range, rtol=0, atol=1e-12):
            raise ValueError("map theta range does not match the detector aperture")
        if not np.isclose(source.phi_range[1] - source.phi_range[0], 2 * np.pi):
            raise ValueError("map must cover the full azimuth")
        comps = {c: source.integrate(c) for c in parts}
        return AngularIntegral(source.kind, comps, {c: np.full_like(v, np.nan) for c, v in comps.items()},
                               source.weights.size)
    return integrate_rate(source, theta_range, parts, rtol, max_nodes)


def total_inelastic_rate(evaluator: PhaseEvaluator, rtol: float = 1e-4,
                         max_nodes: int = 2_000_000, exclude=()) -> AngularIntegral:
    """Full-sphere rate of energy-transferring scattering, per inelastic component.

    ``exclude`` drops components from the heating budget (used to model a
    gas in which interband scattering is ignored altogether).
    """
    parts = tuple(c for c in evaluator.inelastic if c not in exclude)
    return integrate_rate(evaluator, (0.0, np.pi), parts, rtol, max_nodes)
