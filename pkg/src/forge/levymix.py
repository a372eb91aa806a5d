"""Mixtures of Lévy processes with finite-atom jump measures.

A Lévy process is described by its triple ``(beta, sigma2, nu)`` through

    log E[e^{iu X_t}] = t * (iu beta - u^2 sigma2 / 2
                             + sum_k nu_k (e^{iu x_k} - 1 - iu x_k/(1+x_k^2)) (1+x_k^2)/x_k^2).

LISPP members (independent sums of Poisson processes) have exponent
``int (e^{iux} - 1) dmu`` for a finite jump measure ``mu``; they correspond to
``nu = x^2/(1+x^2) mu`` and ``beta = int x/(1+x^2) dmu``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .simplexmap import MixingMeasure

__all__ = [
    "LevyTriple",
    "LisppSpec",
    "LevyMixing",
    "levy_khintchine_chf",
    "mixture_marginal_chf",
    "bm_hybrid_transform",
    "bm_marginal_table",
    "hybrid_separation",
    "normal_mixture_Sn_chf",
    "lispp_laplace_exponent",
    "lispp_mixture_laplace_moments",
    "bridge_construct",
    "simulate_path",
    "sample_marginal",
    "empirical_chf",
]


@dataclass(frozen=True)
class LevyTriple:
    """Drift, diffusion coefficient and a finite-atom Lévy measure."""

    beta: float = 0.0
    sigma2: float = 0.0
    nu_atoms: tuple = ()
    nu_masses: tuple = ()

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")
        if len(self.nu_atoms) != len(self.nu_masses):
            raise ValueError("one mass per atom")
        if any(x == 0 for x in self.nu_atoms):
            raise ValueError("nu must not charge 0")
        if any(m < 0 for m in self.nu_masses):
            raise ValueError("nu masses must be nonnegative")
        object.__setattr__(self, "nu_atoms", tuple(float(x) for x in self.nu_atoms))
        object.__setattr__(self, "nu_masses", tuple(float(x) for x in self.nu_masses))

    @property
    def is_bm(self) -> bool:
        return not any(self.nu_masses)

    def jump_intensities(self):
        """Poisson rate of each atom: ``nu_k (1 + x_k^2) / x_k^2``."""
        x = np.asarray(self.nu_atoms)
        return np.asarray(self.nu_masses) * (1 + x**2) / x**2

    def compensator_drift(self) -> float:
        x = np.asarray(self.nu_atoms)
        return float(np.sum(self.jump_intensities() * x / (1 + x**2)))

    def exponent(self, u):
        u = np.asarray(u, dtype=float)
        out = 1j * u * self.beta - u**2 * self.sigma2 / 2
        for x, m in zip(self.nu_atoms, self.nu_masses):
            out = out + m * (np.exp(1j * u * x) - 1 - 1j * u * x / (1 + x**2)) * (1 + x**2) / x**2
        return out

    def to_json(self):
        return {"beta": self.beta, "sigma2": self.sigma2, "nu": {"atoms": list(self.nu_atoms), "masses": list(self.nu_masses)}}

    @classmethod
    def from_json(cls, data):
        nu = data.get("nu", {})
        return cls(data.get("beta", 0.0), data.get("sigma2", 0.0), tuple(nu.get("atoms", ())), tuple(nu.get("masses", ())))


@dataclass(frozen=True)
class LisppSpec:
    """Jump measure ``mu = sum_k masses[k] delta_{atoms[k]}`` on ``[0, inf)``."""

    atoms: tuple
    masses: tuple

    def __post_init__(self):
        if len(self.atoms) != len(self.masses):
            raise ValueError("one mass per atom")
        if any(a < 0 for a in self.atoms):
            raise ValueError("LISPP atoms must be nonnegative")
        if any(m < 0 for m in self.masses):
            raise ValueError("masses must be nonnegative")
        object.__setattr__(self, "atoms", tuple(float(a) for a in self.atoms))
        object.__setattr__(self, "masses", tuple(float(m) for m in self.masses))

    @property
    def total_mass(self) -> float:
        return float(sum(self.masses))

    def to_triple(self) -> LevyTriple:
        keep = [(a, m) for a, m in zip(self.atoms, self.masses) if a != 0 and m > 0]
        atoms = tuple(a for a, _ in keep)
        nu = tuple(m * a**2 / (1 + a**2) for a, m in keep)
        beta = float(sum(m * a / (1 + a**2) for a, m in keep))
        return LevyTriple(beta, 0.0, atoms, nu)

    def to_json(self):
        return {"atoms": list(self.atoms), "masses": list(self.masses)}


class LevyMixing:
    """Finitely many Lévy triples with probabilities.

    LISPP mixtures whose jump measures share one atom list can be stored as
    a ``(components, atoms)`` mass matrix; triples and specs are then built
    only on request.
    """

    def __init__(self, components, probs, lispp=None):
        self._components = None if components is None else list(components)
        self._lispp = None if lispp is None else list(lispp)
        self._atoms = None
        self._masses = None
        self.probs = np.asarray(probs, dtype=float)
        if self._components is not None and len(self._components) != len(self.probs):
            raise ValueError("one probability per component")
        if np.any(self.probs < 0) or abs(self.probs.sum() - 1) > 1e-9:
            raise ValueError("probabilities must form a distribution")
        if self._lispp is not None and len(self._lispp) != len(self.probs):
            raise ValueError("one LISPP spec per component")

    @classmethod
    def from_lispp(cls, specs: Sequence[LisppSpec], probs):
        return cls([s.to_triple() for s in specs], probs, list(specs))

    @classmethod
    def from_lispp_matrix(cls, atoms, masses, probs):
        """Mixture of LISPPs with jump measures ``sum_j masses[i, j] delta_{atoms[j]}``."""
        atoms = np.asarray(atoms, dtype=float)
        masses = np.asarray(masses, dtype=float)
        if masses.ndim != 2 or masses.shape[1] != atoms.size:
            raise ValueError("mass matrix must have one column per atom")
        if np.any(atoms < 0) or np.any(masses < 0):
            raise ValueError("atoms and masses must be nonnegative")
        out = cls(None, probs)
        if masses.shape[0] != len(out.probs):
            raise ValueError("one probability per component")
        out._atoms, out._masses = atoms, masses
        return out

    @classmethod
    def bm(cls, pairs, probs):
        """Mixture of Brownian motions from ``(beta, sigma2)`` pairs."""
        return cls([LevyTriple(b, v) for b, v in pairs], probs)

    @property
    def n_components(self) -> int:
        return len(self.probs)

    @property
    def has_lispp(self) -> bool:
        return self._lispp is not None or self._masses is not None

    def lispp_spec(self, i) -> LisppSpec:
        if self._lispp is not None:
            return self._lispp[i]
        if self._masses is None:
            raise ValueError("mixture carries no LISPP jump measures")
        return LisppSpec(tuple(self._atoms), tuple(self._masses[i]))

    @property
    def lispp(self):
        if self._lispp is None and self._masses is not None:
            self._lispp = [self.lispp_spec(i) for i in range(self.n_components)]
        return self._lispp

    @property
    def components(self):
        if self._components is None:
            self._components = [s.to_triple() for s in self.lispp]
        return self._components

    def lispp_matrix(self):
        """Shared atoms and the mass matrix, stacking per-component specs if needed."""
        if self._masses is None:
            specs = self.lispp
            if specs is None:
                raise ValueError("mixture carries no LISPP jump measures")
            atoms = sorted({a for sp in specs for a in sp.atoms})
            col = {a: j for j, a in enumerate(atoms)}
            M = np.zeros((len(specs), len(atoms)))
            for i, sp in enumerate(specs):
                for a, m in zip(sp.atoms, sp.masses):
                    M[i, col[a]] += m
            self._atoms, self._masses = np.asarray(atoms, dtype=float), M
        return self._atoms, self._masses

    def to_json(self):
        out = {"components": [{"prob": float(p), "triple": c.to_json()} for p, c in zip(self.probs, self.components)]}
        if self.has_lispp:
            for i, item in enumerate(out["components"]):
                item["lispp"] = self.lispp_spec(i).to_json()
        return out

    def __repr__(self):
        return f"LevyMixing(components={self.n_components}, lispp={self.has_lispp})"


def levy_khintchine_chf(triple: LevyTriple, t, u):
    """``E[exp(iu X_t)]`` for the Lévy process with the given triple."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    out = np.exp(t * triple.exponent(u))
    return complex(out) if np.ndim(out) == 0 else out


def mixture_marginal_chf(theta: LevyMixing, t, u):
    """Probability-weighted characteristic function of ``X_t``."""
    out = sum(p * levy_khintchine_chf(c, t, u) for p, c in zip(theta.probs, theta.components))
    return complex(out) if np.ndim(out) == 0 else out


def _bm_params(theta: LevyMixing):
    if not all(c.is_bm for c in theta.components):
        raise ValueError("hybrid transform needs Brownian components (nu = 0)")
    beta = np.array([c.beta for c in theta.components])
    s2 = np.array([c.sigma2 for c in theta.components])
    return beta, s2


def bm_hybrid_transform(theta: LevyMixing, u_grid=None, s_grid=None):
    """Table ``E[exp(iu beta - s sigma2)]`` on a ``(u, s)`` grid.

    The marginal at time ``t`` and frequency ``w`` equals this transform at
    ``u = w t``, ``s = t w^2 / 2``, so marginals over all ``t`` determine it.
    """
    if u_grid is None:
        u_grid = np.linspace(-4, 4, 17)
    if s_grid is None:
        s_grid = np.linspace(0, 4, 17)
    beta, s2 = _bm_params(theta)
    u = np.asarray(u_grid, dtype=float)[:, None, None]
    s = np.asarray(s_grid, dtype=float)[None, :, None]
    return np.sum(theta.probs * np.exp(1j * u * beta - s * s2), axis=-1)


def bm_marginal_table(theta: LevyMixing, t_grid=None, u_grid=None):
    """``E[exp(iu t beta - t u^2 sigma2 / 2)]`` on a ``(t, u)`` grid."""
    if t_grid is None:
        t_grid = np.linspace(0, 4, 17)
    if u_grid is None:
        u_grid = np.linspace(-4, 4, 17)
    beta, s2 = _bm_params(theta)
    t = np.asarray(t_grid, dtype=float)[:, None, None]
    u = np.asarray(u_grid, dtype=float)[None, :, None]
    return np.sum(theta.probs * np.exp(1j * u * t * beta - t * u**2 * s2 / 2), axis=-1)


def hybrid_separation(theta1: LevyMixing, theta2: LevyMixing, u_grid=None, s_grid=None) -> float:
    return float(np.abs(bm_hybrid_transform(theta1, u_grid, s_grid) - bm_hybrid_transform(theta2, u_grid, s_grid)).max())


def normal_mixture_Sn_chf(theta, n: int, t):
    """``E[exp(i t n M - t^2 n V / 2)]`` over a cloud of ``(M, V)``.

    ``theta`` is a :class:`LevyMixing` of Brownian components or a pair
    ``(list of (M, V), probs)``.
    """
    if n < 1 or int(n) != n:
        raise ValueError("n must be a positive integer")
    if isinstance(theta, LevyMixing):
        M, V = _bm_params(theta)
        probs = theta.probs
    else:
        pairs, probs = theta
        M = np.array([p[0] for p in pairs], dtype=float)
        V = np.array([p[1] for p in pairs], dtype=float)
        probs = np.asarray(probs, dtype=float)
    if np.any(V < 0):
        raise ValueError("variances must be nonnegative")
    t = np.asarray(t, dtype=float)[..., None]
    out = np.sum(probs * np.exp(1j * t * n * M - t**2 * n * V / 2), axis=-1)
    return complex(out) if np.ndim(out) == 0 else out


def lispp_laplace_exponent(spec: LisppSpec, s):
    """``psi(s) = int (e^{-sx} - 1) dmu``."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("s must be nonnegative")
    out = sum(m * (np.exp(-s * a) - 1) for a, m in zip(spec.atoms, spec.masses)) if spec.atoms else np.zeros_like(s)
    return float(out) if np.ndim(out) == 0 else out


def lispp_mixture_laplace_moments(theta: LevyMixing, t, s, n):
    """``E[exp(n t psi_mu(s))]`` over the mixture of LISPP members."""
    if not theta.has_lispp:
        raise ValueError("mixture carries no LISPP jump measures")
    if t < 0 or s < 0 or n < 0 or int(n) != n:
        raise ValueError("t, s >= 0 and integer n >= 0 required")
    atoms, masses = theta.lispp_matrix()
    psi = masses @ (np.exp(-s * atoms) - 1)
    return float(theta.probs @ np.exp(n * t * psi))


def bridge_construct(theta1: MixingMeasure, theta2: MixingMeasure):
    """Send each weight vector ``w`` to the LISPP jump measure ``sum_j w_j delta_{a_j}``."""
    out = []
    for th in (theta1, theta2):
        if any(float(a) < 0 for a in th.atoms):
            raise ValueError("atoms must be nonnegative")
        cloud = th.cloud.as_float()
        out.append(LevyMixing.from_lispp_matrix([float(a) for a in th.atoms], np.maximum(cloud.points, 0.0), cloud.probs))
    return out[0], out[1]


def simulate_path(triple: LevyTriple, horizon: float, mesh: int = 1000, seed: int = 0):
    """Simulate one path on a uniform mesh.

    Brownian part: exact Gaussian increments. Jump part: exponential
    inter-arrival times per atom of ``nu``, rate ``nu_k (1+x_k^2)/x_k^2``,
    plus the compensating drift of the Lévy–Khintchine form.

    Returns
    -------
    times : ndarray, shape (mesh + 1,)
    values : ndarray, shape (mesh + 1,)
    jumps : list of (time, size)
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    rng = np.random.default_rng(seed)
    times = np.linspace(0.0, horizon, mesh + 1)
    dt = horizon / mesh
    drift = triple.beta - triple.compensator_drift()
    values = drift * times
    if triple.sigma2 > 0:
        inc = rng.normal(0.0, np.sqrt(triple.sigma2 * dt), size=mesh)
        values = values + np.concatenate([[0.0], np.cumsum(inc)])
    jumps = []
    for x, lam in zip(triple.nu_atoms, triple.jump_intensities()):
        if lam <= 0:
            continue
        t = rng.exponential(1 / lam)
        while t <= horizon:
            jumps.append((t, x))
            t += rng.exponential(1 / lam)
    jumps.sort()
    if jumps:
        jt = np.array([j[0] for j in jumps])
        js = np.array([j[1] for j in jumps])
        cum = np.concatenate([[0.0], np.cumsum(js)])
        values = values + cum[np.searchsorted(jt, times, side="right")]
    return times, values, jumps


def sample_marginal(theta: LevyMixing, t: float, size: int, seed: int = 0):
    """``size`` independent draws of ``X_t`` under the mixture."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(theta.components), size=size, p=theta.probs)
    out = np.empty(size)
    for i, comp in enumerate(theta.components):
        sel = np.nonzero(idx == i)[0]
        if not len(sel):
            continue
        k = len(sel)
        vals = (comp.beta - comp.compensator_drift()) * t + np.sqrt(comp.sigma2 * t) * rng.standard_normal(k)
        for x, lam in zip(comp.nu_atoms, comp.jump_intensities()):
            vals = vals + x * rng.poisson(lam * t, size=k)
        out[sel] = vals
    return out


def empirical_chf(samples, u):
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return np.exp(1j * np.outer(u, samples)).mean(axis=1)
