"""Embedding toolkit: clouds of weight vectors, simplex maps and measure families.

Random vectors are represented by finite clouds (probability, point). The
maps here move such clouds into the order simplex ``H``, telescope them onto
the probability simplex ``T_{N+1}`` and dress the resulting weight vectors
as mixing measures over a fixed atom list.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import cKDTree

from .fourierlab import GridDensity

__all__ = [
    "AtomCloud",
    "FiniteSupportMeasure",
    "MixingMeasure",
    "atomize",
    "region_constraints",
    "chebyshev_center",
    "fit_into_region",
    "apply_affine",
    "telescope_to_simplex",
    "simplex_to_order",
    "pad_to_simplex",
    "telescoping_identity_check",
    "assemble_mixing_measure",
    "convolution_family",
    "scaled_family",
]

ATOM_CAP = 200_000
FAMILY_CAP = 100_000


def _is_exact(v) -> bool:
    return isinstance(v, (int, Fraction)) and not isinstance(v, bool)


class AtomCloud:
    """Finitely many points in R^d with probabilities.

    Points are either a float array of shape ``(n, d)`` or, in rational mode,
    a list of tuples of ``Fraction`` (probabilities then are ``Fraction`` too).
    """

    def __init__(self, points, probs, tol: float = 1e-9):
        if isinstance(points, np.ndarray) or not points or not all(_is_exact(v) for p in points for v in p):
            pts = np.asarray(points, dtype=float)
            if pts.ndim != 2:
                raise ValueError("points must be a 2-d array")
            pr = np.asarray(probs, dtype=float)
            if pr.shape != (pts.shape[0],):
                raise ValueError("one probability per point")
            if np.any(pr < 0) or abs(pr.sum() - 1) > tol:
                raise ValueError("probabilities must be nonnegative and sum to 1")
            self.points, self.probs, self.exact = pts, pr, False
        else:
            pts = [tuple(Fraction(v) for v in p) for p in points]
            pr = [Fraction(v) for v in probs]
            if len(pr) != len(pts) or len({len(p) for p in pts}) != 1:
                raise ValueError("inconsistent cloud")
            if any(v < 0 for v in pr) or sum(pr) != 1:
                raise ValueError("probabilities must be nonnegative and sum to 1")
            self.points, self.probs, self.exact = pts, pr, True

    @property
    def n(self) -> int:
        return len(self.probs)

    @property
    def d(self) -> int:
        return len(self.points[0]) if self.exact else self.points.shape[1]

    def as_float(self) -> "AtomCloud":
        if not self.exact:
            return self
        return AtomCloud(np.array([[float(v) for v in p] for p in self.points]),
                         np.array([float(v) for v in self.probs]))

    def map_points(self, fn) -> "AtomCloud":
        if self.exact:
            return AtomCloud([fn(p) for p in self.points], self.probs)
        return AtomCloud(fn(self.points), self.probs)

    def point_array(self) -> np.ndarray:
        return self.as_float().points

    def mean(self) -> np.ndarray:
        c = self.as_float()
        return c.probs @ c.points

    def to_json(self):
        if self.exact:
            return {"exact": True,
                    "points": [[str(v) for v in p] for p in self.points],
                    "probs": [str(v) for v in self.probs]}
        return {"points": self.points.tolist(), "probs": self.probs.tolist()}

    @classmethod
    def from_json(cls, data):
        if data.get("exact"):
            return cls([[Fraction(v) for v in p] for p in data["points"]], [Fraction(v) for v in data["probs"]])
        return cls(np.asarray(data["points"], dtype=float), np.asarray(data["probs"], dtype=float))

    def __repr__(self):
        return f"AtomCloud(n={self.n}, d={self.d}, exact={self.exact})"


@dataclass(frozen=True)
class FiniteSupportMeasure:
    """A probability law on finitely many reals, atoms strictly increasing."""

    atoms: tuple
    weights: tuple

    def __init__(self, atoms, weights, tol: float = 1e-12):
        pairs = sorted(zip(atoms, weights), key=lambda aw: aw[0])
        a = tuple(p[0] for p in pairs)
        w = tuple(p[1] for p in pairs)
        if not a:
            raise ValueError("empty support")
        if any(a[i] >= a[i + 1] for i in range(len(a) - 1)):
            raise ValueError("atoms must be distinct")
        if any(x < 0 for x in w):
            raise ValueError("negative weight")
        total = sum(w)
        if abs(total - 1) > tol:
            raise ValueError(f"weights sum to {total}, not 1")
        object.__setattr__(self, "atoms", a)
        object.__setattr__(self, "weights", w)

    @classmethod
    def dirac(cls, a=0):
        return cls([a], [1])

    def laplace(self, s):
        s = np.asarray(s, dtype=float)
        return sum(float(w) * np.exp(-s * float(a)) for a, w in zip(self.atoms, self.weights))

    def mean(self):
        return sum(a * w for a, w in zip(self.atoms, self.weights))

    def to_json(self):
        return {"atoms": [_num_json(a) for a in self.atoms], "weights": [_num_json(w) for w in self.weights]}

    @classmethod
    def from_json(cls, data):
        return cls([_num_parse(a) for a in data["atoms"]], [_num_parse(w) for w in data["weights"]])


def _num_json(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else v.numerator
    return v


def _num_parse(v):
    if isinstance(v, str):
        return Fraction(v)
    return v


class MixingMeasure:
    """Law of a random probability measure on a fixed atom list.

    ``cloud`` holds finitely many weight vectors (points of ``T_N``) with
    their probabilities; the directing measure for cloud point ``w`` is
    ``sum_j w_j delta_{atoms[j]}``.
    """

    def __init__(self, atoms: Sequence, cloud: AtomCloud, tol: float = 1e-9):
        atoms = tuple(atoms)
        if len(set(atoms)) != len(atoms):
            raise ValueError("atoms must be distinct")
        if cloud.d != len(atoms):
            raise ValueError(f"cloud dimension {cloud.d} does not match {len(atoms)} atoms")
        if cloud.exact:
            if any(v < 0 for p in cloud.points for v in p) or any(sum(p) != 1 for p in cloud.points):
                raise ValueError("weight vectors must lie in the simplex")
        else:
            P = cloud.points
            if np.any(P < -tol) or np.any(np.abs(P.sum(axis=1) - 1) > tol):
                raise ValueError("weight vectors must lie in the simplex")
        self.atoms = atoms
        self.cloud = cloud

    @property
    def N(self):
        return len(self.atoms)

    @property
    def weights(self):
        return self.cloud.points

    @property
    def probs(self):
        return self.cloud.probs

    def component(self, i) -> FiniteSupportMeasure:
        w = self.cloud.points[i]
        keep = [(a, x) for a, x in zip(self.atoms, w) if x != 0]
        return FiniteSupportMeasure([a for a, _ in keep], [x for _, x in keep], tol=1e-9)

    def weight_law(self) -> AtomCloud:
        return self.cloud

    def to_json(self):
        comps = []
        for p, w in zip(self.cloud.probs, self.cloud.points):
            if self.cloud.exact:
                comps.append({"prob": str(p), "weights": [str(v) for v in w]})
            else:
                comps.append({"prob": float(p), "weights": [float(v) for v in w]})
        return {"atoms": [_num_json(a) for a in self.atoms], "components": comps}

    @classmethod
    def from_json(cls, data):
        comps = data["components"]
        exact = comps and isinstance(comps[0]["prob"], str)
        if exact:
            cloud = AtomCloud([[Fraction(v) for v in c["weights"]] for c in comps], [Fraction(c["prob"]) for c in comps])
        else:
            cloud = AtomCloud(np.array([c["weights"] for c in comps], dtype=float), np.array([c["prob"] for c in comps]))
        return cls([_num_parse(a) for a in data["atoms"]], cloud)

    def __repr__(self):
        return f"MixingMeasure(atoms={self.atoms}, components={self.cloud.n})"


# ---------------------------------------------------------------- atomization
def atomize(density: GridDensity, cap: int = ATOM_CAP) -> AtomCloud:
    """One atom per nonzero grid cell at the cell center, weight = cell mass.

    Beyond ``cap`` atoms, the lightest cells are merged into their nearest
    kept cell (mass preserving).
    """
    vals = density.values
    mask = vals > 0
    pts = density.points(mask)
    w = vals[mask] * density.cell_volume
    if len(w) > cap:
        order = np.argsort(-w, kind="stable")
        keep, drop = order[:cap], order[cap:]
        tree = cKDTree(pts[keep])
        _, nearest = tree.query(pts[drop])
        wk = w[keep].copy()
        np.add.at(wk, nearest, w[drop])
        pts, w = pts[keep], wk
    return AtomCloud(pts, w / w.sum())


# ---------------------------------------------------------------- regions
def region_constraints(region: str, d: int):
    """Inequalities ``A x <= b`` for ``H(d)`` or ``T'(d)``."""
    if d < 1:
        raise ValueError("region interior is empty for d = 0")
    if region == "H":
        A = np.zeros((d + 1, d))
        b = np.zeros(d + 1)
        A[0, 0], b[0] = 1.0, 1.0
        for j in range(d - 1):
            A[j + 1, j], A[j + 1, j + 1] = -1.0, 1.0
        A[d, d - 1] = -1.0
        return A, b
    if region in ("T'", "Tprime"):
        A = np.vstack([-np.eye(d), np.ones((1, d))])
        b = np.concatenate([np.zeros(d), [1.0]])
        return A, b
    raise ValueError(f"unknown region {region!r}")


def chebyshev_center(region: str, d: int):
    """Center and radius of the largest ball inside the region."""
    A, b = region_constraints(region, d)
    norms = np.linalg.norm(A, axis=1)
    c = np.zeros(d + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=np.hstack([A, norms[:, None]]), b_ub=b, bounds=[(None, None)] * d + [(0, None)],
                  method="highs")
    if not res.success:
        raise RuntimeError("Chebyshev center LP failed")
    return res.x[:d], float(res.x[d])


def _min_slack(points, region, d):
    A, b = region_constraints(region, d)
    norms = np.linalg.norm(A, axis=1)
    return float(((b[None, :] - points @ A.T) / norms[None, :]).min())


def apply_affine(cloud: AtomCloud, a, b) -> AtomCloud:
    b = np.asarray(b, dtype=float)
    return AtomCloud(a * cloud.point_array() + b[None, :], cloud.as_float().probs)


def fit_into_region(cloud: AtomCloud, region: str = "H", margin: float = 0.1, min_slack: float = 1e-6,
                    bbox=None):
    """Affine map ``x -> a x + b`` placing the cloud strictly inside a region.

    The cloud's bounding box is centered at the region's Chebyshev center and
    scaled so the box fits in the inscribed ball with a ``margin`` fraction to
    spare. A cloud already inside with slack ``>= min_slack`` is left alone
    (``a = 1, b = 0``). ``bbox`` overrides the box, so several clouds can be
    fitted with one common map.

    Returns
    -------
    a : float
    b : ndarray
    fitted : AtomCloud
    """
    pts = cloud.point_array()
    d = pts.shape[1]
    if bbox is None:
        if _min_slack(pts, region, d) >= min_slack:
            return 1.0, np.zeros(d), cloud.as_float()
        lo, hi = pts.min(axis=0), pts.max(axis=0)
    else:
        lo, hi = (np.asarray(v, dtype=float) for v in bbox)
    center, r = chebyshev_center(region, d)
    half = np.linalg.norm((hi - lo) / 2)
    a = 1.0 if half == 0 else (1 - margin) * r / half
    b = center - a * (hi + lo) / 2
    fitted = apply_affine(cloud, a, b)
    if _min_slack(fitted.points, region, d) < min_slack:
        raise RuntimeError("fitted cloud violates the region margin")
    return a, b, fitted


# ---------------------------------------------------------------- simplex maps
def telescope_to_simplex(cloud: AtomCloud, tol: float = 1e-12) -> AtomCloud:
    """``U_0 = 1 - W_1, U_j = W_j - W_{j+1}, U_N = W_N`` for points of ``H(N)``."""
    if cloud.exact:
        out = []
        for w in cloud.points:
            if not (1 >= w[0] and all(w[j] >= w[j + 1] for j in range(len(w) - 1)) and w[-1] >= 0):
                raise ValueError(f"point {w} is not in the order simplex")
            out.append((1 - w[0],) + tuple(w[j] - w[j + 1] for j in range(len(w) - 1)) + (w[-1],))
        return AtomCloud(out, cloud.probs)
    W = cloud.points
    ext = np.hstack([np.ones((W.shape[0], 1)), W, np.zeros((W.shape[0], 1))])
    U = ext[:, :-1] - ext[:, 1:]
    if U.min() < -tol:
        raise ValueError("point outside the order simplex")
    return AtomCloud(U, cloud.probs)


def simplex_to_order(cloud: AtomCloud) -> AtomCloud:
    """Inverse of :func:`telescope_to_simplex`: ``W_j = U_j + ... + U_N``."""
    if cloud.exact:
        out = []
        for u in cloud.points:
            if sum(u) != 1:
                raise ValueError("point not in the simplex")
            tail = []
            acc = Fraction(0)
            for v in reversed(u[1:]):
                acc += v
                tail.append(acc)
            out.append(tuple(reversed(tail)))
        return AtomCloud(out, cloud.probs)
    U = cloud.points
    W = np.cumsum(U[:, ::-1], axis=1)[:, ::-1][:, 1:]
    return AtomCloud(W, cloud.probs)


def pad_to_simplex(cloud: AtomCloud) -> AtomCloud:
    """``(W_1..W_d) in T' -> (1 - sum W, W_1, ..., W_d) in T_{d+1}``."""
    if cloud.exact:
        return AtomCloud([(1 - sum(w),) + tuple(w) for w in cloud.points], cloud.probs)
    W = cloud.points
    U = np.hstack([1 - W.sum(axis=1, keepdims=True), W])
    if U.min() < -1e-12:
        raise ValueError("point outside T'")
    return AtomCloud(np.maximum(U, 0.0), cloud.probs)


def telescoping_identity_check(N: int, samples: int = 100, seed: int = 0, complex_variant: bool = False,
                               y=None) -> float:
    """Residual of ``c_{N+1}(y) . U = 1 + (y - 1) c_N(y) . W`` on random data.

    ``W`` is drawn from ``H(N)``; ``y`` is uniform on ``[-2, 2]`` or, for the
    complex variant, on the unit circle.
    """
    if N < 2:
        raise ValueError("N >= 2 required")
    rng = np.random.default_rng(seed)
    W = -np.sort(-rng.uniform(0, 1, size=(samples, N)), axis=1)
    U = telescope_to_simplex(AtomCloud(W, np.full(samples, 1 / samples))).points
    if y is None:
        y = np.exp(1j * rng.uniform(0, 2 * np.pi, samples)) if complex_variant else rng.uniform(-2, 2, samples)
    y = np.broadcast_to(np.asarray(y), (samples,))
    lhs = np.sum(U * y[:, None] ** np.arange(N + 1), axis=1)
    rhs = 1 + (y - 1) * np.sum(W * y[:, None] ** np.arange(N), axis=1)
    return float(np.abs(lhs - rhs).max())


def assemble_mixing_measure(cloud: AtomCloud, atoms) -> MixingMeasure:
    """Mixing measure whose weight-vector law is ``cloud``."""
    atoms = list(atoms)
    if len(atoms) != cloud.d:
        raise ValueError(f"{len(atoms)} atoms for a cloud of dimension {cloud.d}")
    return MixingMeasure(atoms, cloud)


# ---------------------------------------------------------------- families
def _merge_atoms(pairs):
    out: dict = {}
    for a, w in pairs:
        key = a if _is_exact(a) else round(float(a), 12)
        out[key] = out.get(key, 0) + w
    return out


def convolution_family(base: FiniteSupportMeasure, count: int, cap: int = FAMILY_CAP):
    """``[delta_0, base, base*base, ...]`` with ``count`` entries."""
    if any(a < 0 for a in base.atoms):
        raise ValueError("base atoms must be nonnegative")
    if count < 1:
        raise ValueError("count must be positive")
    one = 1 if all(_is_exact(w) for w in base.weights) else 1.0
    fam = [FiniteSupportMeasure([0], [one])]
    cur = {0: one}
    for _ in range(count - 1):
        nxt = _merge_atoms((a + b, wa * wb) for a, wa in cur.items() for b, wb in zip(base.atoms, base.weights))
        if len(nxt) > cap:
            raise ValueError(f"convolution support exceeds {cap} atoms")
        cur = nxt
        total = sum(cur.values())
        fam.append(FiniteSupportMeasure(list(cur), list(cur.values()), tol=1e-9 if not _is_exact(total) else 1e-12))
    return fam


def scaled_family(base: FiniteSupportMeasure, N: int):
    """Laws of ``k T`` for ``k = 0..N`` where ``T ~ base``."""
    one = 1 if all(_is_exact(w) for w in base.weights) else 1.0
    fam = [FiniteSupportMeasure([0], [one])]
    for k in range(1, N + 1):
        fam.append(FiniteSupportMeasure([k * a for a in base.atoms], list(base.weights)))
    return fam
