"""Exact partial-sum laws of exchangeable sequences with finitely supported components.

For a mixing measure with atom list ``A`` and weight vector ``W``,

    P(S_n = sum_j r_j a_j) = sum over compositions r of n of C(n; r) E[prod_j W_j**r_j]

(collecting compositions that land on the same value). Everything below is
built on this multinomial identity and on the mixed moments ``m_r``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .simplexmap import AtomCloud, FiniteSupportMeasure, MixingMeasure

__all__ = [
    "LatticeLaw",
    "MomentTable",
    "RepresentationCollision",
    "compositions",
    "multinomial",
    "mixed_moments",
    "exact_partial_sum_law",
    "total_variation",
    "compare_partial_sum_laws",
    "laplace_transform_moments",
    "curve_moments",
    "recover_mixed_moments",
    "marginal_moment_law_moments",
    "marginal_chf_comparison",
    "family_partial_sum_law",
    "laplace_tv_factor",
    "sample_sequence",
    "sample_partial_sums",
    "empirical_law",
]

MAX_DEGREE = 20
COMPOSITION_CAP = 250_000
MATCH_TOL = 1e-12


class RepresentationCollision(ValueError):
    """Two compositions produce the same partial-sum value."""


@dataclass
class LatticeLaw:
    """A law on finitely many reals, values strictly increasing."""

    values: list
    probs: list

    def __post_init__(self):
        if len(self.values) != len(self.probs):
            raise ValueError("one probability per value")
        if any(p < -1e-15 for p in self.probs):
            raise ValueError("negative probability")
        if abs(sum(self.probs) - 1) > 1e-12:
            raise ValueError(f"probabilities sum to {sum(self.probs)}")

    def prob(self, value, tol: float = 1e-9):
        for v, p in zip(self.values, self.probs):
            if abs(v - value) <= tol:
                return p
        return 0

    def mean(self):
        return sum(v * p for v, p in zip(self.values, self.probs))

    def to_csv(self) -> str:
        lines = ["value,probability"]
        lines += [f"{_fmt(v)},{_fmt(p)}" for v, p in zip(self.values, self.probs)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "LatticeLaw":
        rows = [r for r in text.strip().splitlines()[1:] if r]
        vals, probs = [], []
        for r in rows:
            v, p = r.split(",")
            vals.append(_parse(v))
            probs.append(_parse(p))
        return cls(vals, probs)


def _fmt(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def _parse(s):
    s = s.strip()
    if "/" in s:
        return Fraction(s)
    try:
        return int(s)
    except ValueError:
        return float(s)


@dataclass
class MomentTable:
    """Mixed moments ``m_r = E[prod_j W_j**r_j]`` for ``|r| <= D``."""

    d: int
    D: int
    values: dict = field(default_factory=dict)

    def __getitem__(self, r):
        return self.values[tuple(r)]

    def __contains__(self, r):
        return tuple(r) in self.values

    def max_abs_difference(self, other: "MomentTable", degree: int | None = None):
        deg = min(self.D, other.D) if degree is None else degree
        diffs = [abs(float(self.values[r]) - float(other.values[r])) for r in self.values if sum(r) <= deg and r in other.values]
        return max(diffs) if diffs else 0.0

    def argmax_difference(self, other: "MomentTable", degree: int | None = None):
        deg = min(self.D, other.D) if degree is None else degree
        best, arg = -1.0, None
        for r in sorted(self.values):
            if sum(r) <= deg and r in other.values:
                dlt = abs(float(self.values[r]) - float(other.values[r]))
                if dlt > best:
                    best, arg = dlt, r
        return arg, best

    def to_json(self):
        return {"d": self.d, "D": self.D,
                "moments": [{"r": list(r), "value": _fmt(v)} for r, v in sorted(self.values.items())]}


def compositions(n: int, k: int):
    """All ``k``-tuples of nonnegative integers summing to ``n`` (sorted)."""
    if k == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in compositions(n - first, k - 1):
            yield (first,) + rest


def _all_indices(k: int, D: int):
    out = []
    for n in range(D + 1):
        out.extend(compositions(n, k))
    return out


@lru_cache(maxsize=None)
def multinomial(r: tuple) -> int:
    n = sum(r)
    out = math.factorial(n)
    for v in r:
        out //= math.factorial(v)
    return out


def _cloud_of(theta):
    return theta.cloud if isinstance(theta, MixingMeasure) else theta


def mixed_moments(theta, D: int, chunk: int = 200_000) -> MomentTable:
    """All mixed moments of total degree ``<= D`` of the weight vector.

    Exact clouds give exact rationals. Float clouds use a Gram product: with
    ``Phi`` the matrix of all monomials of degree ``<= ceil(D/2)``,
    ``Phi^T diag(p) Phi`` holds every moment of degree ``<= D``.
    """
    if D > MAX_DEGREE:
        raise ValueError(f"degree {D} exceeds the cap {MAX_DEGREE}")
    if D < 0:
        raise ValueError("negative degree")
    cloud = _cloud_of(theta)
    d = cloud.d
    idx = _all_indices(d, D)
    if cloud.exact:
        vals = {}
        for r in idx:
            vals[r] = sum((p * math.prod(w**e for w, e in zip(pt, r)) for pt, p in zip(cloud.points, cloud.probs)),
                          Fraction(0))
        return MomentTable(d, D, vals)
    half = (D + 1) // 2
    basis = _all_indices(d, half)
    E = np.asarray(basis, dtype=np.int64)
    P, pr = cloud.points, cloud.probs
    G = np.zeros((len(basis), len(basis)))
    for s in range(0, len(pr), chunk):
        X = P[s : s + chunk]
        powers = X[:, :, None] ** np.arange(half + 1)[None, None, :]
        Phi = np.ones((X.shape[0], len(basis)))
        for j in range(d):
            Phi *= powers[:, j, E[:, j]]
        G += (Phi * pr[s : s + chunk, None]).T @ Phi
    pos = {tuple(e): i for i, e in enumerate(basis)}
    vals = {}
    for r in idx:
        # split r into two halves of degree <= half
        a = []
        budget = min(sum(r), half)
        for v in r:
            t = min(v, budget)
            a.append(t)
            budget -= t
        b = tuple(x - y for x, y in zip(r, a))
        vals[r] = float(G[pos[tuple(a)], pos[b]])
    vals[(0,) * d] = 1.0
    return MomentTable(d, D, vals)


def _merge_values(pairs, atoms_exact: bool, tol: float = MATCH_TOL):
    if atoms_exact:
        acc: dict = {}
        for v, p in pairs:
            acc[v] = acc.get(v, 0) + p
        keys = sorted(acc)
        return keys, [acc[k] for k in keys]
    pairs = sorted(pairs, key=lambda vp: vp[0])
    vals, probs = [], []
    for v, p in pairs:
        if vals and abs(v - vals[-1]) <= tol:
            probs[-1].append(p)
        else:
            vals.append(v)
            probs.append([p])
    return vals, [math.fsum(ps) for ps in probs]


def exact_partial_sum_law(theta: MixingMeasure, n: int, moments: MomentTable | None = None) -> LatticeLaw:
    """Law of ``S_n`` via the multinomial identity."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    A = theta.atoms
    k = len(A)
    if math.comb(n + k - 1, k - 1) > COMPOSITION_CAP:
        raise ValueError("composition count exceeds the cap")
    if moments is None or moments.D < n:
        moments = _moments_of_degree(theta, n)
    exact_atoms = all(isinstance(a, (int, Fraction)) for a in A)
    pairs = []
    for r in compositions(n, k):
        m = moments[r]
        val = sum(ri * a for ri, a in zip(r, A)) if exact_atoms else math.fsum(ri * float(a) for ri, a in zip(r, A))
        pairs.append((val, multinomial(r) * m))
    vals, probs = _merge_values(pairs, exact_atoms)
    if not theta.cloud.exact:
        probs = [float(p) for p in probs]
    return LatticeLaw(vals, probs)


def _moments_of_degree(theta, n):
    cloud = _cloud_of(theta)
    return mixed_moments(cloud, n) if n <= MAX_DEGREE else _direct_moments(cloud, n)


def _direct_moments(cloud: AtomCloud, n: int) -> MomentTable:
    vals = {}
    for r in compositions(n, cloud.d):
        if cloud.exact:
            vals[r] = sum((p * math.prod(w**e for w, e in zip(pt, r)) for pt, p in zip(cloud.points, cloud.probs)),
                          Fraction(0))
        else:
            vals[r] = float(cloud.probs @ np.prod(cloud.points ** np.asarray(r), axis=1))
    return MomentTable(cloud.d, n, vals)


def total_variation(law1: LatticeLaw, law2: LatticeLaw, tol: float = MATCH_TOL):
    """Total variation ``(1/2) sum |p1 - p2|`` on the merged support."""
    pairs = [(v, p, 0) for v, p in zip(law1.values, law1.probs)] + [(v, p, 1) for v, p in zip(law2.values, law2.probs)]
    pairs.sort(key=lambda t: t[0])
    groups = []
    for v, p, side in pairs:
        if groups and abs(v - groups[-1][0]) <= tol:
            groups[-1][1 + side] += p
        else:
            g = [v, 0, 0]
            g[1 + side] += p
            groups.append(g)
    exact = all(isinstance(g[1], (int, Fraction)) and isinstance(g[2], (int, Fraction)) for g in groups)
    if exact:
        return sum(abs(g[1] - g[2]) for g in groups) / 2
    return 0.5 * math.fsum(abs(float(g[1]) - float(g[2])) for g in groups)


def compare_partial_sum_laws(theta1: MixingMeasure, theta2: MixingMeasure, n_max: int,
                             moments1: MomentTable | None = None, moments2: MomentTable | None = None):
    """Total variation between the laws of ``S_n`` for ``n = 1..n_max``."""
    if tuple(theta1.atoms) != tuple(theta2.atoms):
        raise ValueError("mixing measures must share the atom list")
    m1 = moments1 if moments1 is not None and moments1.D >= n_max else mixed_moments(theta1, n_max)
    m2 = moments2 if moments2 is not None and moments2.D >= n_max else mixed_moments(theta2, n_max)
    return [total_variation(exact_partial_sum_law(theta1, n, m1), exact_partial_sum_law(theta2, n, m2))
            for n in range(1, n_max + 1)]


def laplace_transform_moments(theta: MixingMeasure, s, n):
    """``E[(sum_j W_j exp(-s a_j))**n]``; broadcasts over ``s`` and ``n``."""
    A = np.asarray([float(a) for a in theta.atoms])
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise ValueError("s must be nonnegative")
    if np.any(A < 0) and np.any(s_arr > 0):
        raise ValueError("negative atoms are outside the Laplace setting")
    cloud = theta.cloud.as_float()
    s_b, n_b = np.broadcast_arrays(s_arr, np.asarray(n))
    out = np.empty(s_b.shape)
    for idx in np.ndindex(s_b.shape):
        L = cloud.points @ np.exp(-s_b[idx] * A)
        out[idx] = float(cloud.probs @ L ** int(n_b[idx]))
    return out if out.ndim else float(out)


def curve_moments(theta: MixingMeasure, direction, n: int):
    """``E[(c . W)**n]`` for a fixed direction ``c`` (real or complex)."""
    cloud = theta.cloud.as_float() if isinstance(theta, MixingMeasure) else theta.as_float()
    proj = cloud.points @ np.asarray(direction)
    return complex(cloud.probs @ proj**n) if np.iscomplexobj(proj) else float(cloud.probs @ proj**n)


def recover_mixed_moments(laws: dict, atoms: Sequence, D: int, tol: float = 1e-9) -> MomentTable:
    """Invert the multinomial identity: ``m_r = P(S_n = r . A) / C(n; r)``.

    ``laws`` maps ``n`` to the law of ``S_n`` for ``n = 1..D``. Requires every
    value ``r . A`` with ``|r| = n`` to be distinct (``A`` linearly
    independent over the rationals guarantees this).
    """
    k = len(atoms)
    A = [float(a) for a in atoms]
    vals = {(0,) * k: 1.0}
    for n in range(1, D + 1):
        if n not in laws:
            raise ValueError(f"missing law of S_{n}")
        comps = list(compositions(n, k))
        targets = [math.fsum(ri * a for ri, a in zip(r, A)) for r in comps]
        order = np.argsort(targets)
        st = np.asarray(targets)[order]
        gaps = np.diff(st)
        if len(gaps) and gaps.min() <= tol:
            i = int(np.argmin(gaps))
            raise RepresentationCollision(
                f"S_{n}: compositions {comps[order[i]]} and {comps[order[i + 1]]} give the same value")
        law = laws[n]
        lv = np.asarray([float(v) for v in law.values])
        lp = [law.probs[i] for i in range(len(lv))]
        for r, t in zip(comps, targets):
            j = int(np.searchsorted(lv, t))
            p = 0.0
            for cand in (j - 1, j):
                if 0 <= cand < len(lv) and abs(lv[cand] - t) <= tol:
                    p = lp[cand]
            vals[r] = float(p) / multinomial(r)
    return MomentTable(k, D, vals)


def marginal_moment_law_moments(theta: MixingMeasure, k: int, n: int, normalized: bool = False):
    """``E[(mu_k)**n]`` with ``mu_k = sum_j W_j a_j**k`` the ``k``-th moment of the component.

    Computed as ``amax**(k n) * E[(sum_j W_j (a_j/amax)**k)**n]`` so large
    ``k`` cannot overflow; with ``normalized=True`` the scale factor is
    dropped. Results that do not fit a float are returned as ``mpmath.mpf``.
    """
    if k < 0 or n < 0:
        raise ValueError("k and n must be nonnegative")
    A = np.asarray([float(a) for a in theta.atoms])
    amax = float(np.abs(A).max()) or 1.0
    if k > 60 and amax > 8:
        raise OverflowError("k > 60 with atoms above 8 is outside the supported range")
    cloud = theta.cloud.as_float()
    mu = cloud.points @ (A / amax) ** k
    core = float(cloud.probs @ mu**n)
    if normalized:
        return core
    log_scale = k * n * math.log10(amax) if amax > 0 else 0.0
    if log_scale < 300:
        return core * amax ** (k * n)
    import mpmath

    return mpmath.mpf(core) * mpmath.mpf(amax) ** (k * n)


def marginal_chf_comparison(theta1: MixingMeasure, theta2: MixingMeasure, t_grid, degree: int = 8,
                            n_angles: int = 8):
    """Largest gap in ``E[(u Re phi(t) + v Im phi(t))**n]`` across the pair.

    ``phi(t) = sum_j W_j exp(i t a_j)`` is the random characteristic function;
    ``(u, v)`` ranges over ``n_angles`` unit vectors and ``n`` over
    ``1..degree``.
    """
    if tuple(theta1.atoms) != tuple(theta2.atoms):
        raise ValueError("mixing measures must share the atom list")
    A = np.asarray([float(a) for a in theta1.atoms])
    angles = np.pi * np.arange(n_angles) / n_angles
    U = np.stack([np.cos(angles), np.sin(angles)])
    worst = 0.0
    c1, c2 = theta1.cloud.as_float(), theta2.cloud.as_float()
    for t in np.atleast_1d(t_grid):
        e = np.exp(1j * t * A)
        vals = []
        for c in (c1, c2):
            phi = c.points @ e
            proj = np.stack([phi.real, phi.imag], axis=1) @ U
            vals.append(np.array([c.probs @ proj**n for n in range(1, degree + 1)]))
        worst = max(worst, float(np.abs(vals[0] - vals[1]).max()))
    return worst


def _convolve(law1: dict, law2: dict):
    out: dict = {}
    for a, p in law1.items():
        for b, q in law2.items():
            out[a + b] = out.get(a + b, 0) + p * q
    return out


def family_partial_sum_law(weights, family: Sequence[FiniteSupportMeasure], n: int,
                           moments: MomentTable | None = None) -> LatticeLaw:
    """Law of ``S_n`` when the directing measure is ``sum_j W_j family[j]``.

    ``weights`` is a cloud (or mixing measure) of vectors ``W``. Given the
    composition ``r`` of ``n`` the sum is a convolution of ``r_j`` copies of
    ``family[j]``, so

        P(S_n = x) = sum_r C(n; r) m_r (conv_j family[j]^{*r_j})(x).

    Family atoms must be exact (integers or rationals).
    """
    cloud = _cloud_of(weights)
    k = len(family)
    if cloud.d != k:
        raise ValueError("one family member per weight coordinate")
    if moments is None or moments.D < n:
        moments = _moments_of_degree(cloud, n)
    base = [dict(zip(f.atoms, f.weights)) for f in family]
    powers = [[{0: 1}] for _ in range(k)]
    for j in range(k):
        for _ in range(n):
            powers[j].append(_convolve(powers[j][-1], base[j]))
    acc: dict = {}
    for r in compositions(n, k):
        law = {0: 1}
        for j, rj in enumerate(r):
            if rj:
                law = _convolve(law, powers[j][rj])
        c = multinomial(r) * moments[r]
        for v, p in law.items():
            acc.setdefault(v, []).append(c * float(p) if not cloud.exact else c * p)
    keys = sorted(acc)
    probs = [math.fsum(acc[v]) if not cloud.exact else sum(acc[v]) for v in keys]
    return LatticeLaw(keys, probs)


def laplace_tv_factor(n: int, s_grid, lattice_step: int = 1, max_atom: int = 3, dps: int = 50) -> float:
    """Constant ``C`` with ``TV(S_n, S_n') <= C * max_s |E e^{-s S_n} - E e^{-s S_n'}|``.

    For laws on ``{0, step, ..., n * max_atom}`` the Laplace transform is a
    polynomial in ``z = e^{-s step}``; the coefficient differences are the
    least-squares solution of a Vandermonde system, hence bounded by
    ``(1/2) * sum |V^+|`` times the largest transform difference.
    """
    import mpmath

    with mpmath.workdps(dps):
        z = [mpmath.exp(-mpmath.mpf(float(s)) * lattice_step) for s in s_grid]
        deg = n * max_atom
        V = mpmath.matrix([[zi**k for k in range(deg + 1)] for zi in z])
        Vt = V.T
        pinv = mpmath.inverse(Vt * V) * Vt
        total = mpmath.fsum(abs(pinv[i, j]) for i in range(pinv.rows) for j in range(pinv.cols))
        return float(total / 2)


def sample_sequence(theta: MixingMeasure, n: int, seed: int):
    """Draw a weight vector from the mixing measure, then ``X_1..X_n`` iid from it.

    Returns ``(weights, X, S)`` with ``S`` the running partial sums.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    cloud = theta.cloud.as_float()
    i = rng.choice(cloud.n, p=cloud.probs)
    w = cloud.points[i]
    w = np.maximum(w, 0)
    w = w / w.sum()
    A = np.asarray(theta.atoms, dtype=float)
    X = A[rng.choice(len(A), size=n, p=w)]
    return w, X, np.cumsum(X)


def sample_partial_sums(theta: MixingMeasure, n: int, size: int, seed: int):
    """``size`` independent draws of ``S_n`` (vectorized via multinomial counts)."""
    rng = np.random.default_rng(seed)
    cloud = theta.cloud.as_float()
    idx = rng.choice(cloud.n, size=size, p=cloud.probs)
    W = np.maximum(cloud.points[idx], 0)
    W = W / W.sum(axis=1, keepdims=True)
    counts = rng.multinomial(n, W)
    return counts @ np.asarray(theta.atoms, dtype=float)


def empirical_law(samples) -> LatticeLaw:
    vals, counts = np.unique(np.asarray(samples), return_counts=True)
    return LatticeLaw(vals.tolist(), (counts / counts.sum()).tolist())
