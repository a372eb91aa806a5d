"""Determining-set analysis for parametric curves.

A point set in R^d fails to be determining exactly when some nonzero
homogeneous polynomial vanishes on it. This module samples the curves that
show up in the Laplace / moment / characteristic-function problems, looks
for such polynomials degree by degree, and issues exact certificates where
integer arithmetic allows one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .polycore import (
    MonomialBasis,
    MultiPoly,
    TermCapExceeded,
    _exact_kernel,
    expand_monomials,
    svd_kernel,
    veronese_lift,
)

__all__ = [
    "CurveSpec",
    "DeterminationReport",
    "InsufficientSamples",
    "sample_curve",
    "default_grid",
    "holdout_grid",
    "find_vanishing_polynomial",
    "coprime_certificate",
    "phi_dimension_count",
    "smallest_guaranteed_diagonal",
    "phi_kernel_search",
    "PhiSearchResult",
    "pq_polynomials",
]

FAMILIES = (
    "moment_curve",
    "laplace_atoms",
    "laplace_convolution",
    "laplace_scaled",
    "poisson_LT",
    "power_curve",
    "complex_PQ",
    "rational_LT",
)

LAPLACE_FAMILIES = ("laplace_atoms", "laplace_convolution", "laplace_scaled", "poisson_LT", "rational_LT")


class InsufficientSamples(ValueError):
    """Too few samples for a kernel-free verdict to mean anything."""


@dataclass(frozen=True)
class CurveSpec:
    """A named parametric curve.

    ``params`` by family:

    - ``moment_curve``: ``N``
    - ``laplace_atoms``: ``atoms`` (list of reals)
    - ``laplace_convolution`` / ``laplace_scaled``: ``base``, ``N`` where
      ``base`` is ``{"atoms": [...], "weights": [...]}``,
      ``{"poisson": lam}`` or ``{"rational": {"p": [...], "q": [...]}}``
      (ascending coefficient lists)
    - ``poisson_LT``: ``lam``, ``N``
    - ``power_curve``: ``a`` (list of positive integers)
    - ``complex_PQ``: ``N``; the parameter is a 4-tuple ``(s, t, x, y)``
    - ``rational_LT``: ``p``, ``q``, ``N``; the curve is
      ``s -> (L(js) - L(0))_{j=1..N}`` with ``L = p/q``
    """

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown curve family {self.family!r}")

    @property
    def dim(self) -> int:
        p = self.params
        if self.family == "laplace_atoms":
            return len(p["atoms"])
        if self.family == "power_curve":
            return len(p["a"])
        return int(p["N"])

    def to_json(self):
        return {"family": self.family, "params": self.params}

    @classmethod
    def from_json(cls, data):
        return cls(data["family"], dict(data.get("params", {})))

    # convenience constructors
    @classmethod
    def moment_curve(cls, N):
        return cls("moment_curve", {"N": N})

    @classmethod
    def laplace_atoms(cls, atoms):
        return cls("laplace_atoms", {"atoms": list(atoms)})

    @classmethod
    def poisson_LT(cls, lam, N):
        return cls("poisson_LT", {"lam": lam, "N": N})

    @classmethod
    def power_curve(cls, a):
        return cls("power_curve", {"a": list(a)})

    @classmethod
    def complex_PQ(cls, N):
        return cls("complex_PQ", {"N": N})

    @classmethod
    def rational_LT(cls, p, q, N):
        return cls("rational_LT", {"p": list(p), "q": list(q), "N": N})


def _polyval(coeffs, s):
    out = 0
    for c in reversed(coeffs):
        out = out * s + c
    return out


def _rational_value(p, q, s):
    den = _polyval(q, s)
    if den == 0:
        raise ValueError(f"q vanishes at s={s}")
    num = _polyval(p, s)
    if isinstance(s, Fraction) or isinstance(s, int):
        return Fraction(num) / Fraction(den)
    return num / den


def _base_laplace(base, lib):
    """Laplace transform of a base law as a callable of s."""
    if "poisson" in base:
        lam = base["poisson"]
        return lambda s: lib.exp(lam * (lib.exp(-s) - 1))
    if "rational" in base:
        p, q = base["rational"]["p"], base["rational"]["q"]
        return lambda s: _rational_value(p, q, s)
    atoms, weights = base["atoms"], base["weights"]
    return lambda s: sum(w * lib.exp(-s * a) for a, w in zip(atoms, weights))


class _NumpyLib:
    exp = staticmethod(np.exp)


class _MpLib:
    @staticmethod
    def exp(x):
        import mpmath

        return mpmath.exp(x)


def pq_polynomials(n: int):
    """Exact real and imaginary parts of ``(x + i y)**n`` in variables (x, y)."""
    re, im = {}, {}
    for k in range(n + 1):
        c = math.comb(n, k)
        e = (n - k, k)
        if k % 2 == 0:
            re[e] = c * (-1) ** (k // 2)
        else:
            im[e] = c * (-1) ** ((k - 1) // 2)
    return MultiPoly(2, re), MultiPoly(2, im)


def sample_curve(curve: CurveSpec, grid, dps: int | None = None):
    """Evaluate ``curve`` at every parameter in ``grid``.

    Returns a list of tuples. Coordinates are exact ``Fraction``/``int`` when
    the family and the parameters allow it (moment, power and rational
    curves at rational parameters), ``mpmath.mpf`` when ``dps`` is given and
    floats otherwise.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("empty parameter grid")
    fam, p = curve.family, curve.params
    if dps is not None:
        import mpmath

        ctx = mpmath.workdps(dps)
        ctx.__enter__()
        lib = _MpLib
        conv = mpmath.mpf
    else:
        ctx = None
        lib = _NumpyLib
        conv = float
    try:
        out = []
        for g in grid:
            if fam == "complex_PQ":
                s, t, x, y = g
                z = complex(x, y) if dps is None else mpmath.mpc(x, y)
                row, zn = [], 1
                for _ in range(int(p["N"])):
                    row.append(s * zn.real + t * zn.imag)
                    zn = zn * z
                out.append(tuple(conv(v) if dps is not None else float(v) for v in row))
                continue
            if fam == "power_curve":
                k = int(g)
                if k < 0 or k != g:
                    raise ValueError("power curve parameter must be a nonnegative integer")
                out.append(tuple(int(a) ** k for a in p["a"]))
                continue
            if fam == "moment_curve":
                s = g if isinstance(g, (int, Fraction)) else conv(g)
                out.append(tuple(s**j for j in range(int(p["N"]))))
                continue
            if g < 0:
                raise ValueError(f"parameter {g} outside the domain s >= 0")
            if fam == "rational_LT":
                s = g if isinstance(g, (int, Fraction)) else conv(g)
                L0 = _rational_value(p["p"], p["q"], 0 * s)
                out.append(tuple(_rational_value(p["p"], p["q"], j * s) - L0 for j in range(1, int(p["N"]) + 1)))
                continue
            s = conv(g)
            if fam == "laplace_atoms":
                out.append(tuple(lib.exp(-conv(a) * s) for a in p["atoms"]))
            elif fam == "poisson_LT":
                L = _base_laplace({"poisson": conv(p["lam"])}, lib)
                out.append(tuple(L(j * s) for j in range(int(p["N"]))))
            elif fam == "laplace_scaled":
                L = _base_laplace(p["base"], lib)
                out.append(tuple(L(j * s) for j in range(int(p["N"]))))
            elif fam == "laplace_convolution":
                L = _base_laplace(p["base"], lib)
                v = L(s)
                out.append(tuple(v**j for j in range(int(p["N"]))))
        if dps is None:
            out = [tuple(v if isinstance(v, (int, Fraction)) else float(v) for v in row) for row in out]
        return out
    finally:
        if ctx is not None:
            ctx.__exit__(None, None, None)


def default_grid(curve: CurveSpec, degree: int, n: int | None = None):
    """Default parameter grid for a curve at a tested degree."""
    fam = curve.family
    size = MonomialBasis.size(curve.dim, degree)
    if fam == "power_curve":
        return list(range(2 * size + 1))
    if fam == "moment_curve":
        n = n or 2 * size + 2
        return [Fraction(k - n // 2) for k in range(n)]
    if fam == "rational_LT":
        n = n or 2 * size + 2
        return [Fraction(k, 3) for k in range(n)]
    if fam == "complex_PQ":
        n = n or 2 * size + 10
        rng = np.random.default_rng(12345)
        return [tuple(v) for v in rng.uniform(-1.5, 1.5, size=(n, 4))]
    return list(np.linspace(0.0, 8.0, n or 400))


def holdout_grid(curve: CurveSpec, degree: int, n: int = 100):
    """Fresh parameters disjoint from :func:`default_grid`."""
    fam = curve.family
    if fam == "power_curve":
        start = 2 * MonomialBasis.size(curve.dim, degree) + 1
        return list(range(start, start + min(n, 40)))
    if fam == "moment_curve":
        return [Fraction(2 * k + 1, 7) for k in range(n)]
    if fam == "rational_LT":
        return [Fraction(3 * k + 1, 11) for k in range(n)]
    if fam == "complex_PQ":
        rng = np.random.default_rng(54321)
        return [tuple(v) for v in rng.uniform(-1.5, 1.5, size=(n, 4))]
    rng = np.random.default_rng(2024)
    return list(np.sort(rng.uniform(0.0, 8.0, n)))


@dataclass
class DeterminationReport:
    """Outcome of a vanishing-polynomial search."""

    verdict: str  # "witness-found" | "no-witness-up-to" | "exact-certificate"
    l_max: int
    mode: str
    sample_count: int
    witness: MultiPoly | None = None
    witnesses: list = field(default_factory=list)
    residuals: dict = field(default_factory=dict)
    curve: CurveSpec | None = None

    @property
    def degree(self):
        return None if self.witness is None else self.witness.degree

    def to_json(self):
        return {
            "verdict": self.verdict,
            "l_max": self.l_max,
            "mode": self.mode,
            "sample_count": self.sample_count,
            "curve": None if self.curve is None else self.curve.to_json(),
            "witness": None if self.witness is None else self.witness.to_json(),
            "witnesses": [w.to_json() for w in self.witnesses],
            "residuals": self.residuals,
        }

    @classmethod
    def from_json(cls, data):
        return cls(
            verdict=data["verdict"],
            l_max=data["l_max"],
            mode=data["mode"],
            sample_count=data["sample_count"],
            witness=None if data.get("witness") is None else MultiPoly.from_json(data["witness"]),
            witnesses=[MultiPoly.from_json(w) for w in data.get("witnesses", [])],
            residuals=data.get("residuals", {}),
            curve=None if data.get("curve") is None else CurveSpec.from_json(data["curve"]),
        )


def _witness_rank(poly: MultiPoly, basis: MonomialBasis):
    # sparsest first, then fewest non-squarefree monomials, then basis position
    non_sqfree = sum(1 for e in poly.terms if max(e) > 1)
    last = max(basis.index[e] for e in poly.terms)
    return (len(poly.terms), non_sqfree, last)


def _canonical_sign(vec, exact):
    last = max(i for i, v in enumerate(vec) if v != 0)
    if vec[last] < 0:
        vec = [-v for v in vec]
    if not exact:
        vec = [v / max(abs(x) for x in vec) for v in vec]
    return vec


def _echelon_kernel(kernel, snap: float = 1e-9):
    """Row-reduce an orthonormal kernel basis; sparse kernels come out sparse."""
    K = np.array(kernel, dtype=float)
    rows, cols = K.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        piv = r + int(np.argmax(np.abs(K[r:, c])))
        if abs(K[piv, c]) <= snap:
            continue
        K[[r, piv]] = K[[piv, r]]
        K[r] /= K[r, c]
        for i in range(rows):
            if i != r:
                K[i] -= K[i, c] * K[r]
        r += 1
    K[np.abs(K) <= snap * np.abs(K).max(axis=1, keepdims=True)] = 0.0
    return [v for v in K if np.any(v)]


def _normalise_rows(points):
    pts = np.asarray(points, dtype=float)
    scale = np.abs(pts).max(axis=1, keepdims=True)
    scale[scale == 0] = 1.0
    return pts / scale


def find_vanishing_polynomial(
    curve,
    l_max: int,
    mode: str = "float",
    threshold: float | None = 1e-9,
    dps: int | None = None,
    grid=None,
    holdout=None,
    margin: float = 0.25,
) -> DeterminationReport:
    """Search for the lowest-degree homogeneous polynomial vanishing on a curve.

    Parameters
    ----------
    curve : CurveSpec or sequence of points
        Either a curve (sampled on ``grid`` or the family default) or an
        explicit point list. For point lists a fifth of the points is held
        back for verification unless ``holdout`` is given.
    l_max : int
        Highest degree tested.
    mode : {"float", "exact"}
        Exact mode needs rational samples and returns true kernels.
    threshold : float
        Relative singular-value threshold (float mode).
    dps : int, optional
        Run the float-mode SVD in ``mpmath`` at this precision.
    margin : float
        Required oversampling over the basis size before a degree may be
        reported kernel-free.

    Returns
    -------
    DeterminationReport
    """
    if mode not in ("float", "exact"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "float" and (threshold is None or threshold <= 0):
        raise ValueError("float mode requires a positive threshold")
    if l_max < 1:
        raise ValueError("l_max must be >= 1")
    spec = curve if isinstance(curve, CurveSpec) else None
    explicit = None
    if spec is None:
        explicit = [tuple(p) for p in curve]
        if holdout is None:
            cut = max(1, len(explicit) // 5)
            explicit, holdout_pts = explicit[:-cut], explicit[-cut:]
        else:
            holdout_pts = [tuple(p) for p in holdout]
    residuals = {}
    sample_count = 0
    for l in range(1, l_max + 1):
        if spec is not None:
            g = grid if grid is not None else default_grid(spec, l)
            pts = sample_curve(spec, g, dps=dps if mode == "float" else None)
            hg = holdout if holdout is not None else holdout_grid(spec, l)
            hold = sample_curve(spec, hg, dps=dps if mode == "float" else None)
        else:
            pts, hold = explicit, holdout_pts
        d = len(pts[0])
        size = MonomialBasis.size(d, l)
        need = math.ceil(size * (1 + margin))
        sample_count = len(pts)
        if len(pts) < need:
            raise InsufficientSamples(f"degree {l} needs at least {need} samples, got {len(pts)}")
        basis = MonomialBasis(d, l)
        if mode == "exact":
            lift = veronese_lift(pts, l)
            if not all(isinstance(v, Fraction) for row in lift for v in row):
                raise ValueError("exact mode needs rational samples")
            kernel = _exact_kernel(lift)
            cands = [MultiPoly.from_coefficients(basis, [Fraction(v) for v in _canonical_sign(k, True)]) for k in kernel]
            hold_lift = veronese_lift(hold, l)
            good = []
            for c in cands:
                vec = c.coefficient_vector(basis)
                worst = max(abs(sum(a * b for a, b in zip(row, vec))) for row in hold_lift)
                if worst == 0:
                    good.append(c)
            residuals[str(l)] = {"basis_size": size, "kernel_dim": len(kernel), "holdout_max_abs": 0 if good else None}
        else:
            if dps is None:
                lift = veronese_lift(_normalise_rows(pts), l)
            else:
                import mpmath

                with mpmath.workdps(dps):
                    rows = [[v / max(abs(x) for x in r) for v in r] for r in pts]
                lift = veronese_lift(rows, l)
            kernel, svals = svd_kernel(lift, threshold, dps)
            smax = svals[0]
            smin = svals[-1] if len(svals) >= size else 0.0
            info = {
                "basis_size": size,
                "kernel_dim": len(kernel),
                "sigma_max": float(smax),
                "sigma_min": float(smin),
                "sigma_min_rel": float(smin / smax) if smax > 0 else 0.0,
                "threshold": threshold,
            }
            good = []
            if kernel:
                hold_lift = np.asarray(veronese_lift(_normalise_rows(hold), l), dtype=float)
                tol = max(100 * threshold, 1e-10)
                worst_seen = 0.0
                cands = list(kernel) + (_echelon_kernel(kernel) if len(kernel) > 1 else [])
                for k in cands:
                    k = np.asarray(_canonical_sign(list(k), False), dtype=float)
                    res = np.abs(hold_lift @ k) / np.maximum(np.linalg.norm(hold_lift, axis=1), 1e-300)
                    worst_seen = max(worst_seen, float(res.max()))
                    if res.max() <= tol:
                        good.append(MultiPoly.from_coefficients(basis, list(k), exact=False))
                info["holdout_max_rel"] = worst_seen
            residuals[str(l)] = info
        if good:
            good.sort(key=lambda p: _witness_rank(p, basis))
            return DeterminationReport(
                "witness-found", l_max, mode, sample_count, good[0], good, residuals, spec
            )
    verdict = "exact-certificate" if mode == "exact" else "no-witness-up-to"
    return DeterminationReport(verdict, l_max, mode, sample_count, None, [], residuals, spec)


def coprime_certificate(a: Sequence[int], l: int) -> DeterminationReport:
    """Exact check whether ``{(a_0^k, ..., a_{N-1}^k)}`` lies on a degree-``l`` form.

    Every degree-``l`` monomial evaluates along the power curve to ``C_j^k``
    with ``C_j`` the monomial evaluated at ``a``. Distinct ``C_j`` make the
    sample Vandermonde matrix nonsingular, so no degree-``l`` form (and hence
    no form of lower degree) vanishes; a repeated value ``C_i = C_j`` gives
    the witness ``M_i - M_j``.
    """
    a = [int(v) for v in a]
    if any(v <= 0 for v in a):
        raise ValueError("entries must be positive integers")
    if l < 1:
        raise ValueError("l must be >= 1")
    basis = MonomialBasis(len(a), l)
    C = [math.prod(ai**ei for ai, ei in zip(a, e)) for e in basis]
    pairwise_coprime = all(math.gcd(a[i], a[j]) == 1 for i in range(len(a)) for j in range(i + 1, len(a)))
    groups: dict = {}
    for e, c in zip(basis, C):
        groups.setdefault(c, []).append(e)
    witnesses = []
    for c, monos in groups.items():
        for other in monos[1:]:
            witnesses.append(MultiPoly(len(a), {other: 1, monos[0]: -1}))
    residuals = {
        "monomial_values": {",".join(map(str, e)): c for e, c in zip(basis, C)},
        "pairwise_coprime": pairwise_coprime,
        "distinct_values": len(groups),
        "basis_size": len(basis),
    }
    if witnesses:
        witnesses.sort(key=lambda p: _witness_rank(p, basis))
        return DeterminationReport("witness-found", l, "exact", len(basis), witnesses[0], witnesses, residuals,
                                   CurveSpec.power_curve(a))
    # Vandermonde rows k = 0..|M_l|-1 in exact integer arithmetic
    vander = [[Fraction(c) ** k for c in C] for k in range(len(C))]
    kernel = _exact_kernel(vander)
    residuals["vandermonde_rank"] = len(C) - len(kernel)
    residuals["full_column_rank"] = not kernel
    if kernel:  # cannot happen for distinct values
        raise AssertionError("Vandermonde matrix with distinct nodes is singular")
    return DeterminationReport("exact-certificate", l, "exact", len(C), None, [], residuals,
                               CurveSpec.power_curve(a))


@dataclass(frozen=True)
class PhiCount:
    N: int
    l: int
    dim_domain: int
    dim_codomain: int

    @property
    def kernel_guaranteed(self) -> bool:
        return self.dim_domain > self.dim_codomain


def phi_dimension_count(N: int, l: int) -> PhiCount:
    """Dimension count for the substitution map on degree-``l`` forms in ``N`` variables.

    The domain is the space of degree-``l`` forms in ``N`` variables; the
    codomain is the space of polynomials of degree ``<= l*N`` in four
    variables, of dimension ``C(l*N + 4, 4)``.
    """
    if N < 1 or l < 1:
        raise ValueError("N and l must be positive")
    return PhiCount(N, l, math.comb(N + l - 1, l), math.comb(l * N + 4, 4))


def smallest_guaranteed_diagonal(limit: int = 100) -> int:
    """Smallest ``N = l`` for which dimension counting alone forces a kernel."""
    for n in range(1, limit + 1):
        if phi_dimension_count(n, n).kernel_guaranteed:
            return n
    raise ValueError(f"no diagonal case up to {limit}")


@dataclass
class PhiSearchResult:
    found: bool
    N: int | None = None
    l: int | None = None
    witness: MultiPoly | None = None
    residual: float | None = None
    kernel_dim: int = 0
    cells: list = field(default_factory=list)

    def to_json(self):
        return {
            "found": self.found,
            "N": self.N,
            "l": self.l,
            "witness": None if self.witness is None else self.witness.to_json(),
            "residual": self.residual,
            "kernel_dim": self.kernel_dim,
            "cells": self.cells,
        }


def _pq_args(N: int):
    """Arguments s*P_n(x, y) + t*Q_n(x, y) as polynomials in (s, t, x, y)."""
    args = []
    for n in range(N):
        P, Q = pq_polynomials(n)
        terms = {}
        for (i, j), c in P.terms.items():
            terms[(1, 0, i, j)] = c
        for (i, j), c in Q.terms.items():
            terms[(0, 1, i, j)] = c
        args.append(MultiPoly(4, terms))
    return args


def phi_kernel_search(N_max: int, l_max: int, term_cap: int = 200_000, seed: int = 0,
                      n_verify: int = 200) -> PhiSearchResult:
    """Look for a form vanishing on ``(s P_n + t Q_n)_{n<N}`` for all ``s, t, x, y``.

    Cells ``(N, l)`` are visited by increasing ``N + l`` (ties by ``N``). For
    each cell the substitution map is assembled exactly on the monomial basis
    and its rational kernel computed. The first nonzero kernel element is
    verified at ``n_verify`` random parameter points. ``found=False`` only
    means the caps were exhausted.
    """
    if N_max < 1 or l_max < 1:
        raise ValueError("caps must be positive")
    cells = sorted(((N, l) for N in range(1, N_max + 1) for l in range(1, l_max + 1)), key=lambda c: (c[0] + c[1], c[0]))
    log = []
    for N, l in cells:
        basis = MonomialBasis(N, l)
        args = _pq_args(N)
        try:
            images = expand_monomials(basis.monomials, args, term_cap)
        except TermCapExceeded as exc:
            log.append({"N": N, "l": l, "status": "term-cap", "detail": str(exc)})
            continue
        rows = sorted({e for p in images for e in p.terms})
        rindex = {e: i for i, e in enumerate(rows)}
        mat = [[Fraction(0)] * len(basis) for _ in rows]
        for j, p in enumerate(images):
            for e, c in p.terms.items():
                mat[rindex[e]][j] = c
        kernel = _exact_kernel(mat)
        log.append({"N": N, "l": l, "status": "searched", "rows": len(rows), "cols": len(basis),
                    "kernel_dim": len(kernel)})
        if not kernel:
            continue
        cands = [MultiPoly.from_coefficients(basis, [Fraction(v) for v in _canonical_sign(k, True)]) for k in kernel]
        cands.sort(key=lambda p: _witness_rank(p, basis))
        witness = cands[0]
        rng = np.random.default_rng(seed)
        params = rng.uniform(-1.0, 1.0, size=(n_verify, 4))
        pts = np.asarray(sample_curve(CurveSpec.complex_PQ(N), [tuple(p) for p in params]))
        vals = witness.as_float().evaluate(pts)
        scale = np.zeros(len(pts))
        for e, c in witness.terms.items():
            scale += abs(float(c)) * np.abs(np.prod(pts ** np.asarray(e), axis=1))
        residual = float(np.max(np.abs(vals) / np.maximum(scale, 1e-300)))
        return PhiSearchResult(True, N, l, witness, residual, len(kernel), log)
    return PhiSearchResult(False, cells=log)
