"""Sparse multivariate polynomials, Veronese lifts and kernel computation.

Polynomials are stored as a mapping from exponent tuples to coefficients.
A polynomial is either *exact* (``fractions.Fraction`` coefficients) or
*float* (Python floats); the tag travels with the instance and arithmetic
between an exact and a float polynomial produces a float polynomial.

Monomials of a fixed degree are ordered lexicographically on the exponent
tuple with the **last** variable taking highest priority, i.e. the sort key
of an exponent tuple ``e`` is ``e[::-1]``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from numbers import Rational
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "MultiPoly",
    "MonomialBasis",
    "TermCapExceeded",
    "veronese_lift",
    "nullspace",
    "svd_kernel",
    "poly_compose_expand",
    "expand_monomials",
    "monomial_order_key",
]


class TermCapExceeded(RuntimeError):
    """An expansion produced more terms than the configured cap."""


def monomial_order_key(exps: Sequence[int]) -> tuple:
    """Sort key realising the 'last variable has highest priority' order."""
    return tuple(reversed(exps))


def _is_exact_scalar(c) -> bool:
    return isinstance(c, (Rational, Fraction)) and not isinstance(c, bool)


def _to_field(c, exact: bool):
    if exact:
        if isinstance(c, float):
            raise TypeError("float coefficient in an exact polynomial")
        return Fraction(c)
    return float(c)


@dataclass(frozen=True)
class MultiPoly:
    """Sparse polynomial in ``nvars`` variables.

    Parameters
    ----------
    nvars : int
        Number of variables (``x0 .. x{nvars-1}``).
    terms : mapping
        Exponent tuple -> coefficient. Zero coefficients are dropped.
    exact : bool
        Coefficient field tag; ``True`` for rationals, ``False`` for floats.
    """

    nvars: int
    terms: Mapping[tuple, object] = field(default_factory=dict)
    exact: bool = True

    def __post_init__(self):
        if self.nvars < 1:
            raise ValueError("nvars must be positive")
        clean = {}
        for e, c in dict(self.terms).items():
            e = tuple(int(k) for k in e)
            if len(e) != self.nvars or any(k < 0 for k in e):
                raise ValueError(f"bad exponent tuple {e} for {self.nvars} variables")
            c = _to_field(c, self.exact)
            if c != 0:
                clean[e] = clean.get(e, 0) + c
        clean = {e: c for e, c in clean.items() if c != 0}
        object.__setattr__(self, "terms", clean)

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, nvars, exact=True):
        return cls(nvars, {}, exact)

    @classmethod
    def constant(cls, nvars, c, exact=None):
        if exact is None:
            exact = _is_exact_scalar(c)
        return cls(nvars, {(0,) * nvars: c}, exact)

    @classmethod
    def variable(cls, i, nvars, exact=True):
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): 1}, exact)

    @classmethod
    def from_coefficients(cls, basis: "MonomialBasis", coeffs, exact=None):
        """Polynomial ``sum_j coeffs[j] * basis[j]``."""
        coeffs = list(coeffs)
        if len(coeffs) != len(basis):
            raise ValueError("coefficient vector does not match basis size")
        if exact is None:
            exact = all(_is_exact_scalar(c) for c in coeffs)
        return cls(basis.nvars, dict(zip(basis.monomials, coeffs)), exact)

    # -- structure ----------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e in self.terms}) <= 1

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), monomial_order_key(kv[0])))

    def as_float(self) -> "MultiPoly":
        return MultiPoly(self.nvars, {e: float(c) for e, c in self.terms.items()}, exact=False)

    # -- arithmetic ---------------------------------------------------
    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.nvars != self.nvars:
                raise ValueError("arity mismatch")
            return other
        return MultiPoly.constant(self.nvars, other, exact=self.exact and _is_exact_scalar(other))

    def _field(self, other: "MultiPoly") -> bool:
        return self.exact and other.exact

    def __add__(self, other):
        other = self._coerce(other)
        ex = self._field(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        if not ex:
            out = {e: float(c) for e, c in out.items()}
        return MultiPoly(self.nvars, out, ex)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.nvars, {e: -c for e, c in self.terms.items()}, self.exact)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        ex = self._field(other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        if not ex:
            out = {e: float(c) for e, c in out.items()}
        return MultiPoly(self.nvars, out, ex)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        result = MultiPoly.constant(self.nvars, 1, exact=self.exact)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    # -- evaluation ---------------------------------------------------
    def __call__(self, *x):
        if len(x) == 1 and isinstance(x[0], (list, tuple, np.ndarray)):
            x = tuple(x[0])
        if len(x) != self.nvars:
            raise ValueError(f"expected {self.nvars} arguments, got {len(x)}")
        total = 0
        for e, c in self.terms.items():
            term = c
            for xi, k in zip(x, e):
                if k:
                    term = term * xi**k
            total = total + term
        return total

    def evaluate(self, points) -> np.ndarray:
        """Vectorised float evaluation at the rows of ``points``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.nvars:
            raise ValueError("dimension mismatch")
        out = np.zeros(pts.shape[0])
        for e, c in self.terms.items():
            out += float(c) * np.prod(pts ** np.asarray(e), axis=1)
        return out

    def coefficient_vector(self, basis: "MonomialBasis"):
        idx = basis.index
        vec = [Fraction(0) if self.exact else 0.0] * len(basis)
        for e, c in self.terms.items():
            if e not in idx:
                raise ValueError(f"monomial {e} not in basis")
            vec[idx[e]] = c
        return vec

    # -- serialisation ------------------------------------------------
    def to_json(self) -> dict:
        terms = []
        for e, c in self.sorted_terms():
            q = Fraction(c)
            terms.append({"exps": list(e), "num": str(q.numerator), "den": str(q.denominator)})
        out = {"nvars": self.nvars, "terms": terms}
        if not self.exact:
            out["field"] = "float"
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "MultiPoly":
        exact = data.get("field", "exact") != "float"
        terms = {}
        for t in data["terms"]:
            q = Fraction(int(t["num"]), int(t.get("den", "1")))
            terms[tuple(t["exps"])] = q if exact else float(q)
        return cls(int(data["nvars"]), terms, exact)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(f"x{i}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k)
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)


class MonomialBasis:
    """All monomials of total degree ``degree`` in ``nvars`` variables."""

    def __init__(self, nvars: int, degree: int):
        if nvars < 1 or degree < 0:
            raise ValueError("need nvars >= 1 and degree >= 0")
        self.nvars = nvars
        self.degree = degree
        monos = []
        # stars-and-bars enumeration; sorted afterwards into the fixed order
        for bars in itertools.combinations(range(degree + nvars - 1), nvars - 1):
            prev = -1
            e = []
            for b in bars:
                e.append(b - prev - 1)
                prev = b
            e.append(degree + nvars - 2 - prev)
            monos.append(tuple(e))
        monos.sort(key=monomial_order_key)
        self.monomials: list[tuple] = monos
        self.index = {e: i for i, e in enumerate(monos)}

    @staticmethod
    def size(nvars: int, degree: int) -> int:
        return math.comb(nvars + degree - 1, degree)

    def __len__(self):
        return len(self.monomials)

    def __getitem__(self, i):
        return self.monomials[i]

    def __iter__(self):
        return iter(self.monomials)

    def exponent_array(self) -> np.ndarray:
        return np.asarray(self.monomials, dtype=np.int64).reshape(len(self), self.nvars)


def _all_exact(rows) -> bool:
    return all(_is_exact_scalar(v) for row in rows for v in row)


def veronese_lift(points, degree: int):
    """Evaluate every degree-``degree`` monomial at every point.

    Returns a float ``ndarray`` for float input and a list of lists of
    ``Fraction`` when every coordinate is an exact rational.
    """
    if degree < 1:
        raise ValueError("degree must be >= 1 (the constant row is degenerate)")
    rows = [list(p) for p in points]
    if not rows:
        raise ValueError("no points")
    d = len(rows[0])
    if any(len(r) != d for r in rows):
        raise ValueError("points of different dimension")
    basis = MonomialBasis(d, degree)
    if _all_exact(rows):
        out = []
        for r in rows:
            r = [Fraction(v) for v in r]
            powers = [[Fraction(1)] * (degree + 1) for _ in range(d)]
            for j in range(d):
                for k in range(1, degree + 1):
                    powers[j][k] = powers[j][k - 1] * r[j]
            out.append([reduce(lambda a, b: a * b, (powers[j][e[j]] for j in range(d))) for e in basis])
        return out
    pts = np.asarray(rows, dtype=object if _has_mp(rows) else float)
    if pts.dtype == object:
        return [[_prod(r[j] ** e[j] for j in range(d)) for e in basis] for r in rows]
    exps = basis.exponent_array()
    powers = pts[:, :, None] ** np.arange(degree + 1)[None, None, :]
    out = np.ones((pts.shape[0], len(basis)))
    for j in range(d):
        out *= powers[:, j, exps[:, j]]
    return out


def _has_mp(rows) -> bool:
    import mpmath

    return any(isinstance(v, mpmath.mpf) for row in rows for v in row)


def _prod(it):
    return reduce(lambda a, b: a * b, it, 1)


def _clear_denominators(vec):
    dens = [Fraction(v).denominator for v in vec]
    lcm = reduce(lambda a, b: a * b // math.gcd(a, b), dens, 1)
    ints = [int(Fraction(v) * lcm) for v in vec]
    g = reduce(math.gcd, (abs(i) for i in ints), 0) or 1
    ints = [i // g for i in ints]
    lead = next(i for i in ints if i != 0)
    if lead < 0:
        ints = [-i for i in ints]
    return ints


def _exact_kernel(rows) -> list[list[int]]:
    m = [[Fraction(v) for v in r] for r in rows]
    nrows, ncols = len(m), len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(nrows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -m[i][fc]
        basis.append(_clear_denominators(v))
    return basis


def svd_kernel(matrix, threshold: float = 1e-9, dps: int | None = None):
    """Numerical kernel by singular-value thresholding.

    Parameters
    ----------
    matrix : array_like
        Real matrix (rows = constraints).
    threshold : float
        Relative threshold; singular values ``<= threshold * s_max`` are
        treated as zero.
    dps : int, optional
        When given, the decomposition runs in ``mpmath`` with this many
        decimal digits instead of float64.

    Returns
    -------
    kernel : list of ndarray
        Orthonormal kernel vectors (float64).
    singular_values : ndarray
        All singular values, descending (float64; may underflow for ``dps``
        runs, see ``log10_singular_values`` in that case).
    """
    if threshold is None or threshold <= 0:
        raise ValueError("float mode needs a positive threshold")
    if dps is None:
        a = np.asarray(matrix, dtype=float)
        if a.size == 0:
            raise ValueError("empty matrix")
        _, s, vh = np.linalg.svd(a, full_matrices=True)
        smax = s[0] if s.size else 0.0
        rank = int(np.sum(s > threshold * smax)) if smax > 0 else 0
        kernel = [vh[i] for i in range(rank, a.shape[1])]
        return kernel, s
    import mpmath

    with mpmath.workdps(dps):
        a = mpmath.matrix(matrix)
        if a.rows == 0 or a.cols == 0:
            raise ValueError("empty matrix")
        # thin SVD of A^T A would square the conditioning; use the full one
        if a.rows < a.cols:
            a = mpmath.matrix(list(a.tolist()) + [[0] * a.cols] * (a.cols - a.rows))
        _, s, v = mpmath.svd_r(a, full_matrices=False, compute_uv=True)
        sv = [s[i] for i in range(len(s))]
        order = sorted(range(len(sv)), key=lambda i: -sv[i])
        smax = sv[order[0]]
        kernel = [
            np.array([float(v[i, j]) for j in range(a.cols)])
            for i in order
            if sv[i] <= threshold * smax
        ]
        svals = np.array([float(sv[i]) for i in order])
        return kernel, svals


def nullspace(matrix, mode: str = "exact", threshold: float = 1e-9, dps: int | None = None):
    """Kernel basis of ``matrix``.

    In ``"exact"`` mode the entries must be rationals and the true kernel is
    returned as integer vectors (denominators cleared, positive leading
    entry). In ``"float"`` mode singular-value thresholding is used.
    """
    rows = [list(r) for r in matrix] if not isinstance(matrix, np.ndarray) else matrix
    if len(rows) == 0 or len(rows[0]) == 0:
        raise ValueError("empty matrix")
    if mode == "exact":
        if isinstance(rows, np.ndarray) and rows.dtype.kind == "f":
            raise ValueError("exact mode needs rational entries")
        if not _all_exact(rows):
            raise ValueError("exact mode needs rational entries")
        return _exact_kernel(rows)
    if mode == "float":
        kernel, _ = svd_kernel(rows, threshold, dps)
        return kernel
    raise ValueError(f"unknown mode {mode!r}")


def expand_monomials(monomials: Iterable[tuple], args: Sequence[MultiPoly], term_cap: int | None = None):
    """Expand each monomial ``prod_j args[j]**e[j]`` into a polynomial."""
    if not args:
        raise ValueError("no arguments")
    k = args[0].nvars
    if any(a.nvars != k for a in args):
        raise ValueError("arguments have different arities")
    cache: dict = {}

    def power(j, p):
        key = (j, p)
        if key not in cache:
            if p == 0:
                cache[key] = MultiPoly.constant(k, 1, exact=args[j].exact)
            elif p == 1:
                cache[key] = args[j]
            else:
                cache[key] = power(j, p - 1) * args[j]
            if term_cap is not None and len(cache[key].terms) > term_cap:
                raise TermCapExceeded(f"power {p} of argument {j} has {len(cache[key].terms)} terms")
        return cache[key]

    out = []
    for e in monomials:
        if len(e) != len(args):
            raise ValueError("arity mismatch between monomial and arguments")
        acc = None
        for j, p in enumerate(e):
            if p:
                acc = power(j, p) if acc is None else acc * power(j, p)
                if term_cap is not None and len(acc.terms) > term_cap:
                    raise TermCapExceeded(f"expansion of {e} exceeds {term_cap} terms")
        out.append(acc if acc is not None else MultiPoly.constant(k, 1, exact=all(a.exact for a in args)))
    return out


def poly_compose_expand(r: MultiPoly, args: Sequence[MultiPoly], term_cap: int | None = None) -> MultiPoly:
    """Symbolic expansion of ``r(args[0], ..., args[N-1])``.

    ``r`` must be homogeneous; ``term_cap`` bounds the number of terms of any
    intermediate or final polynomial and raises :class:`TermCapExceeded`.
    """
    if len(args) != r.nvars:
        raise ValueError(f"r has {r.nvars} variables but {len(args)} arguments were given")
    if not r.is_homogeneous():
        raise ValueError("r must be homogeneous")
    k = args[0].nvars
    items = list(r.terms.items())
    expanded = expand_monomials([e for e, _ in items], args, term_cap)
    total = MultiPoly.zero(k, exact=r.exact and all(a.exact for a in args))
    for (_, c), p in zip(items, expanded):
        total = total + p * c
        if term_cap is not None and len(total.terms) > term_cap:
            raise TermCapExceeded(f"result exceeds {term_cap} terms")
    return total
