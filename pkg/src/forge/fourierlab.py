"""Fourier construction of two mutually singular laws with matching projections.

Given a nonzero homogeneous polynomial ``p`` on R^d, the function
``g = p**2 * f**K`` with ``f(z) = prod_j (sin z_j - z_j) / z_j**3`` is even,
real, integrable and of exponential type ``K`` in each coordinate. Its
Fourier transform ``h`` is therefore real and compactly supported in
``[-K, K]^d``. Writing ``h = h+ - h-`` gives two measures whose
characteristic functions differ by a multiple of ``g``, which vanishes on
``{p = 0}``; so the laws of ``x . X`` agree for every ``x`` on the variety.

Everything here is discretized on a uniform grid and the FFT stands in for
the continuous transform.
"""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field

import numpy as np

from .polycore import MultiPoly

__all__ = [
    "GridDensity",
    "CounterexamplePair",
    "ProjectionCheck",
    "GridTooCoarse",
    "MassMismatch",
    "DegeneratePolynomial",
    "eval_f",
    "f1",
    "choose_K",
    "build_counterexample",
    "verify_projection_equality",
    "default_control_directions",
    "grid_mixed_moments",
]

_MAGIC = b"FORGEGRD"


class GridTooCoarse(RuntimeError):
    pass


class MassMismatch(RuntimeError):
    pass


class DegeneratePolynomial(ValueError):
    pass


def f1(u):
    """``(sin u - u) / u**3`` elementwise, with a series near 0."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = np.abs(u) < 1e-2
    us = u[small]
    out[small] = -1.0 / 6 + us**2 / 120 - us**4 / 5040
    ub = u[~small]
    out[~small] = (np.sin(ub) - ub) / ub**3
    return out


def eval_f(x):
    """Evaluate ``f(x) = prod_j (sin x_j - x_j) / x_j**3``.

    ``x`` may be a single d-vector or an array of shape ``(..., d)``.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    vals = np.prod(f1(x), axis=-1)
    return float(vals) if np.ndim(vals) == 0 else vals


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Values of a function on the cube ``[-R, R)^d`` with ``m`` points per axis.

    The axis is ``-R + k * spacing`` for ``k = 0..m-1`` with
    ``spacing = 2R/m``. Dual-space densities use ``R = pi*m/(2*R_x)`` so the
    spacing is ``pi / R_x``.
    """

    d: int
    R: float
    m: int
    values: np.ndarray
    kind: str = "h"

    def __post_init__(self):
        if self.m < 2 or self.m & (self.m - 1):
            raise ValueError("m must be a power of two")
        if self.values.shape != (self.m,) * self.d:
            raise ValueError(f"values must have shape {(self.m,) * self.d}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite grid values")
        if self.kind in ("h+", "h-", "mu", "nu") and np.any(self.values < 0):
            raise ValueError("negative values in a positive part")

    @property
    def spacing(self) -> float:
        return 2 * self.R / self.m

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.d

    @property
    def axis(self) -> np.ndarray:
        return -self.R + self.spacing * np.arange(self.m)

    def total_mass(self) -> float:
        return float(self.values.sum() * self.cell_volume)

    def points(self, mask=None) -> np.ndarray:
        """Cell coordinates (optionally only where ``mask`` holds), shape (n, d)."""
        if mask is None:
            mask = np.ones(self.values.shape, dtype=bool)
        idx = np.nonzero(mask)
        ax = self.axis
        return np.stack([ax[i] for i in idx], axis=-1)

    # export -------------------------------------------------------------
    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        buf.write(_MAGIC)
        buf.write(struct.pack("<IdI", self.d, float(self.R), self.m))
        kind = self.kind.encode()
        buf.write(struct.pack("<I", len(kind)))
        buf.write(kind)
        buf.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes(order="C"))
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, raw: bytes) -> "GridDensity":
        if raw[:8] != _MAGIC:
            raise ValueError("not a grid file")
        d, R, m = struct.unpack_from("<IdI", raw, 8)
        off = 8 + struct.calcsize("<IdI")
        (klen,) = struct.unpack_from("<I", raw, off)
        off += 4
        kind = raw[off : off + klen].decode()
        off += klen
        vals = np.frombuffer(raw, dtype="<f8", offset=off).reshape((m,) * d).astype(float)
        return cls(d, R, m, vals, kind)

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())

    def to_csv(self) -> str:
        if self.d > 2:
            raise ValueError("CSV export is limited to d <= 2")
        ax = self.axis
        lines = [",".join([f"x{j}" for j in range(self.d)] + ["value"])]
        if self.d == 1:
            lines += [f"{x!r},{v!r}" for x, v in zip(ax, self.values)]
        else:
            for i, x in enumerate(ax):
                for j, y in enumerate(ax):
                    lines.append(f"{x!r},{y!r},{self.values[i, j]!r}")
        return "\n".join(lines) + "\n"


@dataclass
class CounterexamplePair:
    """Two probability densities with equal projections along ``{p = 0}``."""

    mu: GridDensity
    nu: GridDensity
    p: MultiPoly
    K: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def d(self):
        return self.mu.d


def _grid_axes(d, R, m):
    ax = -R + (2 * R / m) * np.arange(m)
    return [ax.reshape([m if k == j else 1 for k in range(d)]) for j in range(d)]


def _eval_on_grid(p: MultiPoly, d, R, m):
    axes = _grid_axes(d, R, m)
    out = np.zeros((m,) * d)
    for e, c in p.terms.items():
        term = np.full((1,) * d, float(c))
        for j, k in enumerate(e):
            if k:
                term = term * axes[j] ** k
        out = out + term
    return out


def _f_product(d, R, m, K):
    ax = -R + (2 * R / m) * np.arange(m)
    F = f1(ax) ** K
    out = np.ones((1,) * d)
    for j in range(d):
        out = out * F.reshape([m if k == j else 1 for k in range(d)])
    return out


def _boundary_max(arr):
    d = arr.ndim
    best = 0.0
    for j in range(d):
        for idx in (0, -1):
            sl = [slice(None)] * d
            sl[j] = idx
            best = max(best, float(np.abs(arr[tuple(sl)]).max()))
    return best


def _check_poly(p: MultiPoly, d: int):
    if p.nvars != d:
        raise ValueError("polynomial arity does not match d")
    if p.is_zero():
        raise DegeneratePolynomial("p must be nonzero")
    if p.degree < 1:
        raise DegeneratePolynomial("p must have positive degree")
    if not p.is_homogeneous():
        raise ValueError("p must be homogeneous")


def choose_K(p: MultiPoly, d: int, R: float = 30.0, m: int = 128, K_max: int = 64, decay: float = 1e-8) -> int:
    """Smallest ``K >= deg p + d + 2`` whose ``g`` has decayed at the grid edge.

    The check is ``max |g|`` over the boundary shell ``< decay * max |g|``.
    """
    _check_poly(p, d)
    P2 = _eval_on_grid(p, d, R, m) ** 2
    logF = np.log(np.abs(_f_product(d, R, m, 1)))
    for K in range(p.degree + d + 2, K_max + 1):
        # |g| = p^2 |f|^K, computed relative to its maximum in log space
        with np.errstate(divide="ignore"):
            lg = np.log(P2) + K * logF
        top = lg.max()
        shell = _boundary_max(np.exp(lg - top))
        if shell < decay:
            return K
    raise GridTooCoarse(f"no K <= {K_max} gives boundary decay below {decay}; increase R")


def build_counterexample(
    p: MultiPoly,
    R: float = 30.0,
    m: int = 128,
    K: int | None = None,
    trunc: float = 1e-15,
    support_mask: bool = False,
    imag_tol: float = 1e-9,
    mass_tol: float = 1e-6,
    min_mass: float = 1e-12,
) -> CounterexamplePair:
    """Discretize the Fourier construction for ``p``.

    ``g`` is scaled to unit maximum before transforming (the constant is
    absorbed by the final renormalization). ``h`` values below
    ``trunc * max|h|`` are zeroed. With ``support_mask`` every cell outside
    the exact support box ``|xi_j| <= K`` is zeroed as well; this is off by
    default because the discrete transform of the sampled ``g`` is itself an
    exact signed pair, and clipping its leakage breaks that exactness.
    """
    d = p.nvars
    _check_poly(p, d)
    if d > 4:
        raise ValueError("d <= 4 only (grid memory)")
    if K is None:
        K = choose_K(p, d, R, m)
    dx = 2 * R / m
    g = _eval_on_grid(p, d, R, m) ** 2 * _f_product(d, R, m, K)
    gscale = float(np.abs(g).max())
    if gscale == 0:
        raise DegeneratePolynomial("g vanishes on the grid")
    g /= gscale
    boundary = _boundary_max(g)
    G = np.fft.fftn(np.fft.ifftshift(g)) * dx**d
    del g
    imag_rel = float(np.abs(G.imag).max() / np.abs(G).max())
    if imag_rel > imag_tol:
        raise GridTooCoarse(f"imaginary residue {imag_rel:.3g} exceeds {imag_tol:g}")
    h = np.fft.fftshift(G.real)
    del G
    Rd = np.pi * m / (2 * R)
    dxi = np.pi / R
    hmax = float(np.abs(h).max())
    if trunc:
        h[np.abs(h) < trunc * hmax] = 0.0
    outside = 0
    if support_mask:
        xi = -Rd + dxi * np.arange(m)
        out1 = np.abs(xi) > K + 1e-9
        mask = np.zeros(h.shape, dtype=bool)
        for j in range(d):
            mask |= out1.reshape([m if k == j else 1 for k in range(d)])
        outside = int(np.count_nonzero(h[mask]))
        h[mask] = 0.0
    hp = np.maximum(h, 0.0)
    hm = np.maximum(-h, 0.0)
    del h
    vol = dxi**d
    Mp, Mm = float(hp.sum() * vol), float(hm.sum() * vol)
    if min(Mp, Mm) < min_mass:
        raise DegeneratePolynomial(f"positive or negative part has mass below {min_mass:g}")
    rel = abs(Mp - Mm) / Mp
    if rel > mass_tol:
        raise MassMismatch(f"masses differ by {rel:.3g} relative")
    hp /= Mp
    hm /= Mm
    mu = GridDensity(d, Rd, m, hp, "mu")
    nu = GridDensity(d, Rd, m, hm, "nu")
    diag = {
        "K": K,
        "R": R,
        "m": m,
        "g_scale": gscale,
        "boundary_ratio": boundary,
        "imag_rel": imag_rel,
        "mass_pos": Mp,
        "mass_neg": Mm,
        "mass_rel_diff": rel,
        "trunc": trunc,
        "masked_outside_support": outside,
        "n_pos": int(np.count_nonzero(hp)),
        "n_neg": int(np.count_nonzero(hm)),
        "l1_distance": float(np.abs(hp - hm).sum() * vol),
    }
    return CounterexamplePair(mu, nu, p, K, diag)


@dataclass
class ProjectionCheck:
    on_variety: float
    control: float
    per_direction: list
    per_control: list
    t_grid: list

    @property
    def separation(self):
        return self.control / self.on_variety if self.on_variety > 0 else float("inf")


def _chf_difference(diff: np.ndarray, xi: np.ndarray, vol: float, x, ts):
    # sum over the grid of diff * exp(i t x.xi), separably one axis at a time
    A = [np.exp(1j * np.outer(xi, ts * xj)) for xj in x]
    B = np.tensordot(diff, A[0], axes=([0], [0]))
    for a in A[1:]:
        B = np.einsum("j...t,jt->...t", B, a)
    return B * vol


def default_control_directions(p: MultiPoly, n: int = 3, min_value: float = 0.1):
    """Unit directions where ``|p|`` is large: coordinate axes and simple sums."""
    d = p.nvars
    cands = [np.eye(d)[j] for j in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            for s in (1, -1):
                v = np.zeros(d)
                v[i], v[j] = 1, s
                cands.append(v)
    out = []
    for v in cands:
        v = v / np.linalg.norm(v)
        if abs(p.as_float()(*v)) >= min_value:
            out.append(v)
        if len(out) == n:
            break
    return out


def verify_projection_equality(pair: CounterexamplePair, directions, t_grid=None, controls=None,
                               p_tol: float = 1e-12) -> ProjectionCheck:
    """Largest gap between the characteristic functions of ``x.mu`` and ``x.nu``.

    Each direction is normalized to unit length; the residual is
    ``max_t |phi_mu(t x) - phi_nu(t x)|`` over ``t_grid``. Directions must
    lie on the variety up to ``p_tol * |x|**deg p``.
    """
    if t_grid is None:
        t_grid = np.linspace(-5, 5, 41)
    ts = np.asarray(t_grid, dtype=float)
    p = pair.p.as_float()
    deg = pair.p.degree
    diff = pair.mu.values - pair.nu.values
    xi = pair.mu.axis
    vol = pair.mu.cell_volume

    def resid(x):
        return float(np.abs(_chf_difference(diff, xi, vol, x, ts)).max())

    on = []
    for x in directions:
        x = np.asarray(x, dtype=float)
        nrm = np.linalg.norm(x)
        if abs(p(*x)) > p_tol * nrm**deg:
            raise ValueError(f"direction {x.tolist()} is not on the variety")
        on.append(resid(x / nrm))
    if controls is None:
        controls = default_control_directions(pair.p)
    ctl = [resid(np.asarray(c, float) / np.linalg.norm(c)) for c in controls]
    return ProjectionCheck(max(on) if on else 0.0, max(ctl) if ctl else 0.0, on, ctl, ts.tolist())


def grid_mixed_moments(density: GridDensity, indices):
    """Riemann-sum moments ``sum x**r * value * cell_volume`` for each multi-index."""
    out = []
    ax = density.axis
    for r in indices:
        r = tuple(int(v) for v in r)
        if len(r) != density.d:
            raise ValueError("multi-index length does not match dimension")
        if sum(r) > 16:
            raise ValueError("total degree above 16 is not supported")
        B = density.values
        for k in r:
            B = np.tensordot(B, ax**k, axes=([0], [0]))
        out.append(float(B) * density.cell_volume)
    return out
