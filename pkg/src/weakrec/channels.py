"""Measurement channels p(y|g), their derivatives, and Gaussian-averaged marginals.

Conventions: the scalar g is the projection of the signal on a sensing vector;
complex-field channels depend on g only through |g|, so the squared magnitude
s = |g|^2 is Exp(1)-distributed under G ~ CN(0,1) and chi^2_1-distributed
under G ~ N(0,1).
"""

from dataclasses import dataclass, field as dc_field
from functools import lru_cache
import math

import numpy as np
from scipy import optimize, special

from .quadrature import gauss_hermite, gauss_legendre_panels

__all__ = [
    "Channel",
    "GaussMarginals",
    "DegenerateChannelError",
    "phase_retrieval",
    "gap_example",
    "custom_table_from_csv",
    "density",
    "grad_density",
    "sample_y",
    "marginals",
    "gap_constants",
]

SQRT2PI = math.sqrt(2.0 * math.pi)


class DegenerateChannelError(ValueError):
    """Raised when a pointwise density is requested for a Dirac channel."""


@dataclass(frozen=True)
class Channel:
    """Conditional law p(y|g).

    kind: 'phase-retrieval', 'gap-example' or 'custom-table'.
    sigma2: additive noise variance (phase retrieval only).
    field: 'real' or 'complex'; complex channels see only |g|.
    """

    kind: str
    sigma2: float = 0.0
    field: str = "complex"
    # custom-table payload (rectangular grid, piecewise linear in y)
    table_g: np.ndarray | None = dc_field(default=None, repr=False)
    table_y: np.ndarray | None = dc_field(default=None, repr=False)
    table_p: np.ndarray | None = dc_field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("phase-retrieval", "gap-example", "custom-table"):
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if self.field not in ("real", "complex"):
            raise ValueError(f"unknown field {self.field!r}")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be >= 0")
        if self.kind == "gap-example" and self.field != "real":
            raise ValueError("gap-example channel is defined for the real field")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


def phase_retrieval(sigma2: float, field: str = "complex") -> Channel:
    return Channel(kind="phase-retrieval", sigma2=sigma2, field=field)


def gap_example() -> Channel:
    return Channel(kind="gap-example", field="real")


def custom_table_from_csv(path, field: str = "real") -> Channel:
    """Load a custom channel from CSV rows (g, y, p) on a rectangular grid.

    Each g-slice is renormalized to integrate to 1 over the y grid
    (trapezoid rule on the piecewise-linear density).
    """
    raw = np.loadtxt(path, delimiter=",", ndmin=2)
    if raw.shape[1] != 3:
        raise ValueError("custom channel CSV needs columns (g, y, p)")
    g_vals = np.unique(raw[:, 0])
    y_vals = np.unique(raw[:, 1])
    if raw.shape[0] != g_vals.size * y_vals.size:
        raise ValueError("custom channel CSV must be a rectangular (g, y) grid")
    p = np.full((g_vals.size, y_vals.size), np.nan)
    gi = np.searchsorted(g_vals, raw[:, 0])
    yi = np.searchsorted(y_vals, raw[:, 1])
    p[gi, yi] = raw[:, 2]
    if np.any(np.isnan(p)) or np.any(p < 0):
        raise ValueError("custom channel table has holes or negative entries")
    norms = np.trapezoid(p, y_vals, axis=1)
    if np.any(norms <= 0):
        raise ValueError("custom channel has a g-slice with zero mass")
    p = p / norms[:, None]
    return Channel(kind="custom-table", field=field,
                   table_g=g_vals, table_y=y_vals, table_p=p)


# ----------------------------------------------------------------------------
# gap-example constants: a1 < a2 with H(a1) = H(a2),
# H(a) = E{tanh^2(aG)(G^2 - 1)}.  H(0) = 0 and H(a) -> 0 as a -> inf, so the
# level H(argmax)/2 is crossed on both sides of the maximum.
# ----------------------------------------------------------------------------

@lru_cache(maxsize=1)
def gap_constants() -> tuple[float, float]:
    g, w = gauss_hermite(301)

    def H(a):
        return float(np.sum(w * np.tanh(a * g) ** 2 * (g * g - 1.0)))

    grid = np.linspace(1e-3, 10.0, 4000)
    vals = np.array([H(a) for a in grid])
    k = int(np.argmax(vals))
    level = vals[k] / 2.0
    a1 = optimize.brentq(lambda a: H(a) - level, grid[0], grid[k], xtol=1e-13)
    a2 = optimize.brentq(lambda a: H(a) - level, grid[k], grid[-1], xtol=1e-13)
    return a1, a2


def _gap_h(g):
    a1, a2 = gap_constants()
    return np.tanh(a2 * g) ** 2 - np.tanh(a1 * g) ** 2


# ----------------------------------------------------------------------------
# pointwise density and g-derivatives
# ----------------------------------------------------------------------------

def density(ch: Channel, y, g):
    """p(y|g); broadcasts over numpy inputs."""
    y = np.asarray(y, dtype=float)
    if ch.kind == "phase-retrieval":
        if ch.sigma2 == 0.0:
            raise DegenerateChannelError("degenerate channel: use closed-form marginals")
        s2 = np.abs(np.asarray(g)) ** 2
        return np.exp(-((y - s2) ** 2) / (2.0 * ch.sigma2)) / (ch.sigma * SQRT2PI)
    if ch.kind == "gap-example":
        h = _gap_h(np.real(np.asarray(g, dtype=float)))
        up = (y >= 1.0) & (y <= 2.0)
        lo = (y >= -2.0) & (y <= -1.0)
        return np.where(up, h, 0.0) + np.where(lo, 1.0 - h, 0.0)
    # custom-table: bilinear interpolation, zero outside the y grid,
    # g clamped to the tabulated range
    gq = np.clip(np.real(np.asarray(g, dtype=float)), ch.table_g[0], ch.table_g[-1])
    yq = np.asarray(y, dtype=float)
    inside = (yq >= ch.table_y[0]) & (yq <= ch.table_y[-1])
    yq_b, gq_b = np.broadcast_arrays(yq, gq)
    iy = np.clip(np.searchsorted(ch.table_y, yq_b) - 1, 0, ch.table_y.size - 2)
    ig = np.clip(np.searchsorted(ch.table_g, gq_b) - 1, 0, ch.table_g.size - 2)
    ty = (yq_b - ch.table_y[iy]) / (ch.table_y[iy + 1] - ch.table_y[iy])
    tg = (gq_b - ch.table_g[ig]) / (ch.table_g[ig + 1] - ch.table_g[ig])
    v00 = ch.table_p[ig, iy]
    v01 = ch.table_p[ig, iy + 1]
    v10 = ch.table_p[ig + 1, iy]
    v11 = ch.table_p[ig + 1, iy + 1]
    val = (1 - tg) * ((1 - ty) * v00 + ty * v01) + tg * ((1 - ty) * v10 + ty * v11)
    out = np.where(inside, val, 0.0)
    return out


def grad_density(ch: Channel, y, g, order: int = 1):
    """d/dg or d^2/dg^2 of p(y|g) at real g.

    Analytic for phase retrieval and the gap example; central differences
    (h = 1e-5 relative) for custom tables.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    y = np.asarray(y, dtype=float)
    g = np.asarray(g, dtype=float)
    if ch.kind == "phase-retrieval":
        p = density(ch, y, g)
        u = y - g * g
        s2 = ch.sigma2
        if order == 1:
            return p * (2.0 * g * u / s2)
        return p * ((2.0 * g * u / s2) ** 2 + (2.0 * u - 4.0 * g * g) / s2)
    if ch.kind == "gap-example":
        a1, a2 = gap_constants()

        def dh(gg):
            return (2 * a2 * np.tanh(a2 * gg) / np.cosh(a2 * gg) ** 2
                    - 2 * a1 * np.tanh(a1 * gg) / np.cosh(a1 * gg) ** 2)

        def d2h(gg):
            t2, t1 = np.tanh(a2 * gg), np.tanh(a1 * gg)
            return (2 * a2 ** 2 * (1 - t2 * t2) * (1 - 3 * t2 * t2)
                    - 2 * a1 ** 2 * (1 - t1 * t1) * (1 - 3 * t1 * t1))

        sgn = np.where((y >= 1.0) & (y <= 2.0), 1.0,
                       np.where((y >= -2.0) & (y <= -1.0), -1.0, 0.0))
        return sgn * (dh(g) if order == 1 else d2h(g))
    h = 1e-5 * (1.0 + np.abs(g))
    if order == 1:
        return (density(ch, y, g + h) - density(ch, y, g - h)) / (2 * h)
    return (density(ch, y, g + h) - 2 * density(ch, y, g) + density(ch, y, g - h)) / h ** 2


def sample_y(ch: Channel, g, rng: np.random.Generator):
    """Draw y ~ p(.|g) componentwise for an array of projections g."""
    g = np.asarray(g)
    if ch.kind == "phase-retrieval":
        s2 = np.abs(g) ** 2
        if ch.sigma2 == 0.0:
            return np.asarray(s2, dtype=float)
        return s2 + ch.sigma * rng.standard_normal(g.shape)
    if ch.kind == "gap-example":
        h = _gap_h(np.real(g).astype(float))
        upper = rng.random(g.shape) < h
        u = rng.random(g.shape)
        return np.where(upper, 1.0 + u, -2.0 + u)
    # custom-table: inverse CDF along the y grid of the interpolated slice
    gq = np.real(g).astype(float).ravel()
    out = np.empty(gq.shape)
    yg = ch.table_y
    for i, gv in enumerate(gq):
        p = density(ch, yg, gv)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(yg))])
        cdf /= cdf[-1]
        out[i] = np.interp(rng.random(), cdf, yg)
    return out.reshape(g.shape)


# ----------------------------------------------------------------------------
# Gaussian-averaged marginals
#   m0(y) = E_G p(y | |G|),   m2(y) = E_G p(y | |G|) |G|^2  (G^2 when real),
#   m1(y) = E_G d_g p(y|G)    (real field; identically 0 for even channels).
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussMarginals:
    channel: Channel
    field: str
    y: np.ndarray          # quadrature nodes covering the law of Y
    w: np.ndarray          # Lebesgue weights: sum(w * f(y)) ~ integral f dy
    m0: np.ndarray
    m2: np.ndarray
    m1: np.ndarray
    # panel layout, kept so downstream consumers can refine the grid around
    # preprocessing discontinuities; None for substituted grids
    edges: np.ndarray | None = None
    n_per_panel: int = 24

    def m0_at(self, y):
        return _marginal_eval(self.channel, self.field, np.asarray(y, dtype=float), 0)

    def m2_at(self, y):
        return _marginal_eval(self.channel, self.field, np.asarray(y, dtype=float), 2)

    def check_normalization(self, tol: float = 1e-6) -> None:
        e0 = abs(float(np.sum(self.w * self.m0)) - 1.0)
        e2 = abs(float(np.sum(self.w * self.m2)) - 1.0)
        if e0 > tol or e2 > tol:
            raise ValueError(
                f"marginal quadrature did not converge: |1-int m0|={e0:.3e}, "
                f"|1-int m2|={e2:.3e} (tol {tol:g})")


def _pr_complex_m0(y, s):
    # closed form: (1/2) exp(-y + s^2/2) erfc((-y/s + s)/sqrt(2))
    return 0.5 * np.exp(-y + s * s / 2.0) * special.erfc((-y / s + s) / math.sqrt(2.0))


def _pr_complex_m2m0(y, s):
    # closed form for E{p (|G|^2 - 1)}
    return ((s / SQRT2PI) * np.exp(-(y * y) / (2 * s * s))
            + 0.5 * (y - 1.0 - s * s) * np.exp(-y + s * s / 2.0)
            * special.erfc((-y / s + s) / math.sqrt(2.0)))


_GLX, _GLW = np.polynomial.legendre.leggauss(48)


def _pr_real_moments(y, s, k):
    """E{ G^(2k) p(y|G) } for real-field PR by windowed quadrature in u = |G|.

    The Gaussian factor confines u^2 to y +- 12s, so a 48-point rule on the
    window is accurate to ~1e-12; the chi^2 singularity at u=0 is absorbed by
    the u-substitution.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    lo2 = np.maximum(y - 12.0 * s, 0.0)
    hi2 = np.maximum(y + 12.0 * s, 0.0)
    lo = np.sqrt(lo2)
    hi = np.sqrt(hi2)
    mid = 0.5 * (hi + lo)
    half = 0.5 * (hi - lo)
    u = mid[:, None] + half[:, None] * _GLX[None, :]
    wq = half[:, None] * _GLW[None, :]
    dens = 2.0 * np.exp(-u * u / 2.0) / SQRT2PI
    gauss = np.exp(-((y[:, None] - u * u) ** 2) / (2 * s * s)) / (s * SQRT2PI)
    val = np.sum(wq * dens * u ** (2 * k) * gauss, axis=1)
    return val


def _marginal_eval(ch: Channel, field: str, y, moment: int):
    """m0 (moment=0) or m2 (moment=2) at arbitrary y."""
    y = np.asarray(y, dtype=float)
    if ch.kind == "phase-retrieval":
        s = ch.sigma
        if field == "complex":
            if ch.sigma2 == 0.0:
                base = np.where(y >= 0, np.exp(-np.maximum(y, 0.0)), 0.0)
                return base if moment == 0 else y * base
            return _pr_complex_m0(y, s) if moment == 0 else \
                _pr_complex_m0(y, s) + _pr_complex_m2m0(y, s)
        if ch.sigma2 == 0.0:
            with np.errstate(divide="ignore", invalid="ignore"):
                base = np.where(y > 0, np.exp(-np.maximum(y, 1e-300) / 2)
                                / np.sqrt(2 * np.pi * np.maximum(y, 1e-300)), 0.0)
            return base if moment == 0 else y * base
        return _pr_real_moments(y, s, 0 if moment == 0 else 1)
    if ch.kind == "gap-example":
        g, w = gauss_hermite(301)
        h = _gap_h(g)
        if moment == 0:
            cu, cl = float(np.sum(w * h)), float(np.sum(w * (1 - h)))
        else:
            cu = float(np.sum(w * h * g * g))
            cl = float(np.sum(w * (1 - h) * g * g))
        return (np.where((y >= 1) & (y <= 2), cu, 0.0)
                + np.where((y >= -2) & (y <= -1), cl, 0.0))
    # custom-table
    if field == "complex":
        # |G|^2 ~ Exp(1): Gauss-Laguerre over s = |g|^2
        s_nodes, s_w = np.polynomial.laguerre.laggauss(128)
        g, w, gsq = np.sqrt(s_nodes), s_w, s_nodes
    else:
        g, w = gauss_hermite(201)
        gsq = g * g
    acc = np.zeros_like(y, dtype=float)
    for gv, wv, g2 in zip(g, w, gsq):
        p = density(ch, y, gv)
        acc += wv * (p if moment == 0 else p * g2)
    return acc


def _marginal_grid(ch: Channel, field: str):
    """Panel edges (or a substituted grid) adapted to the law of Y."""
    if ch.kind == "gap-example":
        e1 = np.linspace(-2.0, -1.0, 9)
        e2 = np.linspace(1.0, 2.0, 9)
        y1, w1 = gauss_legendre_panels(e1, 16)
        y2, w2 = gauss_legendre_panels(e2, 16)
        return np.concatenate([y1, y2]), np.concatenate([w1, w2]), None, 16
    if ch.kind == "custom-table":
        y, w = gauss_legendre_panels(ch.table_y, 8)
        return y, w, np.asarray(ch.table_y, dtype=float), 8
    s = ch.sigma
    y_max = 85.0 if field == "complex" else 120.0
    if ch.sigma2 == 0.0:
        if field == "complex":
            edges = np.concatenate([[0.0], np.geomspace(1e-8, 1e-2, 50),
                                    np.linspace(1e-2, 3.0, 60)[1:],
                                    np.geomspace(3.0, y_max, 45)[1:]])
            y, w = gauss_legendre_panels(edges, 24)
            return y, w, edges, 24
        # real noiseless: substitute y = u^2 to tame the chi^2_1 edge
        u_edges = np.concatenate([[1e-9], np.geomspace(1e-4, 0.1, 30),
                                  np.linspace(0.1, 3.0, 60)[1:],
                                  np.geomspace(3.0, math.sqrt(y_max), 30)[1:]])
        u, wu = gauss_legendre_panels(u_edges, 24)
        return u * u, 2.0 * u * wu, u_edges ** 2, 24
    edges = np.unique(np.concatenate([
        np.linspace(-12.0 * s, 4.0 * s, 33),
        np.linspace(4.0 * s, max(3.0, 8.0 * s), 50)[1:],
        np.geomspace(max(3.0, 8.0 * s), y_max + 12.0 * s, 45)[1:],
    ]))
    y, w = gauss_legendre_panels(edges, 24)
    return y, w, edges, 24


def marginals(ch: Channel, field: str | None = None) -> GaussMarginals:
    """Build the Gaussian-averaged marginals on a channel-adapted grid."""
    field = field or ch.field
    y, w, edges, n_per = _marginal_grid(ch, field)
    m0 = _marginal_eval(ch, field, y, 0)
    m2 = _marginal_eval(ch, field, y, 2)
    if field == "real" and ch.kind in ("phase-retrieval", "gap-example"):
        m1 = np.zeros_like(y)  # odd integrand: E{d_g p(y|G)} vanishes exactly
    elif field == "real":
        g, gw = gauss_hermite(201)
        m1 = np.zeros_like(y)
        for gv, wv in zip(g, gw):
            m1 += wv * grad_density(ch, y, np.full_like(y, gv), 1)
    else:
        m1 = np.zeros_like(y)
    out = GaussMarginals(channel=ch, field=field, y=y, w=w, m0=m0, m2=m2, m1=m1,
                         edges=edges, n_per_panel=n_per)
    out.check_normalization()
    return out
