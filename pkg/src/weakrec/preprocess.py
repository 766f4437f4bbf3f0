"""Pre-processing functions T(y) and the induced law of Z = T(Y).

The discrete law (zlaw) is the bridge between channels and the random-matrix
prediction engine: atoms z_k = T(y_k) carry two weight systems, one from the
plain marginal m0 (for expectations of Z) and one from the second-moment
marginal m2 (for expectations weighted by |G|^2).
"""

from dataclasses import dataclass, replace
import math

import numpy as np

from .channels import GaussMarginals

__all__ = [
    "PreprocessSpec",
    "ZLaw",
    "t_star",
    "t_star_delta",
    "t_star_pr",
    "optimal",
    "optimal_delta",
    "optimal_pr",
    "trimming",
    "subset",
    "clamp",
    "positive_part",
    "rescale",
    "custom_table",
    "custom_table_from_csv",
    "zlaw",
]

CUSTOM_CLIP = 1e6


def t_star(marg: GaussMarginals, y):
    """T*(y) = 1 - m0(y)/m2(y); defined as 0 where m2 vanishes."""
    y = np.asarray(y, dtype=float)
    m0 = marg.m0_at(y)
    m2 = marg.m2_at(y)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(m2 > 0, 1.0 - m0 / np.where(m2 > 0, m2, 1.0), 0.0)
    return out


def t_star_delta(marg: GaussMarginals, delta: float, delta_u: float, y):
    """Threshold-matched variant sqrt(du) T* / (sqrt(d) - (sqrt(d)-sqrt(du)) T*)."""
    if delta <= delta_u:
        raise ValueError("below spectral threshold: need delta > delta_u")
    ts = t_star(marg, y)
    sd, su = math.sqrt(delta), math.sqrt(delta_u)
    return su * ts / (sd - (sd - su) * ts)


def t_star_pr(delta: float, y, field: str = "complex"):
    """Closed-form phase-retrieval preprocessing (y+ - 1)/(y+ + sqrt(c*delta) - 1).

    c = 1 for the complex field (requires delta > 1), c = 2 for the real field
    (requires delta > 1/2).
    """
    yp = np.maximum(np.asarray(y, dtype=float), 0.0)
    if field == "complex":
        if delta <= 1.0:
            raise ValueError("complex phase-retrieval preprocessing needs delta > 1")
        off = math.sqrt(delta) - 1.0
    elif field == "real":
        if delta <= 0.5:
            raise ValueError("real phase-retrieval preprocessing needs delta > 1/2")
        off = math.sqrt(2.0 * delta) - 1.0
    else:
        raise ValueError(f"unknown field {field!r}")
    return (yp - 1.0) / (yp + off)


@dataclass(frozen=True)
class PreprocessSpec:
    """A bounded scalar map T with metadata used to build the zlaw."""

    kind: str
    fn: callable
    params: dict
    analytic_sup: float | None = None
    # y-locations where T jumps or kinks; quadrature panels are split there
    breakpoints: tuple = ()

    def apply(self, y):
        return self.fn(np.asarray(y, dtype=float))

    def __call__(self, y):
        return self.apply(y)


def optimal(marg: GaussMarginals) -> PreprocessSpec:
    sup = 1.0 if marg.channel.kind == "phase-retrieval" else None
    return PreprocessSpec("optimal", lambda y: t_star(marg, y), {}, sup)


def optimal_delta(marg: GaussMarginals, delta: float, delta_u: float) -> PreprocessSpec:
    sup = 1.0 if marg.channel.kind == "phase-retrieval" else None
    return PreprocessSpec("optimal-delta",
                          lambda y: t_star_delta(marg, delta, delta_u, y),
                          {"delta": delta, "delta_u": delta_u}, sup)


def optimal_pr(delta: float, field: str = "complex") -> PreprocessSpec:
    return PreprocessSpec("optimal-pr", lambda y: t_star_pr(delta, y, field),
                          {"delta": delta, "field": field}, 1.0)


def trimming(t: float) -> PreprocessSpec:
    if t <= 0:
        raise ValueError("trimming threshold must be positive")
    return PreprocessSpec("trimming", lambda y: np.where(y <= t, y, 0.0),
                          {"t": t}, t, breakpoints=(t,))


def subset(t: float) -> PreprocessSpec:
    if t <= 0:
        raise ValueError("subset threshold must be positive")
    return PreprocessSpec("subset",
                          lambda y: (np.asarray(y, dtype=float) > t).astype(float),
                          {"t": t}, 1.0, breakpoints=(t,))


def _pr_level_crossing(params: dict, level: float) -> tuple:
    """y solving (y-1)/(y+off) = level for the closed-form preprocessing."""
    field = params.get("field", "complex")
    dt = params.get("delta")
    if dt is None:
        return ()
    off = math.sqrt(dt) - 1.0 if field == "complex" else math.sqrt(2 * dt) - 1.0
    if level >= 1.0 or (1.0 - level) == 0:
        return ()
    y0 = (1.0 + level * off) / (1.0 - level)
    return (y0,) if y0 > 0 else ()


def clamp(spec: PreprocessSpec, M: float) -> PreprocessSpec:
    if M <= 0:
        raise ValueError("clamp level must be positive")
    bps = spec.breakpoints
    if spec.kind.startswith("optimal-pr"):
        bps = bps + _pr_level_crossing(spec.params, -M)
    return PreprocessSpec(spec.kind + "-clamped",
                          lambda y: np.maximum(spec.apply(y), -M),
                          {**spec.params, "M": M}, spec.analytic_sup,
                          breakpoints=bps)


def positive_part(spec: PreprocessSpec) -> PreprocessSpec:
    bps = spec.breakpoints
    if spec.kind.startswith("optimal-pr"):
        bps = bps + _pr_level_crossing(spec.params, 0.0)
    return PreprocessSpec(spec.kind + "-positive",
                          lambda y: np.maximum(spec.apply(y), 0.0),
                          dict(spec.params), spec.analytic_sup, breakpoints=bps)


def rescale(spec: PreprocessSpec, alpha: float) -> PreprocessSpec:
    """T -> T/alpha (alpha > 0); leaves the spectral estimator invariant."""
    if alpha <= 0:
        raise ValueError("rescale factor must be positive")
    sup = None if spec.analytic_sup is None else spec.analytic_sup / alpha
    return PreprocessSpec(spec.kind, lambda y: spec.apply(y) / alpha,
                          {**spec.params, "rescaled_by": alpha}, sup)


def custom_table(y_vals: np.ndarray, t_vals: np.ndarray) -> PreprocessSpec:
    y_vals = np.asarray(y_vals, dtype=float)
    t_vals = np.clip(np.asarray(t_vals, dtype=float), -CUSTOM_CLIP, CUSTOM_CLIP)
    if y_vals.ndim != 1 or y_vals.shape != t_vals.shape or y_vals.size < 2:
        raise ValueError("custom T table needs matching 1-D (y, T) columns")
    order = np.argsort(y_vals)
    y_vals, t_vals = y_vals[order], t_vals[order]

    def fn(y):
        return np.interp(np.asarray(y, dtype=float), y_vals, t_vals)

    return PreprocessSpec("custom", fn, {"n_points": int(y_vals.size)}, None)


def custom_table_from_csv(path) -> PreprocessSpec:
    raw = np.loadtxt(path, delimiter=",", ndmin=2)
    if raw.shape[1] != 2:
        raise ValueError("custom T CSV needs columns (y, T(y))")
    return custom_table(raw[:, 0], raw[:, 1])


@dataclass(frozen=True)
class ZLaw:
    """Discrete law of Z = T(Y) on the marginal quadrature grid."""

    z: np.ndarray       # atom values T(y_k)
    p: np.ndarray       # weights under m0 (law of Y)
    q: np.ndarray       # weights under m2 (|G|^2-reweighted law)
    tau: float          # supremum of the support of Z

    def expect(self, f) -> float:
        """E{f(Z)}."""
        return float(np.sum(self.p * f(self.z)))

    def expect_g2(self, f) -> float:
        """E{f(Z) |G|^2}."""
        return float(np.sum(self.q * f(self.z)))

    @property
    def informationless(self) -> bool:
        """P(Z=0) = 1 up to discretization (the delta_u = inf degenerate case)."""
        return bool(np.all(np.abs(self.z) < 1e-12))

    def rescaled(self, alpha: float) -> "ZLaw":
        return replace(self, z=self.z / alpha, tau=self.tau / alpha)


def _refined_grid(marg: GaussMarginals, breakpoints) -> tuple[np.ndarray, ...]:
    """Split the marginal panels at T's discontinuities and re-evaluate there.

    Returns (y, w, m0, m2) with the affected panels replaced by sub-panels
    whose edges coincide with the breakpoints, restoring spectral accuracy
    of the quadrature for jumpy/kinked T.
    """
    edges = marg.edges
    npp = marg.n_per_panel
    inner = sorted(b for b in breakpoints if edges[0] < b < edges[-1]
                   and b not in edges)
    if not inner:
        return marg.y, marg.w, marg.m0, marg.m2
    per_panel: dict[int, list] = {}
    for b in inner:
        i = int(np.searchsorted(edges, b) - 1)
        per_panel.setdefault(i, []).append(b)
    keep = np.ones(marg.y.size, dtype=bool)
    new_y = []
    new_w = []
    xs, ws = np.polynomial.legendre.leggauss(npp)
    for i, bs in per_panel.items():
        keep[i * npp:(i + 1) * npp] = False
        sub = np.array([edges[i]] + sorted(bs) + [edges[i + 1]])
        for a, b in zip(sub[:-1], sub[1:]):
            new_y.append(0.5 * (b - a) * xs + 0.5 * (a + b))
            new_w.append(0.5 * (b - a) * ws)
    ya = np.concatenate([marg.y[keep]] + new_y)
    wa = np.concatenate([marg.w[keep]] + new_w)
    yr = np.concatenate(new_y)
    m0a = np.concatenate([marg.m0[keep], marg.m0_at(yr)])
    m2a = np.concatenate([marg.m2[keep], marg.m2_at(yr)])
    return ya, wa, m0a, m2a


def zlaw(spec: PreprocessSpec, marg: GaussMarginals, weight_tol: float = 1e-6) -> ZLaw:
    """Push the marginal grid through T; weights must each total 1."""
    if spec.breakpoints and marg.edges is not None:
        y, w, m0, m2 = _refined_grid(marg, spec.breakpoints)
    else:
        y, w, m0, m2 = marg.y, marg.w, marg.m0, marg.m2
    z = spec.apply(y)
    p = w * m0
    q = w * m2
    for name, wts in (("m0", p), ("m2", q)):
        err = abs(float(wts.sum()) - 1.0)
        if err > weight_tol:
            raise ValueError(f"zlaw weight normalization error {err:.2e} under {name}")
    tau = float(np.max(z))
    if spec.analytic_sup is not None:
        # grid maxima undershoot suprema for unbounded-support Y
        tau = max(tau, float(spec.analytic_sup))
    return ZLaw(z=z, p=p, q=q, tau=tau)
