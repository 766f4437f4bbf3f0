"""Generalized AMP for real-valued sensing, its state evolution, and the
linearized stability analysis around the uninformative fixed point.

All Gaussian smoothings reduce to the moments

    N_k(c, v; y) = E_W { d_g^k p(y | c + sqrt(v) W) },   W ~ N(0,1),

evaluated by 96-node Gauss-Hermite quadrature; the denoiser is
F(x, y; qb) = N_1(qb x, qb; y) / N_0(qb x, qb; y).
"""

from dataclasses import dataclass

import numpy as np

from .channels import Channel, GaussMarginals, density, grad_density
from .quadrature import gauss_hermite, gauss_legendre_panels

__all__ = [
    "SEState",
    "AmpTrajectory",
    "LinearizedModel",
    "F_fun",
    "G_fun",
    "h_fun",
    "onsager_coefficient",
    "state_evolution",
    "state_evolution_general",
    "calibrated_init",
    "amp_run",
    "linearized_model",
]

SIGMA2_FLOOR = 1e-3
DEN_FLOOR = 1e-300
DEN_CUT = 1e-16     # drop y-regions whose smoothed density underflows
_GH = gauss_hermite(96)
_EIG_SIZE_CAP = 8192
SQRT2PI = np.sqrt(2.0 * np.pi)


def _check_amp_channel(ch: Channel):
    if ch.field != "real":
        raise ValueError("AMP is implemented for the real field only")
    if ch.kind == "phase-retrieval" and ch.sigma2 < SIGMA2_FLOOR:
        raise ValueError(f"AMP needs sigma2 >= {SIGMA2_FLOOR} "
                         "(two-times-differentiable bounded density)")


def _amp_ygrid(ch: Channel) -> tuple[np.ndarray, np.ndarray]:
    if ch.kind == "gap-example":
        y1, w1 = gauss_legendre_panels(np.linspace(-2, -1, 9), 12)
        y2, w2 = gauss_legendre_panels(np.linspace(1, 2, 9), 12)
        return np.concatenate([y1, y2]), np.concatenate([w1, w2])
    if ch.kind == "custom-table":
        return gauss_legendre_panels(ch.table_y, 8)
    s = ch.sigma
    edges = np.unique(np.concatenate([
        np.linspace(-12 * s, 4 * s, 17),
        np.linspace(4 * s, max(3.0, 8 * s), 31)[1:],
        np.geomspace(max(3.0, 8 * s), 220.0 + 12 * s, 41)[1:],
    ]))
    return gauss_legendre_panels(edges, 16)


_GLTN, _GLTW = np.polynomial.legendre.leggauss(48)


def _pr_t_nodes(ch: Channel, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-y nodes for integrals of f(t) p(y|t) dt under the PR channel.

    The Gaussian noise confines t^2 to y +- 9 sigma, i.e. t to two mirrored
    windows around +-sqrt(y); Gauss-Hermite over t misses these narrow peaks
    at moderate y, so each y gets its own 2 x 48 Gauss-Legendre nodes.  The
    windows are exact mirrors, preserving odd-integrand cancellations.
    """
    s = ch.sigma
    lo2 = np.maximum(y - 9.0 * s, 0.0)
    hi2 = np.maximum(y + 9.0 * s, 0.0)
    a = np.sqrt(lo2)
    b = np.sqrt(hi2)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    tpos = mid[:, None] + half[:, None] * _GLTN[None, :]
    wpos = half[:, None] * _GLTW[None, :] * np.ones_like(tpos)
    nodes = np.concatenate([tpos, -tpos], axis=1)
    weights = np.concatenate([wpos, wpos], axis=1)
    return nodes, weights


def _moment_kernels(ch: Channel, y: np.ndarray, orders) \
        -> tuple[np.ndarray, np.ndarray, dict[int, np.ndarray]]:
    """t-nodes, weights and weighted d^k p(y|t) tables per y (ny, nt)."""
    if ch.kind == "phase-retrieval":
        T, WT = _pr_t_nodes(ch, y)
    else:
        g, w = _GH
        T = np.broadcast_to(g[None, :], (y.size, g.size))
        # GH weights absorb the Gaussian factor; divide it back out so the
        # shared formula with an explicit N(t; c, v) kernel applies
        WT = w[None, :] / (np.exp(-g * g / 2.0) / SQRT2PI)[None, :] \
            * np.ones((y.size, g.size))
    tables = {}
    for k in orders:
        vals = density(ch, y[:, None], T) if k == 0 \
            else grad_density(ch, y[:, None], T, k)
        tables[k] = WT * vals
    return T, WT, tables


def smoothed_moments(ch: Channel, c: np.ndarray, v: float, y: np.ndarray,
                     orders=(0, 1)) -> dict[int, np.ndarray]:
    """N_k(c, v; y) = E_W{ d_g^k p(y | c + sqrt(v) W) } on the (c, y) grid."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    out = {k: np.zeros((c.size, y.size)) for k in orders}
    if v < 1e-14:
        cb = np.broadcast_to(c[:, None], (c.size, y.size))
        for k in orders:
            out[k] = density(ch, y[None, :], cb) if k == 0 \
                else grad_density(ch, y[None, :], cb, k)
        return out
    T, _, tables = _moment_kernels(ch, y, orders)
    nt = T.shape[1]
    chunk = max(1, int(4e6 // (c.size * nt)))
    for j0 in range(0, y.size, chunk):
        Tj = T[j0:j0 + chunk]
        gw = np.exp(-((Tj[None, :, :] - c[:, None, None]) ** 2) / (2.0 * v)) \
            / (np.sqrt(v) * SQRT2PI)
        for k in orders:
            out[k][:, j0:j0 + chunk] = np.einsum(
                "ijt,jt->ij", gw, tables[k][j0:j0 + chunk])
    return out


def paired_moments(ch: Channel, c: np.ndarray, v: float, y: np.ndarray,
                   orders=(0, 1)) -> dict[int, np.ndarray]:
    """N_k(c_i, v; y_i) for matched pairs (c_i, y_i); shapes (n,)."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    out = {k: np.zeros(c.size) for k in orders}
    if v < 1e-14:
        for k in orders:
            out[k] = density(ch, y, c) if k == 0 else grad_density(ch, y, c, k)
        return out
    chunk = max(1, int(4e6 // 64))
    for j0 in range(0, y.size, chunk):
        yj = y[j0:j0 + chunk]
        cj = c[j0:j0 + chunk]
        T, _, tables = _moment_kernels(ch, yj, orders)
        gw = np.exp(-((T - cj[:, None]) ** 2) / (2.0 * v)) / (np.sqrt(v) * SQRT2PI)
        for k in orders:
            out[k][j0:j0 + chunk] = np.einsum("jt,jt->j", gw, tables[k])
    return out


def F_fun(ch: Channel, x, y, qbar: float):
    """F(x, y; qbar); elementwise over matching arrays x, y."""
    _check_amp_channel(ch)
    if not 0.0 < qbar <= 1.0:
        raise ValueError("qbar must lie in (0, 1]")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    mom = paired_moments(ch, qbar * x, qbar, y, orders=(0, 1))
    out = np.where(mom[0] > DEN_CUT, mom[1] / np.maximum(mom[0], DEN_FLOOR), 0.0)
    return out if out.size > 1 else float(out[0])


def G_fun(ch: Channel, x, y, qbar: float):
    """G(x, y; qbar) = N2/N0 - (N1/N0)^2 (the derivative of F is qbar*G)."""
    _check_amp_channel(ch)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    mom = paired_moments(ch, qbar * x, qbar, y, orders=(0, 1, 2))
    den = np.maximum(mom[0], DEN_FLOOR)
    good = mom[0] > DEN_CUT
    out = np.where(good, mom[2] / den - (mom[1] / den) ** 2, 0.0)
    return out if out.size > 1 else float(out[0])


def h_fun(ch: Channel, q: float) -> float:
    """h(q) = int E_{G0}{ N1(sqrt(q)G0, 1-q; y)^2 / N0(...) } dy."""
    _check_amp_channel(ch)
    if not 0.0 <= q < 1.0:
        raise ValueError("q must lie in [0, 1)")
    y, wy = _amp_ygrid(ch)
    g0, w0 = _GH
    mom = smoothed_moments(ch, np.sqrt(q) * g0, 1.0 - q, y, orders=(0, 1))
    ratio = np.where(mom[0] > DEN_CUT,
                     mom[1] ** 2 / np.maximum(mom[0], DEN_FLOOR), 0.0)
    return float(np.einsum("i,ij,j->", w0, ratio, wy))


@dataclass(frozen=True)
class SEState:
    t: int
    mu: float
    q: float
    tau2: float


def state_evolution(ch: Channel, delta: float, mu0: float,
                    t_max: int) -> list[SEState]:
    """mu_{t+1} = delta h(q_t), q_t = mu_t/(1+mu_t); tau_t^2 = mu_t."""
    _check_amp_channel(ch)
    if mu0 < 0:
        raise ValueError("mu0 must be >= 0")
    states = []
    mu = float(mu0)
    for t in range(t_max + 1):
        q = mu / (1.0 + mu)
        states.append(SEState(t=t, mu=mu, q=q, tau2=mu))
        if t < t_max:
            mu = delta * h_fun(ch, q)
    return states


def _xi_decomposition(mu: float, tau2: float):
    """s = sigma_s xi with xi ~ N(0,1); conditionally X0 ~ N(c0(xi), v0)."""
    sig2 = mu * mu + tau2
    if sig2 < 1e-28:
        return 0.0, 0.0, 1.0
    sig = np.sqrt(sig2)
    return sig, mu / sig, tau2 / sig2


def state_evolution_general(ch: Channel, delta: float, mu0: float, tau20: float,
                            t_max: int) -> list[SEState]:
    """General (mu_t, tau_t^2) recursion driven by the same denoiser family.

    With tau20 = mu0 this reproduces state_evolution and preserves
    tau_t^2 = mu_t along the trajectory.
    """
    _check_amp_channel(ch)
    y, wy = _amp_ygrid(ch)
    xi, wxi = _GH
    states = []
    mu, tau2 = float(mu0), float(tau20)
    for t in range(t_max + 1):
        q = mu / (1.0 + mu)
        states.append(SEState(t=t, mu=mu, q=q, tau2=tau2))
        if t == t_max:
            break
        qbar = 1.0 - q
        sig, c0_scale, v0 = _xi_decomposition(mu, tau2)
        s_nodes = sig * xi
        fmom = smoothed_moments(ch, qbar * s_nodes, qbar, y, orders=(0, 1))
        fvals = np.where(fmom[0] > DEN_CUT,
                         fmom[1] / np.maximum(fmom[0], DEN_FLOOR), 0.0)
        cond = smoothed_moments(ch, c0_scale * xi, v0, y, orders=(0, 1))
        mu = delta * float(np.einsum("i,ij,j->", wxi, fvals * cond[1], wy))
        tau2 = delta * float(np.einsum("i,ij,j->", wxi, fvals ** 2 * cond[0], wy))
    return states


def onsager_coefficient(ch: Channel, mu: float, q: float, delta: float) -> float:
    """b_t = delta E{ f_t'(mu G0 + sqrt(mu) G1; Y) }, Y ~ p(.|G0).

    Uses f_t' = (1-q) G(., .; 1-q) and integrates the (G0, G1) pair through
    s = mu G0 + sqrt(mu) G1 with X0 | s Gaussian.
    """
    _check_amp_channel(ch)
    qbar = 1.0 - q
    y, wy = _amp_ygrid(ch)
    xi, wxi = _GH
    sig, c0_scale, v0 = _xi_decomposition(mu, mu)
    s_nodes = sig * xi
    mom = smoothed_moments(ch, qbar * s_nodes, qbar, y, orders=(0, 1, 2))
    den = np.maximum(mom[0], DEN_FLOOR)
    gvals = np.where(mom[0] > DEN_CUT,
                     mom[2] / den - (mom[1] / den) ** 2, 0.0)
    cond = smoothed_moments(ch, c0_scale * xi, v0, y, orders=(0,))
    return delta * qbar * float(np.einsum("i,ij,j->", wxi, gvals * cond[0], wy))


def calibrated_init(x: np.ndarray, mu0: float,
                    rng: np.random.Generator) -> np.ndarray:
    """z0 with <x,z0>/d = mu0 and ||z0||^2/d = mu0^2 + mu0 exactly.

    Projects a Gaussian draw orthogonal to x and renormalizes; the residual
    O(1/sqrt(d)) calibration error of the naive draw is removed.
    """
    d = x.size
    w = rng.standard_normal(d)
    w = w - (float(x @ w) / d) * x
    w *= np.sqrt(d) / np.linalg.norm(w)
    return mu0 * x + np.sqrt(mu0) * w


@dataclass
class AmpTrajectory:
    t: np.ndarray
    mu_se: np.ndarray
    q_se: np.ndarray
    overlap_emp: np.ndarray     # <x, z^t>/d
    znorm2_emp: np.ndarray      # ||z^t||^2/d
    zhatnorm2_emp: np.ndarray   # ||zhat^t||^2/n (nan at t=0 before the first pass)
    diverged: bool


def amp_run(ens, y: np.ndarray, ch: Channel, x: np.ndarray, mu0: float,
            t_max: int, rng: np.random.Generator,
            se: list[SEState] | None = None,
            onsager: list[float] | None = None,
            use_onsager: bool = True) -> AmpTrajectory:
    """Run the AMP iteration with the state-evolution-driven denoiser.

    q_t and b_t come from the deterministic SE track for the supplied mu0,
    not from the data; a precomputed onsager list avoids recomputing the
    coefficients across trials.  use_onsager=False is a negative control
    that drops the memory term.
    """
    _check_amp_channel(ch)
    n, d = ens.n, ens.d
    delta = n / d
    if se is None:
        se = state_evolution(ch, delta, mu0, t_max)
    z = calibrated_init(x, mu0, rng)
    f_prev = np.zeros(n)
    ts = [0]
    ov = [float(x @ z) / d]
    zn = [float(z @ z) / d]
    zhn = [np.nan]
    diverged = False
    for t in range(t_max):
        zhat = ens.matvec(z) - f_prev
        qbar = 1.0 - se[t].q
        fvals = F_fun(ch, zhat, y, qbar)
        if not use_onsager:
            b = 0.0
        elif onsager is not None:
            b = onsager[t]
        else:
            b = onsager_coefficient(ch, se[t].mu, se[t].q, delta)
        z = ens.rmatvec(fvals) - b * z
        f_prev = fvals
        ts.append(t + 1)
        ov.append(float(x @ z) / d)
        zn.append(float(z @ z) / d)
        zhn.append(float(zhat @ zhat) / n)
        if not np.isfinite(zn[-1]) or zn[-1] > 1e12:
            diverged = True
            break
    k = len(ts)
    return AmpTrajectory(
        t=np.array(ts), mu_se=np.array([s.mu for s in se[:k]]),
        q_se=np.array([s.q for s in se[:k]]),
        overlap_emp=np.array(ov), znorm2_emp=np.array(zn),
        zhatnorm2_emp=np.array(zhn), diverged=diverged)


@dataclass
class LinearizedModel:
    j: np.ndarray
    top_eig: float                 # largest real part
    spectral_radius: float
    max_imag: float
    sufficient_top: float | None   # lambda_1 of D*_n(alpha_bar), if delta_u given


def linearized_model(ens, y: np.ndarray, marg: GaussMarginals,
                     delta_u: float | None = None,
                     strict: bool = True) -> LinearizedModel:
    """Linearization around the uninformative fixed point.

    Builds the block matrix [[A^T J A, -A^T J^2], [A, -J]] with
    j_i = T*(y_i)/(1 - T*(y_i)) = (m2 - m0)/m0 at y_i.

    strict=True raises when the spectrum is not numerically real.  For
    sign-indefinite j (the regime the sign-changing optimal preprocessing
    lives in) the finite-n spectrum does contain complex pairs: the secular
    equation is a symmetric pencil against J^{-1}, which forces real
    eigenvalues only when J is definite.  strict=False returns the
    diagnostics (largest real part, spectral radius, max imaginary part)
    instead of raising.
    """
    n, d = ens.n, ens.d
    if n + d > _EIG_SIZE_CAP:
        raise ValueError(f"dense eigensolve capped at n + d <= {_EIG_SIZE_CAP}")
    m0 = marg.m0_at(y)
    m2 = marg.m2_at(y)
    j = (m2 - m0) / np.maximum(m0, DEN_FLOOR)
    A = ens.dense_forward()
    AtJ = A.T * j
    L = np.zeros((n + d, n + d))
    L[:d, :d] = AtJ @ A
    L[:d, d:] = -(A.T * (j * j))
    L[d:, :d] = A
    L[d:, d:] = -np.diag(j)
    eig = np.linalg.eigvals(L)
    max_imag = float(np.max(np.abs(eig.imag)))
    scale = float(np.max(np.abs(eig.real)))
    if strict and max_imag > 1e-8 * max(scale, 1.0):
        raise ValueError(f"linearized AMP matrix has complex spectrum "
                         f"(max |imag| = {max_imag:.3e})")
    suff = None
    if delta_u is not None:
        abar = np.sqrt((n / d) / delta_u)
        tstar = 1.0 - m0 / np.maximum(m2, DEN_FLOOR)
        coef = tstar / (tstar + abar * (1.0 - tstar))
        Dstar = (A.T * coef) @ A
        suff = float(np.linalg.eigvalsh((Dstar + Dstar.T) / 2.0)[-1])
    return LinearizedModel(j=j, top_eig=float(np.max(eig.real)),
                           spectral_radius=float(np.max(np.abs(eig))),
                           max_imag=max_imag, sufficient_top=suff)
