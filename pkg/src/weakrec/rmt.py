"""Random-matrix predictions for the weighted covariance spectral estimator.

Everything is driven by two scalar functions of lambda > tau built from the
discrete law of Z = T(Y):

    psi_delta(lam) = lam (1/delta + E{Z/(lam-Z)})
    phi(lam)       = lam E{Z |G|^2 /(lam-Z)}

psi is convex with minimizer lambda_bar; the unique crossing lambda_star of
zeta_delta(lam) = psi_delta(max(lam, lambda_bar)) with phi determines the top
eigenvalue, the bulk edge and the asymptotic squared overlap.

Normalization: predictions are stated for sensing vectors with unit-variance
entries (scalar products O(1)).  For rows with variance 1/d, the empirical
matrix (1/n) sum T(y_i) a_i a_i^* must be multiplied by d before comparison.
"""

from dataclasses import dataclass
import math
import warnings

import numpy as np
from scipy import optimize

from .preprocess import ZLaw

__all__ = [
    "SpectralFunctions",
    "OverlapPrediction",
    "solve_fixed_point",
    "lambda_bar",
    "spike_map",
    "negative_edge",
]

POLE_DIST = 1e-12
POLE_WEIGHT = 1e-9
BRACKET_FACTOR = 1e6


class SpectralFunctions:
    """psi/phi and their derivatives over a discrete zlaw, at fixed delta."""

    def __init__(self, law: ZLaw, delta: float):
        if delta <= 0:
            raise ValueError("delta must be positive")
        self.law = law
        self.delta = float(delta)
        self.tau = float(law.tau)

    def _frac(self, lam: float, num: np.ndarray) -> float:
        diff = lam - self.law.z
        near = np.abs(diff) < POLE_DIST
        if np.any(near):
            if float(self.law.p[near].sum()) > POLE_WEIGHT:
                raise ValueError(f"evaluation at lambda={lam} hits atoms of Z")
            diff = np.where(near, np.inf, diff)
        return float(np.sum(num / diff))

    def _frac2(self, lam: float, num: np.ndarray) -> float:
        diff = lam - self.law.z
        near = np.abs(diff) < POLE_DIST
        if np.any(near):
            if float(self.law.p[near].sum()) > POLE_WEIGHT:
                raise ValueError(f"evaluation at lambda={lam} hits atoms of Z")
            diff = np.where(near, np.inf, diff)
        return float(np.sum(num / diff ** 2))

    def _check_domain(self, lam: float):
        if lam <= self.tau:
            raise ValueError(f"lambda={lam} outside domain (tau={self.tau}, inf)")

    def psi(self, lam: float) -> float:
        self._check_domain(lam)
        return lam * (1.0 / self.delta + self._frac(lam, self.law.p * self.law.z))

    def psi_prime(self, lam: float) -> float:
        self._check_domain(lam)
        return 1.0 / self.delta - self._frac2(lam, self.law.p * self.law.z ** 2)

    def phi(self, lam: float) -> float:
        self._check_domain(lam)
        return lam * self._frac(lam, self.law.q * self.law.z)

    def phi_prime(self, lam: float) -> float:
        self._check_domain(lam)
        return -self._frac2(lam, self.law.q * self.law.z ** 2)

    # --- unchecked variants for lambda below the support (bulk lower edge) ---
    def _psi_any(self, lam: float) -> float:
        return lam * (1.0 / self.delta + self._frac(lam, self.law.p * self.law.z))

    def _psi_prime_any(self, lam: float) -> float:
        return 1.0 / self.delta - self._frac2(lam, self.law.p * self.law.z ** 2)


@dataclass(frozen=True)
class OverlapPrediction:
    delta: float
    lambda_bar: float
    lambda_star: float     # nan when the fixed point has no solution above tau
    rho2: float
    lam1: float            # limit of the top eigenvalue
    lam2: float            # limit of the second eigenvalue (bulk edge)
    informative: bool
    hplemma_ok: bool       # False when the divergence hypothesis failed

    @property
    def gap(self) -> float:
        return self.lam1 - self.lam2


def _grid_eps(tau: float) -> float:
    return 1e-9 * (1.0 + abs(tau))


def lambda_bar(law: ZLaw, delta: float) -> float:
    """Minimizer of the convex psi_delta over [tau, inf).

    Returns tau itself when psi is increasing on the whole open domain (the
    infimum then sits at the boundary).
    """
    sf = SpectralFunctions(law, delta)
    lo = law.tau + _grid_eps(law.tau)
    if sf.psi_prime(lo) >= 0.0:
        return law.tau
    hi = law.tau + 1.0
    cap = law.tau + BRACKET_FACTOR * (1.0 + abs(law.tau))
    while sf.psi_prime(hi) <= 0.0:
        hi = law.tau + 2.0 * (hi - law.tau)
        if hi > cap:
            raise ValueError("no sign change of psi' below the bracket cap")
    return float(optimize.brentq(sf.psi_prime, lo, hi, xtol=1e-10, maxiter=200))


def solve_fixed_point(law: ZLaw, delta: float) -> OverlapPrediction:
    """Solve zeta_delta = phi and assemble the overlap / eigenvalue prediction."""
    sf = SpectralFunctions(law, delta)
    eps = _grid_eps(law.tau)
    lo = law.tau + eps
    lb = lambda_bar(law, delta)
    lb_eval = max(lb, lo)
    psi_min = sf.psi(lb_eval)

    def zeta(lam: float) -> float:
        return sf.psi(max(lam, lb_eval))

    def gfun(lam: float) -> float:
        return zeta(lam) - sf.phi(lam)

    cap = law.tau + BRACKET_FACTOR * (1.0 + abs(law.tau))
    hi = law.tau + 1.0
    while gfun(hi) < 0.0:
        hi = law.tau + 2.0 * (hi - law.tau)
        if hi > cap:
            raise ValueError("fixed-point bracket expansion exceeded the cap")
    if gfun(lo) > 0.0:
        # phi stays below zeta down to tau: the divergence hypothesis fails on
        # this law; no outlier separates from the bulk.
        warnings.warn("fixed-point equation has no solution above tau; "
                      "reporting a non-informative prediction", stacklevel=2)
        return OverlapPrediction(delta=delta, lambda_bar=lb, lambda_star=math.nan,
                                 rho2=0.0, lam1=psi_min, lam2=psi_min,
                                 informative=False, hplemma_ok=False)
    lam_star = float(optimize.brentq(gfun, lo, hi, xtol=1e-10, maxiter=200))
    pp = sf.psi_prime(lam_star)
    if pp > 0.0:
        rho2 = pp / (pp - sf.phi_prime(lam_star))
    else:
        rho2 = 0.0
    lam1 = zeta(lam_star)
    return OverlapPrediction(delta=delta, lambda_bar=lb, lambda_star=lam_star,
                             rho2=float(rho2), lam1=float(lam1), lam2=float(psi_min),
                             informative=bool(pp > 0.0), hplemma_ok=True)


def spike_map(z_atoms, weights, delta: float, alpha_star: float) -> float:
    """Top-eigenvalue map for (1/n) U M U* with a planted top eigenvalue.

    Given the limiting spectral law H of M (atoms/weights, no |G| weighting)
    and the limit alpha_star of the top eigenvalue of M, returns the limit of
    the top eigenvalue of (1/n) U M U*: psi_delta(alpha_star) if
    psi'_delta(alpha_star) > 0, else the bulk edge min_{lam > tau} psi_delta.
    """
    z = np.asarray(z_atoms, dtype=float)
    w = np.asarray(weights, dtype=float)
    if z.shape != w.shape or z.ndim != 1:
        raise ValueError("atoms and weights must be matching 1-D arrays")
    if abs(float(w.sum()) - 1.0) > 1e-9:
        raise ValueError("weights must sum to 1")
    tau = float(z.max())
    if np.any(np.abs(alpha_star - z) < 1e-12) or alpha_star <= tau:
        raise ValueError("alpha_star must lie strictly above the support of H")
    law = ZLaw(z=z, p=w, q=w, tau=tau)
    sf = SpectralFunctions(law, delta)
    if sf.psi_prime(alpha_star) > 0.0:
        return sf.psi(alpha_star)
    lb = lambda_bar(law, delta)
    return sf.psi(max(lb, tau + _grid_eps(tau)))


def negative_edge(law: ZLaw, delta: float) -> float:
    """Lower bulk edge of (1/n) U Z U*: stationary value of psi below min(Z).

    Returns 0 when Z >= 0 (the spectrum is then nonnegative).  Used by the
    harness to size the power-method shift.
    """
    zmin = float(law.z.min())
    if zmin >= 0.0:
        return 0.0
    sf = SpectralFunctions(law, delta)
    hi = zmin - 1e-9 * (1.0 + abs(zmin))
    if sf._psi_prime_any(hi) >= 0.0:
        return sf._psi_any(hi)
    lo = zmin - 1.0
    while sf._psi_prime_any(lo) <= 0.0:
        lo = zmin - 2.0 * (zmin - lo)
        if zmin - lo > BRACKET_FACTOR * (1.0 + abs(zmin)):
            raise ValueError("no stationary point of psi below the support")
    lam = optimize.brentq(sf._psi_prime_any, lo, hi, xtol=1e-10, maxiter=200)
    return float(sf._psi_any(lam))
