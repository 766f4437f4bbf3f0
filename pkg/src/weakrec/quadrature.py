"""Quadrature helpers shared by the channel, threshold and AMP integrals."""

import numpy as np

__all__ = [
    "gauss_hermite",
    "gauss_legendre_panels",
    "panel_edges_positive",
]


def gauss_hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for E{f(G)} with G ~ N(0,1) (probabilists' scaling)."""
    x, w = np.polynomial.hermite.hermgauss(n)
    return x * np.sqrt(2.0), w / np.sqrt(np.pi)


def gauss_legendre_panels(edges: np.ndarray, n_per_panel: int = 24) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule over consecutive panels [edges[i], edges[i+1]].

    Returns flat arrays of nodes and weights; exact for polynomials of degree
    2*n_per_panel-1 on each panel, so accuracy is controlled by panel placement.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2:
        raise ValueError("need at least two panel edges")
    if np.any(np.diff(edges) <= 0):
        raise ValueError("panel edges must be strictly increasing")
    x, w = np.polynomial.legendre.leggauss(n_per_panel)
    a = edges[:-1][:, None]
    b = edges[1:][:, None]
    nodes = 0.5 * (b - a) * x[None, :] + 0.5 * (a + b)
    weights = 0.5 * (b - a) * w[None, :] * np.ones_like(nodes)
    return nodes.ravel(), weights.ravel()


def panel_edges_positive(lo: float, hi: float, n_lin: int = 40, n_geo: int = 40,
                         split: float = 3.0) -> np.ndarray:
    """Panel edges on [lo, hi], linear up to `split` then geometric to `hi`.

    Suited to integrands that vary on an O(1) scale near the origin and decay
    exponentially in the tail.
    """
    if hi <= lo:
        raise ValueError("hi must exceed lo")
    split = min(max(split, lo + 1e-12), hi)
    lin = np.linspace(lo, split, n_lin + 1)
    if split >= hi:
        return lin
    geo = np.geomspace(split, hi, n_geo + 1)
    return np.unique(np.concatenate([lin, geo]))
