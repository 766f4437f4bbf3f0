"""Signals, sensing ensembles (Gaussian and coded diffraction) and measurement.

The forward map of an ensemble is matvec(v)_i = <v, a_i> = sum_j v_j conj(a_ij);
rmatvec is its adjoint, so <matvec(u), v>_n = <u, rmatvec(v)>_d holds exactly.
Gaussian rows have entry variance 1/d; CDP rows come from a unitary 2-D FFT so
that |a_r(t)| = 1/sqrt(d) and the projections <x, a_r> stay O(1) for signals
normalized to ||x||^2 = d.
"""

from dataclasses import dataclass

import numpy as np

from .channels import Channel, sample_y

__all__ = [
    "Signal",
    "GaussianEnsemble",
    "CDPEnsemble",
    "MeasurementSet",
    "sample_signal",
    "sample_gaussian_ensemble",
    "sample_cdp_ensemble",
    "measure",
    "signal_from_image",
]

CDP_ALPHABET = np.array([1.0 + 0j, -1.0 + 0j, 1j, -1j])
DENSE_LIMIT = 4096


@dataclass(frozen=True)
class Signal:
    x: np.ndarray
    field: str

    @property
    def d(self) -> int:
        return self.x.size


def sample_signal(d: int, field: str, rng: np.random.Generator,
                  dtype=None) -> Signal:
    """Uniform on the radius-sqrt(d) sphere (Gaussian draw, rescaled)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if field == "complex":
        x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    elif field == "real":
        x = rng.standard_normal(d)
    else:
        raise ValueError(f"unknown field {field!r}")
    x *= np.sqrt(d) / np.linalg.norm(x)
    if dtype is not None:
        x = x.astype(dtype)
    return Signal(x=x, field=field)


def signal_from_image(pixels: np.ndarray, field: str = "real") -> Signal:
    """Row-major image pixels, recentred and rescaled to ||x||^2 = d."""
    x = np.asarray(pixels, dtype=float).ravel()
    if np.linalg.norm(x) == 0:
        raise ValueError("image is identically zero")
    x = x * np.sqrt(x.size) / np.linalg.norm(x)
    if field == "complex":
        x = x.astype(complex)
    return Signal(x=x, field=field)


class GaussianEnsemble:
    """n i.i.d. rows, entries N(0, 1/d) or CN(0, 1/d)."""

    kind = "gaussian"

    def __init__(self, W: np.ndarray, field: str):
        self.W = W
        self.field = field
        self.n, self.d = W.shape

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return self.W @ v

    def rmatvec(self, w: np.ndarray) -> np.ndarray:
        if self.field == "complex":
            # conj(W^T conj(w)) = W^H w without materializing W^H
            return np.conj(self.W.T @ np.conj(w))
        return self.W.T @ w

    def row(self, i: int) -> np.ndarray:
        a = self.W[i]
        return np.conj(a) if self.field == "complex" else a

    def dense_forward(self) -> np.ndarray:
        return self.W


def sample_gaussian_ensemble(n: int, d: int, field: str,
                             rng: np.random.Generator,
                             dtype=None) -> GaussianEnsemble:
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    if field == "complex":
        if dtype == np.complex64:
            # interleaved draw into one buffer: half the allocations at this size
            buf = rng.standard_normal(2 * n * d, dtype=np.float32)
            W = buf.view(np.complex64).reshape(n, d)
            W *= np.float32(1.0 / np.sqrt(2.0 * d))
        else:
            W = (rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))) \
                / np.sqrt(2.0 * d)
    elif field == "real":
        rdtype = dtype or np.float64
        W = rng.standard_normal((n, d), dtype=rdtype) / np.sqrt(d, dtype=rdtype)
    else:
        raise ValueError(f"unknown field {field!r}")
    return GaussianEnsemble(W, field)


class CDPEnsemble:
    """Coded diffraction patterns: L modulated views of a unitary 2-D DFT."""

    kind = "cdp"
    field = "complex"

    def __init__(self, masks: np.ndarray):
        self.masks = masks
        self.L, self.d1, self.d2 = masks.shape
        self.d = self.d1 * self.d2
        self.n = self.L * self.d
        self._mconj = np.conj(masks)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v2 = v.reshape(self.d1, self.d2)
        out = np.fft.fft2(v2[None, :, :] * self._mconj, norm="ortho")
        return out.reshape(self.n)

    def rmatvec(self, w: np.ndarray) -> np.ndarray:
        w3 = w.reshape(self.L, self.d1, self.d2)
        back = np.fft.ifft2(w3, norm="ortho") * self.masks
        return back.sum(axis=0).reshape(self.d)

    def row(self, i: int) -> np.ndarray:
        ell, k = divmod(i, self.d)
        k1, k2 = divmod(k, self.d2)
        t1 = np.arange(self.d1)[:, None]
        t2 = np.arange(self.d2)[None, :]
        phase = np.exp(2j * np.pi * (k1 * t1 / self.d1 + k2 * t2 / self.d2))
        return (self.masks[ell] * phase).reshape(self.d) / np.sqrt(self.d)

    def dense_forward(self) -> np.ndarray:
        """Materialized matrix W with matvec(v) = W @ v; d <= 4096 only."""
        if self.d > DENSE_LIMIT:
            raise ValueError(f"dense materialization capped at d={DENSE_LIMIT}")
        F1 = np.exp(-2j * np.pi * np.outer(np.arange(self.d1), np.arange(self.d1))
                    / self.d1)
        F2 = np.exp(-2j * np.pi * np.outer(np.arange(self.d2), np.arange(self.d2))
                    / self.d2)
        blocks = []
        for ell in range(self.L):
            B = np.einsum("ac,bd->abcd", F1, F2).reshape(self.d, self.d)
            blocks.append(B * self._mconj[ell].reshape(1, self.d))
        return np.concatenate(blocks, axis=0) / np.sqrt(self.d)


def sample_cdp_ensemble(L: int, d1: int, d2: int,
                        rng: np.random.Generator) -> CDPEnsemble:
    if L < 1:
        raise ValueError("L must be >= 1")
    idx = rng.integers(0, 4, size=(L, d1, d2))
    return CDPEnsemble(CDP_ALPHABET[idx])


@dataclass(frozen=True)
class MeasurementSet:
    y: np.ndarray
    g: np.ndarray   # projections <x, a_i>, kept for diagnostics


def measure(ens, sig: Signal, ch: Channel, rng: np.random.Generator) -> MeasurementSet:
    if sig.d != ens.d:
        raise ValueError(f"signal dimension {sig.d} != ensemble dimension {ens.d}")
    g = ens.matvec(sig.x)
    y = sample_y(ch, np.asarray(g, dtype=complex if ch.field == "complex" else float),
                 rng)
    return MeasurementSet(y=np.asarray(y, dtype=float), g=g)
