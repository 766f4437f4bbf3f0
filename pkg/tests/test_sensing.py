import numpy as np
import pytest
from scipy import stats

from weakrec.channels import phase_retrieval
from weakrec.sensing import (measure, sample_cdp_ensemble,
                             sample_gaussian_ensemble, sample_signal,
                             signal_from_image)


def test_signal_norm_exact():
    rng = np.random.default_rng(0)
    for field in ("real", "complex"):
        x = sample_signal(257, field, rng)
        assert np.linalg.norm(x.x) ** 2 == pytest.approx(257.0, rel=1e-12)


def test_complex_sphere_overlap_beta_law():
    # M = |<x1, x2>|^2 / d^2 ~ Beta(1, d-1)
    d = 64
    rng = np.random.default_rng(1)
    m = np.empty(2000)
    for k in range(m.size):
        x1 = sample_signal(d, "complex", rng)
        x2 = sample_signal(d, "complex", rng)
        m[k] = np.abs(np.vdot(x1.x, x2.x)) ** 2 / d ** 2
    assert stats.kstest(m, stats.beta(1, d - 1).cdf).pvalue > 0.01


def test_real_sphere_overlap_density():
    # M = <x1, x2>/d has density prop. to (1 - m^2)^((d-3)/2)
    d = 32
    rng = np.random.default_rng(2)
    m = np.empty(2000)
    for k in range(m.size):
        x1 = sample_signal(d, "real", rng)
        x2 = sample_signal(d, "real", rng)
        m[k] = float(x1.x @ x2.x) / d

    def cdf(t):
        # CDF of m via the Beta(1/2, (d-1)/2) law of m^2 and symmetry
        t = np.asarray(t, dtype=float)
        b = stats.beta(0.5, (d - 1) / 2).cdf(t * t)
        return 0.5 + 0.5 * np.sign(t) * b

    assert stats.kstest(m, cdf).pvalue > 0.01


def test_gaussian_row_statistics():
    rng = np.random.default_rng(3)
    ens = sample_gaussian_ensemble(2048, 1024, "complex", rng)
    row_norms = np.sum(np.abs(ens.W) ** 2, axis=1)
    assert abs(row_norms.mean() - 1.0) < 0.02

    n = d = 256
    ens2 = sample_gaussian_ensemble(n, d, "real", rng)
    cov = ens2.W.T @ ens2.W / n
    off = cov - np.diag(np.diag(cov))
    assert np.max(np.abs(off)) < 3.0 / np.sqrt(n * d) * 4.0


def test_projections_standard_normal():
    rng = np.random.default_rng(4)
    d = 512
    ens = sample_gaussian_ensemble(4096, d, "complex", rng)
    x = sample_signal(d, "complex", rng)
    g = ens.matvec(x.x)
    # real part of a standard circular complex normal has variance 1/2
    assert stats.kstest(g.real * np.sqrt(2), "norm").pvalue > 0.01
    assert stats.kstest(np.abs(g) ** 2, "expon").pvalue > 0.01


@pytest.mark.parametrize("field,n,d", [("complex", 300, 200), ("real", 300, 200)])
def test_gaussian_adjoint_consistency(field, n, d):
    rng = np.random.default_rng(5)
    ens = sample_gaussian_ensemble(n, d, field, rng)
    u = sample_signal(d, field, rng).x
    v = (rng.standard_normal(n) + (1j * rng.standard_normal(n)
                                   if field == "complex" else 0.0))
    lhs = np.vdot(ens.matvec(u), v)
    rhs = np.vdot(u, ens.rmatvec(v))
    assert abs(lhs - rhs) < 1e-10 * abs(lhs)


def test_cdp_adjoint_and_modulus():
    rng = np.random.default_rng(6)
    ens = sample_cdp_ensemble(3, 16, 8, rng)
    assert ens.n == 3 * 128 and ens.d == 128
    u = rng.standard_normal(128) + 1j * rng.standard_normal(128)
    v = rng.standard_normal(ens.n) + 1j * rng.standard_normal(ens.n)
    assert abs(np.vdot(ens.matvec(u), v) - np.vdot(u, ens.rmatvec(v))) < 1e-10
    # unit-modulus rows in the unitary-DFT normalization: |a_r(t)| = 1/sqrt(d)
    row = ens.row(37)
    assert np.allclose(np.abs(row) * np.sqrt(ens.d), 1.0, atol=1e-12)


def test_cdp_matches_dense():
    rng = np.random.default_rng(7)
    ens = sample_cdp_ensemble(2, 8, 8, rng)
    W = ens.dense_forward()
    u = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    assert np.max(np.abs(ens.matvec(u) - W @ u)) < 1e-10
    # row accessor consistent with the forward matrix
    assert np.allclose(np.conj(ens.row(19)), W[19], atol=1e-12)


def test_cdp_operator_linearity():
    rng = np.random.default_rng(8)
    ens = sample_cdp_ensemble(2, 8, 4, rng)
    u = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    v = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    a, b = 1.3 - 0.2j, -0.7 + 1.1j
    assert np.allclose(ens.matvec(a * u + b * v),
                       a * ens.matvec(u) + b * ens.matvec(v), atol=1e-12)


def test_measure_noiseless_and_mean():
    rng = np.random.default_rng(9)
    ch = phase_retrieval(0.0, "complex")
    d = 64
    ens = sample_gaussian_ensemble(100_000, d, "complex", rng)
    x = sample_signal(d, "complex", rng)
    mset = measure(ens, x, ch, rng)
    assert np.allclose(mset.y, np.abs(mset.g) ** 2)
    assert abs(mset.y.mean() - 1.0) < 0.02


def test_cdp_parseval():
    rng = np.random.default_rng(10)
    ch = phase_retrieval(0.0, "complex")
    ens = sample_cdp_ensemble(4, 16, 16, rng)
    x = sample_signal(256, "complex", rng)
    mset = measure(ens, x, ch, rng)
    # sum of |<x, a_r>|^2 over each unitary view equals ||x||^2 = d
    assert mset.y.sum() == pytest.approx(4 * 256.0, rel=1e-8)


def test_signal_from_image_norm():
    img = np.arange(64, dtype=float).reshape(8, 8)
    sig = signal_from_image(img)
    assert np.linalg.norm(sig.x) ** 2 == pytest.approx(64.0)
    with pytest.raises(ValueError):
        signal_from_image(np.zeros((4, 4)))


def test_dimension_mismatch_raises():
    rng = np.random.default_rng(11)
    ens = sample_gaussian_ensemble(10, 8, "real", rng)
    x = sample_signal(9, "real", rng)
    ch = phase_retrieval(0.1, "real")
    with pytest.raises(ValueError):
        measure(ens, x, ch, rng)
