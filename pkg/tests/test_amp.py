import numpy as np
import pytest
from scipy import integrate

from weakrec.amp import (F_fun, G_fun, amp_run, calibrated_init, h_fun,
                         linearized_model, onsager_coefficient,
                         state_evolution, state_evolution_general)
from weakrec.channels import marginals, phase_retrieval
from weakrec.sensing import measure, sample_gaussian_ensemble, sample_signal
from weakrec.thresholds import delta_u


@pytest.fixture(scope="module")
def chan03():
    ch = phase_retrieval(0.3, "real")
    mg = marginals(ch, "real")
    du, _ = delta_u(ch, "real", marg=mg)
    return ch, mg, du


def test_amp_rejects_complex_and_tiny_sigma():
    with pytest.raises(ValueError):
        h_fun(phase_retrieval(0.3, "complex"), 0.1)
    with pytest.raises(ValueError):
        h_fun(phase_retrieval(1e-5, "real"), 0.1)


def test_F_vanishes_at_origin(chan03):
    # E_G{d_g p(y|G)} = 0: the uninformative fixed point exists
    ch, _, _ = chan03
    y = np.linspace(-1.0, 8.0, 25)
    vals = F_fun(ch, np.zeros_like(y), y, 1.0)
    assert np.max(np.abs(vals)) < 1e-12


def test_F_prime_at_origin_equals_optimal_ratio(chan03):
    # F'(0,y;1) = G(0,y;1) = T*(y)/(1 - T*(y)) = (m2-m0)/m0
    ch, mg, _ = chan03
    y = np.linspace(0.1, 6.0, 20)
    g_vals = G_fun(ch, np.zeros_like(y), y, 1.0)
    ratio = (mg.m2_at(y) - mg.m0_at(y)) / mg.m0_at(y)
    assert np.allclose(g_vals, ratio, rtol=1e-6, atol=1e-8)
    # and F' computed by finite differences in x matches qbar * G
    eps = 1e-5
    fp = (F_fun(ch, np.full_like(y, eps), y, 1.0)
          - F_fun(ch, np.full_like(y, -eps), y, 1.0)) / (2 * eps)
    assert np.allclose(fp, g_vals, rtol=1e-4, atol=1e-6)


def test_F_quadrature_vs_monte_carlo():
    ch = phase_retrieval(0.5, "real")
    x, y, qbar = 0.4, 1.2, 0.7
    rng = np.random.default_rng(33)
    g = rng.standard_normal(4_000_000)
    arg = qbar * x + np.sqrt(qbar) * g
    p = np.exp(-((y - arg ** 2) ** 2) / (2 * 0.5)) / np.sqrt(2 * np.pi * 0.5)
    dp = p * 2 * arg * (y - arg ** 2) / 0.5
    mc = float(dp.mean() / p.mean())
    # delta-method error of the MC ratio dominates: respect its 3-sigma band
    err = float(np.sqrt(dp.var() / dp.size)) / float(p.mean())
    assert abs(F_fun(ch, x, y, qbar) - mc) < 3 * err
    # at a configuration with a stronger signal the MC pins 3 digits
    x2, y2 = 1.0, 3.0
    arg = qbar * x2 + np.sqrt(qbar) * g
    p = np.exp(-((y2 - arg ** 2) ** 2) / (2 * 0.5)) / np.sqrt(2 * np.pi * 0.5)
    dp = p * 2 * arg * (y2 - arg ** 2) / 0.5
    mc2 = float(dp.mean() / p.mean())
    assert F_fun(ch, x2, y2, qbar) == pytest.approx(mc2, rel=5e-3)


def test_F_quadrature_vs_adaptive_quad():
    ch = phase_retrieval(0.5, "real")

    def brute(x, yv, qb):
        p = lambda g: np.exp(-((yv - g * g) ** 2) / 1.0) / np.sqrt(np.pi)
        dp = lambda g: p(g) * 2 * g * (yv - g * g) / 0.5
        phi = lambda g: np.exp(-g * g / 2) / np.sqrt(2 * np.pi)
        num = integrate.quad(lambda g: phi(g) * dp(qb * x + np.sqrt(qb) * g),
                             -14, 14, limit=500)[0]
        den = integrate.quad(lambda g: phi(g) * p(qb * x + np.sqrt(qb) * g),
                             -14, 14, limit=500)[0]
        return num / den

    for x, yv, qb in [(0.4, 1.2, 0.7), (-0.6, 0.2, 0.5), (1.1, 8.0, 0.9)]:
        assert F_fun(ch, x, yv, qb) == pytest.approx(brute(x, yv, qb), rel=1e-5)


def test_h_zero_and_slope(chan03):
    ch, _, du = chan03
    assert abs(h_fun(ch, 0.0)) < 1e-12
    mu0 = 1e-4
    q0 = mu0 / (1 + mu0)
    slope = h_fun(ch, q0) / q0
    assert abs(slope * du - 1.0) < 0.01


def test_se_contracts_below_threshold(chan03):
    ch, _, du = chan03
    se = state_evolution(ch, 0.7 * du, 0.05, 12)
    mus = [s.mu for s in se]
    assert all(a >= b - 1e-15 for a, b in zip(mus, mus[1:]))
    assert mus[-1] < 0.2 * mus[0]


def test_se_grows_above_threshold(chan03):
    ch, _, du = chan03
    se = state_evolution(ch, 1.5 * du, 0.01, 12)
    mus = [s.mu for s in se]
    assert mus[-1] > 2.0 * mus[0]


def test_general_recursion_keeps_tau2_equal_mu(chan03):
    ch, _, du = chan03
    se = state_evolution(ch, 1.3 * du, 0.15, 6)
    seg = state_evolution_general(ch, 1.3 * du, 0.15, 0.15, 6)
    for a, b in zip(se, seg):
        assert abs(b.tau2 - b.mu) < 1e-10
        assert abs(a.mu - b.mu) < 1e-10


def test_calibrated_init_exact():
    rng = np.random.default_rng(3)
    x = sample_signal(500, "real", rng).x
    z0 = calibrated_init(x, 0.07, rng)
    assert float(x @ z0) / 500 == pytest.approx(0.07, abs=1e-12)
    assert float(z0 @ z0) / 500 == pytest.approx(0.07 ** 2 + 0.07, abs=1e-12)


@pytest.mark.slow
def test_amp_tracks_state_evolution(chan03):
    ch, _, du = chan03
    delta = 1.5 * du
    d = 2000
    n = int(round(delta * d))
    se = state_evolution(ch, delta, 0.1, 6)
    b = [onsager_coefficient(ch, s.mu, s.q, delta) for s in se[:-1]]
    devs = []
    for seed in (0, 1, 2):
        rng = np.random.default_rng(seed)
        ens = sample_gaussian_ensemble(n, d, "real", rng)
        x = sample_signal(d, "real", rng)
        mset = measure(ens, x, ch, rng)
        traj = amp_run(ens, mset.y, ch, x.x, 0.1, 6, rng, se=se, onsager=b)
        assert not traj.diverged
        devs.append(np.abs(traj.overlap_emp - traj.mu_se))
        # second moments of z and zhat against the SE law
        assert np.max(np.abs(traj.znorm2_emp
                             - (traj.mu_se ** 2 + traj.mu_se))) < 0.08
        assert abs(traj.zhatnorm2_emp[-1]
                   - (traj.mu_se[-1] ** 2 + traj.mu_se[-1])) < 0.08
    assert float(np.mean(devs, axis=0).max()) < 0.04


@pytest.mark.slow
def test_onsager_term_is_necessary(chan03):
    # negative control: dropping b_t breaks the SE agreement by t = 3
    ch, _, du = chan03
    delta = 1.5 * du
    d = 1500
    n = int(round(delta * d))
    se = state_evolution(ch, delta, 0.3, 3)
    rng = np.random.default_rng(17)
    ens = sample_gaussian_ensemble(n, d, "real", rng)
    x = sample_signal(d, "real", rng)
    mset = measure(ens, x, ch, rng)
    traj = amp_run(ens, mset.y, ch, x.x, 0.3, 3, rng, se=se, use_onsager=False)
    dev = np.abs(traj.overlap_emp - traj.mu_se)
    assert dev[3] > 0.1


def test_linearized_model_diagnostics(chan03):
    # with sign-changing preprocessing the finite-n spectrum carries complex
    # pairs (the secular pencil is indefinite), so strict mode raises; the
    # instability still shows through the spectral radius
    ch, mg, du = chan03
    d = 256
    rng = np.random.default_rng(8)

    def build(fac, seed):
        r = np.random.default_rng(seed)
        n = int(round(fac * du * d))
        ens = sample_gaussian_ensemble(n, d, "real", r)
        x = sample_signal(d, "real", r)
        mset = measure(ens, x, ch, r)
        return ens, mset

    ens, mset = build(3.0, 8)
    with pytest.raises(ValueError, match="complex spectrum"):
        linearized_model(ens, mset.y, mg)
    lm = linearized_model(ens, mset.y, mg, delta_u=du, strict=False)
    assert lm.sufficient_top is not None
    # well above threshold the linearized map is unstable, every seed
    radii_hi = []
    radii_lo = []
    for seed in range(3):
        e, m = build(3.0, 100 + seed)
        radii_hi.append(linearized_model(e, m.y, mg, strict=False).spectral_radius)
        e, m = build(0.5, 200 + seed)
        radii_lo.append(linearized_model(e, m.y, mg, strict=False).spectral_radius)
    assert min(radii_hi) > 1.0
    assert np.mean(radii_lo) < np.mean(radii_hi)


def test_sufficient_statistic_matches_prediction(chan03):
    # lambda_1 of D*_n(sqrt(delta/delta_u)) concentrates on delta zeta(lam*)
    # computed for the matched optimal preprocessing
    ch, mg, du = chan03
    from weakrec import preprocess as pp
    from weakrec.rmt import solve_fixed_point
    fac = 3.0
    delta = fac * du
    law = pp.zlaw(pp.optimal_delta(mg, delta, du), mg)
    pred = delta * solve_fixed_point(law, delta).lam1
    d = 384
    vals = []
    for seed in range(3):
        rng = np.random.default_rng(seed)
        n = int(round(delta * d))
        ens = sample_gaussian_ensemble(n, d, "real", rng)
        x = sample_signal(d, "real", rng)
        mset = measure(ens, x, ch, rng)
        lm = linearized_model(ens, mset.y, mg, delta_u=du, strict=False)
        vals.append(lm.sufficient_top)
    assert abs(float(np.mean(vals)) - pred) < 0.08


def test_fixed_point_structure_violated_channel(tmp_path):
    # a channel with E{d_g p} != 0 escapes mu = 0 in one SE step
    gs = np.linspace(-5, 5, 81)
    ys = np.linspace(-7, 7, 281)
    rows = []
    for g in gs:
        p = np.exp(-((ys - g) ** 2) / 2) / np.sqrt(2 * np.pi)
        rows.extend((g, y, pv) for y, pv in zip(ys, p))
    path = tmp_path / "linear.csv"
    np.savetxt(path, np.array(rows), delimiter=",")
    from weakrec.channels import custom_table_from_csv
    ch = custom_table_from_csv(path, field="real")
    h0 = h_fun(ch, 0.0)
    assert h0 > 0.1          # weak recovery possible for all delta
    ch_pr = phase_retrieval(0.3, "real")
    assert h_fun(ch_pr, 0.0) < 1e-12
