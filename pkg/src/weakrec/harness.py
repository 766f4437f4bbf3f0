"""Experiment orchestration: thresholds, predictions, delta-sweeps, AMP runs,
spike checks and the coded-diffraction demo.

Determinism: every stochastic task derives per-trial generators from
SeedSequence([seed, trial]), so results are bit-identical for a fixed request
regardless of worker count or execution order.
"""

from concurrent.futures import ProcessPoolExecutor
import csv
import hashlib
import json
import math
import time

import numpy as np

from . import preprocess as pp
from .amp import (amp_run, h_fun, linearized_model, onsager_coefficient,
                  state_evolution)
from .channels import Channel, custom_table_from_csv, gap_example, marginals, \
    phase_retrieval, sample_y
from .pgm import read_pgm, write_pgm
from .rmt import OverlapPrediction, negative_edge, solve_fixed_point, spike_map
from .sensing import (measure, sample_cdp_ensemble, sample_gaussian_ensemble,
                      sample_signal, signal_from_image, GaussianEnsemble)
from .spectral import (block_chebyshev_rr, chebyshev_power, make_operator,
                       overlap, power_method, top_eigpair_dense)
from .thresholds import delta_l, delta_u
from .service.models import (AmpRequest, AmpResponse, AmpTrajectoryRow,
                             CdpDemoRequest, CdpDemoResponse, ChannelParams,
                             PredictionRow, PredictRequest, PredictResponse,
                             PreprocessParams, SimulateRequest,
                             SimulateResponse, SimulateSummaryRow,
                             SpikeCheckRequest, SpikeCheckResponse,
                             ThresholdsRequest, ThresholdsResponse,
                             TrialRecord, parse_delta_grid)

__all__ = [
    "run_thresholds", "run_predict", "run_simulate", "run_amp",
    "run_spike_check", "run_cdp_demo", "config_hash", "build_channel",
    "resolve_preprocess", "DEFAULT_CLAMP",
]

# near-threshold matched ratios for the closed-form preprocessing presets
PR_DELTA_TILDE = {"complex": 1.001, "real": 0.5005}
TRIM_T = {"complex": 5.25, "real": 7.0}
SUBSET_T = 2.0
# default clamp applied to the unbounded-below optimal-pr preset in
# simulations; keeps the negative spectral bulk small enough for iterative
# eigensolvers while changing the predicted overlap only marginally
DEFAULT_CLAMP = 5.0
CDP_CLAMP = 40.0
DENSE_AUTO_D = 768


def config_hash(req) -> str:
    payload = req.model_dump(exclude={"out_prefix", "out_image", "workers"})
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def build_channel(params: ChannelParams, field: str) -> Channel:
    if params.kind == "phase-retrieval":
        return phase_retrieval(params.sigma2, field)
    if params.kind == "gap-example":
        return gap_example()
    if params.csv_path is None:
        raise ValueError("custom-table channel needs csv_path")
    return custom_table_from_csv(params.csv_path, field)


def resolve_preprocess(pre: PreprocessParams, field: str, marg=None,
                       channel_delta_u: float | None = None,
                       sweep_delta: float | None = None,
                       default_clamp: float | None = DEFAULT_CLAMP,
                       ) -> tuple[pp.PreprocessSpec, float | None]:
    """Instantiate a preprocessing preset; returns (spec, applied clamp level)."""
    kind = pre.kind
    if kind in ("optimal-pr", "optimal-pr-positive", "optimal-clamped"):
        dt = pre.delta if pre.delta is not None else PR_DELTA_TILDE[field]
        base = pp.optimal_pr(dt, field)
        if kind == "optimal-pr-positive":
            return pp.positive_part(base), None
        if kind == "optimal-clamped":
            M = pre.M if pre.M is not None else CDP_CLAMP
            return pp.clamp(base, M), M
        M = pre.M if pre.M is not None else default_clamp
        if M is not None and M > 0:
            return pp.clamp(base, M), M
        return base, None
    if kind == "trimming":
        return pp.trimming(pre.t if pre.t is not None else TRIM_T[field]), None
    if kind == "subset":
        return pp.subset(pre.t if pre.t is not None else SUBSET_T), None
    if kind == "optimal":
        if marg is None:
            raise ValueError("optimal preset needs channel marginals")
        return pp.optimal(marg), None
    if kind == "optimal-delta":
        if marg is None or channel_delta_u is None or sweep_delta is None:
            raise ValueError("optimal-delta preset needs marginals, delta_u and "
                             "the sweep delta")
        return pp.optimal_delta(marg, sweep_delta, channel_delta_u), None
    if kind == "custom":
        if pre.table_path is None:
            raise ValueError("custom preprocessing needs table_path")
        return pp.custom_table_from_csv(pre.table_path), None
    raise ValueError(f"unknown preprocessing kind {kind!r}")


# ----------------------------------------------------------------------------
# thresholds / predict
# ----------------------------------------------------------------------------

def run_thresholds(req: ThresholdsRequest) -> ThresholdsResponse:
    t0 = time.perf_counter()
    ch = build_channel(req.channel, req.field)
    marg = None
    if not (ch.kind == "phase-retrieval" and ch.sigma2 == 0.0) \
            and ch.kind != "gap-example":
        marg = marginals(ch, req.field)
    dl, _ = delta_l(ch, req.field, n_m=req.n_m, marg=marg)
    du, _ = delta_u(ch, req.field, marg=marg)
    return ThresholdsResponse(
        field=req.field, sigma2=req.channel.sigma2,
        delta_l="inf" if math.isinf(dl) else dl,
        delta_u="inf" if math.isinf(du) else du,
        runtime_s=time.perf_counter() - t0)


def _predictions(req, deltas) -> tuple[list[PredictionRow], float | None]:
    ch = build_channel(req.channel, req.field)
    marg = marginals(ch, req.field)
    ch_du = None
    if req.preprocess.kind == "optimal-delta":
        ch_du, _ = delta_u(ch, req.field, marg=marg)
    rows = []
    resolved_clamp = None
    for dv in deltas:
        spec, resolved_clamp = resolve_preprocess(
            req.preprocess, req.field, marg=marg, channel_delta_u=ch_du,
            sweep_delta=dv)
        law = pp.zlaw(spec, marg)
        pred = solve_fixed_point(law, dv)
        rows.append(PredictionRow(
            delta=dv, rho2=pred.rho2, lambda_bar=pred.lambda_bar,
            lambda_star=None if math.isnan(pred.lambda_star) else pred.lambda_star,
            lam1=pred.lam1, lam2=pred.lam2, informative=pred.informative,
            hplemma_ok=pred.hplemma_ok))
    return rows, resolved_clamp


def run_predict(req: PredictRequest) -> PredictResponse:
    t0 = time.perf_counter()
    deltas = parse_delta_grid(req.deltas)
    rows, clampv = _predictions(req, deltas)
    return PredictResponse(rows=rows, preprocess_kind=req.preprocess.kind,
                           resolved_clamp=clampv,
                           runtime_s=time.perf_counter() - t0)


# ----------------------------------------------------------------------------
# simulate: delta-sweep of the spectral estimator against predictions
# ----------------------------------------------------------------------------

def _filter_plan(pred: OverlapPrediction, bottom: float, d: int,
                 hi_hint: float | None = None) -> dict:
    """Iteration plan for one sweep point from its prediction.

    Clean-gap points use the single-vector Chebyshev filter with Rayleigh
    validation and a power fallback.  Points whose predicted gap is within a
    few finite-size edge fluctuations are extracted by a small filtered block
    with Rayleigh-Ritz, which resolves an outlier sitting inside the edge
    cluster; the measured top eigenvalue from trial 0 (hi_hint) keys the pass
    band of later trials.
    """
    lo = min(1.1 * bottom - 0.3 - 8.0 * d ** (-2.0 / 3.0) * abs(bottom),
             pred.lam2 - 1.0)
    # edge fluctuation scale grows with the magnitude of the bulk edge
    fluct = 2.0 * d ** (-2.0 / 3.0) * max(1.0, abs(pred.lam2))
    if not pred.informative:
        return dict(mode="single", lo=lo, hi=pred.lam1 + fluct + 0.02,
                    degree=15, outer=2, validate=False)
    gap = pred.lam1 - pred.lam2
    if hi_hint is not None:
        lam1 = hi_hint
        hi = hi_hint - max(0.8 * gap, 3.0 * fluct)
    else:
        # anticipate the downward finite-size shift of the whole edge
        lam1 = pred.lam1 - 1.5 * fluct
        hi = min(pred.lam2 - 2.0 * fluct + 0.15 * gap, lam1 - 0.3 * gap)
    t1 = (2 * lam1 - hi - lo) / (hi - lo)
    gain = math.acosh(max(t1, 1.0 + 1e-12))
    if gap < 2.5 * fluct:
        # marginal separation: block Rayleigh-Ritz at a fixed pass budget
        passes = int(np.clip(math.ceil(6.5 / gain), 30, 100))
        degree = int(np.clip(math.ceil(passes / 5), 8, 25))
        return dict(mode="block", lo=lo, hi=hi, degree=degree,
                    outer=max(2, math.ceil(passes / degree)),
                    validate=gap > 1.5 * fluct)
    budget = int(np.clip(math.ceil(math.log(2.0 * math.sqrt(d) / 0.25) / gain),
                         30, 500 if hi_hint is None else 280))
    degree = int(np.clip(math.ceil(5.0 / gain), 8, budget))
    return dict(mode="single", lo=lo, hi=hi, degree=degree,
                outer=max(2, math.ceil(budget / degree)), validate=True)


def _run_trial(args: dict) -> list[dict]:
    """One Monte Carlo trial of the sweep; self-contained for process pools."""
    req = SimulateRequest(**args["request"])
    deltas = args["deltas"]
    preds = {p["delta"]: OverlapPrediction(**p["pred"]) for p in args["preds"]}
    bottoms = {p["delta"]: p["bottom"] for p in args["preds"]}
    hints = args.get("hints") or {}
    trial = args["trial"]
    chash = args["config_hash"]

    field = req.field
    d = req.d
    complex_field = field == "complex"
    big = d >= 1024
    dtype = (np.complex64 if big else np.complex128) if complex_field \
        else (np.float32 if big else np.float64)
    ch = build_channel(req.channel, field)
    marg = marginals(ch, field)
    ch_du = None
    if req.preprocess.kind == "optimal-delta":
        ch_du, _ = delta_u(ch, field, marg=marg)

    rng = np.random.default_rng(np.random.SeedSequence([req.seed, trial]))
    n_max = int(round(max(deltas) * d))
    x = sample_signal(d, field, rng)
    ens_full = sample_gaussian_ensemble(n_max, d, field, rng, dtype=dtype)
    g_full = ens_full.matvec(x.x.astype(dtype))
    y_full = np.asarray(
        sample_y(ch, np.asarray(g_full, dtype=complex if complex_field else float),
                 rng),
        dtype=float)

    out = []
    for dv in deltas:
        n = int(round(dv * d))
        ens = GaussianEnsemble(ens_full.W[:n], field)
        spec, _ = resolve_preprocess(req.preprocess, field, marg=marg,
                                     channel_delta_u=ch_du, sweep_delta=dv)
        tvals = spec.apply(y_full[:n])
        tvals = tvals.astype(np.float32 if big else np.float64)
        pred = preds[dv]
        t0 = time.perf_counter()
        eig2 = None
        engine = req.engine
        if engine == "auto":
            engine = "dense" if (d <= DENSE_AUTO_D or (req.record_eigs and d <= 2048)) \
                else "chebyshev"
        if engine == "dense":
            vals, vec = top_eigpair_dense(ens, tvals, scaled=True)
            est_eig, eig2 = float(vals[0]), float(vals[1])
            xhat = vec
            iters, converged = 0, True
        else:
            op = make_operator(ens, tvals, scaled=True)
            bottom = bottoms[dv]
            if engine == "chebyshev":
                plan = _filter_plan(pred, bottom, d, hi_hint=hints.get(dv))
                runner = block_chebyshev_rr if plan["mode"] == "block" \
                    else chebyshev_power
                est = runner(op, d, plan["lo"], plan["hi"], rng,
                             degree=plan["degree"], max_outer=plan["outer"],
                             tol=1e-6, complex_field=complex_field, dtype=dtype)
                trusted = (not plan["validate"]) or \
                    (est.eigval > plan["hi"] + 0.1 * max(pred.gap, 1e-3))
                if not trusted:
                    alpha = max(0.0, -(1.15 * bottom + pred.lam1) / 2.0 + 0.3)
                    cap = 400 if plan["mode"] == "block" else 1200
                    est = power_method(op, d, alpha, rng, tol=max(req.tol, 1e-6),
                                       max_iter=min(req.max_iter, cap),
                                       complex_field=complex_field, dtype=dtype,
                                       v0=np.ascontiguousarray(est.xhat))
            else:
                alpha = max(0.0, -(1.15 * bottom + pred.lam1) / 2.0 + 0.3)
                est = power_method(op, d, alpha, rng, tol=req.tol,
                                   max_iter=req.max_iter,
                                   complex_field=complex_field, dtype=dtype)
            est_eig = est.eigval
            xhat = est.xhat
            iters, converged = est.iters, est.converged
        ov = overlap(np.asarray(xhat, dtype=np.complex128 if complex_field
                                else np.float64), x.x)
        out.append(dict(
            schema_version=1, config_hash=chash, seed=req.seed, trial=trial,
            delta=dv, d=d, n=n, overlap2=ov * ov, eigval1=est_eig, eigval2=eig2,
            iters=iters, converged=converged, engine=engine,
            runtime_ms=1e3 * (time.perf_counter() - t0),
            pred_rho2=pred.rho2, pred_lam1=pred.lam1, pred_lam2=pred.lam2))
    return out


def run_simulate(req: SimulateRequest) -> SimulateResponse:
    t0 = time.perf_counter()
    deltas = parse_delta_grid(req.deltas)
    chash = config_hash(req)

    # predictions once per delta (pure), shared with workers
    ch = build_channel(req.channel, req.field)
    marg = marginals(ch, req.field)
    ch_du = None
    if req.preprocess.kind == "optimal-delta":
        ch_du, _ = delta_u(ch, req.field, marg=marg)
    pred_payload = []
    for dv in deltas:
        spec, _ = resolve_preprocess(req.preprocess, req.field, marg=marg,
                                     channel_delta_u=ch_du, sweep_delta=dv)
        law = pp.zlaw(spec, marg)
        pred = solve_fixed_point(law, dv)
        pred_payload.append(dict(delta=dv, pred=pred.__dict__,
                                 bottom=negative_edge(law, dv)))

    def payload(k, hints=None):
        return dict(request=req.model_dump(), deltas=deltas, preds=pred_payload,
                    trial=k, config_hash=chash, hints=hints)

    # trial 0 runs first: its measured top eigenvalues key the filter pass
    # bands of the remaining trials (a pure preconditioning hint)
    rows_nested = [_run_trial(payload(0))]
    hints = {r["delta"]: r["eigval1"] for r in rows_nested[0]
             if r["eigval1"] is not None}
    rest = [payload(k, hints) for k in range(1, req.trials)]
    if req.workers > 1 and rest:
        with ProcessPoolExecutor(max_workers=req.workers) as pool:
            rows_nested += list(pool.map(_run_trial, rest))
    else:
        rows_nested += [_run_trial(p) for p in rest]
    records = [TrialRecord(**r) for rows in rows_nested for r in rows]
    records.sort(key=lambda r: (r.delta, r.trial))

    summary = []
    for dv, pred in zip(deltas, pred_payload):
        sel = [r for r in records if r.delta == dv]
        ov = np.array([r.overlap2 for r in sel])
        e1 = [r.eigval1 for r in sel if r.eigval1 is not None]
        e2 = [r.eigval2 for r in sel if r.eigval2 is not None]
        summary.append(SimulateSummaryRow(
            delta=dv, n=sel[0].n, trials=len(sel),
            mean_overlap2=float(ov.mean()),
            stderr_overlap2=float(ov.std(ddof=1) / math.sqrt(len(ov)))
            if len(ov) > 1 else 0.0,
            pred_rho2=pred["pred"]["rho2"], pred_lam1=pred["pred"]["lam1"],
            pred_lam2=pred["pred"]["lam2"],
            mean_eigval1=float(np.mean(e1)) if e1 else None,
            mean_eigval2=float(np.mean(e2)) if e2 else None))

    csv_path = json_path = None
    if req.out_prefix:
        csv_path = f"{req.out_prefix}_records.csv"
        json_path = f"{req.out_prefix}_summary.json"
        with open(csv_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(records[0].model_dump()))
            writer.writeheader()
            for r in records:
                writer.writerow(r.model_dump())
        with open(json_path, "w") as fh:
            json.dump({"schema_version": 1, "config_hash": chash,
                       "request": req.model_dump(),
                       "summary": [s.model_dump() for s in summary]}, fh, indent=1)
    return SimulateResponse(config_hash=chash, summary=summary, records=records,
                            csv_path=csv_path, json_path=json_path,
                            runtime_s=time.perf_counter() - t0)


# ----------------------------------------------------------------------------
# AMP
# ----------------------------------------------------------------------------

def run_amp(req: AmpRequest) -> AmpResponse:
    t0 = time.perf_counter()
    ch = phase_retrieval(req.sigma2, "real")
    marg = marginals(ch, "real")
    du, _ = delta_u(ch, "real", marg=marg)
    deltas = parse_delta_grid(req.deltas)
    if req.delta_units == "delta_u":
        deltas = [dv * du for dv in deltas]
    chash = config_hash(req)

    # local stability slope of state evolution at the uninformative fixed
    # point, per unit delta: mu1/(delta q0) -> 1/delta_u as mu0 -> 0
    mu_small = 1e-4
    q_small = mu_small / (1 + mu_small)
    se_slope = h_fun(ch, q_small) / q_small

    rows = []
    dev_mu = 0.0
    dev_norm = 0.0
    lin_tops = [] if req.linearize_d else None
    lin_imag = 0.0 if req.linearize_d else None
    for dv in deltas:
        se = state_evolution(ch, dv, req.mu0, req.t_max)
        onsager = [onsager_coefficient(ch, s.mu, s.q, dv) for s in se[:-1]]
        for trial in range(req.trials):
            rng = np.random.default_rng(
                np.random.SeedSequence([req.seed, trial, int(round(dv * 1e6))]))
            n = int(round(dv * req.d))
            ens = sample_gaussian_ensemble(n, req.d, "real", rng)
            x = sample_signal(req.d, "real", rng)
            mset = measure(ens, x, ch, rng)
            traj = amp_run(ens, mset.y, ch, x.x, req.mu0, req.t_max, rng,
                           se=se, onsager=onsager)
            for i, tt in enumerate(traj.t):
                rows.append(AmpTrajectoryRow(
                    delta=dv, trial=trial, t=int(tt), mu_se=traj.mu_se[i],
                    q_se=traj.q_se[i], overlap_emp=traj.overlap_emp[i],
                    znorm2_emp=traj.znorm2_emp[i],
                    zhatnorm2_emp=None if np.isnan(traj.zhatnorm2_emp[i])
                    else traj.zhatnorm2_emp[i]))
                dev_mu = max(dev_mu, abs(traj.overlap_emp[i] - traj.mu_se[i]))
                dev_norm = max(dev_norm, abs(
                    traj.znorm2_emp[i] - (traj.mu_se[i] ** 2 + traj.mu_se[i])))
            if req.linearize_d:
                n_lin = int(round(dv * req.linearize_d))
                ens_l = sample_gaussian_ensemble(n_lin, req.linearize_d, "real", rng)
                x_l = sample_signal(req.linearize_d, "real", rng)
                mset_l = measure(ens_l, x_l, ch, rng)
                lm = linearized_model(ens_l, mset_l.y, marg, delta_u=du)
                lin_tops.append(lm.top_eig)
                lin_imag = max(lin_imag, lm.max_imag)

    csv_path = None
    if req.out_prefix:
        csv_path = f"{req.out_prefix}_amp.csv"
        with open(csv_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].model_dump()))
            writer.writeheader()
            for r in rows:
                writer.writerow(r.model_dump())
    return AmpResponse(config_hash=chash, delta_u=du, rows=rows,
                       max_abs_dev_mu=dev_mu, max_abs_dev_norm=dev_norm,
                       se_slope=se_slope, linearized_top=lin_tops,
                       linearized_max_imag=lin_imag, csv_path=csv_path,
                       runtime_s=time.perf_counter() - t0)


# ----------------------------------------------------------------------------
# spike check
# ----------------------------------------------------------------------------

def run_spike_check(req: SpikeCheckRequest) -> SpikeCheckResponse:
    t0 = time.perf_counter()
    atoms = np.asarray(req.atoms, dtype=float)
    weights = (np.full(atoms.size, 1.0 / atoms.size) if req.weights is None
               else np.asarray(req.weights, dtype=float))
    if weights.size != atoms.size or abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError("weights must match atoms and sum to 1")
    predicted = spike_map(atoms, weights, req.delta, req.alpha)
    from .rmt import SpectralFunctions
    from .preprocess import ZLaw
    law = ZLaw(z=atoms, p=weights, q=weights, tau=float(atoms.max()))
    psi_pos = SpectralFunctions(law, req.delta).psi_prime(req.alpha) > 0

    d = req.d if req.d is not None else int(round(req.n / req.delta))
    n = req.n
    # bulk entries of M_n follow H; one planted eigenvalue sits at alpha
    counts = np.floor(weights * (n - 1)).astype(int)
    while counts.sum() < n - 1:
        counts[int(np.argmax(weights * (n - 1) - counts))] += 1
    mdiag = np.concatenate([[req.alpha]] + [np.full(c, a) for a, c
                                            in zip(atoms, counts)])
    sims = []
    for trial in range(req.trials):
        rng = np.random.default_rng(np.random.SeedSequence([req.seed, trial]))
        U = (rng.standard_normal((d - 1, n), dtype=np.float32)
             + 1j * rng.standard_normal((d - 1, n), dtype=np.float32)) \
            .astype(np.complex64) / np.sqrt(2.0, dtype=np.float32)
        S = (U * mdiag.astype(np.complex64)) @ U.conj().T / n
        S = (S + S.conj().T) / 2.0
        sims.append(float(np.linalg.eigvalsh(S)[-1]))
    return SpikeCheckResponse(predicted_lam1=predicted, simulated_lam1=sims,
                              mean_simulated=float(np.mean(sims)),
                              psi_prime_positive=bool(psi_pos),
                              runtime_s=time.perf_counter() - t0)


# ----------------------------------------------------------------------------
# coded diffraction demo
# ----------------------------------------------------------------------------

def synthetic_gradient(size: int) -> np.ndarray:
    """Smooth test image: diagonal ramp with a soft circular bump."""
    i, j = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    img = i + j + 0.004 * size * size * np.exp(
        -((i - size / 2) ** 2 + (j - size / 2) ** 2) / (2 * (size / 5.0) ** 2))
    return img.astype(float)


def run_cdp_demo(req: CdpDemoRequest) -> CdpDemoResponse:
    t0 = time.perf_counter()
    chash = config_hash(req)
    if req.image.startswith("synthetic-gradient:"):
        size = int(req.image.split(":")[1])
        img = synthetic_gradient(size)
    else:
        img = read_pgm(req.image)
    d1, d2 = img.shape
    if d1 * d2 > 2 ** 22:
        raise ValueError("image too large (d > 2^22)")
    sig = signal_from_image(img, field="complex")
    ch = phase_retrieval(req.sigma2, "complex")
    rng = np.random.default_rng(np.random.SeedSequence([req.seed]))
    ens = sample_cdp_ensemble(req.L, d1, d2, rng)
    mset = measure(ens, sig, ch, rng)
    spec, _ = resolve_preprocess(req.preprocess, "complex",
                                 default_clamp=CDP_CLAMP)
    tvals = spec.apply(mset.y)
    op = make_operator(ens, tvals, scaled=True)
    est = power_method(op, ens.d, req.alpha, rng, tol=1e-7, max_iter=10000,
                       complex_field=True)
    ov = overlap(est.xhat, sig.x)
    out_path = None
    if req.out_image:
        phase = np.exp(-1j * np.angle(np.vdot(sig.x, est.xhat)))
        aligned = np.real(est.xhat * phase).reshape(d1, d2)
        write_pgm(req.out_image, aligned)
        out_path = req.out_image
    return CdpDemoResponse(config_hash=chash, seed=req.seed, d1=d1, d2=d2,
                           L=req.L, overlap2=ov * ov, eigval=est.eigval,
                           iters=est.iters, converged=est.converged,
                           out_image=out_path,
                           runtime_s=time.perf_counter() - t0)
