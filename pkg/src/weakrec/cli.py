"""Command-line client.

Each subcommand builds the same pydantic request the HTTP service accepts and
either executes it in-process (default) or POSTs it to a running service via
--server.  A JSON config file can seed any request; explicit flags override
its entries.  WEAKREC_SEED provides the default seed.
"""

import json
import math
import sys

import click

from .service import models as m

TASK_PATHS = {
    "thresholds": "/v1/thresholds",
    "predict": "/v1/predict",
    "simulate": "/v1/simulate",
    "amp": "/v1/amp",
    "spike-check": "/v1/spike-check",
    "cdp-demo": "/v1/cdp-demo",
}


def _execute(ctx, task: str, request):
    server = ctx.obj.get("server")
    if server:
        import httpx
        resp = httpx.post(server.rstrip("/") + TASK_PATHS[task],
                          json=request.model_dump(), timeout=None)
        if resp.status_code != 200:
            raise click.ClickException(f"server error {resp.status_code}: {resp.text}")
        return resp.json()
    from . import harness
    runner = {
        "thresholds": harness.run_thresholds,
        "predict": harness.run_predict,
        "simulate": harness.run_simulate,
        "amp": harness.run_amp,
        "spike-check": harness.run_spike_check,
        "cdp-demo": harness.run_cdp_demo,
    }[task]
    try:
        return runner(request).model_dump()
    except (ValueError, FileNotFoundError) as exc:
        raise click.ClickException(str(exc)) from exc


def _merged(ctx, overrides: dict) -> dict:
    base = dict(ctx.obj.get("config") or {})
    base.update({k: v for k, v in overrides.items() if v is not None})
    return base


def _preprocess_params(kind, pre_delta, t, clamp, table):
    out = {}
    if kind is not None:
        out["kind"] = kind
    if pre_delta is not None:
        out["delta"] = pre_delta
    if t is not None:
        out["t"] = t
    if clamp is not None:
        out["M"] = clamp
    if table is not None:
        out["table_path"] = table
    return out or None


def _emit(payload: dict):
    click.echo(json.dumps(payload, indent=1, default=str))


@click.group()
@click.option("--server", default=None, metavar="URL",
              help="POST requests to a running weakrec service instead of "
                   "executing locally.")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True),
              help="JSON file with request fields; flags override its entries.")
@click.pass_context
def main(ctx, server, config_path):
    """Weak-recovery toolkit: thresholds, spectral predictions, simulations,
    AMP cross-checks and coded-diffraction demos."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server
    ctx.obj["config"] = None
    if config_path:
        with open(config_path) as fh:
            ctx.obj["config"] = json.load(fh)


channel_opts = [
    click.option("--field", type=click.Choice(["real", "complex"]), default=None),
    click.option("--sigma2", type=float, default=None),
    click.option("--channel", "channel_kind",
                 type=click.Choice(["phase-retrieval", "gap-example",
                                    "custom-table"]), default=None),
    click.option("--channel-csv", default=None,
                 help="CSV (g, y, p) for a custom-table channel."),
]

preprocess_opts = [
    click.option("--preprocess", "pre_kind",
                 type=click.Choice(["optimal", "optimal-delta", "optimal-pr",
                                    "optimal-pr-positive", "optimal-clamped",
                                    "trimming", "subset", "custom"]),
                 default=None),
    click.option("--pre-delta", type=float, default=None,
                 help="Matched ratio for optimal-pr / optimal-delta presets."),
    click.option("--threshold", "-t", "t_value", type=float, default=None,
                 help="Threshold for trimming/subset presets."),
    click.option("--clamp", type=float, default=None,
                 help="Clamp level M (0 disables clamping)."),
    click.option("--pre-table", default=None, help="CSV (y, T(y)) custom table."),
]


def add_options(opts):
    def deco(fn):
        for opt in reversed(opts):
            fn = opt(fn)
        return fn
    return deco


def _channel_dict(field, sigma2, channel_kind, channel_csv):
    ch = {}
    if channel_kind is not None:
        ch["kind"] = channel_kind
    if sigma2 is not None:
        ch["sigma2"] = sigma2
    if channel_csv is not None:
        ch["csv_path"] = channel_csv
    return ch or None


@main.command()
@add_options(channel_opts)
@click.option("--n-m", type=int, default=None, help="m-grid size for delta_l.")
@click.pass_context
def thresholds(ctx, field, sigma2, channel_kind, channel_csv, n_m):
    """Information-theoretic and spectral weak-recovery thresholds."""
    body = _merged(ctx, {"field": field, "n_m": n_m,
                         "channel": _channel_dict(field, sigma2, channel_kind,
                                                  channel_csv)})
    _emit(_execute(ctx, "thresholds", m.ThresholdsRequest(**body)))


@main.command()
@add_options(channel_opts)
@add_options(preprocess_opts)
@click.option("--delta", "deltas", default=None,
              help="Grid 'start:stop:step' or comma list.")
@click.pass_context
def predict(ctx, field, sigma2, channel_kind, channel_csv, pre_kind, pre_delta,
            t_value, clamp, pre_table, deltas):
    """Asymptotic overlap and eigenvalue predictions over a delta grid."""
    if deltas is not None and ":" not in deltas:
        deltas = [float(v) for v in deltas.split(",")]
    body = _merged(ctx, {
        "field": field, "deltas": deltas,
        "channel": _channel_dict(field, sigma2, channel_kind, channel_csv),
        "preprocess": _preprocess_params(pre_kind, pre_delta, t_value, clamp,
                                         pre_table)})
    _emit(_execute(ctx, "predict", m.PredictRequest(**body)))


@main.command()
@add_options(channel_opts)
@add_options(preprocess_opts)
@click.option("--delta", "deltas", default=None,
              help="Grid 'start:stop:step' or comma list.")
@click.option("--d", type=int, default=None)
@click.option("--trials", type=int, default=None)
@click.option("--seed", type=int, default=None, envvar="WEAKREC_SEED")
@click.option("--engine", type=click.Choice(["auto", "power", "chebyshev",
                                             "dense"]), default=None)
@click.option("--max-iter", type=int, default=None)
@click.option("--workers", type=int, default=None)
@click.option("--record-eigs", is_flag=True, default=None)
@click.option("--out", "out_prefix", default=None,
              help="Prefix for the records CSV and summary JSON.")
@click.pass_context
def simulate(ctx, field, sigma2, channel_kind, channel_csv, pre_kind, pre_delta,
             t_value, clamp, pre_table, deltas, d, trials, seed, engine,
             max_iter, workers, record_eigs, out_prefix):
    """Monte Carlo sweep of the spectral estimator against predictions."""
    if deltas is not None and ":" not in deltas:
        deltas = [float(v) for v in deltas.split(",")]
    body = _merged(ctx, {
        "field": field, "deltas": deltas, "d": d, "trials": trials,
        "seed": seed, "engine": engine, "max_iter": max_iter,
        "workers": workers, "record_eigs": record_eigs,
        "out_prefix": out_prefix,
        "channel": _channel_dict(field, sigma2, channel_kind, channel_csv),
        "preprocess": _preprocess_params(pre_kind, pre_delta, t_value, clamp,
                                         pre_table)})
    out = _execute(ctx, "simulate", m.SimulateRequest(**body))
    out.pop("records", None)   # keep stdout compact; the CSV has every trial
    _emit(out)


@main.command()
@click.option("--sigma2", type=float, default=None)
@click.option("--delta", "deltas", default=None,
              help="Grid 'start:stop:step' or comma list.")
@click.option("--delta-units", type=click.Choice(["absolute", "delta_u"]),
              default=None)
@click.option("--d", type=int, default=None)
@click.option("--trials", type=int, default=None)
@click.option("--t-max", type=int, default=None)
@click.option("--mu0", type=float, default=None)
@click.option("--seed", type=int, default=None, envvar="WEAKREC_SEED")
@click.option("--linearize-d", type=int, default=None,
              help="Also run the linearized stability analysis at this d.")
@click.option("--out", "out_prefix", default=None)
@click.pass_context
def amp(ctx, sigma2, deltas, delta_units, d, trials, t_max, mu0, seed,
        linearize_d, out_prefix):
    """AMP trajectories against state evolution, plus stability diagnostics."""
    if deltas is not None and ":" not in deltas:
        deltas = [float(v) for v in deltas.split(",")]
    body = _merged(ctx, {"sigma2": sigma2, "deltas": deltas,
                         "delta_units": delta_units, "d": d, "trials": trials,
                         "t_max": t_max, "mu0": mu0, "seed": seed,
                         "linearize_d": linearize_d, "out_prefix": out_prefix})
    out = _execute(ctx, "amp", m.AmpRequest(**body))
    out.pop("rows", None)
    _emit(out)


@main.command("spike-check")
@click.option("--law", default=None,
              help="two-atom:z1,z2[:w1] or comma-separated atom list.")
@click.option("--weights", default=None, help="Comma-separated weights.")
@click.option("--delta", type=float, default=None)
@click.option("--alpha", type=float, default=None,
              help="Planted top eigenvalue of the weight matrix.")
@click.option("--n", type=int, default=None)
@click.option("--d", type=int, default=None)
@click.option("--trials", type=int, default=None)
@click.option("--seed", type=int, default=None, envvar="WEAKREC_SEED")
@click.pass_context
def spike_check(ctx, law, weights, delta, alpha, n, d, trials, seed):
    """Simulated vs predicted top eigenvalue for non-PSD weight matrices."""
    atoms = wts = None
    if law is not None:
        if law.startswith("two-atom:"):
            parts = law.split(":")
            atoms = [float(v) for v in parts[1].split(",")]
            if len(parts) > 2:
                w1 = float(parts[2])
                wts = [w1, 1.0 - w1]
        else:
            atoms = [float(v) for v in law.split(",")]
    if weights is not None:
        wts = [float(v) for v in weights.split(",")]
    body = _merged(ctx, {"atoms": atoms, "weights": wts, "delta": delta,
                         "alpha": alpha, "n": n, "d": d, "trials": trials,
                         "seed": seed})
    _emit(_execute(ctx, "spike-check", m.SpikeCheckRequest(**body)))


@main.command("cdp-demo")
@click.option("--image", default=None,
              help="PGM (P5) path or synthetic-gradient:SIZE.")
@click.option("--views", "-L", "L", type=int, default=None,
              help="Number of modulated views (delta = L).")
@click.option("--sigma2", type=float, default=None)
@add_options(preprocess_opts)
@click.option("--alpha", type=float, default=None, help="Power-method shift.")
@click.option("--seed", type=int, default=None, envvar="WEAKREC_SEED")
@click.option("--out-image", default=None, help="Write the aligned estimate here.")
@click.pass_context
def cdp_demo(ctx, image, L, sigma2, pre_kind, pre_delta, t_value, clamp,
             pre_table, alpha, seed, out_image):
    """Spectral recovery of an image from coded diffraction patterns."""
    body = _merged(ctx, {
        "image": image, "L": L, "sigma2": sigma2, "alpha": alpha, "seed": seed,
        "out_image": out_image,
        "preprocess": _preprocess_params(pre_kind, pre_delta, t_value, clamp,
                                         pre_table)})
    _emit(_execute(ctx, "cdp-demo", m.CdpDemoRequest(**body)))


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Run the HTTP service (requires uvicorn)."""
    try:
        import uvicorn
    except ImportError:
        click.echo("uvicorn is not installed; pip install weakrec[serve]",
                   err=True)
        sys.exit(1)
    uvicorn.run("weakrec.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
