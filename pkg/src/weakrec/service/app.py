"""FastAPI service exposing the harness tasks over HTTP."""

from fastapi import FastAPI, HTTPException

from .models import (AmpRequest, AmpResponse, CdpDemoRequest, CdpDemoResponse,
                     PredictRequest, PredictResponse, SimulateRequest,
                     SimulateResponse, SpikeCheckRequest, SpikeCheckResponse,
                     ThresholdsRequest, ThresholdsResponse)


def create_app() -> FastAPI:
    from .. import harness

    app = FastAPI(title="weakrec", version="0.1.0",
                  description="Weak-recovery thresholds, spectral-method "
                              "predictions and simulations for generalized "
                              "linear measurements")

    def guarded(fn, req):
        try:
            return fn(req)
        except (ValueError, FileNotFoundError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.get("/v1/health")
    def health():
        return {"status": "ok"}

    @app.post("/v1/thresholds", response_model=ThresholdsResponse)
    def thresholds(req: ThresholdsRequest):
        return guarded(harness.run_thresholds, req)

    @app.post("/v1/predict", response_model=PredictResponse)
    def predict(req: PredictRequest):
        return guarded(harness.run_predict, req)

    @app.post("/v1/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest):
        return guarded(harness.run_simulate, req)

    @app.post("/v1/amp", response_model=AmpResponse)
    def amp(req: AmpRequest):
        return guarded(harness.run_amp, req)

    @app.post("/v1/spike-check", response_model=SpikeCheckResponse)
    def spike_check(req: SpikeCheckRequest):
        return guarded(harness.run_spike_check, req)

    @app.post("/v1/cdp-demo", response_model=CdpDemoResponse)
    def cdp_demo(req: CdpDemoRequest):
        return guarded(harness.run_cdp_demo, req)

    return app


app = create_app()
