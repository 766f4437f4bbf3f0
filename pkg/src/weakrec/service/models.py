"""Request/response schemas shared by the HTTP service, the CLI and the harness."""

from typing import Literal, Optional, Union

from pydantic import BaseModel, Field, field_validator

SCHEMA_VERSION = 1

FieldMode = Literal["real", "complex"]
ChannelKind = Literal["phase-retrieval", "gap-example", "custom-table"]
PreprocessKind = Literal[
    "optimal", "optimal-delta", "optimal-pr", "optimal-pr-positive",
    "optimal-clamped", "trimming", "subset", "custom",
]
Engine = Literal["auto", "power", "chebyshev", "dense"]


def parse_delta_grid(spec: Union[str, list[float]]) -> list[float]:
    """Accept an explicit list or a 'start:stop:step' string (stop inclusive)."""
    if isinstance(spec, list):
        vals = [float(v) for v in spec]
    else:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError("delta grid must be 'start:stop:step' or a list")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("delta grid step must be positive")
        n = int(round((stop - start) / step)) + 1
        vals = [round(start + i * step, 12) for i in range(n) if start + i * step <= stop + 1e-9]
    if not vals or any(v <= 0 for v in vals):
        raise ValueError("delta grid must contain positive values")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ValueError("delta grid must be strictly increasing")
    return vals


class ChannelParams(BaseModel):
    kind: ChannelKind = "phase-retrieval"
    sigma2: float = Field(default=0.0, ge=0.0)
    csv_path: Optional[str] = None   # custom-table source


class PreprocessParams(BaseModel):
    kind: PreprocessKind = "optimal-pr"
    delta: Optional[float] = None    # matched ratio for optimal-pr/optimal-delta
    t: Optional[float] = None        # threshold for trimming/subset
    M: Optional[float] = None        # clamp level; 0 disables clamping
    table_path: Optional[str] = None


class ThresholdsRequest(BaseModel):
    field: FieldMode = "complex"
    channel: ChannelParams = ChannelParams()
    n_m: int = Field(default=2000, ge=16)


class ThresholdsResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    field: FieldMode
    sigma2: float
    delta_l: Union[float, Literal["inf"]]
    delta_u: Union[float, Literal["inf"]]
    runtime_s: float


class PredictRequest(BaseModel):
    field: FieldMode = "complex"
    channel: ChannelParams = ChannelParams()
    preprocess: PreprocessParams = PreprocessParams()
    deltas: Union[str, list[float]] = "1.1:6:0.5"

    @field_validator("deltas")
    @classmethod
    def _grid_ok(cls, v):
        parse_delta_grid(v)
        return v


class PredictionRow(BaseModel):
    delta: float
    rho2: float
    lambda_bar: float
    lambda_star: Optional[float]
    lam1: float
    lam2: float
    informative: bool
    hplemma_ok: bool


class PredictResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    rows: list[PredictionRow]
    preprocess_kind: str
    resolved_clamp: Optional[float]
    runtime_s: float


class SimulateRequest(PredictRequest):
    d: int = Field(default=4096, ge=8)
    trials: int = Field(default=40, ge=1)
    seed: int = 0
    engine: Engine = "auto"
    max_iter: int = Field(default=10000, ge=1)
    tol: float = 1e-7
    workers: int = Field(default=1, ge=1)
    out_prefix: Optional[str] = None
    record_eigs: bool = False        # dense second-eigenvalue tracking


class TrialRecord(BaseModel):
    schema_version: int = SCHEMA_VERSION
    config_hash: str
    seed: int
    trial: int
    delta: float
    d: int
    n: int
    overlap2: float
    eigval1: Optional[float]
    eigval2: Optional[float]
    iters: int
    converged: bool
    engine: str
    runtime_ms: float
    pred_rho2: float
    pred_lam1: float
    pred_lam2: float


class SimulateSummaryRow(BaseModel):
    delta: float
    n: int
    trials: int
    mean_overlap2: float
    stderr_overlap2: float
    pred_rho2: float
    pred_lam1: float
    pred_lam2: float
    mean_eigval1: Optional[float]
    mean_eigval2: Optional[float]


class SimulateResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    config_hash: str
    summary: list[SimulateSummaryRow]
    records: list[TrialRecord]
    csv_path: Optional[str]
    json_path: Optional[str]
    runtime_s: float


class AmpRequest(BaseModel):
    sigma2: float = Field(default=0.3, gt=0.0)
    deltas: Union[str, list[float]] = [0.35, 0.75]
    delta_units: Literal["absolute", "delta_u"] = "absolute"
    d: int = Field(default=4096, ge=16)
    trials: int = Field(default=1, ge=1)
    t_max: int = Field(default=10, ge=1)
    mu0: float = Field(default=0.1, gt=0.0)
    seed: int = 0
    linearize_d: Optional[int] = None   # also run the linearized analysis at this d
    out_prefix: Optional[str] = None


class AmpTrajectoryRow(BaseModel):
    delta: float
    trial: int
    t: int
    mu_se: float
    q_se: float
    overlap_emp: float
    znorm2_emp: float
    zhatnorm2_emp: Optional[float]


class AmpResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    config_hash: str
    delta_u: float
    rows: list[AmpTrajectoryRow]
    max_abs_dev_mu: float
    max_abs_dev_norm: float
    se_slope: float                  # measured d mu_1 / d q_0 near 0
    linearized_top: Optional[list[float]]
    linearized_max_imag: Optional[float]
    csv_path: Optional[str]
    runtime_s: float


class SpikeCheckRequest(BaseModel):
    atoms: list[float] = [1.0, -0.5]
    weights: Optional[list[float]] = None   # defaults to equal weights
    delta: float = Field(default=2.0, gt=0.0)
    alpha: float = 1.5                       # planted top eigenvalue of M_n
    n: int = Field(default=2000, ge=16)
    d: Optional[int] = None                  # defaults to round(n / delta)
    trials: int = Field(default=1, ge=1)
    seed: int = 0


class SpikeCheckResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    predicted_lam1: float
    simulated_lam1: list[float]
    mean_simulated: float
    psi_prime_positive: bool
    runtime_s: float


class CdpDemoRequest(BaseModel):
    image: str = "synthetic-gradient:64"     # PGM path or synthetic spec
    L: int = Field(default=6, ge=2, le=12)
    sigma2: float = Field(default=0.0, ge=0.0)
    preprocess: PreprocessParams = PreprocessParams(kind="optimal-clamped")
    alpha: float = 100.0
    seed: int = 0
    out_image: Optional[str] = None


class CdpDemoResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    config_hash: str
    seed: int
    d1: int
    d2: int
    L: int
    overlap2: float
    eigval: float
    iters: int
    converged: bool
    out_image: Optional[str]
    runtime_s: float
