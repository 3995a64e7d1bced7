#!/usr/bin/env python3
"""
Run configuration, orchestration, parameter sweeps and persistence

A run directory holds:
    manifest.json           config echo, tool version, termination, file checksums
    diagnostics.csv         one DiagnosticsRecord per output time
    snapshots/index.csv     snapshot number -> time
    snapshots/snap_NNNN.csv x plus one column per state field
    plots/                  written by plotting.emit_plots
"""

import hashlib
import itertools
import json
import logging
import math
import shutil
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import toml
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from diagnostics import collect_record
from errors import ConfigError, IntegrationFailure, OddWavesError, RunIOError, UsageError
from models import ModelKind, ModelParams, WaveState
from settings import TOOL_VERSION, get_settings
from spectral_core import FourierGrid, SpectralField, random_field
from timestepper import StepControl, integrate, make_rhs, make_sup_norm

# Setup logging
logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
DIAGNOSTICS_FILE = "diagnostics.csv"
SNAPSHOT_DIR = "snapshots"
SNAPSHOT_INDEX = "index.csv"
FLOAT_FORMAT = "%.17g"
SWEEP_AXES = ("epsilon", "alpha_o", "beta", "mu", "amplitude")


class InitialTerm(BaseModel):
    kind: Literal["sine", "cosine"]
    wavenumber: int
    amplitude: float


class RandomData(BaseModel):
    n_modes: int = Field(ge=1)
    amplitude: float = 1.0
    seed: int = 0


class RunConfig(BaseModel):
    """Everything needed to reproduce one run; every default is echoed into the manifest"""

    run_id: str = "run"
    model: ModelKind = ModelKind.UNIDIRECTIONAL_U
    params: ModelParams = Field(default_factory=ModelParams)
    grid: FourierGrid
    initial_data: List[InitialTerm] = Field(default_factory=list)
    random_data: Optional[RandomData] = None
    initial_velocity: List[InitialTerm] = Field(default_factory=list)
    t_final: float = Field(gt=0.0)
    output_stride: float = Field(default=0.1, gt=0.0)
    step_control: StepControl = Field(default_factory=StepControl)

    @model_validator(mode="before")
    @classmethod
    def inject_model(cls, data: Any) -> Any:
        # the top-level model selector is the single source for params.model
        if isinstance(data, dict):
            data = dict(data)
            params = dict(data.get("params") or {})
            params["model"] = data.get("model", params.get("model", ModelKind.UNIDIRECTIONAL_U))
            data["params"] = params
        return data

    @field_validator("run_id")
    @classmethod
    def validate_run_id(cls, v: str) -> str:
        if not v or any(c in v for c in "/\\") or v in (".", ".."):
            raise ValueError(f"run_id must be a plain directory name, got '{v}'")
        return v

    @model_validator(mode="after")
    def check_initial_data(self) -> "RunConfig":
        half = self.grid.n_points // 2
        for name in ("initial_data", "initial_velocity"):
            for term in getattr(self, name):
                if abs(term.wavenumber) >= half:
                    raise ValueError(
                        f"{name} wavenumber {term.wavenumber} is outside the grid band (n_points={self.grid.n_points})"
                    )
        if self.random_data is not None and self.random_data.n_modes > self.grid.band_limit:
            raise ValueError(f"random_data.n_modes must be <= {self.grid.band_limit} for this grid")
        if self.initial_velocity and not self.model.is_bidirectional:
            raise ValueError("initial_velocity is only used by bidirectional models")
        if self.model == ModelKind.UNIDIRECTIONAL_U:
            for term in self.initial_data:
                if term.kind == "cosine" and term.wavenumber == 0 and term.amplitude != 0:
                    raise ValueError("unidirectional_u data must be mean-zero")
        return self


class RunManifest(BaseModel):
    run_id: str
    tool_version: str = TOOL_VERSION
    config: Dict[str, Any]
    wall_time: float
    termination: Literal["completed", "blow-up", "step-limit"]
    failure_time: Optional[float] = None
    message: Optional[str] = None
    n_records: int
    steps_accepted: int
    steps_rejected: int
    rhs_evaluations: int
    files: Dict[str, str] = Field(default_factory=dict)

    @property
    def completed(self) -> bool:
        return self.termination == "completed"


def _validation_to_config_error(e: ValidationError, line: Optional[int] = None) -> ConfigError:
    err = e.errors()[0]
    path = ".".join(str(p) for p in err["loc"])
    return ConfigError(err["msg"], field=path or None, line=line)


def load_config(path: Union[str, Path]) -> RunConfig:
    """Parse and validate a TOML run configuration"""
    path = Path(path)
    if not path.is_file():
        raise RunIOError(f"config file not found: {path}")
    try:
        data = toml.load(path)
    except toml.TomlDecodeError as e:
        raise ConfigError(f"cannot parse {path.name}: {e.msg}", line=e.lineno) from None
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        raise _validation_to_config_error(e) from None
    logger.info("Loaded config %s (model=%s, n_points=%d)", path, config.model.value, config.grid.n_points)
    return config


def initial_state(config: RunConfig) -> Union[SpectralField, WaveState]:
    grid = config.grid
    f = SpectralField.from_terms(grid, [(t.kind, t.wavenumber, t.amplitude) for t in config.initial_data])
    if config.random_data is not None:
        rd = config.random_data
        f = f + random_field(grid, rd.n_modes, amplitude=rd.amplitude, seed=rd.seed)
    if not config.model.is_bidirectional:
        return f
    f_t = SpectralField.from_terms(grid, [(t.kind, t.wavenumber, t.amplitude) for t in config.initial_velocity])
    return WaveState(f, f_t)


def _pack(x: Union[SpectralField, WaveState]) -> np.ndarray:
    return x.pack() if isinstance(x, WaveState) else x.coefficients.copy()


def _unpack(config: RunConfig, y: np.ndarray) -> Union[SpectralField, WaveState]:
    if config.model.is_bidirectional:
        return WaveState.unpack(config.grid, y)
    return SpectralField(config.grid, y)


def _snapshot_frame(config: RunConfig, x: Union[SpectralField, WaveState]) -> pd.DataFrame:
    frame = {"x": config.grid.points}
    if isinstance(x, WaveState):
        frame["f"] = x.f.values
        frame["f_t"] = x.f_t.values
    elif config.model == ModelKind.UNIDIRECTIONAL_U:
        frame["u"] = x.values
    else:
        frame["f"] = x.values
    return pd.DataFrame(frame)


def output_times(t_final: float, stride: float) -> np.ndarray:
    n_out = max(1, math.ceil(t_final / stride - 1e-9))
    return np.minimum(np.arange(n_out + 1) * stride, t_final)


def file_checksum(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_simulation(config: RunConfig, output_root: Optional[Union[str, Path]] = None) -> RunManifest:
    """Integrate one configuration, writing diagnostics, snapshots and the manifest

    Integration failures do not raise: the artifacts up to the last good output
    time are written and the manifest records the termination reason.
    """
    root = Path(output_root) if output_root is not None else get_settings().output_root
    run_dir = root / config.run_id
    snap_dir = run_dir / SNAPSHOT_DIR
    try:
        snap_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise RunIOError(f"cannot create run directory {run_dir}: {e}") from None

    logger.info("🚀 Starting run %s (%s, t_final=%g)", config.run_id, config.model.value, config.t_final)
    started = time.perf_counter()
    params, grid, ctrl = config.params, config.grid, config.step_control
    rhs = make_rhs(params, grid)
    sup_norm = make_sup_norm(grid)
    state = initial_state(config)
    y = _pack(state)

    records = [collect_record(state, 0.0, params).to_row()]
    snapshots = [(0, 0.0)]
    _snapshot_frame(config, state).to_csv(snap_dir / "snap_0000.csv", index=False, float_format=FLOAT_FORMAT)

    termination, failure_time, message = "completed", None, None
    accepted = rejected = n_rhs = 0
    times = output_times(config.t_final, config.output_stride)
    for i, (t_prev, t_next) in enumerate(zip(times[:-1], times[1:]), start=1):
        try:
            result = integrate(rhs, y, (float(t_prev), float(t_next)), ctrl, norm=sup_norm)
        except IntegrationFailure as e:
            termination, failure_time, message = e.reason, e.time, str(e)
            logger.warning("⚠️ Run %s stopped: %s", config.run_id, e)
            break
        y = result.y
        accepted += len(result.steps)
        rejected += result.n_rejected
        n_rhs += result.n_rhs
        state = _unpack(config, y)
        records.append(collect_record(state, float(t_next), params).to_row())
        snapshots.append((i, float(t_next)))
        _snapshot_frame(config, state).to_csv(snap_dir / f"snap_{i:04d}.csv", index=False, float_format=FLOAT_FORMAT)

    pd.DataFrame(records).to_csv(run_dir / DIAGNOSTICS_FILE, index=False, float_format=FLOAT_FORMAT)
    pd.DataFrame(snapshots, columns=["snapshot", "t"]).to_csv(
        snap_dir / SNAPSHOT_INDEX, index=False, float_format=FLOAT_FORMAT
    )

    files = {DIAGNOSTICS_FILE: file_checksum(run_dir / DIAGNOSTICS_FILE)}
    for path in sorted(snap_dir.glob("*.csv")):
        files[f"{SNAPSHOT_DIR}/{path.name}"] = file_checksum(path)

    manifest = RunManifest(
        run_id=config.run_id,
        config=config.model_dump(mode="json"),
        wall_time=time.perf_counter() - started,
        termination=termination,
        failure_time=failure_time,
        message=message,
        n_records=len(records),
        steps_accepted=accepted,
        steps_rejected=rejected,
        rhs_evaluations=n_rhs,
        files=files,
    )
    (run_dir / MANIFEST_FILE).write_text(manifest.model_dump_json(indent=2))
    logger.info(
        "✅ Run %s %s: %d records, %d steps (%d rejected) in %.2fs",
        config.run_id, termination, len(records), accepted, rejected, manifest.wall_time,
    )
    return manifest


def load_manifest(run_dir: Union[str, Path]) -> RunManifest:
    path = Path(run_dir) / MANIFEST_FILE
    if not path.is_file():
        raise RunIOError(f"no manifest in {run_dir}")
    try:
        return RunManifest.model_validate_json(path.read_text())
    except ValidationError as e:
        raise RunIOError(f"unreadable manifest {path}: {e.errors()[0]['msg']}") from None


def verify_manifest(run_dir: Union[str, Path]) -> List[str]:
    """Files listed in the manifest that are missing or fail their checksum"""
    run_dir = Path(run_dir)
    manifest = load_manifest(run_dir)
    problems = []
    for name, digest in manifest.files.items():
        path = run_dir / name
        if not path.is_file():
            problems.append(f"missing: {name}")
        elif file_checksum(path) != digest:
            problems.append(f"checksum mismatch: {name}")
    return problems


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def parse_axis(spec: str) -> Tuple[str, List[float]]:
    """'name=v1,v2,...' -> (name, [v1, v2, ...])"""
    name, sep, values = spec.partition("=")
    name = name.strip()
    if not sep or not values.strip():
        raise UsageError(f"axis must look like name=v1,v2,... got '{spec}'")
    if name not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis '{name}' (choose from {', '.join(SWEEP_AXES)})", field="axis")
    try:
        return name, [float(v) for v in values.split(",")]
    except ValueError:
        raise ConfigError(f"axis values must be numbers, got '{values}'", field=name) from None


def _point_config(base: RunConfig, point: Dict[str, float], index: int) -> Dict[str, Any]:
    data = base.model_dump(mode="json")
    data["run_id"] = f"point_{index:03d}"
    for name, value in point.items():
        if name == "amplitude":
            for key in ("initial_data", "initial_velocity"):
                for term in data[key]:
                    term["amplitude"] *= value
            if data["random_data"] is not None:
                data["random_data"]["amplitude"] *= value
        else:
            data["params"][name] = value
    return data


def _run_point(data: Dict[str, Any], root: str) -> Dict[str, Any]:
    """Sweep worker; every failure is reported, never raised"""
    try:
        config = RunConfig.model_validate(data)
        manifest = run_simulation(config, root)
        return {"termination": manifest.termination, "failure_time": manifest.failure_time, "message": manifest.message}
    except ValidationError as e:
        return {"termination": "config-error", "failure_time": None, "message": str(_validation_to_config_error(e))}
    except OddWavesError as e:
        return {"termination": "error", "failure_time": None, "message": str(e)}
    except Exception as e:
        logger.exception("❌ Sweep point %s failed", data.get("run_id"))
        return {"termination": "error", "failure_time": None, "message": f"{type(e).__name__}: {e}"}


def _matches_point(manifest: RunManifest, data: Dict[str, Any]) -> bool:
    """True when a stored run was made from exactly this point's configuration"""
    try:
        expected = RunConfig.model_validate(data).model_dump(mode="json")
    except ValidationError:
        return False
    return json.loads(json.dumps(expected)) == manifest.config


def run_sweep(
    base: RunConfig,
    axes: Dict[str, Sequence[float]],
    output_root: Optional[Union[str, Path]] = None,
    workers: Optional[int] = None,
) -> pd.DataFrame:
    """Run the Cartesian product of the axes; points with a manifest already on disk are reused"""
    settings = get_settings()
    for name in axes:
        if name not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis '{name}'", field="axis")
    names = list(axes)
    points = [dict(zip(names, combo)) for combo in itertools.product(*(axes[n] for n in names))]
    if len(points) > settings.sweep_cap:
        raise ConfigError(f"sweep has {len(points)} points, above the cap of {settings.sweep_cap}", field="axis")

    root = (Path(output_root) if output_root is not None else settings.output_root) / base.run_id
    root.mkdir(parents=True, exist_ok=True)
    workers = workers or settings.workers
    logger.info("📋 Sweep %s: %d points on %d workers", base.run_id, len(points), workers)

    outcomes: Dict[int, Dict[str, Any]] = {}
    pending = []
    for i, point in enumerate(points):
        run_dir = root / f"point_{i:03d}"
        data = _point_config(base, point, i)
        if (run_dir / MANIFEST_FILE).is_file():
            try:
                manifest = load_manifest(run_dir)
            except RunIOError as e:
                logger.warning("⚠️ %s; rerunning %s", e, run_dir.name)
                manifest = None
            if manifest is not None and _matches_point(manifest, data):
                logger.info("Reusing %s (%s)", run_dir.name, manifest.termination)
                outcomes[i] = {"termination": manifest.termination, "failure_time": manifest.failure_time,
                               "message": manifest.message}
                continue
            logger.warning("⚠️ %s was run with a different configuration; rerunning", run_dir.name)
            shutil.rmtree(run_dir)
        pending.append((i, data))

    if workers == 1 or len(pending) <= 1:
        for i, data in pending:
            outcomes[i] = _run_point(data, str(root))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {i: pool.submit(_run_point, data, str(root)) for i, data in pending}
            for i, future in futures.items():
                try:
                    outcomes[i] = future.result()
                except Exception as e:
                    logger.error("❌ Sweep point %03d was lost: %s", i, e)
                    outcomes[i] = {"termination": "error", "failure_time": None, "message": f"{type(e).__name__}: {e}"}

    rows = []
    for i, point in enumerate(points):
        rows.append({"point": i, "run_id": f"point_{i:03d}", **point, **outcomes[i],
                     "manifest": f"point_{i:03d}/{MANIFEST_FILE}"})
    index = pd.DataFrame(rows)
    index.to_csv(root / "sweep_index.csv", index=False, float_format=FLOAT_FORMAT)
    (root / "sweep_index.json").write_text(json.dumps(rows, indent=2))
    failed = int((index["termination"] != "completed").sum())
    logger.info("✅ Sweep %s finished: %d completed, %d not completed", base.run_id, len(points) - failed, failed)
    return index
