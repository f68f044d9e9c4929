"""End-to-end sensitivity experiment.

1. parameter bounds -> 2. eFAST sample matrix -> 3. simulate each row and
score it against the reference with k-means -> 4. sensitivity indices for the
min / mean / max aggregate of the per-frame centroid distance.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from . import rng
from .clustering import EvalSummary, evaluate_run
from .errors import ConfigError, EvaluationError, ExperimentError, ValidationError
from .fast import ParameterSpec, SampleMatrix, SensitivityResult, analyze, efast_samples
from .radar import (
    PARAMETER_BOUNDS,
    DetectionSet,
    RadarConstants,
    RadarParams,
    RcsTable,
    detections_from_hits,
    load_detections,
    save_detections,
)
from .raycast import FanHits, cast_fan_arrays
from .scenario import Pose2D, Scenario, VehicleShape, generate_figure_eight, load_trajectory

log = logging.getLogger(__name__)

__all__ = [
    "ScenarioConfig",
    "ReferenceConfig",
    "ExperimentConfig",
    "RunRecord",
    "ExperimentResult",
    "default_parameters",
    "load_config",
    "build_scenario",
    "scenario_hits",
    "simulate",
    "build_reference",
    "run_experiment",
    "export_plot_data",
    "MODES",
    "MAX_FLAGGED_FRACTION",
]

MODES = ("min", "mean", "max")
MAX_FLAGGED_FRACTION = 0.10


def default_parameters() -> list[ParameterSpec]:
    return [ParameterSpec(name, lo, hi) for name, (lo, hi) in PARAMETER_BOUNDS.items()]


@dataclass(frozen=True)
class ScenarioConfig:
    source: str = "generated"  # "generated" or a trajectory CSV path
    half_length: float = 25.0
    offset: tuple[float, float, float] = (40.0, 0.0, 0.0)
    speed: float = 5.0
    dt: float = 0.2
    target_length: float = 4.5
    target_width: float = 1.8


@dataclass(frozen=True)
class ReferenceConfig:
    source: str = "synthetic"  # "synthetic" or a detection CSV path
    truth: RadarParams = field(default_factory=RadarParams)


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    reference: ReferenceConfig = field(default_factory=ReferenceConfig)
    constants: RadarConstants = field(default_factory=RadarConstants)
    parameters: tuple[ParameterSpec, ...] = field(default_factory=lambda: tuple(default_parameters()))
    ns_per_param: int = 65
    interference: int = 4
    mode: str = "all"
    k: int = 1
    kmeans_seed: int = 0
    seed: int = 0
    workers: int = 1
    output_dir: str = "results"

    def __post_init__(self):
        names = [p.name for p in self.parameters]
        if len(set(names)) != len(names):
            raise ConfigError(f"parameter names must be unique: {names}")
        unknown = set(names) - set(RadarParams.names())
        if unknown:
            raise ConfigError(f"unknown parameters {sorted(unknown)}; choose from {RadarParams.names()}")
        if self.mode not in (*MODES, "all"):
            raise ConfigError(f"mode must be one of min, mean, max, all; got {self.mode!r}")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def modes(self) -> tuple[str, ...]:
        return MODES if self.mode == "all" else (self.mode,)

    def replace(self, **changes) -> "ExperimentConfig":
        return ExperimentConfig(**{**{f.name: getattr(self, f.name) for f in fields(self)}, **changes})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scenario"]["offset"] = list(self.scenario.offset)
        d["parameters"] = [asdict(p) for p in self.parameters]
        table = d["constants"].pop("rcs_table")
        d["constants"]["rcs_table"] = {k: list(v) for k, v in table.items()}
        return d

    @classmethod
    def from_dict(cls, data: dict | None) -> "ExperimentConfig":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            if "scenario" in data:
                sc = dict(data["scenario"])
                if "offset" in sc:
                    sc["offset"] = tuple(float(v) for v in sc["offset"])
                data["scenario"] = ScenarioConfig(**sc)
            if "reference" in data:
                ref = dict(data["reference"])
                if "truth" in ref:
                    ref["truth"] = RadarParams(**ref["truth"])
                data["reference"] = ReferenceConfig(**ref)
            if "constants" in data:
                const = dict(data["constants"])
                if "rcs_table" in const:
                    const["rcs_table"] = RcsTable(**const["rcs_table"])
                data["constants"] = RadarConstants(**const)
            if "parameters" in data:
                data["parameters"] = tuple(
                    ParameterSpec(p["name"], float(p["min"]), float(p["max"])) for p in data["parameters"]
                )
            return cls(**data)
        except (TypeError, KeyError) as exc:
            raise ConfigError(f"malformed config: {exc}") from None


def load_config(path) -> ExperimentConfig:
    """Read a YAML experiment config; absent keys take the defaults."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return ExperimentConfig.from_dict(data)


def build_scenario(config: ExperimentConfig) -> Scenario:
    sc = config.scenario
    shape = VehicleShape(sc.target_length, sc.target_width)
    if sc.source == "generated":
        return generate_figure_eight(sc.half_length, Pose2D(*sc.offset), sc.speed, sc.dt, shape)
    return load_trajectory(sc.source, target_shape=shape)


def scenario_hits(scenario: Scenario, constants: RadarConstants) -> list[FanHits]:
    """Ray-cast geometry per frame. It does not depend on RadarParams, so runs share it."""
    return [
        cast_fan_arrays(f.ego, constants.fov, constants.n_rays, f.target, scenario.target_shape)
        for f in scenario.frames
    ]


def simulate(
    scenario: Scenario,
    hits: list[FanHits],
    params: RadarParams,
    constants: RadarConstants,
    seed: int,
    stream: int,
    run_id: int,
) -> list[DetectionSet]:
    params.validate()
    return [
        detections_from_hits(h, f.t, params, constants, seed, i, stream, run_id)
        for i, (f, h) in enumerate(zip(scenario.frames, hits))
    ]


def build_reference(config: ExperimentConfig, scenario: Scenario | None = None,
                    hits: list[FanHits] | None = None) -> list[DetectionSet]:
    """Reference detections: a recorded CSV, or the truth parameters on the reserved stream."""
    scenario = build_scenario(config) if scenario is None else scenario
    source = config.reference.source
    if source != "synthetic":
        return load_detections(source, frame_times=scenario.times)
    try:
        truth = config.reference.truth.validate()
    except ValidationError as exc:
        raise ValidationError(f"truth parameters: {exc}") from None
    hits = scenario_hits(scenario, config.constants) if hits is None else hits
    return simulate(scenario, hits, truth, config.constants, config.seed, rng.STREAM_REFERENCE, 0)


@dataclass(frozen=True)
class RunRecord:
    run_id: int
    params: RadarParams
    summary: EvalSummary | None
    skipped: int
    wall_time: float

    @property
    def flagged(self) -> bool:
        return self.summary is None

    def record(self) -> dict:
        s = self.summary
        return {
            "run_id": self.run_id,
            "skipped_frames": self.skipped,
            "min": None if s is None else s.min,
            "mean": None if s is None else s.mean,
            "max": None if s is None else s.max,
            "flagged": self.flagged,
        }


@dataclass
class ExperimentResult:
    matrix: SampleMatrix
    records: list[RunRecord]
    outputs: dict[str, np.ndarray]  # analysis input per mode, after imputation
    results: dict[str, SensitivityResult]
    n_flagged: int


# per-process state for worker pools
_CTX: dict = {}


def _init_context(config: ExperimentConfig, matrix: SampleMatrix, reference: list[DetectionSet]) -> None:
    scenario = build_scenario(config)
    _CTX.update(
        config=config,
        matrix=matrix,
        reference=reference,
        scenario=scenario,
        hits=scenario_hits(scenario, config.constants),
    )


def _run_row(run_id: int) -> RunRecord:
    config: ExperimentConfig = _CTX["config"]
    matrix: SampleMatrix = _CTX["matrix"]
    start = time.perf_counter()
    params = config.reference.truth.replace(**matrix.row(run_id))
    frames = simulate(_CTX["scenario"], _CTX["hits"], params, config.constants,
                      config.seed, rng.STREAM_RUN, run_id)
    try:
        summary = evaluate_run(frames, _CTX["reference"], config.k, config.kmeans_seed)
        skipped = summary.skipped
    except EvaluationError:
        summary, skipped = None, len(frames)
    return RunRecord(run_id, params, summary, skipped, time.perf_counter() - start)


def _impute(values: np.ndarray, valid: np.ndarray, block: np.ndarray) -> np.ndarray:
    """Replace invalid entries by the median of the valid entries in the same block."""
    out = values.copy()
    for b in np.unique(block[~valid]):
        in_block = block == b
        ok = in_block & valid
        if not ok.any():
            raise ExperimentError(f"every run in sample block {b} yielded no metric")
        out[in_block & ~valid] = np.median(values[ok])
    return out


def sample_matrix(config: ExperimentConfig) -> SampleMatrix:
    seed_words = rng.key_words(config.seed, 2, 0, 0)  # stream 2: sampling phases
    return efast_samples(config.parameters, config.ns_per_param, config.interference, seed_words)


def run_experiment(config: ExperimentConfig, out_dir=None) -> ExperimentResult:
    """Run the full experiment; writes artifacts to ``out_dir`` when given."""
    matrix = sample_matrix(config)
    scenario = build_scenario(config)
    hits = scenario_hits(scenario, config.constants)
    reference = build_reference(config, scenario, hits)
    log.info("running %d samples on %d frames", len(matrix), len(scenario))

    run_ids = range(len(matrix))
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers, initializer=_init_context,
                                 initargs=(config, matrix, reference)) as pool:
            records = list(pool.map(_run_row, run_ids, chunksize=8))
    else:
        _init_context(config, matrix, reference)
        try:
            records = [_run_row(i) for i in run_ids]
        finally:
            _CTX.clear()
    records.sort(key=lambda r: r.run_id)

    valid = np.array([not r.flagged for r in records])
    n_flagged = int((~valid).sum())
    if out_dir is not None:
        _write_runs(Path(out_dir), config, matrix, reference, records)
    if n_flagged:
        log.warning("%d of %d runs yielded no metric; imputing block medians", n_flagged, len(records))
    if n_flagged > MAX_FLAGGED_FRACTION * len(records):
        raise ExperimentError(
            f"{n_flagged} of {len(records)} runs yielded no metric (limit {MAX_FLAGGED_FRACTION:.0%})"
        )

    outputs, results = {}, {}
    for mode in config.modes:
        raw = np.array([r.summary.aggregate(mode) if r.summary else np.nan for r in records])
        outputs[mode] = _impute(raw, valid, matrix.block)
        results[mode] = analyze(matrix, outputs[mode], config.interference)

    result = ExperimentResult(matrix, records, outputs, results, n_flagged)
    if out_dir is not None:
        _write_results(Path(out_dir), result)
        export_plot_data(records, results, out_dir)
    return result


def _write_runs(out: Path, config, matrix, reference, records) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "config.yaml", "w") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=True)
    matrix.to_csv(out / "samples.csv")
    save_detections(reference, out / "reference_detections.csv")
    with open(out / "runs.jsonl", "w") as fh:
        for r in records:
            fh.write(json.dumps(r.record()) + "\n")
    # wall times live apart so every other file is reproducible byte for byte
    with open(out / "timings.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["run_id", "wall_time"])
        for r in records:
            w.writerow([r.run_id, f"{r.wall_time:.6f}"])


def _write_results(out: Path, result: ExperimentResult) -> None:
    with open(out / "outputs.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        modes = list(result.outputs)
        w.writerow(["run_id", *modes])
        for i in range(len(result.records)):
            w.writerow([i, *(repr(float(result.outputs[m][i])) for m in modes)])
    for mode, res in result.results.items():
        (out / f"sensitivity_{mode}.json").write_text(res.to_json() + "\n")
    summary = {
        "runs": len(result.records),
        "flagged_runs": result.n_flagged,
        "modes": list(result.results),
        "flagged_parameters": {
            m: [n for n, p in r.indices.items() if p.flagged] for m, r in result.results.items()
        },
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")


def export_plot_data(records, results: dict[str, SensitivityResult], out_dir) -> list[Path]:
    """Bar-chart data per aggregation mode plus the per-frame distance table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for mode, res in results.items():
        path = out / f"bars_{mode}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["parameter", "s_first", "s_total", "interaction"])
            for name, p in res.indices.items():
                w.writerow([name, repr(p.s_first), repr(p.s_total), repr(p.interaction)])
        written.append(path)
    path = out / "distances.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["run_id", "frame_t", "distance"])
        for r in records:
            if r.summary is None:
                continue
            for t, d in zip(r.summary.frame_t, r.summary.per_frame_distance):
                w.writerow([r.run_id, repr(t), repr(d)])
    written.append(path)
    return written
