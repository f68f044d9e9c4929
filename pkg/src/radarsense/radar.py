"""Detection-level radar model.

Chain per ray hit: radar equation -> antenna pattern and aspect-dependent RCS
-> SNR against thermal noise -> Gaussian SNR jitter (dB) -> logistic ROC
-> Bernoulli keep/drop. All quantities the sensitivity sampler varies are in
:class:`RadarParams`; everything held fixed is in :class:`RadarConstants`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.special import expit

from . import rng
from .errors import ConfigError, ParseError, ValidationError
from .raycast import FanHits, cast_fan_arrays
from .scenario import Frame, VehicleShape

__all__ = [
    "BOLTZMANN",
    "SPEED_OF_LIGHT",
    "RadarParams",
    "RadarConstants",
    "RcsTable",
    "Detection",
    "DetectionSet",
    "db_to_linear",
    "linear_to_db",
    "received_power",
    "noise_power",
    "snr",
    "snr_radar_equation",
    "antenna_gain_db",
    "rcs_dbsm",
    "detection_probability",
    "expected_detection_probability",
    "hit_snr_db",
    "detections_from_hits",
    "generate_detections",
    "expected_detection_count",
    "save_detections",
    "load_detections",
    "PARAMETER_BOUNDS",
]

BOLTZMANN = 1.380649e-23  # J/K, exact (SI 2019)
SPEED_OF_LIGHT = 299_792_458.0  # m/s
GAIN_FLOOR_DB = 60.0

# parameter name -> (min, max), units as in RadarParams
PARAMETER_BOUNDS = {
    "awg_noise_sd": (0.0, 8.0),
    "dp_offset": (-5.0, 5.0),
    "g_max": (10.0, 25.0),
    "noise_figure": (10.0, 20.0),
    "sys_loss": (0.0, 20.0),
    "rcs_mean": (-10.0, 10.0),
}


def db_to_linear(db):
    return np.power(10.0, np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class RadarParams:
    """The six sensor-effect parameters under study (dB-valued)."""

    awg_noise_sd: float = 2.0
    dp_offset: float = 0.0
    g_max: float = 20.0
    noise_figure: float = 15.0
    sys_loss: float = 10.0
    rcs_mean: float = 0.0

    def validate(self) -> "RadarParams":
        values = [getattr(self, f.name) for f in fields(self)]
        if not all(math.isfinite(v) for v in values):
            raise ValidationError(f"radar parameters must be finite: {self}")
        if self.awg_noise_sd < 0:
            raise ValidationError(f"awg_noise_sd must be >= 0, got {self.awg_noise_sd}")
        return self

    @classmethod
    def names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    def replace(self, **changes) -> "RadarParams":
        unknown = set(changes) - set(self.names())
        if unknown:
            raise ValidationError(f"unknown radar parameters: {sorted(unknown)}")
        return RadarParams(**{**{n: getattr(self, n) for n in self.names()}, **changes})


# Relative passenger-car profile in dB, 10 degree steps from -180 to 180.
# Broadside lobes dominate; front and rear lobes are weaker.
_DEFAULT_RCS_HALF = [5.0, 3.2, -0.4, -3.2, -4.5, -4.6, -3.4, 0.4, 6.6, 10.0,
                     6.6, 0.4, -3.4, -4.6, -4.5, -3.2, -0.4, 3.2, 5.0]  # 0..180 deg
DEFAULT_RCS_ASPECT_DEG = tuple(float(a) for a in range(-180, 181, 10))
DEFAULT_RCS_PROFILE_DB = tuple(_DEFAULT_RCS_HALF[::-1][:-1] + _DEFAULT_RCS_HALF)


@dataclass(frozen=True)
class RcsTable:
    """Aspect-angle RCS profile, linearly interpolated in dB.

    Angles must increase strictly and span [-180, 180] degrees. Only the
    shape matters: the profile is shifted so its circular mean is zero and
    the requested mean is added on lookup.
    """

    aspect_deg: tuple[float, ...] = DEFAULT_RCS_ASPECT_DEG
    profile_db: tuple[float, ...] = DEFAULT_RCS_PROFILE_DB

    def __post_init__(self):
        a = np.asarray(self.aspect_deg, dtype=float)
        p = np.asarray(self.profile_db, dtype=float)
        if a.ndim != 1 or a.shape != p.shape or a.size < 2:
            raise ConfigError("RCS table needs matching 1-D angle and value lists")
        if not np.all(np.isfinite(a)) or not np.all(np.isfinite(p)):
            raise ConfigError("RCS table entries must be finite")
        if np.any(np.diff(a) <= 0):
            raise ConfigError("RCS table angles must increase strictly")
        if a[0] != -180.0 or a[-1] != 180.0:
            raise ConfigError("RCS table angles must span [-180, 180] degrees")
        object.__setattr__(self, "aspect_deg", tuple(a.tolist()))
        object.__setattr__(self, "profile_db", tuple(p.tolist()))

    @property
    def circular_mean_db(self) -> float:
        a = np.radians(self.aspect_deg)
        return float(np.trapezoid(self.profile_db, a) / (2 * np.pi))

    def relative_db(self, aspect):
        rel = np.interp(np.asarray(aspect, dtype=float), np.radians(self.aspect_deg), self.profile_db)
        return rel - self.circular_mean_db


@dataclass(frozen=True)
class RadarConstants:
    """Physical constants and fan geometry held fixed across a sensitivity study."""

    tx_power: float = 1.0  # W
    wavelength: float = SPEED_OF_LIGHT / 76.5e9  # m
    noise_bandwidth: float = 1.0e6  # Hz
    std_temperature: float = 290.0  # K
    boltzmann: float = BOLTZMANN
    snr50: float = 13.0  # dB
    roc_slope: float = 0.5  # 1/dB
    sidelobe_suppression: float = -13.0  # dB; nominal, implied by the sinc pattern
    theta_null: float = math.pi / 3  # first antenna null, rad
    fov: float = math.radians(120.0)
    n_rays: int = 241
    rcs_table: RcsTable = field(default_factory=RcsTable)

    def __post_init__(self):
        for name in ("tx_power", "wavelength", "noise_bandwidth", "std_temperature", "boltzmann",
                     "roc_slope", "theta_null", "fov"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be positive and finite, got {v}")
        if int(self.n_rays) < 2:
            raise ValidationError("n_rays must be >= 2")


@dataclass(frozen=True)
class Detection:
    range: float
    azimuth: float
    snr_db: float
    power_rx: float
    x: float
    y: float


@dataclass(frozen=True, eq=False)
class DetectionSet:
    """Detections of one frame as parallel arrays, sorted by azimuth.

    Cartesian coordinates are derived (sensor frame) so they always agree
    with range and azimuth.
    """

    frame_t: float
    range: np.ndarray = field(default_factory=lambda: np.empty(0))
    azimuth: np.ndarray = field(default_factory=lambda: np.empty(0))
    snr_db: np.ndarray = field(default_factory=lambda: np.empty(0))
    power_rx: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        arrays = {n: np.asarray(getattr(self, n), dtype=float) for n in ("range", "azimuth", "snr_db", "power_rx")}
        n = arrays["range"].size
        if any(a.shape != (n,) for a in arrays.values()):
            raise ValidationError("detection arrays must be 1-D with equal length")
        order = np.argsort(arrays["azimuth"], kind="stable")
        if np.any(order != np.arange(n)):
            arrays = {k: v[order] for k, v in arrays.items()}
        for k, v in arrays.items():
            v.setflags(write=False)
            object.__setattr__(self, k, v)

    def __len__(self) -> int:
        return int(self.range.size)

    def __iter__(self):
        for r, az, s, p, x, y in zip(self.range, self.azimuth, self.snr_db, self.power_rx, self.x, self.y):
            yield Detection(float(r), float(az), float(s), float(p), float(x), float(y))

    def __eq__(self, other):
        if not isinstance(other, DetectionSet):
            return NotImplemented
        return self.frame_t == other.frame_t and all(
            np.array_equal(getattr(self, n), getattr(other, n), equal_nan=True)
            for n in ("range", "azimuth", "snr_db", "power_rx")
        )

    @property
    def detections(self) -> list[Detection]:
        return list(self)

    @property
    def x(self) -> np.ndarray:
        return self.range * np.cos(self.azimuth)

    @property
    def y(self) -> np.ndarray:
        return self.range * np.sin(self.azimuth)

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])


def received_power(p_t, gain_linear, wavelength, rcs_m2, range_m, loss_linear):
    """Radar range equation; the antenna gain enters squared (same Tx/Rx pattern)."""
    range_m = np.asarray(range_m, dtype=float)
    if np.any(range_m == 0):
        raise ValidationError("received power is singular at zero range")
    return (p_t * gain_linear**2 * wavelength**2 * rcs_m2) / ((4 * np.pi) ** 3 * range_m**4 * loss_linear)


def noise_power(noise_figure_linear, bandwidth, temperature, boltzmann=BOLTZMANN):
    return boltzmann * noise_figure_linear * bandwidth * temperature


def snr(p_r, p_n):
    p_n = np.asarray(p_n, dtype=float)
    if np.any(p_n == 0):
        raise ValidationError("SNR is singular at zero noise power")
    return p_r / p_n


def snr_radar_equation(p_t, gain_linear, wavelength, rcs_m2, range_m, loss_linear,
                       noise_figure_linear, bandwidth, temperature, boltzmann=BOLTZMANN):
    """SNR in one expression, without the intermediate received/noise powers."""
    return (p_t * gain_linear**2 * wavelength**2 * rcs_m2) / (
        boltzmann * noise_figure_linear * bandwidth * temperature * (4 * np.pi) ** 3 * range_m**4 * loss_linear
    )


def antenna_gain_db(azimuth, g_max: float, theta_null: float):
    """sinc-shaped power pattern in dB, floored 60 dB below the peak."""
    if not theta_null > 0:
        raise ValidationError("theta_null must be positive")
    # np.sinc is the normalized sinc sin(pi u) / (pi u)
    amp = np.abs(np.sinc(np.asarray(azimuth, dtype=float) / theta_null))
    with np.errstate(divide="ignore"):
        g = g_max + 20.0 * np.log10(amp)
    g = np.maximum(g, g_max - GAIN_FLOOR_DB)
    return float(g) if np.ndim(g) == 0 else g


def rcs_dbsm(aspect, rcs_mean: float, table: RcsTable | None = None):
    table = RcsTable() if table is None else table
    out = rcs_mean + table.relative_db(aspect)
    return float(out) if np.ndim(out) == 0 else out


def detection_probability(snr_db, dp_offset: float, snr50: float, slope: float):
    """Logistic ROC: 0.5 at ``snr50 + dp_offset``, steepness ``slope`` per dB."""
    if not slope > 0:
        raise ValidationError("ROC slope must be positive")
    p = expit(slope * (np.asarray(snr_db, dtype=float) - (snr50 + dp_offset)))
    return float(p) if np.ndim(p) == 0 else p


_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite_e.hermegauss(40)
_GH_WEIGHTS = _GH_WEIGHTS / _GH_WEIGHTS.sum()


def expected_detection_probability(snr_db, awg_noise_sd: float, dp_offset: float, snr50: float, slope: float):
    """Pd averaged over the Gaussian SNR jitter (Gauss-Hermite quadrature)."""
    snr_db = np.asarray(snr_db, dtype=float)
    if awg_noise_sd == 0:
        return detection_probability(snr_db, dp_offset, snr50, slope)
    jittered = snr_db[..., None] + awg_noise_sd * _GH_NODES
    return detection_probability(jittered, dp_offset, snr50, slope) @ _GH_WEIGHTS


def hit_snr_db(hits: FanHits, params: RadarParams, constants: RadarConstants):
    """Noise-free SNR (dB) and received power (W) for each ray hit."""
    gain_db = antenna_gain_db(hits.azimuth, params.g_max, constants.theta_null)
    sigma_db = rcs_dbsm(hits.aspect, params.rcs_mean, constants.rcs_table)
    p_r = received_power(
        constants.tx_power,
        db_to_linear(gain_db),
        constants.wavelength,
        db_to_linear(sigma_db),
        hits.range,
        db_to_linear(params.sys_loss),
    )
    p_n = noise_power(db_to_linear(params.noise_figure), constants.noise_bandwidth,
                      constants.std_temperature, constants.boltzmann)
    return linear_to_db(snr(p_r, p_n)), p_r


def detections_from_hits(
    hits: FanHits,
    frame_t: float,
    params: RadarParams,
    constants: RadarConstants,
    seed: int,
    frame_index: int = 0,
    stream: int = rng.STREAM_RUN,
    run_id: int = 0,
) -> DetectionSet:
    if len(hits) == 0:
        return DetectionSet(frame_t)
    snr_db, p_r = hit_snr_db(hits, params, constants)
    z, u = rng.ray_normals_and_uniforms(seed, stream, run_id, frame_index, hits.ray_index)
    noisy = snr_db + params.awg_noise_sd * z
    pd = detection_probability(noisy, params.dp_offset, constants.snr50, constants.roc_slope)
    keep = u < pd
    return DetectionSet(frame_t, hits.range[keep], hits.azimuth[keep], noisy[keep], p_r[keep])


def _frame_hits(frame: Frame, constants: RadarConstants, shape: VehicleShape) -> FanHits:
    return cast_fan_arrays(frame.ego, constants.fov, constants.n_rays, frame.target, shape)


def generate_detections(
    frame: Frame,
    params: RadarParams,
    constants: RadarConstants,
    shape: VehicleShape,
    rng_seed: int,
    frame_index: int = 0,
    stream: int = rng.STREAM_RUN,
    run_id: int = 0,
) -> DetectionSet:
    """Simulate one radar frame.

    Randomness for ray ``j`` comes from the counter stream keyed by
    ``(rng_seed, stream, run_id, frame_index)`` at offset ``j``, so results are
    bitwise reproducible and independent of evaluation order.
    """
    params.validate()
    hits = _frame_hits(frame, constants, shape)
    return detections_from_hits(hits, frame.t, params, constants, rng_seed, frame_index, stream, run_id)


def expected_detection_count(
    frame: Frame, params: RadarParams, constants: RadarConstants, shape: VehicleShape
) -> float:
    """Sum over ray hits of the jitter-averaged detection probability."""
    hits = _frame_hits(frame, constants, shape)
    if len(hits) == 0:
        return 0.0
    snr_db, _ = hit_snr_db(hits, params, constants)
    pd = expected_detection_probability(snr_db, params.awg_noise_sd, params.dp_offset,
                                        constants.snr50, constants.roc_slope)
    return float(np.sum(pd))


DETECTION_COLUMNS = ("frame_t", "range", "azimuth", "snr_db", "x", "y")


def save_detections(frames, path) -> None:
    """Write detection sets as CSV; frames without detections leave no rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DETECTION_COLUMNS)
        for ds in frames:
            for r, az, s, x, y in zip(ds.range, ds.azimuth, ds.snr_db, ds.x, ds.y):
                w.writerow([repr(float(v)) for v in (ds.frame_t, r, az, s, x, y)])


def load_detections(path, frame_times=None, time_tolerance: float | None = None) -> list[DetectionSet]:
    """Read a detection CSV into per-frame sets.

    With ``frame_times`` every row is assigned to the nearest listed frame
    (within ``time_tolerance``, default half the frame spacing) and frames
    without rows come back empty. Without it, frames are the distinct
    ``frame_t`` values in file order. ``power_rx`` is not stored and reads as NaN.
    """
    rows: dict[float, list[tuple[float, float, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        missing = [c for c in DETECTION_COLUMNS if c not in header]
        if missing:
            raise ParseError(f"{path}: missing columns {missing}")
        idx = [header.index(c) for c in DETECTION_COLUMNS]
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            try:
                t, r, az, s, x, y = (float(row[i]) for i in idx)
            except (ValueError, IndexError) as exc:
                raise ParseError(f"{path}: row {row_no}: {exc}") from None
            if not (r > 0 and math.isfinite(az) and math.isfinite(s)):
                raise ParseError(f"{path}: row {row_no}: invalid range/azimuth/snr")
            if abs(x - r * math.cos(az)) > 1e-6 * max(1.0, r) or abs(y - r * math.sin(az)) > 1e-6 * max(1.0, r):
                raise ParseError(f"{path}: row {row_no}: x,y disagree with range and azimuth")
            rows.setdefault(t, []).append((r, az, s))

    if frame_times is None:
        times = list(rows)
        grouped = {t: rows[t] for t in times}
    else:
        times = [float(t) for t in frame_times]
        tarr = np.asarray(times)
        if time_tolerance is None:
            time_tolerance = 0.5 * float(np.min(np.diff(tarr))) if tarr.size > 1 else math.inf
        grouped = {t: [] for t in times}
        for t, dets in rows.items():
            j = int(np.argmin(np.abs(tarr - t)))
            if abs(tarr[j] - t) > time_tolerance:
                raise ParseError(f"{path}: frame_t={t} matches no scenario frame")
            grouped[times[j]].extend(dets)

    out = []
    for t in times:
        dets = np.array(grouped[t], dtype=float).reshape(-1, 3)
        out.append(DetectionSet(t, dets[:, 0], dets[:, 1], dets[:, 2], np.full(dets.shape[0], np.nan)))
    return out
