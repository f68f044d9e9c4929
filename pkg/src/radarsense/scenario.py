"""Ground-truth trajectories: a stationary ego vehicle and a target on a figure eight.

The figure eight is a Gerono lemniscate ``x = a sin u, y = a sin u cos u``,
resampled so the target moves at (nearly) constant arc-length speed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import quad

from .errors import ParseError, ValidationError

__all__ = [
    "Pose2D",
    "VehicleShape",
    "Frame",
    "Scenario",
    "wrap_angle",
    "generate_figure_eight",
    "lemniscate_point",
    "lemniscate_length",
    "load_trajectory",
    "save_trajectory",
    "TRAJECTORY_COLUMNS",
]

TRAJECTORY_COLUMNS = ("t", "ego_x", "ego_y", "ego_yaw", "target_x", "target_y", "target_yaw")
DT_TOLERANCE = 1e-9


def wrap_angle(angle):
    """Wrap an angle (scalar or array) into (-pi, pi]."""
    wrapped = np.pi - np.mod(np.pi - np.asarray(angle, dtype=float), 2.0 * np.pi)
    return float(wrapped) if np.ndim(wrapped) == 0 else wrapped


@dataclass(frozen=True)
class Pose2D:
    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class VehicleShape:
    """Footprint rectangle of a vehicle, centered on its pose."""

    length: float = 4.5
    width: float = 1.8

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0):
            raise ValidationError(f"vehicle shape must be positive, got {self.length} x {self.width}")

    @property
    def half_diagonal(self) -> float:
        return 0.5 * math.hypot(self.length, self.width)


@dataclass(frozen=True)
class Frame:
    t: float
    ego: Pose2D
    target: Pose2D

    def __post_init__(self):
        if not self.t >= 0:
            raise ValidationError(f"frame time must be non-negative, got {self.t}")


@dataclass(frozen=True)
class Scenario:
    frames: tuple[Frame, ...]
    target_shape: VehicleShape = field(default_factory=VehicleShape)
    dt: float = field(default=None)

    def __post_init__(self):
        frames = tuple(self.frames)
        object.__setattr__(self, "frames", frames)
        if len(frames) < 2:
            raise ValidationError("a scenario needs at least 2 frames")
        t = np.array([f.t for f in frames])
        steps = np.diff(t)
        if np.any(steps <= 0):
            bad = int(np.argmax(steps <= 0)) + 1
            raise ValidationError(f"frame times must be strictly increasing (frame {bad})")
        dt = float(steps.mean()) if self.dt is None else float(self.dt)
        if np.max(np.abs(steps - dt)) > DT_TOLERANCE:
            raise ValidationError("frame spacing is not constant")
        object.__setattr__(self, "dt", dt)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def times(self) -> np.ndarray:
        return np.array([f.t for f in self.frames])


def lemniscate_point(u, half_length: float):
    """Position and tangent direction of the Gerono lemniscate at parameter ``u``."""
    u = np.asarray(u, dtype=float)
    s = np.sin(u)
    x = half_length * s
    y = half_length * s * np.cos(u)
    dx = half_length * np.cos(u)
    dy = half_length * np.cos(2.0 * u)
    return x, y, dx, dy


def _speed(u: float, a: float) -> float:
    return a * math.hypot(math.cos(u), math.cos(2.0 * u))


def _arc(u0: float, u1: float, a: float) -> float:
    return quad(_speed, u0, u1, args=(a,), epsabs=1e-14, epsrel=1e-13, limit=200)[0]


def lemniscate_length(half_length: float) -> float:
    """Full-period arc length (four identical quarters)."""
    return 4.0 * _arc(0.0, 0.5 * math.pi, half_length)


def _invert_quarter(targets: np.ndarray, a: float) -> np.ndarray:
    """Parameters u in [0, pi/2] whose arc length from 0 equals each target."""
    out = np.empty_like(targets)
    u_prev, s_prev = 0.0, 0.0
    for i, s_target in enumerate(targets):
        u = u_prev + (s_target - s_prev) / _speed(u_prev, a)
        for _ in range(50):
            s_u = s_prev + _arc(u_prev, u, a)
            err = s_u - s_target
            u -= err / _speed(u, a)
            if abs(err) < 1e-13 * max(1.0, a):
                break
        out[i] = u
        u_prev, s_prev = u, s_prev + _arc(u_prev, u, a)
    return out


def generate_figure_eight(
    half_length: float = 25.0,
    offset: Pose2D = Pose2D(40.0, 0.0, 0.0),
    speed: float = 5.0,
    dt: float = 0.2,
    target_shape: VehicleShape = VehicleShape(),
) -> Scenario:
    """Target driving one full figure-eight period in front of a stationary ego.

    The curve is sampled at equal arc-length steps as close to ``speed * dt``
    as a whole number of steps per period allows. The step count is a
    multiple of four so the sample set inherits the curve's mirror and point
    symmetries exactly. The curve is rotated by ``offset.yaw`` and centered
    on the offset position; the ego sits at the origin facing +x.
    """
    if not (half_length > 0 and speed > 0 and dt > 0):
        raise ValidationError("half_length, speed and dt must all be positive")
    a = float(half_length)
    quarter = 0.25 * lemniscate_length(a)
    per_quarter = max(1, round(quarter / (speed * dt)))
    n = 4 * per_quarter
    step = quarter / per_quarter

    # u(s) on the first quarter, then u(L/2 - s) = pi - u(s) and u(s + L/2) = u(s) + pi
    uq = _invert_quarter(step * np.arange(per_quarter + 1), a)
    first_half = np.concatenate([uq[:-1], math.pi - uq[::-1][:-1]])
    u = np.concatenate([first_half, first_half + math.pi])
    assert u.size == n

    lx, ly, dx, dy = lemniscate_point(u, a)
    c, s = math.cos(offset.yaw), math.sin(offset.yaw)
    x = offset.x + c * lx - s * ly
    y = offset.y + s * lx + c * ly
    yaw = wrap_angle(np.arctan2(dy, dx) + offset.yaw)

    ego = Pose2D(0.0, 0.0, 0.0)
    frames = tuple(
        Frame(t=k * dt, ego=ego, target=Pose2D(x[k], y[k], yaw[k])) for k in range(n)
    )
    return Scenario(frames=frames, target_shape=target_shape, dt=dt)


def save_trajectory(scenario: Scenario, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_COLUMNS)
        for f in scenario.frames:
            writer.writerow(
                [repr(v) for v in (f.t, f.ego.x, f.ego.y, f.ego.yaw, f.target.x, f.target.y, f.target.yaw)]
            )


def load_trajectory(path, target_shape: VehicleShape = VehicleShape()) -> Scenario:
    """Read a trajectory CSV. Errors cite the 1-based data row (header excluded)."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        missing = [c for c in TRAJECTORY_COLUMNS if c not in header]
        if missing:
            raise ParseError(f"{path}: missing columns {missing}")
        idx = [header.index(c) for c in TRAJECTORY_COLUMNS]
        frames = []
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                t, ex, ey, eyaw, tx, ty, tyaw = (float(row[i]) for i in idx)
            except (ValueError, IndexError) as exc:
                raise ParseError(f"{path}: row {row_no}: {exc}") from None
            if frames and not t > frames[-1].t:
                raise ParseError(f"{path}: row {row_no}: t={t} does not increase")
            try:
                frames.append(Frame(t, Pose2D(ex, ey, eyaw), Pose2D(tx, ty, tyaw)))
            except ValidationError as exc:
                raise ParseError(f"{path}: row {row_no}: {exc}") from None
    if len(frames) < 2:
        raise ParseError(f"{path}: need at least 2 rows, found {len(frames)}")
    try:
        return Scenario(frames=tuple(frames), target_shape=target_shape)
    except ValidationError as exc:
        raise ParseError(f"{path}: {exc}") from None
