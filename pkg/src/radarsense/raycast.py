"""2D ray casting against a target's oriented footprint rectangle.

Rays leave the sensor in a uniform azimuth fan. Each ray reports at most one
hit, the first surface it meets. The per-hit aspect angle is the direction
from the hit point back to the sensor, measured in the target frame
(0 = seen from the front, pi = seen from behind).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .scenario import Pose2D, VehicleShape, wrap_angle

__all__ = [
    "Ray",
    "RayHit",
    "FanHits",
    "ray_rect_intersect",
    "fan_azimuths",
    "cast_fan_arrays",
    "cast_fan",
    "aspect_angle",
]


@dataclass(frozen=True)
class Ray:
    origin: tuple[float, float]
    azimuth: float  # world frame, radians


@dataclass(frozen=True)
class RayHit:
    point: tuple[float, float]
    range: float
    azimuth: float
    aspect_angle: float


@dataclass(frozen=True)
class FanHits:
    """Hits of one fan as parallel arrays, sorted by ray index (= azimuth order)."""

    ray_index: np.ndarray
    azimuth: np.ndarray  # sensor frame
    range: np.ndarray
    aspect: np.ndarray
    x: np.ndarray  # world frame
    y: np.ndarray

    def __len__(self) -> int:
        return int(self.ray_index.size)

    def to_hits(self) -> list[RayHit]:
        return [
            RayHit((float(x), float(y)), float(r), float(az), float(asp))
            for x, y, r, az, asp in zip(self.x, self.y, self.range, self.azimuth, self.aspect)
        ]


def _slab(ox, oy, dx, dy, rect_pose: Pose2D, shape: VehicleShape):
    """Vectorized slab test. Returns ray parameter of the first boundary crossing (nan if none)."""
    c, s = np.cos(rect_pose.yaw), np.sin(rect_pose.yaw)
    # into the rectangle frame
    px, py = ox - rect_pose.x, oy - rect_pose.y
    lx, ly = c * px + s * py, -s * px + c * py
    ldx, ldy = c * dx + s * dy, -s * dx + c * dy
    hl, hw = 0.5 * shape.length, 0.5 * shape.width

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        tx1, tx2 = (-hl - lx) / ldx, (hl - lx) / ldx
        ty1, ty2 = (-hw - ly) / ldy, (hw - ly) / ldy
    # a ray parallel to a slab is inside it for all t, or never
    par_x = ldx == 0
    par_y = ldy == 0
    in_x = np.abs(lx) <= hl
    in_y = np.abs(ly) <= hw
    tx_lo = np.where(par_x, np.where(in_x, -np.inf, np.inf), np.minimum(tx1, tx2))
    tx_hi = np.where(par_x, np.where(in_x, np.inf, -np.inf), np.maximum(tx1, tx2))
    ty_lo = np.where(par_y, np.where(in_y, -np.inf, np.inf), np.minimum(ty1, ty2))
    ty_hi = np.where(par_y, np.where(in_y, np.inf, -np.inf), np.maximum(ty1, ty2))
    t_near = np.maximum(tx_lo, ty_lo)
    t_far = np.minimum(tx_hi, ty_hi)

    valid = (t_near <= t_far) & (t_far > 0)
    # origin inside the rectangle: the boundary is met on the way out
    t = np.where(t_near > 0, t_near, t_far)
    return np.where(valid, t, np.nan)


def aspect_angle(target: Pose2D, sensor_position) -> float:
    """Angle between the target heading and the direction from target to sensor."""
    sx, sy = sensor_position
    if sx == target.x and sy == target.y:
        raise ValidationError("sensor and target positions coincide")
    return wrap_angle(np.arctan2(sy - target.y, sx - target.x) - target.yaw)


def ray_rect_intersect(ray: Ray, rect_pose: Pose2D, shape: VehicleShape) -> RayHit | None:
    """Nearest intersection of ``ray`` with the rectangle boundary, or None."""
    dx, dy = np.cos(ray.azimuth), np.sin(ray.azimuth)
    t = float(_slab(ray.origin[0], ray.origin[1], dx, dy, rect_pose, shape))
    if np.isnan(t):
        return None
    point = (ray.origin[0] + t * dx, ray.origin[1] + t * dy)
    aspect = wrap_angle(ray.azimuth + np.pi - rect_pose.yaw)
    return RayHit(point=point, range=t, azimuth=float(wrap_angle(ray.azimuth)), aspect_angle=aspect)


def fan_azimuths(fov: float, n_rays: int) -> np.ndarray:
    """Sensor-frame azimuths, uniformly spaced and centered on boresight."""
    if not (0 < fov < 2 * np.pi):
        raise ValidationError(f"fov must lie in (0, 2*pi), got {fov}")
    if n_rays < 2:
        raise ValidationError(f"need at least 2 rays, got {n_rays}")
    return np.linspace(-0.5 * fov, 0.5 * fov, int(n_rays))


def cast_fan_arrays(
    sensor: Pose2D, fov: float, n_rays: int, target: Pose2D, shape: VehicleShape
) -> FanHits:
    az = fan_azimuths(fov, n_rays)
    world = sensor.yaw + az
    dx, dy = np.cos(world), np.sin(world)
    t = _slab(sensor.x, sensor.y, dx, dy, target, shape)
    idx = np.flatnonzero(~np.isnan(t))
    r = t[idx]
    return FanHits(
        ray_index=idx,
        azimuth=az[idx],
        range=r,
        aspect=wrap_angle(world[idx] + np.pi - target.yaw),
        x=sensor.x + r * dx[idx],
        y=sensor.y + r * dy[idx],
    )


def cast_fan(
    sensor: Pose2D, fov: float, n_rays: int, target: Pose2D, shape: VehicleShape
) -> list[RayHit]:
    """First-surface hits of a uniform ray fan, in azimuth order.

    ``RayHit.azimuth`` is in the sensor frame (0 = boresight).
    """
    return cast_fan_arrays(sensor, fov, n_rays, target, shape).to_hits()
