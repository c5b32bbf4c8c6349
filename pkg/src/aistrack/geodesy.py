"""Spherical-earth kernels used by the associator and the metrics.

Angles are carried in degrees everywhere and only converted to radians
inside the trig code. Distances are meters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_M = 6_371_000.0


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon}")
        if self.lon == -180.0:
            object.__setattr__(self, "lon", 180.0)


@dataclass(frozen=True)
class GeoConstants:
    earth_radius_m: float = EARTH_RADIUS_M

    def __post_init__(self) -> None:
        if not self.earth_radius_m > 0:
            raise ValueError("earth_radius_m must be positive")


DEFAULT_CONSTANTS = GeoConstants()


def normalize_lon(lon: float) -> float:
    """Wrap a longitude in degrees into (-180, 180]."""
    lon = math.fmod(lon + 180.0, 360.0)
    if lon <= 0.0:
        lon += 360.0
    return lon - 180.0


def haversine_distance(a: GeoPoint, b: GeoPoint,
                       consts: GeoConstants = DEFAULT_CONSTANTS) -> float:
    """Great-circle distance in meters between two points."""
    phi_a = math.radians(a.lat)
    phi_b = math.radians(b.lat)
    dphi = phi_b - phi_a
    dlam = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi_a) * math.cos(phi_b) * math.sin(dlam / 2) ** 2
    return 2 * consts.earth_radius_m * math.asin(min(1.0, math.sqrt(h)))


def angular_change_rate(theta_now: float, theta_prev: float,
                        t_now: float, t_prev: float) -> float:
    """Course change per second, in degrees/second.

    The numerator is the smaller arc between the two courses, so 350 and 10
    are 20 degrees apart. The elapsed time is clamped to at least one second
    because several reports can share a timestamp.
    """
    gap = 180.0 - abs(180.0 - abs(theta_now - theta_prev) % 360.0)
    return gap / max(abs(t_now - t_prev), 1.0)


def destination_point(origin: GeoPoint, bearing: float, distance_m: float,
                      consts: GeoConstants = DEFAULT_CONSTANTS) -> GeoPoint:
    """Point reached from ``origin`` after ``distance_m`` along ``bearing`` (degrees)."""
    if distance_m == 0.0:
        return origin
    delta = distance_m / consts.earth_radius_m
    phi1 = math.radians(origin.lat)
    lam1 = math.radians(origin.lon)
    theta = math.radians(bearing)
    sin_phi1, cos_phi1 = math.sin(phi1), math.cos(phi1)
    sin_d, cos_d = math.sin(delta), math.cos(delta)

    sin_phi2 = sin_phi1 * cos_d + cos_phi1 * sin_d * math.cos(theta)
    phi2 = math.asin(max(-1.0, min(1.0, sin_phi2)))
    lam2 = lam1 + math.atan2(math.sin(theta) * sin_d * cos_phi1,
                             cos_d - sin_phi1 * math.sin(phi2))
    return GeoPoint(math.degrees(phi2), normalize_lon(math.degrees(lam2)))


def estimated_travel_distance(v_now: float, v_prev: float,
                              t_now: float, t_prev: float) -> float:
    """Distance covered at the mean of two speeds (m/s) over the elapsed time."""
    return (v_now + v_prev) / 2.0 * abs(t_now - t_prev)


def initial_bearing(a: GeoPoint, b: GeoPoint) -> float:
    """Initial great-circle bearing from ``a`` to ``b`` in degrees, [0, 360)."""
    phi_a, phi_b = math.radians(a.lat), math.radians(b.lat)
    dlam = math.radians(b.lon - a.lon)
    y = math.sin(dlam) * math.cos(phi_b)
    x = math.cos(phi_a) * math.sin(phi_b) - math.sin(phi_a) * math.cos(phi_b) * math.cos(dlam)
    return math.degrees(math.atan2(y, x)) % 360.0
