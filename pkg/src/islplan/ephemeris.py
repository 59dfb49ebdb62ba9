"""Position generators in a common Earth-centered inertial frame.

All motion models are deliberately low-fidelity: two-body Kepler orbits for
satellites, a rotating spherical Earth for ground sites, and circular-geometry
approximations for the Moon, its collinear/triangular libration regions, and
distant retrograde orbits. Contact planning only consumes directions and
distances over a few days, which these models capture.

Frame conventions:
    - Inertial, Earth-centered, equatorial. At t = 0 the prime meridian lies
      along +X, so geographic longitude maps directly to inertial longitude at
      epoch.
    - The Moon's orbit plane is inclined 23.44 deg to the equator with its
      ascending node on +X at t = 0 and the Moon itself at the node at t = 0.
    - Times are seconds since the scenario epoch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConvergenceError, ScenarioError

MU_EARTH_KM3_S2 = 398600.4418
EARTH_RADIUS_KM = 6371.0           # spherical model: ground sites, occultation
EARTH_EQUATORIAL_RADIUS_KM = 6378.137  # altitude -> semi-major axis
EARTH_ROTATION_RAD_S = 7.2921159e-5

MU_MOON_KM3_S2 = 4902.800066
MOON_RADIUS_KM = 1737.4
MOON_ORBIT_RADIUS_KM = 384400.0
MOON_ORBIT_PERIOD_S = 27.32 * 86400.0
MOON_ORBIT_INCLINATION_DEG = 23.44
L3_RADIUS_SCALE = 1.00001

_MOON_INC = math.radians(MOON_ORBIT_INCLINATION_DEG)
# In-plane orthonormal basis of the Moon's orbit plane.
_MOON_E1 = np.array([1.0, 0.0, 0.0])
_MOON_E2 = np.array([0.0, math.cos(_MOON_INC), math.sin(_MOON_INC)])


@dataclass(frozen=True)
class EciState:
    """Inertial position (km), velocity (km/s) and time (s since epoch)."""

    position: np.ndarray
    velocity: np.ndarray
    time: float


@dataclass(frozen=True)
class KeplerElements:
    """Classical elements; angles in degrees, mean anomaly at epoch."""

    semi_major_axis_km: float
    eccentricity: float
    inclination_deg: float
    raan_deg: float
    arg_perigee_deg: float
    mean_anomaly_deg: float

    def __post_init__(self):
        if not 0.0 <= self.eccentricity < 1.0:
            raise ScenarioError(
                f"eccentricity must be in [0, 1), got {self.eccentricity}")
        if self.semi_major_axis_km <= 0.0:
            raise ScenarioError(
                f"semi-major axis must be positive, got {self.semi_major_axis_km}")

    @property
    def mean_motion_rad_s(self) -> float:
        return math.sqrt(MU_EARTH_KM3_S2 / self.semi_major_axis_km ** 3)

    @property
    def period_s(self) -> float:
        return 2.0 * math.pi / self.mean_motion_rad_s


@dataclass(frozen=True)
class GroundSite:
    """Geodetic location on the spherical Earth."""

    latitude_deg: float
    longitude_deg: float
    altitude_km: float = 0.0

    def __post_init__(self):
        if abs(self.latitude_deg) > 90.0:
            raise ScenarioError(f"latitude out of range: {self.latitude_deg}")


@dataclass(frozen=True)
class LibrationPoint:
    """One of the Earth-Moon collinear/triangular regions: l3, l4 or l5."""

    point: str

    def __post_init__(self):
        if self.point not in ("l3", "l4", "l5"):
            raise ScenarioError(f"unknown libration point {self.point!r}")


@dataclass(frozen=True)
class DroTrack:
    """Circular retrograde track about the Moon, in the Moon's orbit plane."""

    radius_km: float = 70000.0
    phase_deg: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.radius_km < MOON_ORBIT_RADIUS_KM:
            raise ScenarioError(
                f"DRO radius must lie in (0, lunar distance), got {self.radius_km}")


@dataclass(frozen=True)
class StateTable:
    """Tabulated inertial positions with linear interpolation between rows."""

    times_s: tuple
    positions_km: tuple  # tuple of (x, y, z) rows

    def __post_init__(self):
        if len(self.times_s) < 2 or len(self.times_s) != len(self.positions_km):
            raise ScenarioError("state table needs >= 2 matching time/position rows")
        if any(b <= a for a, b in zip(self.times_s, self.times_s[1:])):
            raise ScenarioError("state table times must be strictly increasing")


Motion = Union[KeplerElements, GroundSite, LibrationPoint, DroTrack, StateTable]


def solve_kepler(mean_anomaly_rad: float, eccentricity: float,
                 tol: float = 1e-10, max_iter: int = 50) -> float:
    """Newton iteration for the eccentric anomaly E with E - e sinE = M."""
    m = math.remainder(mean_anomaly_rad, 2.0 * math.pi)
    e = eccentricity
    ecc_anom = m if e < 0.8 else math.pi
    for _ in range(max_iter):
        f = ecc_anom - e * math.sin(ecc_anom) - m
        step = f / (1.0 - e * math.cos(ecc_anom))
        ecc_anom -= step
        if abs(step) < tol:
            return ecc_anom
    raise ConvergenceError(
        f"Kepler iteration did not reach {tol} rad in {max_iter} steps "
        f"(M={mean_anomaly_rad}, e={eccentricity})")


def _rotation_matrix(el: KeplerElements) -> np.ndarray:
    """Perifocal -> inertial rotation."""
    ci, si = math.cos(math.radians(el.inclination_deg)), math.sin(math.radians(el.inclination_deg))
    co, so = math.cos(math.radians(el.raan_deg)), math.sin(math.radians(el.raan_deg))
    cw, sw = math.cos(math.radians(el.arg_perigee_deg)), math.sin(math.radians(el.arg_perigee_deg))
    return np.array([
        [co * cw - so * sw * ci, -co * sw - so * cw * ci, so * si],
        [so * cw + co * sw * ci, -so * sw + co * cw * ci, -co * si],
        [sw * si, cw * si, ci],
    ])


def propagate(el: KeplerElements, t: float) -> EciState:
    """Two-body state at time t."""
    n = el.mean_motion_rad_s
    m = math.radians(el.mean_anomaly_deg) + n * t
    ecc_anom = solve_kepler(m, el.eccentricity)
    a, e = el.semi_major_axis_km, el.eccentricity
    ce, se = math.cos(ecc_anom), math.sin(ecc_anom)
    root = math.sqrt(1.0 - e * e)
    r = a * (1.0 - e * ce)
    pos_pf = np.array([a * (ce - e), a * root * se, 0.0])
    vel_scale = math.sqrt(MU_EARTH_KM3_S2 * a) / r
    vel_pf = np.array([-vel_scale * se, vel_scale * root * ce, 0.0])
    rot = _rotation_matrix(el)
    return EciState(rot @ pos_pf, rot @ vel_pf, t)


def walker_delta(total: int, planes: int, phasing: int,
                 altitude_km: float, inclination_deg: float) -> list[KeplerElements]:
    """Evenly phased circular constellation.

    Plane p gets RAAN 360 p / planes; member s of a plane gets in-plane
    anomaly 360 s / (total / planes) plus the inter-plane offset
    360 * phasing * p / total.
    """
    if planes <= 0 or total % planes != 0:
        raise ScenarioError(f"planes ({planes}) must divide total ({total})")
    per_plane = total // planes
    a = EARTH_EQUATORIAL_RADIUS_KM + altitude_km
    elements = []
    for p in range(planes):
        raan = 360.0 * p / planes
        for s in range(per_plane):
            anomaly = 360.0 * s / per_plane + 360.0 * phasing * p / total
            elements.append(KeplerElements(a, 0.0, inclination_deg, raan, 0.0,
                                           anomaly % 360.0))
    return elements


def geo_elements(longitude_deg: float, altitude_km: float = 35786.0) -> KeplerElements:
    """Equatorial geosynchronous orbit holding the given sub-longitude."""
    a = EARTH_EQUATORIAL_RADIUS_KM + altitude_km
    return KeplerElements(a, 0.0, 0.0, 0.0, 0.0, longitude_deg % 360.0)


def igso_elements(crossing_longitude_deg: float, raan_deg: float,
                  inclination_deg: float = 55.0,
                  altitude_km: float = 35786.0) -> KeplerElements:
    """Inclined geosynchronous orbit crossing the equator at a fixed longitude.

    The ascending-node pass occurs when the rotating-Earth longitude of the
    node equals the crossing longitude, which fixes the epoch mean anomaly to
    (crossing longitude - RAAN) for a near-sidereal period.
    """
    a = EARTH_EQUATORIAL_RADIUS_KM + altitude_km
    anomaly = (crossing_longitude_deg - raan_deg) % 360.0
    return KeplerElements(a, 0.0, inclination_deg, raan_deg % 360.0, 0.0, anomaly)


def ground_site_state(lat_deg: float, lon_deg: float, alt_km: float,
                      t: float) -> EciState:
    """Spherical-Earth site rotated from epoch by the sidereal rate."""
    if abs(lat_deg) > 90.0:
        raise ScenarioError(f"latitude out of range: {lat_deg}")
    radius = EARTH_RADIUS_KM + alt_km
    lam = math.radians(lon_deg) + EARTH_ROTATION_RAD_S * t
    phi = math.radians(lat_deg)
    pos = radius * np.array([math.cos(phi) * math.cos(lam),
                             math.cos(phi) * math.sin(lam),
                             math.sin(phi)])
    omega = np.array([0.0, 0.0, EARTH_ROTATION_RAD_S])
    return EciState(pos, np.cross(omega, pos), t)


def moon_state(t: float) -> EciState:
    """Circular lunar orbit in the inclined Moon plane."""
    theta = 2.0 * math.pi * t / MOON_ORBIT_PERIOD_S
    rate = 2.0 * math.pi / MOON_ORBIT_PERIOD_S
    pos = MOON_ORBIT_RADIUS_KM * (math.cos(theta) * _MOON_E1 + math.sin(theta) * _MOON_E2)
    vel = MOON_ORBIT_RADIUS_KM * rate * (-math.sin(theta) * _MOON_E1 + math.cos(theta) * _MOON_E2)
    return EciState(pos, vel, t)


def libration_state(point: str, t: float) -> EciState:
    """L4 leads the Moon by 60 deg, L5 trails by 60 deg, L3 is anti-Moon.

    L3 sits at 1.00001 x the lunar orbit radius on the far side, the standard
    collinear-point offset for an Earth-Moon mass ratio this small.
    """
    theta = 2.0 * math.pi * t / MOON_ORBIT_PERIOD_S
    rate = 2.0 * math.pi / MOON_ORBIT_PERIOD_S
    if point == "l3":
        moon = moon_state(t)
        return EciState(-L3_RADIUS_SCALE * moon.position,
                        -L3_RADIUS_SCALE * moon.velocity, t)
    if point == "l4":
        ang = theta + math.radians(60.0)
    elif point == "l5":
        ang = theta - math.radians(60.0)
    else:
        raise ScenarioError(f"unknown libration point {point!r}")
    pos = MOON_ORBIT_RADIUS_KM * (math.cos(ang) * _MOON_E1 + math.sin(ang) * _MOON_E2)
    vel = MOON_ORBIT_RADIUS_KM * rate * (-math.sin(ang) * _MOON_E1 + math.cos(ang) * _MOON_E2)
    return EciState(pos, vel, t)


def dro_state(t: float, radius_km: float = 70000.0, phase_deg: float = 0.0) -> EciState:
    """Moon-centered retrograde circle composed with the Moon's own motion.

    The angular rate is the two-body rate about the Moon at the given radius;
    the sense opposes the Moon's orbital motion, so the Moon-relative velocity
    is anti-parallel to the Moon's orbital angular momentum direction crossed
    with the relative position.
    """
    dro_rate = math.sqrt(MU_MOON_KM3_S2 / radius_km ** 3)
    phase = math.radians(phase_deg) - dro_rate * t
    moon = moon_state(t)
    rel_pos = radius_km * (math.cos(phase) * _MOON_E1 + math.sin(phase) * _MOON_E2)
    rel_vel = radius_km * dro_rate * (math.sin(phase) * _MOON_E1 - math.cos(phase) * _MOON_E2)
    return EciState(moon.position + rel_pos, moon.velocity + rel_vel, t)


def table_state(table: StateTable, t: float) -> EciState:
    """Piecewise-linear interpolation of a tabulated track."""
    times = np.asarray(table.times_s, dtype=float)
    if t < times[0] or t > times[-1]:
        raise ScenarioError(
            f"time {t} outside tabulated range [{times[0]}, {times[-1]}]")
    positions = np.asarray(table.positions_km, dtype=float)
    seg = min(int(np.searchsorted(times, t, side="right")) - 1, len(times) - 2)
    seg = max(seg, 0)
    t0, t1 = times[seg], times[seg + 1]
    frac = (t - t0) / (t1 - t0)
    pos = positions[seg] * (1.0 - frac) + positions[seg + 1] * frac
    vel = (positions[seg + 1] - positions[seg]) / (t1 - t0)
    return EciState(pos, vel, t)


def state_of(motion: Motion, t: float) -> EciState:
    """Evaluate any motion model at time t."""
    if isinstance(motion, KeplerElements):
        return propagate(motion, t)
    if isinstance(motion, GroundSite):
        return ground_site_state(motion.latitude_deg, motion.longitude_deg,
                                 motion.altitude_km, t)
    if isinstance(motion, LibrationPoint):
        return libration_state(motion.point, t)
    if isinstance(motion, DroTrack):
        return dro_state(t, motion.radius_km, motion.phase_deg)
    if isinstance(motion, StateTable):
        return table_state(motion, t)
    raise ScenarioError(f"unknown motion model {type(motion).__name__}")
