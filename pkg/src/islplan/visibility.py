"""Per-FSA visibility matrices, anchor classification and user folding.

Two nodes are mutually visible over an FSA state when, at every sample epoch
(default: start, midpoint, end of the state):

    - each lies inside the other's pointing cone (nodes without a cone are
      unconstrained; ground stations always point about the local vertical,
      satellites and users about the configured axis, nadir by default),
    - the sight line clears the Earth sphere (skipped when either endpoint is
      a ground station - the station's elevation cone already encodes the
      horizon, and a surface endpoint would trip the occlusion test
      spuriously),
    - the sight line clears the Moon.

Anchor satellites are those visible to at least one ground station in the
state. User preprocessing replaces each logical user's row with the
elementwise OR of its members' rows, blanks the member rows, and zeroes every
user-user entry so users can only link to satellites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import ephemeris as eph
from .errors import ScenarioError
from .scenario import NodeKind, Scenario


@dataclass(frozen=True)
class VisibilityMatrix:
    """Symmetric boolean node-by-node matrix for one FSA state."""

    fsa_index: int
    y: np.ndarray                 # (n, n) boolean, zero diagonal
    anchors: frozenset
    non_anchors: frozenset
    sample_times_s: tuple = ()

    def visible(self, i: int, j: int) -> bool:
        return bool(self.y[i, j])

    def degree(self, i: int) -> int:
        return int(self.y[i].sum())


def los_clear(p1, p2, occluder_radius: float) -> bool:
    """True iff the segment p1-p2 stays outside the origin-centered sphere."""
    a = np.asarray(p1, dtype=float)
    b = np.asarray(p2, dtype=float)
    d = b - a
    dd = float(d @ d)
    t = 0.0 if dd == 0.0 else min(1.0, max(0.0, float(-(a @ d)) / dd))
    closest = a + t * d
    return float(np.linalg.norm(closest)) > occluder_radius


def within_pointing(state: eph.EciState, target, cone_half_angle_deg: float,
                    axis: str = "zenith") -> bool:
    """True iff the target sits inside the cone about the radial axis.

    axis selects the cone direction: "zenith" opens away from the Earth's
    center, "nadir" toward it. The check carries a 1e-9 deg tolerance so
    boundary geometries (a ground station seeing a satellite exactly at its
    minimum elevation) count as visible.
    """
    rel = np.asarray(target, dtype=float) - state.position
    rel_norm = float(np.linalg.norm(rel))
    pos_norm = float(np.linalg.norm(state.position))
    if rel_norm == 0.0 or pos_norm == 0.0:
        return True
    axis_vec = state.position / pos_norm
    if axis == "nadir":
        axis_vec = -axis_vec
    elif axis != "zenith":
        raise ScenarioError(f"pointing axis must be nadir or zenith, got {axis!r}")
    cos_angle = min(1.0, max(-1.0, float(rel @ axis_vec) / rel_norm))
    return math.degrees(math.acos(cos_angle)) <= cone_half_angle_deg + 1e-9


def _segment_blocked(points: np.ndarray, center: np.ndarray,
                     radius: float, pair_mask: np.ndarray) -> np.ndarray:
    """Boolean (n, n) matrix: segment i-j dips inside the sphere at center."""
    p = points - center
    # pairwise closest approach of each chord to the sphere center
    d = p[None, :, :] - p[:, None, :]      # d[i, j] = p[j] - p[i]
    dd = np.einsum("ijk,ijk->ij", d, d)
    ad = np.einsum("ik,ijk->ij", p, d)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(dd > 0.0, -ad / dd, 0.0)
    t = np.clip(t, 0.0, 1.0)
    closest = p[:, None, :] + t[:, :, None] * d
    dist = np.linalg.norm(closest, axis=2)
    return pair_mask & (dist <= radius)


def _sample_times(grid, fsa_index: int, samples: int) -> list[float]:
    start = fsa_index * grid.fsa_s
    if samples == 1:
        return [start + 0.5 * grid.fsa_s]
    return [start + grid.fsa_s * i / (samples - 1) for i in range(samples)]


def fsa_visibility(scenario: Scenario, fsa_index: int) -> VisibilityMatrix:
    """Raw visibility over all nodes, member nodes included."""
    grid = scenario.grid
    if not 0 <= fsa_index < grid.horizon_fsas:
        raise ScenarioError(f"FSA index {fsa_index} outside horizon "
                            f"[0, {grid.horizon_fsas})")
    nodes = scenario.nodes
    n = len(nodes)
    geometry = scenario.geometry
    times = _sample_times(grid, fsa_index, geometry.samples_per_fsa)

    is_gs = np.array([nd.kind == NodeKind.GROUND_STATION for nd in nodes])
    has_motion = np.array([nd.motion is not None for nd in nodes])
    cones = np.array([nd.pointing_half_angle_deg
                      if nd.pointing_half_angle_deg is not None else 360.0
                      for nd in nodes])

    ok = np.ones((n, n), dtype=bool)
    np.fill_diagonal(ok, False)
    ok &= has_motion[:, None] & has_motion[None, :]

    earth_pairs = ~(is_gs[:, None] | is_gs[None, :])

    for t in times:
        pos = np.zeros((n, 3))
        for nd in nodes:
            if nd.motion is not None:
                pos[nd.id] = eph.state_of(nd.motion, t).position

        # mutual pointing: angle from each node's axis to the partner
        norms = np.linalg.norm(pos, axis=1)
        safe = np.where(norms > 0.0, norms, 1.0)
        radial = pos / safe[:, None]
        axis = np.where(is_gs[:, None], radial,
                        radial if geometry.pointing_axis == "zenith" else -radial)
        rel = pos[None, :, :] - pos[:, None, :]          # rel[i, j] = j - i
        rel_norm = np.linalg.norm(rel, axis=2)
        rel_safe = np.where(rel_norm > 0.0, rel_norm, 1.0)
        cos_angle = np.clip(np.einsum("ijk,ik->ij", rel, axis) / rel_safe, -1.0, 1.0)
        angle = np.degrees(np.arccos(cos_angle))
        in_cone = angle <= cones[:, None] + 1e-9
        ok &= in_cone & in_cone.T

        earth_radius = eph.EARTH_RADIUS_KM + geometry.occlusion_margin_km
        ok &= ~_segment_blocked(pos, np.zeros(3), earth_radius, earth_pairs)
        moon = eph.moon_state(t).position
        ok &= ~_segment_blocked(pos, moon, eph.MOON_RADIUS_KM, np.ones((n, n), bool))

        np.fill_diagonal(ok, False)

    sat_ids = scenario.satellite_ids
    gs_ids = scenario.ground_station_ids
    anchors = frozenset(s for s in sat_ids
                        if gs_ids and ok[s, gs_ids].any())
    return VisibilityMatrix(fsa_index, ok, anchors,
                            frozenset(sat_ids) - anchors, tuple(times))


def preprocess_users(vm: VisibilityMatrix, scenario: Scenario) -> VisibilityMatrix:
    """Fold members into logical users and forbid direct user-user links."""
    y = vm.y.copy()
    for uid in scenario.user_ids:
        members = scenario.members_of(uid)
        if members:
            folded = y[members].any(axis=0)
            y[uid, :] = folded
            y[:, uid] = folded
    for mid in scenario.member_ids:
        y[mid, :] = False
        y[:, mid] = False
    user_like = [nd.id for nd in scenario.nodes if nd.kind == NodeKind.USER]
    y[np.ix_(user_like, user_like)] = False
    np.fill_diagonal(y, False)
    return VisibilityMatrix(vm.fsa_index, y, vm.anchors, vm.non_anchors,
                            vm.sample_times_s)
