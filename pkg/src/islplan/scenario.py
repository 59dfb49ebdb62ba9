"""Domain types and scenario-file ingestion.

A scenario file is JSON with these sections:

    {
      "name": "...",
      "time": {"fsa_s": 300, "superframe_s": 60, "slot_s": 3,
               "horizon_fsas": 2016},
      "geometry": {"pointing_axis": "nadir", "samples_per_fsa": 3,
                   "occlusion_margin_km": 0.0},
      "constellation": {
        "walker": {"total": 24, "planes": 3, "phasing": 1,
                   "altitude_km": 21528, "inclination_deg": 55,
                   "pointing_half_angle_deg": 60},
        "geo": {"longitudes_deg": [80, 110.5, 140], "altitude_km": 35786,
                "pointing_half_angle_deg": 45},
        "igso": {"count": 3, "inclination_deg": 55,
                 "crossing_longitude_deg": 118, "altitude_km": 35786,
                 "pointing_half_angle_deg": 45}
      },
      "ground_stations": [{"name": "...", "lat_deg": ..., "lon_deg": ...,
                           "alt_km": 0, "pointing_half_angle_deg": 85}],
      "users": [
        {"name": "...", "kind": "geo", "longitude_deg": 90,
         "requirement": [1, 1, 4, 1]},
        {"name": "...", "kind": "igso", "crossing_longitude_deg": 100,
         "raan_deg": 0, "requirement": [1, 1, 4, 1]},
        {"name": "...", "kind": "lp-l4", "requirement": [1, 2, 4, 1]},
        {"name": "...", "kind": "dro", "radius_km": 70000,
         "requirement": [1, 2, 4, 1]},
        {"name": "...", "kind": "custom-ephemeris",
         "states": [[0, x, y, z], [600, x, y, z]], "requirement": [...]},
        {"name": "...", "kind": "logical", "requirement": [1, 2, 1, 1],
         "members": [{"name": "m1", "kind": "lp-l3"}, ...]}
      ],
      "ilp": {"min_ranging_partners": 11, "delay_window_slots": 3,
              "unmet_penalty": 1000, "big_m": 30,
              "time_limit_s": 600, "gap": 0.0}
    }

Node ids are dense integers assigned in declaration order: Walker satellites,
then GEO, then IGSO, then ground stations, then users, then members of
logical users. A requirement vector [a, b, c, d] reads: the user requests,
every a-th FSA state, c contact runs of exactly b consecutive slots each,
using up to d terminals at once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

from .errors import ScenarioError
from . import ephemeris as eph
from .ephemeris import (DroTrack, GroundSite, KeplerElements, LibrationPoint,
                        Motion, StateTable)


class NodeKind(str, Enum):
    MEO = "gnss-meo"
    GEO = "gnss-geo"
    IGSO = "gnss-igso"
    GROUND_STATION = "ground-station"
    USER = "user"

    @property
    def is_satellite(self) -> bool:
        return self in (NodeKind.MEO, NodeKind.GEO, NodeKind.IGSO)


@dataclass(frozen=True)
class TimeGrid:
    """FSA-state / superframe / slot hierarchy and index arithmetic."""

    fsa_s: float = 300.0
    superframe_s: float = 60.0
    slot_s: float = 3.0
    horizon_fsas: int = 1

    def __post_init__(self):
        for name, outer, inner in (("fsa_s/superframe_s", self.fsa_s, self.superframe_s),
                                   ("superframe_s/slot_s", self.superframe_s, self.slot_s)):
            if inner <= 0 or outer <= 0:
                raise ScenarioError(f"non-positive duration in {name}")
            ratio = outer / inner
            if abs(ratio - round(ratio)) > 1e-9:
                raise ScenarioError(
                    f"{name} = {outer}/{inner} is not an integer multiple")
        if self.horizon_fsas < 1:
            raise ScenarioError("horizon must cover at least one FSA state")

    @property
    def superframes_per_fsa(self) -> int:
        return round(self.fsa_s / self.superframe_s)

    @property
    def slots_per_superframe(self) -> int:
        return round(self.superframe_s / self.slot_s)

    def slot_start_s(self, fsa: int, superframe: int, slot: int) -> float:
        return fsa * self.fsa_s + superframe * self.superframe_s + slot * self.slot_s

    def superframe_midpoint_s(self, fsa: int, superframe: int) -> float:
        return fsa * self.fsa_s + (superframe + 0.5) * self.superframe_s

    def flatten(self, fsa: int, superframe: int, slot: int) -> int:
        m, k = self.superframes_per_fsa, self.slots_per_superframe
        if not (0 <= superframe < m and 0 <= slot < k and 0 <= fsa < self.horizon_fsas):
            raise ScenarioError(f"index out of range: ({fsa}, {superframe}, {slot})")
        return (fsa * m + superframe) * k + slot

    def unflatten(self, global_slot: int) -> tuple[int, int, int]:
        m, k = self.superframes_per_fsa, self.slots_per_superframe
        if not 0 <= global_slot < self.horizon_fsas * m * k:
            raise ScenarioError(f"global slot out of range: {global_slot}")
        fsa, rem = divmod(global_slot, m * k)
        superframe, slot = divmod(rem, k)
        return fsa, superframe, slot


@dataclass(frozen=True)
class Node:
    id: int
    name: str
    kind: NodeKind
    motion: Optional[Motion]  # None: logical aggregate with no terminal of its own
    terminal_count: int = 1
    pointing_half_angle_deg: Optional[float] = None  # None: unconstrained
    member_of: Optional[int] = None  # parent user id for logical-user members

    def __post_init__(self):
        if self.kind.is_satellite and self.terminal_count != 1:
            raise ScenarioError(
                f"satellite {self.name!r} must have exactly one terminal")
        if self.terminal_count < 1:
            raise ScenarioError(f"node {self.name!r} terminal count < 1")


@dataclass(frozen=True)
class UserRequirement:
    """Request vector [a, b, c, d] attached to one user node."""

    user_id: int
    occurrence_every_fsas: int   # a
    run_slots: int               # b
    runs_per_occurrence: int     # c
    terminal_count: int          # d

    def violations(self, grid: TimeGrid) -> list[str]:
        out = []
        if self.occurrence_every_fsas < 1:
            out.append(f"user {self.user_id}: occurrence interval a >= 1 violated "
                       f"(got {self.occurrence_every_fsas})")
        if not 1 <= self.run_slots <= grid.slots_per_superframe:
            out.append(f"user {self.user_id}: run length b must lie in "
                       f"[1, {grid.slots_per_superframe}] (got {self.run_slots})")
        if self.runs_per_occurrence < 1:
            out.append(f"user {self.user_id}: run count c >= 1 violated "
                       f"(got {self.runs_per_occurrence})")
        if self.terminal_count < 1:
            out.append(f"user {self.user_id}: terminal count d >= 1 violated "
                       f"(got {self.terminal_count})")
        return out


@dataclass(frozen=True)
class RequestEntry:
    """Residual demand for one user: runs of run_slots still owed."""

    user_id: int
    run_slots: int        # b
    runs_remaining: int   # c at FSA scope, residual at superframe scope
    terminal_count: int   # d

    def __post_init__(self):
        if self.run_slots < 1 or self.runs_remaining < 1 or self.terminal_count < 1:
            raise ScenarioError(f"request entry for user {self.user_id} must have "
                                f"positive b, c, d")


@dataclass(frozen=True)
class ServiceRequest:
    """User demand at FSA or superframe granularity (U_f / U_s shape)."""

    entries: tuple = ()

    @property
    def is_empty(self) -> bool:
        return not self.entries

    def for_user(self, user_id: int) -> Optional[RequestEntry]:
        for e in self.entries:
            if e.user_id == user_id:
                return e
        return None

    def user_ids(self) -> list[int]:
        return [e.user_id for e in self.entries]


@dataclass(frozen=True)
class IlpParams:
    min_ranging_partners: int = 11     # distinct satellite partners per superframe
    delay_window_slots: int = 3        # every window this long has an anchor contact
    unmet_penalty: float = 1000.0      # objective weight per undelivered run
    big_m: int = 30                    # linking constant; must exceed K
    time_limit_s: float = 600.0
    gap: float = 0.0
    backend: str = "highs"
    # tie-break among equally good plans toward denser ones; with <= 600
    # satellite-pair slot variables the total bonus stays under 1e-3, far
    # below one unit of the real objective, so the optimum set is unchanged
    density_bonus: float = 1e-6

    def validate(self, grid: TimeGrid) -> None:
        k = grid.slots_per_superframe
        if self.big_m <= k:
            raise ScenarioError(
                f"big_m ({self.big_m}) must exceed slots per superframe ({k})")
        if self.min_ranging_partners < 0:
            raise ScenarioError("min_ranging_partners must be >= 0")
        if not 1 <= self.delay_window_slots <= k:
            raise ScenarioError(
                f"delay window must lie in [1, {k}] slots (got {self.delay_window_slots})")
        if self.unmet_penalty < 0:
            raise ScenarioError("unmet_penalty must be >= 0")
        if self.time_limit_s <= 0:
            raise ScenarioError("time limit must be positive")
        if self.gap < 0:
            raise ScenarioError("gap tolerance must be >= 0")


@dataclass(frozen=True)
class GeometryConfig:
    pointing_axis: str = "nadir"       # "nadir" | "zenith" for satellite cones
    samples_per_fsa: int = 3           # visibility must hold at every sample
    occlusion_margin_km: float = 0.0   # added to the Earth occluder radius

    def __post_init__(self):
        if self.pointing_axis not in ("nadir", "zenith"):
            raise ScenarioError(f"pointing axis must be nadir or zenith, "
                                f"got {self.pointing_axis!r}")
        if self.samples_per_fsa < 1:
            raise ScenarioError("samples_per_fsa must be >= 1")


@dataclass
class Scenario:
    name: str
    grid: TimeGrid
    nodes: list[Node]
    requirements: list[UserRequirement]
    ilp: IlpParams = field(default_factory=IlpParams)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    raw: Optional[dict] = None  # source document for round-trip serialization

    # -- derived node views -------------------------------------------------

    @property
    def satellite_ids(self) -> list[int]:
        return [n.id for n in self.nodes if n.kind.is_satellite]

    @property
    def ground_station_ids(self) -> list[int]:
        return [n.id for n in self.nodes if n.kind == NodeKind.GROUND_STATION]

    @property
    def user_ids(self) -> list[int]:
        """Top-level users (logical aggregates count once, members excluded)."""
        return [n.id for n in self.nodes
                if n.kind == NodeKind.USER and n.member_of is None]

    @property
    def member_ids(self) -> list[int]:
        return [n.id for n in self.nodes if n.member_of is not None]

    def members_of(self, user_id: int) -> list[int]:
        return [n.id for n in self.nodes if n.member_of == user_id]

    def node(self, node_id: int) -> Node:
        return self.nodes[node_id]

    def node_by_name(self, name: str) -> Node:
        for n in self.nodes:
            if n.name == name:
                return n
        raise ScenarioError(f"no node named {name!r}")

    def requirement_for(self, user_id: int) -> UserRequirement:
        for r in self.requirements:
            if r.user_id == user_id:
                return r
        raise ScenarioError(f"no requirement for user id {user_id}")

    # -- validation ---------------------------------------------------------

    def validate(self) -> None:
        ids = [n.id for n in self.nodes]
        if ids != list(range(len(self.nodes))):
            raise ScenarioError("node ids must be dense integers in declaration order")
        names = [n.name for n in self.nodes]
        if len(set(names)) != len(names):
            raise ScenarioError("node names must be unique")
        self.ilp.validate(self.grid)
        user_ids = set(self.user_ids)
        req_ids = [r.user_id for r in self.requirements]
        if len(set(req_ids)) != len(req_ids):
            raise ScenarioError("duplicate requirement entries")
        for r in self.requirements:
            if r.user_id not in user_ids:
                raise ScenarioError(f"requirement references non-user id {r.user_id}")
        problems = validate_requirements(self.requirements, self.grid)
        if problems:
            raise ScenarioError("; ".join(problems))
        for n in self.nodes:
            if n.member_of is not None:
                parent = self.node(n.member_of)
                if parent.kind != NodeKind.USER or parent.member_of is not None:
                    raise ScenarioError(
                        f"member {n.name!r} must belong to a top-level user")
            if n.motion is None and not self.members_of(n.id):
                raise ScenarioError(
                    f"node {n.name!r} has neither a motion model nor members")

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        if self.raw is not None:
            return self.raw
        raise ScenarioError("scenario was built programmatically; no source document")

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def validate_requirements(requirements, grid: TimeGrid) -> list[str]:
    """Collect invariant violations; an empty list means all pass."""
    out = []
    for r in requirements:
        out.extend(r.violations(grid))
    return out


# ---------------------------------------------------------------------------
# JSON ingestion


def _require(section: dict, key: str, context: str):
    if key not in section:
        raise ScenarioError(f"missing {key!r} in {context}")
    return section[key]


def _user_motion(spec: dict, context: str) -> Motion:
    kind = _require(spec, "kind", context)
    if kind == "geo":
        return eph.geo_elements(_require(spec, "longitude_deg", context),
                                spec.get("altitude_km", 35786.0))
    if kind == "igso":
        return eph.igso_elements(_require(spec, "crossing_longitude_deg", context),
                                 spec.get("raan_deg", 0.0),
                                 spec.get("inclination_deg", 55.0),
                                 spec.get("altitude_km", 35786.0))
    if kind in ("lp-l3", "lp-l4", "lp-l5"):
        return LibrationPoint(kind.split("-")[1])
    if kind == "dro":
        return DroTrack(spec.get("radius_km", 70000.0), spec.get("phase_deg", 0.0))
    if kind == "custom-ephemeris":
        rows = _require(spec, "states", context)
        try:
            times = tuple(float(r[0]) for r in rows)
            positions = tuple((float(r[1]), float(r[2]), float(r[3])) for r in rows)
        except (TypeError, ValueError, IndexError) as exc:
            raise ScenarioError(f"bad state row in {context}: {exc}") from None
        return StateTable(times, positions)
    raise ScenarioError(f"unknown user kind {kind!r} in {context}")


def scenario_from_dict(doc: dict, name: str = "scenario") -> Scenario:
    """Build and validate a Scenario from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    tsec = doc.get("time", {})
    grid = TimeGrid(tsec.get("fsa_s", 300.0), tsec.get("superframe_s", 60.0),
                    tsec.get("slot_s", 3.0), tsec.get("horizon_fsas", 1))
    gsec = doc.get("geometry", {})
    geometry = GeometryConfig(gsec.get("pointing_axis", "nadir"),
                              gsec.get("samples_per_fsa", 3),
                              gsec.get("occlusion_margin_km", 0.0))
    isec = doc.get("ilp", {})
    params = IlpParams(
        min_ranging_partners=isec.get("min_ranging_partners", 11),
        delay_window_slots=isec.get("delay_window_slots", 3),
        unmet_penalty=isec.get("unmet_penalty", 1000.0),
        big_m=isec.get("big_m", 30),
        time_limit_s=isec.get("time_limit_s", 600.0),
        gap=isec.get("gap", 0.0),
        backend=isec.get("backend", "highs"),
    )

    nodes: list[Node] = []

    def add(name_, kind, motion, terminal_count=1, cone=None, member_of=None):
        nodes.append(Node(len(nodes), name_, kind, motion, terminal_count,
                          cone, member_of))
        return nodes[-1].id

    csec = doc.get("constellation", {})
    wsec = csec.get("walker")
    if wsec:
        cone = wsec.get("pointing_half_angle_deg", 60.0)
        elements = eph.walker_delta(_require(wsec, "total", "constellation.walker"),
                                    _require(wsec, "planes", "constellation.walker"),
                                    wsec.get("phasing", 0),
                                    _require(wsec, "altitude_km", "constellation.walker"),
                                    _require(wsec, "inclination_deg", "constellation.walker"))
        for i, el in enumerate(elements):
            add(f"meo-{i:02d}", NodeKind.MEO, el, cone=cone)
    geo = csec.get("geo")
    if geo:
        cone = geo.get("pointing_half_angle_deg", 45.0)
        for i, lon in enumerate(_require(geo, "longitudes_deg", "constellation.geo")):
            add(f"geo-{i}", NodeKind.GEO,
                eph.geo_elements(lon, geo.get("altitude_km", 35786.0)), cone=cone)
    igso = csec.get("igso")
    if igso:
        cone = igso.get("pointing_half_angle_deg", 45.0)
        count = igso.get("count", 3)
        crossing = igso.get("crossing_longitude_deg", 118.0)
        for i in range(count):
            add(f"igso-{i}", NodeKind.IGSO,
                eph.igso_elements(crossing, 360.0 * i / count,
                                  igso.get("inclination_deg", 55.0),
                                  igso.get("altitude_km", 35786.0)), cone=cone)

    for g in doc.get("ground_stations", []):
        add(_require(g, "name", "ground_stations"), NodeKind.GROUND_STATION,
            GroundSite(_require(g, "lat_deg", "ground_stations"),
                       _require(g, "lon_deg", "ground_stations"),
                       g.get("alt_km", 0.0)),
            cone=g.get("pointing_half_angle_deg", 85.0))

    requirements: list[UserRequirement] = []
    deferred_members: list[tuple[int, dict]] = []
    for uspec in doc.get("users", []):
        uname = _require(uspec, "name", "users")
        cone = uspec.get("pointing_half_angle_deg")
        if uspec.get("kind") == "logical":
            members = _require(uspec, "members", f"user {uname!r}")
            if not members:
                raise ScenarioError(f"logical user {uname!r} has no members")
            uid = add(uname, NodeKind.USER, None,
                      terminal_count=max(1, _req_terminals(uspec)), cone=cone)
            for mspec in members:
                deferred_members.append((uid, mspec))
        else:
            uid = add(uname, NodeKind.USER, _user_motion(uspec, f"user {uname!r}"),
                      terminal_count=max(1, _req_terminals(uspec)), cone=cone)
        req = uspec.get("requirement")
        if req is not None:
            if len(req) != 4:
                raise ScenarioError(f"user {uname!r}: requirement must be [a,b,c,d]")
            requirements.append(UserRequirement(uid, int(req[0]), int(req[1]),
                                                int(req[2]), int(req[3])))
    # members after every top-level user so top-level ids stay contiguous
    for parent_id, mspec in deferred_members:
        mname = _require(mspec, "name", "logical member")
        add(mname, NodeKind.USER, _user_motion(mspec, f"member {mname!r}"),
            member_of=parent_id)

    scn = Scenario(name=doc.get("name", name), grid=grid, nodes=nodes,
                   requirements=requirements, ilp=params, geometry=geometry,
                   raw=doc)
    scn.validate()
    return scn


def _req_terminals(uspec: dict) -> int:
    req = uspec.get("requirement")
    return int(req[3]) if req and len(req) == 4 else 1


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file."""
    p = Path(path)
    if not p.exists():
        raise ScenarioError(f"scenario file not found: {p}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{p}: line {exc.lineno}: {exc.msg}") from None
    return scenario_from_dict(doc, name=p.stem)
