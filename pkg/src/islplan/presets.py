"""Bundled BeiDou-class scenario and the reproduction presets.

The base scenario (24/3/1 Walker MEO shell at 21528 km plus 3 GEO, 3 IGSO
and 3 domestic ground stations) ships as package data. Presets extend it
with user sets and demand vectors:

    case0       bare constellation, no users
    case1       2 GEO + 2 IGSO users, each asking 20 single-slot runs per FSA
    case2       4 cislunar users (L3/L4/L5/DRO), each asking 10 two-slot runs
    case1s      the case1 users present but with an empty demand vector
    case2s      the case1 users asking 4 single-slot runs per FSA
    case3s      case2s plus the cislunar users asking 4 two-slot runs
    lp-single-1 one logical cislunar user (members L3/L4/L5/DRO) asking one
                two-slot run per FSA
    lp-single-3 same user asking three runs per FSA

The trailing "s" spellings stand in for the starred case names, which are
awkward in shells; both spellings are accepted.
"""

from __future__ import annotations

import copy
import json
from importlib import resources

from .errors import ScenarioError
from .scenario import Scenario, scenario_from_dict

GEO_IGSO_USERS = (
    {"name": "user-geo-90", "kind": "geo", "longitude_deg": 90.0},
    {"name": "user-geo-130", "kind": "geo", "longitude_deg": 130.0},
    {"name": "user-igso-100", "kind": "igso", "crossing_longitude_deg": 100.0,
     "raan_deg": 0.0},
    {"name": "user-igso-140", "kind": "igso", "crossing_longitude_deg": 140.0,
     "raan_deg": 120.0},
)

LP_USERS = (
    {"name": "user-l3", "kind": "lp-l3"},
    {"name": "user-l4", "kind": "lp-l4"},
    {"name": "user-l5", "kind": "lp-l5"},
    {"name": "user-dro", "kind": "dro", "radius_km": 70000.0},
)

LP_CLUSTER = {
    "name": "user-lp-cluster", "kind": "logical",
    "members": [
        {"name": "member-l3", "kind": "lp-l3"},
        {"name": "member-l4", "kind": "lp-l4"},
        {"name": "member-l5", "kind": "lp-l5"},
        {"name": "member-dro", "kind": "dro", "radius_km": 70000.0},
    ],
}


def base_dict() -> dict:
    """Parsed copy of the bundled constellation scenario."""
    text = resources.files("islplan").joinpath("data/beidou.scn").read_text()
    return json.loads(text)


def _users(templates, requirement=None) -> list:
    out = []
    for template in templates:
        user = copy.deepcopy(template)
        if requirement is not None:
            user["requirement"] = list(requirement)
        out.append(user)
    return out


def _preset_dict(name: str) -> dict:
    doc = base_dict()
    if name == "case0":
        pass
    elif name == "case1":
        doc["users"] = _users(GEO_IGSO_USERS, [1, 1, 20, 1])
    elif name == "case2":
        doc["users"] = _users(LP_USERS, [1, 2, 10, 1])
    elif name == "case1s":
        doc["users"] = _users(GEO_IGSO_USERS)
    elif name == "case2s":
        doc["users"] = _users(GEO_IGSO_USERS, [1, 1, 4, 1])
    elif name == "case3s":
        doc["users"] = (_users(GEO_IGSO_USERS, [1, 1, 4, 1])
                        + _users(LP_USERS, [1, 2, 4, 1]))
    elif name == "lp-single-1":
        doc["users"] = _users([LP_CLUSTER], [1, 2, 1, 1])
    elif name == "lp-single-3":
        doc["users"] = _users([LP_CLUSTER], [1, 2, 3, 1])
    else:
        raise ScenarioError(f"unknown preset {name!r}; choose from "
                            f"{', '.join(preset_names())}")
    doc["name"] = name
    return doc


def normalize_preset_name(name: str) -> str:
    return name.replace("*", "s").lower()


def preset_names() -> list:
    return ["case0", "case1", "case2", "case1s", "case2s", "case3s",
            "lp-single-1", "lp-single-3"]


def preset_scenario(name: str) -> Scenario:
    """Build and validate one of the named reproduction scenarios."""
    return scenario_from_dict(_preset_dict(normalize_preset_name(name)))
