"""Typed contact plans and their CSV/JSON serializations.

A contact is one bidirectional link occupying one slot. Plans nest as
slot -> superframe -> FSA -> horizon. The CSV export is byte-stable for a
given scenario and seed (rows fully sorted, no timing data); the JSON export
mirrors it and additionally carries solver metadata including wall times.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

KIND_RANGING = "gnss-gnss"
KIND_SERVICE = "gnss-user"


@dataclass(frozen=True, order=True)
class Contact:
    """One slot-long link between node_a < node_b.

    member is set on links to a logical user: the id of the physical member
    node that realizes the contact.
    """

    slot: int
    node_a: int
    node_b: int
    kind: str
    member: Optional[int] = None

    def __post_init__(self):
        if self.node_a >= self.node_b:
            raise ValueError(f"contact endpoints must satisfy node_a < node_b, "
                             f"got ({self.node_a}, {self.node_b})")

    def involves(self, node_id: int) -> bool:
        return node_id in (self.node_a, self.node_b)

    def other(self, node_id: int) -> int:
        return self.node_b if node_id == self.node_a else self.node_a


@dataclass
class SolverStats:
    status: str               # "optimal" | "feasible" | "replicated"
    objective: float
    gap: Optional[float]
    wall_time_s: float
    columns: int = 0
    rows: int = 0
    backend: str = ""


@dataclass
class SuperframePlan:
    """Solved (or replicated) schedule for one superframe."""

    fsa_index: int
    superframe: int
    slots: int
    contacts: list[Contact] = field(default_factory=list)
    # pairs whose ranging indicator is set (>= 1 contact this superframe)
    ranging_pairs: list[tuple[int, int]] = field(default_factory=list)
    run_starts: dict[int, list[tuple[int, int]]] = field(default_factory=dict)
    deficits: dict[int, int] = field(default_factory=dict)
    objective: float = 0.0
    stats: Optional[SolverStats] = None
    replicated: bool = False

    def __post_init__(self):
        self.contacts.sort()

    def contacts_in_slot(self, slot: int) -> list[Contact]:
        return [c for c in self.contacts if c.slot == slot]

    def degree(self, node_id: int, slot: int) -> int:
        return sum(1 for c in self.contacts
                   if c.slot == slot and c.involves(node_id))

    def partners_of(self, node_id: int) -> set:
        return {c.other(node_id) for c in self.contacts if c.involves(node_id)}

    def service_contacts(self) -> list[Contact]:
        return [c for c in self.contacts if c.kind == KIND_SERVICE]

    def ranging_contacts(self) -> list[Contact]:
        return [c for c in self.contacts if c.kind == KIND_RANGING]

    def replicate(self, superframe: int) -> "SuperframePlan":
        """Copy of this plan stamped onto another superframe index."""
        return SuperframePlan(
            fsa_index=self.fsa_index, superframe=superframe, slots=self.slots,
            contacts=list(self.contacts),
            ranging_pairs=list(self.ranging_pairs),
            run_starts={k: list(v) for k, v in self.run_starts.items()},
            deficits=dict(self.deficits), objective=self.objective,
            stats=SolverStats("replicated", self.objective, None, 0.0,
                              backend=self.stats.backend if self.stats else ""),
            replicated=True)


@dataclass
class FsaRecord:
    """All superframes of one FSA state plus its anchor partition."""

    fsa_index: int
    anchors: frozenset
    non_anchors: frozenset
    superframes: list[SuperframePlan] = field(default_factory=list)
    solve_count: int = 0
    unmet_runs: dict[int, int] = field(default_factory=dict)


@dataclass
class HorizonPlan:
    scenario_name: str
    node_names: list[str]
    fsas: list[FsaRecord] = field(default_factory=list)

    def all_superframes(self) -> list[SuperframePlan]:
        return [sf for rec in self.fsas for sf in rec.superframes]

    def total_solves(self) -> int:
        return sum(rec.solve_count for rec in self.fsas)

    # -- exports ------------------------------------------------------------

    def write_csv(self, path) -> None:
        """Rows `fsa,superframe,slot,node_a,node_b,kind`, fully sorted."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["fsa", "superframe", "slot", "node_a", "node_b", "kind"])
            for rec in self.fsas:
                for sf in rec.superframes:
                    for c in sf.contacts:
                        writer.writerow([rec.fsa_index, sf.superframe, c.slot,
                                         self.node_names[c.node_a],
                                         self.node_names[c.node_b], c.kind])

    def to_dict(self) -> dict:
        out = {"scenario": self.scenario_name, "fsas": []}
        for rec in self.fsas:
            entry = {
                "fsa": rec.fsa_index,
                "anchors": sorted(rec.anchors),
                "non_anchors": sorted(rec.non_anchors),
                "solve_count": rec.solve_count,
                "unmet_runs": {str(k): v for k, v in sorted(rec.unmet_runs.items())},
                "superframes": [],
            }
            for sf in rec.superframes:
                stats = sf.stats
                entry["superframes"].append({
                    "superframe": sf.superframe,
                    "replicated": sf.replicated,
                    "objective": sf.objective,
                    "status": stats.status if stats else None,
                    "gap": stats.gap if stats else None,
                    "wall_time_s": stats.wall_time_s if stats else None,
                    "deficits": {str(k): v for k, v in sorted(sf.deficits.items())},
                    "contacts": [
                        {"slot": c.slot,
                         "a": self.node_names[c.node_a],
                         "b": self.node_names[c.node_b],
                         "kind": c.kind,
                         "member": (self.node_names[c.member]
                                    if c.member is not None else None)}
                        for c in sf.contacts],
                })
            out["fsas"].append(entry)
        return out

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")
