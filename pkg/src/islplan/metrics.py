"""Plan quality metrics and report emission.

Scoring conventions:

    throughput      non-anchor-to-anchor slot contacts (the objective's
                    positive term, recomputed from raw contacts).
    waits           per non-anchor satellite, maximal runs of slots with no
                    anchor contact on the concatenated slot sequence of one
                    FSA (the partition is constant within an FSA). avg_wait
                    is the mean run length immediately preceding each anchor
                    contact; max_intra resets at superframe boundaries (the
                    quantity the delay-window rows bound by T_m - 1);
                    max_cross does not reset and is reported separately.
    ranging         distinct satellite partners per satellite per superframe;
                    repeats add nothing.
    pdop            geometry score at the superframe midpoint from unit
                    vectors to that superframe's distinct ranging partners.
                    Position-only normal matrix by default (see pdop()).
    utilization     mean over satellites of busy-slot fraction.
    satisfaction    delivered standard runs / requested runs per user over
                    the reporting window.
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import ephemeris as eph
from .plan import FsaRecord, HorizonPlan, KIND_RANGING, SuperframePlan
from .scenario import Scenario

PDOP_CONDITION_LIMIT = 1e12


# ---------------------------------------------------------------------------
# primitive metrics


def throughput(plans, anchors, non_anchors) -> int:
    """Count non-anchor/anchor contacts across the given superframe plans."""
    total = 0
    for plan in plans:
        for c in plan.contacts:
            if c.kind != KIND_RANGING:
                continue
            if (c.node_a in anchors) != (c.node_b in anchors):
                if c.node_a in non_anchors or c.node_b in non_anchors:
                    total += 1
    return total


@dataclass
class WaitStats:
    avg_wait: float
    max_intra: int
    max_cross: int
    contact_count: int


def waits_for(record: FsaRecord, sat_id: int) -> WaitStats:
    """Zero-run statistics of one non-anchor's anchor-contact sequence."""
    sequence = []
    for plan in record.superframes:
        row = [0] * plan.slots
        for c in plan.contacts:
            if c.kind != KIND_RANGING or not c.involves(sat_id):
                continue
            if c.other(sat_id) in record.anchors:
                row[c.slot] = 1
        sequence.append(row)

    flat = [v for row in sequence for v in row]
    waits = []
    run = 0
    max_cross = 0
    for v in flat:
        if v:
            waits.append(run)
            run = 0
        else:
            run += 1
            max_cross = max(max_cross, run)
    max_intra = 0
    for row in sequence:
        run = 0
        for v in row:
            run = 0 if v else run + 1
            max_intra = max(max_intra, run)
    avg = float(np.mean(waits)) if waits else float(len(flat))
    return WaitStats(avg, max_intra, max_cross, len(waits))


def ranging_links(plan: SuperframePlan) -> dict:
    """Distinct satellite partners per satellite for one superframe."""
    partners = defaultdict(set)
    for c in plan.contacts:
        if c.kind == KIND_RANGING:
            partners[c.node_a].add(c.node_b)
            partners[c.node_b].add(c.node_a)
    return {s: len(p) for s, p in partners.items()}


def pdop(sat_id: int, plan: SuperframePlan, scenario: Scenario,
         clock_column: bool = False) -> Optional[float]:
    """Position dilution of precision from this superframe's ranging partners.

    One row per distinct partner holds the negated unit vector from the
    satellite to the partner, evaluated at the superframe midpoint. The
    default normal matrix is position-only (3 columns): on a near-spherical
    GNSS shell every partner direction has a similar radial component, so an
    appended clock column correlates strongly with the geometry columns and
    roughly triples the score; the position-only form matches the reported
    quality range. Pass clock_column=True for the 4-column estimator form.

    Returns None when fewer than 4 partners exist or the normal matrix is
    ill-conditioned.
    """
    partners = set()
    for c in plan.contacts:
        if c.kind == KIND_RANGING and c.involves(sat_id):
            partners.add(c.other(sat_id))
    if len(partners) < 4:
        return None
    t = scenario.grid.superframe_midpoint_s(plan.fsa_index, plan.superframe)
    own = eph.state_of(scenario.node(sat_id).motion, t).position
    rows = []
    for p in sorted(partners):
        rel = eph.state_of(scenario.node(p).motion, t).position - own
        u = rel / np.linalg.norm(rel)
        rows.append(np.append(-u, 1.0) if clock_column else -u)
    h = np.vstack(rows)
    normal = h.T @ h
    if np.linalg.cond(normal) > PDOP_CONDITION_LIMIT:
        return None
    inv = np.linalg.inv(normal)
    return float(np.sqrt(inv[0, 0] + inv[1, 1] + inv[2, 2]))


def utilization(plan: SuperframePlan, satellite_ids) -> float:
    """Mean busy-slot fraction over the given satellites."""
    if not satellite_ids or plan.slots == 0:
        return 0.0
    busy = defaultdict(set)
    for c in plan.contacts:
        busy[c.node_a].add(c.slot)
        busy[c.node_b].add(c.slot)
    return float(np.mean([len(busy[s]) / plan.slots for s in satellite_ids]))


def satisfaction(horizon: HorizonPlan, scenario: Scenario) -> dict:
    """Per-user delivered/requested run ratio over the horizon's FSAs."""
    requested = defaultdict(int)
    delivered = defaultdict(int)
    for rec in horizon.fsas:
        for req in scenario.requirements:
            if rec.fsa_index % req.occurrence_every_fsas == 0:
                requested[req.user_id] += req.runs_per_occurrence
        for plan in rec.superframes:
            for user, runs in plan.run_starts.items():
                delivered[user] += len(runs)
    return {u: (delivered[u] / requested[u]) if requested[u] else 1.0
            for u in sorted(requested)}


# ---------------------------------------------------------------------------
# aggregated report


@dataclass
class FsaMetrics:
    fsa_index: int
    throughput: int
    wait_avg_mean: float          # mean over non-anchors of avg_wait
    wait_max_mean: float          # mean over non-anchors of max_intra
    wait_max_intra: int
    wait_max_cross: int
    utilization_mean: float
    ranging_min: Optional[int]
    pdop_mean: Optional[float]
    pdop_max: Optional[float]
    pdop_undefined: int


@dataclass
class MetricsReport:
    scenario_name: str
    fsa_metrics: list = field(default_factory=list)
    throughput_total: int = 0
    wait_avg_overall: float = 0.0
    wait_max_intra_overall: int = 0
    wait_max_cross_overall: int = 0
    utilization_overall: float = 0.0
    ranging_min_overall: Optional[int] = None
    pdop_mean_overall: Optional[float] = None
    satisfaction_per_user: dict = field(default_factory=dict)
    satisfaction_overall: float = 1.0
    unmet_runs_total: int = 0
    solve_count: int = 0
    solve_wall_time_s: float = 0.0
    throughput_per_superframe: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario_name,
            "throughput_total": self.throughput_total,
            "wait_avg_overall": self.wait_avg_overall,
            "wait_max_intra_overall": self.wait_max_intra_overall,
            "wait_max_cross_overall": self.wait_max_cross_overall,
            "utilization_overall": self.utilization_overall,
            "ranging_min_overall": self.ranging_min_overall,
            "pdop_mean_overall": self.pdop_mean_overall,
            "satisfaction_per_user": {str(k): v for k, v
                                      in self.satisfaction_per_user.items()},
            "satisfaction_overall": self.satisfaction_overall,
            "unmet_runs_total": self.unmet_runs_total,
            "solve_count": self.solve_count,
            "solve_wall_time_s": self.solve_wall_time_s,
            "per_fsa": [vars(f) for f in self.fsa_metrics],
            "plot_series": {
                "throughput_per_superframe": self.throughput_per_superframe,
                "wait_avg_per_fsa": [f.wait_avg_mean for f in self.fsa_metrics],
                "wait_max_per_fsa": [f.wait_max_mean for f in self.fsa_metrics],
                "utilization_per_fsa": [f.utilization_mean
                                        for f in self.fsa_metrics],
                "pdop_per_fsa": [f.pdop_mean for f in self.fsa_metrics],
            },
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["fsa", "throughput", "wait_avg_mean",
                             "wait_max_mean", "wait_max_intra",
                             "wait_max_cross", "utilization_mean",
                             "ranging_min", "pdop_mean", "pdop_max",
                             "pdop_undefined"])
            for f in self.fsa_metrics:
                writer.writerow([f.fsa_index, f.throughput,
                                 f"{f.wait_avg_mean:.6f}",
                                 f"{f.wait_max_mean:.6f}",
                                 f.wait_max_intra, f.wait_max_cross,
                                 f"{f.utilization_mean:.6f}",
                                 f.ranging_min if f.ranging_min is not None else "",
                                 f"{f.pdop_mean:.6f}" if f.pdop_mean is not None else "",
                                 f"{f.pdop_max:.6f}" if f.pdop_max is not None else "",
                                 f.pdop_undefined])


def compute_report(horizon: HorizonPlan, scenario: Scenario,
                   with_pdop: bool = True) -> MetricsReport:
    report = MetricsReport(scenario_name=horizon.scenario_name)
    sat_ids = scenario.satellite_ids
    all_waits = []
    util_values = []
    pdop_values = []

    for rec in horizon.fsas:
        fsa_tp = throughput(rec.superframes, rec.anchors, rec.non_anchors)
        report.throughput_total += fsa_tp
        for plan in rec.superframes:
            report.throughput_per_superframe.append(
                throughput([plan], rec.anchors, rec.non_anchors))

        stats = [waits_for(rec, s) for s in sorted(rec.non_anchors)]
        wait_avg = float(np.mean([w.avg_wait for w in stats])) if stats else 0.0
        wait_max = float(np.mean([w.max_intra for w in stats])) if stats else 0.0
        intra = max((w.max_intra for w in stats), default=0)
        cross = max((w.max_cross for w in stats), default=0)
        all_waits.extend(stats)

        utils = [utilization(p, sat_ids) for p in rec.superframes]
        util_values.extend(utils)

        rmin = None
        for plan in rec.superframes:
            counts = ranging_links(plan)
            low = min((counts.get(s, 0) for s in sat_ids), default=None)
            if low is not None:
                rmin = low if rmin is None else min(rmin, low)
        if rmin is not None:
            report.ranging_min_overall = (rmin if report.ranging_min_overall is None
                                          else min(report.ranging_min_overall, rmin))

        fsa_pdop = []
        undefined = 0
        if with_pdop:
            for plan in rec.superframes:
                for s in sat_ids:
                    value = pdop(s, plan, scenario)
                    if value is None:
                        undefined += 1
                    else:
                        fsa_pdop.append(value)
            pdop_values.extend(fsa_pdop)

        report.fsa_metrics.append(FsaMetrics(
            fsa_index=rec.fsa_index, throughput=fsa_tp,
            wait_avg_mean=wait_avg, wait_max_mean=wait_max,
            wait_max_intra=intra, wait_max_cross=cross,
            utilization_mean=float(np.mean(utils)) if utils else 0.0,
            ranging_min=rmin,
            pdop_mean=float(np.mean(fsa_pdop)) if fsa_pdop else None,
            pdop_max=float(np.max(fsa_pdop)) if fsa_pdop else None,
            pdop_undefined=undefined))

        report.unmet_runs_total += sum(rec.unmet_runs.values())
        report.solve_count += rec.solve_count
        for plan in rec.superframes:
            if plan.stats and not plan.replicated:
                report.solve_wall_time_s += plan.stats.wall_time_s

    if all_waits:
        report.wait_avg_overall = float(np.mean([w.avg_wait for w in all_waits]))
        report.wait_max_intra_overall = max(w.max_intra for w in all_waits)
        report.wait_max_cross_overall = max(w.max_cross for w in all_waits)
    if util_values:
        report.utilization_overall = float(np.mean(util_values))
    if pdop_values:
        report.pdop_mean_overall = float(np.mean(pdop_values))

    report.satisfaction_per_user = satisfaction(horizon, scenario)
    if report.satisfaction_per_user:
        report.satisfaction_overall = float(
            np.mean(list(report.satisfaction_per_user.values())))
    return report
