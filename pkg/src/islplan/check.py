"""Independent re-verification of emitted plans.

Everything here recomputes constraint satisfaction from the typed plan
(contact list, ranging pairs, run starts, deficits) and the visibility
matrix - never from the solver's matrices - so a model-assembly bug and a
checker bug would have to coincide to let a bad plan through.

check_superframe() covers the full ILP row-family set; the FCP baseline is
checked against the structural subset plus its own quota rule via
check_matching_plan().
"""

from __future__ import annotations

from collections import Counter, defaultdict

from .plan import KIND_RANGING, KIND_SERVICE, SuperframePlan
from .scenario import IlpParams, ServiceRequest
from .visibility import VisibilityMatrix


def _pair_runs(slots_on: list) -> list:
    """Maximal runs of consecutive slot indices; [(start, length), ...]."""
    runs = []
    for s in sorted(slots_on):
        if runs and s == runs[-1][0] + runs[-1][1]:
            runs[-1] = (runs[-1][0], runs[-1][1] + 1)
        else:
            runs.append((s, 1))
    return runs


def check_structure(plan: SuperframePlan, vm: VisibilityMatrix,
                    request: ServiceRequest) -> list:
    """Contacts are well-formed, visible, and correctly tagged."""
    out = []
    sats = vm.anchors | vm.non_anchors
    requested = set(request.user_ids())
    seen = set()
    for c in plan.contacts:
        key = (c.slot, c.node_a, c.node_b)
        if key in seen:
            out.append(f"duplicate contact {key}")
        seen.add(key)
        if not 0 <= c.slot < plan.slots:
            out.append(f"contact slot {c.slot} outside [0, {plan.slots})")
        if not vm.y[c.node_a, c.node_b]:
            out.append(f"contact on invisible pair ({c.node_a}, {c.node_b})")
        both_sat = c.node_a in sats and c.node_b in sats
        if both_sat and c.kind != KIND_RANGING:
            out.append(f"satellite pair ({c.node_a}, {c.node_b}) tagged {c.kind}")
        if not both_sat:
            if c.kind != KIND_SERVICE:
                out.append(f"mixed pair ({c.node_a}, {c.node_b}) tagged {c.kind}")
            user = c.node_a if c.node_a not in sats else c.node_b
            if user not in requested:
                out.append(f"contact to unrequested user {user}")
    return out


def check_degrees(plan: SuperframePlan, vm: VisibilityMatrix,
                  request: ServiceRequest) -> list:
    """Per-slot terminal budgets: 1 per satellite, d per user."""
    out = []
    sats = vm.anchors | vm.non_anchors
    degree = Counter()
    for c in plan.contacts:
        degree[(c.node_a, c.slot)] += 1
        degree[(c.node_b, c.slot)] += 1
    for (node, slot), d in degree.items():
        if node in sats and d > 1:
            out.append(f"satellite {node} holds {d} contacts in slot {slot}")
    for e in request.entries:
        for slot in range(plan.slots):
            d = degree.get((e.user_id, slot), 0)
            if d > e.terminal_count:
                out.append(f"user {e.user_id} holds {d} contacts in slot {slot}, "
                           f"terminal budget {e.terminal_count}")
    return out


def check_ranging(plan: SuperframePlan, vm: VisibilityMatrix,
                  params: IlpParams) -> list:
    """Ranging indicators match contacts; distinct-partner floors hold."""
    out = []
    sats = vm.anchors | vm.non_anchors
    with_contact = {(c.node_a, c.node_b) for c in plan.contacts
                    if c.kind == KIND_RANGING}
    flagged = set(map(tuple, plan.ranging_pairs))
    for pq in flagged - with_contact:
        out.append(f"ranging indicator set for contact-free pair {pq}")
    for pq in with_contact - flagged:
        out.append(f"ranging indicator missing for active pair {pq}")
    partners = defaultdict(set)
    for a, b in with_contact:
        partners[a].add(b)
        partners[b].add(a)
    for s in sorted(sats):
        if len(partners[s]) < params.min_ranging_partners:
            out.append(f"satellite {s} ranges with {len(partners[s])} partners, "
                       f"floor is {params.min_ranging_partners}")
    return out


def check_delay_windows(plan: SuperframePlan, vm: VisibilityMatrix,
                        params: IlpParams) -> list:
    """Every sliding window holds an anchor contact for each non-anchor."""
    out = []
    t_m = params.delay_window_slots
    anchor_slots = defaultdict(set)
    for c in plan.contacts:
        if c.kind != KIND_RANGING:
            continue
        if c.node_a in vm.non_anchors and c.node_b in vm.anchors:
            anchor_slots[c.node_a].add(c.slot)
        if c.node_b in vm.non_anchors and c.node_a in vm.anchors:
            anchor_slots[c.node_b].add(c.slot)
    for s in sorted(vm.non_anchors):
        slots = anchor_slots[s]
        for w in range(plan.slots - t_m + 1):
            if not any(w + dk in slots for dk in range(t_m)):
                out.append(f"non-anchor {s} has no anchor contact in slots "
                           f"[{w}, {w + t_m - 1}]")
                break
    return out


def check_runs(plan: SuperframePlan, request: ServiceRequest) -> list:
    """Run bookkeeping: starts cover real contacts, spacing, completeness."""
    out = []
    by_pair = defaultdict(list)
    for c in plan.contacts:
        if c.kind == KIND_SERVICE:
            by_pair[(c.node_a, c.node_b)].append(c.slot)

    for e in request.entries:
        b = e.run_slots
        starts = plan.run_starts.get(e.user_id, [])
        start_by_sat = defaultdict(list)
        for sat, k in starts:
            start_by_sat[sat].append(k)
        for sat, ks in start_by_sat.items():
            pq = (min(sat, e.user_id), max(sat, e.user_id))
            slots_on = set(by_pair.get(pq, []))
            for k in ks:
                if k > plan.slots - b:
                    out.append(f"user {e.user_id}: run start {k} leaves no room "
                               f"for {b} slots")
                missing = [k + dk for dk in range(b) if k + dk not in slots_on]
                if missing:
                    out.append(f"user {e.user_id}: run at {k} with satellite "
                               f"{sat} missing contact slots {missing}")
            ks_sorted = sorted(ks)
            for k1, k2 in zip(ks_sorted, ks_sorted[1:]):
                if k2 == k1 + 1:
                    out.append(f"user {e.user_id}: adjacent run starts {k1}, "
                               f"{k2} with satellite {sat}")
        # completeness: every full-length contact stretch must carry a start,
        # and no stretch may exceed the requested length
        for (a, bb), slots_on in by_pair.items():
            if e.user_id not in (a, bb):
                continue
            sat = a if bb == e.user_id else bb
            declared = set(start_by_sat.get(sat, []))
            for start, length in _pair_runs(slots_on):
                if length > b:
                    out.append(f"user {e.user_id}: contact run of {length} "
                               f"slots with satellite {sat} exceeds b={b}")
                elif length == b and start not in declared:
                    out.append(f"user {e.user_id}: full-length run at {start} "
                               f"with satellite {sat} carries no run start")
    return out


def check_service_counts(plan: SuperframePlan, request: ServiceRequest) -> list:
    """Delivered runs plus deficit equal the requested count per user."""
    out = []
    for e in request.entries:
        runs = len(plan.run_starts.get(e.user_id, []))
        p = plan.deficits.get(e.user_id)
        if p is None:
            out.append(f"user {e.user_id}: no deficit recorded")
            continue
        if p < 0 or p > e.runs_remaining:
            out.append(f"user {e.user_id}: deficit {p} outside "
                       f"[0, {e.runs_remaining}]")
        if runs + p != e.runs_remaining:
            out.append(f"user {e.user_id}: {runs} runs + deficit {p} != "
                       f"requested {e.runs_remaining}")
    return out


def check_standard_runs(plan: SuperframePlan, request: ServiceRequest) -> list:
    """Post-strip invariant: every user contact belongs to a full run."""
    out = []
    lengths = {e.user_id: e.run_slots for e in request.entries}
    by_pair = defaultdict(list)
    for c in plan.contacts:
        if c.kind == KIND_SERVICE:
            by_pair[(c.node_a, c.node_b)].append(c.slot)
    for (a, b), slots_on in by_pair.items():
        user = a if a in lengths else b
        want = lengths.get(user)
        if want is None:
            continue
        for start, length in _pair_runs(slots_on):
            if length != want:
                out.append(f"user {user}: retained contact run at {start} has "
                           f"length {length}, expected exactly {want}")
    return out


def check_superframe(plan: SuperframePlan, vm: VisibilityMatrix,
                     request: ServiceRequest, params: IlpParams,
                     stripped: bool = False) -> list:
    """Full ILP-family re-check; empty result means the plan verifies."""
    out = []
    out += check_structure(plan, vm, request)
    out += check_degrees(plan, vm, request)
    out += check_ranging(plan, vm, params)
    out += check_delay_windows(plan, vm, params)
    out += check_runs(plan, request)
    out += check_service_counts(plan, request)
    if stripped:
        out += check_standard_runs(plan, request)
    return out


def check_matching_plan(plan: SuperframePlan, vm: VisibilityMatrix,
                        request: ServiceRequest) -> list:
    """Subset for matching-based baselines: structure and degrees only,
    plus the quota rule (never serve a user more than its slot quota)."""
    out = check_structure(plan, vm, request)
    out += check_degrees(plan, vm, request)
    served = Counter()
    for c in plan.contacts:
        if c.kind == KIND_SERVICE:
            sats = vm.anchors | vm.non_anchors
            user = c.node_a if c.node_a not in sats else c.node_b
            served[user] += 1
    for e in request.entries:
        quota = e.runs_remaining * e.run_slots
        if served[e.user_id] > quota:
            out.append(f"user {e.user_id}: served {served[e.user_id]} slots, "
                       f"quota {quota}")
    return out
