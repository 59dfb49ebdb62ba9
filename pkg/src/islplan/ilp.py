"""Per-superframe 0-1 program for contact selection.

Decision variables (binary unless noted):

    x[pair, k]   unordered node pair established in slot k. Symmetry is
                 structural (one variable per pair) and invisible pairs get
                 no variable at all.
    l[pair]      satellite-satellite pair exchanged at least one contact in
                 the superframe; big-M linked to the pair's x-sum, so the
                 per-satellite sum counts distinct ranging partners.
    r[u, j, k]   user u runs a full-length contact with satellite j starting
                 at slot k. The linking rows make r equal to "x is on for all
                 run_slots slots from k": a longer contiguous stretch would
                 switch on two adjacent r's and trip the spacing row, so runs
                 longer than requested are infeasible and shorter ones earn
                 no service credit.
    p[u]         integer deficit: requested runs not delivered (0..c).

Row families (the independent re-checker and the infeasibility prober refer
to these names):

    sat-degree      satellite joins <= 1 contact per slot
    user-degree     user joins <= d contacts per slot
    ranging-link    l <= sum_k x <= M l for each satellite pair
    min-ranging     every satellite ranges with >= min_ranging_partners
                    distinct satellites
    delay-window    each non-anchor satellite reaches an anchor in every
                    window of delay_window_slots consecutive slots
    run-window      r[u,j,k] <= x[u,j,k+dk] for each slot of the run
    run-complete    sum of the run's x minus r <= run_slots - 1
    run-spacing     r[u,j,k] + r[u,j,k+1] <= 1
    service-count   sum_{j,k} r[u,j,k] + p[u] = c for each user

Objective, maximized: total non-anchor-to-anchor slot contacts minus
unmet_penalty per deficit unit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ScenarioError
from .plan import Contact, KIND_RANGING, KIND_SERVICE, SuperframePlan
from .scenario import IlpParams, ServiceRequest
from .visibility import VisibilityMatrix


@dataclass
class IlpModel:
    """Assembled constraint matrix plus the semantic index maps."""

    k_slots: int
    params: IlpParams
    sat_ids: tuple
    anchors: frozenset
    non_anchors: frozenset
    pairs: tuple                    # (i, j) with i < j; sat-sat then sat-user
    sat_pair_count: int             # pairs[:sat_pair_count] are sat-sat
    entries: tuple                  # RequestEntry rows in request order
    n_vars: int = 0
    objective: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lower: np.ndarray = field(default_factory=lambda: np.zeros(0))
    upper: np.ndarray = field(default_factory=lambda: np.zeros(0))
    row_cols: list = field(default_factory=list)
    row_vals: list = field(default_factory=list)
    row_lower: list = field(default_factory=list)
    row_upper: list = field(default_factory=list)
    row_family: list = field(default_factory=list)
    var_names: list = field(default_factory=list)
    pair_ordinal: dict = field(default_factory=dict)
    r_map: dict = field(default_factory=dict)     # (user, sat, k) -> var
    p_map: dict = field(default_factory=dict)     # user -> var

    # -- variable indexing --------------------------------------------------

    def x_var(self, i: int, j: int, k: int) -> int:
        pid = self.pair_ordinal[(min(i, j), max(i, j))]
        return pid * self.k_slots + k

    def has_pair(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.pair_ordinal

    def l_var(self, i: int, j: int) -> int:
        pid = self.pair_ordinal[(min(i, j), max(i, j))]
        if pid >= self.sat_pair_count:
            raise ScenarioError(f"pair ({i}, {j}) carries no ranging indicator")
        return len(self.pairs) * self.k_slots + pid

    @property
    def n_rows(self) -> int:
        return len(self.row_cols)

    def families(self) -> set:
        return set(self.row_family)

    # -- row assembly -------------------------------------------------------

    def _add_row(self, cols, vals, lo, hi, family: str) -> None:
        self.row_cols.append(list(cols))
        self.row_vals.append([float(v) for v in vals])
        self.row_lower.append(float(lo))
        self.row_upper.append(float(hi))
        self.row_family.append(family)

    def without_families(self, dropped) -> "IlpModel":
        """Copy of the model with whole row families removed (for probing)."""
        dropped = set(dropped)
        keep = [idx for idx, fam in enumerate(self.row_family) if fam not in dropped]
        clone = IlpModel(
            k_slots=self.k_slots, params=self.params, sat_ids=self.sat_ids,
            anchors=self.anchors, non_anchors=self.non_anchors,
            pairs=self.pairs, sat_pair_count=self.sat_pair_count,
            entries=self.entries, n_vars=self.n_vars,
            objective=self.objective, lower=self.lower, upper=self.upper,
            row_cols=[self.row_cols[i] for i in keep],
            row_vals=[self.row_vals[i] for i in keep],
            row_lower=[self.row_lower[i] for i in keep],
            row_upper=[self.row_upper[i] for i in keep],
            row_family=[self.row_family[i] for i in keep],
            var_names=self.var_names, pair_ordinal=self.pair_ordinal,
            r_map=self.r_map, p_map=self.p_map)
        return clone


def build_model(vm: VisibilityMatrix, request: ServiceRequest,
                params: IlpParams, k_slots: int,
                serve_only: bool = False) -> IlpModel:
    """Assemble the superframe program from a preprocessed visibility matrix.

    vm must already have user-user entries zeroed and members folded. Users
    absent from the request get no variables: serving them earns nothing, so
    eliding them shrinks the model without changing the optimum.

    serve_only zeroes the contact reward, leaving only the deficit penalty:
    the solver then merely proves whether the demand fits, which is much
    faster and reaches the same served/unserved verdict because the penalty
    outweighs any achievable contact reward.
    """
    if params.big_m <= k_slots:
        raise ScenarioError(f"big_m ({params.big_m}) must exceed the slot "
                            f"count ({k_slots})")
    y = vm.y
    sats = tuple(sorted(vm.anchors | vm.non_anchors))
    users = [e.user_id for e in request.entries]
    if len(set(users)) != len(users):
        raise ScenarioError("duplicate users in superframe request")

    pairs: list = []
    for a_idx, i in enumerate(sats):
        for j in sats[a_idx + 1:]:
            if y[i, j]:
                pairs.append((min(i, j), max(i, j)))
    sat_pair_count = len(pairs)
    for u in users:
        for j in sats:
            if y[min(j, u), max(j, u)]:
                pairs.append((min(j, u), max(j, u)))

    model = IlpModel(k_slots=k_slots, params=params, sat_ids=sats,
                     anchors=vm.anchors, non_anchors=vm.non_anchors,
                     pairs=tuple(pairs), sat_pair_count=sat_pair_count,
                     entries=tuple(request.entries))
    model.pair_ordinal = {pq: pid for pid, pq in enumerate(pairs)}

    k = k_slots
    n_x = len(pairs) * k
    n_l = sat_pair_count
    r_triples = []                       # (entry, pair_id, start_slot)
    for e in request.entries:
        b = e.run_slots
        if b > k:
            raise ScenarioError(f"user {e.user_id}: run of {b} slots cannot "
                                f"fit a {k}-slot superframe")
        for j in sats:
            pq = (min(j, e.user_id), max(j, e.user_id))
            if pq in model.pair_ordinal:
                for start in range(k - b + 1):
                    r_triples.append((e, model.pair_ordinal[pq], j, start))
    r_offset = n_x + n_l
    p_offset = r_offset + len(r_triples)
    n_vars = p_offset + len(request.entries)

    model.n_vars = n_vars
    model.lower = np.zeros(n_vars)
    model.upper = np.ones(n_vars)
    model.objective = np.zeros(n_vars)

    names = []
    for (i, j) in pairs:
        names.extend(f"x_{i}_{j}_{kk}" for kk in range(k))
    names.extend(f"l_{i}_{j}" for (i, j) in pairs[:sat_pair_count])
    for idx, (e, pid, j, start) in enumerate(r_triples):
        names.append(f"r_{e.user_id}_{j}_{start}")
        model.r_map[(e.user_id, j, start)] = r_offset + idx
    for idx, e in enumerate(request.entries):
        names.append(f"p_{e.user_id}")
        var = p_offset + idx
        model.p_map[e.user_id] = var
        model.upper[var] = e.runs_remaining
        model.objective[var] = -params.unmet_penalty
    model.var_names = names

    # objective: +1 per anchor/non-anchor satellite contact, plus a tiny
    # density bonus on every satellite pair so ties resolve toward full
    # terminal usage instead of the backend's arbitrary pick
    if not serve_only:
        for pid in range(sat_pair_count):
            i, j = pairs[pid]
            reward = params.density_bonus
            if (i in vm.anchors) != (j in vm.anchors):
                reward += 1.0
            model.objective[pid * k:(pid + 1) * k] = reward

    big = float(params.big_m)
    inf = np.inf

    # sat-degree: each satellite in <= 1 pair per slot
    touching: dict = {s: [] for s in sats}
    for pid, (i, j) in enumerate(pairs):
        if i in touching:
            touching[i].append(pid)
        if j in touching:
            touching[j].append(pid)
    for s in sats:
        for kk in range(k):
            cols = [pid * k + kk for pid in touching[s]]
            if cols:
                model._add_row(cols, [1.0] * len(cols), -inf, 1.0, "sat-degree")

    # user-degree: each requested user in <= d pairs per slot
    for e in request.entries:
        upairs = [pid for pid, pq in enumerate(pairs) if e.user_id in pq]
        for kk in range(k):
            cols = [pid * k + kk for pid in upairs]
            if cols:
                model._add_row(cols, [1.0] * len(cols), -inf,
                               float(e.terminal_count), "user-degree")

    # ranging-link: l <= sum_k x <= M l per satellite pair
    for pid in range(sat_pair_count):
        xcols = list(range(pid * k, (pid + 1) * k))
        lcol = n_x + pid
        model._add_row(xcols + [lcol], [1.0] * k + [-big], -inf, 0.0,
                       "ranging-link")
        model._add_row(xcols + [lcol], [1.0] * k + [-1.0], 0.0, inf,
                       "ranging-link")

    # min-ranging: distinct satellite partners per satellite
    if params.min_ranging_partners > 0:
        for s in sats:
            cols = [n_x + pid for pid in range(sat_pair_count)
                    if s in pairs[pid]]
            model._add_row(cols, [1.0] * len(cols),
                           float(params.min_ranging_partners), inf,
                           "min-ranging")

    # delay-window: anchor contact inside every sliding window
    t_m = params.delay_window_slots
    for s in sorted(vm.non_anchors):
        apairs = [pid for pid in range(sat_pair_count)
                  if s in pairs[pid]
                  and (pairs[pid][0] if pairs[pid][1] == s else pairs[pid][1])
                  in vm.anchors]
        for w in range(k - t_m + 1):
            cols = [pid * k + (w + dk) for pid in apairs for dk in range(t_m)]
            model._add_row(cols, [1.0] * len(cols), 1.0, inf, "delay-window")

    # run linking, spacing, and service accounting
    for idx, (e, pid, j, start) in enumerate(r_triples):
        rcol = r_offset + idx
        b = e.run_slots
        xcols = [pid * k + start + dk for dk in range(b)]
        for xc in xcols:
            model._add_row([rcol, xc], [1.0, -1.0], -inf, 0.0, "run-window")
        model._add_row(xcols + [rcol], [1.0] * b + [-1.0], -inf, b - 1.0,
                       "run-complete")
    for (e, pid, j, start) in r_triples:
        nxt = model.r_map.get((e.user_id, j, start + 1))
        if nxt is not None:
            model._add_row([model.r_map[(e.user_id, j, start)], nxt],
                           [1.0, 1.0], -inf, 1.0, "run-spacing")
    for e in request.entries:
        cols = [var for (u, j, s), var in model.r_map.items() if u == e.user_id]
        cols.append(model.p_map[e.user_id])
        model._add_row(cols, [1.0] * len(cols), float(e.runs_remaining),
                       float(e.runs_remaining), "service-count")

    return model


def structural_problems(model: IlpModel) -> list:
    """Cheap certificates of infeasibility, checked before any solve."""
    out = []
    lmin = model.params.min_ranging_partners
    if lmin > 0:
        for s in model.sat_ids:
            partners = sum(1 for pid in range(model.sat_pair_count)
                           if s in model.pairs[pid])
            if partners < lmin:
                out.append(f"min-ranging: satellite {s} sees only {partners} "
                           f"satellites, fewer than the required {lmin}")
    if model.k_slots >= model.params.delay_window_slots:
        for s in sorted(model.non_anchors):
            has_anchor = any(
                s in model.pairs[pid]
                and (model.pairs[pid][0] if model.pairs[pid][1] == s
                     else model.pairs[pid][1]) in model.anchors
                for pid in range(model.sat_pair_count))
            if not has_anchor:
                out.append(f"delay-window: non-anchor satellite {s} sees no "
                           f"anchor satellite")
    return out


def extract_plan(values: np.ndarray, model: IlpModel, fsa_index: int,
                 superframe: int, member_for: dict | None = None,
                 stats=None) -> SuperframePlan:
    """Typed plan from a raw assignment vector (rounded at 0.5)."""
    if values is None or len(values) != model.n_vars:
        raise ScenarioError("assignment vector does not match the model")
    on = values > 0.5
    k = model.k_slots
    member_for = member_for or {}
    sat_set = set(model.sat_ids)

    contacts = []
    for pid, (i, j) in enumerate(model.pairs):
        ranging = pid < model.sat_pair_count
        for kk in range(k):
            if on[pid * k + kk]:
                member = None
                if not ranging:
                    user = j if j not in sat_set else i
                    sat = i if user == j else j
                    member = member_for.get((user, sat))
                contacts.append(Contact(kk, i, j,
                                        KIND_RANGING if ranging else KIND_SERVICE,
                                        member))

    ranging_pairs = [model.pairs[pid] for pid in range(model.sat_pair_count)
                     if on[len(model.pairs) * k + pid]]
    run_starts: dict = {}
    for (u, j, start), var in model.r_map.items():
        if on[var]:
            run_starts.setdefault(u, []).append((j, start))
    for runs in run_starts.values():
        runs.sort(key=lambda t: (t[1], t[0]))
    deficits = {u: int(round(values[var])) for u, var in model.p_map.items()}

    # report the undecorated objective: anchor reach minus deficit penalty
    reach = sum(1 for c in contacts if c.kind == KIND_RANGING
                and ((c.node_a in model.anchors) != (c.node_b in model.anchors)))
    objective = reach - model.params.unmet_penalty * sum(deficits.values())
    return SuperframePlan(fsa_index=fsa_index, superframe=superframe, slots=k,
                          contacts=contacts, ranging_pairs=ranging_pairs,
                          run_starts=run_starts, deficits=deficits,
                          objective=objective, stats=stats)
