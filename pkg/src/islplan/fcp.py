"""Fairness-weighted per-slot matching baseline scheduler.

Reimplementation of the classic contact-fairness comparison scheduler: slot
by slot, a maximum-cardinality matching is computed on the visibility graph
with edge weights 1/(1 + prior contacts for the pair), so recently used
pairs are deprioritized and pair usage round-robins. Users participate while
their contact quota lasts and multi-terminal users are cloned into d
matching nodes. Ties are broken toward lexicographically smaller pairs via
an epsilon weight bonus small enough never to outweigh a count difference.

The baseline serves only single-slot demands; multi-slot entries are
rejected with a capability error. It enforces no ranging floor and no delay
windows - that gap is the point of the comparison.
"""

from __future__ import annotations

from collections import Counter

import networkx as nx

from .check import check_matching_plan
from .errors import CapabilityError, IslPlanError
from .plan import Contact, KIND_RANGING, KIND_SERVICE, SolverStats, SuperframePlan
from .scenario import ServiceRequest
from .service import FsaContext

_EPS = 1e-9


class FcpScheduler:
    name = "fcp"

    def __init__(self, verify: bool = True):
        self.verify = verify

    def plan_superframe(self, ctx: FsaContext, superframe: int,
                        request: ServiceRequest) -> SuperframePlan:
        for e in request.entries:
            if e.run_slots != 1:
                raise CapabilityError(
                    f"fcp scheduler serves single-slot demands only; user "
                    f"{e.user_id} asks for runs of {e.run_slots} slots")

        vm = ctx.processed
        y = vm.y
        k_slots = ctx.scenario.grid.slots_per_superframe
        sats = sorted(vm.anchors | vm.non_anchors)
        quota = {e.user_id: e.runs_remaining for e in request.entries}
        terminals = {e.user_id: e.terminal_count for e in request.entries}

        candidate_pairs = []
        for idx, a in enumerate(sats):
            for b in sats[idx + 1:]:
                if y[a, b]:
                    candidate_pairs.append((a, b))
        for u in sorted(quota):
            for s in sats:
                if y[min(s, u), max(s, u)]:
                    candidate_pairs.append((min(s, u), max(s, u)))
        candidate_pairs.sort()
        rank = {pq: i for i, pq in enumerate(candidate_pairs)}
        n_pairs = len(candidate_pairs)

        counts: Counter = Counter()
        contacts = []
        run_starts: dict = {}

        for k in range(k_slots):
            graph = nx.Graph()
            graph.add_nodes_from(sats)
            clones = {}
            for u in sorted(quota):
                live = min(terminals[u], quota[u])
                for t in range(live):
                    clones[("user", u, t)] = u
            graph.add_nodes_from(clones)

            def weight(pq):
                return 1.0 / (1.0 + counts[pq]) + _EPS * (n_pairs - rank[pq])

            for idx, a in enumerate(sats):
                for b in sats[idx + 1:]:
                    if y[a, b]:
                        graph.add_edge(a, b, weight=weight((a, b)))
            for clone, u in clones.items():
                for s in sats:
                    pq = (min(s, u), max(s, u))
                    if y[pq[0], pq[1]]:
                        graph.add_edge(s, clone, weight=weight(pq))

            matching = nx.max_weight_matching(graph, maxcardinality=True)
            edges = [(min(x, z, key=_node_key), max(x, z, key=_node_key))
                     for x, z in matching]
            edges.sort(key=lambda pq: (_node_key(pq[0]), _node_key(pq[1])))
            for a, b in edges:
                ua = clones.get(a)
                ub = clones.get(b)
                if ua is not None or ub is not None:
                    user = ua if ua is not None else ub
                    sat = b if ua is not None else a
                    pq = (min(sat, user), max(sat, user))
                    counts[pq] += 1
                    quota[user] -= 1
                    member = ctx.member_for.get((user, sat))
                    contacts.append(Contact(k, pq[0], pq[1], KIND_SERVICE, member))
                    run_starts.setdefault(user, []).append((sat, k))
                else:
                    pq = (min(a, b), max(a, b))
                    counts[pq] += 1
                    contacts.append(Contact(k, pq[0], pq[1], KIND_RANGING))

        deficits = {e.user_id: quota[e.user_id] for e in request.entries}
        ranging_pairs = sorted({(c.node_a, c.node_b) for c in contacts
                                if c.kind == KIND_RANGING})
        for runs in run_starts.values():
            runs.sort(key=lambda t: (t[1], t[0]))
        penalty = ctx.scenario.ilp.unmet_penalty
        reward = sum(1 for c in contacts if c.kind == KIND_RANGING
                     and ((c.node_a in vm.anchors) != (c.node_b in vm.anchors)))
        objective = reward - penalty * sum(deficits.values())

        plan = SuperframePlan(
            fsa_index=ctx.fsa_index, superframe=superframe, slots=k_slots,
            contacts=contacts, ranging_pairs=ranging_pairs,
            run_starts=run_starts, deficits=deficits, objective=objective,
            stats=SolverStats(status="matched", objective=objective, gap=None,
                              wall_time_s=0.0, backend=self.name))
        if self.verify:
            problems = check_matching_plan(plan, vm, request)
            if problems:
                raise IslPlanError("fcp plan failed re-check: "
                                   + "; ".join(problems[:5]))
        return plan


def _node_key(node):
    """Total order over satellite ids and user-clone tuples."""
    if isinstance(node, tuple):
        return (1, node[1], node[2])
    return (0, node, 0)


def fcp_schedule(ctx: FsaContext, request: ServiceRequest,
                 superframe: int = 0) -> SuperframePlan:
    """One-shot form of the baseline for a single superframe."""
    return FcpScheduler().plan_superframe(ctx, superframe, request)
