"""First-fit embedding heuristic, independent constraint validator and state.

The heuristic places tasks on random capacity-feasible nodes, routes each
virtual link along a hop-count shortest path, then packs the hops into TDMA
slots first-fit: a hop goes to the lowest-indexed occupied slot where it
keeps half-duplex and every co-slot rate requirement satisfied, otherwise
it opens the lowest-indexed empty slot. Failure at any stage is a normal
Infeasible outcome, not an error.

The validator re-checks a finished embedding from scratch (placement,
capacity, joint-interference rates, half-duplex, route continuity and the
hop/schedule bijection) without reusing any construction decisions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .net import SlotLoad, Transmission, max_rate
from .vnr import tick

# residual-capacity comparisons tolerate accumulated float dust
_CAP_EPS = 1e-9


@dataclass(frozen=True)
class ScheduleEntry:
    slot: int
    sender: int
    receiver: int
    link_index: int


@dataclass
class Embedding:
    """Task placement, per-link routes and the slot schedule for one request."""

    template_id: int
    placement: list   # task index -> node index
    routes: list      # link index -> node path [a, ..., b]; [] when co-located
    schedule: list    # list of ScheduleEntry, one per hop of every route


@dataclass
class ActiveVnr:
    instance: object
    embedding: Embedding


@dataclass
class Violation:
    code: str      # placement | capacity | rate | half_duplex | continuity | schedule
    message: str

    def __str__(self):
        return f"[{self.code}] {self.message}"


class NetworkState:
    """Mutable embedding state: active requests, residuals and slot loads."""

    def __init__(self, network, gen_config):
        self.network = network
        self.gen_config = gen_config
        self.residual = network.capacity.copy()
        self.slots = [SlotLoad() for _ in range(network.slots_per_step)]
        self.active = {}          # uid -> ActiveVnr, insertion = admission order
        self._next_uid = 1
        self._zero_rates = network.zero_interference_rates()
        self._route_graphs = {}   # rate_required -> nx.Graph over capable pairs

    def template(self, template_id):
        return self.gen_config.template_by_id(template_id)

    def active_count(self):
        return len(self.active)

    def slots_in_use(self):
        return sum(1 for s in self.slots if len(s) > 0)

    def route_graph(self, rate_required):
        """Hop graph: an edge per node pair whose solo rate carries the link."""
        g = self._route_graphs.get(rate_required)
        if g is None:
            p = self.network.node_count
            g = nx.Graph()
            g.add_nodes_from(range(p))
            for i in range(p):
                for j in range(i + 1, p):
                    # solo rate may differ per direction (per-node noise floors)
                    if min(self._zero_rates[i, j], self._zero_rates[j, i]) >= rate_required:
                        g.add_edge(i, j)
            self._route_graphs[rate_required] = g
        return g

    def shortest_route(self, src, dst, rate_required):
        try:
            return nx.shortest_path(self.route_graph(rate_required), src, dst)
        except nx.NetworkXNoPath:
            return None


def _slot_accepts(network, members, candidate):
    """True if ``candidate`` can join ``members`` in one slot.

    Checks half-duplex (no sender twice, no node both roles) and that every
    transmission, old and new, still meets its rate under joint interference.
    """
    senders = [tx.sender for tx in members]
    receivers = [tx.receiver for tx in members]
    if candidate.sender in senders or candidate.sender in receivers:
        return False
    if candidate.receiver in senders or candidate.receiver == candidate.sender:
        return False
    joint = members + [candidate]
    all_senders = senders + [candidate.sender]
    for tx in joint:
        others = [s for s in all_senders if s != tx.sender]
        if max_rate(tx.sender, tx.receiver, others, network) < tx.rate_required:
            return False
    return True


def try_embed(state, instance, rng, retry_budget=10):
    """Attempt a first-fit embedding of ``instance`` against ``state``.

    Returns an Embedding that validates cleanly, or None when the heuristic
    finds no placement, route or slot assignment. ``state`` is not mutated.
    """
    template = state.template(instance.template_id)
    network = state.network
    p = network.node_count

    # task placement: uniform node draws, re-drawn on capacity misses
    residual = state.residual.copy()
    placement = []
    for c_req in template.task_requirements:
        node = None
        for _ in range(retry_budget):
            cand = int(rng.integers(p))
            if residual[cand] + _CAP_EPS >= c_req:
                node = cand
                break
        if node is None:
            return None
        residual[node] -= c_req
        placement.append(node)

    # hop-count shortest routes between placed endpoints
    routes = []
    for link in template.links:
        a, b = placement[link.src], placement[link.dst]
        if a == b:
            routes.append([])
            continue
        path = state.shortest_route(a, b, link.rate_required)
        if path is None:
            return None
        routes.append(path)

    # first-fit slot packing, links in topological order, hops in path order
    tentative = [list(s.transmissions) for s in state.slots]
    schedule = []
    for link_index in template.topological_link_order():
        rate = template.links[link_index].rate_required
        path = routes[link_index]
        for sender, receiver in zip(path, path[1:]):
            candidate = Transmission(sender, receiver, -1, link_index, rate)
            slot = None
            for t, members in enumerate(tentative):
                if members and _slot_accepts(network, members, candidate):
                    slot = t
                    break
            if slot is None:
                empty = next((t for t, m in enumerate(tentative) if not m), None)
                if empty is None:
                    return None
                slot = empty
            tentative[slot].append(candidate)
            schedule.append(ScheduleEntry(slot, sender, receiver, link_index))

    return Embedding(template_id=instance.template_id, placement=placement,
                     routes=routes, schedule=schedule)


def validate(state, embedding):
    """Check an embedding against ``state`` as if it were about to be added.

    Verifies, independently of how the embedding was constructed: one node
    per task, node capacities over all active requests plus this one, the
    rate constraint of every transmission under joint co-slot interference,
    half-duplex per slot, route continuity and that route hops and schedule
    entries match one-to-one. Returns every violation found.
    """
    violations = []
    network = state.network
    p = network.node_count
    t_slots = network.slots_per_step
    template = state.template(embedding.template_id)

    # placement: exactly one valid node per task
    if len(embedding.placement) != template.task_count:
        violations.append(Violation(
            "placement",
            f"{template.task_count} tasks but {len(embedding.placement)} placements"))
    for b, node in enumerate(embedding.placement):
        if not (0 <= node < p):
            violations.append(Violation("placement", f"task {b} on invalid node {node}"))

    # capacity: recompute usage from scratch over active + candidate
    usage = np.zeros(p)
    for av in state.active.values():
        tpl = state.template(av.embedding.template_id)
        for b, node in enumerate(av.embedding.placement):
            usage[node] += tpl.task_requirements[b]
    for b, node in enumerate(embedding.placement):
        if 0 <= node < p and b < template.task_count:
            usage[node] += template.task_requirements[b]
    for node in range(p):
        if usage[node] > network.capacity[node] + _CAP_EPS:
            violations.append(Violation(
                "capacity",
                f"node {node} loaded {usage[node]:g} > capacity {network.capacity[node]:g}"))

    # route continuity against placement
    if len(embedding.routes) != len(template.links):
        violations.append(Violation(
            "continuity",
            f"{len(template.links)} links but {len(embedding.routes)} routes"))
    expected_hops = []  # (link_index, sender, receiver)
    for k, link in enumerate(template.links):
        if k >= len(embedding.routes):
            break
        route = embedding.routes[k]
        src = embedding.placement[link.src] if link.src < len(embedding.placement) else None
        dst = embedding.placement[link.dst] if link.dst < len(embedding.placement) else None
        if src is not None and dst is not None and src == dst:
            if route:
                violations.append(Violation(
                    "continuity", f"link {k} is co-located but has a route"))
            continue
        if not route:
            violations.append(Violation("continuity", f"link {k} has no route"))
            continue
        if route[0] != src or route[-1] != dst:
            violations.append(Violation(
                "continuity",
                f"link {k} route {route} does not join placements {src}->{dst}"))
        if any(a == b for a, b in zip(route, route[1:])):
            violations.append(Violation("continuity", f"link {k} route repeats a node hop"))
        if any(not (0 <= n < p) for n in route):
            violations.append(Violation("continuity", f"link {k} route leaves the network"))
        expected_hops.extend((k, a, b) for a, b in zip(route, route[1:]))

    # hop/schedule bijection
    scheduled = [(e.link_index, e.sender, e.receiver) for e in embedding.schedule]
    missing = list(expected_hops)
    extra = []
    for hop in scheduled:
        if hop in missing:
            missing.remove(hop)
        else:
            extra.append(hop)
    for hop in missing:
        violations.append(Violation("schedule", f"route hop {hop} never scheduled"))
    for hop in extra:
        violations.append(Violation("schedule", f"scheduled hop {hop} not on any route"))
    for e in embedding.schedule:
        if not (0 <= e.slot < t_slots):
            violations.append(Violation("schedule", f"slot {e.slot} outside frame of {t_slots}"))

    # per-slot half-duplex and joint-interference rates
    rate_of = {k: link.rate_required for k, link in enumerate(template.links)}
    for t in range(t_slots):
        members = list(state.slots[t].transmissions)
        members += [Transmission(e.sender, e.receiver, -1, e.link_index,
                                 rate_of.get(e.link_index, float("inf")))
                    for e in embedding.schedule if e.slot == t]
        if not members:
            continue
        senders = [tx.sender for tx in members]
        receivers = [tx.receiver for tx in members]
        dup = {s for s in senders if senders.count(s) > 1}
        for s in sorted(dup):
            violations.append(Violation(
                "half_duplex", f"slot {t}: node {s} sends more than once"))
        both = sorted(set(senders) & set(receivers))
        for n in both:
            violations.append(Violation(
                "half_duplex", f"slot {t}: node {n} both sends and receives"))
        for tx in members:
            others = [s for s in senders if s != tx.sender]
            if tx.sender == tx.receiver or tx.sender in others:
                continue  # already reported as half-duplex
            r = max_rate(tx.sender, tx.receiver, others, network)
            if r < tx.rate_required:
                violations.append(Violation(
                    "rate",
                    f"slot {t}: {tx.sender}->{tx.receiver} gets {r:.3g} < "
                    f"required {tx.rate_required:.3g} bit/s"))
    return violations


def commit(state, instance, embedding):
    """Add a validated embedding to the state. Returns the request uid."""
    template = state.template(embedding.template_id)
    uid = state._next_uid
    state._next_uid += 1
    for b, node in enumerate(embedding.placement):
        state.residual[node] -= template.task_requirements[b]
        if state.residual[node] < -_CAP_EPS:
            raise RuntimeError("commit drove a node over capacity; embedding was invalid")
    for e in embedding.schedule:
        state.slots[e.slot].transmissions.append(Transmission(
            e.sender, e.receiver, uid, e.link_index,
            template.links[e.link_index].rate_required))
    state.active[uid] = ActiveVnr(instance=instance, embedding=embedding)
    return uid


def release(state, uid):
    """Remove a committed request, returning its resources and slots."""
    av = state.active.pop(uid)
    template = state.template(av.embedding.template_id)
    for b, node in enumerate(av.embedding.placement):
        state.residual[node] += template.task_requirements[b]
    for slot in state.slots:
        slot.transmissions = [tx for tx in slot.transmissions if tx.vnr_uid != uid]
    return av


def advance_time(state):
    """Tick every active request; release the expired ones.

    Returns the list of (uid, instance) that expired this step.
    """
    expired = []
    for uid in list(state.active.keys()):
        av = state.active[uid]
        new_instance = tick(av.instance)
        if new_instance.delta == 0:
            expired.append((uid, new_instance))
        else:
            state.active[uid] = ActiveVnr(instance=new_instance, embedding=av.embedding)
    for uid, _ in expired:
        release(state, uid)
    return expired


_ORACLE_MAX_NODES = 4
_ORACLE_MAX_SLOTS = 2
_ORACLE_MAX_TASKS = 2
_ORACLE_MAX_LINKS = 1


def oracle_feasible(state, instance):
    """Exhaustive feasibility check for tiny instances (test oracle).

    Enumerates every placement, every simple route and every slot
    assignment, accepting iff the independent validator accepts. Guards
    against anything beyond toy size; enumeration is exponential.
    """
    network = state.network
    template = state.template(instance.template_id)
    if (network.node_count > _ORACLE_MAX_NODES
            or network.slots_per_step > _ORACLE_MAX_SLOTS
            or template.task_count > _ORACLE_MAX_TASKS
            or len(template.links) > _ORACLE_MAX_LINKS):
        raise ValueError("oracle_feasible only handles tiny instances")

    p = network.node_count
    t_slots = network.slots_per_step
    complete = nx.complete_graph(p)

    for placement in itertools.product(range(p), repeat=template.task_count):
        emb_base = Embedding(template_id=instance.template_id,
                             placement=list(placement), routes=[], schedule=[])
        if not template.links:
            if not validate(state, emb_base):
                return True
            continue
        link = template.links[0]
        a, b = placement[link.src], placement[link.dst]
        if a == b:
            emb = Embedding(instance.template_id, list(placement), [[]], [])
            if not validate(state, emb):
                return True
            continue
        for path in nx.all_simple_paths(complete, a, b):
            hops = list(zip(path, path[1:]))
            for assignment in itertools.product(range(t_slots), repeat=len(hops)):
                schedule = [ScheduleEntry(slot, s, r, 0)
                            for slot, (s, r) in zip(assignment, hops)]
                emb = Embedding(instance.template_id, list(placement),
                                [list(path)], schedule)
                if not validate(state, emb):
                    return True
    return False
