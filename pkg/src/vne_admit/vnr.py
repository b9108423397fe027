"""Virtual network requests: templates, random arrivals and lifetimes.

A request template fixes the task/link topology and resource requirements;
an arriving instance adds a lifetime (time steps) and an integer priority.
One instance arrives per environment step.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class VnrLink:
    src: int            # task index
    dst: int            # task index
    rate_required: float  # bits/s


@dataclass
class VnrTemplate:
    """A request topology: ordered tasks with compute needs, links with rates."""

    template_id: int
    task_requirements: list  # c_req per task, compute units
    links: list              # list of VnrLink

    def __post_init__(self):
        n = len(self.task_requirements)
        if n == 0:
            raise ValueError("template needs at least one task")
        if any(c <= 0 for c in self.task_requirements):
            raise ValueError("task requirements must be > 0")
        for link in self.links:
            if not (0 <= link.src < n and 0 <= link.dst < n) or link.src == link.dst:
                raise ValueError(f"link {link} references invalid tasks")
            if link.rate_required <= 0:
                raise ValueError("link rates must be > 0")
        self._check_dag()

    def _check_dag(self):
        adj = {b: [] for b in range(self.task_count)}
        indeg = {b: 0 for b in range(self.task_count)}
        for link in self.links:
            adj[link.src].append(link.dst)
            indeg[link.dst] += 1
        queue = [b for b in range(self.task_count) if indeg[b] == 0]
        order = []
        while queue:
            b = queue.pop(0)
            order.append(b)
            for nxt in adj[b]:
                indeg[nxt] -= 1
                if indeg[nxt] == 0:
                    queue.append(nxt)
        if len(order) != self.task_count:
            raise ValueError("template link graph must be a DAG")
        self._topo_pos = {b: k for k, b in enumerate(order)}

    @property
    def task_count(self):
        return len(self.task_requirements)

    @property
    def total_capacity(self):
        return float(sum(self.task_requirements))

    def topological_link_order(self):
        """Link indices ordered by source-task topological position.

        Ties (parallel links from one stage) keep declaration order.
        """
        return sorted(range(len(self.links)),
                      key=lambda k: (self._topo_pos[self.links[k].src], k))


def chain_template(template_id=1, task_requirement=3.0, link_rate=2e6, tasks=3):
    """The default service chain: `tasks` processing stages in a line."""
    return VnrTemplate(
        template_id=template_id,
        task_requirements=[float(task_requirement)] * tasks,
        links=[VnrLink(b, b + 1, float(link_rate)) for b in range(tasks - 1)],
    )


@dataclass(frozen=True)
class VnrInstance:
    """A live request: template, remaining lifetime and priority."""

    template_id: int
    delta: int         # remaining lifetime, time steps
    priority: int
    arrival_step: int = 0


@dataclass
class VnrGenConfig:
    """Arrival distribution: uniform lifetimes, priorities and template weights."""

    delta_min: int = 2
    delta_max: int = 30
    lambda_min: int = 1
    lambda_max: int = 10
    templates: list = None
    weights: list = None

    def __post_init__(self):
        if self.templates is None:
            self.templates = [chain_template()]
        if self.weights is None:
            self.weights = [1.0] * len(self.templates)
        if not (1 <= self.delta_min <= self.delta_max):
            raise ValueError("need 1 <= delta_min <= delta_max")
        if self.lambda_min > self.lambda_max:
            raise ValueError("need lambda_min <= lambda_max")
        if len(self.weights) != len(self.templates) or not self.templates:
            raise ValueError("one weight per template, at least one template")
        if any(w < 0 for w in self.weights) or sum(self.weights) <= 0:
            raise ValueError("weights must be non-negative and not all zero")
        ids = [t.template_id for t in self.templates]
        if len(set(ids)) != len(ids):
            raise ValueError("template ids must be unique")

    def template_by_id(self, template_id):
        for t in self.templates:
            if t.template_id == template_id:
                return t
        raise KeyError(f"unknown template id {template_id}")


def generate(config, rng, arrival_step=0):
    """Draw one arriving request from ``config`` using ``rng`` only."""
    probs = np.asarray(config.weights, dtype=float)
    probs = probs / probs.sum()
    idx = int(rng.choice(len(config.templates), p=probs))
    delta = int(rng.integers(config.delta_min, config.delta_max + 1))
    lam = int(rng.integers(config.lambda_min, config.lambda_max + 1))
    return VnrInstance(template_id=config.templates[idx].template_id,
                       delta=delta, priority=lam, arrival_step=arrival_step)


def tick(instance):
    """One time step of lifetime: delta decremented by exactly 1.

    Calling this on an already-expired instance is a lifecycle bug.
    """
    if instance.delta < 1:
        raise ValueError("tick() called on an expired request (delta == 0)")
    return replace(instance, delta=instance.delta - 1)
