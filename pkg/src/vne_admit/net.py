"""Physical layer: node geometry, free-space attenuation and per-slot SINR rates.

All quantities are SI internally: meters, watts, hertz, bits/second.
The achievable rate of a transmission i->j sharing a TDMA slot with other
senders is

    r_max = (BW / T) * log2(1 + S_i * gamma_ij / (I_j + N0_j))

where I_j sums the received power at j from every other co-slot sender.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c as _SPEED_OF_LIGHT


@dataclass
class Node:
    """One wireless sensor node."""

    node_id: int
    position: np.ndarray  # (3,) meters
    capacity: float       # compute units available for hosted tasks
    tx_power: float       # watts
    noise_floor: float    # watts

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        if self.position.shape != (3,):
            raise ValueError(f"node {self.node_id}: position must be a 3-vector")
        if self.capacity < 0:
            raise ValueError(f"node {self.node_id}: capacity must be >= 0")
        if self.tx_power <= 0:
            raise ValueError(f"node {self.node_id}: tx_power must be > 0")
        if self.noise_floor <= 0:
            raise ValueError(f"node {self.node_id}: noise_floor must be > 0")


@dataclass
class WirelessNetwork:
    """A single collision domain of P nodes with a T-slot TDMA frame."""

    nodes: list[Node]
    bandwidth: float        # Hz, shared by all nodes
    slots_per_step: int     # T
    attenuation: np.ndarray  # (P, P), symmetric, entries in (0, 1]

    # per-node arrays derived in __post_init__, used on hot paths
    capacity: np.ndarray = field(init=False, repr=False)
    tx_power: np.ndarray = field(init=False, repr=False)
    noise_floor: np.ndarray = field(init=False, repr=False)
    positions: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        p = len(self.nodes)
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be > 0")
        if self.slots_per_step < 1:
            raise ValueError("slots_per_step must be >= 1")
        self.attenuation = np.asarray(self.attenuation, dtype=float)
        if self.attenuation.shape != (p, p):
            raise ValueError("attenuation matrix shape must be (P, P)")
        if not np.allclose(self.attenuation, self.attenuation.T):
            raise ValueError("attenuation matrix must be symmetric")
        if np.any(self.attenuation <= 0) or np.any(self.attenuation > 1):
            raise ValueError("attenuation entries must lie in (0, 1]")
        self.capacity = np.array([n.capacity for n in self.nodes], dtype=float)
        self.tx_power = np.array([n.tx_power for n in self.nodes], dtype=float)
        self.noise_floor = np.array([n.noise_floor for n in self.nodes], dtype=float)
        self.positions = np.array([n.position for n in self.nodes], dtype=float)

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def slot_bandwidth(self) -> float:
        """Bandwidth share of one TDMA slot, BW / T."""
        return self.bandwidth / self.slots_per_step

    def zero_interference_rates(self) -> np.ndarray:
        """(P, P) matrix of i->j rates when i is the only sender. Diagonal is 0."""
        snr = self.tx_power[:, None] * self.attenuation / self.noise_floor[None, :]
        rates = self.slot_bandwidth * np.log2(1.0 + snr)
        np.fill_diagonal(rates, 0.0)
        return rates


def build_attenuation(nodes, carrier_frequency, min_distance=0.1):
    """Free-space path loss gains for every node pair.

    gamma_ij = (c / (4 pi f d_ij))^2 with d_ij clamped from below by
    ``min_distance`` so co-located nodes stay finite; entries are clamped
    to at most 1.
    """
    if len(nodes) < 2:
        raise ValueError("need at least 2 nodes")
    if carrier_frequency <= 0:
        raise ValueError("carrier_frequency must be > 0")
    positions = np.array([n.position for n in nodes], dtype=float)
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    dist = np.maximum(dist, min_distance)
    gamma = (_SPEED_OF_LIGHT / (4.0 * np.pi * carrier_frequency * dist)) ** 2
    return np.minimum(gamma, 1.0)


def interference(receiver, co_slot_senders, network):
    """Total interference power (watts) at ``receiver`` from the given senders.

    ``co_slot_senders`` must not contain the receiver itself and is the set
    P^t of nodes transmitting simultaneously, excluding the sender of the
    transmission under consideration.
    """
    total = 0.0
    for p in co_slot_senders:
        if p == receiver:
            raise ValueError("receiver cannot be a co-slot sender")
        total += network.attenuation[p, receiver] * network.tx_power[p]
    return total


def max_rate(sender, receiver, co_slot_senders, network):
    """Achievable rate (bits/s) of sender->receiver given co-slot senders."""
    if sender == receiver:
        raise ValueError("sender and receiver must differ")
    if sender in co_slot_senders:
        raise ValueError("sender must not appear in co_slot_senders")
    noise = interference(receiver, co_slot_senders, network) + network.noise_floor[receiver]
    sinr = network.tx_power[sender] * network.attenuation[sender, receiver] / noise
    return network.slot_bandwidth * np.log2(1.0 + sinr)


@dataclass
class Transmission:
    """One scheduled transmission inside a TDMA slot."""

    sender: int
    receiver: int
    vnr_uid: int
    link_index: int
    rate_required: float


class SlotLoad:
    """The transmissions sharing one TDMA slot.

    Interference and achievable rates are always computed from the current
    membership, so they cannot go stale.
    """

    __slots__ = ("transmissions",)

    def __init__(self, transmissions=None):
        self.transmissions = list(transmissions) if transmissions else []

    def __len__(self):
        return len(self.transmissions)

    def senders(self):
        return [tx.sender for tx in self.transmissions]

    def receivers(self):
        return [tx.receiver for tx in self.transmissions]

    def rates(self, network):
        """(interference, r_max) for each transmission under current membership."""
        senders = self.senders()
        out = []
        for tx in self.transmissions:
            others = [s for s in senders if s != tx.sender]
            i = interference(tx.receiver, others, network)
            noise = i + network.noise_floor[tx.receiver]
            sinr = network.tx_power[tx.sender] * network.attenuation[tx.sender, tx.receiver] / noise
            out.append((i, network.slot_bandwidth * np.log2(1.0 + sinr)))
        return out
