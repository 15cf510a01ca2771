"""Packet generation and per-user FIFO buffers.

Three activation regimes share the same Poisson machinery: single-packet
buffers where fresh data replaces stale data, unbounded queues that hold
everything for retransmission, and burst arrivals where a random handful of
otherwise-silent users light up at one instant.
"""

from collections import deque
from dataclasses import dataclass, field

import numpy as np

IID = "iid"
CORRELATED = "correlated"
BURSTY = "bursty"


@dataclass
class Packet:
    owner: int
    generated_at: float
    delivered_at: float | None = None


@dataclass
class UserState:
    """FIFO buffer plus identity; capacity None means unbounded."""

    index: int
    capacity: int | None = 1
    buffer: deque = field(default_factory=deque)

    def push(self, packet: Packet) -> Packet | None:
        """Append a packet; returns the evicted packet when the buffer was full."""
        evicted = None
        if self.capacity is not None and len(self.buffer) >= self.capacity:
            evicted = self.buffer.popleft()  # oldest goes first
        self.buffer.append(packet)
        return evicted

    def head(self) -> Packet | None:
        return self.buffer[0] if self.buffer else None

    def pop_for_transmission(self) -> Packet:
        if not self.buffer:
            raise RuntimeError("pop_for_transmission on an empty buffer")
        return self.buffer.popleft()

    @property
    def is_active(self) -> bool:
        return bool(self.buffer)


@dataclass
class TrafficModel:
    """Arrival law configuration.

    rate_per_usd applies to the Poisson regimes; burst_mean is the expected
    packet count per burst and burst_gap_usd the spacing between bursts
    (absent = single-burst studies).
    """

    variant: str = IID
    rate_per_usd: float = 0.0
    burst_mean: float = 0.0
    burst_gap_usd: float | None = None

    def __post_init__(self):
        if self.variant not in (IID, CORRELATED, BURSTY):
            raise ValueError(f"unknown traffic variant {self.variant!r}")
        if self.rate_per_usd < 0 or self.burst_mean < 0:
            raise ValueError("rates must be nonnegative")

    def buffer_capacity(self) -> int | None:
        # unbounded queues only in the retransmitting correlated regime
        return None if self.variant == CORRELATED else 1

    def retransmits(self) -> bool:
        return self.variant in (CORRELATED, BURSTY)


def make_users(n_users: int, model: TrafficModel) -> list[UserState]:
    cap = model.buffer_capacity()
    return [UserState(i, cap) for i in range(n_users)]


def generate_arrivals(model: TrafficModel, users: list[UserState],
                      window: tuple[float, float], rng: np.random.Generator) -> int:
    """Draw this window's packets into the buffers; returns replacement drops.

    Poisson regimes place each user's Poisson(rate * duration) packets
    uniformly in the window (the conditional law of a Poisson process);
    arrivals are applied in time order so replacement always evicts the
    oldest packet present.  The bursty regime produces nothing here: bursts
    are injected by `spawn_burst` at burst instants.
    """
    t0, t1 = window
    if t1 < t0:
        raise ValueError("window must have nonnegative duration")
    duration = t1 - t0
    if duration == 0.0 or model.variant == BURSTY or model.rate_per_usd == 0.0:
        return 0
    dropped = 0
    counts = rng.poisson(model.rate_per_usd * duration, size=len(users))
    for user, k in zip(users, counts):
        if k == 0:
            continue
        times = t0 + duration * np.sort(rng.random(k))
        for t in times:
            if user.push(Packet(user.index, float(t))) is not None:
                dropped += 1
    return dropped


def spawn_burst(model: TrafficModel, at_time: float,
                rng: np.random.Generator) -> list[UserState]:
    """Create the burst's single-packet users.

    The population is arbitrarily large, so each burst instantiates fresh
    users (one packet each) rather than indexing into a preallocated array;
    they are retired once their packet is delivered.
    """
    if model.variant != BURSTY:
        raise ValueError("spawn_burst is only defined for bursty traffic")
    k = int(rng.poisson(model.burst_mean))
    users = []
    for i in range(k):
        u = UserState(i, capacity=1)
        u.push(Packet(i, at_time))
        users.append(u)
    return users


def active_set(users: list[UserState], now: float | None = None) -> set[int]:
    """Indices of users with a transmittable head packet.

    Without a time reference this is simply "buffer nonempty"; given one, a
    user counts only if its oldest packet existed by that instant, which is
    the frame-start snapshot rule used by the frame protocols.
    """
    if now is None:
        return {u.index for u in users if u.is_active}
    return {u.index for u in users
            if u.is_active and u.buffer[0].generated_at <= now}


def pop_for_transmission(user: UserState) -> Packet:
    return user.pop_for_transmission()
