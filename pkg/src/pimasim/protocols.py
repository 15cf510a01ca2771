"""Frame-level state machines for the four access schemes.

All schemes share the collision channel: a slot delivers its packet exactly
when one user transmits in it, and any overlap destroys every packet
involved.  Durations are tracked in usd (symbol durations); a data slot is
``slot_usd`` symbols long.

Scenario semantics
------------------
iid          unit buffers, no retransmissions: collided packets are lost
             (and counted as drops, together with buffer replacements).
correlated   unbounded FIFO queues, collided packets stay at the head and
             retry next frame; nothing is ever dropped.
bursty       unit buffers over an effectively infinite population: a burst
             of single-packet users retries until everyone got through.
"""

import math
from dataclasses import dataclass

import numpy as np

from .enumeration import (DecisionRegions, NoiseModel, decision_regions,
                          iid_prior, pattern_prior, poisson_prior, uniform_prior)
from .metrics import MetricsLedger
from .scheduling import PermutationPool, build_schedule, optimal_dt_slots
from .traffic import Packet, UserState

IDLE = "idle"
SUCCESS = "success"
COLLISION = "collision"

_E_MINUS_2_INV = 1.0 / (math.e - 2.0)


@dataclass(frozen=True)
class SlotOutcome:
    slot_index: int
    transmitters: tuple
    result: str
    owner: int | None = None


@dataclass
class ProtocolConfig:
    """Shared knob set; each simulator reads the fields it understands."""

    variant: str
    scenario: str = "iid"
    n_users: int = 50
    slot_usd: float = 10.0
    snr_db: float = 10.0
    overhead_usd: float = 3.0
    preamble_pool: int = 50
    miss_probability: float = 0.1
    sequence_pool: int = 64
    prior: str = "pattern"
    prior_window_usd: float = 500.0
    dt_rule: str = "finite"

    def __post_init__(self):
        if self.slot_usd <= 0:
            raise ValueError("slot_usd must be positive")
        if not 0.0 <= self.miss_probability <= 1.0:
            raise ValueError("miss_probability must be a probability")
        if self.variant not in ("pima", "tdma", "saloha", "cra2"):
            raise ValueError(f"unknown protocol {self.variant!r}")
        if self.scenario not in ("iid", "correlated", "bursty"):
            raise ValueError(f"unknown scenario {self.scenario!r}")


class ArrivalStream:
    """Merged Poisson arrival process over the population, drawn lazily."""

    def __init__(self, total_rate_usd: float, n_users: int, rng: np.random.Generator):
        self.rate = total_rate_usd
        self.n_users = n_users
        self.rng = rng
        self._next = math.inf if total_rate_usd <= 0 else rng.exponential(1.0 / total_rate_usd)

    def peek(self) -> float:
        return self._next

    def pop_until(self, t_end: float) -> list:
        """All (time, owner) arrivals strictly before t_end, in time order."""
        out = []
        while self._next < t_end:
            out.append((self._next, int(self.rng.integers(self.n_users))))
            self._next += self.rng.exponential(1.0 / self.rate)
        return out


def _resolve_slots(transmitters_by_slot: dict) -> list:
    """Apply the collision rule slot by slot."""
    outcomes = []
    for slot in sorted(transmitters_by_slot):
        txers = transmitters_by_slot[slot]
        if len(txers) == 1:
            outcomes.append(SlotOutcome(slot, (txers[0][0],), SUCCESS, txers[0][0]))
        else:
            outcomes.append(SlotOutcome(slot, tuple(u for u, _ in txers), COLLISION))
    return outcomes


class PimaSimulator:
    """Count-then-schedule access.

    Each frame opens with the enumeration symbol: users holding a packet at
    the frame boundary superpose unit amplitudes, the base station decodes
    an active-count estimate and broadcasts a schedule sized for it.  Users
    whose packets arrived after the boundary sit the frame out.
    """

    def __init__(self, cfg: ProtocolConfig, rate_per_user_usd: float,
                 rng: np.random.Generator, ledger: MetricsLedger | None = None):
        self.cfg = cfg
        self.rng = rng
        self.ledger = ledger if ledger is not None else MetricsLedger()
        self.noise = NoiseModel(cfg.snr_db)
        n = cfg.n_users
        cap = None if cfg.scenario == "correlated" else 1
        self.users = [UserState(i, cap) for i in range(n)]
        self.busy: set[int] = set()
        self.stream = ArrivalStream(rate_per_user_usd * n, n, rng)
        self.pool = PermutationPool(n, cfg.sequence_pool)
        self.rate_per_user = rate_per_user_usd
        self.now = 0.0
        self.frames_run = 0
        self.prev_duration = cfg.overhead_usd
        self._adaptive = cfg.prior == "adaptive"
        self._regions_cache: dict = {}
        if not self._adaptive:
            self.regions = self._build_regions(None)
        # frame length by estimate, for the batched idle path
        self._dt_of = np.zeros(n + 1, dtype=np.int64)
        for nu in range(1, n + 1):
            self._dt_of[nu] = (optimal_dt_slots(n, nu) if cfg.dt_rule == "finite" else nu)

    def _build_regions(self, window_usd: float | None) -> DecisionRegions:
        cfg = self.cfg
        if cfg.prior == "pattern":
            prior = pattern_prior(cfg.n_users)
        elif cfg.prior == "uniform":
            prior = uniform_prior(cfg.n_users)
        elif cfg.prior == "window":
            prior = iid_prior(cfg.n_users, self.rate_per_user, cfg.prior_window_usd)
        elif cfg.prior == "adaptive":
            prior = iid_prior(cfg.n_users, self.rate_per_user, window_usd or cfg.overhead_usd)
        else:
            raise ValueError(f"unknown prior {cfg.prior!r}")
        return decision_regions(prior, self.noise)

    def _push(self, owner: int, t: float) -> None:
        user = self.users[owner]
        self.ledger.record_generated()
        if user.push(Packet(owner, t)) is not None:
            self.ledger.record_dropped()
        self.busy.add(owner)

    def run_frame(self):
        """One frame: enumerate, schedule, transmit, retire packets."""
        cfg = self.cfg
        rb = self.now
        if self._adaptive:
            # frame durations repeat, so cache the threshold sets they induce
            key = round(self.prev_duration, 6)
            regions = self._regions_cache.get(key)
            if regions is None:
                regions = self._regions_cache[key] = self._build_regions(self.prev_duration)
        else:
            regions = self.regions
        eligible = [i for i in sorted(self.busy)
                    if self.users[i].buffer[0].generated_at <= rb]
        nu = len(eligible)
        y = nu + self.rng.normal(0.0, self.noise.real_std)
        nu_hat = int(np.searchsorted(regions.boundaries, y, side="right"))

        if nu_hat == 0:
            duration = cfg.overhead_usd
            schedule = None
        else:
            schedule = build_schedule(cfg.n_users, nu_hat, self.pool, self.rng,
                                      mode=cfg.dt_rule, overhead_usd=cfg.overhead_usd)
            duration = cfg.overhead_usd + schedule.dt_slots * cfg.slot_usd
        frame_end = rb + duration

        arrivals = self.stream.pop_until(frame_end)
        by_owner: dict[int, list] = {}
        for t, owner in arrivals:
            by_owner.setdefault(owner, []).append(t)

        # Commit transmissions.  A unit-buffer user loses its pending packet
        # (replacement) if a fresh one lands before its slot opens; queued
        # users are immune to that.
        tx_by_slot: dict[int, list] = {}
        committed: dict[int, Packet] = {}
        if schedule is not None:
            for i in eligible:
                slot = int(schedule.slot_of_user[i])
                slot_open = rb + cfg.overhead_usd + (slot - 1) * cfg.slot_usd
                if cfg.scenario != "correlated":
                    mine = by_owner.get(i)
                    if mine and mine[0] < slot_open:
                        continue  # pending packet will be replaced pre-slot
                committed[i] = self.users[i].pop_for_transmission()
                tx_by_slot.setdefault(slot, []).append((i, committed[i]))

        outcomes = _resolve_slots(tx_by_slot)
        successes = 0
        for oc in outcomes:
            slot_close = rb + cfg.overhead_usd + oc.slot_index * cfg.slot_usd
            if oc.result == SUCCESS:
                pkt = committed[oc.owner]
                pkt.delivered_at = slot_close
                self.ledger.record_delivery(slot_close - pkt.generated_at)
                successes += 1
            else:
                for i in oc.transmitters:
                    if cfg.scenario == "correlated":
                        self.users[i].buffer.appendleft(committed[i])
                    else:
                        self.ledger.record_dropped()

        for t, owner in arrivals:
            self._push(owner, t)
        self.busy = {i for i in self.busy if self.users[i].buffer}

        self.ledger.record_frame(successes, duration / cfg.slot_usd, nu_hat)
        self.now = frame_end
        self.prev_duration = duration
        self.frames_run += 1
        return outcomes, duration

    def _advance_idle(self, frame_budget: int) -> None:
        """Batch empty frames (nobody buffered) until an arrival lands.

        False alarms of the count estimator still occur and stretch those
        frames; they are logged as zero-efficiency samples.
        """
        cfg = self.cfg
        boundaries = self.regions.boundaries
        std = self.noise.real_std
        while frame_budget > 0 and not self.busy:
            target = self.stream.peek()
            chunk = min(frame_budget, 4096)
            ys = self.rng.normal(0.0, std, chunk)
            nhs = np.searchsorted(boundaries, ys, side="right")
            durs = cfg.overhead_usd + self._dt_of[np.minimum(nhs, cfg.n_users)] * cfg.slot_usd
            ends = self.now + np.cumsum(durs)
            past = int(np.searchsorted(ends, target, side="left"))
            used = min(past + 1, chunk)
            self.ledger.bulk_empty_frames(durs[:used] / cfg.slot_usd, nhs[:used])
            self.now = float(ends[used - 1])
            self.frames_run += used
            frame_budget -= used
            for t, owner in self.stream.pop_until(self.now):
                self._push(owner, t)

    def run_frames(self, n_frames: int) -> None:
        end = self.frames_run + n_frames
        while self.frames_run < end:
            if not self.busy and not self._adaptive:
                self._advance_idle(end - self.frames_run)
                if self.frames_run >= end:
                    break
            self.run_frame()


class TdmaSimulator:
    """Fixed round-robin frames: slot n of every frame belongs to user n.

    A packet rides the first own slot that opens after its arrival; with
    unit buffers a newer packet replaces an older one still waiting.  The
    whole run is computed per user with vectorized arithmetic since users
    never interact.
    """

    def __init__(self, cfg: ProtocolConfig, rate_per_user_usd: float,
                 rng: np.random.Generator, ledger: MetricsLedger | None = None):
        self.cfg = cfg
        self.rng = rng
        self.ledger = ledger if ledger is not None else MetricsLedger()
        self.rate = rate_per_user_usd
        self.clock = 0.0

    def run(self, n_frames: int, warmup_frames: int = 0) -> None:
        cfg = self.cfg
        n, ts = cfg.n_users, cfg.slot_usd
        frame_usd = n * ts
        horizon = n_frames * frame_usd
        per_frame = np.zeros(n_frames, dtype=np.int64)
        for user in range(n):
            phase = user * ts
            k = int(self.rng.poisson(self.rate * horizon))
            self.ledger.record_generated(k)
            if k == 0:
                continue
            t = np.sort(self.rng.random(k)) * horizon
            # first own slot strictly after arrival
            want = np.floor((t - phase) / frame_usd).astype(np.int64) + 1
            want[t < phase] = 0
            if cfg.scenario == "correlated":
                serve = np.arange(k) + np.maximum.accumulate(want - np.arange(k))
                ok = serve < n_frames
                lat = serve[ok] * frame_usd + phase + ts - t[ok]
                frames_hit = serve[ok]
            else:
                nxt = np.empty(k)
                nxt[:-1] = t[1:]
                nxt[-1] = np.inf
                slot_start = want * frame_usd + phase
                delivered = (nxt > slot_start) & (want < n_frames)
                replaced = nxt <= slot_start
                self.ledger.record_dropped(int(replaced.sum()))
                lat = slot_start[delivered] + ts - t[delivered]
                frames_hit = want[delivered]
            self.ledger.bulk_deliveries(lat[frames_hit >= warmup_frames])
            np.add.at(per_frame, frames_hit, 1)
        for f in range(warmup_frames, n_frames):
            self.ledger.record_frame(int(per_frame[f]), float(n), int(per_frame[f]))
        self.clock += horizon


class SalohaIidSimulator:
    """Unstabilized slotted access for the single-packet regime.

    Every packet goes out in the slot after its arrival; collided packets
    are lost.  No feedback state, so the run vectorizes globally.
    """

    def __init__(self, cfg: ProtocolConfig, rate_per_user_usd: float,
                 rng: np.random.Generator, ledger: MetricsLedger | None = None):
        self.cfg = cfg
        self.rng = rng
        self.ledger = ledger if ledger is not None else MetricsLedger()
        self.rate = rate_per_user_usd
        self.clock = 0.0

    def run(self, n_slots: int) -> None:
        cfg = self.cfg
        ts = cfg.slot_usd
        horizon = n_slots * ts
        k = int(self.rng.poisson(self.rate * cfg.n_users * horizon))
        self.ledger.record_generated(k)
        self.clock += horizon
        if k == 0:
            return
        t = np.sort(self.rng.random(k)) * horizon
        owner = self.rng.integers(cfg.n_users, size=k)
        window = np.floor(t / ts).astype(np.int64)
        # replacement: only a user's last packet of each window transmits
        key = owner * (n_slots + 2) + window
        order = np.argsort(key, kind="stable")
        key_sorted = key[order]
        is_last = np.empty(k, dtype=bool)
        is_last[:-1] = key_sorted[:-1] != key_sorted[1:]
        is_last[-1] = True
        self.ledger.record_dropped(int(k - is_last.sum()))
        cand = order[is_last]
        tx_slot = window[cand] + 1
        in_range = tx_slot < n_slots  # packets past the horizon stay buffered
        cand, tx_slot = cand[in_range], tx_slot[in_range]
        per_slot = np.bincount(tx_slot, minlength=n_slots)
        alone = per_slot[tx_slot] == 1
        # contention access reports the queueing delay: time until the
        # packet's transmission begins in its self-selected slot
        self.ledger.bulk_deliveries(tx_slot[alone] * ts - t[cand[alone]])
        self.ledger.record_dropped(int((~alone).sum()))


class SalohaStabilizedSimulator:
    """Pseudo-Bayesian stabilized slotted access for queued traffic.

    Every user with a due packet transmits with probability 1/G, where G
    tracks the backlog: collisions inflate it by N*theta + 1/(e-2), and
    slots that end idle or successful relax it toward the fresh-arrival
    floor N*theta.  Treating idle like success keeps G from ratcheting up
    during quiet periods, which would otherwise freeze low-rate traffic out.
    """

    def __init__(self, cfg: ProtocolConfig, rate_per_user_usd: float,
                 rng: np.random.Generator, ledger: MetricsLedger | None = None):
        self.cfg = cfg
        self.rng = rng
        self.ledger = ledger if ledger is not None else MetricsLedger()
        self.rate = rate_per_user_usd
        self.stream = ArrivalStream(rate_per_user_usd * cfg.n_users, cfg.n_users, rng)
        self.queues: dict[int, list] = {}
        self.backlog_estimate = 0.0
        self.slot = 0

    @property
    def tx_probability(self) -> float:
        g = self.backlog_estimate
        return 1.0 if g <= 1.0 else 1.0 / g

    def _floor(self) -> float:
        theta = -math.expm1(-self.rate * self.cfg.slot_usd)
        return self.cfg.n_users * theta

    def _relax(self, k_slots: int = 1) -> None:
        floor = self._floor()
        self.backlog_estimate = max(floor, self.backlog_estimate + k_slots * (floor - 1.0))

    def step(self) -> SlotOutcome:
        ts = self.cfg.slot_usd
        t0 = self.slot * ts
        for t, owner in self.stream.pop_until(t0):
            self.queues.setdefault(owner, []).append(Packet(owner, t))
            self.ledger.record_generated()
        ready = [u for u, q in self.queues.items() if q[0].generated_at <= t0]
        alpha = self.tx_probability
        if alpha >= 1.0:
            txers = ready
        else:
            txers = [u for u in ready if self.rng.random() < alpha]
        if len(txers) == 1:
            u = txers[0]
            pkt = self.queues[u].pop(0)
            if not self.queues[u]:
                del self.queues[u]
            # queueing delay: the slot itself was won, service starts here
            self.ledger.record_delivery(self.slot * ts - pkt.generated_at)
            self._relax()
            out = SlotOutcome(self.slot, (u,), SUCCESS, u)
        elif txers:
            self.backlog_estimate += self._floor() + _E_MINUS_2_INV
            out = SlotOutcome(self.slot, tuple(txers), COLLISION)
        else:
            self._relax()
            out = SlotOutcome(self.slot, (), IDLE)
        self.slot += 1
        return out

    def run(self, n_slots: int) -> None:
        end = self.slot + n_slots
        ts = self.cfg.slot_usd
        while self.slot < end:
            if not self.queues:
                nxt = self.stream.peek()
                if math.isinf(nxt):
                    jump = end - self.slot
                else:
                    jump = min(end - self.slot,
                               max(1, int((nxt - self.slot * ts) // ts)))
                if jump > 1:
                    self._relax(jump - 1)
                    self.slot += jump - 1
            self.step()


class Cra2Simulator:
    """Two-step preamble access.

    Actives each pick one of the M_p orthogonal preambles (their dedicated
    one when the pool matches the population); the base station misses a
    transmitted preamble with fixed probability, grants one slot per
    detected preamble, and users who shared a preamble collide in their
    shared slot.  Undetected users keep their packet for the next frame.
    """

    def __init__(self, cfg: ProtocolConfig, rate_per_user_usd: float,
                 rng: np.random.Generator, ledger: MetricsLedger | None = None):
        if cfg.preamble_pool < 1:
            raise ValueError("preamble pool must be nonempty")
        self.cfg = cfg
        self.rng = rng
        self.ledger = ledger if ledger is not None else MetricsLedger()
        cap = None if cfg.scenario == "correlated" else 1
        self.users = [UserState(i, cap) for i in range(cfg.n_users)]
        self.busy: set[int] = set()
        self.stream = ArrivalStream(rate_per_user_usd * cfg.n_users, cfg.n_users, rng)
        self.now = 0.0
        self.frames_run = 0

    def _push(self, owner: int, t: float) -> None:
        user = self.users[owner]
        self.ledger.record_generated()
        if user.push(Packet(owner, t)) is not None:
            self.ledger.record_dropped()
        self.busy.add(owner)

    def run_frame(self):
        cfg = self.cfg
        mp, ts = cfg.preamble_pool, cfg.slot_usd
        start = self.now
        eligible = [i for i in sorted(self.busy)
                    if self.users[i].buffer[0].generated_at <= start]

        if not eligible:
            duration = float(mp)
            self.now += duration
            self.frames_run += 1
            for t, owner in self.stream.pop_until(self.now):
                self._push(owner, t)
            self.ledger.record_frame(0, duration / ts, 0)
            return [], duration

        if mp >= cfg.n_users:
            choice = {i: i for i in eligible}  # dedicated preambles
        else:
            draws = self.rng.integers(mp, size=len(eligible))
            choice = {i: int(p) for i, p in zip(eligible, draws)}
        users_of: dict[int, list] = {}
        for i, p in choice.items():
            users_of.setdefault(p, []).append(i)
        transmitted = sorted(users_of)
        detected = [p for p in transmitted
                    if self.rng.random() >= cfg.miss_probability]
        n_det = len(detected)
        duration = mp + n_det + n_det * ts
        frame_end = start + duration

        arrivals = self.stream.pop_until(frame_end)
        by_owner: dict[int, list] = {}
        for t, owner in arrivals:
            by_owner.setdefault(owner, []).append(t)

        tx_by_slot: dict[int, list] = {}
        committed: dict[int, Packet] = {}
        for slot, p in enumerate(detected, start=1):
            slot_open = start + mp + n_det + (slot - 1) * ts
            for i in users_of[p]:
                if cfg.scenario != "correlated":
                    mine = by_owner.get(i)
                    if mine and mine[0] < slot_open:
                        continue  # replaced before the grant opened
                committed[i] = self.users[i].pop_for_transmission()
                tx_by_slot.setdefault(slot, []).append((i, committed[i]))

        outcomes = _resolve_slots(tx_by_slot)
        successes = 0
        for oc in outcomes:
            slot_close = start + mp + n_det + oc.slot_index * ts
            if oc.result == SUCCESS:
                pkt = committed[oc.owner]
                pkt.delivered_at = slot_close
                self.ledger.record_delivery(slot_close - pkt.generated_at)
                successes += 1
            else:
                for i in oc.transmitters:
                    if cfg.scenario == "correlated":
                        self.users[i].buffer.appendleft(committed[i])
                    else:
                        self.ledger.record_dropped()

        for t, owner in arrivals:
            self._push(owner, t)
        self.busy = {i for i in self.busy if self.users[i].buffer}
        self.ledger.record_frame(successes, duration / ts, n_det)
        self.now = frame_end
        self.frames_run += 1
        return outcomes, duration

    def run_frames(self, n_frames: int) -> None:
        end = self.frames_run + n_frames
        mp = float(self.cfg.preamble_pool)
        while self.frames_run < end:
            if not self.busy:
                nxt = self.stream.peek()
                if math.isinf(nxt):
                    jump = end - self.frames_run
                else:
                    jump = min(end - self.frames_run,
                               max(1, int((nxt - self.now) // mp)))
                if jump > 1:
                    # empty frames cost exactly the preamble window
                    self.ledger.bulk_empty_frames(
                        np.full(jump - 1, mp / self.cfg.slot_usd), np.zeros(jump - 1))
                    self.now += (jump - 1) * mp
                    self.frames_run += jump - 1
                    for t, owner in self.stream.pop_until(self.now):
                        self._push(owner, t)
                    continue
            self.run_frame()


def run_pima_burst(burst_mean: float, rng: np.random.Generator,
                   noise: NoiseModel | None = None,
                   regions: DecisionRegions | None = None,
                   slot_usd: float = 10.0, overhead_usd: float = 3.0) -> float | None:
    """Clearance time of one burst under the large-population schedule rule.

    The data length equals the count estimate, and with the population
    effectively infinite the balanced dealing makes every surviving user's
    slot an independent uniform draw.  Returns the end of the frame that
    delivers the last packet, or None for an empty burst.
    """
    noise = noise or NoiseModel()
    if regions is None:
        regions = decision_regions(poisson_prior(burst_mean), noise)
    remaining = int(rng.poisson(burst_mean))
    if remaining == 0:
        return None
    top = regions.n_users
    t = 0.0
    while remaining > 0:
        y = remaining + rng.normal(0.0, noise.real_std)
        nu_hat = int(np.searchsorted(regions.boundaries, y, side="right"))
        if nu_hat == 0:
            t += overhead_usd
            continue
        dt = min(nu_hat, top)
        slots = rng.integers(1, dt + 1, size=remaining)
        counts = np.bincount(slots, minlength=dt + 1)
        remaining -= int((counts == 1).sum())
        t += overhead_usd + dt * slot_usd
    return t


def run_cra2_burst(burst_mean: float, preamble_pool: int, rng: np.random.Generator,
                   miss_probability: float = 0.1, slot_usd: float = 10.0) -> float | None:
    """Clearance time of one burst under preamble-based access."""
    remaining = int(rng.poisson(burst_mean))
    if remaining == 0:
        return None
    t = 0.0
    while remaining > 0:
        pre = rng.integers(preamble_pool, size=remaining)
        upre, counts = np.unique(pre, return_counts=True)
        det = rng.random(len(upre)) >= miss_probability
        n_det = int(det.sum())
        remaining -= int(((counts == 1) & det).sum())
        t += preamble_pool + n_det + n_det * slot_usd
    return t


def pima_run_frame(sim: PimaSimulator):
    return sim.run_frame()


def tdma_run_frame(sim: TdmaSimulator, n_frames: int = 1):
    return sim.run(n_frames)


def saloha_step(sim: SalohaStabilizedSimulator):
    return sim.step()


def cra2_run_frame(sim: Cra2Simulator):
    return sim.run_frame()
