"""Slot allocation for the count-based scheduler.

The base station only knows an estimate of how many users currently hold a
packet.  Given that count it picks the data sub-frame length that maximizes
the expected fraction of useful slots, then deals every user into a slot
along one of a small pool of pre-shared pseudo-random orderings.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

# Pool of pre-shared scheduling sequences and the seed both ends derive
# them from.  Changing either breaks transmitter/receiver agreement.
SEQUENCE_POOL_SIZE = 64
SEQUENCE_POOL_SEED = 0x5EED0F00


@dataclass(frozen=True)
class FrameSchedule:
    """One frame's user-to-slot assignment.

    slot_of_user holds a 1-based slot index per user; dt_slots is the data
    sub-frame length (max entry), and overhead_usd the fixed signalling cost
    paid before the data slots.
    """

    slot_of_user: np.ndarray
    dt_slots: int
    permutation_index: int
    overhead_usd: float

    def loads(self) -> np.ndarray:
        return np.bincount(self.slot_of_user, minlength=self.dt_slots + 1)[1:]


def slot_loads(n_users: int, dt_slots: int) -> np.ndarray:
    """Balanced per-slot user counts: ceil(N/L) for the first N mod L slots."""
    if n_users < 1 or dt_slots < 1:
        raise ValueError("need n_users >= 1 and dt_slots >= 1")
    base, extra = divmod(n_users, dt_slots)
    loads = np.full(dt_slots, base, dtype=np.int64)
    loads[:extra] += 1
    return loads


def success_probability(n_users: int, n_active: int, load: int) -> float:
    """Probability that a slot holding `load` users sees exactly one active.

    Activity patterns are uniform over the C(N, nu) subsets, so the count
    is load * C(N-load, nu-1) / C(N, nu), with out-of-range binomials = 0.
    """
    if n_active <= 0 or load <= 0:
        return 0.0
    if n_active > n_users or load > n_users:
        return 0.0
    rest = n_users - load
    if not 0 <= n_active - 1 <= rest:
        return 0.0
    return load * comb(rest, n_active - 1) / comb(n_users, n_active)


def efficiency(n_users: int, n_active: int, dt_slots: int) -> float:
    """Expected successful-slot fraction under the balanced assignment."""
    loads = slot_loads(n_users, dt_slots)
    return float(
        sum(success_probability(n_users, n_active, int(u)) for u in loads) / dt_slots
    )


def _efficiency_numerator(n_users: int, n_active: int, dt_slots: int) -> int:
    """Integer T with efficiency = T / (C(N, nu) * dt_slots)."""
    total = 0
    for u in slot_loads(n_users, dt_slots):
        u = int(u)
        rest = n_users - u
        if 0 <= n_active - 1 <= rest:
            total += u * comb(rest, n_active - 1)
    return total


@lru_cache(maxsize=None)
def optimal_dt_slots(n_users: int, n_active: int) -> int:
    """Data sub-frame length maximizing `efficiency` for this active count.

    Full scan over 1..N in exact integer arithmetic; the objective is not
    reliably unimodal in the integer argument, exact ties do occur, and the
    table is built once per population size anyway.  Ties break toward the
    shorter frame.
    """
    if n_active < 1:
        raise ValueError("need at least one active user")
    n_active = min(n_active, n_users)
    best_l, best_num = 1, _efficiency_numerator(n_users, n_active, 1)
    for l in range(2, n_users + 1):
        num = _efficiency_numerator(n_users, n_active, l)
        # eta(l) > eta(best_l)  <=>  num * best_l > best_num * l
        if num * best_l > best_num * l:
            best_l, best_num = l, num
    return best_l


def optimal_L2_finite(n_users: int, n_active: int) -> int:
    """Alias matching the operation naming used elsewhere in the project."""
    return optimal_dt_slots(n_users, n_active)


def asymptotic_efficiency(n_active: int, dt_slots: int) -> float:
    """Large-population efficiency (nu/L) * (1 - 1/L)^(nu-1)."""
    if dt_slots < 1:
        raise ValueError("dt_slots must be >= 1")
    if dt_slots == 1:
        return 1.0 if n_active == 1 else 0.0
    return (n_active / dt_slots) * (1.0 - 1.0 / dt_slots) ** (n_active - 1)


def optimal_L2_asymptotic(n_active: int) -> int:
    """In the large-population limit the best slot count equals the active count."""
    if n_active < 1:
        raise ValueError("need at least one active user")
    return n_active


def dt_table(n_users: int, max_active: int | None = None) -> list[tuple[int, int, float]]:
    """(active count, best length, efficiency at the optimum) rows for inspection."""
    top = n_users if max_active is None else min(max_active, n_users)
    rows = []
    for nu in range(1, top + 1):
        l = optimal_dt_slots(n_users, nu)
        rows.append((nu, l, efficiency(n_users, nu, l)))
    return rows


def dump_dt_table(path, n_users: int, max_active: int | None = None) -> None:
    rows = dt_table(n_users, max_active)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("n_active,dt_slots,efficiency\n")
        for nu, l, eta in rows:
            fh.write(f"{nu},{l},{eta:.12f}\n")


class PermutationPool:
    """The J shared user orderings both link ends derive from a fixed seed."""

    def __init__(self, n_users: int, pool_size: int = SEQUENCE_POOL_SIZE,
                 seed: int = SEQUENCE_POOL_SEED):
        rng = np.random.Generator(np.random.Philox(seed))
        self.n_users = n_users
        self.permutations = [rng.permutation(n_users) for _ in range(pool_size)]

    def __len__(self) -> int:
        return len(self.permutations)


def build_schedule(n_users: int, estimated_active: int, pool: PermutationPool,
                   rng: np.random.Generator, mode: str = "finite",
                   overhead_usd: float = 3.0) -> FrameSchedule:
    """Assign every user a slot for one frame.

    A zero estimate produces an empty schedule (no data sub-frame; the
    signalling cost is still paid).  Otherwise the data length comes from
    the finite-population table or the large-population rule, and users are
    dealt round-robin along a pool ordering picked uniformly, which yields
    exactly the balanced loads of `slot_loads`.
    """
    if estimated_active <= 0:
        return FrameSchedule(np.zeros(n_users, dtype=np.int64), 0, -1, overhead_usd)
    estimated_active = min(estimated_active, n_users) if mode == "finite" else estimated_active
    if mode == "finite":
        dt = optimal_dt_slots(n_users, estimated_active)
    elif mode == "asymptotic":
        dt = optimal_L2_asymptotic(estimated_active)
    else:
        raise ValueError(f"unknown schedule mode {mode!r}")
    idx = int(rng.integers(len(pool)))
    perm = pool.permutations[idx]
    slot_of_user = np.empty(n_users, dtype=np.int64)
    # position i in the ordering -> slot (i mod dt) + 1
    slot_of_user[perm] = (np.arange(n_users) % dt) + 1
    return FrameSchedule(slot_of_user, dt, idx, overhead_usd)
