"""Counting active users from one superposed symbol.

Every user holding a packet inverts its channel and sends a unit symbol at
the start of the frame, so the base station observes the active count plus
complex Gaussian noise and takes the real part.  Decoding the count is a
PAM-style MAP decision: thresholds between adjacent counts shift away from
1/2 by (sigma^2/2) * log of the prior odds.
"""

from dataclasses import dataclass, field
from math import lgamma, log

import numpy as np
from scipy.special import erfc


def qfunc(x):
    """Gaussian tail probability."""
    return 0.5 * erfc(np.asarray(x) / np.sqrt(2.0))


@dataclass(frozen=True)
class NoiseModel:
    """Receiver noise at the enumeration step.

    sigma_w_sq is the total complex-noise variance for a unit per-user
    received amplitude; the real observation carries half of it.  That
    convention keeps the Gaussian likelihood, the threshold formula and the
    error probabilities mutually consistent.
    """

    snr_db: float = 10.0

    @property
    def sigma_w_sq(self) -> float:
        return 10.0 ** (-self.snr_db / 10.0)

    @property
    def real_std(self) -> float:
        return float(np.sqrt(self.sigma_w_sq / 2.0))


@dataclass
class ActivePrior:
    """Prior pmf over the number of active users, support 0..N."""

    log_pmf: np.ndarray
    n_users: int = field(default=0)

    def __post_init__(self):
        self.log_pmf = np.asarray(self.log_pmf, dtype=float)
        if self.n_users == 0:
            self.n_users = len(self.log_pmf) - 1

    @property
    def pmf(self) -> np.ndarray:
        finite = self.log_pmf[np.isfinite(self.log_pmf)]
        shift = finite.max() if finite.size else 0.0
        p = np.exp(self.log_pmf - shift)
        return p / p.sum()


def uniform_prior(n_users: int) -> ActivePrior:
    return ActivePrior(np.zeros(n_users + 1), n_users)


def iid_prior(n_users: int, rate_per_usd: float, window_usd: float) -> ActivePrior:
    """Binomial prior: each user independently turned active during the window.

    p = 1 - exp(-lambda * T) is the chance a Poisson source produced at
    least one packet over the accrual window.
    """
    if n_users < 1 or rate_per_usd < 0 or window_usd < 0:
        raise ValueError("invalid prior parameters")
    p = -np.expm1(-rate_per_usd * window_usd)
    b = np.arange(n_users + 1)
    log_c = np.array([lgamma(n_users + 1) - lgamma(k + 1) - lgamma(n_users - k + 1)
                      for k in b])
    if p <= 0.0:
        lp = np.full(n_users + 1, -np.inf)
        lp[0] = 0.0
        return ActivePrior(lp, n_users)
    if p >= 1.0:
        lp = np.full(n_users + 1, -np.inf)
        lp[-1] = 0.0
        return ActivePrior(lp, n_users)
    return ActivePrior(log_c + b * log(p) + (n_users - b) * log(1.0 - p), n_users)


def pattern_prior(n_users: int) -> ActivePrior:
    """All 2^N activity patterns equally likely, i.e. Binomial(N, 1/2) counts.

    The maximum-entropy choice when the scheduler has no rate information;
    used as the default for the single-packet campaigns.
    """
    return iid_prior(n_users, log(2.0), 1.0)


def poisson_prior(mean: float, cap: int | None = None) -> ActivePrior:
    """Truncated Poisson prior for burst arrivals over an unbounded population."""
    if mean <= 0:
        raise ValueError("mean must be positive")
    if cap is None:
        cap = int(mean + 10.0 * np.sqrt(mean) + 50.0)
    b = np.arange(cap + 1)
    lp = b * log(mean) - mean - np.array([lgamma(k + 1.0) for k in b])
    return ActivePrior(lp, cap)


@dataclass(frozen=True)
class DecisionRegions:
    """MAP decision boundaries: decide b when boundaries[b-1] <= y < boundaries[b].

    boundaries[b] = b + delta_b for b = 0..N-1, forced nondecreasing so that
    zero-probability hypotheses collapse to empty regions.
    """

    boundaries: np.ndarray
    n_users: int

    @property
    def deltas(self) -> np.ndarray:
        return self.boundaries - np.arange(self.n_users)


def decision_regions(prior: ActivePrior, noise: NoiseModel) -> DecisionRegions:
    n = prior.n_users
    lp = prior.log_pmf
    half_var = noise.sigma_w_sq / 2.0
    b = np.arange(n)
    with np.errstate(invalid="ignore"):
        ratio = lp[:-1] - lp[1:]
    deltas = 0.5 + half_var * ratio
    # ratio is +inf where the upper hypothesis has zero prior (its region
    # vanishes above) and -inf where the lower one does; the running max
    # keeps the boundary sequence monotone in both cases.
    boundaries = b + deltas
    boundaries = np.nan_to_num(boundaries, nan=np.inf, posinf=np.inf, neginf=-np.inf)
    boundaries = np.maximum.accumulate(boundaries)
    return DecisionRegions(boundaries, n)


def observe(n_active, noise: NoiseModel, rng: np.random.Generator):
    """Real part of the received superposition: count plus Gaussian noise."""
    noise_draw = rng.normal(0.0, noise.real_std, size=np.shape(n_active) or None)
    return n_active + noise_draw


def map_estimate(y, regions: DecisionRegions):
    """Count estimate for observation(s) y; clamps to 0..N outside all regions."""
    est = np.searchsorted(regions.boundaries, y, side="right")
    return int(est) if np.isscalar(y) or np.ndim(y) == 0 else est


def error_probability(b: int, regions: DecisionRegions, noise: NoiseModel) -> float:
    """P(map_estimate != b | b users active); edge counts drop the missing tail.

    Uses the boundary below b and the boundary above b, so it stays exact
    for skewed priors where adjacent thresholds differ.
    """
    if not 0 <= b <= regions.n_users:
        raise ValueError("count outside prior support")
    s = noise.real_std
    p = 0.0
    if b < regions.n_users:
        p += float(qfunc((regions.boundaries[b] - b) / s))
    if b > 0:
        p += float(qfunc((b - regions.boundaries[b - 1]) / s))
    return p
